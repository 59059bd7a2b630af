//! Bilinear-group arithmetic over BLS12-381.
//!
//! Everything above this module is written against these wrappers, so the
//! curve can be swapped by replacing this one parameter set.

mod dlog;
mod group;
mod matrix;

pub use blstrs::Scalar;
pub use dlog::{bsgs_dlog, gt_pow_u64, BsgsTable};
pub use group::{
    g2_linear_combination, hash_to_g2, pair, pairing_product, G1Elem, G2Elem, GtElem, G1_BYTES,
    G2_BYTES, GT_BYTES, HASH_TO_G2_DST,
};
pub use matrix::{inner_pairing, sample_matrix_pair, G1Vec8, G2Vec8, MatrixQ, ScalarVec8, DIM};

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Encoded size of a scalar (big-endian).
pub const SCALAR_BYTES: usize = 32;

/// Group order q of 𝔾₁, 𝔾₂ and 𝔾_T, big-endian.
const GROUP_ORDER_BE: [u8; 32] = [
    0x73, 0xed, 0xa7, 0x53, 0x29, 0x9d, 0x7d, 0x48, 0x33, 0x39, 0xd8, 0x08, 0x09, 0xa1, 0xd8, 0x05,
    0x53, 0xbd, 0xa4, 0x02, 0xff, 0xfe, 0x5b, 0xfe, 0xff, 0xff, 0xff, 0xff, 0x00, 0x00, 0x00, 0x01,
];

pub fn group_order() -> BigUint {
    BigUint::from_bytes_be(&GROUP_ORDER_BE)
}

pub fn scalar_to_bytes(x: &Scalar) -> [u8; SCALAR_BYTES] {
    x.to_bytes_be()
}

pub fn scalar_from_bytes(bytes: &[u8]) -> Result<Scalar> {
    let bytes: &[u8; SCALAR_BYTES] = bytes.try_into().map_err(|_| Error::InvalidElement {
        group: "Zq",
        reason: "wrong length",
    })?;
    Option::from(Scalar::from_bytes_be(bytes)).ok_or(Error::InvalidElement {
        group: "Zq",
        reason: "not reduced mod q",
    })
}

/// Reduces an arbitrary integer into ℤ_q.
pub fn scalar_from_biguint(x: &BigUint) -> Scalar {
    let reduced = x % group_order();
    let raw = reduced.to_bytes_be();
    let mut be = [0u8; SCALAR_BYTES];
    be[SCALAR_BYTES - raw.len()..].copy_from_slice(&raw);
    Option::from(Scalar::from_bytes_be(&be)).expect("value reduced below q")
}

pub fn scalar_to_biguint(x: &Scalar) -> BigUint {
    BigUint::from_bytes_be(&x.to_bytes_be())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ff::Field;

    #[test]
    fn group_order_matches_field() {
        let q = group_order();
        let q_minus_one = scalar_from_biguint(&(&q - 1u32));
        assert_eq!(q_minus_one + Scalar::ONE, Scalar::ZERO);
        assert_eq!(scalar_from_biguint(&q), Scalar::ZERO);
        assert_eq!(q.bits(), 255);
    }

    #[test]
    fn scalar_bytes_round_trip() {
        let x = Scalar::from(0xdead_beefu64);
        let bytes = scalar_to_bytes(&x);
        assert_eq!(bytes.len(), SCALAR_BYTES);
        assert_eq!(bytes[28..], [0xde, 0xad, 0xbe, 0xef]);
        assert_eq!(scalar_from_bytes(&bytes).unwrap(), x);
        assert_eq!(scalar_to_biguint(&x), BigUint::from(0xdead_beefu64));
        assert!(scalar_from_bytes(&GROUP_ORDER_BE).is_err());
    }
}
