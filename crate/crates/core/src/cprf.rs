//! Correlated pseudorandom function built from pairwise PRF keys.
//!
//! Sender `i` derives `K_i(t) = Σ_{j≠i} (−1)^{[j<i]} · PRF(k_ij, t)`. Every
//! pairwise term enters once with each sign, so the shares of all senders sum
//! to zero modulo any modulus the PRF outputs are reduced by.

use std::collections::BTreeMap;

use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use num_traits::Zero;
use sha2::Sha256;

use crate::algebra::{group_order, scalar_from_biguint, Scalar};
use crate::error::{Error, Result};

/// A 32-byte pairwise PRF key `k_ij`.
pub type PrfKey = [u8; 32];

/// A communication round. Epoch 0 carries the initial ciphertext.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Epoch(pub u64);

impl Epoch {
    pub const INITIAL: Epoch = Epoch(0);

    pub fn next(self) -> Epoch {
        Epoch(self.0 + 1)
    }
}

/// Which derived stream a share belongs to.
///
/// The encryption stream lives in ℤ_q; the permutation mask stream is reduced
/// mod `p − 1` and used as an exponent in ℤ_p^×.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShareStream {
    Encryption,
    PermutationMask { attempt: u32 },
}

const TAG_ENCRYPTION: u8 = 0x01;
const TAG_PERMUTATION_MASK: u8 = 0x02;

/// PRF input: 8-byte big-endian epoch, one domain tag byte, then stream-specific suffix.
pub fn prf_input(t: Epoch, stream: ShareStream) -> Vec<u8> {
    let mut input = t.0.to_be_bytes().to_vec();
    match stream {
        ShareStream::Encryption => input.push(TAG_ENCRYPTION),
        ShareStream::PermutationMask { attempt } => {
            input.push(TAG_PERMUTATION_MASK);
            input.extend_from_slice(&attempt.to_be_bytes());
        }
    }
    input
}

/// A keyed function into `[0, modulus)`.
pub trait Prf {
    fn eval(&self, key: &PrfKey, input: &[u8], modulus: &BigUint) -> BigUint;
}

/// HMAC-SHA256 in counter mode with rejection sampling.
#[derive(Clone, Copy, Debug, Default)]
pub struct HmacPrf;

impl Prf for HmacPrf {
    fn eval(&self, key: &PrfKey, input: &[u8], modulus: &BigUint) -> BigUint {
        let bits = modulus.bits();
        let nbytes = bits.div_ceil(8) as usize;
        let excess = nbytes as u64 * 8 - bits;
        let mut counter = 0u32;
        loop {
            let mut buf = Vec::with_capacity(nbytes + 32);
            while buf.len() < nbytes {
                let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts any key size");
                mac.update(input);
                mac.update(&counter.to_be_bytes());
                buf.extend_from_slice(&mac.finalize().into_bytes());
                counter += 1;
            }
            buf.truncate(nbytes);
            buf[0] &= 0xffu8 >> excess;
            let candidate = BigUint::from_bytes_be(&buf);
            if &candidate < modulus {
                return candidate;
            }
        }
    }
}

/// `PRF(key, input) mod modulus` with the default PRF.
pub fn prf_eval(key: &PrfKey, input: &[u8], modulus: &BigUint) -> Result<BigUint> {
    if modulus < &BigUint::from(2u32) {
        return Err(Error::ModulusTooSmall);
    }
    Ok(HmacPrf.eval(key, input, modulus))
}

/// Sender `owner`'s pairwise keys with every other sender.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairwiseKeyRing {
    owner: usize,
    n: usize,
    keys: BTreeMap<usize, PrfKey>,
}

impl PairwiseKeyRing {
    pub fn new(owner: usize, n: usize) -> Self {
        PairwiseKeyRing {
            owner,
            n,
            keys: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, peer: usize, key: PrfKey) {
        debug_assert_ne!(peer, self.owner);
        self.keys.insert(peer, key);
    }

    pub fn key(&self, peer: usize) -> Option<&PrfKey> {
        self.keys.get(&peer)
    }

    pub fn keys(&self) -> impl Iterator<Item = (usize, &PrfKey)> {
        self.keys.iter().map(|(&j, k)| (j, k))
    }

    /// Fails with the first missing peer.
    pub fn check_complete(&self) -> Result<()> {
        match (0..self.n).find(|&j| j != self.owner && !self.keys.contains_key(&j)) {
            Some(missing) => Err(Error::IncompleteRing {
                owner: self.owner,
                missing,
            }),
            None => Ok(()),
        }
    }
}

/// Combines per-peer PRF values with the `(−1)^{[j<i]}` sign rule, mod `modulus`.
pub fn combine_share(
    owner: usize,
    values: impl IntoIterator<Item = (usize, BigUint)>,
    modulus: &BigUint,
) -> BigUint {
    values.into_iter().fold(BigUint::zero(), |acc, (j, v)| {
        let v = v % modulus;
        if j < owner {
            (acc + modulus - v) % modulus
        } else {
            (acc + v) % modulus
        }
    })
}

/// `K_owner(t)` for one stream, reduced mod `modulus`, using the given PRF.
pub fn derive_share_with<P: Prf>(
    prf: &P,
    ring: &PairwiseKeyRing,
    t: Epoch,
    stream: ShareStream,
    modulus: &BigUint,
) -> Result<BigUint> {
    if modulus < &BigUint::from(2u32) {
        return Err(Error::ModulusTooSmall);
    }
    ring.check_complete()?;
    let input = prf_input(t, stream);
    let values = ring.keys().map(|(j, k)| (j, prf.eval(k, &input, modulus)));
    Ok(combine_share(ring.owner, values, modulus))
}

pub fn derive_share(
    ring: &PairwiseKeyRing,
    t: Epoch,
    stream: ShareStream,
    modulus: &BigUint,
) -> Result<BigUint> {
    derive_share_with(&HmacPrf, ring, t, stream, modulus)
}

/// The encryption-stream share `K_i(t) ∈ ℤ_q`.
pub fn encryption_share(ring: &PairwiseKeyRing, t: Epoch) -> Result<Scalar> {
    let share = derive_share(ring, t, ShareStream::Encryption, &group_order())?;
    Ok(scalar_from_biguint(&share))
}

/// Builds cross-consistent rings from a symmetric key function `key(i, j)` with `i < j`.
pub fn rings_from_pairwise(n: usize, mut key: impl FnMut(usize, usize) -> PrfKey) -> Vec<PairwiseKeyRing> {
    let mut rings: Vec<_> = (0..n).map(|i| PairwiseKeyRing::new(i, n)).collect();
    for i in 0..n {
        for j in i + 1..n {
            let k = key(i, j);
            rings[i].insert(j, k);
            rings[j].insert(i, k);
        }
    }
    rings
}
