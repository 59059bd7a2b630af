//! Commit-reveal seed generation and the public ρ-points.

use sha2::{Digest, Sha256};

use crate::algebra::{hash_to_g2, G2Elem};
use crate::error::{Error, Result};

/// Length of the random contribution each sender commits to.
pub const CONTRIBUTION_BYTES: usize = 32;

/// `h(c)` for a sender's contribution `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Commitment(pub [u8; 32]);

impl Commitment {
    pub fn commit(contribution: &[u8]) -> Self {
        Commitment(Sha256::digest(contribution).into())
    }

    pub fn verify(&self, contribution: &[u8]) -> bool {
        *self == Self::commit(contribution)
    }
}

/// One sender's opening of its commitment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reveal {
    pub index: usize,
    pub contribution: Vec<u8>,
    pub commitment: Commitment,
}

/// `s = h(c_0 ‖ … ‖ c_{n−1})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SharedSeed(pub [u8; 32]);

/// Checks every opening and hashes the contributions in index order.
///
/// `reveals[k]` must carry index `k`.
pub fn derive_seed(reveals: &[Reveal]) -> Result<SharedSeed> {
    let mut h = Sha256::new();
    for (k, r) in reveals.iter().enumerate() {
        if r.index != k {
            return Err(Error::MissingReveal(k));
        }
        if !r.commitment.verify(&r.contribution) {
            return Err(Error::RevealMismatch(k));
        }
        h.update(&r.contribution);
    }
    Ok(SharedSeed(h.finalize().into()))
}

/// `⟦ρ_i⟧₂ = HashToCurve(h(s ‖ i))` with `i` as 4 bytes big-endian.
pub fn derive_rho_point(seed: &SharedSeed, i: usize) -> G2Elem {
    let mut h = Sha256::new();
    h.update(seed.0);
    h.update((i as u32).to_be_bytes());
    hash_to_g2(&h.finalize())
}

pub fn derive_rho_points(seed: &SharedSeed, n: usize) -> Vec<G2Elem> {
    (0..n).map(|i| derive_rho_point(seed, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reveal(index: usize, byte: u8) -> Reveal {
        let contribution = vec![byte; CONTRIBUTION_BYTES];
        Reveal {
            index,
            commitment: Commitment::commit(&contribution),
            contribution,
        }
    }

    #[test]
    fn commitment_binds() {
        let c = [7u8; 32];
        assert_eq!(Commitment::commit(&c), Commitment::commit(&c));
        assert!(Commitment::commit(&c).verify(&c));
        assert!(!Commitment::commit(&c).verify(&[8u8; 32]));
    }

    #[test]
    fn seed_depends_on_order() {
        let a = derive_seed(&[reveal(0, 1), reveal(1, 2)]).unwrap();
        assert_eq!(a, derive_seed(&[reveal(0, 1), reveal(1, 2)]).unwrap());
        let b = derive_seed(&[reveal(0, 2), reveal(1, 1)]).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn single_sender_seed_is_hash_of_contribution() {
        let r = reveal(0, 9);
        let s = derive_seed(std::slice::from_ref(&r)).unwrap();
        assert_eq!(s.0, r.commitment.0);
    }

    #[test]
    fn tampered_reveal_is_named() {
        let mut rs = vec![reveal(0, 1), reveal(1, 2), reveal(2, 3)];
        rs[1].contribution[0] ^= 1;
        assert_eq!(derive_seed(&rs), Err(Error::RevealMismatch(1)));
    }

    #[test]
    fn missing_reveal_aborts() {
        let rs = vec![reveal(0, 1), reveal(2, 3)];
        assert_eq!(derive_seed(&rs), Err(Error::MissingReveal(1)));
    }

    #[test]
    fn last_revealer_cannot_steer_the_seed() {
        let honest = vec![reveal(0, 1), reveal(1, 2)];
        let committed = reveal(2, 3);
        let mut rs = honest.clone();
        rs.push(committed.clone());
        let fixed = derive_seed(&rs).unwrap();
        // After seeing every other opening, the last sender tries other contributions
        // under its already-published commitment.
        for alt in 0u8..=255 {
            if alt == 3 {
                continue;
            }
            let mut forged = honest.clone();
            forged.push(Reveal {
                index: 2,
                contribution: vec![alt; CONTRIBUTION_BYTES],
                commitment: committed.commitment,
            });
            assert_eq!(derive_seed(&forged), Err(Error::RevealMismatch(2)));
        }
        assert_eq!(derive_seed(&rs).unwrap(), fixed);
    }

    #[test]
    fn rho_points_are_distinct_and_in_subgroup() {
        let seed = SharedSeed([0x5a; 32]);
        let pts = derive_rho_points(&seed, 33);
        for (i, p) in pts.iter().enumerate() {
            assert!(p.is_torsion_free() && !p.is_identity());
            assert_eq!(*p, derive_rho_point(&seed, i));
        }
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                assert_ne!(pts[i], pts[j]);
            }
        }
    }

    #[test]
    fn rho_point_golden_prefix() {
        let seed = SharedSeed([0u8; 32]);
        let a = derive_rho_point(&seed, 0).to_bytes();
        let b = derive_rho_point(&seed, 1).to_bytes();
        assert_ne!(a, b);
        assert_eq!(hex(&a[..16]), GOLDEN_RHO0_PREFIX);
        assert_eq!(hex(&b[..16]), GOLDEN_RHO1_PREFIX);
    }

    const GOLDEN_RHO0_PREFIX: &str = "03a5064871234fc1f8dd5e14415dd672";
    const GOLDEN_RHO1_PREFIX: &str = "02927f2b5f5718806bb34363a70719ea";

    fn hex(b: &[u8]) -> String {
        b.iter().map(|x| format!("{x:02x}")).collect()
    }
}
