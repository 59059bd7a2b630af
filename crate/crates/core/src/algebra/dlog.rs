//! Baby-step giant-step discrete logarithms in 𝔾_T over a bounded range.

use std::collections::HashMap;

use super::{GtElem, Scalar};
use crate::error::{Error, Result};

/// Precomputed baby steps for one base; immutable once built.
#[derive(Clone, Debug)]
pub struct BsgsTable {
    base: GtElem,
    bound: u64,
    step: u64,
    baby: HashMap<[u8; super::GT_BYTES], u64>,
    giant: GtElem,
}

fn ceil_sqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r * r < x {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= x {
        r -= 1;
    }
    r
}

impl BsgsTable {
    /// Builds a table solving `base^x = target` for `0 ≤ x < bound`.
    pub fn new(base: &GtElem, bound: u64) -> Result<Self> {
        if base.is_identity() {
            return Err(Error::IdentityDlogBase);
        }
        let step = ceil_sqrt(bound.max(1));
        let mut baby = HashMap::with_capacity(step as usize);
        let mut acc = GtElem::identity();
        for j in 0..step {
            baby.entry(acc.to_bytes()).or_insert(j);
            acc = acc.combine(base);
        }
        // acc = base^step
        Ok(BsgsTable {
            base: *base,
            bound,
            step,
            baby,
            giant: acc.invert(),
        })
    }

    pub fn base(&self) -> &GtElem {
        &self.base
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Table size `⌈√bound⌉`.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn solve(&self, target: &GtElem) -> Result<u64> {
        let mut gamma = *target;
        for i in 0..self.step {
            if let Some(&j) = self.baby.get(&gamma.to_bytes()) {
                let x = i * self.step + j;
                if x < self.bound {
                    return Ok(x);
                }
                break;
            }
            gamma = gamma.combine(&self.giant);
        }
        Err(Error::DlogNotFound { bound: self.bound })
    }
}

/// One-shot BSGS: the `x < bound` with `base^x = target`.
pub fn bsgs_dlog(base: &GtElem, target: &GtElem, bound: u64) -> Result<u64> {
    BsgsTable::new(base, bound)?.solve(target)
}

/// `base^x` for a small integer exponent.
pub fn gt_pow_u64(base: &GtElem, x: u64) -> GtElem {
    base.pow(&Scalar::from(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ff::Field;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn ceil_sqrt_values() {
        for (x, r) in [(1, 1), (2, 2), (4, 2), (5, 3), (255, 16), (256, 16), (257, 17), (1 << 16, 256)] {
            assert_eq!(ceil_sqrt(x), r, "x = {x}");
        }
    }

    #[test]
    fn identity_target_is_zero() {
        assert_eq!(bsgs_dlog(&GtElem::generator(), &GtElem::identity(), 256).unwrap(), 0);
    }

    #[test]
    fn small_exponent() {
        let base = GtElem::generator();
        assert_eq!(bsgs_dlog(&base, &gt_pow_u64(&base, 5), 256).unwrap(), 5);
    }

    #[test]
    fn every_value_in_small_range() {
        let base = GtElem::generator().pow(&Scalar::from(0x1234_5678u64));
        let table = BsgsTable::new(&base, 37).unwrap();
        let mut acc = GtElem::identity();
        for x in 0..37 {
            assert_eq!(table.solve(&acc).unwrap(), x);
            acc = acc.combine(&base);
        }
        // base^37 is the first value outside the range
        assert_eq!(table.solve(&acc), Err(Error::DlogNotFound { bound: 37 }));
    }

    #[test]
    fn random_round_trip_16_bit() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let base = GtElem::generator().pow(&Scalar::random(&mut rng));
        let table = BsgsTable::new(&base, 1 << 16).unwrap();
        for _ in 0..100 {
            let x = rng.gen_range(0..1u64 << 16);
            assert_eq!(table.solve(&gt_pow_u64(&base, x)).unwrap(), x);
        }
    }

    #[test]
    fn out_of_range_target() {
        let base = GtElem::generator();
        let far = base.pow(&Scalar::from(1u64 << 40));
        assert_eq!(bsgs_dlog(&base, &far, 256), Err(Error::DlogNotFound { bound: 256 }));
    }

    #[test]
    fn identity_base_rejected() {
        assert_eq!(
            bsgs_dlog(&GtElem::identity(), &GtElem::identity(), 16).unwrap_err(),
            Error::IdentityDlogBase
        );
    }
}
