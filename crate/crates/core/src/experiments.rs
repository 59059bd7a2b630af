//! Challengers for the CPRF experiment and the matrix identities behind the
//! hybrid arguments.
//!
//! Only the structural side is checked here: sums, ranges and exact algebraic
//! identities. Distinguishing advantage is not measured.

use std::collections::BTreeSet;
use std::fmt;

use ff::Field;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::algebra::{inner_pairing, sample_matrix_pair, scalar_to_bytes, GtElem, MatrixQ, Scalar, ScalarVec8, DIM};
use crate::cprf::{encryption_share, Epoch, PairwiseKeyRing};
use crate::error::{Error, Result};

/// The challenger's answer for one epoch query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChallengeResponse {
    pub epoch: Epoch,
    /// `(j, d_j)` for every honest `j`, ascending.
    pub honest: Vec<(usize, Scalar)>,
}

/// Corrupt shares and honest responses of one query must sum to zero.
pub fn check_sum_constraint(rings: &[PairwiseKeyRing], corrupt: &BTreeSet<usize>, resp: &ChallengeResponse) -> Result<bool> {
    let mut total = Scalar::ZERO;
    for &i in corrupt {
        total += encryption_share(&rings[i], resp.epoch)?;
    }
    for (_, d) in &resp.honest {
        total += d;
    }
    Ok(bool::from(total.is_zero()))
}

fn check_corrupt_set(n: usize, corrupt: &BTreeSet<usize>) -> Result<()> {
    let limit = n.saturating_sub(2);
    if corrupt.len() > limit {
        return Err(Error::CorruptSetTooLarge {
            size: corrupt.len(),
            limit,
        });
    }
    if let Some(&index) = corrupt.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index, n });
    }
    Ok(())
}

/// Answers epoch queries for the honest senders.
///
/// With `b = false` the true shares are returned; with `b = true` uniform
/// values conditioned on `Σ_{j∉𝒦} d_j = −Σ_{i∈𝒦} K_i(t)`.
pub fn cprf_challenger(
    b: bool,
    rings: &[PairwiseKeyRing],
    corrupt: &BTreeSet<usize>,
    queries: &[Epoch],
    rng: &mut impl RngCore,
) -> Result<Vec<ChallengeResponse>> {
    let n = rings.len();
    check_corrupt_set(n, corrupt)?;
    let honest: Vec<usize> = (0..n).filter(|i| !corrupt.contains(i)).collect();
    queries
        .iter()
        .map(|&t| {
            let values = if b {
                let mut target = Scalar::ZERO;
                for &i in corrupt {
                    target -= encryption_share(&rings[i], t)?;
                }
                let mut ds: Vec<Scalar> = (1..honest.len()).map(|_| Scalar::random(&mut *rng)).collect();
                let partial = ds.iter().fold(Scalar::ZERO, |acc, d| acc + d);
                ds.push(target - partial);
                ds
            } else {
                honest
                    .iter()
                    .map(|&j| encryption_share(&rings[j], t))
                    .collect::<Result<Vec<_>>>()?
            };
            Ok(ChallengeResponse {
                epoch: t,
                honest: honest.iter().copied().zip(values).collect(),
            })
        })
        .collect()
}

/// The four identity families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Identity {
    /// Structured pair used to insert `ζ_i` into the ciphertexts.
    StructuredPairCiphertext,
    /// Structured pair used to insert `ξ_i` into a token row.
    StructuredPairToken,
    /// Conjugation moving `ξ_i` from the token row into the ciphertexts.
    TokenConjugation,
    /// Change of basis that writes `x_{π⁻¹(i)}` into the spare slot.
    SpareSlotTransform,
}

impl Identity {
    pub const ALL: [Identity; 4] = [
        Identity::StructuredPairCiphertext,
        Identity::StructuredPairToken,
        Identity::TokenConjugation,
        Identity::SpareSlotTransform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::StructuredPairCiphertext => "structured-pair-ciphertext",
            Identity::StructuredPairToken => "structured-pair-token",
            Identity::TokenConjugation => "token-conjugation",
            Identity::SpareSlotTransform => "spare-slot-transform",
        }
    }
}

/// A failed identity with the scalars that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityFailure {
    pub identity: Identity,
    pub trial: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HybridReport {
    pub trials: usize,
    pub failures: Vec<IdentityFailure>,
    /// Result of the one pairing-space check per run.
    pub pairing_spot_check: bool,
}

impl HybridReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.pairing_spot_check
    }

    pub fn failures_of(&self, id: Identity) -> usize {
        self.failures.iter().filter(|f| f.identity == id).count()
    }
}

impl fmt::Display for HybridReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for id in Identity::ALL {
            let failed = self.failures_of(id);
            let verdict = if failed == 0 { "PASS" } else { "FAIL" };
            writeln!(f, "{verdict} {} {}/{}", id.name(), self.trials - failed, self.trials)?;
        }
        let verdict = if self.pairing_spot_check { "PASS" } else { "FAIL" };
        writeln!(f, "{verdict} pairing-spot-check")?;
        for fail in &self.failures {
            writeln!(f, "  trial {} {}: {}", fail.trial, fail.identity.name(), fail.detail)?;
        }
        Ok(())
    }
}

fn nonzero(rng: &mut impl RngCore) -> Scalar {
    loop {
        let x = Scalar::random(&mut *rng);
        if !bool::from(x.is_zero()) {
            return x;
        }
    }
}

fn invertible(rng: &mut impl RngCore) -> (MatrixQ, MatrixQ) {
    sample_matrix_pair(rng)
}

fn vec8(entries: [Scalar; DIM]) -> ScalarVec8 {
    ScalarVec8(entries)
}

fn hex(x: &Scalar) -> String {
    scalar_to_bytes(x).iter().map(|b| format!("{b:02x}")).collect()
}

const Z: Scalar = Scalar::ZERO;

/// `W_i · A` and `diag(1, 1/ab, …) · B · W_i⁻¹` for the ζ-insertion pair.
pub fn structured_pair_ciphertext(a: Scalar, b: Scalar, w: &MatrixQ, w_inv: &MatrixQ) -> (MatrixQ, MatrixQ, MatrixQ, MatrixQ) {
    let mut am = MatrixQ::diagonal([Scalar::ONE, a, b, a, a, Scalar::ONE, a, a]);
    am[(5, 1)] = Scalar::ONE;
    am[(5, 2)] = Scalar::ONE;
    let ab = a * b;
    let mut bm = MatrixQ::diagonal([Scalar::ONE, b, a, b, b, ab, b, b]);
    bm[(5, 1)] = -b;
    bm[(5, 2)] = -a;
    let d = scale_diag(ab);
    (w.mul(&am), d.mul(&bm).mul(w_inv), am, bm)
}

/// `W_i · A` and `diag(1, 1/ab, …) · B · W_i⁻¹` for the ξ-insertion pair.
pub fn structured_pair_token(a: Scalar, b: Scalar, w: &MatrixQ, w_inv: &MatrixQ) -> (MatrixQ, MatrixQ, MatrixQ, MatrixQ) {
    let ab = a * b;
    let mut am = MatrixQ::diagonal([Scalar::ONE, b, b, b, a, ab, b, b]);
    am[(3, 5)] = -b;
    am[(4, 5)] = -a;
    let mut bm = MatrixQ::diagonal([Scalar::ONE, a, a, a, b, Scalar::ONE, a, a]);
    bm[(3, 5)] = Scalar::ONE;
    bm[(4, 5)] = Scalar::ONE;
    let d = scale_diag(ab);
    (w.mul(&am), d.mul(&bm).mul(w_inv), am, bm)
}

fn scale_diag(ab: Scalar) -> MatrixQ {
    let inv = ab.invert().expect("a, b are units");
    MatrixQ::diagonal([Scalar::ONE, inv, inv, inv, inv, inv, inv, inv])
}

/// The conjugation pair `(M⁻, M⁺)`: identity except row 6 (0-based 5).
pub fn conjugation_matrices(rho: Scalar, xi: Scalar, beta: Scalar, gamma: Scalar, theta_delta: Scalar) -> Result<(MatrixQ, MatrixQ)> {
    let inv = Option::<Scalar>::from(xi.invert()).ok_or(Error::ZeroXi)?;
    let mut minus = MatrixQ::identity();
    let mut plus = MatrixQ::identity();
    for (k, v) in [(0, rho), (3, beta), (4, gamma), (6, theta_delta)] {
        minus[(5, k)] = -v * inv;
        plus[(5, k)] = v * inv;
    }
    Ok((minus, plus))
}

/// `blockdiag(I₅, [[1,0,0],[0,1,0],[±x/ζ,0,1]])`.
pub fn spare_slot_matrices(x: Scalar, zeta: Scalar) -> Result<(MatrixQ, MatrixQ)> {
    let inv = Option::<Scalar>::from(zeta.invert()).ok_or(Error::ZeroXi)?;
    let mut minus = MatrixQ::identity();
    let mut plus = MatrixQ::identity();
    minus[(7, 5)] = -x * inv;
    plus[(7, 5)] = x * inv;
    Ok((minus, plus))
}

struct Trial<'a> {
    report: &'a mut HybridReport,
    trial: usize,
}

impl Trial<'_> {
    fn check(&mut self, identity: Identity, ok: bool, detail: impl FnOnce() -> String) {
        if !ok {
            self.report.failures.push(IdentityFailure {
                identity,
                trial: self.trial,
                detail: detail(),
            });
        }
    }
}

/// Runs `trials` seeded draws of all four identity families.
pub fn verify_hybrid_identities(seed: u64, trials: usize) -> HybridReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut report = HybridReport {
        trials,
        ..Default::default()
    };
    for trial in 0..trials {
        let a = nonzero(&mut rng);
        let b = nonzero(&mut rng);
        let theta = a * b;
        let (w, w_inv) = invertible(&mut rng);
        let rho = Scalar::random(&mut rng);
        let beta = Scalar::random(&mut rng);
        let gamma = Scalar::random(&mut rng);
        let k = Scalar::random(&mut rng);
        let alpha = Scalar::random(&mut rng);
        let alpha2 = Scalar::random(&mut rng);
        let x = Scalar::random(&mut rng);
        let x_perm = Scalar::random(&mut rng);
        let zeta = nonzero(&mut rng);
        let xi = nonzero(&mut rng);
        let delta = if rng.next_u32() & 1 == 1 { Scalar::ONE } else { Scalar::ZERO };
        let scalars = || {
            format!(
                "a={} b={} rho={} xi={} zeta={} delta={}",
                hex(&a),
                hex(&b),
                hex(&rho),
                hex(&xi),
                hex(&zeta),
                hex(&delta)
            )
        };
        let mut t = Trial {
            report: &mut report,
            trial,
        };

        // Ciphertext-side structured pair.
        let (c, r, _, bm) = structured_pair_ciphertext(a, b, &w, &w_inv);
        let ok = r.mul(&c).is_identity()
            && c.mul_column(&vec8([k, alpha, alpha2, Z, Z, zeta, x, Z]))
                == w.mul_column(&vec8([k, a * alpha, b * alpha2, Z, Z, alpha + alpha2 + zeta, a * x, Z]))
            && MatrixQ::row_mul(&vec8([rho, Z, Z, theta * beta, theta * gamma, Z, theta * delta, Z]), &r)
                == MatrixQ::row_mul(&MatrixQ::row_mul(&vec8([rho, Z, Z, beta, gamma, Z, delta, Z]), &bm), &w_inv);
        t.check(Identity::StructuredPairCiphertext, ok, scalars);

        // Token-side structured pair.
        let (c, r, _, _) = structured_pair_token(a, b, &w, &w_inv);
        let ok = r.mul(&c).is_identity()
            && MatrixQ::row_mul(&vec8([rho, Z, Z, theta * beta, theta * gamma, theta * xi, theta * delta, Z]), &r)
                == MatrixQ::row_mul(
                    &vec8([rho, Z, Z, a * beta, b * gamma, beta + gamma + xi, a * delta, Z]),
                    &w_inv,
                );
        t.check(Identity::StructuredPairToken, ok, scalars);

        // Conjugation of a generic pair.
        let (c, r) = invertible(&mut rng);
        let (minus, plus) = conjugation_matrices(rho, xi, beta, gamma, theta * delta).expect("xi is a unit");
        let row_before = vec8([rho, Z, Z, beta, gamma, xi, theta * delta, Z]);
        let row_after = vec8([Z, Z, Z, Z, Z, xi, Z, Z]);
        let other_row = vec8([rho, Z, Z, beta, gamma, Z, theta * delta, Z]);
        let ct_before = vec8([k, alpha, alpha2, Z, Z, Z, x, x_perm]);
        let slot = xi.invert().unwrap() * (rho * k + theta * delta * x);
        let ct_after = vec8([k, alpha, alpha2, Z, Z, slot, x, x_perm]);
        let ok = minus.mul(&r).mul(&c).mul(&plus).is_identity()
            && MatrixQ::row_mul(&row_before, &minus) == row_after
            && MatrixQ::row_mul(&other_row, &minus) == other_row
            && plus.mul_column(&ct_before) == ct_after
            && MatrixQ::row_mul(&row_after, &r).dot(&c.mul_column(&ct_after)) == rho * k + theta * delta * x
            && MatrixQ::row_mul(&row_before, &r).dot(&c.mul_column(&ct_before.with(5, Z))) == rho * k + theta * delta * x;
        t.check(Identity::TokenConjugation, ok, scalars);

        // Spare-slot change of basis.
        let (minus, plus) = spare_slot_matrices(x_perm, zeta).expect("zeta is a unit");
        let v = vec8([k, alpha, alpha2, Z, Z, zeta, x, Z]);
        let v_star = vec8([k, alpha, alpha2, Z, Z, zeta, x, x_perm]);
        let row = vec8([rho, Z, Z, beta, gamma, Z, theta * delta, Z]);
        let ok = minus.mul(&r).mul(&c).mul(&plus).is_identity()
            && c.mul(&plus).mul_column(&v) == c.mul_column(&v_star)
            && MatrixQ::row_mul(&row, &minus) == row
            && MatrixQ::row_mul(&row, &r).dot(&c.mul_column(&v_star)) == row.dot(&v)
            && MatrixQ::row_mul(&row, &minus.mul(&r)).dot(&c.mul(&plus).mul_column(&v)) == row.dot(&v);
        t.check(Identity::SpareSlotTransform, ok, scalars);

        if trial == 0 {
            let lhs = inner_pairing(
                &c.mul_column(&v_star).encode_g1(),
                &MatrixQ::row_mul(&row, &r).encode_g2(),
            );
            report.pairing_spot_check = lhs == GtElem::generator().pow(&row.dot(&v));
        }
    }
    if trials == 0 {
        report.pairing_spot_check = true;
    }
    report
}

trait With {
    fn with(self, k: usize, v: Scalar) -> Self;
}

impl With for ScalarVec8 {
    fn with(mut self, k: usize, v: Scalar) -> Self {
        self[k] = v;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cprf::rings_from_pairwise;
    use rand::Rng;

    fn rings(n: usize, seed: u64) -> Vec<PairwiseKeyRing> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rings_from_pairwise(n, |_, _| rng.gen())
    }

    #[test]
    fn real_branch_returns_true_shares() {
        let rs = rings(5, 1);
        let corrupt = BTreeSet::from([1, 3]);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let resp = cprf_challenger(false, &rs, &corrupt, &[Epoch(4), Epoch(9)], &mut rng).unwrap();
        for r in &resp {
            let ids: Vec<_> = r.honest.iter().map(|(j, _)| *j).collect();
            assert_eq!(ids, vec![0, 2, 4]);
            for (j, d) in &r.honest {
                assert_eq!(*d, encryption_share(&rs[*j], r.epoch).unwrap());
            }
            assert!(check_sum_constraint(&rs, &corrupt, r).unwrap());
        }
    }

    #[test]
    fn random_branch_meets_sum_constraint() {
        let rs = rings(6, 3);
        let corrupt = BTreeSet::from([0, 2, 5]);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let queries: Vec<_> = (1..20).map(Epoch).collect();
        let resp = cprf_challenger(true, &rs, &corrupt, &queries, &mut rng).unwrap();
        for r in &resp {
            assert!(check_sum_constraint(&rs, &corrupt, r).unwrap());
            let true_share = encryption_share(&rs[1], r.epoch).unwrap();
            assert_ne!(r.honest[0].1, true_share);
        }
    }

    #[test]
    fn oversized_corrupt_set_rejected() {
        let rs = rings(4, 5);
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let err = cprf_challenger(true, &rs, &BTreeSet::from([0, 1, 2]), &[Epoch(1)], &mut rng).unwrap_err();
        assert_eq!(err, Error::CorruptSetTooLarge { size: 3, limit: 2 });
        assert!(cprf_challenger(true, &rs, &BTreeSet::from([7]), &[Epoch(1)], &mut rng).is_err());
    }

    #[test]
    fn empty_corrupt_set_leaves_zero_sum() {
        let rs = rings(3, 7);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let resp = cprf_challenger(true, &rs, &BTreeSet::new(), &[Epoch(2)], &mut rng).unwrap();
        let total = resp[0].honest.iter().fold(Scalar::ZERO, |a, (_, d)| a + d);
        assert_eq!(total, Scalar::ZERO);
    }

    #[test]
    fn identities_hold() {
        let report = verify_hybrid_identities(1, 25);
        assert!(report.passed(), "{report}");
        assert_eq!(report.to_string().lines().filter(|l| l.starts_with("PASS")).count(), 5);
    }

    #[test]
    fn zero_xi_rejected() {
        let one = Scalar::ONE;
        assert_eq!(conjugation_matrices(one, Z, one, one, one).unwrap_err(), Error::ZeroXi);
        assert_eq!(spare_slot_matrices(one, Z).unwrap_err(), Error::ZeroXi);
    }

    #[test]
    fn conjugation_with_delta_zero_is_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let (c, r) = sample_matrix_pair(&mut rng);
        let s = || Scalar::random(&mut ChaCha20Rng::seed_from_u64(10));
        let (minus, plus) = conjugation_matrices(s(), nonzero(&mut rng), s(), s(), Z).unwrap();
        assert!(minus.mul(&r).mul(&c).mul(&plus).is_identity());
    }

    #[test]
    fn broken_pair_is_reported() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (w, w_inv) = sample_matrix_pair(&mut rng);
        let a = nonzero(&mut rng);
        let b = nonzero(&mut rng);
        let (c, _, _, _) = structured_pair_ciphertext(a, b, &w, &w_inv);
        // Pairing with the other family's R must fail.
        let (_, r_other, _, _) = structured_pair_token(a, b, &w, &w_inv);
        assert!(!r_other.mul(&c).is_identity());
    }
}
