//! Fixed 8-dimensional vectors and matrices over ℤ_q.

use std::ops::{Index, IndexMut};

use ff::Field;
use rand::RngCore;

use super::{pairing_product, G1Elem, G2Elem, GtElem, Scalar};

pub const DIM: usize = 8;

/// A vector of eight scalars.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalarVec8(pub [Scalar; DIM]);

impl ScalarVec8 {
    pub fn zero() -> Self {
        ScalarVec8([Scalar::ZERO; DIM])
    }

    /// Unit vector with a one at 0-based position `k`.
    pub fn unit(k: usize) -> Self {
        let mut v = Self::zero();
        v.0[k] = Scalar::ONE;
        v
    }

    pub fn random(rng: &mut impl RngCore) -> Self {
        ScalarVec8(std::array::from_fn(|_| Scalar::random(&mut *rng)))
    }

    pub fn dot(&self, other: &Self) -> Scalar {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(Scalar::ZERO, |acc, (a, b)| acc + a * b)
    }

    pub fn encode_g1(&self) -> G1Vec8 {
        G1Vec8(self.0.map(|x| G1Elem::encode_scalar(&x)))
    }

    pub fn encode_g2(&self) -> G2Vec8 {
        G2Vec8(self.0.map(|x| G2Elem::encode_scalar(&x)))
    }
}

impl Index<usize> for ScalarVec8 {
    type Output = Scalar;
    fn index(&self, k: usize) -> &Scalar {
        &self.0[k]
    }
}

impl IndexMut<usize> for ScalarVec8 {
    fn index_mut(&mut self, k: usize) -> &mut Scalar {
        &mut self.0[k]
    }
}

/// Eight 𝔾₁ elements, the group encoding `⟦v⟧₁` of a [`ScalarVec8`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct G1Vec8(pub [G1Elem; DIM]);

/// Eight 𝔾₂ elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct G2Vec8(pub [G2Elem; DIM]);

/// `⟦⟨v, w⟩⟧_T = Π_k e(ct_k, tk_k)`.
pub fn inner_pairing(ct: &G1Vec8, tk: &G2Vec8) -> GtElem {
    let prepared: Vec<_> = tk.0.iter().map(G2Elem::prepare).collect();
    let terms: Vec<_> = ct.0.iter().map(G1Elem::as_affine).zip(prepared.iter()).collect();
    pairing_product(&terms)
}

/// An 8×8 matrix over ℤ_q, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatrixQ(pub [[Scalar; DIM]; DIM]);

impl MatrixQ {
    pub fn zero() -> Self {
        MatrixQ([[Scalar::ZERO; DIM]; DIM])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for k in 0..DIM {
            m.0[k][k] = Scalar::ONE;
        }
        m
    }

    pub fn diagonal(entries: [Scalar; DIM]) -> Self {
        let mut m = Self::zero();
        for (k, e) in entries.into_iter().enumerate() {
            m.0[k][k] = e;
        }
        m
    }

    pub fn random(rng: &mut impl RngCore) -> Self {
        MatrixQ(std::array::from_fn(|_| {
            std::array::from_fn(|_| Scalar::random(&mut *rng))
        }))
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn mul(&self, rhs: &MatrixQ) -> MatrixQ {
        let mut out = Self::zero();
        for r in 0..DIM {
            for c in 0..DIM {
                out.0[r][c] = (0..DIM).fold(Scalar::ZERO, |acc, k| acc + self.0[r][k] * rhs.0[k][c]);
            }
        }
        out
    }

    /// `M·v` with `v` as a column.
    pub fn mul_column(&self, v: &ScalarVec8) -> ScalarVec8 {
        ScalarVec8(std::array::from_fn(|r| {
            (0..DIM).fold(Scalar::ZERO, |acc, k| acc + self.0[r][k] * v.0[k])
        }))
    }

    /// `v·M` with `v` as a row.
    pub fn row_mul(v: &ScalarVec8, m: &MatrixQ) -> ScalarVec8 {
        ScalarVec8(std::array::from_fn(|c| {
            (0..DIM).fold(Scalar::ZERO, |acc, k| acc + v.0[k] * m.0[k][c])
        }))
    }

    /// Gauss–Jordan elimination; `None` when the matrix is singular.
    ///
    /// Pivots on the first nonzero entry of each column.
    pub fn inverse(&self) -> Option<MatrixQ> {
        let mut a = self.0;
        let mut inv = Self::identity().0;
        for col in 0..DIM {
            let pivot = (col..DIM).find(|&r| !bool::from(a[r][col].is_zero()))?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let scale = Option::<Scalar>::from(a[col][col].invert())?;
            for k in 0..DIM {
                a[col][k] *= scale;
                inv[col][k] *= scale;
            }
            for r in 0..DIM {
                if r == col {
                    continue;
                }
                let factor = a[r][col];
                if bool::from(factor.is_zero()) {
                    continue;
                }
                for k in 0..DIM {
                    let (ak, ik) = (a[col][k], inv[col][k]);
                    a[r][k] -= factor * ak;
                    inv[r][k] -= factor * ik;
                }
            }
        }
        Some(MatrixQ(inv))
    }
}

impl Index<(usize, usize)> for MatrixQ {
    type Output = Scalar;
    fn index(&self, (r, c): (usize, usize)) -> &Scalar {
        &self.0[r][c]
    }
}

impl IndexMut<(usize, usize)> for MatrixQ {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Scalar {
        &mut self.0[r][c]
    }
}

/// Samples a uniformly random invertible `C` and returns `(C, R)` with `R·C = C·R = I₈`.
///
/// Singular draws are resampled.
pub fn sample_matrix_pair(rng: &mut impl RngCore) -> (MatrixQ, MatrixQ) {
    loop {
        let c = MatrixQ::random(rng);
        if let Some(r) = c.inverse() {
            return (c, r);
        }
    }
}
