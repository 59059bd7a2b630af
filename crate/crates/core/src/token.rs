//! Per-sender secrets and routing-token construction.
//!
//! Sender `i`'s `j`-th row is `⟦(ρ_j, 0, 0, β_ij, γ_ij, 0, θ_i·δ_{j,π(i)}, 0)·R_i⟧₂`.
//! `ρ_j` is only known as a point, so its slot enters through a 𝔾₂ linear
//! combination and never as a scalar.

use ff::Field;
use rand::RngCore;

use crate::algebra::{
    g2_linear_combination, sample_matrix_pair, G2Elem, G2Vec8, MatrixQ, Scalar, DIM, G2_BYTES,
};
use crate::error::{Error, Result};

/// Slot positions (0-based) inside the 8-vectors.
pub mod slot {
    pub const RHO: usize = 0;
    pub const ALPHA: usize = 1;
    pub const ALPHA_PRIME: usize = 2;
    pub const BETA: usize = 3;
    pub const GAMMA: usize = 4;
    pub const MESSAGE: usize = 6;
}

/// Everything sender `i` keeps private after setup.
#[derive(Clone, Debug)]
pub struct SenderSecrets {
    owner: usize,
    theta: Scalar,
    c: MatrixQ,
    r: MatrixQ,
    beta: Vec<Scalar>,
    gamma: Vec<Scalar>,
    target: usize,
}

impl SenderSecrets {
    /// Fixture constructor; `r` must be the inverse of `c`.
    pub fn from_parts(
        owner: usize,
        theta: Scalar,
        c: MatrixQ,
        r: MatrixQ,
        beta: Vec<Scalar>,
        gamma: Vec<Scalar>,
        target: usize,
    ) -> Self {
        debug_assert!(r.mul(&c).is_identity());
        debug_assert_eq!(beta.len(), gamma.len());
        SenderSecrets {
            owner,
            theta,
            c,
            r,
            beta,
            gamma,
            target,
        }
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn theta(&self) -> &Scalar {
        &self.theta
    }

    pub fn c(&self) -> &MatrixQ {
        &self.c
    }

    pub fn r(&self) -> &MatrixQ {
        &self.r
    }

    pub fn beta(&self, j: usize) -> &Scalar {
        &self.beta[j]
    }

    pub fn gamma(&self, j: usize) -> &Scalar {
        &self.gamma[j]
    }

    /// `π(owner)`.
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn n(&self) -> usize {
        self.beta.len()
    }
}

fn nonzero_scalar(rng: &mut impl RngCore) -> Scalar {
    loop {
        let x = Scalar::random(&mut *rng);
        if !bool::from(x.is_zero()) {
            return x;
        }
    }
}

pub fn gen_sender_secrets(rng: &mut impl RngCore, owner: usize, n: usize, target: usize) -> Result<SenderSecrets> {
    if target >= n {
        return Err(Error::IndexOutOfRange { index: target, n });
    }
    let theta = nonzero_scalar(rng);
    let (c, r) = sample_matrix_pair(rng);
    let beta = (0..n).map(|_| Scalar::random(&mut *rng)).collect();
    let gamma = (0..n).map(|_| Scalar::random(&mut *rng)).collect();
    Ok(SenderSecrets {
        owner,
        theta,
        c,
        r,
        beta,
        gamma,
        target,
    })
}

/// One `tk_i^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenRow(pub G2Vec8);

impl TokenRow {
    pub const BYTES: usize = DIM * G2_BYTES;

    pub fn to_bytes(&self) -> Vec<u8> {
        self.0 .0.iter().flat_map(|e| e.to_bytes()).collect()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != Self::BYTES {
            return Err(Error::Malformed(format!("token row of {} bytes", bytes.len())));
        }
        let mut entries = [G2Elem::identity(); DIM];
        for (e, chunk) in entries.iter_mut().zip(bytes.chunks_exact(G2_BYTES)) {
            *e = G2Elem::from_bytes(chunk)?;
        }
        Ok(TokenRow(G2Vec8(entries)))
    }
}

pub fn make_token_row(secrets: &SenderSecrets, rho_j: &G2Elem, j: usize) -> TokenRow {
    let r = &secrets.r;
    let delta = if j == secrets.target { Scalar::ONE } else { Scalar::ZERO };
    let theta_delta = secrets.theta * delta;
    let g2 = G2Elem::generator();
    let entries = std::array::from_fn(|k| {
        let known = secrets.beta[j] * r[(slot::BETA, k)]
            + secrets.gamma[j] * r[(slot::GAMMA, k)]
            + theta_delta * r[(slot::MESSAGE, k)];
        g2_linear_combination(&[(*rho_j, r[(slot::RHO, k)]), (g2, known)])
    });
    TokenRow(G2Vec8(entries))
}

/// All `n` rows of one sender, in `j` order.
pub fn make_token_rows(secrets: &SenderSecrets, rho_points: &[G2Elem]) -> Vec<TokenRow> {
    rho_points
        .iter()
        .enumerate()
        .map(|(j, rho)| make_token_row(secrets, rho, j))
        .collect()
}

/// The router's `n × n` grid, `grid[j][i] = tk_i^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutingToken {
    grid: Vec<Vec<TokenRow>>,
}

impl RoutingToken {
    pub fn n(&self) -> usize {
        self.grid.len()
    }

    /// `tk_i^j`.
    pub fn row(&self, j: usize, i: usize) -> &TokenRow {
        &self.grid[j][i]
    }

    /// `tk^j = (tk_0^j, …, tk_{n−1}^j)`.
    pub fn slot(&self, j: usize) -> &[TokenRow] {
        &self.grid[j]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.n();
        let mut out = Vec::with_capacity(4 + n * n * TokenRow::BYTES);
        out.extend_from_slice(&(n as u32).to_be_bytes());
        for row in self.grid.iter().flatten() {
            out.extend_from_slice(&row.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (head, body) = bytes
            .split_first_chunk::<4>()
            .ok_or_else(|| Error::Malformed("token header".into()))?;
        let n = u32::from_be_bytes(*head) as usize;
        if body.len() != n * n * TokenRow::BYTES {
            return Err(Error::Malformed("token length".into()));
        }
        let rows = body
            .chunks_exact(TokenRow::BYTES)
            .map(TokenRow::from_bytes)
            .collect::<Result<Vec<_>>>()?;
        let grid = rows.chunks(n.max(1)).map(|c| c.to_vec()).collect();
        Ok(RoutingToken { grid })
    }
}

/// Rebuilds the grid from `rows[i][j] = tk_i^j`, as submitted by each sender.
pub fn assemble_token(n: usize, rows: &[Option<Vec<Option<TokenRow>>>]) -> Result<RoutingToken> {
    let mut grid: Vec<Vec<TokenRow>> = (0..n).map(|_| Vec::with_capacity(n)).collect();
    for i in 0..n {
        let sender = rows.get(i).and_then(Option::as_ref);
        for (j, slot_rows) in grid.iter_mut().enumerate() {
            let row = sender
                .and_then(|r| r.get(j))
                .and_then(Option::as_ref)
                .ok_or(Error::MissingTokenRow { sender: i, slot: j })?;
            slot_rows.push(row.clone());
        }
    }
    Ok(RoutingToken { grid })
}

/// Convenience for complete submissions.
pub fn assemble_complete(rows: Vec<Vec<TokenRow>>) -> Result<RoutingToken> {
    let n = rows.len();
    let wrapped: Vec<_> = rows
        .into_iter()
        .map(|r| Some(r.into_iter().map(Some).collect()))
        .collect();
    assemble_token(n, &wrapped)
}
