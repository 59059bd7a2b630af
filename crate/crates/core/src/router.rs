//! The untrusted router.
//!
//! It holds the token, one decoding base per output slot and the message
//! bound. Slot `j` of every epoch is `Π_i ⟨ct_{i,t}, tk_i^j⟩`, whose discrete
//! log with respect to `bases[j]` is the message routed to `j`.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use blstrs::G2Prepared;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::algebra::{pairing_product, BsgsTable, GtElem, DIM, GT_BYTES};
use crate::cprf::Epoch;
use crate::encryption::{check_width, Ciphertext};
use crate::error::{Error, Result};
use crate::token::RoutingToken;

/// Router state after setup.
#[derive(Debug)]
pub struct RouterState {
    token: RoutingToken,
    bases: Vec<GtElem>,
    bits: u32,
    // Derived from the fields above and rebuilt on decode.
    prepared: Vec<Vec<Vec<G2Prepared>>>,
    tables: Vec<OnceLock<BsgsTable>>,
    last_epoch: Epoch,
    seen: HashSet<[u8; 32]>,
    pairings: AtomicU64,
    parallel: bool,
}

fn prepare_token(token: &RoutingToken) -> Vec<Vec<Vec<G2Prepared>>> {
    let n = token.n();
    (0..n)
        .map(|j| {
            token
                .slot(j)
                .iter()
                .map(|row| row.0 .0.iter().map(|e| e.prepare()).collect())
                .collect()
        })
        .collect()
}

fn digest(ct: &Ciphertext) -> [u8; 32] {
    Sha256::digest(ct.payload()).into()
}

impl RouterState {
    /// Installs the token and derives `bases[j] = ⟦θ_{π⁻¹(j)}⟧_T` from the epoch-0 ciphertexts.
    pub fn install(token: RoutingToken, initial: &[Ciphertext], bits: u32) -> Result<Self> {
        check_width(bits)?;
        let n = token.n();
        let prepared = prepare_token(&token);
        let mut state = RouterState {
            token,
            bases: Vec::new(),
            bits,
            prepared,
            tables: Vec::new(),
            last_epoch: Epoch::INITIAL,
            seen: HashSet::new(),
            pairings: AtomicU64::new(0),
            parallel: false,
        };
        state.check_batch(initial, Epoch::INITIAL)?;
        let bases = state.slot_values(initial);
        if let Some(j) = bases.iter().position(GtElem::is_identity) {
            return Err(Error::IdentityBase(j));
        }
        state.bases = bases;
        state.tables = (0..n).map(|_| OnceLock::new()).collect();
        state.seen.extend(initial.iter().map(digest));
        Ok(state)
    }

    /// Restores a state from its serialized fields.
    pub fn from_parts(token: RoutingToken, bases: Vec<GtElem>, bits: u32) -> Result<Self> {
        check_width(bits)?;
        if bases.len() != token.n() {
            return Err(Error::Malformed("one base per slot".into()));
        }
        if let Some(j) = bases.iter().position(GtElem::is_identity) {
            return Err(Error::IdentityBase(j));
        }
        let n = token.n();
        Ok(RouterState {
            prepared: prepare_token(&token),
            token,
            bases,
            bits,
            tables: (0..n).map(|_| OnceLock::new()).collect(),
            last_epoch: Epoch::INITIAL,
            seen: HashSet::new(),
            pairings: AtomicU64::new(0),
            parallel: false,
        })
    }

    pub fn n(&self) -> usize {
        self.token.n()
    }

    pub fn token(&self) -> &RoutingToken {
        &self.token
    }

    pub fn bases(&self) -> &[GtElem] {
        &self.bases
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// BSGS bound `2^b`.
    pub fn bound(&self) -> u64 {
        1u64 << self.bits
    }

    pub fn last_epoch(&self) -> Epoch {
        self.last_epoch
    }

    /// Spreads the per-slot pairing products over the rayon pool.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    /// Pairings evaluated since install, counted per `(𝔾₁, 𝔾₂)` pair.
    pub fn pairing_count(&self) -> u64 {
        self.pairings.load(Ordering::Relaxed)
    }

    pub fn reset_pairing_count(&self) {
        self.pairings.store(0, Ordering::Relaxed);
    }

    fn check_batch(&self, cts: &[Ciphertext], epoch: Epoch) -> Result<()> {
        let n = self.n();
        if cts.len() != n {
            return Err(Error::CiphertextCount {
                expected: n,
                got: cts.len(),
            });
        }
        for (i, ct) in cts.iter().enumerate() {
            if ct.sender != i {
                return Err(Error::Malformed(format!("ciphertext {i} is labeled sender {}", ct.sender)));
            }
            if ct.epoch != epoch {
                return Err(Error::EpochMismatch {
                    sender: i,
                    expected: epoch.0,
                    found: ct.epoch.0,
                });
            }
        }
        Ok(())
    }

    fn slot_value(&self, cts: &[Ciphertext], j: usize) -> GtElem {
        let terms: Vec<_> = cts
            .iter()
            .zip(self.prepared[j].iter())
            .flat_map(|(ct, row)| ct.entries.0.iter().map(|e| e.as_affine()).zip(row.iter()))
            .collect();
        self.pairings.fetch_add(terms.len() as u64, Ordering::Relaxed);
        pairing_product(&terms)
    }

    fn slot_values(&self, cts: &[Ciphertext]) -> Vec<GtElem> {
        let n = self.n();
        if self.parallel {
            (0..n).into_par_iter().map(|j| self.slot_value(cts, j)).collect()
        } else {
            (0..n).map(|j| self.slot_value(cts, j)).collect()
        }
    }

    fn table(&self, j: usize) -> &BsgsTable {
        self.tables[j].get_or_init(|| {
            BsgsTable::new(&self.bases[j], self.bound()).expect("bases are checked at install")
        })
    }

    fn decode(&self, j: usize, value: &GtElem) -> Result<u64> {
        self.table(j).solve(value).map_err(|_| Error::DlogOutOfRange {
            slot: j,
            bits: self.bits,
        })
    }

    /// Routes one epoch; `output[j] = x_{π⁻¹(j),t}`.
    ///
    /// The epoch is consumed once the batch passes validation, even if decoding fails.
    pub fn route(&mut self, cts: &[Ciphertext], epoch: Epoch) -> Result<Vec<u64>> {
        if epoch <= self.last_epoch {
            return Err(Error::StaleEpoch {
                epoch: epoch.0,
                last: self.last_epoch.0,
            });
        }
        self.check_batch(cts, epoch)?;
        let digests: Vec<_> = cts.iter().map(digest).collect();
        if let Some(i) = digests.iter().position(|d| self.seen.contains(d)) {
            return Err(Error::ReplayedCiphertext(i));
        }
        self.last_epoch = epoch;
        self.seen.extend(digests);

        let values = self.slot_values(cts);
        let decode = |(j, v): (usize, &GtElem)| self.decode(j, v);
        if self.parallel {
            values.par_iter().enumerate().map(decode).collect()
        } else {
            values.iter().enumerate().map(decode).collect()
        }
    }

    /// Serializes the persistent state: token, bases and the bound `2^b`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.token.to_bytes();
        for b in &self.bases {
            out.extend_from_slice(&b.to_bytes());
        }
        out.extend_from_slice(&self.bound().to_be_bytes());
        out
    }

    pub fn decode_state(bytes: &[u8]) -> Result<Self> {
        let malformed = || Error::Malformed("router state".into());
        let (head, _) = bytes.split_first_chunk::<4>().ok_or_else(malformed)?;
        let n = u32::from_be_bytes(*head) as usize;
        let token_len = 4 + n * n * DIM * crate::algebra::G2_BYTES;
        if bytes.len() != token_len + n * GT_BYTES + 8 {
            return Err(malformed());
        }
        let token = RoutingToken::from_bytes(&bytes[..token_len])?;
        let bases = bytes[token_len..token_len + n * GT_BYTES]
            .chunks_exact(GT_BYTES)
            .map(GtElem::from_bytes)
            .collect::<Result<Vec<_>>>()?;
        let bound = u64::from_be_bytes(bytes[bytes.len() - 8..].try_into().expect("8 bytes"));
        if !bound.is_power_of_two() {
            return Err(malformed());
        }
        Self::from_parts(token, bases, bound.trailing_zeros())
    }
}
