//! Anonymous permutation generation from masked prime products.
//!
//! Each sender picks a prime from a public list and blinds it with
//! `h(t)^{K_i(t)}`. The masks cancel in the product because the mask shares
//! sum to zero mod `p − 1`, leaving the exact integer product of the chosen
//! primes. Factoring and sorting it gives each sender its own rank and nothing
//! else.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore};
use sha2::{Digest, Sha256};

use crate::cprf::{derive_share, Epoch, PairwiseKeyRing, ShareStream};
use crate::error::{Error, Result};
use crate::key_exchange::DhParams;

/// Upper bound on retry attempts before setup gives up.
pub const MAX_ATTEMPTS: u32 = 64;

/// The public ordered list of small distinct primes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeList {
    primes: Vec<u64>,
}

/// Default list length for `n` senders: `max(4n², 128)`.
pub fn default_list_len(n: usize) -> usize {
    (4 * n * n).max(128)
}

impl PrimeList {
    /// The first `count` primes.
    pub fn first(count: usize) -> Self {
        let mut primes = Vec::with_capacity(count);
        if count == 0 {
            return PrimeList { primes };
        }
        // p_k < k (ln k + ln ln k) for k ≥ 6
        let k = count.max(6) as f64;
        let limit = (k * (k.ln() + k.ln().ln())).ceil() as usize + 1;
        let mut composite = vec![false; limit + 1];
        for x in 2..=limit {
            if composite[x] {
                continue;
            }
            primes.push(x as u64);
            if primes.len() == count {
                break;
            }
            let mut m = x * x;
            while m <= limit {
                composite[m] = true;
                m += x;
            }
        }
        PrimeList { primes }
    }

    pub fn for_senders(n: usize) -> Self {
        Self::first(default_list_len(n))
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn contains(&self, prime: u64) -> bool {
        self.primes.binary_search(&prime).is_ok()
    }

    /// Checks that any `n` entries multiply to less than `modulus`.
    pub fn check_capacity(&self, n: usize, modulus: &BigUint) -> Result<()> {
        let largest: BigUint = self.primes.iter().rev().take(n).map(|&p| BigUint::from(p)).product();
        if n > self.primes.len() || &largest >= modulus {
            return Err(Error::PrimeListTooLarge {
                n,
                needed_bits: largest.bits(),
                modulus_bits: modulus.bits(),
            });
        }
        Ok(())
    }
}

/// Sender `owner`'s result: its chosen prime and its rank `π(owner)` (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PermutationAssignment {
    pub owner: usize,
    pub my_prime: u64,
    pub position: usize,
}

/// `h(t)`: SHA-256 in counter mode mapped into ℤ_p^×, rejecting 0.
pub fn hash_to_unit(t: Epoch, p: &BigUint) -> BigUint {
    let nbytes = p.bits().div_ceil(8) as usize + 16;
    let mut counter = 0u32;
    loop {
        let mut buf = Vec::with_capacity(nbytes + 32);
        while buf.len() < nbytes {
            let mut h = Sha256::new();
            h.update(b"anonroute/h(t)");
            h.update(t.0.to_be_bytes());
            h.update(counter.to_be_bytes());
            buf.extend_from_slice(&h.finalize());
            counter += 1;
        }
        buf.truncate(nbytes);
        let x = BigUint::from_bytes_be(&buf) % p;
        if !x.is_zero() {
            return x;
        }
    }
}

/// `prime · h^{mask_share} mod p`.
pub fn mask_prime(prime: u64, h_t: &BigUint, mask_share: &BigUint, p: &BigUint) -> BigUint {
    (BigUint::from(prime) * h_t.modpow(mask_share, p)) % p
}

/// Product of all masked values mod p.
pub fn unmask_product(masked: &[BigUint], p: &BigUint) -> BigUint {
    masked.iter().fold(BigUint::one(), |acc, m| (acc * m) % p)
}

/// Outcome of factoring the unmasked product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factorization {
    /// Distinct primes, ascending.
    Sorted(Vec<u64>),
    /// Some prime was chosen more than once; the round must be retried.
    Collision,
}

/// Trial division against the public list.
pub fn factor_sorted(product: &BigUint, primes: &PrimeList, expected: usize) -> Result<Factorization> {
    let mut rest = product.clone();
    let mut factors = Vec::with_capacity(expected);
    let mut collision = false;
    for &p in primes.primes() {
        if rest.is_one() {
            break;
        }
        let mut multiplicity = 0;
        while (&rest % p).is_zero() {
            rest /= p;
            multiplicity += 1;
        }
        match multiplicity {
            0 => {}
            1 => factors.push(p),
            _ => collision = true,
        }
    }
    if !rest.is_one() {
        return Err(Error::UnfactorableResidue);
    }
    if collision {
        return Ok(Factorization::Collision);
    }
    if factors.len() != expected {
        return Err(Error::FactorCountMismatch {
            expected,
            found: factors.len(),
        });
    }
    Ok(Factorization::Sorted(factors))
}

/// 0-based rank of `my_prime` in the published list.
pub fn my_position(sorted: &[u64], my_prime: u64) -> Result<usize> {
    sorted.binary_search(&my_prime).map_err(|_| Error::PrimeNotFound(my_prime))
}

/// Sender side of one attempt: draw a prime and blind it.
#[derive(Clone, Debug)]
pub struct SenderDraw {
    pub prime: u64,
    pub masked: BigUint,
}

pub fn sender_draw(
    params: &DhParams,
    primes: &PrimeList,
    ring: &PairwiseKeyRing,
    t: Epoch,
    attempt: u32,
    rng: &mut impl RngCore,
) -> Result<SenderDraw> {
    let p = params.p();
    let order = p - 1u32;
    let share = derive_share(ring, t, ShareStream::PermutationMask { attempt }, &order)?;
    let prime = primes.primes()[rng.gen_range(0..primes.len())];
    let masked = mask_prime(prime, &hash_to_unit(t, p), &share, p);
    Ok(SenderDraw { prime, masked })
}

/// What the router sees in one attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttemptView {
    pub attempt: u32,
    /// Masked values in sender order.
    pub masked: Vec<BigUint>,
    pub product: BigUint,
    /// The published sorted list, or `None` after a collision.
    pub published: Option<Vec<u64>>,
}

/// Result of a full run of the retry loop.
#[derive(Clone, Debug)]
pub struct PermutationRun {
    pub assignments: Vec<PermutationAssignment>,
    pub router_view: Vec<AttemptView>,
}

impl PermutationRun {
    pub fn attempts(&self) -> u32 {
        self.router_view.len() as u32
    }

    /// `π` as a vector: `positions()[i] = π(i)`.
    pub fn positions(&self) -> Vec<usize> {
        self.assignments.iter().map(|a| a.position).collect()
    }
}

/// Runs attempts until the chosen primes are distinct.
///
/// `rngs[i]` is sender `i`'s private randomness.
pub fn generate_permutation<R: RngCore>(
    params: &DhParams,
    primes: &PrimeList,
    rings: &[PairwiseKeyRing],
    t: Epoch,
    rngs: &mut [R],
) -> Result<PermutationRun> {
    let n = rings.len();
    primes.check_capacity(n, params.p())?;
    let mut router_view = Vec::new();
    for attempt in 0..MAX_ATTEMPTS {
        let draws = rings
            .iter()
            .zip(rngs.iter_mut())
            .map(|(ring, rng)| sender_draw(params, primes, ring, t, attempt, rng))
            .collect::<Result<Vec<_>>>()?;
        let masked: Vec<BigUint> = draws.iter().map(|d| d.masked.clone()).collect();
        let product = unmask_product(&masked, params.p());
        match factor_sorted(&product, primes, n)? {
            Factorization::Collision => router_view.push(AttemptView {
                attempt,
                masked,
                product,
                published: None,
            }),
            Factorization::Sorted(sorted) => {
                let assignments = draws
                    .iter()
                    .enumerate()
                    .map(|(owner, d)| {
                        Ok(PermutationAssignment {
                            owner,
                            my_prime: d.prime,
                            position: my_position(&sorted, d.prime)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                router_view.push(AttemptView {
                    attempt,
                    masked,
                    product,
                    published: Some(sorted),
                });
                return Ok(PermutationRun {
                    assignments,
                    router_view,
                });
            }
        }
    }
    Err(Error::PermutationRetriesExhausted(MAX_ATTEMPTS))
}

/// Exact integer product, used by tests and the acceptance harness.
pub fn integer_product(primes: impl IntoIterator<Item = u64>) -> BigUint {
    primes.into_iter().map(BigUint::from).product()
}

/// Converts a small residue back to `u64` when it fits.
pub fn residue_to_u64(x: &BigUint) -> Option<u64> {
    x.to_u64()
}
