//! Pairwise Diffie–Hellman agreement over a safe-prime group.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::cprf::{PairwiseKeyRing, PrfKey};
use crate::error::{Error, Result};

/// 2^511 + 1299, the smallest safe prime above 2^511.
const DESK_PRIME_HEX: &str = "80000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000513";

/// The 2048-bit MODP group of RFC 3526 (group 14).
const PRODUCTION_PRIME_HEX: &str = concat!(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74",
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437",
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED",
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05",
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB",
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B",
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718",
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
);

/// Which built-in group to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DhProfile {
    /// 512-bit safe prime: fast enough for simulations with up to 32 senders.
    #[default]
    Desk,
    /// 2048-bit safe prime.
    Production,
}

impl DhProfile {
    pub fn params(self) -> DhParams {
        match self {
            DhProfile::Desk => DhParams::desk(),
            DhProfile::Production => DhParams::production(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DhProfile::Desk => "desk",
            DhProfile::Production => "production",
        }
    }
}

impl std::str::FromStr for DhProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(DhProfile::Desk),
            "production" => Ok(DhProfile::Production),
            _ => Err(Error::InvalidDhParams("unknown profile")),
        }
    }
}

/// A prime `p` and a generator `a` of a large-prime-order subgroup of ℤ_p^×.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DhParams {
    p: BigUint,
    generator: BigUint,
    byte_len: usize,
}

impl DhParams {
    /// Validates `p` as a probable prime and `a ∈ [2, p − 2]`.
    pub fn new(p: BigUint, generator: BigUint) -> Result<Self> {
        if p < BigUint::from(5u32) || !is_probable_prime(&p) {
            return Err(Error::InvalidDhParams("p is not prime"));
        }
        if generator < BigUint::from(2u32) || generator > &p - 2u32 {
            return Err(Error::InvalidDhParams("generator outside [2, p - 2]"));
        }
        Ok(Self::from_trusted(p, generator))
    }

    fn from_trusted(p: BigUint, generator: BigUint) -> Self {
        let byte_len = p.bits().div_ceil(8) as usize;
        DhParams { p, generator, byte_len }
    }

    pub fn desk() -> Self {
        let p = BigUint::parse_bytes(DESK_PRIME_HEX.as_bytes(), 16).expect("valid hex");
        // p ≡ 3 (mod 8), so 2 is a non-residue; 4 generates the order-(p−1)/2 subgroup.
        Self::from_trusted(p, BigUint::from(4u32))
    }

    pub fn production() -> Self {
        let p = BigUint::parse_bytes(PRODUCTION_PRIME_HEX.as_bytes(), 16).expect("valid hex");
        Self::from_trusted(p, BigUint::from(2u32))
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn generator(&self) -> &BigUint {
        &self.generator
    }

    /// Wire width of integers mod p.
    pub fn byte_len(&self) -> usize {
        self.byte_len
    }

    /// Fixed-width big-endian encoding of a residue.
    pub fn encode(&self, x: &BigUint) -> Vec<u8> {
        let raw = x.to_bytes_be();
        let mut out = vec![0u8; self.byte_len.saturating_sub(raw.len())];
        out.extend_from_slice(&raw);
        out
    }

    pub fn decode(&self, bytes: &[u8]) -> Result<BigUint> {
        if bytes.len() != self.byte_len {
            return Err(Error::Malformed(format!(
                "residue of {} bytes, expected {}",
                bytes.len(),
                self.byte_len
            )));
        }
        let x = BigUint::from_bytes_be(bytes);
        if x >= self.p {
            return Err(Error::Malformed("residue not reduced mod p".into()));
        }
        Ok(x)
    }

    /// Uniform integer in `[low, high]` by rejection sampling.
    pub(crate) fn sample_range(rng: &mut impl RngCore, low: &BigUint, high: &BigUint) -> BigUint {
        let span = high - low + 1u32;
        let bits = span.bits();
        let nbytes = bits.div_ceil(8) as usize;
        let excess = nbytes as u64 * 8 - bits;
        let mut buf = vec![0u8; nbytes];
        loop {
            rng.fill_bytes(&mut buf);
            buf[0] &= 0xffu8 >> excess;
            let x = BigUint::from_bytes_be(&buf);
            if x < span {
                return low + x;
            }
        }
    }
}

/// A sender's DH private and public key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DhKeyPair {
    private: BigUint,
    public: BigUint,
}

impl DhKeyPair {
    pub fn from_private(params: &DhParams, private: BigUint) -> Self {
        let public = params.generator.modpow(&private, &params.p);
        DhKeyPair { private, public }
    }

    pub fn private(&self) -> &BigUint {
        &self.private
    }

    pub fn public(&self) -> &BigUint {
        &self.public
    }
}

/// Private key uniform in `[1, p − 2]`.
pub fn dh_keygen(params: &DhParams, rng: &mut impl RngCore) -> DhKeyPair {
    let private = DhParams::sample_range(rng, &BigUint::one(), &(&params.p - 2u32));
    DhKeyPair::from_private(params, private)
}

/// The canonical encoding of `peer_public^private mod p`.
pub fn dh_shared(params: &DhParams, private: &BigUint, peer_public: &BigUint) -> Result<Vec<u8>> {
    let p_minus_one = &params.p - 1u32;
    if peer_public <= &BigUint::one() || peer_public >= &p_minus_one {
        return Err(Error::DegeneratePublicKey);
    }
    Ok(params.encode(&peer_public.modpow(private, &params.p)))
}

/// Hashes a DH shared secret to a PRF key.
pub fn derive_prf_key(shared: &[u8]) -> PrfKey {
    let mut h = Sha256::new();
    h.update(b"anonroute/pairwise-key");
    h.update(shared);
    h.finalize().into()
}

/// Completes sender `owner`'s ring from its private key and every peer's public key.
pub fn ring_from_exchange(
    params: &DhParams,
    owner: usize,
    own: &DhKeyPair,
    publics: &[BigUint],
) -> Result<PairwiseKeyRing> {
    let mut ring = PairwiseKeyRing::new(owner, publics.len());
    for (j, public) in publics.iter().enumerate() {
        if j == owner {
            continue;
        }
        let shared = dh_shared(params, own.private(), public)?;
        ring.insert(j, derive_prf_key(&shared));
    }
    Ok(ring)
}

/// Miller–Rabin with the first twenty prime bases.
pub fn is_probable_prime(n: &BigUint) -> bool {
    const BASES: [u32; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for b in BASES {
        let b = BigUint::from(b);
        if n == &b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    'bases: for b in BASES {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'bases;
            }
        }
        return false;
    }
    true
}
