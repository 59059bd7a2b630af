//! Sender-side ciphertexts `ct_{i,t} = ⟦C_i·(K_i(t), α, α′, 0, 0, 0, x, 0)ᵀ⟧₁`.

use ff::Field;
use rand::RngCore;

use crate::algebra::{G1Elem, G1Vec8, ScalarVec8, Scalar, DIM, G1_BYTES};
use crate::cprf::Epoch;
use crate::error::{Error, Result};
use crate::token::{slot, SenderSecrets};

/// Widest supported message, in bits.
pub const MAX_MESSAGE_BITS: u32 = 24;

/// Default message width.
pub const DEFAULT_MESSAGE_BITS: u32 = 8;

/// Element payload of one ciphertext: eight 𝔾₁ encodings.
pub const CIPHERTEXT_PAYLOAD_BYTES: usize = DIM * G1_BYTES;

pub fn check_width(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_MESSAGE_BITS {
        return Err(Error::InvalidMessageWidth {
            got: bits,
            max: MAX_MESSAGE_BITS,
        });
    }
    Ok(())
}

/// A sender's ciphertext for one epoch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub sender: usize,
    pub epoch: Epoch,
    pub entries: G1Vec8,
}

impl Ciphertext {
    pub fn payload(&self) -> [u8; CIPHERTEXT_PAYLOAD_BYTES] {
        let mut out = [0u8; CIPHERTEXT_PAYLOAD_BYTES];
        for (chunk, e) in out.chunks_exact_mut(G1_BYTES).zip(self.entries.0.iter()) {
            chunk.copy_from_slice(&e.to_bytes());
        }
        out
    }

    pub fn from_payload(sender: usize, epoch: Epoch, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != CIPHERTEXT_PAYLOAD_BYTES {
            return Err(Error::Malformed(format!("ciphertext payload of {} bytes", bytes.len())));
        }
        let mut entries = [G1Elem::identity(); DIM];
        for (e, chunk) in entries.iter_mut().zip(bytes.chunks_exact(G1_BYTES)) {
            *e = G1Elem::from_bytes(chunk)?;
        }
        Ok(Ciphertext {
            sender,
            epoch,
            entries: G1Vec8(entries),
        })
    }
}

/// Encryption with caller-chosen `α, α′`.
pub fn encrypt_with(
    secrets: &SenderSecrets,
    share: &Scalar,
    x: u64,
    t: Epoch,
    bits: u32,
    alpha: Scalar,
    alpha_prime: Scalar,
) -> Result<Ciphertext> {
    check_width(bits)?;
    if x >> bits != 0 {
        return Err(Error::MessageOutOfRange { value: x, bits });
    }
    let mut v = ScalarVec8::zero();
    v[slot::RHO] = *share;
    v[slot::ALPHA] = alpha;
    v[slot::ALPHA_PRIME] = alpha_prime;
    v[slot::MESSAGE] = Scalar::from(x);
    Ok(Ciphertext {
        sender: secrets.owner(),
        epoch: t,
        entries: secrets.c().mul_column(&v).encode_g1(),
    })
}

/// Encrypts a `bits`-wide message under the epoch share `K_i(t)` mod q.
pub fn encrypt(
    secrets: &SenderSecrets,
    share: &Scalar,
    x: u64,
    t: Epoch,
    bits: u32,
    rng: &mut impl RngCore,
) -> Result<Ciphertext> {
    let alpha = Scalar::random(&mut *rng);
    let alpha_prime = Scalar::random(&mut *rng);
    encrypt_with(secrets, share, x, t, bits, alpha, alpha_prime)
}

/// `ct_{i,0}`: the encryption of 1 at epoch 0.
pub fn initial_ciphertext(secrets: &SenderSecrets, share: &Scalar, rng: &mut impl RngCore) -> Ciphertext {
    encrypt(secrets, share, 1, Epoch::INITIAL, 1, rng).expect("1 fits in one bit")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{inner_pairing, G2Elem, GtElem, MatrixQ};
    use crate::token::{gen_sender_secrets, make_token_row};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn identity_secrets() -> SenderSecrets {
        SenderSecrets::from_parts(
            0,
            Scalar::from(2u64),
            MatrixQ::identity(),
            MatrixQ::identity(),
            vec![Scalar::ONE],
            vec![Scalar::ONE],
            0,
        )
    }

    #[test]
    fn identity_matrix_fixture() {
        let ct = encrypt_with(&identity_secrets(), &Scalar::ZERO, 3, Epoch(1), 8, Scalar::ZERO, Scalar::ZERO).unwrap();
        let mut v = ScalarVec8::zero();
        v[slot::MESSAGE] = Scalar::from(3u64);
        assert_eq!(ct.entries, v.encode_g1());
    }

    #[test]
    fn payload_is_392_bytes_and_round_trips() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = gen_sender_secrets(&mut rng, 2, 3, 0).unwrap();
        let ct = encrypt(&s, &Scalar::from(9u64), 200, Epoch(4), 8, &mut rng).unwrap();
        let bytes = ct.payload();
        assert_eq!(bytes.len(), 392);
        assert_eq!(CIPHERTEXT_PAYLOAD_BYTES, 392);
        assert_eq!(Ciphertext::from_payload(2, Epoch(4), &bytes).unwrap(), ct);
        assert!(Ciphertext::from_payload(2, Epoch(4), &bytes[1..]).is_err());
    }

    #[test]
    fn width_contract() {
        let s = identity_secrets();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        assert!(encrypt(&s, &Scalar::ZERO, 255, Epoch(1), 8, &mut rng).is_ok());
        assert_eq!(
            encrypt(&s, &Scalar::ZERO, 256, Epoch(1), 8, &mut rng).unwrap_err(),
            Error::MessageOutOfRange { value: 256, bits: 8 }
        );
        assert!(matches!(
            encrypt(&s, &Scalar::ZERO, 0, Epoch(1), 0, &mut rng),
            Err(Error::InvalidMessageWidth { .. })
        ));
        assert!(encrypt(&s, &Scalar::ZERO, 0, Epoch(1), MAX_MESSAGE_BITS + 1, &mut rng).is_err());
    }

    #[test]
    fn initial_is_encrypt_of_one_at_zero() {
        let s = gen_sender_secrets(&mut ChaCha20Rng::seed_from_u64(3), 0, 2, 1).unwrap();
        let k = Scalar::from(77u64);
        let a = initial_ciphertext(&s, &k, &mut ChaCha20Rng::seed_from_u64(9));
        let b = encrypt(&s, &k, 1, Epoch::INITIAL, 8, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pairing_with_own_row_recovers_rho_k_plus_theta_x() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let s = gen_sender_secrets(&mut rng, 0, 3, 1).unwrap();
        let rho = Scalar::random(&mut rng);
        let k = Scalar::random(&mut rng);
        let x = 171u64;
        let ct = encrypt(&s, &k, x, Epoch(5), 8, &mut rng).unwrap();
        for j in 0..3 {
            let row = make_token_row(&s, &G2Elem::encode_scalar(&rho), j);
            let delta = if j == 1 { Scalar::ONE } else { Scalar::ZERO };
            let expected = rho * k + *s.theta() * delta * Scalar::from(x);
            assert_eq!(inner_pairing(&ct.entries, &row.0), GtElem::generator().pow(&expected));
        }
    }

    #[test]
    fn off_target_with_zero_share_is_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let s = gen_sender_secrets(&mut rng, 0, 2, 0).unwrap();
        let rho = G2Elem::encode_scalar(&Scalar::random(&mut rng));
        let ct = encrypt(&s, &Scalar::ZERO, 42, Epoch(1), 8, &mut rng).unwrap();
        assert!(inner_pairing(&ct.entries, &make_token_row(&s, &rho, 1).0).is_identity());
    }

    #[test]
    fn rerandomized_ciphertexts_pair_identically() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let s = gen_sender_secrets(&mut rng, 0, 2, 0).unwrap();
        let rho = G2Elem::encode_scalar(&Scalar::random(&mut rng));
        let k = Scalar::random(&mut rng);
        let a = encrypt(&s, &k, 5, Epoch(2), 8, &mut rng).unwrap();
        let b = encrypt(&s, &k, 5, Epoch(2), 8, &mut rng).unwrap();
        assert_ne!(a.payload(), b.payload());
        for j in 0..2 {
            let row = make_token_row(&s, &rho, j);
            assert_eq!(inner_pairing(&a.entries, &row.0), inner_pairing(&b.entries, &row.0));
        }
    }
}
