//! BLS12-381 group elements with fixed-width wire encodings.
//!
//! The three groups are written multiplicatively in docs (`g^x`, products of
//! pairings) but the underlying library uses additive notation, so `g^x` is
//! `g * x` and a product of pairings is a sum of `Gt` values.

use std::hash::{Hash, Hasher};

use blstrs::{Bls12, G1Affine, G1Projective, G2Affine, G2Prepared, G2Projective, Gt};
use group::{prime::PrimeCurveAffine, Curve, Group};
use pairing::{MillerLoopResult, MultiMillerLoop};

use super::Scalar;
use crate::error::{Error, Result};

/// Encoded size of a 𝔾₁ element: one format byte plus the 48-byte compressed point.
pub const G1_BYTES: usize = 49;
/// Encoded size of a 𝔾₂ element: one format byte plus the 96-byte compressed point.
pub const G2_BYTES: usize = 97;
/// Encoded size of a 𝔾_T element: twelve uncompressed base-field coordinates.
pub const GT_BYTES: usize = 576;

/// Domain separation tag for hashing into 𝔾₂ (RFC 9380 random-oracle suite).
pub const HASH_TO_G2_DST: &[u8] = b"ANONROUTE-V01-CS01-with-BLS12381G2_XMD:SHA-256_SSWU_RO_";

const PREFIX_IDENTITY: u8 = 0x00;
const PREFIX_POINT: u8 = 0x02;

// Flag bits of the zcash compressed point format.
const FLAG_INFINITY: u8 = 0x40;
const FLAG_SORT: u8 = 0x20;

fn prefix_for(first_byte: u8) -> u8 {
    if first_byte & FLAG_INFINITY != 0 {
        PREFIX_IDENTITY
    } else {
        PREFIX_POINT | ((first_byte & FLAG_SORT) >> 5)
    }
}

fn check_prefix(group: &'static str, prefix: u8, first_byte: u8) -> Result<()> {
    if prefix != PREFIX_IDENTITY && prefix & !1 != PREFIX_POINT {
        return Err(Error::InvalidElement {
            group,
            reason: "unknown format prefix",
        });
    }
    if prefix != prefix_for(first_byte) {
        return Err(Error::InvalidElement {
            group,
            reason: "format prefix disagrees with point flags",
        });
    }
    Ok(())
}

/// An element of 𝔾₁.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct G1Elem(G1Affine);

impl G1Elem {
    pub fn generator() -> Self {
        G1Elem(G1Affine::generator())
    }

    pub fn identity() -> Self {
        G1Elem(G1Affine::identity())
    }

    /// `g1^x`.
    pub fn encode_scalar(x: &Scalar) -> Self {
        G1Elem((G1Projective::generator() * x).to_affine())
    }

    pub fn mul(&self, x: &Scalar) -> Self {
        G1Elem((self.0 * x).to_affine())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity().into()
    }

    pub fn as_affine(&self) -> &G1Affine {
        &self.0
    }

    pub fn to_bytes(&self) -> [u8; G1_BYTES] {
        let compressed = self.0.to_compressed();
        let mut out = [0u8; G1_BYTES];
        out[0] = prefix_for(compressed[0]);
        out[1..].copy_from_slice(&compressed);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bytes: &[u8; G1_BYTES] = bytes.try_into().map_err(|_| Error::InvalidElement {
            group: "G1",
            reason: "wrong length",
        })?;
        check_prefix("G1", bytes[0], bytes[1])?;
        let mut compressed = [0u8; G1_BYTES - 1];
        compressed.copy_from_slice(&bytes[1..]);
        Option::from(G1Affine::from_compressed(&compressed))
            .map(G1Elem)
            .ok_or(Error::InvalidElement {
                group: "G1",
                reason: "not a point of the prime-order subgroup",
            })
    }
}

impl From<G1Projective> for G1Elem {
    fn from(p: G1Projective) -> Self {
        G1Elem(p.to_affine())
    }
}

/// An element of 𝔾₂.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct G2Elem(G2Affine);

impl G2Elem {
    pub fn generator() -> Self {
        G2Elem(G2Affine::generator())
    }

    pub fn identity() -> Self {
        G2Elem(G2Affine::identity())
    }

    /// `g2^x`.
    pub fn encode_scalar(x: &Scalar) -> Self {
        G2Elem((G2Projective::generator() * x).to_affine())
    }

    pub fn mul(&self, x: &Scalar) -> Self {
        G2Elem((self.0 * x).to_affine())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity().into()
    }

    pub fn is_torsion_free(&self) -> bool {
        self.0.is_torsion_free().into()
    }

    pub fn as_affine(&self) -> &G2Affine {
        &self.0
    }

    /// Line coefficients for repeated Miller loops against this point.
    pub fn prepare(&self) -> G2Prepared {
        G2Prepared::from(self.0)
    }

    pub fn to_bytes(&self) -> [u8; G2_BYTES] {
        let compressed = self.0.to_compressed();
        let mut out = [0u8; G2_BYTES];
        out[0] = prefix_for(compressed[0]);
        out[1..].copy_from_slice(&compressed);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bytes: &[u8; G2_BYTES] = bytes.try_into().map_err(|_| Error::InvalidElement {
            group: "G2",
            reason: "wrong length",
        })?;
        check_prefix("G2", bytes[0], bytes[1])?;
        let mut compressed = [0u8; G2_BYTES - 1];
        compressed.copy_from_slice(&bytes[1..]);
        Option::from(G2Affine::from_compressed(&compressed))
            .map(G2Elem)
            .ok_or(Error::InvalidElement {
                group: "G2",
                reason: "not a point of the prime-order subgroup",
            })
    }
}

impl From<G2Projective> for G2Elem {
    fn from(p: G2Projective) -> Self {
        G2Elem(p.to_affine())
    }
}

/// An element of the target group 𝔾_T.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GtElem(Gt);

impl GtElem {
    /// `gT = e(g1, g2)`.
    pub fn generator() -> Self {
        GtElem(Gt::generator())
    }

    pub fn identity() -> Self {
        GtElem(Gt::identity())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity().into()
    }

    /// `self^x`.
    pub fn pow(&self, x: &Scalar) -> Self {
        GtElem(self.0 * x)
    }

    /// Group operation (`self · other`).
    pub fn combine(&self, other: &Self) -> Self {
        GtElem(self.0 + other.0)
    }

    pub fn invert(&self) -> Self {
        GtElem(-self.0)
    }

    pub fn to_bytes(&self) -> [u8; GT_BYTES] {
        let raw = gt_to_raw(&self.0);
        let mut out = [0u8; GT_BYTES];
        for (chunk, c) in out.chunks_exact_mut(48).zip(fp12_coords(&raw)) {
            let chunk: &mut [u8; 48] = chunk.try_into().expect("48-byte chunk");
            // SAFETY: both pointers refer to live, correctly sized values.
            unsafe { blst::blst_bendian_from_fp(chunk.as_mut_ptr(), c) };
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let invalid = |reason| Error::InvalidElement { group: "GT", reason };
        if bytes.len() != GT_BYTES {
            return Err(invalid("wrong length"));
        }
        let mut raw = blst::blst_fp12::default();
        let slots = raw
            .fp6
            .iter_mut()
            .flat_map(|c6| c6.fp2.iter_mut())
            .flat_map(|c2| c2.fp.iter_mut());
        for (slot, chunk) in slots.zip(bytes.chunks_exact(48)) {
            // SAFETY: `chunk` holds 48 readable bytes and `slot` is a live field element.
            unsafe { blst::blst_fp_from_bendian(slot, chunk.as_ptr()) };
        }
        let elem = GtElem(raw_to_gt(raw));
        // Unreduced coordinates do not survive a re-encoding.
        if elem.to_bytes()[..] != bytes[..] {
            return Err(invalid("coordinate not reduced"));
        }
        // SAFETY: `raw` is a fully initialized field element owned by this frame.
        if !unsafe { blst::blst_fp12_in_group(&raw) } {
            return Err(invalid("not in the order-q subgroup"));
        }
        Ok(elem)
    }
}

// `Gt` and its inner `Fp12` are both `repr(transparent)` over `blst_fp12`.
const _: () = assert!(std::mem::size_of::<Gt>() == std::mem::size_of::<blst::blst_fp12>());

fn gt_to_raw(x: &Gt) -> blst::blst_fp12 {
    // SAFETY: identical layout, see the assertion above.
    unsafe { std::mem::transmute::<Gt, blst::blst_fp12>(*x) }
}

fn raw_to_gt(x: blst::blst_fp12) -> Gt {
    // SAFETY: identical layout, see the assertion above.
    unsafe { std::mem::transmute::<blst::blst_fp12, Gt>(x) }
}

fn fp12_coords(raw: &blst::blst_fp12) -> impl Iterator<Item = &blst::blst_fp> {
    raw.fp6.iter().flat_map(|c6| c6.fp2.iter()).flat_map(|c2| c2.fp.iter())
}

impl Hash for GtElem {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.to_bytes().hash(state);
    }
}

/// `e(a, b)`.
pub fn pair(a: &G1Elem, b: &G2Elem) -> GtElem {
    GtElem(blstrs::pairing(&a.0, &b.0))
}

/// Product of pairings over pre-processed 𝔾₂ points, with one final exponentiation.
pub fn pairing_product(terms: &[(&G1Affine, &G2Prepared)]) -> GtElem {
    GtElem(Bls12::multi_miller_loop(terms).final_exponentiation())
}

/// `Π_k b_k^{c_k}` over 𝔾₂.
///
/// An empty list yields the identity.
pub fn g2_linear_combination(terms: &[(G2Elem, Scalar)]) -> G2Elem {
    match terms {
        [] => G2Elem::identity(),
        [(p, c)] => p.mul(c),
        _ => {
            let points: Vec<G2Projective> = terms.iter().map(|(p, _)| p.0.into()).collect();
            let coeffs: Vec<Scalar> = terms.iter().map(|(_, c)| *c).collect();
            G2Projective::multi_exp(&points, &coeffs).into()
        }
    }
}

/// Hashes bytes onto the prime-order subgroup of 𝔾₂ (SSWU, random-oracle variant).
pub fn hash_to_g2(input: &[u8]) -> G2Elem {
    G2Projective::hash_to_curve(input, HASH_TO_G2_DST, &[]).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ff::Field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(0x6f1)
    }

    #[test]
    fn generator_pairing_is_gt_generator() {
        assert_eq!(pair(&G1Elem::generator(), &G2Elem::generator()), GtElem::generator());
    }

    #[test]
    fn small_exponent_bilinearity() {
        let lhs = pair(
            &G1Elem::encode_scalar(&Scalar::from(2u64)),
            &G2Elem::encode_scalar(&Scalar::from(3u64)),
        );
        assert_eq!(lhs, GtElem::generator().pow(&Scalar::from(6u64)));
    }

    #[test]
    fn bilinearity_random() {
        let mut rng = rng();
        for _ in 0..100 {
            let x = Scalar::random(&mut rng);
            let y = Scalar::random(&mut rng);
            let a = pair(&G1Elem::encode_scalar(&x), &G2Elem::encode_scalar(&y));
            let b = pair(&G1Elem::encode_scalar(&y), &G2Elem::encode_scalar(&x));
            assert_eq!(a, b);
            assert_eq!(a, GtElem::generator().pow(&(x * y)));
        }
    }

    #[test]
    fn encoding_sizes() {
        assert_eq!(G1Elem::generator().to_bytes().len(), 49);
        assert_eq!(G2Elem::generator().to_bytes().len(), 97);
        assert_eq!(GtElem::generator().to_bytes().len(), GT_BYTES);
    }

    #[test]
    fn identity_encodings_round_trip() {
        let g1 = G1Elem::identity().to_bytes();
        assert_eq!(g1[0], PREFIX_IDENTITY);
        assert_eq!(G1Elem::from_bytes(&g1).unwrap(), G1Elem::identity());
        let g2 = G2Elem::identity().to_bytes();
        assert_eq!(G2Elem::from_bytes(&g2).unwrap(), G2Elem::identity());
        let gt = GtElem::identity().to_bytes();
        assert_eq!(GtElem::from_bytes(&gt).unwrap(), GtElem::identity());
    }

    #[test]
    fn round_trips_random() {
        let mut rng = rng();
        for _ in 0..20 {
            let x = Scalar::random(&mut rng);
            let a = G1Elem::encode_scalar(&x);
            assert_eq!(G1Elem::from_bytes(&a.to_bytes()).unwrap(), a);
            let b = G2Elem::encode_scalar(&x);
            assert_eq!(G2Elem::from_bytes(&b.to_bytes()).unwrap(), b);
            let t = GtElem::generator().pow(&x);
            assert_eq!(GtElem::from_bytes(&t.to_bytes()).unwrap(), t);
        }
    }

    #[test]
    fn rejects_bad_prefix_and_garbage() {
        let mut bytes = G1Elem::generator().to_bytes();
        bytes[0] ^= 1;
        assert!(G1Elem::from_bytes(&bytes).is_err());
        bytes[0] = 0x07;
        assert!(G1Elem::from_bytes(&bytes).is_err());
        assert!(G1Elem::from_bytes(&[0u8; 48]).is_err());

        let mut g2 = G2Elem::generator().to_bytes();
        g2[10] ^= 0xff;
        assert!(G2Elem::from_bytes(&g2).is_err());

        // 1 + 1 in the first coordinate is a field element but almost surely not in 𝔾_T.
        let mut gt = GtElem::generator().to_bytes();
        gt[47] ^= 1;
        assert!(GtElem::from_bytes(&gt).is_err());
        assert!(GtElem::from_bytes(&[0xffu8; GT_BYTES]).is_err());
    }

    #[test]
    fn linear_combination_matches_exponents() {
        let mut rng = rng();
        assert_eq!(
            g2_linear_combination(&[(G2Elem::generator(), Scalar::ONE)]),
            G2Elem::generator()
        );
        let mut terms = Vec::new();
        let mut expected = Scalar::ZERO;
        for _ in 0..8 {
            let base = Scalar::random(&mut rng);
            let coeff = Scalar::random(&mut rng);
            expected += base * coeff;
            terms.push((G2Elem::encode_scalar(&base), coeff));
        }
        assert_eq!(g2_linear_combination(&terms), G2Elem::encode_scalar(&expected));
        let (a, b) = (Scalar::from(5u64), Scalar::from(7u64));
        let two = [
            (G2Elem::encode_scalar(&a), Scalar::from(3u64)),
            (G2Elem::encode_scalar(&b), Scalar::from(4u64)),
        ];
        assert_eq!(g2_linear_combination(&two), G2Elem::encode_scalar(&Scalar::from(43u64)));
    }

    #[test]
    fn hash_to_g2_is_deterministic_and_in_subgroup() {
        let a = hash_to_g2(b"abc");
        assert_eq!(a, hash_to_g2(b"abc"));
        assert_ne!(a, hash_to_g2(b"abd"));
        for msg in [&b""[..], b"abc", b"a512_aaaa", &[0u8; 64]] {
            let p = hash_to_g2(msg);
            assert!(p.is_torsion_free());
            assert!(!p.is_identity());
        }
    }

    // RFC 9380, appendix J.10.1: BLS12381G2_XMD:SHA-256_SSWU_RO_, msg = "".
    #[test]
    fn hash_to_g2_rfc9380_vector() {
        let p = G2Projective::hash_to_curve(
            b"",
            b"QUUX-V01-CS02-with-BLS12381G2_XMD:SHA-256_SSWU_RO_",
            &[],
        )
        .to_affine();
        let x = p.x();
        assert_eq!(
            hex(&x.c0().to_bytes_be()),
            "0141ebfbdca40eb85b87142e130ab689c673cf60f1a3e98d69335266f30d9b8d4ac44c1038e9dcdd5393faf5c41fb78a"
        );
        assert_eq!(
            hex(&x.c1().to_bytes_be()),
            "05cb8437535e20ecffaef7752baddf98034139c38452458baeefab379ba13dff5bf5dd71b72418717047f5b0f37da03d"
        );
    }

    fn hex(bytes: &[u8]) -> String {
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}
