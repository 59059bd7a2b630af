use thiserror::Error;

/// Errors raised by the protocol building blocks.
///
/// Sender and slot indices are 0-based throughout.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid {group} encoding: {reason}")]
    InvalidElement { group: &'static str, reason: &'static str },

    #[error("no discrete log below {bound}")]
    DlogNotFound { bound: u64 },

    #[error("discrete-log base is the identity")]
    IdentityDlogBase,

    #[error("key ring of sender {owner} is missing the key shared with {missing}")]
    IncompleteRing { owner: usize, missing: usize },

    #[error("modulus must be at least 2")]
    ModulusTooSmall,

    #[error("invalid Diffie-Hellman parameters: {0}")]
    InvalidDhParams(&'static str),

    #[error("degenerate Diffie-Hellman public key")]
    DegeneratePublicKey,

    #[error("prime list cannot support {n} senders: product of the {n} largest primes needs {needed_bits} bits, modulus has {modulus_bits}")]
    PrimeListTooLarge {
        n: usize,
        needed_bits: u64,
        modulus_bits: u64,
    },

    #[error("product has a factor outside the public prime list")]
    UnfactorableResidue,

    #[error("expected {expected} prime factors, found {found}")]
    FactorCountMismatch { expected: usize, found: usize },

    #[error("prime {0} not found in the sorted list")]
    PrimeNotFound(u64),

    #[error("permutation generation did not converge within {0} attempts")]
    PermutationRetriesExhausted(u32),

    #[error("reveal of sender {0} does not match its commitment")]
    RevealMismatch(usize),

    #[error("sender {0} did not reveal")]
    MissingReveal(usize),

    #[error("index {index} out of range for {n} senders")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("token row of sender {sender} for slot {slot} is missing")]
    MissingTokenRow { sender: usize, slot: usize },

    #[error("message {value} does not fit in {bits} bits")]
    MessageOutOfRange { value: u64, bits: u32 },

    #[error("message width must be between 1 and {max} bits, got {got}")]
    InvalidMessageWidth { got: u32, max: u32 },

    #[error("slot {0} has the identity as its decoding base")]
    IdentityBase(usize),

    #[error("expected one ciphertext per sender ({expected}), got {got}")]
    CiphertextCount { expected: usize, got: usize },

    #[error("ciphertext from sender {sender} is labeled epoch {found}, router expected {expected}")]
    EpochMismatch { sender: usize, expected: u64, found: u64 },

    #[error("epoch {epoch} is not after the last routed epoch {last}")]
    StaleEpoch { epoch: u64, last: u64 },

    #[error("ciphertext from sender {0} was already routed in an earlier epoch")]
    ReplayedCiphertext(usize),

    #[error("slot {slot} did not decode below 2^{bits}")]
    DlogOutOfRange { slot: usize, bits: u32 },

    #[error("corrupt set of size {size} exceeds n - 2 = {limit}")]
    CorruptSetTooLarge { size: usize, limit: usize },

    #[error("xi must be nonzero")]
    ZeroXi,

    #[error("malformed wire data: {0}")]
    Malformed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
