pub mod algebra;
pub mod bench;
pub mod cprf;
pub mod encryption;
pub mod experiments;
pub mod error;
pub mod key_exchange;
pub mod permutation;
pub mod rho;
pub mod router;
pub mod token;
pub mod sim;
