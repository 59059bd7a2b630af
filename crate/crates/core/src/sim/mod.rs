//! Deterministic in-process simulation of the full protocol.
//!
//! Rounds are synchronous and delivery is reliable and in order. All
//! randomness comes from one seeded root generator forked per sender, so a
//! configuration fully determines the transcript.

mod config;
mod framing;
mod run;
mod wire;

pub use config::{Fault, SimConfig};
pub use framing::{block_count, frame, unframe, MAX_PAYLOAD};
pub use run::{corruption_view, run_setup, AdversaryView, SenderState, SimError, Simulation};
pub use wire::{tag, Endpoint, Message, Record, Transcript};
