//! Burst-mode BPSK link simulator for comparing preamble families
//! (CAZAC, Golay complementary, Zadoff-Chu) on an AWGN channel with carrier
//! and timing impairments.
//!
//! The pipeline is
//!
//! ```text
//! preamble ─► txchain ─► channel ─► rxsync ─► harness (Pb, BER, CSV)
//! ```
//!
//! See the `examples/` directory of this crate for one runnable program per
//! stage and `gcibc --help` for the command-line front end.

pub mod channel;
pub mod cli;
pub mod dsp;
pub mod error;
pub mod harness;
pub mod preamble;
pub mod rxsync;
pub mod signal;
pub mod txchain;

pub use error::{Error, Result};
