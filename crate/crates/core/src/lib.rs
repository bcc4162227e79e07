//! Speech intelligibility modification and objective evaluation.
//!
//! The processing chain is spectral shaping followed by dynamic range
//! compression ([`ssdrc`]). The evaluation side generates maskers and mixes
//! them at exact SNRs ([`noise`]), scores intelligibility as an information
//! rate between clean and degraded envelopes ([`siib`]), and drives
//! corpus-level condition grids and transcript scoring ([`eval`]).

pub mod audio;
pub mod eval;
pub mod noise;
pub mod siib;
pub mod ssdrc;

pub use audio::{AudioBuffer, CANONICAL_RATE};
