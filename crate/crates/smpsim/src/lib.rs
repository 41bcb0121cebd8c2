//! Simulator and verification suite for quantum simultaneous-message-passing
//! (SMP) protocols whose referee is restricted to local measurements with
//! classical coordination.
//!
//! The crate has six layers:
//!
//! * [`linalg`]: dense complex operators, states, tensor structure and
//!   spectral tools, with deterministic eigen-ordering.
//! * [`fingerprints`]: error-correcting codes, fingerprint states, and
//!   SWAP-test statistics with a dual (circuit vs formula) route.
//! * [`measurements`]: POVMs, instruments with post-states, constructive
//!   bipartite measurement classes, and projective simulations of general
//!   measurements (dilation and layered decompositions).
//! * [`protocols`]: the two-referee LOCC engine plus concrete protocols:
//!   fingerprint equality, the classical codeword-grid baseline, and the
//!   hidden-matching family including its all-2-value round decomposition.
//! * [`transforms`]: protocol reductions: value tables and clamped
//!   referee simulation with worst-case error envelopes, deterministic
//!   message replacement, one-way-LOCC to hybrid, public-coin
//!   derandomization, and the sequential-measurement success floor.
//! * [`harness`]: seeded, reproducible experiments behind the `sim` CLI,
//!   emitting CSV tables, a summary, and plot data.
//!
//! Conventions shared across the crate: tensor products are left-major,
//! bit strings index position 0 as the least significant bit, and all
//! randomness flows from per-instance counter-based streams.

pub mod error;
pub mod fingerprints;
pub mod harness;
pub mod linalg;
pub mod measurements;
pub mod protocols;
pub mod rng;
pub mod sampling;
pub mod tol;
pub mod transforms;

pub use error::{Error, Result};
