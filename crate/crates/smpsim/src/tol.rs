//! Numeric tolerances used throughout the crate.
//!
//! All arithmetic is double precision. The identities checked here are exact
//! in the underlying algebra; the constants below only absorb floating-point
//! rounding, so they are deliberately tight.

/// Tolerance for operator identities (Hermiticity, completeness, trace-1,
/// idempotence, distribution normalization).
pub const IDENTITY_TOL: f64 = 1e-9;

/// Slack below zero allowed for eigenvalues of nominally PSD operators.
pub const PSD_SLACK: f64 = 1e-10;

/// Branch probabilities below this are treated as degenerate: the branch
/// keeps its exact probability but no post-state is produced.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Tolerance for identities that hold entrywise up to a couple of ulps
/// (tensor/partial-trace round trips, dual-route overlap computations).
pub const EXACT_TOL: f64 = 1e-12;

/// Frobenius tolerance for eigendecomposition reconstruction, which
/// accumulates O(d) rounding steps.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Dilated and layered measurement decompositions must reproduce source
/// statistics to this tolerance.
pub const SIMULATION_TOL: f64 = 1e-10;

/// Default cap on total entries of a single dense matrix (2^20).
pub const DEFAULT_ENTRY_CAP: usize = 1 << 20;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::assertions_on_constants)]
    fn tolerance_ordering() {
        assert!(DEGENERACY_EPS < PSD_SLACK);
        assert!(PSD_SLACK < IDENTITY_TOL);
        assert!(SIMULATION_TOL < IDENTITY_TOL);
        assert!(IDENTITY_TOL < RECONSTRUCTION_TOL);
    }
}
