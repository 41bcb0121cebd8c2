//! Simultaneous-message protocols and the two-referee LOCC engine.

pub mod equality;
pub mod hidden_matching;
pub mod locc;

pub use equality::{FingerprintEq, GridCodeEq};
pub use hidden_matching::{
    matching_family, Drhm, DrhmOutputs, HmOutcome, Matching, MatchingFamily,
};
pub use locc::{
    run_locc_exact, run_locc_sampled, History, LoccProtocol, LoccSide, TranscriptDistribution,
};

use crate::fingerprints::BitString;
use crate::linalg::DensityMatrix;

/// One message of a simultaneous-message protocol.
#[derive(Debug, Clone)]
pub enum SmpMessage {
    Classical(BitString),
    Quantum(DensityMatrix),
}

impl SmpMessage {
    /// Length in bits (classical) or qubits (quantum). Quantum message
    /// dimensions must be powers of two.
    pub fn length(&self) -> usize {
        match self {
            SmpMessage::Classical(bits) => bits.len(),
            SmpMessage::Quantum(rho) => {
                debug_assert!(rho.dim().is_power_of_two());
                rho.dim().trailing_zeros() as usize
            }
        }
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, SmpMessage::Quantum(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Ket;

    #[test]
    fn message_lengths() {
        let m = SmpMessage::Classical("0110".parse().unwrap());
        assert_eq!(m.length(), 4);
        assert!(!m.is_quantum());
        let q = SmpMessage::Quantum(DensityMatrix::pure(&Ket::basis(8, 0)));
        assert_eq!(q.length(), 3);
        assert!(q.is_quantum());
    }
}
