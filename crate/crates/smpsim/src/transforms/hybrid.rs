//! Reduction from a one-way LOCC referee pair to a hybrid protocol: the
//! first measurement is replaced by a shared-randomness projective
//! simulation performed at the sender, whose outcome is forwarded as a
//! classical message; the second referee is unchanged.

use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;
use crate::measurements::{naimark_dilate, PmSimulation, Povm};

/// One-way LOCC protocol: RefA measures the first message with a POVM and
/// forwards the outcome; RefB measures the second message with a POVM
/// selected by that outcome. The transcript is the outcome pair.
#[derive(Debug, Clone)]
pub struct OneWayLoccProtocol {
    first: Povm,
    second: Vec<Povm>,
}

impl OneWayLoccProtocol {
    pub fn new(first: Povm, second: Vec<Povm>) -> Result<Self> {
        if second.len() != first.outcomes() {
            return Err(Error::contract(format!(
                "OneWayLoccProtocol: {} second-stage measurements for {} first outcomes",
                second.len(),
                first.outcomes()
            )));
        }
        let db = second[0].dim();
        if second.iter().any(|p| p.dim() != db) {
            return Err(Error::contract(
                "OneWayLoccProtocol: second-stage dimension mismatch",
            ));
        }
        Ok(Self { first, second })
    }

    pub fn first(&self) -> &Povm {
        &self.first
    }

    pub fn second(&self, outcome: usize) -> &Povm {
        &self.second[outcome]
    }

    pub fn first_outcomes(&self) -> usize {
        self.first.outcomes()
    }

    pub fn second_outcomes(&self) -> usize {
        self.second[0].outcomes()
    }

    /// Exact joint distribution over (first outcome, second outcome).
    pub fn joint_distribution(
        &self,
        rho_a: &DensityMatrix,
        rho_b: &DensityMatrix,
    ) -> Vec<Vec<f64>> {
        let first_probs = self.first.probabilities(rho_a);
        first_probs
            .iter()
            .enumerate()
            .map(|(i, &pi)| {
                self.second[i]
                    .probabilities(rho_b)
                    .iter()
                    .map(|pj| pi * pj)
                    .collect()
            })
            .collect()
    }
}

/// The transformed protocol: the sender performs the projective simulation
/// locally on its message extended by the fixed ancilla and sends the
/// branch outcome classically; the referee recovers the original first
/// outcome by postprocessing (it knows the branch index from shared
/// randomness) and runs the unchanged second measurement.
#[derive(Debug, Clone)]
pub struct HybridProtocol {
    simulation: PmSimulation,
    second: Vec<Povm>,
}

impl HybridProtocol {
    pub fn simulation(&self) -> &PmSimulation {
        &self.simulation
    }

    /// Classical bits in the sender's message: the reported branch outcome
    /// plus the branch index.
    pub fn outcome_bits(&self) -> usize {
        self.simulation.outcome_bits()
    }

    pub fn branch_bits(&self) -> usize {
        self.simulation.branch_bits()
    }

    pub fn classical_bits(&self) -> usize {
        self.outcome_bits() + self.branch_bits()
    }

    /// Exact joint distribution over (recovered first outcome, second
    /// outcome) with the sender's quantum message replaced.
    pub fn joint_distribution(
        &self,
        rho_a: &DensityMatrix,
        rho_b: &DensityMatrix,
    ) -> Result<Vec<Vec<f64>>> {
        let recovered = self.simulation.statistics(rho_a)?;
        Ok(recovered
            .iter()
            .enumerate()
            .map(|(i, &pi)| {
                self.second[i]
                    .probabilities(rho_b)
                    .iter()
                    .map(|pj| pi * pj)
                    .collect()
            })
            .collect())
    }
}

/// Replace RefA's POVM by its dilated projective simulation.
pub fn locc1_to_hybrid(protocol: &OneWayLoccProtocol) -> Result<HybridProtocol> {
    let simulation = naimark_dilate(protocol.first())?;
    Ok(HybridProtocol {
        simulation,
        second: protocol.second.clone(),
    })
}

/// Largest per-outcome deviation between two joint distributions.
pub fn max_joint_deviation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b.iter())
        .flat_map(|(ra, rb)| ra.iter().zip(rb.iter()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}
