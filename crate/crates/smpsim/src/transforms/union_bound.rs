//! Sequential-measurement success floor: if every effect in a chain accepts
//! the initial state with probability at least 1 - delta, the probability
//! that the whole sequence of canonical measurements accepts is at least
//! 1 - 2 sqrt(k delta).

use crate::error::{Error, Result};
use crate::linalg::{is_effect, sqrt_psd, trace_re, CMatrix, DensityMatrix};

/// Result of checking one chain.
#[derive(Debug, Clone, Copy)]
pub struct UnionBoundCheck {
    /// Exact probability that all measurements succeed in sequence.
    pub all_success: f64,
    /// The floor 1 - 2 sqrt(k delta).
    pub bound: f64,
    pub steps: usize,
    /// Largest standalone failure probability among the steps.
    pub max_step_failure: f64,
}

impl UnionBoundCheck {
    pub fn holds(&self) -> bool {
        self.all_success >= self.bound - 1e-12
    }
}

/// Verify the hypothesis (each tr(E_i rho) >= 1 - delta) and compute the
/// exact all-success probability of the canonical sqrt(E) instruments
/// applied in sequence.
pub fn union_bound_check(
    effects: &[CMatrix],
    rho: &DensityMatrix,
    delta: f64,
) -> Result<UnionBoundCheck> {
    if effects.is_empty() {
        return Err(Error::contract("union_bound_check: empty chain"));
    }
    let mut max_step_failure = 0.0f64;
    for (i, e) in effects.iter().enumerate() {
        if e.nrows() != rho.dim() || !is_effect(e) {
            return Err(Error::contract(format!(
                "union_bound_check: effect {i} invalid"
            )));
        }
        let failure = 1.0 - trace_re(&(e * rho.matrix()));
        if failure > delta + 1e-12 {
            return Err(Error::InstanceRejected(format!(
                "step {i} fails with probability {failure:.3e} > delta {delta}"
            )));
        }
        max_step_failure = max_step_failure.max(failure.max(0.0));
    }
    let mut omega = rho.matrix().clone();
    for e in effects {
        let root = sqrt_psd(e)?;
        omega = &root * omega * &root;
    }
    let k = effects.len();
    Ok(UnionBoundCheck {
        all_success: trace_re(&omega).max(0.0),
        bound: 1.0 - 2.0 * ((k as f64) * delta).sqrt(),
        steps: k,
        max_step_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, identity};
    use crate::sampling::{random_density, random_effect};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(81)
    }

    /// Effects guaranteed to accept rho with probability >= 1 - delta:
    /// I - c K for a random effect K and c <= delta.
    fn gentle_effect(dim: usize, delta: f64, rng: &mut ChaCha8Rng) -> CMatrix {
        let k = random_effect(dim, rng);
        let c = delta * rng.gen::<f64>();
        identity(dim) - k * cr(c)
    }

    #[test]
    fn projector_containing_support_is_certain() {
        // k = 1, delta = 0: identity never fails.
        let rho = DensityMatrix::maximally_mixed(3);
        let check = union_bound_check(&[identity(3)], &rho, 0.0).unwrap();
        assert!((check.all_success - 1.0).abs() < 1e-12);
        assert!(check.holds());
        assert!((check.bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_step_bound_pinned() {
        // k = 2, delta = 0.01: floor 1 - 2 sqrt(0.02).
        let mut r = rng();
        let rho = random_density(4, &mut r);
        let effects = vec![
            gentle_effect(4, 0.01, &mut r),
            gentle_effect(4, 0.01, &mut r),
        ];
        let check = union_bound_check(&effects, &rho, 0.01).unwrap();
        let expected_bound = 1.0 - 2.0 * 0.02f64.sqrt();
        assert!((check.bound - expected_bound).abs() < 1e-12);
        assert!(check.holds(), "{} < {}", check.all_success, check.bound);
    }

    #[test]
    fn random_chains_never_violate() {
        let mut r = rng();
        for _ in 0..100 {
            let dim = 2 + (r.gen::<u64>() % 3) as usize;
            let k = 1 + (r.gen::<u64>() % 5) as usize;
            let delta = 0.05 * r.gen::<f64>();
            let rho = random_density(dim, &mut r);
            let effects: Vec<CMatrix> = (0..k).map(|_| gentle_effect(dim, delta, &mut r)).collect();
            let check = union_bound_check(&effects, &rho, delta).unwrap();
            assert!(check.holds());
            assert!(check.max_step_failure <= delta + 1e-12);
        }
    }

    #[test]
    fn hypothesis_violation_rejected() {
        let rho = DensityMatrix::pure(&crate::linalg::Ket::basis(2, 0));
        let effects = vec![crate::linalg::basis_outer(2, 1, 1)];
        assert!(matches!(
            union_bound_check(&effects, &rho, 0.05),
            Err(Error::InstanceRejected(_))
        ));
    }
}
