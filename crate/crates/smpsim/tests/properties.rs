//! Property-based invariants over randomized inputs.

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use smpsim::fingerprints::{
    fingerprint_overlap, fingerprint_overlap_via_states, swap_accept_prob, BitString, CodeSpec,
};
use smpsim::linalg::{
    frobenius_distance, hermitian_eig, hermitize, identity, partial_trace, tensor, trace_re,
    CMatrix, DensityMatrix, Keep, Ket,
};
use smpsim::measurements::pm_simulate_two_outcome;
use smpsim::protocols::{run_locc_exact, LoccProtocol, LoccSide};
use smpsim::transforms::{clamp_table, value_table, ClampRule};

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
}

fn matrix_from(parts: &[(f64, f64)], d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| {
        let (re, im) = parts[i * d + j];
        Complex64::new(re, im)
    })
}

fn density_from(parts: &[(f64, f64)], d: usize) -> DensityMatrix {
    let g = matrix_from(parts, d);
    let h = &g * g.adjoint() + identity(d) * Complex64::new(1e-6, 0.0);
    let t = trace_re(&h);
    DensityMatrix::new(h * Complex64::new(1.0 / t, 0.0)).expect("psd unit trace")
}

fn effect_from(parts: &[(f64, f64)], d: usize) -> CMatrix {
    let h = hermitize(&matrix_from(parts, d));
    let eig = hermitian_eig(&h).unwrap();
    let lo = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let hi = eig.eigenvalues.first().copied().unwrap_or(1.0);
    let span = (hi - lo).max(1e-9);
    // Affinely squash the spectrum into [0, 1].
    (h - identity(d) * Complex64::new(lo, 0.0)) * Complex64::new(1.0 / span, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_inverts_tensor(pa in complex_vec(9), pb in complex_vec(4)) {
        let rho = density_from(&pa, 3);
        let sigma = density_from(&pb, 2);
        let joint = tensor(rho.matrix(), sigma.matrix()).unwrap();
        let back = partial_trace(&joint, (3, 2), Keep::First).unwrap();
        prop_assert!(frobenius_distance(&back, rho.matrix()) < 1e-12);
        let back2 = partial_trace(&joint, (3, 2), Keep::Second).unwrap();
        prop_assert!(frobenius_distance(&back2, sigma.matrix()) < 1e-12);
    }

    #[test]
    fn eigendecomposition_reconstructs(parts in complex_vec(64)) {
        let h = hermitize(&matrix_from(&parts, 8));
        let eig = hermitian_eig(&h).unwrap();
        prop_assert!(frobenius_distance(&eig.reconstruct(), &h) < 1e-8);
        let gram = eig.eigenvectors.adjoint() * &eig.eigenvectors;
        prop_assert!(frobenius_distance(&gram, &identity(8)) < 1e-9);
        for w in eig.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn window_projectors_idempotent(parts in complex_vec(36), lo in -1.0f64..0.5, width in 0.0f64..1.0) {
        let h = hermitize(&matrix_from(&parts, 6));
        let p = smpsim::linalg::window_projector(&h, lo, lo + width).unwrap();
        prop_assert!(frobenius_distance(&(&p * &p), &p) < 1e-9);
    }

    #[test]
    fn overlap_routes_agree(xv in 0u64..256, yv in 0u64..256) {
        let code = CodeSpec::hadamard(8).unwrap();
        let x = BitString::from_value(xv, 8);
        let y = BitString::from_value(yv, 8);
        let a = fingerprint_overlap(&code, &x, &y).unwrap();
        let b = fingerprint_overlap_via_states(&code, &x, &y).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
        let accept = swap_accept_prob(a);
        prop_assert!((0.5..=1.0).contains(&accept));
    }

    #[test]
    fn layered_simulation_reproduces_effect(pe in complex_vec(16), pr in complex_vec(16)) {
        let e = effect_from(&pe, 4);
        let rho = density_from(&pr, 4);
        let sim = pm_simulate_two_outcome(&e).unwrap();
        let direct = smpsim::linalg::trace_product(&e, rho.matrix()).re;
        let stats = sim.statistics(&rho).unwrap();
        prop_assert!((stats[0] - direct).abs() < 1e-10);
        prop_assert!((stats[0] + stats[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kets_tensor_norms(pa in complex_vec(3), pb in complex_vec(5)) {
        let mk = |parts: &[(f64, f64)], d: usize| {
            let v = DVector::from_iterator(d, parts.iter().take(d).map(|&(re, im)| Complex64::new(re + 2.0, im)));
            Ket::normalized(v).unwrap()
        };
        let a = mk(&pa, 3);
        let b = mk(&pb, 5);
        let t = a.tensor(&b).unwrap();
        let norm: f64 = t.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn engine_transcripts_normalized(seed in 0u64..1000, rounds in 1usize..3) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let p = LoccProtocol::random_two_value(rounds, 2, 2, &mut rng).unwrap();
        let rho_a = smpsim::sampling::random_density(2, &mut rng);
        let rho_b = smpsim::sampling::random_density(2, &mut rng);
        let dist = run_locc_exact(&p, &rho_a, &rho_b).unwrap();
        prop_assert!((dist.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn clamping_valid_tables_is_identity(seed in 0u64..1000) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let p = LoccProtocol::random_two_value(2, 2, 2, &mut rng).unwrap();
        let rho = smpsim::sampling::random_density(2, &mut rng);
        let vt = value_table(&p, LoccSide::RefA, &rho).unwrap();
        vt.validate(1e-9).unwrap();
        let ct = clamp_table(&vt, ClampRule::BranchingConsistent);
        for ((h, m), &v) in vt.entries() {
            prop_assert!((ct.value(h, *m) - v).abs() < 1e-12);
        }
    }
}
