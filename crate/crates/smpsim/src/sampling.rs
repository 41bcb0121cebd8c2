//! Random instance generators for tests and experiments.
//!
//! Everything here is driven by a caller-owned seeded generator, so whole
//! experiment runs stay reproducible.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{
    c, cr, hermitian_eig, hermitize, identity, CMatrix, CVector, DensityMatrix, Ket,
};
use crate::measurements::{Instrument, MeasClassCert, Povm};

/// Complex standard-Gaussian-ish matrix (Box-Muller over uniform draws).
pub fn random_gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let u1: f64 = rng.gen::<f64>().max(1e-12);
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        c(
            r * (2.0 * std::f64::consts::PI * u2).cos(),
            r * (2.0 * std::f64::consts::PI * u2).sin(),
        )
    })
}

/// Haar-like random pure state.
pub fn random_ket(dim: usize, rng: &mut ChaCha8Rng) -> Ket {
    loop {
        let v = CVector::from_fn(dim, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        if let Ok(k) = Ket::normalized(v) {
            return k;
        }
    }
}

/// Haar-like random mixed state G G† / tr.
pub fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = random_gaussian_matrix(dim, dim, rng);
    let h = &g * g.adjoint();
    let t = crate::linalg::trace_re(&h);
    DensityMatrix::new(hermitize(&h) * cr(1.0 / t)).expect("construction is PSD with unit trace")
}

/// Random unitary from the QR-like Gram-Schmidt of a Gaussian matrix.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = random_gaussian_matrix(dim, dim, rng);
    let mut q = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut v = g.column(col).into_owned();
        for prev in 0..col {
            let w = q.column(prev);
            let coeff: num_complex::Complex64 =
                w.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for i in 0..dim {
                let delta = w[i] * coeff;
                v[i] -= delta;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..dim {
            q[(i, col)] = v[i] / cr(norm);
        }
    }
    q
}

/// Random effect 0 <= E <= I with spectrum uniform in [0, 1].
pub fn random_effect(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let u = random_unitary(dim, rng);
    let diag = CMatrix::from_diagonal(&CVector::from_fn(dim, |_, _| cr(rng.gen())));
    hermitize(&(&u * diag * u.adjoint()))
}

/// Random n-outcome POVM: PSD pieces A_i whitened by S^{-1/2} on both sides.
pub fn random_povm(dim: usize, outcomes: usize, rng: &mut ChaCha8Rng) -> Povm {
    let pieces: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = random_gaussian_matrix(dim, dim, rng);
            &g * g.adjoint()
        })
        .collect();
    let mut total = CMatrix::zeros(dim, dim);
    for p in &pieces {
        total += p;
    }
    let eig = hermitian_eig(&hermitize(&total)).expect("sum of PSD is Hermitian");
    let mut inv_sqrt = CMatrix::zeros(dim, dim);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = 1.0 / lam.max(1e-12).sqrt();
        let v = eig.eigenvectors.column(k);
        for i in 0..dim {
            for j in 0..dim {
                inv_sqrt[(i, j)] += v[i] * v[j].conj() * cr(s);
            }
        }
    }
    let effects: Vec<CMatrix> = pieces
        .iter()
        .map(|p| hermitize(&(&inv_sqrt * p * &inv_sqrt)))
        .collect();
    Povm::new(effects).expect("whitened pieces form a POVM")
}

/// Random two-value instrument. The success Kraus is U sqrt(E) for a random
/// effect E and random unitary U, so post-states exercise non-canonical
/// Kraus choices; completeness still holds.
pub fn random_two_value_instrument(dim: usize, rng: &mut ChaCha8Rng) -> Instrument {
    let e = random_effect(dim, rng);
    let u0 = random_unitary(dim, rng);
    let u1 = random_unitary(dim, rng);
    let k0 = &u0 * crate::linalg::sqrt_psd(&e).expect("effect is PSD");
    let k1 = &u1 * crate::linalg::sqrt_psd(&(identity(dim) - &e)).expect("complement is PSD");
    Instrument::new(vec![k0, k1]).expect("kraus pair is complete")
}

/// Random BELL certificate on d x d with projective local families.
pub fn random_bell_cert(da: usize, db: usize, rng: &mut ChaCha8Rng) -> MeasClassCert {
    let ua = random_unitary(da, rng);
    let ub = random_unitary(db, rng);
    let alphas: Vec<CMatrix> = (0..da)
        .map(|k| {
            let v = ua.column(k);
            CMatrix::from_fn(da, da, |i, j| v[i] * v[j].conj())
        })
        .collect();
    let betas: Vec<CMatrix> = (0..db)
        .map(|k| {
            let v = ub.column(k);
            CMatrix::from_fn(db, db, |i, j| v[i] * v[j].conj())
        })
        .collect();
    let mut accept_pairs = Vec::new();
    for i in 0..da {
        for j in 0..db {
            if rng.gen::<bool>() {
                accept_pairs.push((i, j));
            }
        }
    }
    MeasClassCert::Bell {
        alphas,
        betas,
        accept_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_distance, is_effect, trace_re};
    use rand::SeedableRng;

    #[test]
    fn generators_satisfy_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in [2usize, 3, 4] {
            let k = random_ket(dim, &mut rng);
            assert_eq!(k.dim(), dim);
            let rho = random_density(dim, &mut rng);
            assert!((trace_re(rho.matrix()) - 1.0).abs() < 1e-12);
            let u = random_unitary(dim, &mut rng);
            assert!(frobenius_distance(&(u.adjoint() * &u), &identity(dim)) < 1e-10);
            let e = random_effect(dim, &mut rng);
            assert!(is_effect(&e));
            let povm = random_povm(dim, 3, &mut rng);
            assert_eq!(povm.outcomes(), 3);
            let ins = random_two_value_instrument(dim, &mut rng);
            assert!(ins.is_two_value());
        }
    }
}
