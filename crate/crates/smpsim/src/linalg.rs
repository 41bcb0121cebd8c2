//! Dense complex linear algebra: operators, states, tensor structure and
//! spectral tools.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * Matrices are `nalgebra::DMatrix<Complex64>` (alias [`CMatrix`]).
//! * The tensor product is left-major: `tensor(a, b)` places `a` on the
//!   most-significant index, i.e. entry `((ia*rb + ib), (ja*cb + jb))` equals
//!   `a[(ia, ja)] * b[(ib, jb)]`.
//! * Eigenvalues are reported in descending order; exact ties are broken by
//!   ascending pivot index of the eigenvector (the pivot is the first
//!   component of maximal magnitude). Eigenvector phases are normalized so
//!   the pivot component is real and nonnegative. This makes runs
//!   bit-reproducible.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol::{DEFAULT_ENTRY_CAP, IDENTITY_TOL, PSD_SLACK};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// d x d identity.
pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(d: usize) -> CMatrix {
    CMatrix::zeros(d, d)
}

/// |i><j| in dimension d.
pub fn basis_outer(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = cr(1.0);
    m
}

pub fn is_finite_matrix(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius_norm(&(a - b))
}

pub fn max_abs_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn trace_re(m: &CMatrix) -> f64 {
    trace(m).re
}

/// tr(a b) in O(d^2), without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = cr(0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// (m + m†)/2. Used to shed rounding drift from products that are Hermitian
/// in exact arithmetic.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * cr(0.5)
}

/// Kronecker product with the fixed left-major convention.
///
/// Errors if the result would exceed `DEFAULT_ENTRY_CAP` total entries.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    tensor_with_cap(a, b, DEFAULT_ENTRY_CAP)
}

pub fn tensor_with_cap(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    let entries = rows.and_then(|r| cols.and_then(|c| r.checked_mul(c)));
    match entries {
        Some(n) if n <= cap => Ok(a.kronecker(b)),
        _ => Err(Error::resource(format!(
            "tensor of {}x{} with {}x{} exceeds entry cap {}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            cap
        ))),
    }
}

/// Which factor of a bipartite operator to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of a (d1*d2)-dimensional operator over the discarded factor.
pub fn partial_trace(m: &CMatrix, dims: (usize, usize), keep: Keep) -> Result<CMatrix> {
    let (d1, d2) = dims;
    let d = d1 * d2;
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::contract(format!(
            "partial_trace: operator is {}x{} but dims are {}x{}",
            m.nrows(),
            m.ncols(),
            d1,
            d2
        )));
    }
    match keep {
        Keep::First => {
            let mut out = CMatrix::zeros(d1, d1);
            for i in 0..d1 {
                for j in 0..d1 {
                    let mut s = cr(0.0);
                    for k in 0..d2 {
                        s += m[(i * d2 + k, j * d2 + k)];
                    }
                    out[(i, j)] = s;
                }
            }
            Ok(out)
        }
        Keep::Second => {
            let mut out = CMatrix::zeros(d2, d2);
            for i in 0..d2 {
                for j in 0..d2 {
                    let mut s = cr(0.0);
                    for k in 0..d1 {
                        s += m[(k * d2 + i, k * d2 + j)];
                    }
                    out[(i, j)] = s;
                }
            }
            Ok(out)
        }
    }
}

/// Hermitian eigendecomposition with the deterministic ordering described in
/// the module docs.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as matrix columns, matching `eigenvalues` order.
    pub eigenvectors: CMatrix,
}

impl HermEig {
    /// Column k as a vector.
    pub fn vector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// Sum of lambda_k |e_k><e_k| over the selected indices.
    pub fn projector_for(&self, select: impl Fn(f64) -> bool) -> CMatrix {
        let d = self.eigenvectors.nrows();
        let mut p = CMatrix::zeros(d, d);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            if select(lam) {
                let v = self.eigenvectors.column(k);
                for i in 0..d {
                    for j in 0..d {
                        p[(i, j)] += v[i] * v[j].conj();
                    }
                }
            }
        }
        p
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = self.eigenvectors.nrows();
        let mut m = CMatrix::zeros(d, d);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(k);
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] += v[i] * v[j].conj() * cr(lam);
                }
            }
        }
        m
    }
}

fn pivot_index(v: &CVector) -> usize {
    let mut best = 0usize;
    let mut best_mag = -1.0f64;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    best
}

pub fn hermitian_eig(m: &CMatrix) -> Result<HermEig> {
    if !is_hermitian(m, IDENTITY_TOL) {
        return Err(Error::contract(
            "hermitian_eig: input is not Hermitian".to_string(),
        ));
    }
    let d = m.nrows();
    let se = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    let pivots: Vec<usize> = (0..d)
        .map(|k| pivot_index(&se.eigenvectors.column(k).into_owned()))
        .collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .partial_cmp(&se.eigenvalues[a])
            .unwrap()
            .then(pivots[a].cmp(&pivots[b]))
    });

    let mut eigenvalues = Vec::with_capacity(d);
    let mut eigenvectors = CMatrix::zeros(d, d);
    for (slot, &k) in order.iter().enumerate() {
        eigenvalues.push(se.eigenvalues[k]);
        let col = se.eigenvectors.column(k);
        // Phase so the pivot component is real and nonnegative.
        let pv = col[pivots[k]];
        let phase = if pv.norm() > 0.0 {
            pv.conj() / cr(pv.norm())
        } else {
            cr(1.0)
        };
        for i in 0..d {
            eigenvectors[(i, slot)] = col[i] * phase;
        }
    }
    Ok(HermEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Orthogonal projector onto the span of eigenvectors of `m` with eigenvalue
/// in the closed interval `[lo, hi]`.
pub fn window_projector(m: &CMatrix, lo: f64, hi: f64) -> Result<CMatrix> {
    if lo > hi {
        return Err(Error::contract(format!(
            "window_projector: lo {lo} > hi {hi}"
        )));
    }
    let eig = hermitian_eig(m)?;
    Ok(eig.projector_for(|lam| lo <= lam && lam <= hi))
}

/// True iff `m` is an effect: Hermitian with spectrum in [0, 1] up to slack.
pub fn is_effect(m: &CMatrix) -> bool {
    if m.nrows() != m.ncols() || !is_hermitian(m, IDENTITY_TOL) {
        return false;
    }
    match hermitian_eig(m) {
        Ok(eig) => eig
            .eigenvalues
            .iter()
            .all(|&lam| (-PSD_SLACK..=1.0 + PSD_SLACK).contains(&lam)),
        Err(_) => false,
    }
}

/// Positive square root of a PSD operator. Eigenvalues within slack below
/// zero are clamped to zero.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    if let Some(&min) = eig.eigenvalues.last() {
        if min < -PSD_SLACK {
            return Err(Error::contract(format!(
                "sqrt_psd: eigenvalue {min:.3e} below PSD slack"
            )));
        }
    }
    let d = m.nrows();
    let mut out = CMatrix::zeros(d, d);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += v[i] * v[j].conj() * cr(s);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tensor-structured helpers
// ---------------------------------------------------------------------------

/// tr((I ⊗ .. ⊗ op ⊗ .. ⊗ I) rho) where `op` sits on `factor` of `nfactors`
/// factors, each of dimension `base`.
pub fn trace_factor_op(
    rho: &CMatrix,
    op: &CMatrix,
    factor: usize,
    base: usize,
    nfactors: usize,
) -> f64 {
    let dim = base.pow(nfactors as u32);
    debug_assert_eq!(rho.nrows(), dim);
    debug_assert_eq!(op.nrows(), base);
    let post = base.pow((nfactors - 1 - factor) as u32);
    let pre = dim / (post * base);
    let mut acc = cr(0.0);
    for p in 0..pre {
        for m in 0..base {
            for mp in 0..base {
                let w = op[(m, mp)];
                if w == cr(0.0) {
                    continue;
                }
                let row_base = (p * base + m) * post;
                let col_base = (p * base + mp) * post;
                for q in 0..post {
                    // tr(op^{(f)} rho) = sum op[m, m'] rho[col(m'), row(m)]
                    acc += w * rho[(col_base + q, row_base + q)];
                }
            }
        }
    }
    acc.re
}

/// In-place conjugation rho <- U rho U† where U = I ⊗ .. ⊗ u ⊗ .. ⊗ I acts on
/// `factor` of `nfactors` factors of dimension `base`.
pub fn factor_conjugate(
    rho: &mut CMatrix,
    u: &CMatrix,
    factor: usize,
    base: usize,
    nfactors: usize,
) {
    let dim = base.pow(nfactors as u32);
    debug_assert_eq!(rho.nrows(), dim);
    debug_assert_eq!(u.nrows(), base);
    let post = base.pow((nfactors - 1 - factor) as u32);
    let pre = dim / (post * base);

    let mut scratch = vec![cr(0.0); base];
    // Left multiply by U: mix row groups.
    for col in 0..dim {
        for p in 0..pre {
            for q in 0..post {
                for (m, s) in scratch.iter_mut().enumerate() {
                    let mut acc = cr(0.0);
                    for mp in 0..base {
                        acc += u[(m, mp)] * rho[((p * base + mp) * post + q, col)];
                    }
                    *s = acc;
                }
                for (m, s) in scratch.iter().enumerate() {
                    rho[((p * base + m) * post + q, col)] = *s;
                }
            }
        }
    }
    // Right multiply by U†: mix column groups.
    for row in 0..dim {
        for p in 0..pre {
            for q in 0..post {
                for (m, s) in scratch.iter_mut().enumerate() {
                    let mut acc = cr(0.0);
                    for mp in 0..base {
                        acc += rho[(row, (p * base + mp) * post + q)] * u[(m, mp)].conj();
                    }
                    *s = acc;
                }
                for (m, s) in scratch.iter().enumerate() {
                    rho[(row, (p * base + m) * post + q)] = *s;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// A pure state: unit-norm complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: CVector,
}

impl Ket {
    /// Validates unit norm (within the identity tolerance).
    pub fn new(amps: CVector) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::contract("Ket: empty amplitude vector"));
        }
        if !amps.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::contract("Ket: non-finite amplitude"));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > IDENTITY_TOL {
            return Err(Error::contract(format!("Ket: norm {norm} is not 1")));
        }
        Ok(Self { amps })
    }

    /// Normalizes the vector, then wraps it.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::contract("Ket: cannot normalize zero vector"));
        }
        Self::new(amps / cr(norm))
    }

    /// Computational basis state |i> in dimension d.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut amps = CVector::zeros(d);
        amps[i] = cr(1.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    /// <self|other>.
    pub fn inner(&self, other: &Ket) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |self><self|.
    pub fn projector(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.amps[i] * self.amps[j].conj();
            }
        }
        m
    }

    /// |self> ⊗ |other>, left factor most significant.
    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        let d = self.dim() * other.dim();
        if d > DEFAULT_ENTRY_CAP {
            return Err(Error::resource(format!(
                "ket tensor dimension {d} exceeds cap"
            )));
        }
        let mut amps = CVector::zeros(d);
        for i in 0..self.dim() {
            for j in 0..other.dim() {
                amps[i * other.dim() + j] = self.amps[i] * other.amps[j];
            }
        }
        Ket::new(amps)
    }
}

/// A mixed state: Hermitian, PSD (within slack), unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::contract("DensityMatrix: not square"));
        }
        if !is_finite_matrix(&mat) {
            return Err(Error::contract("DensityMatrix: non-finite entry"));
        }
        if !is_hermitian(&mat, IDENTITY_TOL) {
            return Err(Error::contract("DensityMatrix: not Hermitian"));
        }
        let tr = trace_re(&mat);
        if (tr - 1.0).abs() > IDENTITY_TOL {
            return Err(Error::contract(format!(
                "DensityMatrix: trace {tr} is not 1"
            )));
        }
        let eig = hermitian_eig(&mat)?;
        if let Some(&min) = eig.eigenvalues.last() {
            if min < -PSD_SLACK {
                return Err(Error::contract(format!(
                    "DensityMatrix: eigenvalue {min:.3e} below PSD slack"
                )));
            }
        }
        Ok(Self { mat })
    }

    pub fn pure(ket: &Ket) -> Self {
        Self {
            mat: ket.projector(),
        }
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: identity(d) * cr(1.0 / d as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// rho ⊗ sigma.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            mat: tensor(&self.mat, &other.mat)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
    }

    fn plus_ket() -> Ket {
        let s = 1.0 / 2.0_f64.sqrt();
        Ket::new(CVector::from_vec(vec![cr(s), cr(s)])).unwrap()
    }

    fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(d, d, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        hermitize(&g)
    }

    /// Index-expansion oracle for the Kronecker product.
    fn tensor_oracle(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let (ra, ca) = (a.nrows(), a.ncols());
        let (rb, cb) = (b.nrows(), b.ncols());
        let mut out = CMatrix::zeros(ra * rb, ca * cb);
        for ia in 0..ra {
            for ja in 0..ca {
                for ib in 0..rb {
                    for jb in 0..cb {
                        out[(ia * rb + ib, ja * cb + jb)] = a[(ia, ja)] * b[(ib, jb)];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn tensor_identity_case() {
        let i2 = identity(2);
        assert_eq!(tensor(&i2, &i2).unwrap(), identity(4));
    }

    #[test]
    fn tensor_projectors_fixed_convention() {
        // |0><0| ⊗ |1><1| = diag(0, 1, 0, 0) under the left-major convention.
        let p0 = basis_outer(2, 0, 0);
        let p1 = basis_outer(2, 1, 1);
        let t = tensor(&p0, &p1).unwrap();
        let expected = tensor_oracle(&p0, &p1);
        assert_eq!(t, expected);
        let mut diag = CMatrix::zeros(4, 4);
        diag[(1, 1)] = cr(1.0);
        assert_eq!(t, diag);
    }

    #[test]
    fn tensor_mixed_product_identity() {
        // (X ⊗ I)(I ⊗ X) = X ⊗ X, checked against the entrywise oracle.
        let x = pauli_x();
        let i2 = identity(2);
        let lhs = tensor(&x, &i2).unwrap() * tensor(&i2, &x).unwrap();
        let rhs = tensor_oracle(&x, &x);
        assert!(max_abs_entry_diff(&lhs, &rhs) == 0.0);
    }

    #[test]
    fn tensor_associative() {
        // Entry products of dyadic rationals are exact, so associativity is
        // bitwise there; for general complex entries the two groupings agree
        // to a relative ulp.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dyadic = |d: usize, rng: &mut ChaCha8Rng| {
            CMatrix::from_fn(d, d, |_, _| {
                c(
                    (rng.gen_range(-4i32..=4) as f64) * 0.25,
                    (rng.gen_range(-4i32..=4) as f64) * 0.25,
                )
            })
        };
        for _ in 0..10 {
            let a = dyadic(2, &mut rng);
            let b = dyadic(3, &mut rng);
            let d = dyadic(2, &mut rng);
            let left = tensor(&tensor(&a, &b).unwrap(), &d).unwrap();
            let right = tensor(&a, &tensor(&b, &d).unwrap()).unwrap();
            assert_eq!(left, right);
        }
        for _ in 0..10 {
            let a = random_hermitian(2, &mut rng);
            let b = random_hermitian(3, &mut rng);
            let d = random_hermitian(2, &mut rng);
            let left = tensor(&tensor(&a, &b).unwrap(), &d).unwrap();
            let right = tensor(&a, &tensor(&b, &d).unwrap()).unwrap();
            assert!(max_abs_entry_diff(&left, &right) < 1e-15);
        }
    }

    #[test]
    fn tensor_cap_enforced() {
        let big = identity(1 << 10);
        let err = tensor(&big, &big).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn partial_trace_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g1 = CMatrix::from_fn(3, 3, |_, _| c(rng.gen(), rng.gen()));
        let rho = {
            let h = &g1 * g1.adjoint();
            let t = trace_re(&h);
            h * cr(1.0 / t)
        };
        let g2 = CMatrix::from_fn(2, 2, |_, _| c(rng.gen(), rng.gen()));
        let sigma = {
            let h = &g2 * g2.adjoint();
            let t = trace_re(&h);
            h * cr(1.0 / t)
        };
        let joint = tensor(&rho, &sigma).unwrap();
        let back = partial_trace(&joint, (3, 2), Keep::First).unwrap();
        assert!(max_abs_entry_diff(&back, &rho) < 1e-12);
        let back2 = partial_trace(&joint, (3, 2), Keep::Second).unwrap();
        assert!(max_abs_entry_diff(&back2, &sigma) < 1e-12);
    }

    #[test]
    fn partial_trace_maximally_entangled() {
        // Direct sum over the computational basis: both marginals are I/2.
        let s = 1.0 / 2.0_f64.sqrt();
        let bell = Ket::new(CVector::from_vec(vec![cr(s), cr(0.0), cr(0.0), cr(s)])).unwrap();
        let rho = bell.projector();
        for keep in [Keep::First, Keep::Second] {
            let marginal = partial_trace(&rho, (2, 2), keep).unwrap();
            let expected = identity(2) * cr(0.5);
            assert!(max_abs_entry_diff(&marginal, &expected) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_hermitian(6, &mut rng);
        let pt = partial_trace(&m, (2, 3), Keep::First).unwrap();
        assert!((trace_re(&pt) - trace_re(&m)).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_dim_mismatch() {
        let m = identity(5);
        assert!(partial_trace(&m, (2, 2), Keep::First).is_err());
    }

    #[test]
    fn eig_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.1), cr(0.9)]));
        let eig = hermitian_eig(&m).unwrap();
        assert!((eig.eigenvalues[0] - 0.9).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn eig_plus_projector() {
        // 2x2 closed form: eigenvalues (1, 0), top eigenvector |+>.
        let p = plus_ket().projector();
        let eig = hermitian_eig(&p).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-10);
        assert!(eig.eigenvalues[1].abs() < 1e-10);
        let top = eig.vector(0);
        let overlap: Complex64 = plus_ket()
            .amplitudes()
            .iter()
            .zip(top.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let m = random_hermitian(8, &mut rng);
            let eig = hermitian_eig(&m).unwrap();
            assert!(frobenius_distance(&eig.reconstruct(), &m) < 1e-8);
            // Orthonormality.
            let g = eig.eigenvectors.adjoint() * &eig.eigenvectors;
            assert!(frobenius_distance(&g, &identity(8)) < 1e-9);
            // Descending order.
            for w in eig.eigenvalues.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn eig_deterministic_tie_break_on_identity() {
        let eig = hermitian_eig(&identity(4)).unwrap();
        // All eigenvalues tie at 1; pivot order gives back the standard basis.
        assert!(frobenius_distance(&eig.eigenvectors, &identity(4)) < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = identity(2);
        m[(0, 1)] = cr(1.0);
        assert!(hermitian_eig(&m).is_err());
    }

    #[test]
    fn window_selects_middle_eigenvalue() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.1), cr(0.5), cr(0.9)]));
        let p = window_projector(&m, 0.4, 0.6).unwrap();
        assert!(max_abs_entry_diff(&p, &basis_outer(3, 1, 1)) < 1e-12);
    }

    #[test]
    fn window_full_spectrum_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = CMatrix::from_fn(3, 3, |_, _| c(rng.gen(), rng.gen()));
        let e = {
            let h = &g * g.adjoint();
            let eig = hermitian_eig(&h).unwrap();
            h * cr(1.0 / (eig.eigenvalues[0] + 0.1))
        };
        let p = window_projector(&e, -2.0, 2.0).unwrap();
        assert!(frobenius_distance(&p, &identity(3)) < 1e-9);
    }

    #[test]
    fn window_empty_is_zero() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.1), cr(0.9)]));
        let p = window_projector(&m, 0.4, 0.6).unwrap();
        assert_eq!(p, zeros(2));
    }

    #[test]
    fn window_projector_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let m = random_hermitian(6, &mut rng);
            let p = window_projector(&m, -0.2, 0.3).unwrap();
            assert!(frobenius_distance(&(&p * &p), &p) < 1e-9);
        }
    }

    #[test]
    fn effect_checks() {
        assert!(is_effect(&identity(3)));
        assert!(!is_effect(&(identity(3) * cr(2.0))));
        assert!(is_effect(&plus_ket().projector()));
        assert!(!is_effect(&pauli_x())); // eigenvalue -1
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = CMatrix::from_fn(4, 4, |_, _| c(rng.gen(), rng.gen()));
        let p = &g * g.adjoint();
        let s = sqrt_psd(&p).unwrap();
        assert!(frobenius_distance(&(&s * &s), &p) < 1e-9);
    }

    #[test]
    fn ket_validation() {
        assert!(Ket::new(CVector::from_vec(vec![cr(1.0), cr(0.5)])).is_err());
        assert!(Ket::normalized(CVector::from_vec(vec![cr(3.0), cr(4.0)])).is_ok());
        assert!(Ket::normalized(CVector::zeros(2)).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(identity(2)).is_err()); // trace 2
        assert!(DensityMatrix::new(identity(2) * cr(0.5)).is_ok());
        let x = pauli_x();
        assert!(DensityMatrix::new(x).is_err()); // trace 0, not PSD
    }

    #[test]
    fn factor_trace_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let base = 3usize;
        let nfactors = 3;
        let dim = base.pow(nfactors as u32);
        let rho = random_hermitian(dim, &mut rng);
        let op = random_hermitian(base, &mut rng);
        for factor in 0..nfactors {
            let mut full = identity(1);
            for f in 0..nfactors {
                let piece = if f == factor {
                    op.clone()
                } else {
                    identity(base)
                };
                full = tensor(&full, &piece).unwrap();
            }
            let dense = trace_re(&(&full * &rho));
            let fast = trace_factor_op(&rho, &op, factor, base, nfactors);
            assert!(
                (dense - fast).abs() < 1e-10,
                "factor {factor}: {dense} vs {fast}"
            );
        }
    }

    #[test]
    fn factor_conjugate_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = 2usize;
        let nfactors = 3;
        let dim = base.pow(nfactors as u32);
        let rho = random_hermitian(dim, &mut rng);
        let g = CMatrix::from_fn(base, base, |_, _| c(rng.gen(), rng.gen()));
        for factor in 0..nfactors {
            let mut full = identity(1);
            for f in 0..nfactors {
                let piece = if f == factor {
                    g.clone()
                } else {
                    identity(base)
                };
                full = tensor(&full, &piece).unwrap();
            }
            let dense = &full * &rho * full.adjoint();
            let mut fast = rho.clone();
            factor_conjugate(&mut fast, &g, factor, base, nfactors);
            assert!(max_abs_entry_diff(&dense, &fast) < 1e-10);
        }
    }
}
