//! POVMs, measurement instruments with post-states, constructive
//! measurement-class builders, and projective simulations of general
//! measurements (dilation and layered two-outcome decompositions).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    cr, frobenius_distance, hermitian_eig, hermitize, identity, is_effect, is_finite_matrix,
    sqrt_psd, tensor, trace_re, CMatrix, CVector, DensityMatrix, Ket,
};
use crate::tol::{DEFAULT_ENTRY_CAP, DEGENERACY_EPS, IDENTITY_TOL};

/// A positive operator-valued measure: effects summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    effects: Vec<CMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::contract("Povm: no effects"));
        }
        let dim = effects[0].nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for (i, e) in effects.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::contract(format!(
                    "Povm: effect {i} has wrong dimension"
                )));
            }
            if !is_effect(e) {
                return Err(Error::contract(format!(
                    "Povm: effect {i} is not an effect"
                )));
            }
            sum += e;
        }
        if frobenius_distance(&sum, &identity(dim)) > IDENTITY_TOL {
            return Err(Error::contract("Povm: effects do not sum to identity"));
        }
        Ok(Self { dim, effects })
    }

    /// Two-outcome POVM {e, I - e}.
    pub fn two_outcome(e: CMatrix) -> Result<Self> {
        let d = e.nrows();
        let complement = identity(d) - &e;
        Self::new(vec![e, complement])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effect(&self, i: usize) -> &CMatrix {
        &self.effects[i]
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    /// Outcome distribution on `rho`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.effects
            .iter()
            .map(|e| crate::linalg::trace_product(e, rho.matrix()).re)
            .collect()
    }

    /// True iff every effect is an orthogonal projector and distinct effects
    /// are mutually orthogonal.
    pub fn is_projective(&self, tol: f64) -> bool {
        for (i, e) in self.effects.iter().enumerate() {
            if frobenius_distance(&(e * e), e) > tol {
                return false;
            }
            for f in &self.effects[i + 1..] {
                if (e * f).iter().map(|z| z.norm()).fold(0.0, f64::max) > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Outcome of applying one instrument branch.
#[derive(Debug, Clone)]
pub enum PostState {
    State(DensityMatrix),
    /// Branch probability below the degeneracy threshold; no post-state.
    Degenerate,
}

impl PostState {
    pub fn state(&self) -> Option<&DensityMatrix> {
        match self {
            PostState::State(s) => Some(s),
            PostState::Degenerate => None,
        }
    }

    /// Demand the post-state, erroring when the branch was degenerate.
    pub fn require_state(self, prob: f64, context: &str) -> Result<DensityMatrix> {
        match self {
            PostState::State(s) => Ok(s),
            PostState::Degenerate => Err(Error::DegenerateBranch {
                prob,
                context: context.to_string(),
            }),
        }
    }
}

/// A measurement instrument: ordered Kraus operators with completeness
/// sum_m M_m† M_m = I.
#[derive(Debug, Clone)]
pub struct Instrument {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl Instrument {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::contract("Instrument: no Kraus operators"));
        }
        let dim = kraus[0].nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for (i, k) in kraus.iter().enumerate() {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::contract(format!(
                    "Instrument: Kraus {i} has wrong dimension"
                )));
            }
            if !is_finite_matrix(k) {
                return Err(Error::contract(format!(
                    "Instrument: Kraus {i} has non-finite entry"
                )));
            }
            sum += k.adjoint() * k;
        }
        if frobenius_distance(&sum, &identity(dim)) > IDENTITY_TOL {
            return Err(Error::contract("Instrument: completeness violated"));
        }
        Ok(Self { dim, kraus })
    }

    /// Canonical instrument of a two-outcome POVM {e, I-e}: Kraus
    /// {sqrt(e), sqrt(I-e)}.
    pub fn from_effect(e: &CMatrix) -> Result<Self> {
        if !is_effect(e) {
            return Err(Error::contract("Instrument::from_effect: not an effect"));
        }
        let d = e.nrows();
        Self::new(vec![sqrt_psd(e)?, sqrt_psd(&(identity(d) - e))?])
    }

    /// Projective instrument measuring in the given orthonormal basis
    /// grouping: one Kraus per projector.
    pub fn projective(projectors: Vec<CMatrix>) -> Result<Self> {
        Self::new(projectors)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.kraus.len()
    }

    pub fn kraus(&self, m: usize) -> &CMatrix {
        &self.kraus[m]
    }

    pub fn is_two_value(&self) -> bool {
        self.kraus.len() == 2
    }

    /// Probability of outcome `m` on `rho`: tr(M_m† M_m rho), computed as
    /// the entrywise overlap of M rho with M.
    pub fn probability(&self, rho: &DensityMatrix, m: usize) -> f64 {
        let k = &self.kraus[m];
        let krho = k * rho.matrix();
        let mut acc = 0.0;
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                acc += (krho[(i, j)] * k[(i, j)].conj()).re;
            }
        }
        acc
    }

    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        (0..self.outcomes())
            .map(|m| self.probability(rho, m))
            .collect()
    }

    /// Probability and renormalized post-state of outcome `m`. Branches
    /// with probability below `DEGENERACY_EPS` are marked degenerate.
    pub fn apply(&self, rho: &DensityMatrix, m: usize) -> Result<(f64, PostState)> {
        if m >= self.outcomes() {
            return Err(Error::contract(format!(
                "Instrument::apply: outcome {m} out of range"
            )));
        }
        if rho.dim() != self.dim {
            return Err(Error::contract("Instrument::apply: dimension mismatch"));
        }
        let k = &self.kraus[m];
        let raw = k * rho.matrix() * k.adjoint();
        let prob = trace_re(&raw).max(0.0);
        if prob < DEGENERACY_EPS {
            return Ok((prob, PostState::Degenerate));
        }
        let post = DensityMatrix::new(hermitize(&raw) * cr(1.0 / prob))?;
        Ok((prob, PostState::State(post)))
    }

    /// The POVM obtained by forgetting post-states: E_m = M_m† M_m.
    pub fn povm(&self) -> Result<Povm> {
        Povm::new(
            self.kraus
                .iter()
                .map(|k| hermitize(&(k.adjoint() * k)))
                .collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Measurement classes on bipartite systems
// ---------------------------------------------------------------------------

/// Which subsystem a partial measurement acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Node of a constructive alternating-measurement tree. `Accept` is the
/// base case (operator I); a branch applies partial effects {E_i} with
/// sum E_i <= I on one side and continues in each child.
#[derive(Debug, Clone)]
pub enum LoccNode {
    Accept,
    Branch {
        side: Side,
        items: Vec<(CMatrix, LoccNode)>,
    },
}

/// Constructive certificate that an accept operator lies in one of the
/// bipartite measurement classes.
#[derive(Debug, Clone)]
pub enum MeasClassCert {
    /// M = sum over accepted pairs (i, j) of alpha_i ⊗ beta_j with both
    /// families summing to the identity.
    Bell {
        alphas: Vec<CMatrix>,
        betas: Vec<CMatrix>,
        accept_pairs: Vec<(usize, usize)>,
    },
    /// M = sum_i alpha_i ⊗ M_i: measure the first system, then accept on the
    /// second with an effect chosen by the first outcome.
    OneWay {
        alphas: Vec<CMatrix>,
        conditional: Vec<CMatrix>,
    },
    /// Alternating partial measurements on the two systems.
    Tree {
        dims: (usize, usize),
        root: LoccNode,
    },
}

fn check_resolution(ops: &[CMatrix], dim: usize, what: &str) -> Result<()> {
    let mut sum = CMatrix::zeros(dim, dim);
    for (i, a) in ops.iter().enumerate() {
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::contract(format!("{what}[{i}]: wrong dimension")));
        }
        if !is_effect(a) {
            return Err(Error::contract(format!("{what}[{i}]: not an effect")));
        }
        sum += a;
    }
    if frobenius_distance(&sum, &identity(dim)) > IDENTITY_TOL {
        return Err(Error::contract(format!("{what}: does not sum to identity")));
    }
    Ok(())
}

fn tree_operator(node: &LoccNode, dims: (usize, usize)) -> Result<CMatrix> {
    let (da, db) = dims;
    let full = da * db;
    match node {
        LoccNode::Accept => Ok(identity(full)),
        LoccNode::Branch { side, items } => {
            let local_dim = match side {
                Side::First => da,
                Side::Second => db,
            };
            let mut level_sum = CMatrix::zeros(local_dim, local_dim);
            let mut acc = CMatrix::zeros(full, full);
            for (e, child) in items {
                if !is_effect(e) {
                    return Err(Error::contract("LoccNode: partial effect invalid"));
                }
                level_sum += e;
                let root_e = sqrt_psd(e)?;
                let lifted = match side {
                    Side::First => tensor(&root_e, &identity(db))?,
                    Side::Second => tensor(&identity(da), &root_e)?,
                };
                let inner = tree_operator(child, dims)?;
                acc += &lifted * inner * &lifted;
            }
            // Levels may be subnormalized; the missing mass rejects.
            let eig = hermitian_eig(&level_sum)?;
            if eig.eigenvalues.iter().any(|&l| l > 1.0 + IDENTITY_TOL) {
                return Err(Error::contract("LoccNode: level effects exceed identity"));
            }
            Ok(acc)
        }
    }
}

/// Assemble the accept operator of a certificate on the bipartite space.
pub fn class_operator(cert: &MeasClassCert) -> Result<CMatrix> {
    let m = match cert {
        MeasClassCert::Bell {
            alphas,
            betas,
            accept_pairs,
        } => {
            let da = alphas
                .first()
                .ok_or_else(|| Error::contract("Bell: empty alphas"))?
                .nrows();
            let db = betas
                .first()
                .ok_or_else(|| Error::contract("Bell: empty betas"))?
                .nrows();
            check_resolution(alphas, da, "Bell alphas")?;
            check_resolution(betas, db, "Bell betas")?;
            let mut acc = CMatrix::zeros(da * db, da * db);
            for &(i, j) in accept_pairs {
                acc += tensor(&alphas[i], &betas[j])?;
            }
            acc
        }
        MeasClassCert::OneWay {
            alphas,
            conditional,
        } => {
            let da = alphas
                .first()
                .ok_or_else(|| Error::contract("OneWay: empty alphas"))?
                .nrows();
            check_resolution(alphas, da, "OneWay alphas")?;
            if alphas.len() != conditional.len() {
                return Err(Error::contract("OneWay: family length mismatch"));
            }
            let db = conditional[0].nrows();
            let mut acc = CMatrix::zeros(da * db, da * db);
            for (a, m_i) in alphas.iter().zip(conditional) {
                if !is_effect(m_i) {
                    return Err(Error::contract("OneWay: conditional is not an effect"));
                }
                acc += tensor(a, m_i)?;
            }
            acc
        }
        MeasClassCert::Tree { dims, root } => tree_operator(root, *dims)?,
    };
    let m = hermitize(&m);
    if !is_effect(&m) {
        return Err(Error::contract(
            "class_operator: assembled operator is not an effect",
        ));
    }
    Ok(m)
}

/// Every BELL certificate is a one-way certificate: pair alpha_i with the
/// sum of accepted betas for that i.
pub fn bell_to_one_way(cert: &MeasClassCert) -> Result<MeasClassCert> {
    match cert {
        MeasClassCert::Bell {
            alphas,
            betas,
            accept_pairs,
        } => {
            let db = betas[0].nrows();
            let conditional: Vec<CMatrix> = (0..alphas.len())
                .map(|i| {
                    let mut acc = CMatrix::zeros(db, db);
                    for &(ai, bj) in accept_pairs {
                        if ai == i {
                            acc += &betas[bj];
                        }
                    }
                    acc
                })
                .collect();
            Ok(MeasClassCert::OneWay {
                alphas: alphas.clone(),
                conditional,
            })
        }
        _ => Err(Error::contract(
            "bell_to_one_way: expected a BELL certificate",
        )),
    }
}

/// Every one-way certificate is an alternating tree: branch on the first
/// system with {alpha_i}, then on the second with the single effect M_i.
pub fn one_way_to_tree(cert: &MeasClassCert) -> Result<MeasClassCert> {
    match cert {
        MeasClassCert::OneWay {
            alphas,
            conditional,
        } => {
            let da = alphas[0].nrows();
            let db = conditional[0].nrows();
            let items: Vec<(CMatrix, LoccNode)> = alphas
                .iter()
                .zip(conditional)
                .map(|(a, m)| {
                    (
                        a.clone(),
                        LoccNode::Branch {
                            side: Side::Second,
                            items: vec![(m.clone(), LoccNode::Accept)],
                        },
                    )
                })
                .collect();
            Ok(MeasClassCert::Tree {
                dims: (da, db),
                root: LoccNode::Branch {
                    side: Side::First,
                    items,
                },
            })
        }
        _ => Err(Error::contract(
            "one_way_to_tree: expected a one-way certificate",
        )),
    }
}

// ---------------------------------------------------------------------------
// Projective simulation of general measurements
// ---------------------------------------------------------------------------

/// Randomized projective simulation of a POVM: a fixed pure ancilla, a
/// mixture of projective branch measurements, and deterministic
/// postprocessing back to the original outcome labels.
#[derive(Debug, Clone)]
pub struct PmSimulation {
    /// Fixed ancilla state (dimension 1 when no ancilla is needed).
    pub ancilla: Ket,
    /// (weight, projective branch measurement).
    pub branches: Vec<(f64, Povm)>,
    /// `postprocess[k][o]` = original outcome for branch k, branch outcome o.
    pub postprocess: Vec<Vec<usize>>,
    /// Number of outcomes of the simulated POVM.
    pub original_outcomes: usize,
}

impl PmSimulation {
    pub fn validate(&self) -> Result<()> {
        let weight_sum: f64 = self.branches.iter().map(|(w, _)| *w).sum();
        if self.branches.iter().any(|(w, _)| *w < 0.0) {
            return Err(Error::contract("PmSimulation: negative branch weight"));
        }
        if (weight_sum - 1.0).abs() > 1e-12 {
            return Err(Error::contract(format!(
                "PmSimulation: weights sum to {weight_sum}, not 1"
            )));
        }
        for (k, (_, povm)) in self.branches.iter().enumerate() {
            if !povm.is_projective(IDENTITY_TOL) {
                return Err(Error::contract(format!(
                    "PmSimulation: branch {k} not projective"
                )));
            }
        }
        Ok(())
    }

    /// Probability of each original outcome when the simulation is run on
    /// `rho` extended by the fixed ancilla.
    pub fn statistics(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        let extended = if self.ancilla.dim() == 1 {
            rho.clone()
        } else {
            rho.tensor(&DensityMatrix::pure(&self.ancilla))?
        };
        let mut out = vec![0.0; self.original_outcomes];
        for (k, (weight, povm)) in self.branches.iter().enumerate() {
            if *weight == 0.0 {
                continue;
            }
            for (o, p) in povm.probabilities(&extended).iter().enumerate() {
                out[self.postprocess[k][o]] += weight * p;
            }
        }
        Ok(out)
    }

    /// Bits needed to report a branch outcome.
    pub fn outcome_bits(&self) -> usize {
        let max_outcomes = self
            .branches
            .iter()
            .map(|(_, p)| p.outcomes())
            .max()
            .unwrap_or(1);
        usize::BITS as usize - (max_outcomes.max(2) - 1).leading_zeros() as usize
    }

    /// Bits needed to report which branch was drawn.
    pub fn branch_bits(&self) -> usize {
        usize::BITS as usize - (self.branches.len().max(2) - 1).leading_zeros() as usize
    }
}

/// Embed a POVM as a projective measurement on an enlarged space with a
/// fixed |0..0> ancilla, via rank-1 refinement and isometry completion.
///
/// The ancilla dimension is the smallest power of two D with d*D at least
/// the number of refined rank-1 effects; outcome statistics reproduce
/// tr(rho E_i) exactly, and outcomes beyond the refined set have
/// probability zero on the fixed ancilla.
pub fn naimark_dilate(povm: &Povm) -> Result<PmSimulation> {
    let d = povm.dim();
    // Rank-1 refinement, dropping components below 1e-12.
    let mut vectors: Vec<CVector> = Vec::new();
    let mut origin: Vec<usize> = Vec::new();
    for (i, e) in povm.effects().iter().enumerate() {
        let eig = hermitian_eig(e)?;
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam < 1e-12 {
                continue;
            }
            vectors.push(eig.vector(k) * cr(lam.sqrt()));
            origin.push(i);
        }
    }
    let refined = vectors.len();
    let mut ancilla_dim = 1usize;
    while d * ancilla_dim < refined {
        ancilla_dim *= 2;
    }
    let ext = d * ancilla_dim;
    if ext * ext > DEFAULT_ENTRY_CAP {
        return Err(Error::resource(format!(
            "naimark_dilate: extended dimension {ext} exceeds entry cap"
        )));
    }

    // Isometry V: column i holds the i-th components of the refined vectors
    // (conjugated), so V (psi ⊗ |0>) has amplitude <w_k|psi> at row k.
    let mut u = CMatrix::zeros(ext, ext);
    for (k, w) in vectors.iter().enumerate() {
        for i in 0..d {
            u[(k, i * ancilla_dim)] = w[i].conj();
        }
    }
    complete_orthonormal_columns(&mut u, (0..d).map(|i| i * ancilla_dim).collect())?;

    // Projective effects N_j = U† |j><j| U.
    let effects: Vec<CMatrix> = (0..ext)
        .map(|j| {
            let row = u.row(j);
            let mut n = CMatrix::zeros(ext, ext);
            for a in 0..ext {
                for b in 0..ext {
                    n[(a, b)] = row[a].conj() * row[b];
                }
            }
            n
        })
        .collect();
    let branch = Povm::new(effects)?;
    let post: Vec<usize> = (0..ext)
        .map(|j| if j < refined { origin[j] } else { 0 })
        .collect();

    let sim = PmSimulation {
        ancilla: Ket::basis(ancilla_dim, 0),
        branches: vec![(1.0, branch)],
        postprocess: vec![post],
        original_outcomes: povm.outcomes(),
    };
    sim.validate()?;
    Ok(sim)
}

/// Gram-Schmidt completion: the columns listed in `fixed` already form an
/// orthonormal set; fill the remaining columns from standard basis vectors
/// in ascending index order.
fn complete_orthonormal_columns(u: &mut CMatrix, fixed: Vec<usize>) -> Result<()> {
    let n = u.nrows();
    let mut have: Vec<CVector> = fixed.iter().map(|&c| u.column(c).into_owned()).collect();
    let mut free_slots: Vec<usize> = (0..n).filter(|c| !fixed.contains(c)).collect();
    free_slots.sort_unstable();
    let mut slot_iter = free_slots.into_iter();
    for b in 0..n {
        if have.len() == n {
            break;
        }
        let mut v = CVector::zeros(n);
        v[b] = cr(1.0);
        for w in &have {
            let coeff: num_complex::Complex64 =
                w.iter().zip(v.iter()).map(|(a, x)| a.conj() * x).sum();
            v -= w * coeff;
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v /= cr(norm);
        let slot = slot_iter
            .next()
            .ok_or_else(|| Error::contract("completion ran out of column slots"))?;
        for i in 0..n {
            u[(i, slot)] = v[i];
        }
        have.push(v);
    }
    if have.len() != n {
        return Err(Error::contract("orthonormal completion failed"));
    }
    Ok(())
}

/// Randomized projective decomposition of a single effect without ancilla:
/// a layered (telescoping) mixture of threshold projectors.
///
/// With eigenvalues sorted descending, projector P_k spans the top k
/// eigenvectors and carries weight lambda_k - lambda_{k+1}
/// (lambda_{d+1} = 0); weight 1 - lambda_1 goes to a never-accepting branch.
pub fn pm_simulate_two_outcome(e: &CMatrix) -> Result<PmSimulation> {
    if !is_effect(e) {
        return Err(Error::contract("pm_simulate_two_outcome: not an effect"));
    }
    let d = e.nrows();
    let eig = hermitian_eig(e)?;
    let mut branches: Vec<(f64, Povm)> = Vec::new();
    let mut postprocess: Vec<Vec<usize>> = Vec::new();
    let mut running = CMatrix::zeros(d, d);
    for k in 0..d {
        let lam_k = eig.eigenvalues[k].clamp(0.0, 1.0);
        let lam_next = if k + 1 < d {
            eig.eigenvalues[k + 1].clamp(0.0, 1.0)
        } else {
            0.0
        };
        let v = eig.eigenvectors.column(k);
        for i in 0..d {
            for j in 0..d {
                running[(i, j)] += v[i] * v[j].conj();
            }
        }
        let weight = lam_k - lam_next;
        if weight > 1e-15 {
            branches.push((weight, Povm::two_outcome(running.clone())?));
            postprocess.push(vec![0, 1]);
        }
    }
    let top = eig
        .eigenvalues
        .first()
        .copied()
        .unwrap_or(0.0)
        .clamp(0.0, 1.0);
    let reject_weight = 1.0 - top;
    if reject_weight > 1e-15 {
        branches.push((reject_weight, Povm::two_outcome(CMatrix::zeros(d, d))?));
        postprocess.push(vec![0, 1]);
    }
    // Absorb rounding into the largest weight so the mixture is exact.
    let total: f64 = branches.iter().map(|(w, _)| *w).sum();
    if let Some(max) = branches
        .iter_mut()
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
    {
        max.0 += 1.0 - total;
    }
    let sim = PmSimulation {
        ancilla: Ket::basis(1, 0),
        branches,
        postprocess,
        original_outcomes: 2,
    };
    sim.validate()?;
    Ok(sim)
}

/// Draw an index from a probability vector. The vector must be nonnegative
/// and sum to 1 within 1e-6; it is renormalized internally.
pub fn sample_outcome(rng: &mut ChaCha8Rng, probs: &[f64]) -> Result<usize> {
    if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::contract(
            "sample_outcome: negative or non-finite probability",
        ));
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::contract("sample_outcome: all-zero probabilities"));
    }
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::contract(format!(
            "sample_outcome: probabilities sum to {total}, outside tolerance"
        )));
    }
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(probs.len() - 1)
}
