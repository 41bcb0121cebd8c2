//! Replacing a quantum message by a deterministic classical message.
//!
//! The sender holds a q-qubit state rho and the receiver a family of 2^c
//! two-value effects {E_b}. Working on r copies, the fraction-of-successes
//! observable for index b is F_b = (1/r) sum_j E_b^(j). A deterministic
//! running state starts at the maximally mixed state on all rq qubits;
//! indices whose F_b-trace already estimates tr(E_b rho) within delta are
//! skipped, and each remaining index contributes one (index, truncated
//! probability) pair to the message while the running state is projected
//! onto the spectral window of F_b around the truncated value and
//! renormalized. The receiver replays the same sequence from the message
//! alone.
//!
//! F_b is never materialized: its eigenbasis is the r-fold tensor power of
//! the eigenbasis of E_b, with eigenvalues the averages of the per-copy
//! eigenvalues, so traces and window projections are done factor by factor.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{
    cr, factor_conjugate, hermitian_eig, hermitize, identity, is_effect, max_abs_entry_diff,
    trace_factor_op, trace_re, CMatrix, DensityMatrix,
};
use crate::tol::DEGENERACY_EPS;

/// Run parameters of the replacement procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplaceParams {
    /// Message qubits q (one copy has dimension 2^q).
    pub qubits: usize,
    /// Copies r.
    pub copies: usize,
    /// Estimation accuracy delta.
    pub delta: f64,
    /// Index width c (the effect family has 2^c members).
    pub index_bits: usize,
}

impl ReplaceParams {
    /// Bits kept of each truncated probability: ceil(log2(1/delta)) + 7,
    /// making the truncation error at most delta/128.
    pub fn fraction_bits(&self) -> usize {
        ((1.0 / self.delta).log2().ceil() as usize + 7).min(52)
    }

    /// Per-bad-index trace shrink factor eta = 1 - delta/4.
    pub fn eta(&self) -> f64 {
        1.0 - self.delta / 4.0
    }

    /// Largest pair count consistent with eta^t >= 2^-(rq+1):
    /// floor((rq + 1) / log2(1/eta)).
    pub fn pair_budget(&self) -> usize {
        let rq = (self.copies * self.qubits) as f64;
        ((rq + 1.0) / (1.0 / self.eta()).log2()).floor() as usize
    }

    /// The copy count expressed as C/delta^2 * ln(q/delta): reported so runs
    /// outside the asymptotic regime are visible.
    pub fn implied_rate_constant(&self) -> f64 {
        let q = self.qubits as f64;
        let log_term = (q / self.delta).ln().max(f64::MIN_POSITIVE);
        self.copies as f64 * self.delta * self.delta / log_term
    }

    pub fn total_qubits(&self) -> usize {
        self.copies * self.qubits
    }
}

/// The deterministic message: run parameters plus the ordered list of
/// (bad index, truncated probability) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplaceMessage {
    pub params: ReplaceParams,
    pub pairs: Vec<(u32, f64)>,
}

impl ReplaceMessage {
    pub fn validate(&self) -> Result<()> {
        let budget = self.params.pair_budget();
        if self.pairs.len() > budget {
            return Err(Error::Integrity(format!(
                "message has {} pairs, exceeding the budget {budget}",
                self.pairs.len()
            )));
        }
        let scale = (1u64 << self.params.fraction_bits()) as f64;
        let mut prev: Option<u32> = None;
        for &(b, p) in &self.pairs {
            if b as u64 >= 1u64 << self.params.index_bits {
                return Err(Error::Integrity(format!("index {b} out of range")));
            }
            if let Some(pb) = prev {
                if b <= pb {
                    return Err(Error::Integrity("indices not strictly increasing".into()));
                }
            }
            prev = Some(b);
            let k = p * scale;
            if k < 0.0 || k >= scale || k.fract() != 0.0 {
                return Err(Error::Integrity(format!(
                    "fraction {p} is not a {}-bit truncation",
                    self.params.fraction_bits()
                )));
            }
        }
        Ok(())
    }

    /// Total message length in bits: each pair carries the c-bit index plus
    /// the fixed-width fraction.
    pub fn length_bits(&self) -> usize {
        self.pairs.len() * (self.params.index_bits + self.params.fraction_bits())
    }

    /// Serialize with the documented layout:
    ///
    /// byte 0: format version (1); bytes 1..5: q, r, c, w as u8;
    /// bytes 5..13: delta as IEEE-754 little-endian; bytes 13..17: pair
    /// count t as u32 little-endian; then a packed bit stream, MSB-first,
    /// of t records of (c-bit index, w-bit fraction numerator), zero-padded
    /// to a byte boundary.
    pub fn to_bytes(&self) -> Vec<u8> {
        let w = self.params.fraction_bits();
        let c = self.params.index_bits;
        let mut out = vec![
            1u8,
            self.params.qubits as u8,
            self.params.copies as u8,
            c as u8,
            w as u8,
        ];
        out.extend_from_slice(&self.params.delta.to_le_bytes());
        out.extend_from_slice(&(self.pairs.len() as u32).to_le_bytes());
        let mut bits = BitWriter::new();
        let scale = (1u64 << w) as f64;
        for &(b, p) in &self.pairs {
            bits.push(b as u64, c);
            bits.push((p * scale).round() as u64, w);
        }
        out.extend_from_slice(&bits.finish());
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < 17 {
            return Err(Error::Integrity("message too short".into()));
        }
        if data[0] != 1 {
            return Err(Error::Integrity(format!(
                "unknown format version {}",
                data[0]
            )));
        }
        let qubits = data[1] as usize;
        let copies = data[2] as usize;
        let c = data[3] as usize;
        let w = data[4] as usize;
        let delta = f64::from_le_bytes(data[5..13].try_into().unwrap());
        let count = u32::from_le_bytes(data[13..17].try_into().unwrap()) as usize;
        let params = ReplaceParams {
            qubits,
            copies,
            delta,
            index_bits: c,
        };
        if params.fraction_bits() != w {
            return Err(Error::Integrity(format!(
                "fraction width {w} inconsistent with delta {delta}"
            )));
        }
        let mut bits = BitReader::new(&data[17..]);
        let scale = (1u64 << w) as f64;
        let mut pairs = Vec::with_capacity(count);
        for _ in 0..count {
            let b = bits.pull(c)? as u32;
            let k = bits.pull(w)?;
            pairs.push((b, k as f64 / scale));
        }
        let msg = Self { params, pairs };
        msg.validate()?;
        Ok(msg)
    }
}

struct BitWriter {
    bytes: Vec<u8>,
    cursor: usize,
}

impl BitWriter {
    fn new() -> Self {
        Self {
            bytes: Vec::new(),
            cursor: 0,
        }
    }

    fn push(&mut self, value: u64, width: usize) {
        for i in (0..width).rev() {
            let bit = ((value >> i) & 1) as u8;
            if self.cursor.is_multiple_of(8) {
                self.bytes.push(0);
            }
            let byte = self.bytes.last_mut().unwrap();
            *byte |= bit << (7 - (self.cursor % 8));
            self.cursor += 1;
        }
    }

    fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    cursor: usize,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, cursor: 0 }
    }

    fn pull(&mut self, width: usize) -> Result<u64> {
        let mut out = 0u64;
        for _ in 0..width {
            let byte = self
                .data
                .get(self.cursor / 8)
                .ok_or_else(|| Error::Integrity("bit stream truncated".into()))?;
            let bit = (byte >> (7 - (self.cursor % 8))) & 1;
            out = (out << 1) | bit as u64;
            self.cursor += 1;
        }
        Ok(out)
    }
}

/// Sender- or receiver-side trace of a replacement run: the message, the
/// running-state sequence (one entry per index, shared where unchanged),
/// and the per-index estimates.
#[derive(Debug, Clone)]
pub struct ReplaceRun {
    pub message: ReplaceMessage,
    pub states: Vec<Arc<CMatrix>>,
    pub estimates: Vec<f64>,
}

/// Cap on total qubits rq (running states have dimension 2^{rq}).
pub const MAX_TOTAL_QUBITS: usize = 10;

fn truncate_probability(p: f64, width: usize) -> f64 {
    let scale = (1u64 << width) as f64;
    let k = (p.clamp(0.0, 1.0) * scale).floor().min(scale - 1.0);
    k / scale
}

struct EffectSpectrum {
    /// Per-copy eigenvalues, descending.
    eigenvalues: Vec<f64>,
    /// Per-copy eigenvector matrix (columns).
    basis: CMatrix,
}

fn effect_spectrum(e: &CMatrix) -> Result<EffectSpectrum> {
    let eig = hermitian_eig(e)?;
    Ok(EffectSpectrum {
        eigenvalues: eig.eigenvalues,
        basis: eig.eigenvectors,
    })
}

/// Indices of the r-fold tensor basis whose averaged eigenvalue lies in the
/// closed window [lo, hi]. Index arithmetic matches the left-major tensor
/// convention: the first copy is the most significant digit.
fn window_mask(spectrum: &EffectSpectrum, copies: usize, lo: f64, hi: f64) -> Vec<bool> {
    let base = spectrum.eigenvalues.len();
    let dim = base.pow(copies as u32);
    let mut mask = vec![false; dim];
    for (idx, slot) in mask.iter_mut().enumerate() {
        let mut rem = idx;
        let mut sum = 0.0;
        for _ in 0..copies {
            sum += spectrum.eigenvalues[rem % base];
            rem /= base;
        }
        let avg = sum / copies as f64;
        *slot = lo <= avg && avg <= hi;
    }
    mask
}

/// Project `state` onto the window subspace of F_b and renormalize,
/// reporting the captured trace. Runs in the effect eigenbasis via
/// per-factor conjugations.
fn project_window(
    state: &CMatrix,
    spectrum: &EffectSpectrum,
    copies: usize,
    lo: f64,
    hi: f64,
    index: usize,
) -> Result<(CMatrix, f64)> {
    let base = spectrum.eigenvalues.len();
    let mask = window_mask(spectrum, copies, lo, hi);
    let mut rotated = state.clone();
    let basis_adj = spectrum.basis.adjoint();
    for f in 0..copies {
        factor_conjugate(&mut rotated, &basis_adj, f, base, copies);
    }
    let captured: f64 = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| rotated[(i, i)].re)
        .sum();
    if captured < DEGENERACY_EPS {
        return Err(Error::DegenerateProjection {
            index,
            lo,
            hi,
            trace: captured,
        });
    }
    let dim = rotated.nrows();
    for i in 0..dim {
        for j in 0..dim {
            if !(mask[i] && mask[j]) {
                rotated[(i, j)] = cr(0.0);
            }
        }
    }
    rotated *= cr(1.0 / captured);
    for f in 0..copies {
        factor_conjugate(&mut rotated, &spectrum.basis, f, base, copies);
    }
    Ok((hermitize(&rotated), captured))
}

fn fraction_trace(state: &CMatrix, effect: &CMatrix, copies: usize) -> f64 {
    let base = effect.nrows();
    (0..copies)
        .map(|j| trace_factor_op(state, effect, j, base, copies))
        .sum::<f64>()
        / copies as f64
}

fn check_family(rho: &DensityMatrix, effects: &[CMatrix], copies: usize) -> Result<ReplaceParams> {
    let dim = rho.dim();
    if !dim.is_power_of_two() {
        return Err(Error::contract(
            "replace_message: state dimension must be a power of two",
        ));
    }
    let qubits = dim.trailing_zeros() as usize;
    if !effects.len().is_power_of_two() || effects.is_empty() {
        return Err(Error::contract(
            "replace_message: effect family size must be 2^c",
        ));
    }
    let index_bits = effects.len().trailing_zeros() as usize;
    if copies == 0 || copies * qubits > MAX_TOTAL_QUBITS {
        return Err(Error::resource(format!(
            "replace_message: r*q = {} exceeds cap {MAX_TOTAL_QUBITS}",
            copies * qubits
        )));
    }
    for (b, e) in effects.iter().enumerate() {
        if e.nrows() != dim || !is_effect(e) {
            return Err(Error::contract(format!(
                "replace_message: effect {b} invalid"
            )));
        }
    }
    Ok(ReplaceParams {
        qubits,
        copies,
        delta: f64::NAN, // caller fills
        index_bits,
    })
}

/// Sender side: build the deterministic message for `rho` against the
/// effect family, together with the running-state sequence and estimates.
pub fn replace_message(
    rho: &DensityMatrix,
    effects: &[CMatrix],
    delta: f64,
    copies: usize,
) -> Result<ReplaceRun> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::contract("replace_message: delta must be in (0, 1)"));
    }
    let mut params = check_family(rho, effects, copies)?;
    params.delta = delta;
    let width = params.fraction_bits();
    let big_dim = rho.dim().pow(copies as u32);

    let true_probs: Vec<f64> = effects
        .iter()
        .map(|e| trace_re(&(e * rho.matrix())))
        .collect();

    let mut current = Arc::new(identity(big_dim) * cr(1.0 / big_dim as f64));
    let mut states = Vec::with_capacity(effects.len());
    let mut estimates = Vec::with_capacity(effects.len());
    let mut pairs = Vec::new();
    for (b, effect) in effects.iter().enumerate() {
        states.push(Arc::clone(&current));
        let observed = fraction_trace(&current, effect, copies);
        if (observed - true_probs[b]).abs() <= delta {
            estimates.push(observed);
        } else {
            let truncated = truncate_probability(true_probs[b], width);
            pairs.push((b as u32, truncated));
            let spectrum = effect_spectrum(effect)?;
            let (next, _) = project_window(
                &current,
                &spectrum,
                copies,
                truncated - delta / 2.0,
                truncated + delta / 2.0,
                b,
            )?;
            current = Arc::new(next);
            estimates.push(truncated);
        }
    }
    let message = ReplaceMessage { params, pairs };
    message.validate()?;
    Ok(ReplaceRun {
        message,
        states,
        estimates,
    })
}

/// Receiver side: replay the running-state sequence from the message alone
/// and produce the estimates p'_b (the F_b-trace for skipped indices, the
/// transmitted truncation for listed ones).
pub fn reconstruct_estimates(message: &ReplaceMessage, effects: &[CMatrix]) -> Result<ReplaceRun> {
    message.validate()?;
    let params = message.params;
    let dim = 1usize << params.qubits;
    if effects.len() != 1usize << params.index_bits {
        return Err(Error::Integrity(
            "reconstruct: effect family size mismatch".into(),
        ));
    }
    for e in effects {
        if e.nrows() != dim || !is_effect(e) {
            return Err(Error::Integrity("reconstruct: invalid effect".into()));
        }
    }
    let big_dim = dim.pow(params.copies as u32);
    let listed: std::collections::BTreeMap<u32, f64> = message.pairs.iter().copied().collect();

    let mut current = Arc::new(identity(big_dim) * cr(1.0 / big_dim as f64));
    let mut states = Vec::with_capacity(effects.len());
    let mut estimates = Vec::with_capacity(effects.len());
    for (b, effect) in effects.iter().enumerate() {
        states.push(Arc::clone(&current));
        match listed.get(&(b as u32)) {
            None => estimates.push(fraction_trace(&current, effect, params.copies)),
            Some(&truncated) => {
                let spectrum = effect_spectrum(effect)?;
                let projected = project_window(
                    &current,
                    &spectrum,
                    params.copies,
                    truncated - params.delta / 2.0,
                    truncated + params.delta / 2.0,
                    b,
                );
                let (next, _) = projected
                    .map_err(|e| Error::Integrity(format!("replay diverged at index {b}: {e}")))?;
                current = Arc::new(next);
                estimates.push(truncated);
            }
        }
    }
    Ok(ReplaceRun {
        message: message.clone(),
        states,
        estimates,
    })
}

/// Largest entrywise deviation between two running-state sequences.
pub fn sequence_distance(a: &ReplaceRun, b: &ReplaceRun) -> f64 {
    a.states
        .iter()
        .zip(b.states.iter())
        .map(|(x, y)| max_abs_entry_diff(x, y))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_outer;
    use crate::sampling::{random_density, random_effect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(51)
    }

    #[test]
    fn all_identity_effects_empty_message() {
        let mut r = rng();
        let rho = random_density(2, &mut r);
        let effects = vec![identity(2), identity(2)];
        let run = replace_message(&rho, &effects, 0.3, 3).unwrap();
        assert!(run.message.pairs.is_empty());
        for (b, est) in run.estimates.iter().enumerate() {
            assert!((est - 1.0).abs() < 1e-10, "estimate {b} = {est}");
        }
        // Receiver of an empty message derives every estimate from the
        // maximally mixed state: tr(E_b)/2^q.
        let replay = reconstruct_estimates(&run.message, &effects).unwrap();
        for est in &replay.estimates {
            assert!((est - trace_re(&effects[0]) / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn half_identity_effects_are_good() {
        // F_b = I/2 and p_b = 1/2: the mixed-state trace matches exactly.
        let mut r = rng();
        let rho = random_density(2, &mut r);
        let effects = vec![identity(2) * cr(0.5), identity(2) * cr(0.5)];
        let run = replace_message(&rho, &effects, 0.1, 3).unwrap();
        assert!(run.message.pairs.is_empty());
        for est in &run.estimates {
            assert!((est - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_message_estimates_are_dimension_fractions() {
        // F_b on the maximally mixed state traces to tr(E_b)/2^q.
        let mut r = rng();
        let rho = random_density(2, &mut r);
        let e0 = random_effect(2, &mut r);
        // Choose an effect whose mixed-state trace is close to p_b so it is
        // skipped: E = p * I has both equal to p.
        let effects = vec![e0.clone(), identity(2) * cr(0.25)];
        let run = replace_message(&rho, &effects, 0.9, 2).unwrap();
        for (b, est) in run.estimates.iter().enumerate() {
            if !run.message.pairs.iter().any(|&(bb, _)| bb as usize == b) {
                let expected = trace_re(&effects[b]) / 2.0;
                assert!((est - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn truncation_error_small() {
        let params = ReplaceParams {
            qubits: 2,
            copies: 5,
            delta: 0.45,
            index_bits: 3,
        };
        let w = params.fraction_bits();
        assert_eq!(w, 9); // ceil(log2(1/0.45)) + 7 = 2 + 7
        for p in [0.0, 0.1234, 0.5, 0.999, 1.0] {
            let t = truncate_probability(p, w);
            assert!((t - p).abs() <= params.delta / 128.0 + 1e-15);
            assert!(t < 1.0);
        }
    }

    #[test]
    fn pair_budget_pinned() {
        // floor(11 / log2(1/0.8875)) = 63.
        let params = ReplaceParams {
            qubits: 2,
            copies: 5,
            delta: 0.45,
            index_bits: 3,
        };
        assert_eq!(params.pair_budget(), 63);
    }

    #[test]
    fn forced_bad_index_round_trips() {
        // rho = |0><0| and E = |0><0|: p_b = 1, while the mixed-state
        // F-trace is 1/2, so the index is bad for small delta.
        let rho = DensityMatrix::new(basis_outer(2, 0, 0)).unwrap();
        let effects = vec![basis_outer(2, 0, 0), identity(2) * cr(0.5)];
        let run = replace_message(&rho, &effects, 0.2, 4).unwrap();
        assert_eq!(run.message.pairs.len(), 1);
        assert_eq!(run.message.pairs[0].0, 0);
        let replay = reconstruct_estimates(&run.message, &effects).unwrap();
        assert!(sequence_distance(&run, &replay) < 1e-10);
        for (a, b) in run.estimates.iter().zip(replay.estimates.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn estimates_within_delta_on_random_instances() {
        let mut r = rng();
        let delta = 0.45;
        for _ in 0..5 {
            let rho = random_density(4, &mut r);
            let effects: Vec<CMatrix> = (0..8).map(|_| random_effect(4, &mut r)).collect();
            let run = match replace_message(&rho, &effects, delta, 2) {
                Ok(run) => run,
                Err(Error::DegenerateProjection { .. }) => continue,
                Err(e) => panic!("unexpected error {e}"),
            };
            let replay = reconstruct_estimates(&run.message, &effects).unwrap();
            assert!(sequence_distance(&run, &replay) < 1e-10);
            for (b, est) in replay.estimates.iter().enumerate() {
                let truth = trace_re(&(&effects[b] * rho.matrix()));
                assert!(
                    (est - truth).abs() <= delta + 1e-9,
                    "index {b}: estimate {est} truth {truth}"
                );
            }
        }
    }

    #[test]
    fn serialization_round_trip() {
        let params = ReplaceParams {
            qubits: 2,
            copies: 5,
            delta: 0.45,
            index_bits: 3,
        };
        let w = params.fraction_bits();
        let scale = (1u64 << w) as f64;
        let msg = ReplaceMessage {
            params,
            pairs: vec![(1, 37.0 / scale), (5, 300.0 / scale), (7, 0.0)],
        };
        msg.validate().unwrap();
        let bytes = msg.to_bytes();
        let back = ReplaceMessage::from_bytes(&bytes).unwrap();
        assert_eq!(msg, back);
        assert_eq!(msg.length_bits(), 3 * (3 + 9));
    }

    #[test]
    fn serialization_rejects_corruption() {
        let params = ReplaceParams {
            qubits: 2,
            copies: 5,
            delta: 0.45,
            index_bits: 3,
        };
        let msg = ReplaceMessage {
            params,
            pairs: vec![(2, 0.25)],
        };
        let mut bytes = msg.to_bytes();
        bytes[0] = 9; // bad version
        assert!(ReplaceMessage::from_bytes(&bytes).is_err());
        let mut short = msg.to_bytes();
        short.truncate(16);
        assert!(ReplaceMessage::from_bytes(&short).is_err());
    }

    #[test]
    fn cap_enforced() {
        let mut r = rng();
        let rho = random_density(4, &mut r);
        let effects = vec![identity(4); 2];
        assert!(matches!(
            replace_message(&rho, &effects, 0.3, 6),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn window_projection_matches_dense_oracle() {
        // Two copies of a qubit effect: build F = (E(x)I + I(x)E)/2 densely,
        // project a random two-copy state through its spectral window with
        // the general-purpose projector, and compare against the
        // factor-structured route.
        use crate::linalg::{hermitian_eig, tensor, window_projector};
        let mut r = rng();
        let copies = 2;
        let mut compared = 0usize;
        for _ in 0..10 {
            let e = random_effect(2, &mut r);
            let rho = random_density(4, &mut r);
            let f_dense =
                (tensor(&e, &identity(2)).unwrap() + tensor(&identity(2), &e).unwrap()) * cr(0.5);
            // Window between distinct averaged eigenvalues, with margin so
            // both routes agree on membership.
            let eig = hermitian_eig(&f_dense).unwrap();
            let mid = (eig.eigenvalues[0] + eig.eigenvalues[eig.eigenvalues.len() - 1]) / 2.0;
            let (lo, hi) = (mid - 0.2, mid + 0.2);
            let p = window_projector(&f_dense, lo, hi).unwrap();
            let projected = &p * rho.matrix() * &p;
            let captured_dense = trace_re(&projected);
            if captured_dense < 1e-6 {
                continue;
            }
            let dense_state = projected * cr(1.0 / captured_dense);

            let spectrum = effect_spectrum(&e).unwrap();
            let (fast_state, captured_fast) =
                project_window(rho.matrix(), &spectrum, copies, lo, hi, 0).unwrap();
            assert!((captured_dense - captured_fast).abs() < 1e-10);
            assert!(crate::linalg::max_abs_entry_diff(&dense_state, &fast_state) < 1e-10);
            compared += 1;
        }
        assert!(compared >= 5, "only {compared} windows had mass");
    }
}
