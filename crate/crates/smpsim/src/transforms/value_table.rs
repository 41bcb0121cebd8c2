//! Nested-trace value tables for 2-value LOCC protocols, conditional
//! probabilities as trace ratios, validity clamping of estimated tables, and
//! the referee-side simulation algebra with its error bounds.
//!
//! For one side of a protocol, the table entry `v[(h, m)]` is the trace of
//! the side's Kraus chain selected by history `h` extended with own outcome
//! `m`, applied to that side's message state. Own-turn histories have even
//! length for RefA and odd length for RefB; in both cases the parent of
//! `(h, m)` is `(h[..len-2], h[len-2])`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{trace_re, CMatrix, DensityMatrix};
use crate::measurements::{Instrument, PostState};
use crate::protocols::locc::{History, LoccProtocol, LoccSide};
use crate::tol::DEGENERACY_EPS;

/// Value table for one side of a 2-value protocol.
#[derive(Debug, Clone)]
pub struct ValueTable {
    side: LoccSide,
    rounds: usize,
    values: BTreeMap<(History, u8), f64>,
}

/// Cap on protocol rounds for table extraction (tree size 4^r).
pub const MAX_TABLE_ROUNDS: usize = 10;

/// Compute the value table of `side` from the protocol's instruments and
/// that side's message state.
pub fn value_table(
    protocol: &LoccProtocol,
    side: LoccSide,
    rho_own: &DensityMatrix,
) -> Result<ValueTable> {
    if protocol.is_multi_value() {
        return Err(Error::contract("value_table: protocol must be 2-value"));
    }
    let rounds = protocol.rounds();
    if rounds > MAX_TABLE_ROUNDS {
        return Err(Error::contract(format!(
            "value_table: rounds {rounds} exceed cap {MAX_TABLE_ROUNDS}"
        )));
    }
    let mut values = BTreeMap::new();
    walk(
        protocol,
        side,
        &History::empty(),
        rho_own.matrix().clone(),
        &mut values,
    )?;
    Ok(ValueTable {
        side,
        rounds,
        values,
    })
}

fn walk(
    protocol: &LoccProtocol,
    side: LoccSide,
    hist: &History,
    omega: CMatrix,
    values: &mut BTreeMap<(History, u8), f64>,
) -> Result<()> {
    let step = hist.len();
    if step == protocol.schedule().len() {
        return Ok(());
    }
    if protocol.side_at(step) == side {
        let ins = protocol.instrument(hist)?;
        for m in 0..2u8 {
            let k = ins.kraus(m as usize);
            let next = k * &omega * k.adjoint();
            values.insert((hist.clone(), m), trace_re(&next).max(0.0));
            walk(protocol, side, &hist.extended(m), next, values)?;
        }
    } else {
        for o in 0..2u8 {
            walk(protocol, side, &hist.extended(o), omega.clone(), values)?;
        }
    }
    Ok(())
}

impl ValueTable {
    /// Build a table directly from raw values (used for perturbed tables).
    pub fn from_values(
        side: LoccSide,
        rounds: usize,
        values: BTreeMap<(History, u8), f64>,
    ) -> Self {
        Self {
            side,
            rounds,
            values,
        }
    }

    pub fn side(&self) -> LoccSide {
        self.side
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn value(&self, h: &History, m: u8) -> f64 {
        self.values[&(h.clone(), m)]
    }

    pub fn get(&self, h: &History, m: u8) -> Option<f64> {
        self.values.get(&(h.clone(), m)).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(History, u8), &f64)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Whether `(h, m)` is a root entry (empty conditioning for RefA, a
    /// single other-side outcome for RefB).
    fn is_root(&self, h: &History) -> bool {
        match self.side {
            LoccSide::RefA => h.is_empty(),
            LoccSide::RefB => h.len() == 1,
        }
    }

    fn parent_key(h: &History) -> (History, u8) {
        let len = h.len();
        (h.prefix(len - 2), h.outcome(len - 2))
    }

    /// Depth of an entry: number of own measurements already recorded in
    /// its conditioning history.
    pub fn depth(&self, h: &History) -> usize {
        match self.side {
            LoccSide::RefA => h.len() / 2,
            LoccSide::RefB => (h.len() - 1) / 2,
        }
    }

    /// Check the root normalization and branching-consistency identities.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (h, m) in self.values.keys() {
            if *m == 1 {
                continue;
            }
            let pair = self.value(h, 0) + self.value(h, 1);
            if self.is_root(h) {
                if (pair - 1.0).abs() > tol {
                    return Err(Error::contract(format!(
                        "ValueTable: root at {h} sums to {pair}, not 1"
                    )));
                }
            } else {
                let parent = {
                    let (ph, pm) = Self::parent_key(h);
                    self.value(&ph, pm)
                };
                if (pair - parent).abs() > tol {
                    return Err(Error::contract(format!(
                        "ValueTable: branching at {h}: {pair} vs parent {parent}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Conditional probabilities `v[(h, m)] / v[parent]` (roots divide by 1).
    /// Branches under a vanishing parent get probability 0.
    pub fn conditionals(&self) -> BTreeMap<(History, u8), f64> {
        self.values
            .iter()
            .map(|((h, m), &v)| {
                let denom = if self.is_root(h) {
                    1.0
                } else {
                    let (ph, pm) = Self::parent_key(h);
                    self.value(&ph, pm)
                };
                let p = if denom < DEGENERACY_EPS {
                    0.0
                } else {
                    v / denom
                };
                ((h.clone(), *m), p)
            })
            .collect()
    }

    /// Entrywise adversarial perturbation within [-delta, delta].
    pub fn perturbed_uniform(&self, delta: f64, rng: &mut rand_chacha::ChaCha8Rng) -> ValueTable {
        use rand::Rng;
        let values = self
            .values
            .iter()
            .map(|(k, &v)| (k.clone(), v + delta * (2.0 * rng.gen::<f64>() - 1.0)))
            .collect();
        ValueTable::from_values(self.side, self.rounds, values)
    }

    /// Structured worst-case perturbation patterns: all +delta, all -delta,
    /// and sign alternating with entry depth.
    pub fn perturbed_pattern(&self, delta: f64, pattern: PerturbPattern) -> ValueTable {
        let values = self
            .values
            .iter()
            .map(|((h, m), &v)| {
                let shift = match pattern {
                    PerturbPattern::AllUp => delta,
                    PerturbPattern::AllDown => -delta,
                    PerturbPattern::AlternatingDepth => {
                        if self.depth(h).is_multiple_of(2) {
                            delta
                        } else {
                            -delta
                        }
                    }
                };
                ((h.clone(), *m), v + shift)
            })
            .collect();
        ValueTable::from_values(self.side, self.rounds, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbPattern {
    AllUp,
    AllDown,
    AlternatingDepth,
}

// ---------------------------------------------------------------------------
// Trace-ratio conditionals for measurement chains
// ---------------------------------------------------------------------------

/// Cumulative all-success values v_k = tr(M_0†..M_k† M_k..M_0 rho) for a
/// chain of 2-value instruments, success meaning outcome 0.
pub fn chain_success_values(chain: &[Instrument], rho: &DensityMatrix) -> Vec<f64> {
    let mut omega = rho.matrix().clone();
    let mut out = Vec::with_capacity(chain.len());
    for ins in chain {
        let k = ins.kraus(0);
        omega = k * &omega * k.adjoint();
        out.push(trace_re(&omega).max(0.0));
    }
    out
}

/// Conditional success probabilities v_k / v_{k-1} (v_{-1} = 1) along the
/// all-success path.
pub fn ratio_conditionals(values: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev = 1.0;
    for (step, &v) in values.iter().enumerate() {
        if prev < DEGENERACY_EPS {
            return Err(Error::DegenerateChain { denom: prev, step });
        }
        out.push(v / prev);
        prev = v;
    }
    Ok(out)
}

/// Oracle route: conditional success probabilities computed by applying the
/// instruments one at a time with renormalized post-states.
pub fn sequential_success_probs(chain: &[Instrument], rho: &DensityMatrix) -> Result<Vec<f64>> {
    let mut state = rho.clone();
    let mut out = Vec::with_capacity(chain.len());
    for (step, ins) in chain.iter().enumerate() {
        let (p, post) = ins.apply(&state, 0)?;
        out.push(p);
        match post {
            PostState::State(s) => state = s,
            PostState::Degenerate => {
                if step + 1 < chain.len() {
                    return Err(Error::DegenerateChain { denom: p, step });
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Clamping
// ---------------------------------------------------------------------------

/// Which child value the clamp adjudicates directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClampRule {
    /// Clamp the outcome-0 child into [0, parent] and derive the outcome-1
    /// child as parent - child0. Guarantees exact branching consistency.
    BranchingConsistent,
    /// Clamp the outcome-1 child into [0, parent] directly and derive the
    /// outcome-0 child. Provided for comparison with the two-round analysis.
    OutcomeOneDirect,
}

/// A table of validity-adjusted values: children are nonnegative and sum
/// exactly to their parent.
#[derive(Debug, Clone)]
pub struct ClampedTable {
    side: LoccSide,
    rounds: usize,
    values: BTreeMap<(History, u8), f64>,
}

impl ClampedTable {
    pub fn value(&self, h: &History, m: u8) -> f64 {
        self.values[&(h.clone(), m)]
    }

    pub fn side(&self) -> LoccSide {
        self.side
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(History, u8), &f64)> {
        self.values.iter()
    }

    /// Reinterpret as a raw value table (e.g. to clamp again).
    pub fn as_value_table(&self) -> ValueTable {
        ValueTable::from_values(self.side, self.rounds, self.values.clone())
    }

    /// Conditional probabilities with vanishing parents mapped to 0.
    pub fn conditionals(&self) -> BTreeMap<(History, u8), f64> {
        self.as_value_table().conditionals()
    }
}

/// Adjust a (possibly perturbed) table into valid probabilities: the root
/// pair is clamped into [0, 1] and renormalized exactly; each deeper pair is
/// clamped into [0, parent] with the sibling taking the exact remainder.
pub fn clamp_table(vt: &ValueTable, rule: ClampRule) -> ClampedTable {
    let mut out: BTreeMap<(History, u8), f64> = BTreeMap::new();
    // Keys sorted by history length so parents are processed first.
    let mut keys: Vec<(History, u8)> = vt.entries().map(|(k, _)| k.clone()).collect();
    keys.sort_by_key(|(h, m)| (h.len(), h.clone(), *m));
    for (h, m) in keys {
        if m == 1 {
            continue; // handled with its sibling
        }
        let raw0 = vt.value(&h, 0);
        let raw1 = vt.value(&h, 1);
        let parent = if h.len() < 2 {
            1.0
        } else {
            out[&(h.prefix(h.len() - 2), h.outcome(h.len() - 2))]
        };
        let (v0, v1) = match rule {
            ClampRule::BranchingConsistent => {
                let v0 = raw0.clamp(0.0, parent);
                (v0, parent - v0)
            }
            ClampRule::OutcomeOneDirect => {
                let v1 = raw1.clamp(0.0, parent);
                (parent - v1, v1)
            }
        };
        out.insert((h.clone(), 0), v0);
        out.insert((h, 1), v1);
    }
    ClampedTable {
        side: vt.side(),
        rounds: vt.rounds(),
        values: out,
    }
}

// ---------------------------------------------------------------------------
// Referee-side simulation
// ---------------------------------------------------------------------------

fn full_histories(rounds: usize) -> Vec<History> {
    let len = 2 * rounds;
    (0..(1usize << len))
        .map(|bits| History((0..len).map(|i| ((bits >> i) & 1) as u8).collect()))
        .collect()
}

/// Acceptance probability when the referee simulates RefA from a clamped
/// table and drives RefB with the given exact conditionals: the sum over
/// transcripts of the product of RefB conditionals times the table's final
/// accept value.
pub fn simulate_from_tables(
    table_a: &ClampedTable,
    b_conditionals: &BTreeMap<(History, u8), f64>,
    rounds: usize,
) -> f64 {
    let mut acc = 0.0;
    for h in full_histories(rounds) {
        let mut weight = 1.0;
        for i in 0..rounds {
            let pos = 2 * i + 1;
            let key = (h.prefix(pos), h.outcome(pos));
            weight *= b_conditionals.get(&key).copied().unwrap_or(0.0);
        }
        if weight > 0.0 {
            acc += weight * table_a.value(&h, 1);
        }
    }
    acc
}

/// Acceptance probability when both referees are simulated from clamped
/// tables. The RefB conditional product along a transcript telescopes to the
/// deepest RefB table value, so each transcript contributes the product of
/// the two table values.
pub fn simulate_both_replaced(
    table_a: &ClampedTable,
    table_b: &ClampedTable,
    rounds: usize,
) -> f64 {
    let mut acc = 0.0;
    for h in full_histories(rounds) {
        let last = 2 * rounds - 1;
        let vb = table_b.value(&h.prefix(last), h.outcome(last));
        if vb > 0.0 {
            acc += table_a.value(&h, 1) * vb;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Error bounds
// ---------------------------------------------------------------------------

/// Entrywise clamp error at depth k under per-entry estimation error delta:
/// (k+1) * delta.
pub fn clamp_depth_error_bound(depth: usize, delta: f64) -> f64 {
    (depth as f64 + 1.0) * delta
}

/// Simulation error bound when only RefA's side is replaced: 2*delta for a
/// single round, 2^r (r+1) delta in general.
pub fn replacement_error_bound(rounds: usize, delta: f64) -> f64 {
    if rounds == 1 {
        2.0 * delta
    } else {
        (1u64 << rounds) as f64 * (rounds as f64 + 1.0) * delta
    }
}

/// Conservative envelope when both sides are replaced:
/// 2^{2r} (2(r+1) delta + (r+1)^2 delta^2).
pub fn both_replaced_error_envelope(rounds: usize, delta: f64) -> f64 {
    let r1 = rounds as f64 + 1.0;
    (1u64 << (2 * rounds)) as f64 * (2.0 * r1 * delta + r1 * r1 * delta * delta)
}

/// Leading-order magnitude 2^{2r} r^2 delta^2 reported alongside measured
/// both-replaced errors.
pub fn both_replaced_reference_order(rounds: usize, delta: f64) -> f64 {
    let r = rounds as f64;
    (1u64 << (2 * rounds)) as f64 * r * r * delta * delta
}
