//! Two-referee LOCC protocol engine.
//!
//! A protocol is a schedule of measurement turns plus a map from outcome
//! history to the instrument to apply next. `run_locc_exact` enumerates the
//! full transcript distribution by depth-first evolution of both referees'
//! post-states; `run_locc_sampled` draws transcripts for cross-checks.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;
use crate::measurements::{sample_outcome, Instrument, PostState};
use crate::sampling::random_two_value_instrument;

/// Which referee measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LoccSide {
    RefA,
    RefB,
}

/// Outcome history, one entry per completed measurement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct History(pub Vec<u8>);

impl History {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn extended(&self, outcome: u8) -> Self {
        let mut v = self.0.clone();
        v.push(outcome);
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn outcome(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn prefix(&self, len: usize) -> History {
        History(self.0[..len].to_vec())
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }
}

impl std::fmt::Display for History {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &o in &self.0 {
            if o < 10 {
                write!(f, "{o}")?;
            } else {
                write!(f, "({o})")?;
            }
        }
        Ok(())
    }
}

/// Maximum schedule length accepted by the exact engine (2r <= 20 plus the
/// final output measurement).
pub const MAX_SCHEDULE_LEN: usize = 21;

/// A two-referee LOCC protocol: turn schedule plus history-conditioned
/// instruments. Instruments are keyed by the history observed so far; the
/// step index is the history length. Map entries are shared, so histories
/// whose instrument depends only on part of the conditioning cost nothing
/// extra.
#[derive(Debug, Clone)]
pub struct LoccProtocol {
    schedule: Vec<LoccSide>,
    instruments: BTreeMap<History, Arc<Instrument>>,
    multi_value: bool,
}

impl LoccProtocol {
    pub fn new(
        schedule: Vec<LoccSide>,
        instruments: BTreeMap<History, Arc<Instrument>>,
        multi_value: bool,
    ) -> Result<Self> {
        if schedule.is_empty() {
            return Err(Error::contract("LoccProtocol: empty schedule"));
        }
        if !multi_value {
            for (h, ins) in &instruments {
                if !ins.is_two_value() {
                    return Err(Error::contract(format!(
                        "LoccProtocol: instrument at history {h} has {} outcomes but protocol is 2-value",
                        ins.outcomes()
                    )));
                }
            }
        }
        Ok(Self {
            schedule,
            instruments,
            multi_value,
        })
    }

    /// Standard 2-value protocol with 2r alternations starting at RefA plus
    /// the final output measurement by RefA: schedule A B A B ... A with
    /// 2r + 1 steps, instruments drawn at random.
    pub fn random_two_value(
        rounds: usize,
        dim_a: usize,
        dim_b: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let steps = 2 * rounds + 1;
        let schedule: Vec<LoccSide> = (0..steps)
            .map(|s| {
                if s % 2 == 0 {
                    LoccSide::RefA
                } else {
                    LoccSide::RefB
                }
            })
            .collect();
        let mut instruments = BTreeMap::new();
        let mut frontier = vec![History::empty()];
        for side in &schedule {
            let dim = if *side == LoccSide::RefA {
                dim_a
            } else {
                dim_b
            };
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for h in frontier {
                instruments.insert(h.clone(), Arc::new(random_two_value_instrument(dim, rng)));
                next.push(h.extended(0));
                next.push(h.extended(1));
            }
            frontier = next;
        }
        Self::new(schedule, instruments, false)
    }

    pub fn schedule(&self) -> &[LoccSide] {
        &self.schedule
    }

    pub fn side_at(&self, step: usize) -> LoccSide {
        self.schedule[step]
    }

    /// Number of full A/B alternations before the output measurement
    /// (schedule length 2r + 1 gives r).
    pub fn rounds(&self) -> usize {
        (self.schedule.len() - 1) / 2
    }

    pub fn is_multi_value(&self) -> bool {
        self.multi_value
    }

    pub fn instrument(&self, hist: &History) -> Result<&Instrument> {
        self.instruments.get(hist).map(Arc::as_ref).ok_or_else(|| {
            Error::contract(format!("LoccProtocol: no instrument for history {hist}"))
        })
    }

    pub fn instruments(&self) -> &BTreeMap<History, Arc<Instrument>> {
        &self.instruments
    }
}

/// Exact probability of every transcript.
#[derive(Debug, Clone, Default)]
pub struct TranscriptDistribution {
    probs: BTreeMap<History, f64>,
}

impl TranscriptDistribution {
    pub fn probabilities(&self) -> &BTreeMap<History, f64> {
        &self.probs
    }

    pub fn probability(&self, h: &History) -> f64 {
        self.probs.get(h).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Probability mass of full-length transcripts whose final outcome is 1.
    /// Histories truncated at a degenerate branch never accept.
    pub fn acceptance_by_final_outcome(&self, full_len: usize) -> f64 {
        self.probs
            .iter()
            .filter(|(h, _)| h.len() == full_len && h.last() == Some(1))
            .map(|(_, p)| p)
            .sum()
    }

    /// Total variation distance over transcripts.
    pub fn tv_distance(&self, other: &TranscriptDistribution) -> f64 {
        let mut keys: Vec<&History> = self.probs.keys().collect();
        for k in other.probs.keys() {
            if !self.probs.contains_key(k) {
                keys.push(k);
            }
        }
        0.5 * keys
            .into_iter()
            .map(|k| (self.probability(k) - other.probability(k)).abs())
            .sum::<f64>()
    }
}

/// Exact transcript distribution of a protocol on message states
/// `rho_a` (held by RefA) and `rho_b` (held by RefB).
///
/// Branches with conditional probability below the degeneracy threshold
/// keep their exact probability but are not descended.
pub fn run_locc_exact(
    protocol: &LoccProtocol,
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
) -> Result<TranscriptDistribution> {
    if protocol.schedule.len() > MAX_SCHEDULE_LEN {
        return Err(Error::contract(format!(
            "run_locc_exact: schedule length {} exceeds cap {MAX_SCHEDULE_LEN}",
            protocol.schedule.len()
        )));
    }
    let mut dist = TranscriptDistribution::default();
    descend(protocol, &History::empty(), 1.0, rho_a, rho_b, &mut dist)?;
    Ok(dist)
}

fn descend(
    protocol: &LoccProtocol,
    hist: &History,
    prob: f64,
    state_a: &DensityMatrix,
    state_b: &DensityMatrix,
    dist: &mut TranscriptDistribution,
) -> Result<()> {
    let step = hist.len();
    if step == protocol.schedule.len() {
        if prob > 0.0 {
            dist.probs.insert(hist.clone(), prob);
        }
        return Ok(());
    }
    let side = protocol.schedule[step];
    let ins = protocol.instrument(hist)?;
    let state = match side {
        LoccSide::RefA => state_a,
        LoccSide::RefB => state_b,
    };
    for m in 0..ins.outcomes() {
        let (q, post) = ins.apply(state, m)?;
        let child = hist.extended(m as u8);
        let child_prob = prob * q;
        match post {
            PostState::Degenerate => {
                if child_prob > 0.0 {
                    dist.probs.insert(child, child_prob);
                }
            }
            PostState::State(new_state) => match side {
                LoccSide::RefA => descend(protocol, &child, child_prob, &new_state, state_b, dist)?,
                LoccSide::RefB => descend(protocol, &child, child_prob, state_a, &new_state, dist)?,
            },
        }
    }
    Ok(())
}

/// Empirical transcript frequencies from `shots` sampled executions.
pub fn run_locc_sampled(
    protocol: &LoccProtocol,
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    shots: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeMap<History, f64>> {
    let mut counts: BTreeMap<History, usize> = BTreeMap::new();
    for _ in 0..shots {
        let mut hist = History::empty();
        let mut state_a = rho_a.clone();
        let mut state_b = rho_b.clone();
        for step in 0..protocol.schedule.len() {
            let side = protocol.schedule[step];
            let ins = protocol.instrument(&hist)?;
            let state = match side {
                LoccSide::RefA => &state_a,
                LoccSide::RefB => &state_b,
            };
            let probs = ins.probabilities(state);
            let m = sample_outcome(rng, &probs)?;
            let (p, post) = ins.apply(state, m)?;
            hist = hist.extended(m as u8);
            if step + 1 == protocol.schedule.len() {
                break;
            }
            // Sampling a sub-threshold branch and then demanding its
            // post-state is a degenerate-branch error.
            let next = post.require_state(p, &format!("sampled transcript {hist}"))?;
            match side {
                LoccSide::RefA => state_a = next,
                LoccSide::RefB => state_b = next,
            }
        }
        *counts.entry(hist).or_insert(0) += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(h, c)| (h, c as f64 / shots as f64))
        .collect())
}
