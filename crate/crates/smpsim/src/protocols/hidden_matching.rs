//! Hidden-matching protocols: the one-way phase-state protocol, the
//! edge-disjoint matching family, and the doubled instance solved by a
//! two-way LOCC referee pair (with an all-2-value round decomposition).
//!
//! Nodes are 0-indexed; `x(i)` is bit `i` of the input string. Phase states
//! live on the node register (dimension n); matching indices are encoded in
//! the computational basis of a minimal-width register.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fingerprints::BitString;
use crate::linalg::{basis_outer, cr, identity, zeros, CMatrix, CVector, DensityMatrix, Ket};
use crate::measurements::Instrument;
use crate::protocols::locc::{run_locc_exact, History, LoccProtocol, LoccSide};

/// A perfect matching on nodes 0..n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn new(n: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::contract("Matching: odd node count"));
        }
        for p in pairs.iter_mut() {
            if p.0 > p.1 {
                *p = (p.1, p.0);
            }
        }
        pairs.sort_unstable();
        let mut seen = vec![false; n];
        for &(i, j) in &pairs {
            if i == j || j >= n {
                return Err(Error::contract(format!("Matching: bad edge ({i}, {j})")));
            }
            if seen[i] || seen[j] {
                return Err(Error::contract(format!(
                    "Matching: node reused in ({i}, {j})"
                )));
            }
            seen[i] = true;
            seen[j] = true;
        }
        if pairs.len() != n / 2 {
            return Err(Error::contract("Matching: not perfect"));
        }
        Ok(Self { n, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let e = if i <= j { (i, j) } else { (j, i) };
        self.pairs.binary_search(&e).is_ok()
    }
}

/// Pairwise edge-disjoint perfect matchings covering the complete graph.
#[derive(Debug, Clone)]
pub struct MatchingFamily {
    n: usize,
    matchings: Vec<Matching>,
}

impl MatchingFamily {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }

    pub fn matching(&self, k: usize) -> &Matching {
        &self.matchings[k]
    }

    pub fn matchings(&self) -> &[Matching] {
        &self.matchings
    }

    pub fn is_pairwise_edge_disjoint(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.matchings {
            for &e in m.pairs() {
                if !seen.insert(e) {
                    return false;
                }
            }
        }
        true
    }
}

/// Round-robin 1-factorization of the complete graph on n nodes: node n-1
/// is fixed and the rest rotate, giving n-1 pairwise edge-disjoint perfect
/// matchings that together cover every edge exactly once.
pub fn matching_family(n: usize) -> Result<MatchingFamily> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::contract(format!(
            "matching_family: n {n} must be even and positive"
        )));
    }
    let rounds = n - 1;
    let mut matchings = Vec::with_capacity(rounds);
    for k in 0..rounds {
        let mut pairs = vec![(n - 1, k)];
        for i in 1..n / 2 {
            let u = (k + i) % rounds;
            let v = (k + rounds - i) % rounds;
            pairs.push((u, v));
        }
        matchings.push(Matching::new(n, pairs)?);
    }
    let family = MatchingFamily { n, matchings };
    debug_assert!(family.is_pairwise_edge_disjoint());
    Ok(family)
}

/// Phase state (1/sqrt(n)) sum_i (-1)^{x(i)} |i>.
pub fn phase_state(x: &BitString) -> Result<Ket> {
    let n = x.len();
    let amp = 1.0 / (n as f64).sqrt();
    let v = CVector::from_fn(n, |i, _| cr(if x.bit(i) { -amp } else { amp }));
    Ket::new(v)
}

/// (|i> + sign |j>)/sqrt(2).
fn edge_ket(n: usize, i: usize, j: usize, minus: bool) -> Ket {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVector::zeros(n);
    v[i] = cr(s);
    v[j] = cr(if minus { -s } else { s });
    Ket::new(v).expect("edge ket is normalized")
}

/// One tuple output of a hidden-matching run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct HmOutcome {
    pub i: usize,
    pub j: usize,
    pub parity: u8,
}

impl HmOutcome {
    pub fn is_correct(&self, x: &BitString, m: &Matching) -> bool {
        m.contains(self.i, self.j) && (x.bit(self.i) ^ x.bit(self.j)) == (self.parity == 1)
    }
}

/// Exact output distribution of the one-way phase-state protocol: project
/// onto the matching's edge subspaces, then measure the surviving edge in
/// the +- basis.
pub fn hm_protocol(n: usize, x: &BitString, m: &Matching) -> Result<Vec<(HmOutcome, f64)>> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::contract(format!(
            "hm_protocol: n {n} must be a power of two"
        )));
    }
    if x.len() != n || m.n() != n {
        return Err(Error::contract("hm_protocol: size mismatch"));
    }
    let psi = phase_state(x)?;
    let mut out = Vec::with_capacity(n);
    for &(i, j) in m.pairs() {
        for minus in [false, true] {
            let basis = edge_ket(n, i, j, minus);
            let amp = basis.inner(&psi);
            out.push((
                HmOutcome {
                    i,
                    j,
                    parity: minus as u8,
                },
                amp.norm_sqr(),
            ));
        }
    }
    Ok(out)
}

/// The two output tuples of a doubled hidden-matching run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DrhmOutputs {
    pub first: HmOutcome,
    pub second: HmOutcome,
}

/// Doubled restricted hidden-matching instance on a fixed matching family.
///
/// Alice holds (x1, M2) and Bob holds (x2, M1). Each sends a phase state
/// plus a basis-encoded matching index. RefA decodes M2's index and sends
/// it over; RefB decodes M1's index and sends it back; each then runs the
/// edge measurement for the matching it learned.
#[derive(Debug, Clone)]
pub struct Drhm {
    n: usize,
    family: MatchingFamily,
    reg_qubits: usize,
}

impl Drhm {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::contract(format!(
                "Drhm: n {n} must be a power of two >= 4"
            )));
        }
        let family = matching_family(n)?;
        let reg_qubits = usize::BITS as usize - (family.len() - 1).leading_zeros() as usize;
        Ok(Self {
            n,
            family,
            reg_qubits,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &MatchingFamily {
        &self.family
    }

    pub fn reg_qubits(&self) -> usize {
        self.reg_qubits
    }

    fn reg_dim(&self) -> usize {
        1 << self.reg_qubits
    }

    /// Total qubits sent: per side, log2 n for the phase state plus the
    /// matching register.
    pub fn message_qubits(&self) -> usize {
        2 * (self.n.trailing_zeros() as usize + self.reg_qubits)
    }

    /// Message states for inputs (x1, m2) at RefA and (x2, m1) at RefB.
    /// Layout per side: phase register (major) ⊗ matching register.
    pub fn states(
        &self,
        x1: &BitString,
        m2: usize,
        x2: &BitString,
        m1: usize,
    ) -> Result<(DensityMatrix, DensityMatrix)> {
        if m1 >= self.family.len() || m2 >= self.family.len() {
            return Err(Error::contract("Drhm::states: matching index out of range"));
        }
        let a = phase_state(x1)?.tensor(&Ket::basis(self.reg_dim(), m2))?;
        let b = phase_state(x2)?.tensor(&Ket::basis(self.reg_dim(), m1))?;
        Ok((DensityMatrix::pure(&a), DensityMatrix::pure(&b)))
    }

    fn register_readout(&self) -> Result<Instrument> {
        let r = self.reg_dim();
        let kraus: Vec<CMatrix> = (0..r)
            .map(|v| {
                crate::linalg::tensor(&identity(self.n), &basis_outer(r, v, v))
                    .expect("within entry cap")
            })
            .collect();
        Instrument::new(kraus)
    }

    /// Edge-and-sign measurement for a decoded matching index, acting on the
    /// phase register. Outcome 2e + s picks edge e of the matching with
    /// parity s. Invalid (unreachable) indices get a trivial instrument.
    fn edge_sign_instrument(&self, decoded: usize) -> Result<Instrument> {
        let r = self.reg_dim();
        if decoded >= self.family.len() {
            return Instrument::new(vec![identity(self.n * r)]);
        }
        let m = self.family.matching(decoded);
        let mut kraus = Vec::with_capacity(self.n);
        for &(i, j) in m.pairs() {
            for minus in [false, true] {
                let k = edge_ket(self.n, i, j, minus).projector();
                kraus.push(crate::linalg::tensor(&k, &identity(r))?);
            }
        }
        Instrument::new(kraus)
    }

    /// Four-message protocol: RefA reads its matching register, RefB reads
    /// its own, then each runs the edge measurement for the matching index
    /// it received.
    pub fn protocol(&self) -> Result<LoccProtocol> {
        let schedule = vec![
            LoccSide::RefA,
            LoccSide::RefB,
            LoccSide::RefA,
            LoccSide::RefB,
        ];
        let mut instruments = BTreeMap::new();
        let readout = Arc::new(self.register_readout()?);
        // One edge measurement per decodable index, shared across histories.
        let edge_sign: Vec<Arc<Instrument>> = (0..self.reg_dim())
            .map(|m| self.edge_sign_instrument(m).map(Arc::new))
            .collect::<Result<_>>()?;
        instruments.insert(History::empty(), Arc::clone(&readout));
        for m2 in 0..self.reg_dim() {
            let h1 = History::empty().extended(m2 as u8);
            instruments.insert(h1.clone(), Arc::clone(&readout));
            for m1 in 0..self.reg_dim() {
                let h2 = h1.extended(m1 as u8);
                let step_a = Arc::clone(&edge_sign[m1]);
                let a_outcomes = step_a.outcomes();
                instruments.insert(h2.clone(), step_a);
                for oa in 0..a_outcomes {
                    let h3 = h2.extended(oa as u8);
                    instruments.insert(h3, Arc::clone(&edge_sign[m2]));
                }
            }
        }
        LoccProtocol::new(schedule, instruments, true)
    }

    /// Decode a full transcript of [`Drhm::protocol`] into the two output
    /// tuples.
    pub fn decode(&self, h: &History) -> Result<DrhmOutputs> {
        if h.len() != 4 {
            return Err(Error::contract(format!(
                "Drhm::decode: transcript {h} has wrong length"
            )));
        }
        let m2 = h.outcome(0) as usize;
        let m1 = h.outcome(1) as usize;
        if m1 >= self.family.len() || m2 >= self.family.len() {
            return Err(Error::contract("Drhm::decode: unreachable matching index"));
        }
        let first = decode_edge_sign(self.family.matching(m1), h.outcome(2));
        let second = decode_edge_sign(self.family.matching(m2), h.outcome(3));
        Ok(DrhmOutputs { first, second })
    }

    // -- 2-value round decomposition ------------------------------------

    fn halving_steps(&self) -> usize {
        (self.n / 2).trailing_zeros() as usize
    }

    /// Rounds of the all-2-value variant:
    /// 2 * reg_qubits register reads plus 2 * log2(n) phase measurements.
    pub fn two_value_round_count(&self) -> usize {
        2 * self.reg_qubits + 2 * (self.halving_steps() + 1)
    }

    fn two_value_schedule(&self) -> Vec<LoccSide> {
        let w = self.reg_qubits;
        let phase_steps = self.halving_steps() + 1;
        let mut s = Vec::new();
        s.extend(std::iter::repeat_n(LoccSide::RefA, w));
        s.extend(std::iter::repeat_n(LoccSide::RefB, w));
        s.extend(std::iter::repeat_n(LoccSide::RefA, phase_steps));
        s.extend(std::iter::repeat_n(LoccSide::RefB, phase_steps));
        s
    }

    /// Projector onto register-bit `bit` having value `val`, lifted to the
    /// full side space.
    fn register_bit_kraus(&self, bit: usize, val: usize) -> Result<CMatrix> {
        let r = self.reg_dim();
        let mut p = zeros(r);
        for v in 0..r {
            if (v >> bit) & 1 == val {
                p[(v, v)] = cr(1.0);
            }
        }
        crate::linalg::tensor(&identity(self.n), &p)
    }

    /// Surviving edge subset after the recorded halving outcomes.
    fn surviving_edges(&self, decoded: usize, path: &[u8]) -> Vec<usize> {
        let m = self.family.matching(decoded);
        let mut set: Vec<usize> = (0..m.pairs().len()).collect();
        for &bit in path {
            let half = set.len() / 2;
            set = if bit == 0 {
                set[..half].to_vec()
            } else {
                set[half..].to_vec()
            };
        }
        set
    }

    fn group_projector(&self, decoded: usize, group: &[usize]) -> CMatrix {
        let m = self.family.matching(decoded);
        let mut p = zeros(self.n);
        for &e in group {
            let (i, j) = m.pairs()[e];
            p[(i, i)] = cr(1.0);
            p[(j, j)] = cr(1.0);
        }
        p
    }

    fn two_value_phase_instrument(
        &self,
        decoded: usize,
        path: &[u8],
        final_step: bool,
    ) -> Result<Instrument> {
        let r = self.reg_dim();
        if decoded >= self.family.len() {
            return Instrument::new(vec![identity(self.n * r), zeros(self.n * r)]);
        }
        if final_step {
            let set = self.surviving_edges(decoded, path);
            let (i, j) = self.family.matching(decoded).pairs()[set[0]];
            let q =
                crate::linalg::tensor(&edge_ket(self.n, i, j, false).projector(), &identity(r))?;
            let comp = identity(self.n * r) - &q;
            Instrument::new(vec![q, comp])
        } else {
            let set = self.surviving_edges(decoded, path);
            let group = &set[..set.len() / 2];
            let p = crate::linalg::tensor(&self.group_projector(decoded, group), &identity(r))?;
            let comp = identity(self.n * r) - &p;
            Instrument::new(vec![p, comp])
        }
    }

    fn decode_bits(h: &History, range: std::ops::Range<usize>) -> usize {
        range.clone().enumerate().fold(0usize, |acc, (bit, pos)| {
            acc | ((h.outcome(pos) as usize) << bit)
        })
    }

    /// Same output behavior as [`Drhm::protocol`], but every instrument is
    /// 2-value: matching registers are read bit by bit, and the phase
    /// measurement recursively halves the edge set before one +- test.
    pub fn two_value_protocol(&self) -> Result<LoccProtocol> {
        let schedule = self.two_value_schedule();
        let w = self.reg_qubits;
        let hs = self.halving_steps();
        // Instruments depend only on (step kind, decoded index, halving
        // path), so distinct ones are built once and shared across the
        // exponentially many conditioning histories.
        let mut bit_reads: Vec<Arc<Instrument>> = Vec::with_capacity(w);
        for bit in 0..w {
            bit_reads.push(Arc::new(Instrument::new(vec![
                self.register_bit_kraus(bit, 0)?,
                self.register_bit_kraus(bit, 1)?,
            ])?));
        }
        let mut phase_cache: BTreeMap<(usize, Vec<u8>, bool), Arc<Instrument>> = BTreeMap::new();
        let mut cached_phase =
            |drhm: &Drhm, m: usize, path: Vec<u8>, last: bool| -> Result<Arc<Instrument>> {
                match phase_cache.entry((m, path, last)) {
                    std::collections::btree_map::Entry::Occupied(e) => Ok(Arc::clone(e.get())),
                    std::collections::btree_map::Entry::Vacant(e) => {
                        let (m, path, last) = e.key().clone();
                        let ins = Arc::new(drhm.two_value_phase_instrument(m, &path, last)?);
                        Ok(Arc::clone(e.insert(ins)))
                    }
                }
            };
        let mut instruments = BTreeMap::new();
        let mut frontier = vec![History::empty()];
        for (step, _) in schedule.iter().enumerate() {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for h in frontier {
                let ins = if step < w {
                    // RefA reads register bit `step`.
                    Arc::clone(&bit_reads[step])
                } else if step < 2 * w {
                    Arc::clone(&bit_reads[step - w])
                } else if step < 2 * w + hs + 1 {
                    // RefA: halvings then the +- test, driven by M1 read
                    // from RefB's register bits.
                    let m1 = Self::decode_bits(&h, w..2 * w);
                    let path: Vec<u8> = (2 * w..step).map(|p| h.outcome(p)).collect();
                    cached_phase(self, m1, path, step == 2 * w + hs)?
                } else {
                    let m2 = Self::decode_bits(&h, 0..w);
                    let base = 2 * w + hs + 1;
                    let path: Vec<u8> = (base..step).map(|p| h.outcome(p)).collect();
                    cached_phase(self, m2, path, step == base + hs)?
                };
                instruments.insert(h.clone(), ins);
                next.push(h.extended(0));
                next.push(h.extended(1));
            }
            frontier = next;
        }
        LoccProtocol::new(schedule, instruments, false)
    }

    /// Decode a full transcript of [`Drhm::two_value_protocol`].
    pub fn decode_two_value(&self, h: &History) -> Result<DrhmOutputs> {
        let w = self.reg_qubits;
        let hs = self.halving_steps();
        if h.len() != self.two_value_round_count() {
            return Err(Error::contract(format!(
                "Drhm::decode_two_value: transcript {h} has wrong length"
            )));
        }
        let m2 = Self::decode_bits(h, 0..w);
        let m1 = Self::decode_bits(h, w..2 * w);
        if m1 >= self.family.len() || m2 >= self.family.len() {
            return Err(Error::contract(
                "Drhm::decode_two_value: unreachable matching index",
            ));
        }
        let a_path: Vec<u8> = (2 * w..2 * w + hs).map(|p| h.outcome(p)).collect();
        let a_edge = self.surviving_edges(m1, &a_path)[0];
        let (i1, j1) = self.family.matching(m1).pairs()[a_edge];
        let b_base = 2 * w + hs + 1;
        let b_path: Vec<u8> = (b_base..b_base + hs).map(|p| h.outcome(p)).collect();
        let b_edge = self.surviving_edges(m2, &b_path)[0];
        let (i2, j2) = self.family.matching(m2).pairs()[b_edge];
        Ok(DrhmOutputs {
            first: HmOutcome {
                i: i1,
                j: j1,
                parity: h.outcome(2 * w + hs),
            },
            second: HmOutcome {
                i: i2,
                j: j2,
                parity: h.outcome(b_base + hs),
            },
        })
    }

    /// Exact distribution over output tuple pairs for either variant.
    pub fn output_distribution(
        &self,
        protocol: &LoccProtocol,
        two_value: bool,
        x1: &BitString,
        m2: usize,
        x2: &BitString,
        m1: usize,
    ) -> Result<BTreeMap<DrhmOutputs, f64>> {
        let (rho_a, rho_b) = self.states(x1, m2, x2, m1)?;
        let dist = run_locc_exact(protocol, &rho_a, &rho_b)?;
        let full_len = protocol.schedule().len();
        let mut out = BTreeMap::new();
        for (h, p) in dist.probabilities() {
            if h.len() != full_len {
                // Degenerate truncation carries only vanishing mass.
                continue;
            }
            let outputs = if two_value {
                self.decode_two_value(h)?
            } else {
                self.decode(h)?
            };
            *out.entry(outputs).or_insert(0.0) += p;
        }
        Ok(out)
    }
}

fn decode_edge_sign(m: &Matching, outcome: u8) -> HmOutcome {
    let e = (outcome / 2) as usize;
    let (i, j) = m.pairs()[e];
    HmOutcome {
        i,
        j,
        parity: outcome % 2,
    }
}
