//! Error-correcting codes, quantum fingerprint states and SWAP-test
//! statistics.
//!
//! Bit conventions: position `i` of a [`BitString`] is bit `i`; when a string
//! is read as an integer, position 0 is the least significant bit. Codeword
//! bits are indexed by messages `z` in ascending integer order.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{cr, CVector, Ket};
use crate::tol::IDENTITY_TOL;

/// A fixed-length bit string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// Bits of `value`, position 0 = least significant bit.
    pub fn from_value(value: u64, len: usize) -> Self {
        Self((0..len).map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn random(len: usize, rng: &mut ChaCha8Rng) -> Self {
        Self((0..len).map(|_| rng.gen::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn value(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn hamming_distance(&self, other: &BitString) -> usize {
        assert_eq!(self.len(), other.len(), "hamming_distance: length mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::contract(format!("invalid bit character {ch:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// Code family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeKind {
    /// N = 2^n, codeword bit z = <x, z> mod 2; distance exactly N/2.
    Hadamard,
    /// Codeword = generator * x mod 2; generator rows are the N codeword bits.
    RandomLinear { generator: Vec<BitString> },
}

/// How the recorded minimum distance was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceBound {
    /// Exact minimum over all nonzero messages.
    Exact(usize),
    /// Lower-confidence estimate from sampled nonzero messages.
    Sampled(usize),
}

impl DistanceBound {
    pub fn value(&self) -> usize {
        match *self {
            DistanceBound::Exact(d) | DistanceBound::Sampled(d) => d,
        }
    }
}

/// A verified error-correcting code E : {0,1}^n -> {0,1}^N.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    kind: CodeKind,
    n: usize,
    codeword_len: usize,
    min_distance: DistanceBound,
}

/// Messages per exhaustive distance check are capped at 2^14.
const EXHAUSTIVE_DISTANCE_LIMIT: usize = 14;
/// Sample count for the non-exhaustive distance estimate.
const SAMPLED_DISTANCE_DRAWS: usize = 20_000;

impl CodeSpec {
    /// Hadamard code on n message bits. Requires n <= 20 to keep N = 2^n in
    /// memory; the exact distance N/2 needs no search.
    pub fn hadamard(n: usize) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::contract(format!(
                "hadamard: n {n} out of range 1..=20"
            )));
        }
        let big_n = 1usize << n;
        Ok(Self {
            kind: CodeKind::Hadamard,
            n,
            codeword_len: big_n,
            min_distance: DistanceBound::Exact(big_n / 2),
        })
    }

    /// Default code policy: Hadamard for n <= 12 (exact distance N/2 keeps
    /// acceptance gaps exact), a verified random linear code of length 8n
    /// with relative distance at least 0.1 for 12 < n <= 20.
    pub fn default_for(n: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        if n <= 12 {
            Self::hadamard(n)
        } else if n <= 20 {
            Self::random_linear(n, 8 * n, 0.1, rng)
        } else {
            Err(Error::contract(format!("default_for: n {n} exceeds 20")))
        }
    }

    /// Random linear code with verified distance >= ceil(c * N). The
    /// generator is resampled until the distance check passes.
    pub fn random_linear(
        n: usize,
        codeword_len: usize,
        relative_distance: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if n == 0 || codeword_len == 0 {
            return Err(Error::contract("random_linear: empty dimensions"));
        }
        let target = (relative_distance * codeword_len as f64).ceil() as usize;
        for _ in 0..1000 {
            let generator: Vec<BitString> = (0..codeword_len)
                .map(|_| BitString::random(n, rng))
                .collect();
            let candidate = Self {
                kind: CodeKind::RandomLinear { generator },
                n,
                codeword_len,
                min_distance: DistanceBound::Exact(0),
            };
            let bound = candidate.check_min_distance(rng);
            if bound.value() >= target {
                return Ok(Self {
                    min_distance: bound,
                    ..candidate
                });
            }
        }
        Err(Error::SamplingFailed {
            retries: 1000,
            context: format!("random_linear: no generator reached distance {target}"),
        })
    }

    pub fn message_len(&self) -> usize {
        self.n
    }

    pub fn codeword_len(&self) -> usize {
        self.codeword_len
    }

    pub fn min_distance(&self) -> DistanceBound {
        self.min_distance
    }

    pub fn relative_distance(&self) -> f64 {
        self.min_distance.value() as f64 / self.codeword_len as f64
    }

    /// Encode a message of length n into a codeword of length N.
    pub fn encode(&self, x: &BitString) -> Result<BitString> {
        if x.len() != self.n {
            return Err(Error::contract(format!(
                "encode: message length {} != n {}",
                x.len(),
                self.n
            )));
        }
        match &self.kind {
            CodeKind::Hadamard => {
                let xv = x.value();
                Ok(BitString::new(
                    (0..self.codeword_len as u64)
                        .map(|z| ((xv & z).count_ones() & 1) == 1)
                        .collect(),
                ))
            }
            CodeKind::RandomLinear { generator } => Ok(BitString::new(
                generator
                    .iter()
                    .map(|row| {
                        row.bits()
                            .iter()
                            .zip(x.bits())
                            .filter(|(&g, &b)| g && b)
                            .count()
                            % 2
                            == 1
                    })
                    .collect(),
            )),
        }
    }

    /// Minimum distance over nonzero messages. Exhaustive for n <= 14,
    /// a sampled lower-confidence estimate (flagged) otherwise. Linearity
    /// makes the minimum over pairs a minimum over nonzero codeword weights.
    pub fn check_min_distance(&self, rng: &mut ChaCha8Rng) -> DistanceBound {
        if self.n <= EXHAUSTIVE_DISTANCE_LIMIT {
            let mut min = self.codeword_len;
            for v in 1..(1u64 << self.n) {
                let w = self
                    .encode(&BitString::from_value(v, self.n))
                    .expect("message length fixed")
                    .weight();
                min = min.min(w);
            }
            DistanceBound::Exact(min)
        } else {
            let mut min = self.codeword_len;
            for _ in 0..SAMPLED_DISTANCE_DRAWS {
                let mut x = BitString::random(self.n, rng);
                while x.weight() == 0 {
                    x = BitString::random(self.n, rng);
                }
                min = min.min(self.encode(&x).expect("length fixed").weight());
            }
            DistanceBound::Sampled(min)
        }
    }
}

/// Quantum fingerprint of `x`: amplitude 1/sqrt(N) on basis |i>|E_i(x)> for
/// each codeword index i (global index 2i + bit, codeword register major).
#[derive(Debug, Clone)]
pub struct Fingerprint {
    pub x: BitString,
    pub state: Ket,
}

pub fn fingerprint(code: &CodeSpec, x: &BitString) -> Result<Fingerprint> {
    let codeword = code.encode(x)?;
    let big_n = code.codeword_len();
    let amp = cr(1.0 / (big_n as f64).sqrt());
    let mut amps = CVector::zeros(big_n * 2);
    for i in 0..big_n {
        amps[2 * i + codeword.bit(i) as usize] = amp;
    }
    Ok(Fingerprint {
        x: x.clone(),
        state: Ket::new(amps)?,
    })
}

/// Overlap <h_x|h_y> computed from Hamming distance: 1 - dist/N.
pub fn fingerprint_overlap(code: &CodeSpec, x: &BitString, y: &BitString) -> Result<f64> {
    let cx = code.encode(x)?;
    let cy = code.encode(y)?;
    Ok(1.0 - cx.hamming_distance(&cy) as f64 / code.codeword_len() as f64)
}

/// Overlap computed from the explicit fingerprint kets. Independent route
/// used to cross-check [`fingerprint_overlap`].
pub fn fingerprint_overlap_via_states(
    code: &CodeSpec,
    x: &BitString,
    y: &BitString,
) -> Result<f64> {
    let fx = fingerprint(code, x)?;
    let fy = fingerprint(code, y)?;
    Ok(fx.state.inner(&fy.state).re)
}

/// SWAP-test acceptance probability 1/2 + overlap^2 / 2.
pub fn swap_accept_prob(overlap: f64) -> f64 {
    0.5 + overlap * overlap / 2.0
}

/// Acceptance probability of the SWAP test computed by explicit circuit
/// simulation: ancilla prepared in |+>, controlled swap of the two
/// registers, Hadamard on the ancilla, then measure the ancilla.
pub fn swap_circuit_sim(a: &Ket, b: &Ket) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::contract(format!(
            "swap_circuit_sim: dimensions {} and {} differ",
            a.dim(),
            b.dim()
        )));
    }
    let d = a.dim();
    let half = d * d;
    let s = std::f64::consts::FRAC_1_SQRT_2;

    // State layout: index = anc * d^2 + i * d + j for |anc>|i>|j>.
    let mut amps: Vec<Complex64> = vec![cr(0.0); 2 * half];
    for i in 0..d {
        for j in 0..d {
            let w = a.amplitudes()[i] * b.amplitudes()[j] * cr(s);
            amps[i * d + j] = w;
            amps[half + i * d + j] = w;
        }
    }
    // Controlled swap on the anc = 1 block.
    for i in 0..d {
        for j in (i + 1)..d {
            amps.swap(half + i * d + j, half + j * d + i);
        }
    }
    // Hadamard on the ancilla, then P(anc = 0).
    let mut p0 = 0.0;
    for k in 0..half {
        let lo = amps[k];
        let hi = amps[half + k];
        p0 += ((lo + hi) * cr(s)).norm_sqr();
    }
    debug_assert!(p0 <= 1.0 + IDENTITY_TOL);
    Ok(p0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::SeedableRng;

    /// Brute-force inner-product oracle for the Hadamard codeword bit:
    /// sum over positions of x_i * z_i mod 2, with z enumerated ascending
    /// and bit i of z = (z >> i) & 1.
    fn hadamard_bit_oracle(x: &BitString, z: u64) -> bool {
        let mut parity = false;
        for i in 0..x.len() {
            if x.bit(i) && (z >> i) & 1 == 1 {
                parity = !parity;
            }
        }
        parity
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn hadamard_zero_message() {
        let code = CodeSpec::hadamard(4).unwrap();
        let cw = code.encode(&BitString::zeros(4)).unwrap();
        assert_eq!(cw, BitString::zeros(16));
    }

    #[test]
    fn hadamard_n2_pinned_value() {
        // Value pinned by the brute-force oracle under the documented
        // little-endian convention.
        let code = CodeSpec::hadamard(2).unwrap();
        let x: BitString = "10".parse().unwrap();
        let expected = BitString::new((0..4).map(|z| hadamard_bit_oracle(&x, z)).collect());
        assert_eq!(expected.to_string(), "0101");
        assert_eq!(code.encode(&x).unwrap(), expected);
    }

    #[test]
    fn hadamard_matches_oracle_exhaustively() {
        let code = CodeSpec::hadamard(3).unwrap();
        for xv in 0..8u64 {
            let x = BitString::from_value(xv, 3);
            let cw = code.encode(&x).unwrap();
            for z in 0..8u64 {
                assert_eq!(cw.bit(z as usize), hadamard_bit_oracle(&x, z));
            }
        }
    }

    #[test]
    fn hadamard_distance_exact() {
        // n=3: exhaustive over the 7 nonzero messages gives N/2 = 4.
        let code = CodeSpec::hadamard(3).unwrap();
        let mut r = rng();
        assert_eq!(code.check_min_distance(&mut r), DistanceBound::Exact(4));
        assert_eq!(code.min_distance().value(), 4);
    }

    #[test]
    fn hadamard_n1_distance() {
        let code = CodeSpec::hadamard(1).unwrap();
        let mut r = rng();
        assert_eq!(code.check_min_distance(&mut r), DistanceBound::Exact(1));
    }

    #[test]
    fn pairwise_distance_at_least_min() {
        let code = CodeSpec::hadamard(6).unwrap();
        let mut r = rng();
        for _ in 0..50 {
            let x = BitString::random(6, &mut r);
            let y = BitString::random(6, &mut r);
            if x == y {
                continue;
            }
            let d = code
                .encode(&x)
                .unwrap()
                .hamming_distance(&code.encode(&y).unwrap());
            assert!(d >= code.min_distance().value());
            assert_eq!(d, 32); // Hadamard: exactly N/2 for distinct inputs
        }
    }

    #[test]
    fn random_linear_resamples_to_target_distance() {
        let mut r = rng();
        let code = CodeSpec::random_linear(6, 60, 0.1, &mut r).unwrap();
        assert!(code.min_distance().value() >= 6);
        match code.min_distance() {
            DistanceBound::Exact(_) => {}
            DistanceBound::Sampled(_) => panic!("n=6 must be exhaustive"),
        }
    }

    #[test]
    fn default_code_policy() {
        let mut r = rng();
        assert!(matches!(
            CodeSpec::default_for(8, &mut r).unwrap().kind,
            CodeKind::Hadamard
        ));
        let big = CodeSpec::default_for(13, &mut r).unwrap();
        assert!(matches!(big.kind, CodeKind::RandomLinear { .. }));
        assert_eq!(big.codeword_len(), 104);
        assert!(big.relative_distance() >= 0.1);
        assert!(CodeSpec::default_for(21, &mut r).is_err());
    }

    #[test]
    fn fingerprint_amplitudes() {
        let code = CodeSpec::hadamard(2).unwrap();
        let x: BitString = "10".parse().unwrap();
        let fp = fingerprint(&code, &x).unwrap();
        let cw = code.encode(&x).unwrap();
        let amp = 0.5; // 1/sqrt(4)
        for i in 0..4 {
            let hot = 2 * i + cw.bit(i) as usize;
            let cold = 2 * i + (!cw.bit(i)) as usize;
            assert!((fp.state.amplitudes()[hot].re - amp).abs() < 1e-15);
            assert_eq!(fp.state.amplitudes()[cold], cr(0.0));
        }
    }

    #[test]
    fn overlap_routes_agree_exhaustively() {
        // All pairs at n = 8, with the state route computed from cached
        // fingerprint kets.
        let n = 8;
        let code = CodeSpec::hadamard(n).unwrap();
        let states: Vec<Fingerprint> = (0..(1u64 << n))
            .map(|v| fingerprint(&code, &BitString::from_value(v, n)).unwrap())
            .collect();
        for xv in 0..(1u64 << n) {
            for yv in 0..(1u64 << n) {
                let x = BitString::from_value(xv, n);
                let y = BitString::from_value(yv, n);
                let via_distance = fingerprint_overlap(&code, &x, &y).unwrap();
                let via_states = states[xv as usize]
                    .state
                    .inner(&states[yv as usize].state)
                    .re;
                assert!((via_distance - via_states).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&via_distance));
            }
        }
    }

    #[test]
    fn overlap_same_and_distinct() {
        let code = CodeSpec::hadamard(4).unwrap();
        let x = BitString::from_value(9, 4);
        let y = BitString::from_value(5, 4);
        assert!((fingerprint_overlap(&code, &x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((fingerprint_overlap(&code, &x, &y).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn swap_accept_formula_points() {
        assert!((swap_accept_prob(1.0) - 1.0).abs() < 1e-15);
        assert!((swap_accept_prob(0.0) - 0.5).abs() < 1e-15);
        assert!((swap_accept_prob(0.5) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn swap_accept_monotone_bounded() {
        let mut prev = 0.5;
        for k in 0..=100 {
            let p = swap_accept_prob(k as f64 / 100.0);
            assert!(p >= prev - 1e-15);
            assert!((0.5..=1.0).contains(&p));
            prev = p;
        }
    }

    #[test]
    fn swap_circuit_identical_and_orthogonal() {
        let a = Ket::basis(4, 1);
        assert!((swap_circuit_sim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let b = Ket::basis(4, 2);
        assert!((swap_circuit_sim(&a, &b).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn swap_circuit_matches_formula_random() {
        let mut r = rng();
        for _ in 0..100 {
            let d = 2 + (rand::Rng::gen::<u64>(&mut r) % 7) as usize;
            let a = random_ket(d, &mut r);
            let b = random_ket(d, &mut r);
            let circuit = swap_circuit_sim(&a, &b).unwrap();
            let formula = swap_accept_prob(a.inner(&b).norm());
            assert!((circuit - formula).abs() < 1e-9);
        }
    }

    #[test]
    fn swap_circuit_dimension_mismatch() {
        let a = Ket::basis(2, 0);
        let b = Ket::basis(3, 0);
        assert!(swap_circuit_sim(&a, &b).is_err());
    }

    fn random_ket(d: usize, rng: &mut ChaCha8Rng) -> Ket {
        let v = CVector::from_fn(d, |_, _| {
            c(
                rand::Rng::gen::<f64>(rng) - 0.5,
                rand::Rng::gen::<f64>(rng) - 0.5,
            )
        });
        Ket::normalized(v).unwrap()
    }

    #[test]
    fn fingerprint_norm_is_exact() {
        let code = CodeSpec::hadamard(6).unwrap();
        let mut r = rng();
        for _ in 0..10 {
            let x = BitString::random(6, &mut r);
            let fp = fingerprint(&code, &x).unwrap();
            let norm_sq: f64 = fp.state.amplitudes().iter().map(|z| z.norm_sqr()).sum();
            assert!((norm_sq - 1.0).abs() < 1e-12);
        }
    }
}
