//! Shared-randomness reduction: replace unlimited public randomness by a
//! small sampled multiset of strings, verified exhaustively over all inputs.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fingerprints::BitString;

/// A protocol parameterized by a public random string, exposed through its
/// per-input error functional.
pub trait PublicCoinProtocol {
    type Randomness: Clone;

    /// Draw a public random string from the protocol's distribution.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Self::Randomness;

    /// Probability that the protocol's output is wrong on inputs (x, y)
    /// under shared string `r`.
    fn error_prob(&self, x: u64, y: u64, r: &Self::Randomness) -> f64;
}

/// Smallest t with 2 e^{-2 delta^2 t} below 1/(|X| |Y|):
/// t = ceil(ln(2 |X| |Y|) / (2 delta^2)).
pub fn sample_count(x_count: u64, y_count: u64, delta: f64) -> usize {
    let total = 2.0 * (x_count as f64) * (y_count as f64);
    (total.ln() / (2.0 * delta * delta)).ceil() as usize
}

/// A verified derandomized protocol: uniform choice over the stored strings.
#[derive(Debug, Clone)]
pub struct Derandomized<R> {
    pub strings: Vec<R>,
    /// Exhaustively verified worst-case error over all inputs.
    pub max_error: f64,
    /// Sampling attempts consumed (1 = first sample verified).
    pub attempts: usize,
}

impl<R> Derandomized<R> {
    /// Bits needed to transmit the chosen string index.
    pub fn randomness_index_bits(&self) -> usize {
        usize::BITS as usize - (self.strings.len().max(2) - 1).leading_zeros() as usize
    }
}

/// Exhaustive-verification cap on the input rectangle.
pub const MAX_INPUT_PAIRS: u64 = 1 << 16;

/// Sample t strings, exhaustively verify the averaged error over every
/// input pair against eps + delta, and resample on failure up to `retries`
/// times.
pub fn newman_derandomize<P: PublicCoinProtocol>(
    protocol: &P,
    x_count: u64,
    y_count: u64,
    eps: f64,
    delta: f64,
    rng: &mut ChaCha8Rng,
    retries: usize,
) -> Result<Derandomized<P::Randomness>> {
    if x_count == 0 || y_count == 0 || x_count.saturating_mul(y_count) > MAX_INPUT_PAIRS {
        return Err(Error::contract(format!(
            "newman_derandomize: |X|*|Y| = {} outside (0, {MAX_INPUT_PAIRS}]",
            x_count.saturating_mul(y_count)
        )));
    }
    let t = sample_count(x_count, y_count, delta);
    let target = eps + delta;
    for attempt in 1..=retries {
        let strings: Vec<P::Randomness> = (0..t).map(|_| protocol.sample(rng)).collect();
        let mut max_error = 0.0f64;
        let mut ok = true;
        'outer: for x in 0..x_count {
            for y in 0..y_count {
                let mean: f64 = strings
                    .iter()
                    .map(|r| protocol.error_prob(x, y, r))
                    .sum::<f64>()
                    / t as f64;
                max_error = max_error.max(mean);
                if mean > target {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            return Ok(Derandomized {
                strings,
                max_error,
                attempts: attempt,
            });
        }
    }
    Err(Error::SamplingFailed {
        retries,
        context: format!("no sample of {t} strings verified at error {target}"),
    })
}

/// Public-coin equality protocol from random parity hashes: the shared
/// string is `hashes` random n-bit masks, each party reports the parities
/// of its input against every mask, and the referee accepts iff all parity
/// bits agree. Equal inputs never err; distinct inputs err with
/// probability 2^-hashes over the shared string.
#[derive(Debug, Clone)]
pub struct ParityHashEq {
    pub n: usize,
    pub hashes: usize,
}

impl PublicCoinProtocol for ParityHashEq {
    type Randomness = Vec<u64>;

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<u64> {
        use rand::Rng;
        let mask = if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        };
        (0..self.hashes).map(|_| rng.gen::<u64>() & mask).collect()
    }

    fn error_prob(&self, x: u64, y: u64, r: &Vec<u64>) -> f64 {
        if x == y {
            return 0.0;
        }
        let collide = r
            .iter()
            .all(|m| ((x & m).count_ones() & 1) == ((y & m).count_ones() & 1));
        if collide {
            1.0
        } else {
            0.0
        }
    }
}

impl ParityHashEq {
    /// Parity bits of `x` under the shared masks, as sent to the referee.
    pub fn message(&self, x: u64, r: &[u64]) -> BitString {
        BitString::new(r.iter().map(|m| ((x & m).count_ones() & 1) == 1).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(71)
    }

    #[test]
    fn sample_count_pinned() {
        // |X| = |Y| = 64, delta = 1/8: ceil(ln(8192) * 32) = 289.
        assert_eq!(sample_count(64, 64, 0.125), 289);
    }

    #[test]
    fn zero_error_protocol_verifies_immediately() {
        struct AlwaysRight;
        impl PublicCoinProtocol for AlwaysRight {
            type Randomness = ();
            fn sample(&self, _rng: &mut ChaCha8Rng) {}
            fn error_prob(&self, _x: u64, _y: u64, _r: &()) -> f64 {
                0.0
            }
        }
        let mut r = rng();
        let out = newman_derandomize(&AlwaysRight, 16, 16, 0.0, 0.25, &mut r, 10).unwrap();
        assert_eq!(out.attempts, 1);
        assert_eq!(out.max_error, 0.0);
    }

    #[test]
    fn parity_hash_eq_derandomizes_at_n6() {
        let protocol = ParityHashEq { n: 6, hashes: 3 };
        let mut r = rng();
        let out = newman_derandomize(&protocol, 64, 64, 0.125, 0.125, &mut r, 10).unwrap();
        assert_eq!(out.strings.len(), 289);
        assert!(out.max_error <= 0.25 + 1e-12);
        // Exhaustive recheck of the verified bound.
        for x in 0..64u64 {
            for y in 0..64u64 {
                let mean: f64 = out
                    .strings
                    .iter()
                    .map(|s| protocol.error_prob(x, y, s))
                    .sum::<f64>()
                    / out.strings.len() as f64;
                assert!(mean <= 0.25 + 1e-12);
            }
        }
    }

    #[test]
    fn parity_hash_message_bits() {
        let protocol = ParityHashEq { n: 6, hashes: 3 };
        let mut r = rng();
        let shared = protocol.sample(&mut r);
        let m = protocol.message(37, &shared);
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn input_cap_enforced() {
        let protocol = ParityHashEq { n: 20, hashes: 3 };
        let mut r = rng();
        assert!(newman_derandomize(&protocol, 1 << 10, 1 << 10, 0.125, 0.125, &mut r, 1).is_err());
    }

    #[test]
    fn retry_budget_exhaustion_reported() {
        struct AlwaysWrong;
        impl PublicCoinProtocol for AlwaysWrong {
            type Randomness = ();
            fn sample(&self, _rng: &mut ChaCha8Rng) {}
            fn error_prob(&self, _x: u64, _y: u64, _r: &()) -> f64 {
                1.0
            }
        }
        let mut r = rng();
        let err = newman_derandomize(&AlwaysWrong, 4, 4, 0.125, 0.125, &mut r, 3).unwrap_err();
        assert!(matches!(
            err,
            crate::error::Error::SamplingFailed { retries: 3, .. }
        ));
    }
}
