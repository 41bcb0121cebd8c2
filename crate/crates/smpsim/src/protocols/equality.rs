//! Equality protocols in the simultaneous-message model: the quantum
//! fingerprinting protocol and the classical codeword-grid baseline.

use crate::error::{Error, Result};
use crate::fingerprints::{fingerprint_overlap, swap_accept_prob, BitString, CodeSpec};

/// Quantum fingerprinting equality protocol: both parties send fingerprint
/// states, the referee runs `k` independent SWAP tests on fresh copies and
/// accepts iff all of them accept.
#[derive(Debug, Clone)]
pub struct FingerprintEq {
    code: CodeSpec,
    repetitions: usize,
}

impl FingerprintEq {
    /// Hadamard-coded instance; requires n <= 12 so the codeword length
    /// 2^n stays at desk scale.
    pub fn new(n: usize, repetitions: usize) -> Result<Self> {
        if n > 12 {
            return Err(Error::contract(format!(
                "FingerprintEq: n {n} exceeds Hadamard cap 12"
            )));
        }
        if repetitions == 0 {
            return Err(Error::contract("FingerprintEq: zero repetitions"));
        }
        Ok(Self {
            code: CodeSpec::hadamard(n)?,
            repetitions,
        })
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    /// Exact acceptance probability on inputs (x, y).
    pub fn accept_prob(&self, x: &BitString, y: &BitString) -> Result<f64> {
        let overlap = fingerprint_overlap(&self.code, x, y)?;
        Ok(swap_accept_prob(overlap).powi(self.repetitions as i32))
    }

    /// Total qubits sent to the referee: each party sends k fingerprint
    /// copies of log2(2N) qubits.
    pub fn message_qubits(&self) -> usize {
        let per_copy = (2 * self.code.codeword_len()).trailing_zeros() as usize;
        2 * self.repetitions * per_copy
    }
}

/// Classical equality protocol from a good code, with the codeword laid out
/// on a ceil(sqrt(N)) x ceil(sqrt(N)) grid (padded with zeros): Alice sends
/// a uniformly random row with its index, Bob a uniformly random column with
/// its index, and the referee accepts iff the intersection bits agree.
/// Repetitions are independent; the referee accepts iff every repetition
/// agrees.
#[derive(Debug, Clone)]
pub struct GridCodeEq {
    code: CodeSpec,
    repetitions: usize,
    side: usize,
}

impl GridCodeEq {
    pub fn new(n: usize, repetitions: usize) -> Result<Self> {
        if repetitions == 0 {
            return Err(Error::contract("GridCodeEq: zero repetitions"));
        }
        let code = CodeSpec::hadamard(n)?;
        let side = (code.codeword_len() as f64).sqrt().ceil() as usize;
        Ok(Self {
            code,
            repetitions,
            side,
        })
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn grid_side(&self) -> usize {
        self.side
    }

    fn padded_bit(&self, codeword: &BitString, row: usize, col: usize) -> bool {
        let idx = row * self.side + col;
        if idx < codeword.len() {
            codeword.bit(idx)
        } else {
            false
        }
    }

    /// Single-repetition acceptance probability, exhaustively over all
    /// (row, column) choices.
    pub fn single_rep_accept_prob(&self, x: &BitString, y: &BitString) -> Result<f64> {
        let cx = self.code.encode(x)?;
        let cy = self.code.encode(y)?;
        let mut agree = 0usize;
        for row in 0..self.side {
            for col in 0..self.side {
                if self.padded_bit(&cx, row, col) == self.padded_bit(&cy, row, col) {
                    agree += 1;
                }
            }
        }
        Ok(agree as f64 / (self.side * self.side) as f64)
    }

    pub fn single_rep_reject_prob(&self, x: &BitString, y: &BitString) -> Result<f64> {
        Ok(1.0 - self.single_rep_accept_prob(x, y)?)
    }

    pub fn accept_prob(&self, x: &BitString, y: &BitString) -> Result<f64> {
        Ok(self
            .single_rep_accept_prob(x, y)?
            .powi(self.repetitions as i32))
    }

    /// Classical bits per repetition: each party sends a line of the grid
    /// plus its index.
    pub fn message_bits_per_rep(&self) -> usize {
        let index_bits = usize::BITS as usize - (self.side.max(2) - 1).leading_zeros() as usize;
        2 * (self.side + index_bits)
    }

    pub fn message_bits(&self) -> usize {
        self.repetitions * self.message_bits_per_rep()
    }
}
