//! GHZ-family states and expectation values of Pauli strings.
//!
//! Two engines are provided: a dense amplitude vector (up to the configured
//! cap) and a closed-form rule for the GHZ state that works at any size.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{action_phase, Pauli, PauliError, PauliString};

/// Default largest qubit count for dense amplitude vectors (16M amplitudes).
pub const DEFAULT_DENSE_CAP: usize = 24;

const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("qubit count must be at least 1")]
    ZeroQubits,
    #[error("{n} qubits exceeds the dense cap of {cap}; use the closed-form engine instead")]
    OverCap { n: usize, cap: usize },
    #[error("observable {0} is not Hermitian (phase must be +1 or -1)")]
    NonHermitian(String),
    #[error("amplitude vector is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("amplitude vector length {0} is not a power of two")]
    BadLength(usize),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Normalized amplitudes of an `n`-qubit pure state; index bit `k - 1` is
/// qubit `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, cap: usize) -> Result<Self, StateError> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(StateError::BadLength(len));
        }
        let n = len.trailing_zeros() as usize;
        if n > cap {
            return Err(StateError::OverCap { n, cap });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(StateVector { n, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `<self| p |self>` in one pass over the basis, pairing each index with
    /// its image under `p`.
    pub fn expectation(&self, p: &PauliString) -> Result<f64, StateError> {
        if !p.is_hermitian() {
            return Err(StateError::NonHermitian(p.to_string()));
        }
        if p.n() != self.n {
            return Err(PauliError::DimensionMismatch { left: self.n, right: p.n() }.into());
        }
        let (flip, sign) = p.masks()?;
        let y_count = p.count(Pauli::Y);
        let mut total = Complex64::new(0.0, 0.0);
        for (b, amp) in self.amplitudes.iter().enumerate() {
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let (re, im) = action_phase(p.phase(), y_count, sign, b as u64).to_complex();
            let image = self.amplitudes[b ^ flip as usize];
            total += image.conj() * Complex64::new(re, im) * amp;
        }
        debug_assert!(total.im.abs() < 1e-9, "Hermitian expectation has imaginary part {}", total.im);
        Ok(total.re)
    }
}

/// `(|00...0> + |11...1>) / sqrt(2)` with the default dense cap.
pub fn make_ghz(n: usize) -> Result<StateVector, StateError> {
    make_ghz_with_cap(n, DEFAULT_DENSE_CAP)
}

pub fn make_ghz_with_cap(n: usize, cap: usize) -> Result<StateVector, StateError> {
    if n == 0 {
        return Err(StateError::ZeroQubits);
    }
    if n > cap {
        return Err(StateError::OverCap { n, cap });
    }
    let dim = 1usize << n;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amplitudes[0] = h;
    amplitudes[dim - 1] = h;
    Ok(StateVector { n, amplitudes })
}

/// Exact `<GHZ_n| p |GHZ_n>` for any `n`.
///
/// With `F` the flip support, `k` the number of `Y` letters and `m` the
/// number of `Z` letters:
/// - `F` a nonempty proper subset: 0 (the two GHZ branches map off each other);
/// - `F` empty: 1 if `m` is even, else 0;
/// - `F` everything: 0 if `k` is odd, else `(-1)^(k/2)`.
///
/// The result is multiplied by the string's own sign.
pub fn ghz_expectation_closed_form(n: usize, p: &PauliString) -> Result<i8, StateError> {
    let sign = p.phase().real_sign().ok_or_else(|| StateError::NonHermitian(p.to_string()))?;
    if p.n() != n {
        return Err(PauliError::DimensionMismatch { left: n, right: p.n() }.into());
    }
    let flipped = p.letters().iter().filter(|l| l.flips()).count();
    let value = if flipped == 0 {
        if p.count(Pauli::Z).is_multiple_of(2) {
            1
        } else {
            0
        }
    } else if flipped < n {
        0
    } else {
        let k = p.count(Pauli::Y);
        match k % 4 {
            0 => 1,
            2 => -1,
            _ => 0,
        }
    };
    Ok(sign * value)
}

/// Which expectation engine to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Dense,
    ClosedForm,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub n: usize,
    pub string: String,
    pub value: f64,
    pub engine: Engine,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpectError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("engines disagree on {string}: dense {dense}, closed form {closed}")]
    Disagreement { string: String, dense: f64, closed: i8 },
}

/// Expectation of `p` on `GHZ_n` using the selected engine. `Both` runs the
/// two engines and fails if they differ by more than `1e-12`.
pub fn ghz_expectation(
    n: usize,
    p: &PauliString,
    engine: Engine,
    dense_cap: usize,
) -> Result<ExpectationResult, ExpectError> {
    let value = match engine {
        Engine::ClosedForm => f64::from(ghz_expectation_closed_form(n, p)?),
        Engine::Dense => make_ghz_with_cap(n, dense_cap)?.expectation(p)?,
        Engine::Both => {
            let closed = ghz_expectation_closed_form(n, p)?;
            let dense = make_ghz_with_cap(n, dense_cap)?.expectation(p)?;
            if (dense - f64::from(closed)).abs() > 1e-12 {
                return Err(ExpectError::Disagreement { string: p.to_string(), dense, closed });
            }
            f64::from(closed)
        }
    };
    Ok(ExpectationResult { n, string: p.to_string(), value, engine })
}
