//! Tensor products of single-qubit spin operators with exact phase tracking.
//!
//! Qubits are numbered from 1. In a [`BasisState`] pattern, qubit `k` lives in
//! bit `k - 1`; a clear bit is the `+1` eigenvector of `Z` and a set bit the
//! `-1` eigenvector.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("qubit count mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("a Pauli string needs at least one letter")]
    Empty,
    #[error("invalid character {found:?} at position {position} (expected I, X, Y or Z)")]
    InvalidLetter { found: char, position: usize },
    #[error("basis patterns are limited to 64 qubits, got {0}")]
    TooWide(usize),
    #[error("qubit index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
}

/// A single-site operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// True for the letters that flip the computational basis bit.
    pub fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// Single-site product `self * rhs` as `(phase, letter)`.
    pub fn product(self, rhs: Pauli) -> (Phase, Pauli) {
        use Pauli::*;
        match (self, rhs) {
            (I, p) | (p, I) => (Phase::ONE, p),
            (a, b) if a == b => (Phase::ONE, I),
            (X, Y) => (Phase::I, Z),
            (Y, X) => (Phase::MINUS_I, Z),
            (Y, Z) => (Phase::I, X),
            (Z, Y) => (Phase::MINUS_I, X),
            (Z, X) => (Phase::I, Y),
            (X, Z) => (Phase::MINUS_I, Y),
            _ => unreachable!(),
        }
    }
}

/// An element of the cyclic group {1, i, -1, -i}, stored as the power of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(power: u64) -> Phase {
        Phase((power % 4) as u8)
    }

    /// Exponent `k` such that the phase is `i^k`, with `k` in `0..4`.
    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `+1` or `-1` for real phases.
    pub fn real_sign(self) -> Option<i8> {
        match self.0 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn negate(self) -> Phase {
        Phase((self.0 + 2) % 4)
    }

    /// `(re, im)` of the phase as a complex number.
    pub fn to_complex(self) -> (f64, f64) {
        match self.0 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    }

    fn prefix(self) -> &'static str {
        match self.0 {
            0 => "",
            1 => "+i",
            2 => "-",
            _ => "-i",
        }
    }
}

impl Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

/// A phase times a tensor product of single-qubit operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    phase: Phase,
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(phase: Phase, letters: Vec<Pauli>) -> Result<Self, PauliError> {
        if letters.is_empty() {
            return Err(PauliError::Empty);
        }
        Ok(PauliString { phase, letters })
    }

    pub fn identity(n: usize) -> Result<Self, PauliError> {
        Self::new(Phase::ONE, vec![Pauli::I; n])
    }

    /// `letter` on every qubit, phase `+1`.
    pub fn uniform(n: usize, letter: Pauli) -> Result<Self, PauliError> {
        Self::new(Phase::ONE, vec![letter; n])
    }

    /// The operator acting as `letter` on the listed (1-based) qubits and as
    /// the identity elsewhere.
    pub fn on_qubits(n: usize, letter: Pauli, qubits: &[usize]) -> Result<Self, PauliError> {
        let mut letters = vec![Pauli::I; n];
        for &q in qubits {
            if q == 0 || q > n {
                return Err(PauliError::IndexOutOfRange { index: q, n });
            }
            letters[q - 1] = letter;
        }
        Self::new(Phase::ONE, letters)
    }

    /// Every letter sequence of length `n` with phase `+1`, in base-4 order
    /// with qubit 1 varying fastest.
    pub fn all_hermitian(n: usize) -> impl Iterator<Item = PauliString> {
        let total = 4usize.pow(n as u32);
        (0..total).map(move |mut code| {
            let letters = (0..n)
                .map(|_| {
                    let letter = Pauli::ALL[code % 4];
                    code /= 4;
                    letter
                })
                .collect();
            PauliString { phase: Phase::ONE, letters }
        })
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    /// Letter on the 1-based qubit `k`.
    pub fn letter(&self, k: usize) -> Pauli {
        self.letters[k - 1]
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    pub fn count(&self, letter: Pauli) -> usize {
        self.letters.iter().filter(|&&l| l == letter).count()
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.len() - self.count(Pauli::I)
    }

    fn check_dims(&self, other_n: usize) -> Result<(), PauliError> {
        if self.n() != other_n {
            return Err(PauliError::DimensionMismatch { left: self.n(), right: other_n });
        }
        Ok(())
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &PauliString) -> Result<PauliString, PauliError> {
        self.check_dims(other.n())?;
        let mut phase = self.phase * other.phase;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (site_phase, letter) = a.product(b);
                phase = phase * site_phase;
                letter
            })
            .collect();
        Ok(PauliString { phase, letters })
    }

    /// Whether the two operators commute: they do iff an even number of sites
    /// hold two distinct non-identity letters.
    pub fn commutes(&self, other: &PauliString) -> Result<bool, PauliError> {
        self.check_dims(other.n())?;
        let anticommuting =
            self.letters.iter().zip(&other.letters).filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b).count();
        Ok(anticommuting % 2 == 0)
    }

    /// Qubits (1-based, ascending) holding `X` or `Y`.
    pub fn flip_support(&self) -> Vec<usize> {
        self.letters.iter().enumerate().filter(|(_, l)| l.flips()).map(|(k, _)| k + 1).collect()
    }

    /// `(flip_mask, phase_mask)` for strings of at most 64 qubits: bit `k-1`
    /// of the first is set for `X`/`Y` on qubit `k`, of the second for `Y`/`Z`.
    pub fn masks(&self) -> Result<(u64, u64), PauliError> {
        if self.n() > 64 {
            return Err(PauliError::TooWide(self.n()));
        }
        let mut flip = 0u64;
        let mut sign = 0u64;
        for (k, letter) in self.letters.iter().enumerate() {
            match letter {
                Pauli::I => {}
                Pauli::X => flip |= 1 << k,
                Pauli::Y => {
                    flip |= 1 << k;
                    sign |= 1 << k;
                }
                Pauli::Z => sign |= 1 << k,
            }
        }
        Ok((flip, sign))
    }

    /// Returns `(b', phase)` with `self |b> = phase |b'>`.
    pub fn basis_action(&self, b: &BasisState) -> Result<(BasisState, Phase), PauliError> {
        self.check_dims(b.n())?;
        let (flip, sign) = self.masks()?;
        let phase = action_phase(self.phase, self.count(Pauli::Y), sign, b.bits());
        Ok((BasisState { n: b.n, bits: b.bits ^ flip }, phase))
    }
}

/// Phase picked up by a string with masks `(_, sign_mask)` on basis pattern
/// `bits`. Uses `Y = i X Z`, so each `Y` adds a factor `i` and every set bit
/// under a `Y` or `Z` adds a factor `-1`.
pub(crate) fn action_phase(base: Phase, y_count: usize, sign_mask: u64, bits: u64) -> Phase {
    let minus = (sign_mask & bits).count_ones() as u64;
    base * Phase::from_power(y_count as u64 + 2 * minus)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.phase.prefix())?;
        for letter in &self.letters {
            write!(f, "{}", letter.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    /// Accepts an optional `+`, `-`, `+i` or `-i` prefix followed by letters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (phase, body, offset) = if let Some(rest) = s.strip_prefix("+i") {
            (Phase::I, rest, 2)
        } else if let Some(rest) = s.strip_prefix("-i") {
            (Phase::MINUS_I, rest, 2)
        } else if let Some(rest) = s.strip_prefix('+') {
            (Phase::ONE, rest, 1)
        } else if let Some(rest) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, rest, 1)
        } else {
            (Phase::ONE, s, 0)
        };
        let letters = body
            .chars()
            .enumerate()
            .map(|(i, c)| Pauli::from_char(c).ok_or(PauliError::InvalidLetter { found: c, position: i + offset }))
            .collect::<Result<Vec<_>, _>>()?;
        PauliString::new(phase, letters)
    }
}

/// A computational basis vector of at most 64 qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    n: usize,
    bits: u64,
}

impl BasisState {
    pub fn new(n: usize, bits: u64) -> Result<Self, PauliError> {
        if n == 0 {
            return Err(PauliError::Empty);
        }
        if n > 64 {
            return Err(PauliError::TooWide(n));
        }
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Ok(BasisState { n, bits: bits & mask })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Bit of the 1-based qubit `k`: `false` for `|+>`, `true` for `|->`.
    pub fn bit(&self, k: usize) -> bool {
        self.bits >> (k - 1) & 1 == 1
    }
}
