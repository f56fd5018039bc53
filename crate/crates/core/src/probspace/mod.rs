//! Exact finite probability spaces over the `2^n` sign patterns ("atoms") of
//! `n` random variables taking values `±1`.
//!
//! Atom `j` assigns `X_k = -1` iff bit `k - 1` of `j` is set, the same
//! convention as measurement sign patterns. Everything here is exact rational
//! arithmetic.

mod simplex;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

pub use simplex::{FeasibleTableau, LpOutcome};

use crate::measurement::MeasurementRecord;

pub type Rational = num_rational::BigRational;

/// Default largest variable count accepted by the moment solver.
pub const DEFAULT_SOLVER_CAP: usize = 10;

/// Largest variable count for an explicit atom table.
pub const MAX_ATOM_VARIABLES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProbError {
    #[error("variable count must be at least 1")]
    NoVariables,
    #[error("{n} variables exceeds the limit of {cap}")]
    OverCap { n: usize, cap: usize },
    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("expected {expected} atom probabilities, got {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("atom {atom} has negative probability {value}")]
    NegativeProbability { atom: usize, value: String },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(String),
    #[error("moment target {0} lies outside [-1, 1]")]
    TargetOutOfRange(String),
    #[error("subset {subset:?} is constrained to both {first} and {second}")]
    ContradictoryDuplicate { subset: Vec<usize>, first: String, second: String },
    #[error("record is empty")]
    EmptyRecord,
    #[error("invalid rational {0:?}")]
    BadRational(String),
    #[error("constraint file: {0}")]
    ConstraintFormat(String),
    #[error("sign must be +1 or -1, got {0}")]
    BadSign(i64),
    #[error("need at least {min} variables, got {n}")]
    TooFewVariables { n: usize, min: usize },
}

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parses `"p/q"` or `"p"` into a reduced rational.
pub fn parse_rational(s: &str) -> Result<Rational, ProbError> {
    s.trim().parse::<Rational>().map_err(|_| ProbError::BadRational(s.to_string()))
}

/// Canonical `"p/q"` text (reduced, positive denominator, `"p"` for integers).
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

/// Serde adapters that encode rationals as canonical strings.
pub mod rational_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        use super::super::{format_rational, parse_rational, Rational};

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            Vec::<String>::deserialize(d)?.iter().map(|t| parse_rational(t).map_err(serde::de::Error::custom)).collect()
        }
    }
}

/// `(-1)^{|atom ∩ mask|}`: the value of `∏_{k in mask} X_k` on `atom`.
pub fn atom_sign(atom: usize, mask: u64) -> i8 {
    if (atom as u64 & mask).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sorted, deduplicated subset as a mask over `1..=n`. The empty subset is
/// allowed and stands for the constant 1.
pub fn mask_of(n: usize, subset: &[usize]) -> Result<u64, ProbError> {
    let mut mask = 0u64;
    for &k in subset {
        if k == 0 || k > n || k > 64 {
            return Err(ProbError::IndexOutOfRange { index: k, n });
        }
        mask |= 1 << (k - 1);
    }
    Ok(mask)
}

pub fn subset_of_mask(mask: u64) -> Vec<usize> {
    (0..64).filter(|k| mask >> k & 1 == 1).map(|k| k + 1).collect()
}

/// Exact probability assignment over the `2^n` atoms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DistributionText", into = "DistributionText")]
pub struct AtomDistribution {
    n: usize,
    probabilities: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct DistributionText {
    n: usize,
    #[serde(with = "rational_text::vec")]
    probabilities: Vec<Rational>,
}

impl TryFrom<DistributionText> for AtomDistribution {
    type Error = ProbError;

    fn try_from(t: DistributionText) -> Result<Self, ProbError> {
        AtomDistribution::new(t.n, t.probabilities)
    }
}

impl From<AtomDistribution> for DistributionText {
    fn from(d: AtomDistribution) -> Self {
        DistributionText { n: d.n, probabilities: d.probabilities }
    }
}

impl AtomDistribution {
    pub fn new(n: usize, probabilities: Vec<Rational>) -> Result<Self, ProbError> {
        check_atom_count(n)?;
        let expected = 1usize << n;
        if probabilities.len() != expected {
            return Err(ProbError::WrongLength { expected, found: probabilities.len() });
        }
        if let Some((atom, p)) = probabilities.iter().enumerate().find(|(_, p)| p.is_negative()) {
            return Err(ProbError::NegativeProbability { atom, value: format_rational(p) });
        }
        let total: Rational = probabilities.iter().sum();
        if !total.is_one() {
            return Err(ProbError::NotNormalized(format_rational(&total)));
        }
        Ok(AtomDistribution { n, probabilities })
    }

    pub fn uniform(n: usize) -> Result<Self, ProbError> {
        check_atom_count(n)?;
        let size = 1i64 << n;
        Ok(AtomDistribution { n, probabilities: vec![rational(1, size); size as usize] })
    }

    /// Uniform over the atoms accepted by `keep`.
    pub fn uniform_on(n: usize, keep: impl Fn(usize) -> bool) -> Result<Self, ProbError> {
        check_atom_count(n)?;
        let support: Vec<bool> = (0..1usize << n).map(keep).collect();
        let count = support.iter().filter(|&&s| s).count() as i64;
        let probabilities = support.iter().map(|&s| if s { rational(1, count) } else { Rational::zero() }).collect();
        AtomDistribution::new(n, probabilities)
    }

    pub fn point_mass(n: usize, atom: usize) -> Result<Self, ProbError> {
        Self::uniform_on(n, |a| a == atom)
    }

    /// The analytic distribution of joint `σ_x` outcomes on `GHZ_n`: uniform
    /// over the atoms whose full product is `+1`.
    pub fn ghz_x(n: usize) -> Result<Self, ProbError> {
        Self::uniform_on(n, |a| a.count_ones() % 2 == 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &[Rational] {
        &self.probabilities
    }

    pub fn probability(&self, atom: usize) -> &Rational {
        &self.probabilities[atom]
    }

    /// `E(∏_{k in subset} X_k)`; the empty subset gives 1.
    pub fn expectation_of_subset(&self, subset: &[usize]) -> Result<Rational, ProbError> {
        let mask = mask_of(self.n, subset)?;
        Ok(self.expectation_of_mask(mask))
    }

    pub fn expectation_of_mask(&self, mask: u64) -> Rational {
        // Summing over a common denominator avoids a gcd per atom.
        let denom = self.probabilities.iter().fold(BigInt::one(), |acc, p| {
            if p.is_zero() || &acc == p.denom() {
                acc
            } else {
                acc.lcm(p.denom())
            }
        });
        let mut total = BigInt::zero();
        for (atom, p) in self.probabilities.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let scaled = p.numer() * (&denom / p.denom());
            if atom_sign(atom, mask) > 0 {
                total += scaled;
            } else {
                total -= scaled;
            }
        }
        Rational::new(total, denom)
    }

    /// Expectations of every subset product at once, indexed by mask
    /// (fast Walsh–Hadamard transform of the atom table).
    pub fn all_subset_expectations(&self) -> Vec<Rational> {
        let mut v = self.probabilities.clone();
        let len = v.len();
        let mut h = 1;
        while h < len {
            for start in (0..len).step_by(2 * h) {
                for i in start..start + h {
                    let a = v[i].clone();
                    let b = std::mem::take(&mut v[i + h]);
                    v[i + h] = &a - &b;
                    v[i] = a + b;
                }
            }
            h *= 2;
        }
        v
    }

    /// Joint distribution of the variables in `subset`, renumbered `1..=m`
    /// in ascending order of their original index.
    pub fn marginal(&self, subset: &[usize]) -> Result<AtomDistribution, ProbError> {
        let mut vars: Vec<usize> = subset.to_vec();
        vars.sort_unstable();
        vars.dedup();
        mask_of(self.n, &vars)?;
        let m = vars.len();
        if m == 0 {
            return Err(ProbError::NoVariables);
        }
        let mut probabilities = vec![Rational::zero(); 1 << m];
        for (atom, p) in self.probabilities.iter().enumerate() {
            let sub = vars
                .iter()
                .enumerate()
                .filter(|(_, &k)| atom >> (k - 1) & 1 == 1)
                .fold(0usize, |acc, (i, _)| acc | 1 << i);
            probabilities[sub] += p;
        }
        Ok(AtomDistribution { n: m, probabilities })
    }
}

impl fmt::Display for AtomDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (atom, p) in self.probabilities.iter().enumerate() {
            let pattern: String = (0..self.n).map(|k| if atom >> k & 1 == 1 { '-' } else { '+' }).collect();
            writeln!(f, "{pattern} {}", format_rational(p))?;
        }
        Ok(())
    }
}

fn check_atom_count(n: usize) -> Result<(), ProbError> {
    if n == 0 {
        return Err(ProbError::NoVariables);
    }
    if n > MAX_ATOM_VARIABLES {
        return Err(ProbError::OverCap { n, cap: MAX_ATOM_VARIABLES });
    }
    Ok(())
}

/// Empirical atom frequencies of a measurement record, as exact rationals.
pub fn distribution_from_record(record: &MeasurementRecord) -> Result<AtomDistribution, ProbError> {
    if record.is_empty() {
        return Err(ProbError::EmptyRecord);
    }
    check_atom_count(record.n())?;
    let mut counts = vec![0u64; 1 << record.n()];
    for trial in record.trials() {
        counts[trial.pattern() as usize] += 1;
    }
    let total = BigInt::from(record.len());
    let probabilities = counts.into_iter().map(|c| Rational::new(BigInt::from(c), total.clone())).collect();
    AtomDistribution::new(record.n(), probabilities)
}

/// `E(∏_{k in subset} X_k) = target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ConstraintText", into = "ConstraintText")]
pub struct MomentConstraint {
    subset: Vec<usize>,
    target: Rational,
}

#[derive(Serialize, Deserialize)]
struct ConstraintText {
    subset: Vec<usize>,
    #[serde(serialize_with = "rational_text::serialize", deserialize_with = "value_field")]
    value: Rational,
}

fn value_field<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
    let text = String::deserialize(d)?;
    parse_rational(&text).map_err(|e| serde::de::Error::custom(format!("field `value`: {e}")))
}

impl TryFrom<ConstraintText> for MomentConstraint {
    type Error = String;

    fn try_from(t: ConstraintText) -> Result<Self, String> {
        MomentConstraint::new(t.subset, t.value).map_err(|e| {
            let field = if matches!(e, ProbError::TargetOutOfRange(_)) { "value" } else { "subset" };
            format!("field `{field}`: {e}")
        })
    }
}

impl From<MomentConstraint> for ConstraintText {
    fn from(c: MomentConstraint) -> Self {
        ConstraintText { subset: c.subset, value: c.target }
    }
}

impl MomentConstraint {
    pub fn new(mut subset: Vec<usize>, target: Rational) -> Result<Self, ProbError> {
        if target.abs() > Rational::one() {
            return Err(ProbError::TargetOutOfRange(format_rational(&target)));
        }
        if let Some(&bad) = subset.iter().find(|&&k| k == 0) {
            return Err(ProbError::IndexOutOfRange { index: bad, n: 0 });
        }
        subset.sort_unstable();
        subset.dedup();
        Ok(MomentConstraint { subset, target })
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn target(&self) -> &Rational {
        &self.target
    }
}

/// Reads the JSON constraint-file form: `[{"subset": [1, 2], "value": "1/2"}, ...]`.
pub fn parse_constraints(json: &str) -> Result<Vec<MomentConstraint>, ProbError> {
    serde_json::from_str(json).map_err(|e| ProbError::ConstraintFormat(e.to_string()))
}

pub fn constraints_to_json(constraints: &[MomentConstraint]) -> String {
    serde_json::to_string(constraints).expect("constraints always serialize")
}

/// `{E(∏ all) = full, E(X_k) = 0 for every k}`.
pub fn ghz_style_constraints(n: usize, full: i64) -> Vec<MomentConstraint> {
    let mut out = vec![MomentConstraint::new((1..=n).collect(), rational(full, 1)).expect("|full| <= 1")];
    out.extend((1..=n).map(|k| MomentConstraint::new(vec![k], Rational::zero()).expect("zero target")));
    out
}

/// Constraints setting every nonempty subset product's expectation to zero.
pub fn all_subsets_zero_constraints(n: usize) -> Vec<MomentConstraint> {
    (1u64..1 << n)
        .map(|mask| MomentConstraint::new(subset_of_mask(mask), Rational::zero()).expect("zero target"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum SolveOutcome {
    Infeasible,
    Unique { distribution: AtomDistribution },
    Underdetermined { witnesses: [AtomDistribution; 2] },
}

impl SolveOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            SolveOutcome::Infeasible => "infeasible",
            SolveOutcome::Unique { .. } => "unique",
            SolveOutcome::Underdetermined { .. } => "underdetermined",
        }
    }
}

/// Closed interval of attainable values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "rational_text")]
    pub lo: Rational,
    #[serde(with = "rational_text")]
    pub hi: Rational,
}

impl Interval {
    pub fn is_point(&self, value: &Rational) -> bool {
        &self.lo == value && &self.hi == value
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", format_rational(&self.lo), format_rational(&self.hi))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RangeOutcome {
    Infeasible,
    Range(Interval),
}

/// A linear system over atom probabilities: normalization plus one row per
/// moment constraint.
struct MomentSystem {
    n: usize,
    tableau: Option<FeasibleTableau>,
}

impl MomentSystem {
    fn num_atoms(&self) -> usize {
        1 << self.n
    }

    fn sign_row(&self, mask: u64) -> Vec<Rational> {
        (0..self.num_atoms())
            .map(|atom| if atom_sign(atom, mask) > 0 { Rational::one() } else { -Rational::one() })
            .collect()
    }
}

/// Exact solver for moment-constraint systems over `2^n` atoms.
#[derive(Debug, Clone, Copy)]
pub struct MomentSolver {
    cap: usize,
}

impl Default for MomentSolver {
    fn default() -> Self {
        MomentSolver { cap: DEFAULT_SOLVER_CAP }
    }
}

impl MomentSolver {
    pub fn new(cap: usize) -> Self {
        MomentSolver { cap }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    fn build(&self, n: usize, constraints: &[MomentConstraint]) -> Result<MomentSystem, ProbError> {
        if n == 0 {
            return Err(ProbError::NoVariables);
        }
        if n > self.cap {
            return Err(ProbError::OverCap { n, cap: self.cap });
        }
        let mut by_mask: BTreeMap<u64, &Rational> = BTreeMap::new();
        // Normalization is the empty-subset constraint E(1) = 1.
        let one = Rational::one();
        by_mask.insert(0, &one);
        for c in constraints {
            let mask = mask_of(n, &c.subset)?;
            if let Some(prev) = by_mask.insert(mask, &c.target) {
                if *prev != c.target {
                    if mask == 0 {
                        // E(1) pinned to something other than 1.
                        return Ok(MomentSystem { n, tableau: None });
                    }
                    return Err(ProbError::ContradictoryDuplicate {
                        subset: c.subset.clone(),
                        first: format_rational(prev),
                        second: format_rational(&c.target),
                    });
                }
            }
        }
        let mut system = MomentSystem { n, tableau: None };
        let rows: Vec<Vec<Rational>> = by_mask.keys().map(|&m| system.sign_row(m)).collect();
        let rhs: Vec<Rational> = by_mask.values().map(|&t| t.clone()).collect();
        system.tableau = FeasibleTableau::new(&rows, &rhs, system.num_atoms());
        Ok(system)
    }

    /// Decides whether the constraints admit no, exactly one, or many
    /// distributions. Uniqueness is certified by minimizing and maximizing
    /// every atom probability; any probe that moves off the first vertex
    /// yields the second witness.
    pub fn solve(&self, n: usize, constraints: &[MomentConstraint]) -> Result<SolveOutcome, ProbError> {
        let system = self.build(n, constraints)?;
        let Some(tableau) = &system.tableau else {
            return Ok(SolveOutcome::Infeasible);
        };
        let base = tableau.point();
        let distribution = AtomDistribution::new(n, base.clone()).expect("feasible vertices are distributions");
        if tableau.is_fully_determined() {
            return Ok(SolveOutcome::Unique { distribution });
        }

        let atoms = system.num_atoms();
        let other = (0..2 * atoms).into_par_iter().find_map_first(|probe| {
            let atom = probe / 2;
            let maximize = probe % 2 == 1;
            // x >= 0 already bounds a zero-valued atom from below.
            if !maximize && base[atom].is_zero() {
                return None;
            }
            let mut c = vec![Rational::zero(); atoms];
            c[atom] = Rational::one();
            let outcome = if maximize { tableau.maximize(&c) } else { tableau.minimize(&c) };
            match outcome {
                LpOutcome::Optimal { value, point } if value != base[atom] => Some(point),
                LpOutcome::Optimal { .. } => None,
                LpOutcome::Unbounded => unreachable!("atom probabilities are bounded by 1"),
            }
        });
        Ok(match other {
            None => SolveOutcome::Unique { distribution },
            Some(point) => SolveOutcome::Underdetermined {
                witnesses: [distribution, AtomDistribution::new(n, point).expect("feasible vertex")],
            },
        })
    }

    /// Exact minimum and maximum of `E(∏_{target} X_k)` over the feasible set.
    pub fn range(
        &self,
        n: usize,
        constraints: &[MomentConstraint],
        target: &[usize],
    ) -> Result<RangeOutcome, ProbError> {
        let system = self.build(n, constraints)?;
        let mask = mask_of(n, target)?;
        let Some(tableau) = &system.tableau else {
            return Ok(RangeOutcome::Infeasible);
        };
        let c = system.sign_row(mask);
        let value = |o: LpOutcome| match o {
            LpOutcome::Optimal { value, .. } => value,
            LpOutcome::Unbounded => unreachable!("moments are bounded by 1"),
        };
        let lo = value(tableau.minimize(&c));
        let hi = value(tableau.maximize(&c));
        Ok(RangeOutcome::Range(Interval { lo, hi }))
    }

    /// Checks that vanishing expectations for every nonempty subset product
    /// force the uniform distribution.
    pub fn verify_prop4(&self, n: usize) -> Result<UniformityReport, ProbError> {
        let outcome = self.solve(n, &all_subsets_zero_constraints(n))?;
        let expected = rational(1, 1i64 << n);
        let passed = matches!(&outcome, SolveOutcome::Unique { distribution }
            if distribution.probabilities().iter().all(|p| *p == expected));
        Ok(UniformityReport { n, expected_atom_probability: expected, outcome, passed })
    }

    /// Checks that `E(X_1...X_n) = sign` with vanishing single expectations
    /// forces every `(n-1)`-subset correlation to zero.
    pub fn verify_prop5(&self, n: usize, sign: i64) -> Result<CoCorrelationReport, ProbError> {
        if sign != 1 && sign != -1 {
            return Err(ProbError::BadSign(sign));
        }
        if n < 2 {
            return Err(ProbError::TooFewVariables { n, min: 2 });
        }
        let constraints = ghz_style_constraints(n, sign);
        let mut ranges = Vec::with_capacity(n);
        for skip in (1..=n).rev() {
            let subset: Vec<usize> = (1..=n).filter(|&k| k != skip).collect();
            match self.range(n, &constraints, &subset)? {
                RangeOutcome::Range(interval) => ranges.push(SubsetRange { subset, interval }),
                RangeOutcome::Infeasible => {
                    return Ok(CoCorrelationReport { n, sign, feasible: false, ranges, passed: false })
                }
            }
        }
        let passed = ranges.iter().all(|r| r.interval.is_point(&Rational::zero()));
        Ok(CoCorrelationReport { n, sign, feasible: true, ranges, passed })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub n: usize,
    #[serde(with = "rational_text")]
    pub expected_atom_probability: Rational,
    pub outcome: SolveOutcome,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetRange {
    pub subset: Vec<usize>,
    #[serde(flatten)]
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoCorrelationReport {
    pub n: usize,
    pub sign: i64,
    pub feasible: bool,
    pub ranges: Vec<SubsetRange>,
    pub passed: bool,
}
