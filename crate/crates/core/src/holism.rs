//! Strict Π-holism for families of `±1` random variables.
//!
//! A family `F = {X_1, ..., X_N}` is strictly Π-holistic when
//! (i) `F` has Π, (ii) no proper subfamily has Π, and, for a numeric Π,
//! (iii) no proper subfamily comes within `epsilon` of Π.
//!
//! Π is always a functional of a subset-product variable `∏_{k in S} X_k`:
//! its binary entropy or the magnitude of its expectation.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measurement::{MeasurementError, MeasurementRecord, Sign, Trial};
use crate::probspace::{mask_of, subset_of_mask, AtomDistribution, ProbError, Rational};

/// Largest family size for which every subfamily is enumerated.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 20;

/// Minimum record length for empirical sources.
pub const MIN_RECORD_LEN: usize = 100;

#[derive(Debug, Error)]
pub enum HolismError {
    #[error("a family needs at least 2 variables, got {0}")]
    FamilyTooSmall(usize),
    #[error(
        "{n} variables exceeds the exhaustive cap of {cap}; request sampling mode explicitly \
         (results are then non-exhaustive)"
    )]
    OverExhaustiveCap { n: usize, cap: usize },
    #[error("sampling mode supports at most 64 variables, got {0}")]
    TooWide(usize),
    #[error("subset must not be empty")]
    EmptySubset,
    #[error("record has {len} trials, need at least {min}")]
    RecordTooShort { len: usize, min: usize },
    #[error("epsilon must be positive and at least the tolerance (epsilon {epsilon}, tolerance {tolerance})")]
    BadThreshold { epsilon: f64, tolerance: f64 },
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
}

/// Where the family's joint law comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySource {
    Analytic(AtomDistribution),
    Empirical(MeasurementRecord),
}

impl FamilySource {
    pub fn size(&self) -> usize {
        match self {
            FamilySource::Analytic(d) => d.n(),
            FamilySource::Empirical(r) => r.n(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FamilySource::Analytic(_) => "analytic",
            FamilySource::Empirical(_) => "empirical",
        }
    }

    fn sample_size(&self) -> Option<usize> {
        match self {
            FamilySource::Analytic(_) => None,
            FamilySource::Empirical(r) => Some(r.len()),
        }
    }

    /// `P(∏_{k in mask} X_k = +1)` for a single subset.
    fn plus_probability(&self, mask: u64) -> f64 {
        match self {
            FamilySource::Analytic(d) => exact_plus_probability(&d.expectation_of_mask(mask)),
            FamilySource::Empirical(r) => {
                let plus = r.trials().iter().filter(|t| (t.pattern() & mask).count_ones().is_multiple_of(2)).count();
                plus as f64 / r.len() as f64
            }
        }
    }

    /// `P(∏ X = +1)` for every mask in `0..2^N`, via a Walsh–Hadamard
    /// transform of the atom table.
    fn all_plus_probabilities(&self) -> Vec<f64> {
        match self {
            FamilySource::Analytic(d) => d.all_subset_expectations().iter().map(exact_plus_probability).collect(),
            FamilySource::Empirical(r) => {
                let mut v = vec![0i64; 1 << r.n()];
                for trial in r.trials() {
                    v[trial.pattern() as usize] += 1;
                }
                walsh_hadamard(&mut v);
                let m = r.len() as i64;
                v.iter().map(|&w| ((m + w) / 2) as f64 / m as f64).collect()
            }
        }
    }
}

fn exact_plus_probability(expectation: &Rational) -> f64 {
    let p = (Rational::from_integer(1.into()) + expectation) / Rational::from_integer(2.into());
    p.to_f64().expect("probabilities are finite")
}

fn walsh_hadamard(v: &mut [i64]) {
    let len = v.len();
    let mut h = 1;
    while h < len {
        for start in (0..len).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Entropy in bits of a binary variable with `P(+1) = p`; `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    (term(p) + term(1.0 - p)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub subset: Vec<usize>,
    pub p_plus: f64,
    pub bits: f64,
    /// Delta-method standard error of the plug-in estimate (empirical only).
    pub standard_error: Option<f64>,
    pub sample_size: Option<usize>,
}

fn validate_subset(source: &FamilySource, subset: &[usize]) -> Result<u64, HolismError> {
    if subset.is_empty() {
        return Err(HolismError::EmptySubset);
    }
    if source.size() > 64 {
        return Err(HolismError::TooWide(source.size()));
    }
    Ok(mask_of(source.size(), subset)?)
}

/// Entropy of the product of the subset's variables, with its standard error
/// for empirical sources.
pub fn entropy_estimate(source: &FamilySource, subset: &[usize]) -> Result<EntropyEstimate, HolismError> {
    let mask = validate_subset(source, subset)?;
    let p = source.plus_probability(mask);
    let standard_error = source.sample_size().map(|m| {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            (p * (1.0 - p) / m as f64).sqrt() * ((1.0 - p) / p).log2().abs()
        }
    });
    Ok(EntropyEstimate {
        subset: subset_of_mask(mask),
        p_plus: p,
        bits: binary_entropy(p),
        standard_error,
        sample_size: source.sample_size(),
    })
}

/// Shannon entropy (bits) of `∏_{k in subset} X_k`.
pub fn product_entropy(source: &FamilySource, subset: &[usize]) -> Result<f64, HolismError> {
    Ok(entropy_estimate(source, subset)?.bits)
}

/// The numeric quantity a property looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    ProductEntropy,
    ProductExpectationMagnitude,
}

impl Functional {
    fn evaluate(self, p_plus: f64) -> f64 {
        match self {
            Functional::ProductEntropy => binary_entropy(p_plus),
            Functional::ProductExpectationMagnitude => (2.0 * p_plus - 1.0).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyKind {
    ProductEntropyZero,
    ProductEntropyOne,
    ProductExpectationMagnitudeOne,
    NumericThreshold,
}

/// Π: a subfamily has Π when `|value - target| <= tolerance`, and
/// approximates Π when `|value - target| <= epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySpec {
    pub kind: PropertyKind,
    pub functional: Functional,
    pub target: f64,
    pub tolerance: f64,
    pub epsilon: f64,
}

impl PropertySpec {
    pub fn numeric_threshold(
        functional: Functional,
        target: f64,
        tolerance: f64,
        epsilon: f64,
    ) -> Result<Self, HolismError> {
        Self::build(PropertyKind::NumericThreshold, functional, target, tolerance, epsilon)
    }

    /// The whole product is deterministic.
    pub fn product_entropy_zero(epsilon: f64) -> Result<Self, HolismError> {
        Self::build(PropertyKind::ProductEntropyZero, Functional::ProductEntropy, 0.0, 0.0, epsilon)
    }

    /// The product is maximally random, up to `tolerance` bits.
    pub fn product_entropy_one(tolerance: f64, epsilon: f64) -> Result<Self, HolismError> {
        Self::build(PropertyKind::ProductEntropyOne, Functional::ProductEntropy, 1.0, tolerance, epsilon)
    }

    /// The product is perfectly (anti-)correlated.
    pub fn product_expectation_magnitude_one(epsilon: f64) -> Result<Self, HolismError> {
        Self::build(
            PropertyKind::ProductExpectationMagnitudeOne,
            Functional::ProductExpectationMagnitude,
            1.0,
            0.0,
            epsilon,
        )
    }

    fn build(
        kind: PropertyKind,
        functional: Functional,
        target: f64,
        tolerance: f64,
        epsilon: f64,
    ) -> Result<Self, HolismError> {
        if !(epsilon > 0.0 && tolerance >= 0.0 && tolerance <= epsilon) {
            return Err(HolismError::BadThreshold { epsilon, tolerance });
        }
        Ok(PropertySpec { kind, functional, target, tolerance, epsilon })
    }

    pub fn gap(&self, value: f64) -> f64 {
        (value - self.target).abs()
    }

    pub fn holds(&self, value: f64) -> bool {
        self.gap(value) <= self.tolerance
    }

    pub fn approximated_by(&self, value: f64) -> bool {
        self.gap(value) <= self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubfamilyMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolismOptions {
    pub include_singletons: bool,
    pub mode: SubfamilyMode,
    pub exhaustive_cap: usize,
}

impl Default for HolismOptions {
    fn default() -> Self {
        HolismOptions {
            include_singletons: true,
            mode: SubfamilyMode::Exhaustive,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubfamilyValue {
    pub subset: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationClause {
    /// Smallest `|value - target|` over the checked subfamilies.
    pub min_gap: Option<f64>,
    pub violators: Vec<SubfamilyValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    WholeHasProperty,
    NoSubfamilyHasProperty,
    NoSubfamilyApproximates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolismReport {
    pub family_size: usize,
    pub source: String,
    pub sample_size: Option<usize>,
    pub property: PropertySpec,
    pub whole_value: f64,
    pub clause_i: bool,
    pub clause_ii: Vec<SubfamilyValue>,
    pub clause_iii: ApproximationClause,
    pub subfamilies_checked: usize,
    pub exhaustive: bool,
    pub include_singletons: bool,
    pub strictly_holistic: bool,
    /// Every clause that fails, in clause order.
    pub failing_clauses: Vec<Clause>,
    pub notes: Vec<String>,
}

/// Proper nonempty subfamilies in canonical order: by size, then
/// lexicographically.
fn proper_subfamilies(n: usize, include_singletons: bool) -> Vec<u64> {
    let full = (1u64 << n) - 1;
    let min_size = if include_singletons { 1 } else { 2 };
    let mut masks: Vec<u64> = (1..full).filter(|m| m.count_ones() >= min_size).collect();
    masks.sort_by_key(|&m| (m.count_ones(), subset_of_mask(m)));
    masks
}

/// Evaluates the three clauses of strict Π-holism.
pub fn check_strict_holism(
    source: &FamilySource,
    property: &PropertySpec,
    options: &HolismOptions,
) -> Result<HolismReport, HolismError> {
    let n = source.size();
    if n < 2 {
        return Err(HolismError::FamilyTooSmall(n));
    }
    if let FamilySource::Empirical(r) = source {
        if r.len() < MIN_RECORD_LEN {
            return Err(HolismError::RecordTooShort { len: r.len(), min: MIN_RECORD_LEN });
        }
    }
    let mut notes = vec![
        "subfamily = nonempty proper subset of the family; singleton inclusion set by option".to_string(),
        "clause (iii) uses a fixed epsilon for every subfamily size".to_string(),
    ];

    let (full_mask, masks, values, exhaustive) = match options.mode {
        SubfamilyMode::Exhaustive => {
            if n > options.exhaustive_cap {
                return Err(HolismError::OverExhaustiveCap { n, cap: options.exhaustive_cap });
            }
            let probs = source.all_plus_probabilities();
            let full = (1u64 << n) - 1;
            let masks = proper_subfamilies(n, options.include_singletons);
            let values: Vec<f64> = masks.iter().map(|&m| property.functional.evaluate(probs[m as usize])).collect();
            let whole = property.functional.evaluate(probs[full as usize]);
            (whole, masks, values, true)
        }
        SubfamilyMode::Sampled { count, seed } => {
            if n > 64 {
                return Err(HolismError::TooWide(n));
            }
            notes.push(format!("sampled {count} subfamilies (seed {seed}); clauses (ii)/(iii) are not certified"));
            let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            let min_size = if options.include_singletons { 1 } else { 2 };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut masks = Vec::with_capacity(count);
            while masks.len() < count {
                let m = rng.random::<u64>() & full;
                if m != 0 && m != full && m.count_ones() >= min_size {
                    masks.push(m);
                }
            }
            let values = masks.iter().map(|&m| property.functional.evaluate(source.plus_probability(m))).collect();
            let whole = property.functional.evaluate(source.plus_probability(full));
            (whole, masks, values, false)
        }
    };
    let whole_value = full_mask;

    let clause_i = property.holds(whole_value);
    let mut clause_ii = Vec::new();
    let mut clause_iii = Vec::new();
    let mut min_gap: Option<f64> = None;
    for (&mask, &value) in masks.iter().zip(&values) {
        let gap = property.gap(value);
        min_gap = Some(min_gap.map_or(gap, |g| g.min(gap)));
        if property.holds(value) {
            clause_ii.push(SubfamilyValue { subset: subset_of_mask(mask), value });
        }
        if property.approximated_by(value) {
            clause_iii.push(SubfamilyValue { subset: subset_of_mask(mask), value });
        }
    }

    let mut failing_clauses = Vec::new();
    if !clause_i {
        failing_clauses.push(Clause::WholeHasProperty);
    }
    if !clause_ii.is_empty() {
        failing_clauses.push(Clause::NoSubfamilyHasProperty);
    }
    if !clause_iii.is_empty() {
        failing_clauses.push(Clause::NoSubfamilyApproximates);
    }

    Ok(HolismReport {
        family_size: n,
        source: source.label().to_string(),
        sample_size: source.sample_size(),
        property: property.clone(),
        whole_value,
        clause_i,
        clause_ii,
        clause_iii: ApproximationClause { min_gap, violators: clause_iii },
        subfamilies_checked: masks.len(),
        exhaustive,
        include_singletons: options.include_singletons,
        strictly_holistic: failing_clauses.is_empty(),
        failing_clauses,
        notes,
    })
}

/// A family of three independent fair signs: the whole and every subfamily
/// are maximally random, so "being random" is not a holistic property here.
pub fn independent_signs_family(trials: usize, seed: u64) -> Result<FamilySource, HolismError> {
    if trials < MIN_RECORD_LEN {
        return Err(HolismError::RecordTooShort { len: trials, min: MIN_RECORD_LEN });
    }
    const SIZE: usize = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..trials as u64)
        .map(|t| {
            let bits: u8 = rng.random();
            Trial::new(t, (0..SIZE).map(|k| Sign::from_bit(bits >> k & 1 == 1)).collect())
        })
        .collect();
    Ok(FamilySource::Empirical(MeasurementRecord::new(SIZE, rows, Some(seed))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::sample_joint_x;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
        // -(3/4) log2(3/4) - (1/4) log2(1/4) = 2 - (3/4) log2 3
        let expected = 2.0 - 0.75 * 3f64.log2();
        assert!((binary_entropy(0.75) - expected).abs() < 1e-15);
        assert!((binary_entropy(0.75) - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn ghz_product_entropies() {
        let source = FamilySource::Analytic(AtomDistribution::ghz_x(4).unwrap());
        assert_eq!(product_entropy(&source, &[1, 2, 3, 4]).unwrap(), 0.0);
        assert_eq!(product_entropy(&source, &[2, 4]).unwrap(), 1.0);
        assert!(matches!(product_entropy(&source, &[]), Err(HolismError::EmptySubset)));
        assert!(product_entropy(&source, &[5]).is_err());
    }

    #[test]
    fn ghz_is_strictly_holistic() {
        let source = FamilySource::Analytic(AtomDistribution::ghz_x(5).unwrap());
        let prop = PropertySpec::product_entropy_zero(0.1).unwrap();
        let report = check_strict_holism(&source, &prop, &HolismOptions::default()).unwrap();
        assert!(report.strictly_holistic);
        assert!(report.clause_i && report.clause_ii.is_empty() && report.clause_iii.violators.is_empty());
        assert_eq!(report.subfamilies_checked, 30);
        assert_eq!(report.clause_iii.min_gap, Some(1.0));
    }

    #[test]
    fn independent_coins_fail_clause_i() {
        let source = FamilySource::Analytic(AtomDistribution::uniform(4).unwrap());
        let prop = PropertySpec::product_entropy_zero(0.1).unwrap();
        let report = check_strict_holism(&source, &prop, &HolismOptions::default()).unwrap();
        assert!(!report.strictly_holistic);
        assert_eq!(report.failing_clauses, vec![Clause::WholeHasProperty]);
    }

    #[test]
    fn constant_first_variable_fails_clause_ii() {
        let source = FamilySource::Analytic(AtomDistribution::uniform_on(3, |a| a & 1 == 0).unwrap());
        let prop = PropertySpec::product_entropy_zero(0.1).unwrap();
        let report = check_strict_holism(&source, &prop, &HolismOptions::default()).unwrap();
        assert!(report.failing_clauses.contains(&Clause::NoSubfamilyHasProperty));
        let violators: Vec<_> = report.clause_ii.iter().map(|v| v.subset.clone()).collect();
        assert_eq!(violators, vec![vec![1]]);
    }

    #[test]
    fn independent_signs_fail_clause_ii() {
        let source = independent_signs_family(20_000, 3).unwrap();
        assert!((product_entropy(&source, &[1, 2, 3]).unwrap() - 1.0).abs() < 1e-3);
        assert!((product_entropy(&source, &[1]).unwrap() - 1.0).abs() < 1e-3);
        let prop = PropertySpec::product_entropy_one(0.01, 0.1).unwrap();
        let report = check_strict_holism(&source, &prop, &HolismOptions::default()).unwrap();
        assert!(report.clause_i);
        assert!(report.failing_clauses.contains(&Clause::NoSubfamilyHasProperty));
        assert!(!report.failing_clauses.contains(&Clause::WholeHasProperty));
        assert!(matches!(independent_signs_family(99, 0), Err(HolismError::RecordTooShort { .. })));
    }

    #[test]
    fn empirical_ghz_matches_analytic_verdict() {
        let record = sample_joint_x(6, 20_000, 17).unwrap();
        let prop = PropertySpec::product_entropy_zero(0.1).unwrap();
        let report = check_strict_holism(&FamilySource::Empirical(record), &prop, &HolismOptions::default()).unwrap();
        assert!(report.strictly_holistic);
        assert_eq!(report.whole_value, 0.0);
        let est = entropy_estimate(&FamilySource::Empirical(sample_joint_x(3, 1000, 1).unwrap()), &[1]).unwrap();
        assert!(est.standard_error.unwrap() >= 0.0);
    }

    #[test]
    fn options_and_errors() {
        let prop = PropertySpec::product_entropy_zero(0.1).unwrap();
        let small = FamilySource::Analytic(AtomDistribution::uniform(1).unwrap());
        assert!(matches!(
            check_strict_holism(&small, &prop, &HolismOptions::default()),
            Err(HolismError::FamilyTooSmall(1))
        ));
        let ghz = FamilySource::Analytic(AtomDistribution::ghz_x(4).unwrap());
        let capped = HolismOptions { exhaustive_cap: 3, ..HolismOptions::default() };
        let err = check_strict_holism(&ghz, &prop, &capped).unwrap_err();
        assert!(err.to_string().contains("sampling mode"));

        let no_singletons = HolismOptions { include_singletons: false, ..HolismOptions::default() };
        assert_eq!(check_strict_holism(&ghz, &prop, &no_singletons).unwrap().subfamilies_checked, 10);

        let sampled = HolismOptions { mode: SubfamilyMode::Sampled { count: 7, seed: 1 }, ..HolismOptions::default() };
        let report = check_strict_holism(&ghz, &prop, &sampled).unwrap();
        assert!(!report.exhaustive && report.subfamilies_checked == 7 && report.strictly_holistic);

        assert!(PropertySpec::product_entropy_zero(0.0).is_err());
        assert!(PropertySpec::product_entropy_one(0.2, 0.1).is_err());
        let short = FamilySource::Empirical(sample_joint_x(3, 50, 1).unwrap());
        assert!(matches!(
            check_strict_holism(&short, &prop, &HolismOptions::default()),
            Err(HolismError::RecordTooShort { .. })
        ));
    }

    #[test]
    fn canonical_order() {
        let masks = proper_subfamilies(3, true);
        let subsets: Vec<_> = masks.into_iter().map(subset_of_mask).collect();
        assert_eq!(subsets, vec![vec![1], vec![2], vec![3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }
}
