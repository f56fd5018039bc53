//! End-to-end checks of the six claims (numbered 1-6, matching `--prop`), assembled into one report.
//!
//! Failures are data, not errors: every check returns a report with a
//! `passed` flag, and [`SuiteReport::all_passed`] is true iff every enabled
//! check passed.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::holism::{
    binary_entropy, check_strict_holism, product_entropy, Clause, FamilySource, HolismOptions, PropertySpec,
};
use crate::measurement::{
    bernoulli_test, sample_joint_x, series_mean, subset_product_series, uniformity_chi_square, Sign, Verdict,
    MIN_SERIES_LEN, TRIAL_SEMANTICS,
};
use crate::pauli::{Pauli, PauliString};
use crate::probspace::{
    ghz_style_constraints, rational, subset_of_mask, AtomDistribution, CoCorrelationReport, Interval, MomentSolver,
    ProbError, RangeOutcome, SolveOutcome, UniformityReport,
};
use crate::state::{ghz_expectation_closed_form, make_ghz_with_cap};

const DENSE_TOLERANCE: f64 = 1e-12;

/// Largest register for the exhaustive Pauli sweep.
pub const PROP1_MAX_N: usize = 6;
/// Register size for the sampling checks.
pub const SAMPLING_QUBITS: usize = 4;
/// Largest size for the exact-LP checks.
pub const PROBSPACE_MAX_N: usize = 8;
/// Largest family size for the holism check.
pub const HOLISM_MAX_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringValue {
    pub n: usize,
    pub string: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    pub sizes: Vec<usize>,
    pub strings_checked: usize,
    /// Strings where the dense and closed-form engines differ.
    pub engine_mismatches: Vec<StringValue>,
    /// Strings with nonempty proper flip support and nonzero expectation.
    pub proper_support_nonzero: Vec<StringValue>,
    /// `<X...X>` for each size.
    pub all_x: Vec<StringValue>,
    /// `Y` on an even-size set, `X` elsewhere: expected `|value| = 1`; the
    /// sign is `(-1)^(|Y|/2)`.
    pub even_y_observables: Vec<StringValue>,
    /// Products of fewer than `n` spin operators with nonzero expectation
    /// (the `Z`-parity strings), which a literal "any product of fewer than
    /// N operators vanishes" reading does not allow.
    pub scope_exceptions: Vec<StringValue>,
    pub passed: bool,
}

/// Exhaustive sweep over every Hermitian Pauli string for each size.
pub fn verify_prop1(sizes: &[usize], dense_cap: usize) -> Prop1Report {
    let mut report = Prop1Report {
        sizes: sizes.to_vec(),
        strings_checked: 0,
        engine_mismatches: Vec::new(),
        proper_support_nonzero: Vec::new(),
        all_x: Vec::new(),
        even_y_observables: Vec::new(),
        scope_exceptions: Vec::new(),
        passed: false,
    };
    let mut ok = !sizes.is_empty();
    for &n in sizes {
        let state = match make_ghz_with_cap(n, dense_cap) {
            Ok(s) => s,
            Err(_) => {
                ok = false;
                continue;
            }
        };
        for p in PauliString::all_hermitian(n) {
            report.strings_checked += 1;
            let dense = state.expectation(&p).expect("dimensions match");
            let closed = f64::from(ghz_expectation_closed_form(n, &p).expect("Hermitian"));
            let entry = || StringValue { n, string: p.to_string(), value: dense };
            if (dense - closed).abs() > DENSE_TOLERANCE {
                report.engine_mismatches.push(entry());
            }
            let flips = p.flip_support().len();
            if flips > 0 && flips < n && dense.abs() > DENSE_TOLERANCE {
                report.proper_support_nonzero.push(entry());
            }
            if p.weight() < n && dense.abs() > DENSE_TOLERANCE && p.weight() > 0 {
                report.scope_exceptions.push(entry());
            }
            if p.count(Pauli::Z) == 0 && flips == n && p.count(Pauli::Y) % 2 == 0 {
                report.even_y_observables.push(entry());
            }
            if p.count(Pauli::X) == n {
                report.all_x.push(entry());
            }
        }
    }
    ok &= report.engine_mismatches.is_empty()
        && report.proper_support_nonzero.is_empty()
        && report.all_x.iter().all(|v| (v.value - 1.0).abs() <= DENSE_TOLERANCE)
        && report.even_y_observables.iter().all(|v| (v.value.abs() - 1.0).abs() <= DENSE_TOLERANCE);
    report.passed = ok;
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSeriesCheck {
    pub subset: Vec<usize>,
    pub mean: f64,
    pub entropy_bits: f64,
    pub frequency_p: Option<f64>,
    pub runs_p: Option<f64>,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub semantics: String,
    pub alpha: f64,
    /// `5 / sqrt(trials)`.
    pub mean_tolerance: f64,
    /// Entropy deficit allowed for proper subsets; never below 0.01 bits.
    pub entropy_tolerance: f64,
    /// Randomness tests need at least this many trials.
    pub randomness_tests_run: bool,
    pub full_product_constant: bool,
    pub full_product_entropy: f64,
    pub full_product_verdict: Option<Verdict>,
    pub subsets: Vec<SubsetSeriesCheck>,
    pub uniformity_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop2Report {
    pub sampling: SamplingReport,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop3Report {
    pub full_product_entropy: f64,
    pub min_subset_entropy: f64,
    pub entropy_tolerance: f64,
    pub passed: bool,
}

/// Entropy tolerance consistent with the `5 / sqrt(M)` mean tolerance.
pub fn entropy_tolerance(trials: u64) -> f64 {
    let dp = 2.5 / (trials as f64).sqrt();
    (1.0 - binary_entropy((0.5 + dp).min(1.0))).max(0.01)
}

/// Samples `GHZ_n` and checks the subset-product series (claim 2) and their
/// entropies (claim 3) from one record.
pub fn verify_sampling(n: usize, trials: u64, seed: u64, alpha: f64) -> (Prop2Report, Prop3Report) {
    let record = sample_joint_x(n, trials, seed).expect("n and trials are positive");
    let source = FamilySource::Empirical(record.clone());
    let tests_run = record.len() >= MIN_SERIES_LEN;
    let mean_tolerance = 5.0 / (trials as f64).sqrt();
    let h_tol = entropy_tolerance(trials);

    let full: Vec<usize> = (1..=n).collect();
    let full_series = subset_product_series(&record, &full).expect("valid subset");
    let full_constant = full_series.iter().all(|s| *s == Sign::Plus);
    let full_entropy = product_entropy(&source, &full).expect("valid subset");
    let full_verdict = tests_run.then(|| bernoulli_test(&full_series, alpha).expect("length checked").verdict);

    let mut subsets = Vec::new();
    for mask in 1u64..(1 << n) - 1 {
        let subset = subset_of_mask(mask);
        let series = subset_product_series(&record, &subset).expect("valid subset");
        let test = tests_run.then(|| bernoulli_test(&series, alpha).expect("length checked"));
        subsets.push(SubsetSeriesCheck {
            mean: series_mean(&series),
            entropy_bits: product_entropy(&source, &subset).expect("valid subset"),
            frequency_p: test.as_ref().map(|t| t.frequency.p_value),
            runs_p: test.as_ref().and_then(|t| t.runs.map(|r| r.p_value)),
            verdict: test.map(|t| t.verdict),
            subset,
        });
    }
    let uniformity_p = (n <= 24).then(|| uniformity_chi_square(&record).expect("nonempty").p_value);

    let prop2_passed = full_constant
        && full_verdict.is_none_or(|v| v == Verdict::Deterministic)
        && subsets
            .iter()
            .all(|s| s.mean.abs() <= mean_tolerance && s.verdict.is_none_or(|v| v == Verdict::ConsistentWithBernoulli));
    let prop3_passed = full_entropy == 0.0 && subsets.iter().all(|s| (1.0 - s.entropy_bits).abs() <= h_tol);
    let min_subset_entropy = subsets.iter().map(|s| s.entropy_bits).fold(1.0, f64::min);

    let sampling = SamplingReport {
        n,
        trials,
        seed,
        semantics: TRIAL_SEMANTICS.into(),
        alpha,
        mean_tolerance,
        entropy_tolerance: h_tol,
        randomness_tests_run: tests_run,
        full_product_constant: full_constant,
        full_product_entropy: full_entropy,
        full_product_verdict: full_verdict,
        subsets,
        uniformity_p,
    };
    (
        Prop2Report { sampling, passed: prop2_passed },
        Prop3Report {
            full_product_entropy: full_entropy,
            min_subset_entropy,
            entropy_tolerance: h_tol,
            passed: prop3_passed,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapNote {
    pub requested_max_n: usize,
    pub verified_max_n: usize,
    pub limited_by_solver_cap: bool,
}

fn cap_note(requested: usize, cap: usize) -> CapNote {
    CapNote { requested_max_n: requested, verified_max_n: requested.min(cap), limited_by_solver_cap: cap < requested }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop4Report {
    pub coverage: CapNote,
    pub runs: Vec<UniformityReport>,
    pub passed: bool,
}

pub fn verify_prop4(sizes: &[usize], solver: &MomentSolver) -> Result<Prop4Report, ProbError> {
    let requested = sizes.iter().copied().max().unwrap_or(0);
    let runs =
        sizes.iter().filter(|&&n| n <= solver.cap()).map(|&n| solver.verify_prop4(n)).collect::<Result<Vec<_>, _>>()?;
    let passed = !runs.is_empty() && runs.iter().all(|r| r.passed);
    Ok(Prop4Report { coverage: cap_note(requested, solver.cap()), runs, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop5Report {
    pub coverage: CapNote,
    pub runs: Vec<CoCorrelationReport>,
    pub passed: bool,
}

pub fn verify_prop5(sizes: &[usize], solver: &MomentSolver) -> Result<Prop5Report, ProbError> {
    let requested = sizes.iter().copied().max().unwrap_or(0);
    let mut runs = Vec::new();
    for &n in sizes.iter().filter(|&&n| n >= 2 && n <= solver.cap()) {
        for sign in [1, -1] {
            runs.push(solver.verify_prop5(n, sign)?);
        }
    }
    let passed = !runs.is_empty() && runs.iter().all(|r| r.passed);
    Ok(Prop5Report { coverage: cap_note(requested, solver.cap()), runs, passed })
}

/// The three- versus four-variable contrast: the GHZ moments pin down the
/// three-variable law but not the four-variable one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSystemsReport {
    pub three_variable: SolveOutcome,
    pub three_variable_pair_ranges: Vec<Interval>,
    pub four_variable_outcome: String,
    pub four_variable_pair_range: Option<Interval>,
    pub passed: bool,
}

pub fn verify_moment_systems(solver: &MomentSolver) -> Result<MomentSystemsReport, ProbError> {
    let zero = rational(0, 1);
    let three = ghz_style_constraints(3, 1);
    let three_variable = solver.solve(3, &three)?;
    let expected = AtomDistribution::ghz_x(3)?;
    let mut pair_ranges = Vec::new();
    for pair in [[1, 2], [1, 3], [2, 3]] {
        if let RangeOutcome::Range(i) = solver.range(3, &three, &pair)? {
            pair_ranges.push(i);
        }
    }
    let four = ghz_style_constraints(4, 1);
    let four_outcome = solver.solve(4, &four)?;
    let four_range = match solver.range(4, &four, &[1, 2])? {
        RangeOutcome::Range(i) => Some(i),
        RangeOutcome::Infeasible => None,
    };
    let passed = three_variable == SolveOutcome::Unique { distribution: expected }
        && pair_ranges.len() == 3
        && pair_ranges.iter().all(|i| i.is_point(&zero))
        && matches!(four_outcome, SolveOutcome::Underdetermined { .. })
        && four_range == Some(Interval { lo: rational(-1, 1), hi: rational(1, 1) });
    Ok(MomentSystemsReport {
        three_variable,
        three_variable_pair_ranges: pair_ranges,
        four_variable_outcome: four_outcome.label().into(),
        four_variable_pair_range: four_range,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolismSummary {
    pub family: String,
    pub n: usize,
    pub strictly_holistic: bool,
    pub failing_clauses: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop6Report {
    pub epsilon: f64,
    pub ghz: Vec<HolismSummary>,
    pub controls: Vec<HolismSummary>,
    pub passed: bool,
}

pub fn verify_prop6(sizes: &[usize], epsilon: f64) -> Prop6Report {
    let property = PropertySpec::product_entropy_zero(epsilon).expect("epsilon validated by config");
    let options = HolismOptions::default();
    let summarize = |family: &str, dist: AtomDistribution| {
        let n = dist.n();
        let report = check_strict_holism(&FamilySource::Analytic(dist), &property, &options)
            .expect("analytic families are within the exhaustive cap");
        HolismSummary {
            family: family.into(),
            n,
            strictly_holistic: report.strictly_holistic,
            failing_clauses: report.failing_clauses,
        }
    };
    let ghz: Vec<HolismSummary> = sizes
        .iter()
        .filter(|&&n| n >= 2)
        .map(|&n| summarize("ghz", AtomDistribution::ghz_x(n).expect("n within atom cap")))
        .collect();
    let control_n = 4;
    let controls = vec![
        summarize("independent-coins", AtomDistribution::uniform(control_n).expect("small")),
        summarize("constant-first", AtomDistribution::uniform_on(control_n, |a| a & 1 == 0).expect("small")),
    ];
    let passed = !ghz.is_empty()
        && ghz.iter().all(|s| s.strictly_holistic)
        && controls[0].failing_clauses.first() == Some(&Clause::WholeHasProperty)
        && !controls[0].failing_clauses.contains(&Clause::NoSubfamilyHasProperty)
        && controls[1].failing_clauses.contains(&Clause::NoSubfamilyHasProperty);
    Prop6Report { epsilon, ghz, controls, passed }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: Config,
    pub prop1: Option<Prop1Report>,
    pub prop2: Option<Prop2Report>,
    pub prop3: Option<Prop3Report>,
    pub prop4: Option<Prop4Report>,
    pub prop5: Option<Prop5Report>,
    pub moment_systems: Option<MomentSystemsReport>,
    pub prop6: Option<Prop6Report>,
    pub all_passed: bool,
}

impl SuiteReport {
    fn empty(config: &Config) -> SuiteReport {
        SuiteReport {
            config: config.clone(),
            prop1: None,
            prop2: None,
            prop3: None,
            prop4: None,
            prop5: None,
            moment_systems: None,
            prop6: None,
            all_passed: false,
        }
    }

    fn finish(mut self) -> SuiteReport {
        let flags = [
            self.prop1.as_ref().map(|r| r.passed),
            self.prop2.as_ref().map(|r| r.passed),
            self.prop3.as_ref().map(|r| r.passed),
            self.prop4.as_ref().map(|r| r.passed),
            self.prop5.as_ref().map(|r| r.passed),
            self.moment_systems.as_ref().map(|r| r.passed),
            self.prop6.as_ref().map(|r| r.passed),
        ];
        let enabled: Vec<bool> = flags.into_iter().flatten().collect();
        self.all_passed = !enabled.is_empty() && enabled.iter().all(|&p| p);
        self
    }

    /// `(name, passed)` for each check that ran.
    pub fn statuses(&self) -> Vec<(&'static str, bool)> {
        [
            ("prop1", self.prop1.as_ref().map(|r| r.passed)),
            ("prop2", self.prop2.as_ref().map(|r| r.passed)),
            ("prop3", self.prop3.as_ref().map(|r| r.passed)),
            ("prop4", self.prop4.as_ref().map(|r| r.passed)),
            ("prop5", self.prop5.as_ref().map(|r| r.passed)),
            ("moment_systems", self.moment_systems.as_ref().map(|r| r.passed)),
            ("prop6", self.prop6.as_ref().map(|r| r.passed)),
        ]
        .into_iter()
        .filter_map(|(name, p)| p.map(|p| (name, p)))
        .collect()
    }
}

/// Runs every check with the given configuration.
pub fn verify_all(config: &Config) -> SuiteReport {
    let solver = MomentSolver::new(config.solver_cap);
    let mut report = SuiteReport::empty(config);
    let prop1_sizes: Vec<usize> = (1..=PROP1_MAX_N.min(config.dense_cap)).collect();
    report.prop1 = Some(verify_prop1(&prop1_sizes, config.dense_cap));
    let (p2, p3) = verify_sampling(SAMPLING_QUBITS, config.trials, config.seed, config.alpha);
    report.prop2 = Some(p2);
    report.prop3 = Some(p3);
    let sizes: Vec<usize> = (1..=PROBSPACE_MAX_N).collect();
    report.prop4 = verify_prop4(&sizes, &solver).ok();
    report.prop5 = verify_prop5(&sizes, &solver).ok();
    report.moment_systems = if solver.cap() >= 4 { verify_moment_systems(&solver).ok() } else { None };
    let holism_sizes: Vec<usize> = (2..=HOLISM_MAX_N).collect();
    report.prop6 = Some(verify_prop6(&holism_sizes, config.epsilon));
    report.finish()
}

/// Runs a single proposition's check at size `n` (or its default range).
pub fn verify_single(prop: u8, n: Option<usize>, config: &Config) -> Result<SuiteReport, VerifyError> {
    let solver = MomentSolver::new(config.solver_cap);
    let mut report = SuiteReport::empty(config);
    let sizes = |default_max: usize, min: usize| -> Vec<usize> {
        match n {
            Some(n) => vec![n],
            None => (min..=default_max).collect(),
        }
    };
    match prop {
        1 => report.prop1 = Some(verify_prop1(&sizes(PROP1_MAX_N, 1), config.dense_cap)),
        2 | 3 => {
            let (p2, p3) = verify_sampling(n.unwrap_or(SAMPLING_QUBITS), config.trials, config.seed, config.alpha);
            if prop == 2 {
                report.prop2 = Some(p2);
            } else {
                report.prop3 = Some(p3);
            }
        }
        4 => report.prop4 = Some(verify_prop4(&sizes(PROBSPACE_MAX_N, 1), &solver)?),
        5 => report.prop5 = Some(verify_prop5(&sizes(PROBSPACE_MAX_N, 2), &solver)?),
        6 => report.prop6 = Some(verify_prop6(&sizes(HOLISM_MAX_N, 2), config.epsilon)),
        other => return Err(VerifyError::UnknownProposition(other)),
    }
    Ok(report.finish())
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("unknown proposition {0}; expected 1-6")]
    UnknownProposition(u8),
    #[error(transparent)]
    Prob(#[from] ProbError),
}
