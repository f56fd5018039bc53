//! Simulated joint `σ_x` measurements on freshly prepared GHZ states, and
//! randomness tests for the resulting subset-product series.
//!
//! Each trial re-prepares the state and reads out all `n` single-site `σ_x`
//! observables at once (they commute). Trial `t` draws its randomness from a
//! ChaCha stream keyed by `(seed, t)` alone, so records are identical however
//! the trials are scheduled.

use std::io::{Read, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;
use thiserror::Error;

/// Minimum series length accepted by [`bernoulli_test`].
pub const MIN_SERIES_LEN: usize = 100;

/// How the trials of a sampled record relate to each other.
pub const TRIAL_SEMANTICS: &str = "re-prepared-per-trial";

#[derive(Debug, Error)]
pub enum MeasurementError {
    #[error("number of trials must be positive")]
    NoTrials,
    #[error("qubit count must be at least 1")]
    ZeroQubits,
    #[error("subset must not be empty")]
    EmptySubset,
    #[error("qubit index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("series has {len} entries, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("significance level {0} must lie strictly between 0 and 1")]
    BadAlpha(f64),
    #[error("record line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One `±1` measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_bit(bit: bool) -> Sign {
        if bit {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn product<I: IntoIterator<Item = Sign>>(signs: I) -> Sign {
        Sign::from_bit(signs.into_iter().filter(|s| s.is_minus()).count() % 2 == 1)
    }
}

/// One trial: outcomes `S_1..S_n` and their product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub t: u64,
    pub outcomes: Vec<Sign>,
    pub product: Sign,
}

impl Trial {
    pub fn new(t: u64, outcomes: Vec<Sign>) -> Trial {
        let product = Sign::product(outcomes.iter().copied());
        Trial { t, outcomes, product }
    }

    /// Sign pattern as an atom index: bit `k - 1` set iff `S_k = -1`.
    pub fn pattern(&self) -> u64 {
        self.outcomes.iter().enumerate().filter(|(_, s)| s.is_minus()).fold(0, |acc, (k, _)| acc | 1 << k)
    }
}

/// A table of trials, ordered by trial index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    n: usize,
    trials: Vec<Trial>,
    seed: Option<u64>,
}

impl MeasurementRecord {
    /// Builds a record, checking every row's width and product column.
    pub fn new(n: usize, trials: Vec<Trial>, seed: Option<u64>) -> Result<Self, MeasurementError> {
        if n == 0 {
            return Err(MeasurementError::ZeroQubits);
        }
        for (i, trial) in trials.iter().enumerate() {
            if trial.outcomes.len() != n {
                return Err(MeasurementError::Format {
                    line: i + 2,
                    message: format!("expected {n} outcomes, found {}", trial.outcomes.len()),
                });
            }
            if trial.product != Sign::product(trial.outcomes.iter().copied()) {
                return Err(MeasurementError::Format {
                    line: i + 2,
                    message: "product column does not match the outcomes".into(),
                });
            }
        }
        Ok(MeasurementRecord { n, trials, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Writes the `t,s1,...,sN,product` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MeasurementError> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n).map(|k| format!("s{k}")));
        header.push("product".into());
        out.write_record(&header)?;
        for trial in &self.trials {
            let mut row = vec![trial.t.to_string()];
            row.extend(trial.outcomes.iter().map(|s| s.value().to_string()));
            row.push(trial.product.value().to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    /// Parses the CSV form. The seed is not stored in the file.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, MeasurementError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < 3 || cols[0] != "t" || cols[cols.len() - 1] != "product" {
            return Err(MeasurementError::Format { line: 1, message: "header must be t,s1,...,sN,product".into() });
        }
        let n = cols.len() - 2;
        for (k, name) in cols[1..=n].iter().enumerate() {
            if *name != format!("s{}", k + 1) {
                return Err(MeasurementError::Format {
                    line: 1,
                    message: format!("column {} should be s{}, found {name:?}", k + 2, k + 1),
                });
            }
        }
        let mut trials = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let field = |j: usize| -> Result<i64, MeasurementError> {
                row[j].parse::<i64>().map_err(|_| MeasurementError::Format {
                    line,
                    message: format!("field {} ({}) is not an integer: {:?}", j + 1, cols[j], &row[j]),
                })
            };
            let sign = |j: usize| -> Result<Sign, MeasurementError> {
                let v = field(j)?;
                Sign::from_value(v).ok_or_else(|| MeasurementError::Format {
                    line,
                    message: format!("field {} ({}) must be 1 or -1, found {v}", j + 1, cols[j]),
                })
            };
            let t = u64::try_from(field(0)?)
                .map_err(|_| MeasurementError::Format { line, message: "field 1 (t) must be non-negative".into() })?;
            let outcomes = (1..=n).map(sign).collect::<Result<Vec<_>, _>>()?;
            let product = sign(n + 1)?;
            trials.push(Trial { t, outcomes, product });
        }
        MeasurementRecord::new(n, trials, None)
    }
}

/// Outcome of trial `t` for `GHZ_n`: `n - 1` fair signs, the last fixed so
/// the product is `+1`.
pub fn sample_trial(n: usize, seed: u64, t: u64) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t);
    let mut outcomes = Vec::with_capacity(n);
    let mut word = 0u64;
    for k in 0..n.saturating_sub(1) {
        if k % 64 == 0 {
            word = rng.next_u64();
        }
        outcomes.push(Sign::from_bit(word >> (k % 64) & 1 == 1));
    }
    outcomes.push(Sign::product(outcomes.iter().copied()));
    Trial { t, outcomes, product: Sign::Plus }
}

/// Samples `trials` independent joint `σ_x` readouts of `GHZ_n`.
pub fn sample_joint_x(n: usize, trials: u64, seed: u64) -> Result<MeasurementRecord, MeasurementError> {
    if n == 0 {
        return Err(MeasurementError::ZeroQubits);
    }
    if trials == 0 {
        return Err(MeasurementError::NoTrials);
    }
    let rows: Vec<Trial> = (0..trials).into_par_iter().map(|t| sample_trial(n, seed, t)).collect();
    Ok(MeasurementRecord { n, trials: rows, seed: Some(seed) })
}

/// Checks that `subset` is a nonempty set of indices in `1..=n`, returning it
/// as a bit mask.
pub fn subset_mask(n: usize, subset: &[usize]) -> Result<u64, MeasurementError> {
    if subset.is_empty() {
        return Err(MeasurementError::EmptySubset);
    }
    let mut mask = 0u64;
    for &k in subset {
        if k == 0 || k > n || k > 64 {
            return Err(MeasurementError::IndexOutOfRange { index: k, n });
        }
        mask |= 1 << (k - 1);
    }
    Ok(mask)
}

/// `X_t` restricted to `subset`: the product of the chosen outcomes per trial.
pub fn subset_product_series(record: &MeasurementRecord, subset: &[usize]) -> Result<Vec<Sign>, MeasurementError> {
    subset_mask(record.n, subset)?;
    Ok(record.trials.iter().map(|trial| Sign::product(subset.iter().map(|&k| trial.outcomes[k - 1]))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Constant series; the frequency test is degenerate.
    Deterministic,
    #[serde(rename = "consistent-with-Bernoulli(1/2)")]
    ConsistentWithBernoulli,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomnessReport {
    pub subset: Option<Vec<usize>>,
    pub sample_size: usize,
    pub plus_count: usize,
    pub frequency: TestResult,
    /// `None` when the series is constant.
    pub runs: Option<TestResult>,
    pub degenerate: bool,
    pub alpha: f64,
    pub verdict: Verdict,
}

fn two_sided_normal_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Frequency (normal-approximation binomial) and Wald–Wolfowitz runs tests of
/// the hypothesis that `series` is i.i.d. with `P(+1) = 1/2`.
pub fn bernoulli_test(series: &[Sign], alpha: f64) -> Result<RandomnessReport, MeasurementError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MeasurementError::BadAlpha(alpha));
    }
    let len = series.len();
    if len < MIN_SERIES_LEN {
        return Err(MeasurementError::SeriesTooShort { len, min: MIN_SERIES_LEN });
    }
    let total = len as f64;
    let plus = series.iter().filter(|s| **s == Sign::Plus).count();
    let minus = len - plus;

    let sum = plus as f64 - minus as f64;
    let z_freq = sum / total.sqrt();
    let frequency = TestResult { statistic: z_freq, p_value: two_sided_normal_p(z_freq) };

    if plus == 0 || minus == 0 {
        return Ok(RandomnessReport {
            subset: None,
            sample_size: len,
            plus_count: plus,
            frequency,
            runs: None,
            degenerate: true,
            alpha,
            verdict: Verdict::Deterministic,
        });
    }

    let runs_count = 1 + series.windows(2).filter(|w| w[0] != w[1]).count();
    let (n1, n2) = (plus as f64, minus as f64);
    let mean = 2.0 * n1 * n2 / total + 1.0;
    let variance = 2.0 * n1 * n2 * (2.0 * n1 * n2 - total) / (total * total * (total - 1.0));
    let z_runs = (runs_count as f64 - mean) / variance.sqrt();
    let runs = TestResult { statistic: z_runs, p_value: two_sided_normal_p(z_runs) };

    let verdict = if frequency.p_value >= alpha && runs.p_value >= alpha {
        Verdict::ConsistentWithBernoulli
    } else {
        Verdict::Rejected
    };
    Ok(RandomnessReport {
        subset: None,
        sample_size: len,
        plus_count: plus,
        frequency,
        runs: Some(runs),
        degenerate: false,
        alpha,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Rows whose full product is `-1`.
    pub off_support: usize,
}

/// Pearson chi-square test that the outcome strings are uniform over the
/// `2^(n-1)` strings with product `+1`.
pub fn uniformity_chi_square(record: &MeasurementRecord) -> Result<UniformityTest, MeasurementError> {
    if record.is_empty() {
        return Err(MeasurementError::NoTrials);
    }
    if record.n > 24 {
        return Err(MeasurementError::IndexOutOfRange { index: record.n, n: 24 });
    }
    let mut counts = vec![0u64; 1 << record.n];
    for trial in &record.trials {
        counts[trial.pattern() as usize] += 1;
    }
    let cells: Vec<u64> = (0..counts.len()).filter(|p| p.count_ones() % 2 == 0).map(|p| counts[p]).collect();
    let off_support = (record.len() as u64 - cells.iter().sum::<u64>()) as usize;
    let expected = record.len() as f64 / cells.len() as f64;
    let statistic: f64 = cells.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = cells.len() - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        dist.sf(statistic).clamp(0.0, 1.0)
    };
    Ok(UniformityTest { statistic, degrees_of_freedom: dof, p_value, off_support })
}

/// Mean of a `±1` series.
pub fn series_mean(series: &[Sign]) -> f64 {
    series.iter().map(|s| f64::from(s.value())).sum::<f64>() / series.len() as f64
}
