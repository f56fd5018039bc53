use ghz_holism::measurement::{
    bernoulli_test, sample_joint_x, series_mean, subset_product_series, uniformity_chi_square, MeasurementRecord, Sign,
    Trial, Verdict,
};
use proptest::prelude::*;

fn proper_subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u64..(1 << n) - 1).map(move |m| (1..=n).filter(|k| m >> (k - 1) & 1 == 1).collect())
}

#[test]
fn every_trial_lies_on_the_even_support() {
    for n in 1..=8 {
        let record = sample_joint_x(n, 5_000, 11).unwrap();
        for trial in record.trials() {
            assert_eq!(Sign::product(trial.outcomes.iter().copied()), Sign::Plus);
            assert_eq!(trial.product, Sign::Plus);
        }
    }
}

#[test]
fn proper_subset_means_shrink_like_inverse_root() {
    let m = 100_000u64;
    let bound = 5.0 / (m as f64).sqrt();
    for n in 2..=6 {
        let record = sample_joint_x(n, m, 2).unwrap();
        for subset in proper_subsets(n) {
            let mean = series_mean(&subset_product_series(&record, &subset).unwrap());
            assert!(mean.abs() < bound, "n={n} {subset:?}: mean {mean}");
        }
    }
}

#[test]
fn support_is_uniform_by_chi_square() {
    for n in 1..=6 {
        let record = sample_joint_x(n, 100_000, 4).unwrap();
        let test = uniformity_chi_square(&record).unwrap();
        assert_eq!(test.off_support, 0);
        assert_eq!(test.degrees_of_freedom, (1usize << (n - 1)).saturating_sub(1));
        if n > 1 {
            assert!(test.p_value > 0.001, "n={n}: p={}", test.p_value);
        }
    }
}

#[test]
fn seeded_sampling_is_reproducible() {
    let a = sample_joint_x(5, 10_000, 77).unwrap();
    let b = sample_joint_x(5, 10_000, 77).unwrap();
    let c = sample_joint_x(5, 10_000, 78).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    // Trial t does not depend on how many trials were drawn.
    let short = sample_joint_x(5, 100, 77).unwrap();
    assert_eq!(&a.trials()[..100], short.trials());
}

#[test]
fn full_product_is_deterministic_and_subsets_random() {
    let record = sample_joint_x(4, 20_000, 1).unwrap();
    let full = bernoulli_test(&subset_product_series(&record, &[1, 2, 3, 4]).unwrap(), 0.01).unwrap();
    assert_eq!(full.verdict, Verdict::Deterministic);
    assert!(full.runs.is_none());
    let pair = bernoulli_test(&subset_product_series(&record, &[2, 4]).unwrap(), 0.01).unwrap();
    assert_eq!(pair.verdict, Verdict::ConsistentWithBernoulli);
}

#[test]
fn alternating_series_fails_runs_test() {
    let series: Vec<Sign> = (0..1_000).map(|i| Sign::from_bit(i % 2 == 0)).collect();
    let report = bernoulli_test(&series, 0.01).unwrap();
    assert!(report.frequency.p_value > 0.9);
    assert_eq!(report.verdict, Verdict::Rejected);
}

fn records() -> impl Strategy<Value = MeasurementRecord> {
    (1usize..=6, 1usize..=40).prop_flat_map(|(n, len)| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), n), len).prop_map(move |rows| {
            let trials = rows
                .into_iter()
                .enumerate()
                .map(|(t, bits)| Trial::new(t as u64, bits.into_iter().map(Sign::from_bit).collect()))
                .collect();
            MeasurementRecord::new(n, trials, None).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_bit_exact(record in records()) {
        let text = record.to_csv_string();
        let parsed = MeasurementRecord::read_csv(text.as_bytes()).unwrap();
        prop_assert_eq!(parsed.to_csv_string(), text);
        prop_assert_eq!(parsed.trials(), record.trials());
    }

    #[test]
    fn sampled_trials_keep_even_parity(n in 1usize..=16, seed in any::<u64>(), t in any::<u64>()) {
        let trial = ghz_holism::measurement::sample_trial(n, seed, t);
        prop_assert_eq!(trial.outcomes.len(), n);
        prop_assert_eq!(trial.pattern().count_ones() % 2, 0);
    }
}
