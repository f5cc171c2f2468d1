use approx::assert_abs_diff_eq;
use ptrdp_core::simlab::{generate, run_coverage, CoverageConfig, DistributionSpec, EstimatorKind, EstimatorSetup};
use ptrdp_core::{
    block_means, compute_c, dp_median, dp_mom, dp_mom_density, empirical_median, mom_point_estimate, CheckMode, Confidence,
    Error, InjectedNoise, MedianProfile, MomConfig, MomOptions, MomentProfile, NoiseSource, PrivacyBudget, ReleaseOutcome,
    Sample,
};

fn setup() -> (PrivacyBudget, Confidence) {
    (PrivacyBudget::new(1.0, 0.05).unwrap(), Confidence::new(0.05).unwrap())
}

fn normal_sample(n: usize, seed: u64) -> Sample {
    generate(&DistributionSpec::normal(0.0, 1.0).unwrap(), n, &mut NoiseSource::new(seed, 0)).unwrap()
}

#[test]
fn median_payload_is_median_plus_scaled_second_draw() {
    let (budget, conf) = setup();
    let s = normal_sample(10_000, 1);
    let profile = MedianProfile::normal(1.0).unwrap();
    let mut noise = InjectedNoise::new([0.0, 0.5]);
    let r = dp_median(&s, profile, budget, conf, &mut noise).unwrap();
    assert_eq!(noise.remaining(), 0);
    let a = (2.0 * (1.25f64 / 0.05).ln()).sqrt();
    let expected = empirical_median(&s).unwrap() + r.eta_used * a * 0.5;
    assert_abs_diff_eq!(r.outcome.value().unwrap(), expected, epsilon = 1e-12);
    assert!(r.all_checks_pass());
    assert_abs_diff_eq!(r.c_used, compute_c(budget, conf), epsilon = 1e-12);
}

#[test]
fn very_negative_test_noise_refuses_and_consumes_both_draws() {
    let (budget, conf) = setup();
    let s = normal_sample(10_000, 2);
    let mut noise = InjectedNoise::new([-1e6, 3.0]);
    let r = dp_median(&s, MedianProfile::normal(1.0).unwrap(), budget, conf, &mut noise).unwrap();
    assert_eq!(r.outcome, ReleaseOutcome::NoReply);
    assert_eq!(noise.remaining(), 0);
    assert_eq!(serde_json::to_value(r.outcome).unwrap(), "no_reply");
}

#[test]
fn mom_with_zero_payload_noise_is_the_point_estimate() {
    let (budget, conf) = setup();
    let n = 65_536;
    let s = normal_sample(n, 3);
    let profile = MomentProfile::new(0.0, 1.0, 1.17).unwrap();
    let point = mom_point_estimate(&s, &MomConfig::new(256, n).unwrap()).unwrap();
    let opts = MomOptions::default();
    for r in [
        dp_mom(&s, profile, 256, budget, conf, &opts, &mut InjectedNoise::new([0.0, 0.0])).unwrap(),
        dp_mom_density(&s, profile, 256, budget, conf, &opts, &mut InjectedNoise::new([0.0, 0.0])).unwrap(),
    ] {
        assert_eq!(r.outcome.value(), Some(point));
    }
    let means = block_means(&s, &MomConfig::new(256, n).unwrap()).unwrap();
    assert_eq!(means.len(), 256);
    // Equal blocks: the grand mean of the block means is the sample mean.
    let grand = means.iter().sum::<f64>() / 256.0;
    let mean = s.values().iter().sum::<f64>() / n as f64;
    assert_abs_diff_eq!(grand, mean, epsilon = 1e-12);
}

#[test]
fn seeded_runs_repeat_and_streams_differ() {
    let (budget, conf) = setup();
    let s = normal_sample(5000, 4);
    let p = MedianProfile::normal(1.0).unwrap();
    let run = |stream| dp_median(&s, p, budget, conf, &mut NoiseSource::new(9, stream)).unwrap().outcome;
    assert_eq!(run(0), run(0));
    assert_ne!(run(0), run(1));
}

#[test]
fn preconditions_fail_loudly() {
    let (budget, conf) = setup();
    let e = dp_median(&normal_sample(100, 5), MedianProfile::normal(1.0).unwrap(), budget, conf, &mut NoiseSource::new(0, 0))
        .unwrap_err();
    assert!(e.is_precondition());
    assert!(matches!(e, Error::SampleSizeBelowMedianThreshold { required: 236, .. }));

    let profile = MomentProfile::new(0.0, 1.0, 1.17).unwrap();
    let s = normal_sample(4096, 6);
    let too_few = dp_mom(&s, profile, 64, budget, conf, &MomOptions::default(), &mut NoiseSource::new(0, 0)).unwrap_err();
    assert!(too_few.is_precondition());
    let uneven = dp_mom_density(&s, profile, 150, budget, conf, &MomOptions::default(), &mut NoiseSource::new(0, 0)).unwrap_err();
    assert!(matches!(uneven, Error::NonIntegerBlockSize { remainder: 46, .. }));

    // The moment condition can be downgraded to a report entry; block counts cannot.
    let heavy = MomentProfile::new(0.0, 1.0, 3.0).unwrap();
    let opts = MomOptions {
        moment_condition: CheckMode::Report,
        ..MomOptions::default()
    };
    assert!(dp_mom(&s, heavy, 150, budget, conf, &MomOptions::default(), &mut NoiseSource::new(0, 0)).is_err());
    let r = dp_mom(&s, heavy, 150, budget, conf, &opts, &mut NoiseSource::new(0, 0)).unwrap();
    assert!(!r.all_checks_pass());
    assert!(dp_mom(&s, heavy, 64, budget, conf, &opts, &mut NoiseSource::new(0, 0)).is_err());
}

#[test]
fn coverage_report_serializes_with_stable_keys() {
    let (budget, conf) = setup();
    let spec = DistributionSpec::normal(0.0, 1.0).unwrap();
    let setup = EstimatorSetup::new(EstimatorKind::Median, None, budget, conf);
    let report = run_coverage(&spec, &CoverageConfig::new(setup, 2000, 50, 1)).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    for key in ["estimator", "distribution", "n", "K", "eta", "C", "theoretical_bound", "coverage", "noreply", "error_quantiles"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("x,quantile_or_rate,lower,upper\n"));
}
