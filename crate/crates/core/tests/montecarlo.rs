use tailtrim::montecarlo::{
    ks_normality_ratio, run_replication, run_study, substream, summarize, uniform, Distribution, ScenarioConfig,
};
use tailtrim::special::normal_quantile;

#[test]
fn ks_ratio_of_point_mass() {
    let r = ks_normality_ratio(&vec![0.0; 10_000], 1.0).unwrap();
    assert!((r - 0.5 / (1.358 / 100.0)).abs() < 1e-9);
    assert!((r - 36.82).abs() < 0.01);
}

#[test]
fn ks_ratio_of_exact_quantiles() {
    let r = 2000;
    let q: Vec<f64> = (1..=r).map(|i| normal_quantile((i as f64 - 0.5) / r as f64)).collect();
    let ratio = ks_normality_ratio(&q, 1.0).unwrap();
    let want = 0.5 / r as f64 / (1.358 / (r as f64).sqrt());
    assert!((ratio - want).abs() < 1e-6, "{ratio} vs {want}");
}

#[test]
fn ks_ratio_is_calibrated_under_normality() {
    let (trials, r, s) = (1000, 200, 2.5);
    let mut below = 0;
    for t in 0..trials {
        let mut rng = substream(901, t);
        let draws: Vec<f64> = (0..r).map(|_| s * Distribution::StdNormal.draw(&mut rng)).collect();
        if ks_normality_ratio(&draws, s).unwrap() < 1.0 {
            below += 1;
        }
    }
    assert!(below as f64 / trials as f64 >= 0.95, "{below}/{trials}");
}

#[test]
fn laplace_round_trip_and_variance() {
    let lap = Distribution::UnitLaplace;
    for i in 0..=10_000 {
        let u = 1e-9 + (1.0 - 2e-9) * i as f64 / 10_000.0;
        assert!((lap.cdf(lap.quantile(u)) - u).abs() <= 1e-12, "u = {u}");
    }
    let mut rng = substream(902, 0);
    let n = 1_000_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let v = lap.draw(&mut rng);
        s1 += v;
        s2 += v * v;
    }
    let mean = s1 / n as f64;
    let var = s2 / n as f64 - mean * mean;
    assert!((var - 1.0).abs() <= 0.01, "variance {var}");
}

#[test]
fn uniforms_are_strictly_inside_unit_interval() {
    let mut rng = substream(903, 4);
    for _ in 0..100_000 {
        let u = uniform(&mut rng);
        assert!(u > 0.0 && u < 1.0);
    }
}

#[test]
fn symmetric_designs_center_every_estimator() {
    for (beta, dist) in [(1.0, Distribution::StdNormal), (2.0, Distribution::UnitLaplace)] {
        let mut c = ScenarioConfig::new("sym", beta, 100);
        c.dist_outcomes = dist;
        c.seed = 904;
        c.replications = 2000;
        let out = run_study(&c, None).unwrap();
        let s = summarize(&c, &out).unwrap();
        let r = s.successful_reps as f64;
        for row in &s.rows {
            assert!(
                row.mean.abs() <= 4.0 * row.rmse / r.sqrt(),
                "beta {beta} {}: mean {} rmse {}",
                row.estimator,
                row.mean,
                row.rmse
            );
        }
    }
}

#[test]
fn summaries_do_not_depend_on_thread_count() {
    let mut c = ScenarioConfig::new("det", 1.0, 100);
    c.seed = 905;
    c.replications = 300;
    let a = summarize(&c, &run_study(&c, Some(1)).unwrap()).unwrap();
    let b = summarize(&c, &run_study(&c, Some(3)).unwrap()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(run_replication(&c, 17), run_replication(&c, 17));
}

#[test]
fn trim_share_of_tz_is_one_percent() {
    let mut c = ScenarioConfig::new("trim", 0.25, 100);
    c.seed = 906;
    c.replications = 500;
    let s = summarize(&c, &run_study(&c, None).unwrap()).unwrap();
    let tz = s.rows.iter().find(|r| r.estimator == "TT(Z)").unwrap();
    assert!((tz.trim_pct - 1.0).abs() < 1e-12);
}

#[test]
fn across_replication_interval_covers_at_nominal_rate() {
    let mut c = ScenarioConfig::new("cover", 0.25, 100);
    c.seed = 907;
    c.replications = 10_000;
    c.estimators = vec![tailtrim::EstimatorSpec::TrimZCorrected];
    let s = summarize(&c, &run_study(&c, None).unwrap()).unwrap();
    let coverage = 1.0 - s.rows[0].rej05;
    assert!((coverage - 0.95).abs() <= 0.01, "coverage {coverage}");
}

// The plug-in scale is computed from the trimmed sample alone and runs a
// little small at n = 100 (coverage near .93); it settles at the nominal
// rate as n grows.
#[test]
fn plugin_interval_covers_at_nominal_rate_in_large_samples() {
    let mut c = ScenarioConfig::new("cover", 0.25, 1000);
    c.seed = 907;
    c.replications = 10_000;
    c.estimators = vec![tailtrim::EstimatorSpec::TrimZCorrected];
    let s = summarize(&c, &run_study(&c, None).unwrap()).unwrap();
    let rej = s.plugin_rejections.expect("plug-in statistic recorded");
    let coverage = 1.0 - rej[1];
    assert!((coverage - 0.95).abs() <= 0.01, "coverage {coverage}");
}
