mod common;

use common::design;
use tailtrim::inference::{infer, t_statistic, variance_estimate};
use tailtrim::montecarlo::{substream, uniform, Distribution};
use tailtrim::propensity::Propensities;
use tailtrim::tail::estimate_tzo_with_bias;
use tailtrim::{fit_mle, LinkFamily, MleOptions, Sample, ZSeries};

fn logit_design(n: usize, seed: u64) -> (Vec<f64>, Vec<bool>, Vec<f64>) {
    let mut rng = substream(seed, 0);
    let (mut x, mut d, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let xi = Distribution::StdNormal.draw(&mut rng);
        let p = 1.0 / (1.0 + (-(0.1 + 1.2 * xi)).exp());
        let di = uniform(&mut rng) < p;
        let yi = Distribution::StdNormal.draw(&mut rng) + if di { 0.5 } else { 0.0 };
        x.push(xi);
        d.push(di);
        y.push(yi);
    }
    (x, d, y)
}

/// Solves `a v = b` for a 2x2 system by Cramer's rule.
fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        (b[0] * a[1][1] - a[0][1] * b[1]) / det,
        (a[0][0] * b[1] - b[0] * a[1][0]) / det,
    ]
}

#[test]
fn scale_matches_term_by_term_sum() {
    let (x, d, y) = logit_design(50, 501);
    let sample = design(&x, &d, &y);
    let fit = fit_mle(&sample, LinkFamily::Logit, &[0.0, 0.0], &MleOptions::default()).unwrap();
    let zs = ZSeries::new(&sample, &fit.propensities).unwrap();
    let (k, b_hat) = (2, 0.123);
    let got = variance_estimate(&sample, Some(&fit), &zs, k, b_hat).unwrap().v_hat_sq;

    let n = x.len();
    let nf = n as f64;
    let p: Vec<f64> = x
        .iter()
        .map(|&xi| 1.0 / (1.0 + (-(fit.gamma_hat[0] + fit.gamma_hat[1] * xi)).exp()))
        .collect();
    let z: Vec<f64> = (0..n)
        .map(|i| {
            let h = if d[i] { 1.0 / p[i] } else { -1.0 / (1.0 - p[i]) };
            h * y[i]
        })
        .collect();
    let zbar = z.iter().sum::<f64>() / nf;
    let zc: Vec<f64> = z.iter().map(|v| v - zbar).collect();
    let mut mags: Vec<f64> = zc.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let thr = mags[k - 1];
    let s: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let r = if d[i] { 1.0 } else { 0.0 } - p[i];
            [r, r * x[i]]
        })
        .collect();
    let mut j = [[0.0; 2]; 2];
    for si in &s {
        for a in 0..2 {
            for b in 0..2 {
                j[a][b] += si[a] * si[b] / nf;
            }
        }
    }
    let mut dvec = [0.0; 2];
    for i in 0..n {
        if zc[i].abs() < thr {
            dvec[0] -= s[i][0] * z[i] / nf;
            dvec[1] -= s[i][1] * z[i] / nf;
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        let w = solve2(j, s[i]);
        let ind = if zc[i].abs() < thr { zc[i] } else { 0.0 };
        let term = ind + (nf - k as f64) / nf * b_hat + dvec[0] * w[0] + dvec[1] * w[1];
        total += term * term;
    }
    let want = total / (nf - k as f64);
    assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
}

fn scaled(sample: &Sample, c: f64) -> Sample {
    let y: Vec<f64> = sample.y().map(|v| v * c).collect();
    let d: Vec<bool> = sample.observations().iter().map(|o| o.treated).collect();
    let x: Vec<Vec<f64>> = sample.observations().iter().map(|o| o.x.clone()).collect();
    Sample::from_columns(&y, &d, &x, &["const", "x"]).unwrap()
}

#[test]
fn t_statistic_is_scale_free_with_known_probabilities() {
    let (x, d, y) = logit_design(300, 502);
    let base = design(&x, &d, &y);
    let probs = Propensities::from_index(LinkFamily::Logit, &base, &[0.1, 1.2]);
    let stat = |c: f64| {
        let s = scaled(&base, c);
        let zs = ZSeries::new(&s, &probs).unwrap();
        let (rep, bias) = estimate_tzo_with_bias(&zs, 2, (2.0, 16.0)).unwrap();
        let v = variance_estimate(&s, None, &zs, 2, bias.value).unwrap().v_hat_sq;
        (rep.theta_hat, v, t_statistic(rep.theta_hat, 0.0, v, s.n()).unwrap())
    };
    let (t1, v1, s1) = stat(1.0);
    for c in [0.01, 3.5, 250.0] {
        let (tc, vc, sc) = stat(c);
        assert!((tc - c * t1).abs() <= 1e-10 * (c * t1).abs());
        assert!((vc - c * c * v1).abs() <= 1e-10 * c * c * v1);
        assert!((sc - s1).abs() <= 1e-9 * s1.abs().max(1.0));
    }
}

#[test]
fn scale_ignores_observation_order() {
    let (x, d, y) = logit_design(80, 503);
    let sample = design(&x, &d, &y);
    let fit = fit_mle(&sample, LinkFamily::Logit, &[0.0, 0.0], &MleOptions::default()).unwrap();
    let zs = ZSeries::new(&sample, &fit.propensities).unwrap();
    let a = variance_estimate(&sample, Some(&fit), &zs, 2, 0.05).unwrap().v_hat_sq;

    let order: Vec<usize> = (0..x.len()).rev().collect();
    let px: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let pd: Vec<bool> = order.iter().map(|&i| d[i]).collect();
    let py: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let perm = design(&px, &pd, &py);
    let pfit = fit_mle(&perm, LinkFamily::Logit, &[0.0, 0.0], &MleOptions::default()).unwrap();
    let pzs = ZSeries::new(&perm, &pfit.propensities).unwrap();
    let b = variance_estimate(&perm, Some(&pfit), &pzs, 2, 0.05).unwrap().v_hat_sq;
    assert!((a - b).abs() <= 1e-10 * a, "{a} vs {b}");
}

#[test]
fn report_is_consistent() {
    let (x, d, y) = logit_design(200, 504);
    let sample = design(&x, &d, &y);
    let fit = fit_mle(&sample, LinkFamily::Logit, &[0.0, 0.0], &MleOptions::default()).unwrap();
    let zs = ZSeries::new(&sample, &fit.propensities).unwrap();
    let (rep, bias) = estimate_tzo_with_bias(&zs, 1, (2.0, 16.0)).unwrap();
    let r = infer(&sample, Some(&fit), &zs, 1, bias.value, rep.theta_hat, 0.0, 0.95).unwrap();
    assert!(r.v_hat_sq >= 0.0);
    assert!((r.std_error - (r.v_hat_sq / 200.0).sqrt()).abs() < 1e-15);
    assert!(((r.ci.0 + r.ci.1) / 2.0 - r.theta_hat).abs() < 1e-12);
    assert_eq!(r.d_hat_vec.len(), 2);
}
