#![allow(dead_code)]

use tailtrim::montecarlo::{substream, uniform, Distribution};
use tailtrim::Sample;

/// Draws from a two-sided Pareto law with `P(Z > c) = 0.5 c^{-kr}` and
/// `P(Z < -c) = 0.5 c^{-kl}` for `c >= 1`.
pub fn two_sided_pareto(seed: u64, stream: u64, n: usize, kl: f64, kr: f64) -> Vec<f64> {
    let mut rng = substream(seed, stream);
    (0..n)
        .map(|_| {
            let right = uniform(&mut rng) < 0.5;
            let u = uniform(&mut rng);
            if right {
                u.powf(-1.0 / kr)
            } else {
                -u.powf(-1.0 / kl)
            }
        })
        .collect()
}

/// The `m + 1` largest of the strictly positive values, descending.
pub fn top_positive(values: &[f64], m: usize) -> Vec<f64> {
    let mut pos: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    let keep = (m + 1).min(pos.len());
    pos.select_nth_unstable_by(keep - 1, |a, b| b.total_cmp(a));
    pos.truncate(keep);
    pos.sort_by(|a, b| b.total_cmp(a));
    pos
}

/// Literal logit log-likelihood with an intercept and one slope.
pub fn logit_loglik(x: &[f64], d: &[bool], a: f64, b: f64) -> f64 {
    x.iter()
        .zip(d)
        .map(|(&x, &d)| {
            let t = a + b * x;
            // log F(t) = -log(1 + e^{-t}),  log(1 - F(t)) = -log(1 + e^{t})
            if d {
                -(-t).exp().ln_1p()
            } else {
                -t.exp().ln_1p()
            }
        })
        .sum()
}

/// Grid maximizer of the logit likelihood: a coarse pass then a 1e-3 pass
/// around the coarse optimum.
pub fn grid_logit(x: &[f64], d: &[bool]) -> (f64, f64) {
    let search = |ca: f64, cb: f64, half: f64, step: f64| {
        let steps = (half / step).round() as i64;
        let mut best = (f64::NEG_INFINITY, ca, cb);
        for i in -steps..=steps {
            let a = ca + i as f64 * step;
            for j in -steps..=steps {
                let b = cb + j as f64 * step;
                let l = logit_loglik(x, d, a, b);
                if l > best.0 {
                    best = (l, a, b);
                }
            }
        }
        (best.1, best.2)
    };
    let (a, b) = search(0.0, 0.0, 6.0, 0.02);
    search(a, b, 0.1, 1e-3)
}

/// Deterministic 40-observation logit datasets that are not separable.
pub fn logit_datasets(count: usize) -> Vec<(Vec<f64>, Vec<bool>)> {
    let mut out = Vec::new();
    let mut stream = 0;
    while out.len() < count {
        let mut rng = substream(4040, stream);
        stream += 1;
        let mut x = Vec::with_capacity(40);
        let mut d = Vec::with_capacity(40);
        for _ in 0..40 {
            let xi = Distribution::StdNormal.draw(&mut rng);
            let p = 1.0 / (1.0 + (-(0.2 + 0.9 * xi)).exp());
            x.push(xi);
            d.push(uniform(&mut rng) < p);
        }
        if !separable(&x, &d) {
            out.push((x, d));
        }
    }
    out
}

fn separable(x: &[f64], d: &[bool]) -> bool {
    let max_c = x.iter().zip(d).filter(|p| !*p.1).map(|p| *p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_t = x.iter().zip(d).filter(|p| *p.1).map(|p| *p.0).fold(f64::INFINITY, f64::min);
    let max_t = x.iter().zip(d).filter(|p| *p.1).map(|p| *p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_c = x.iter().zip(d).filter(|p| !*p.1).map(|p| *p.0).fold(f64::INFINITY, f64::min);
    max_c < min_t || max_t < min_c || d.iter().all(|&v| v) || d.iter().all(|&v| !v)
}

pub fn design(x: &[f64], d: &[bool], y: &[f64]) -> Sample {
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v]).collect();
    Sample::from_columns(y, d, &rows, &["const", "x"]).unwrap()
}

/// Monte Carlo truncated tail mass `(n/(n-k)) E[Z 1{Z beyond its tail's k/n quantile}]`
/// for the two-sided Pareto law with unit-half scales. Returns (estimate,
/// standard error).
pub fn truncated_mass_mc(n: usize, k: usize, kl: f64, kr: f64, draws: usize, seed: u64) -> (f64, f64) {
    let frac = k as f64 / n as f64;
    let c_right = (0.5 / frac).powf(1.0 / kr);
    let c_left = (0.5 / frac).powf(1.0 / kl);
    let scale = n as f64 / (n - k) as f64;
    let mut rng = substream(seed, 0);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let right = uniform(&mut rng) < 0.5;
        let u = uniform(&mut rng);
        let v = if right {
            let z = u.powf(-1.0 / kr);
            if z >= c_right {
                z
            } else {
                0.0
            }
        } else {
            let z = -u.powf(-1.0 / kl);
            if z <= -c_left {
                z
            } else {
                0.0
            }
        } * scale;
        s1 += v;
        s2 += v * v;
    }
    let m = s1 / draws as f64;
    let var = s2 / draws as f64 - m * m;
    (m, (var / draws as f64).sqrt())
}

/// Composite Simpson value of `(n/(n-k)) [int_0^{k/n} Q_r(u) du - int_0^{k/n} Q_l(u) du]`
/// with `Q(u) = (0.5/u)^{1/kappa}`, after substituting `u = (k/n) t^4`.
pub fn truncated_mass_quadrature(n: usize, k: usize, kl: f64, kr: f64) -> f64 {
    let frac = k as f64 / n as f64;
    let integral = |kappa: f64| {
        let f = |t: f64| {
            if t == 0.0 {
                return 0.0;
            }
            let u = frac * t.powi(4);
            (0.5 / u).powf(1.0 / kappa) * frac * 4.0 * t.powi(3)
        };
        let panels = 20_000;
        let h = 1.0 / panels as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..panels {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    n as f64 / (n - k) as f64 * (integral(kr) - integral(kl))
}
