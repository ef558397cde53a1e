mod common;

use common::{design, grid_logit, logit_datasets};
use tailtrim::{fit_mle, LinkFamily, MleOptions};

#[test]
fn newton_matches_grid_maximizer() {
    for (j, (x, d)) in logit_datasets(10).iter().enumerate() {
        let y = vec![0.0; x.len()];
        let sample = design(x, d, &y);
        let fit = fit_mle(&sample, LinkFamily::Logit, &[0.0, 0.0], &MleOptions::default()).unwrap();
        assert!(fit.converged, "dataset {j}");
        let (a, b) = grid_logit(x, d);
        assert!((fit.gamma_hat[0] - a).abs() <= 2e-3, "dataset {j}: {:?} vs ({a}, {b})", fit.gamma_hat);
        assert!((fit.gamma_hat[1] - b).abs() <= 2e-3, "dataset {j}: {:?} vs ({a}, {b})", fit.gamma_hat);

        // logit score (d - F(x'g)) x, averaged
        let mut mean = [0.0; 2];
        for (&xi, &di) in x.iter().zip(d) {
            let f = 1.0 / (1.0 + (-(fit.gamma_hat[0] + fit.gamma_hat[1] * xi)).exp());
            let r = if di { 1.0 } else { 0.0 } - f;
            mean[0] += r / x.len() as f64;
            mean[1] += r * xi / x.len() as f64;
        }
        assert!(mean[0].abs().max(mean[1].abs()) <= 1e-8, "dataset {j}: {mean:?}");
    }
}

#[test]
fn probit_and_laplace_fits_are_stationary() {
    for family in [LinkFamily::Probit, LinkFamily::Laplace] {
        for (x, d) in logit_datasets(3) {
            let y = vec![0.0; x.len()];
            let sample = design(&x, &d, &y);
            let fit = fit_mle(&sample, family, &[0.0, 0.0], &MleOptions::default()).unwrap();
            assert!(fit.converged);
            // no neighbouring point on a small stencil does better
            let base = tailtrim::propensity::log_likelihood(&sample, family, &fit.gamma_hat);
            for (da, db) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
                let g = [fit.gamma_hat[0] + da, fit.gamma_hat[1] + db];
                assert!(tailtrim::propensity::log_likelihood(&sample, family, &g) <= base + 1e-12);
            }
        }
    }
}
