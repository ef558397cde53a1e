//! Threshold-crossing treatment assignment with outcomes independent of the
//! covariates, so the true effect is zero.

use rand_core::RngCore;

use super::config::ScenarioConfig;
use super::variates::uniform;
use crate::propensity::{dot, Propensities};
use crate::sample::{ColumnNames, Observation, Sample, SampleError};

/// Draws one sample. Per observation the draw order is `Y0, Y1`, then the
/// Bernoulli covariate in the multivariate cases, then `X`, then `U`.
pub fn generate_dgp(config: &ScenarioConfig, rng: &mut impl RngCore) -> Result<(Sample, Propensities), SampleError> {
    let gamma = config.gamma0();
    let link = config.dist_u.link();
    let multi = config.case.is_multivariate();
    let mut obs = Vec::with_capacity(config.n);
    let mut p = Vec::with_capacity(config.n);
    let mut q = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let y0 = config.dist_outcomes.draw(rng);
        let y1 = config.dist_outcomes.draw(rng);
        let x = if multi {
            let b = if uniform(rng) < 0.3 { 1.0 } else { 0.0 };
            let c = config.dist_x.draw(rng);
            vec![1.0, b, c, c * c]
        } else {
            vec![1.0, config.dist_x.draw(rng)]
        };
        let u = config.dist_u.draw(rng);
        let index = dot(&x, &gamma);
        let treated = index - u >= 0.0;
        let (pi, qi) = link.cdf_pair(index);
        p.push(pi);
        q.push(qi);
        obs.push(Observation::new(if treated { y1 } else { y0 }, treated, x));
    }
    let names = ColumnNames {
        y: "y".into(),
        d: "d".into(),
        x: config.case.column_names().iter().map(|s| s.to_string()).collect(),
    };
    let sample = Sample::new(obs, names)?;
    let probs = Propensities::from_pairs(p, q).expect("true propensities have matching lengths");
    Ok((sample, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::config::Case;
    use crate::montecarlo::variates::substream;

    #[test]
    fn zero_slope_gives_half() {
        let mut c = ScenarioConfig::new("x", 0.0, 200);
        let (s, p) = generate_dgp(&c, &mut substream(1, 0)).unwrap();
        assert_eq!(s.n(), 200);
        assert!(p.p().iter().all(|&v| v == 0.5));
        c.dist_u = super::super::variates::Distribution::UnitLaplace;
        let (_, p) = generate_dgp(&c, &mut substream(1, 0)).unwrap();
        assert!(p.p().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn multivariate_design() {
        let mut c = ScenarioConfig::new("x", 1.0, 500);
        c.case = Case::Multivariate3;
        let (s, _) = generate_dgp(&c, &mut substream(2, 0)).unwrap();
        assert_eq!(s.k(), 4);
        for o in s.observations() {
            assert_eq!(o.x[0], 1.0);
            assert!(o.x[1] == 0.0 || o.x[1] == 1.0);
            assert_eq!(o.x[3], o.x[2] * o.x[2]);
        }
        let share = s.column(1).sum::<f64>() / 500.0;
        assert!((share - 0.3).abs() < 0.07, "{share}");
    }
}
