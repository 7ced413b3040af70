use rayon::prelude::*;

use super::monte_carlo::{McConfig, PathModel, PathSampler};
use crate::distributions::{PartialMoments, ScalarDistribution, Support};
use crate::{Error, Result};

/// Step-function law of a sample, with prefix sums for partial moments.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter(
                "an empirical law needs at least one sample".into(),
            ));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidParameter("NaN sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(samples.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &x in &samples {
            acc += x;
            prefix.push(acc);
        }
        Ok(EmpiricalCdf {
            sorted: samples,
            prefix,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Kolmogorov-Smirnov distance to a continuous distribution function.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

impl ScalarDistribution for EmpiricalCdf {
    fn support(&self) -> Support {
        Support::REAL_LINE
    }

    fn eval(&self, x: f64) -> PartialMoments {
        let n = self.sorted.len();
        let k = self.sorted.partition_point(|&s| s <= x);
        let nf = n as f64;
        PartialMoments {
            pdf: 0.0,
            cdf: k as f64 / nf,
            ccdf: (n - k) as f64 / nf,
            m1: self.prefix[k] / nf,
            um1: (self.prefix[n] - self.prefix[k]) / nf,
        }
    }
}

/// Terminal values of `cfg.paths` simulated paths over `[0, cfg.horizon]`.
pub fn empirical_cdf(model: PathModel<'_>, cfg: &McConfig) -> Result<EmpiricalCdf> {
    let sampler = PathSampler::new(model, *cfg)?;
    let samples: Vec<f64> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| sampler.run(i, |_| {}))
        .collect();
    EmpiricalCdf::from_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde_models::{gbm_exact_marginal, GbmParams};

    const GBM: GbmParams = GbmParams {
        s0: 100.0,
        r: 0.05,
        sigma: 0.3,
    };

    #[test]
    fn rejects_empty_samples() {
        assert!(EmpiricalCdf::from_samples(vec![]).is_err());
    }

    #[test]
    fn step_function_values() {
        let e = EmpiricalCdf::from_samples(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(e.cdf(0.5), 0.0);
        assert_eq!(e.cdf(2.0), 0.75);
        assert_eq!(e.cdf(3.0), 1.0);
        assert_eq!(e.m1(2.0), 5.0 / 4.0);
        assert_eq!(e.eval(2.0).um1, 3.0 / 4.0);
    }

    #[test]
    fn gbm_samples_pass_kolmogorov_smirnov() {
        let n = 1_000_000;
        let cfg = McConfig {
            paths: n,
            steps: 1,
            horizon: 1.0,
            seed: 17,
            monitoring_stride: 1,
        };
        let e = empirical_cdf(PathModel::ExactGbm(GBM), &cfg).unwrap();
        let exact = gbm_exact_marginal(GBM, 1.0).unwrap();
        let d = e.ks_distance(|x| exact.cdf(x));
        assert!(d < 1.63 / (n as f64).sqrt(), "{d}");
        let again = empirical_cdf(PathModel::ExactGbm(GBM), &cfg).unwrap();
        assert_eq!(e, again);
    }
}
