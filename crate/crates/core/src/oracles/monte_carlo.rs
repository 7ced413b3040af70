//! Monte Carlo reference prices.
//!
//! Path `i` draws from its own ChaCha8 stream `i` under a common seed, so
//! results do not depend on the thread count or on how many paths follow.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::pricing::VanillaPayoff;
use crate::sde_models::{GbmParams, SdeModel};
use crate::{Error, Result};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    /// Time steps over `[0, horizon]`.
    pub steps: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Barriers are checked every `monitoring_stride` steps (and at time 0).
    pub monitoring_stride: usize,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 || self.steps == 0 || self.monitoring_stride == 0 {
            return Err(Error::InvalidParameter(
                "paths, steps and monitoring stride must be positive".into(),
            ));
        }
        if !self.steps.is_multiple_of(self.monitoring_stride) {
            return Err(Error::InvalidParameter(format!(
                "{} steps are not divisible by the monitoring stride {}",
                self.steps, self.monitoring_stride
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Treatment of paths that cross zero under Euler stepping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroBoundary {
    #[default]
    None,
    /// Truncate at zero and stay there.
    Absorbing,
    /// Replace the state by its absolute value.
    Reflecting,
}

/// How paths are generated.
#[derive(Clone, Copy)]
pub enum PathModel<'a> {
    Euler {
        model: &'a dyn SdeModel,
        s0: f64,
        boundary: ZeroBoundary,
    },
    /// Exact lognormal transitions.
    ExactGbm(GbmParams),
}

impl PathModel<'_> {
    fn s0(&self) -> f64 {
        match self {
            PathModel::Euler { s0, .. } => *s0,
            PathModel::ExactGbm(p) => p.s0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Claim {
    European(VanillaPayoff),
    UpAndOut { payoff: VanillaPayoff, level: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
}

/// Simulates one path, calling `monitor` at every monitoring date with the
/// state, and returns the terminal state.
pub(crate) struct PathSampler<'a> {
    model: PathModel<'a>,
    cfg: McConfig,
}

impl<'a> PathSampler<'a> {
    pub fn new(model: PathModel<'a>, cfg: McConfig) -> Result<Self> {
        cfg.validate()?;
        if let PathModel::ExactGbm(p) = model {
            p.validate()?;
        }
        Ok(PathSampler { model, cfg })
    }

    pub fn run(&self, path: usize, mut monitor: impl FnMut(f64)) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(path as u64);
        let dt = self.cfg.horizon / self.cfg.steps as f64;
        let sq = dt.sqrt();
        let mut x = self.model.s0();
        monitor(x);
        for k in 1..=self.cfg.steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            x = match self.model {
                PathModel::ExactGbm(p) => {
                    x * ((p.r - 0.5 * p.sigma * p.sigma) * dt + p.sigma * sq * z).exp()
                }
                PathModel::Euler {
                    model, boundary, ..
                } => {
                    if boundary == ZeroBoundary::Absorbing && x == 0.0 {
                        0.0
                    } else {
                        let c = model.coefficients(x);
                        let y = x + c.a * dt + c.b * sq * z;
                        match boundary {
                            ZeroBoundary::None => y,
                            ZeroBoundary::Absorbing => y.max(0.0),
                            ZeroBoundary::Reflecting => y.abs(),
                        }
                    }
                }
            };
            if k % self.cfg.monitoring_stride == 0 {
                monitor(x);
            }
        }
        x
    }
}

/// Price several claims on one set of paths.
pub fn mc_prices(
    model: PathModel<'_>,
    claims: &[Claim],
    cfg: &McConfig,
    r: f64,
) -> Result<Vec<McEstimate>> {
    let sampler = PathSampler::new(model, *cfg)?;
    let n = claims.len();
    let levels: Vec<f64> = claims
        .iter()
        .map(|c| match c {
            Claim::European(_) => f64::INFINITY,
            Claim::UpAndOut { level, .. } => *level,
        })
        .collect();
    let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut sum = vec![0.0; n];
            let mut sum_sq = vec![0.0; n];
            for path in chunk * CHUNK..((chunk + 1) * CHUNK).min(cfg.paths) {
                let mut peak = f64::NEG_INFINITY;
                let terminal = sampler.run(path, |x| peak = peak.max(x));
                for (c, claim) in claims.iter().enumerate() {
                    if peak >= levels[c] {
                        continue;
                    }
                    let v = match claim {
                        Claim::European(h) | Claim::UpAndOut { payoff: h, .. } => h.value(terminal),
                    };
                    sum[c] += v;
                    sum_sq[c] += v * v;
                }
            }
            (sum, sum_sq)
        })
        .collect();
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    for (s, q) in chunks {
        for c in 0..n {
            sum[c] += s[c];
            sum_sq[c] += q[c];
        }
    }
    let df = (-r * cfg.horizon).exp();
    let paths = cfg.paths as f64;
    Ok(sum
        .iter()
        .zip(&sum_sq)
        .map(|(&s, &q)| {
            let mean = s / paths;
            let var = if cfg.paths > 1 {
                ((q - paths * mean * mean) / (paths - 1.0)).max(0.0)
            } else {
                0.0
            };
            McEstimate {
                price: df * mean,
                std_error: df * (var / paths).sqrt(),
            }
        })
        .collect())
}

pub fn mc_price(model: PathModel<'_>, claim: &Claim, cfg: &McConfig, r: f64) -> Result<McEstimate> {
    Ok(mc_prices(model, std::slice::from_ref(claim), cfg, r)?[0])
}
