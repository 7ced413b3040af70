//! Scalar diffusions `dX = a(X) dt + b(X) dW` with the coefficient
//! derivatives needed by the higher-order schemes.

use serde::{Deserialize, Serialize};

use crate::distributions::{
    std_normal_cdf, std_normal_pdf, PartialMoments, ScalarDistribution, Support,
};
use crate::{Error, Result};

/// Drift `a`, diffusion `b` and their first two derivatives at one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coefficients {
    pub a: f64,
    pub da: f64,
    pub d2a: f64,
    pub b: f64,
    pub db: f64,
    pub d2b: f64,
}

pub trait SdeModel: Send + Sync {
    /// Open state domain on which the coefficients are defined.
    fn domain(&self) -> Support;

    /// Coefficients at `x`; callers guarantee `x` lies in the domain.
    fn coefficients(&self, x: f64) -> Coefficients;

    fn try_coefficients(&self, x: f64) -> Result<Coefficients> {
        let d = self.domain();
        if d.interior(x) {
            Ok(self.coefficients(x))
        } else {
            Err(Error::OutsideDomain {
                x,
                lo: d.lo,
                hi: d.hi,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub s0: f64,
    pub r: f64,
    pub sigma: f64,
}

impl GbmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0) || !(self.sigma > 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "GBM requires s0 > 0, sigma > 0 and finite r, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Geometric Brownian motion `dS = r S dt + sigma S dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gbm {
    params: GbmParams,
}

pub fn gbm_model(p: GbmParams) -> Result<Gbm> {
    p.validate()?;
    Ok(Gbm { params: p })
}

impl Gbm {
    pub fn params(&self) -> &GbmParams {
        &self.params
    }
}

impl SdeModel for Gbm {
    /// The coefficients are linear, so the discretized chain may visit
    /// negative states without leaving the model's domain.
    fn domain(&self) -> Support {
        Support::REAL_LINE
    }

    fn coefficients(&self, x: f64) -> Coefficients {
        let GbmParams { r, sigma, .. } = self.params;
        Coefficients {
            a: r * x,
            da: r,
            d2a: 0.0,
            b: sigma * x,
            db: sigma,
            d2b: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CevParams {
    pub s0: f64,
    pub r: f64,
    pub alpha: f64,
    /// Instantaneous lognormal volatility at `s0`.
    pub sigma_ln: f64,
}

impl CevParams {
    /// `sigma = sigma_ln * s0^(1 - alpha)`, so that `b(s0) = sigma_ln * s0`.
    pub fn sigma(&self) -> f64 {
        self.sigma_ln * self.s0.powf(1.0 - self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0)
            || !(self.sigma_ln > 0.0)
            || !(self.alpha > 0.0 && self.alpha < 1.0)
            || !self.r.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "CEV requires s0 > 0, sigma_ln > 0, 0 < alpha < 1 and finite r, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Smallest state at which CEV derivatives are evaluated.
const CEV_STATE_FLOOR: f64 = 1e-12;

/// Constant elasticity of variance `dS = r S dt + sigma S^alpha dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cev {
    params: CevParams,
    sigma: f64,
}

pub fn cev_model(p: CevParams) -> Result<Cev> {
    p.validate()?;
    Ok(Cev {
        params: p,
        sigma: p.sigma(),
    })
}

impl Cev {
    pub fn params(&self) -> &CevParams {
        &self.params
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl SdeModel for Cev {
    fn domain(&self) -> Support {
        Support::new(0.0, f64::INFINITY)
    }

    fn coefficients(&self, x: f64) -> Coefficients {
        let x = x.max(CEV_STATE_FLOOR);
        let alpha = self.params.alpha;
        let b = self.sigma * x.powf(alpha);
        Coefficients {
            a: self.params.r * x,
            da: self.params.r,
            d2a: 0.0,
            b,
            db: alpha * b / x,
            d2b: alpha * (alpha - 1.0) * b / (x * x),
        }
    }
}

/// Lognormal law of `S_t` under GBM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormal {
    /// Mean of `ln S_t`.
    mu: f64,
    /// Standard deviation of `ln S_t`.
    vol: f64,
}

pub fn gbm_exact_marginal(p: GbmParams, t: f64) -> Result<LogNormal> {
    p.validate()?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time must be positive, got {t}"
        )));
    }
    Ok(LogNormal {
        mu: p.s0.ln() + (p.r - 0.5 * p.sigma * p.sigma) * t,
        vol: p.sigma * t.sqrt(),
    })
}

impl LogNormal {
    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.vol * self.vol).exp()
    }

    pub fn median(&self) -> f64 {
        self.mu.exp()
    }
}

impl ScalarDistribution for LogNormal {
    fn support(&self) -> Support {
        Support::POSITIVE
    }

    fn eval(&self, x: f64) -> PartialMoments {
        let mean = self.mean();
        if x <= 0.0 {
            return PartialMoments {
                ccdf: 1.0,
                um1: mean,
                ..Default::default()
            };
        }
        if x == f64::INFINITY {
            return PartialMoments {
                cdf: 1.0,
                m1: mean,
                ..Default::default()
            };
        }
        let d = (x.ln() - self.mu) / self.vol;
        PartialMoments {
            pdf: std_normal_pdf(d) / (x * self.vol),
            cdf: std_normal_cdf(d),
            ccdf: std_normal_cdf(-d),
            m1: mean * std_normal_cdf(d - self.vol),
            um1: mean * std_normal_cdf(self.vol - d),
        }
    }

    fn m2(&self, x: f64) -> Option<f64> {
        let second = (2.0 * self.mu + 2.0 * self.vol * self.vol).exp();
        if x <= 0.0 {
            return Some(0.0);
        }
        if x == f64::INFINITY {
            return Some(second);
        }
        let d = (x.ln() - self.mu) / self.vol;
        Some(second * std_normal_cdf(d - 2.0 * self.vol))
    }
}
