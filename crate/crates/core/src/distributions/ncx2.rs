use super::normal::{std_normal_cdf, std_normal_cdf_pair, std_normal_pdf};
use super::{PartialMoments, ScalarDistribution, Support, TAIL_CUTOFF_SD};
use crate::{Error, Result};

/// Parameters of a noncentral chi-squared law with one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ncx2Params {
    pub lambda: f64,
}

/// `X = (Z + sqrt(lambda))^2` with `Z` standard normal.
///
/// All functions are expressed through `phi` and `Phi` at
/// `x± = ±sqrt(x) - sqrt(lambda)`. The boundary conventions are
/// `f(0) = F(0) = M1(0) = 0` and every function vanishes for `x < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralChiSquared1 {
    lambda: f64,
    shift: f64,
}

pub fn ncx2_1_funcs(params: Ncx2Params) -> Result<NoncentralChiSquared1> {
    NoncentralChiSquared1::new(params.lambda)
}

impl NoncentralChiSquared1 {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noncentrality must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(NoncentralChiSquared1 {
            lambda,
            shift: lambda.sqrt(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mean(&self) -> f64 {
        1.0 + self.lambda
    }

    pub fn variance(&self) -> f64 {
        2.0 * (1.0 + 2.0 * self.lambda)
    }
}

impl ScalarDistribution for NoncentralChiSquared1 {
    fn support(&self) -> Support {
        Support::POSITIVE
    }

    fn eval(&self, x: f64) -> PartialMoments {
        let mean = self.mean();
        if x <= 0.0 {
            return PartialMoments {
                pdf: 0.0,
                cdf: 0.0,
                ccdf: 1.0,
                m1: 0.0,
                um1: mean,
            };
        }
        if x == f64::INFINITY {
            return PartialMoments {
                pdf: 0.0,
                cdf: 1.0,
                ccdf: 0.0,
                m1: mean,
                um1: 0.0,
            };
        }
        let root = x.sqrt();
        let xp = root - self.shift;
        let xm = -root - self.shift;
        let (pp, pm) = (std_normal_pdf(xp), std_normal_pdf(xm));
        let (below, above) = std_normal_cdf_pair(xp);
        let lower_tail = std_normal_cdf(xm);
        let cdf = below - lower_tail;
        let ccdf = above + lower_tail;
        let tail = pp * xm - pm * xp;
        PartialMoments {
            pdf: (pp + pm) / (2.0 * root),
            cdf,
            ccdf,
            m1: mean * cdf + tail,
            um1: mean * ccdf - tail,
        }
    }

    fn m2(&self, x: f64) -> Option<f64> {
        let mu = self.shift;
        if x <= 0.0 {
            return Some(0.0);
        }
        if x == f64::INFINITY {
            let mean = self.mean();
            return Some(self.variance() + mean * mean);
        }
        // E[(W + mu)^4 ; W in (a, b)] through truncated normal moments
        let root = x.sqrt();
        let (a, b) = (-root - mu, root - mu);
        let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));
        let i0 = std_normal_cdf(b) - std_normal_cdf(a);
        let i1 = pa - pb;
        let i2 = i0 + a * pa - b * pb;
        let i3 = 2.0 * i1 + a * a * pa - b * b * pb;
        let i4 = 3.0 * i2 + a * a * a * pa - b * b * b * pb;
        let mu2 = mu * mu;
        Some(i4 + 4.0 * mu * i3 + 6.0 * mu2 * i2 + 4.0 * mu2 * mu * i1 + mu2 * mu2 * i0)
    }

    fn effective_range(&self) -> (f64, f64) {
        let lo = (self.shift - TAIL_CUTOFF_SD).max(0.0);
        let hi = self.shift + TAIL_CUTOFF_SD;
        (lo * lo, hi * hi)
    }
}
