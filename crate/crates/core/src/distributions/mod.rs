//! Density, distribution and lower partial expectation functions.
//!
//! Every quantization routine in this crate consumes a law through the
//! triple `(f, F, M1)` where `M1(x) = E[X 1{X < x}]`. The second lower
//! partial expectation `M2` is only needed for distortion diagnostics.
//!
//! Evaluations also carry the complementary quantities `1 - F` and
//! `E[X 1{X >= x}]` so region differences in the upper tail can be taken
//! without cancellation.

mod ncx2;
mod normal;
mod reflect;

pub use ncx2::{ncx2_1_funcs, Ncx2Params, NoncentralChiSquared1};
pub use normal::{std_normal_cdf, std_normal_funcs, std_normal_pdf, StdNormal};
pub use reflect::{reflect_funcs, Reflected};

use serde::{Deserialize, Serialize};

/// Number of standard deviations of a Gaussian beyond which tail mass
/// (about `1e-19`) is treated as exactly zero by banded evaluations.
pub const TAIL_CUTOFF_SD: f64 = 9.0;

/// Closed interval `[lo, hi]`, either end possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub const REAL_LINE: Support = Support {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const POSITIVE: Support = Support {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Support { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Strict interior membership.
    pub fn interior(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

/// All partial-moment quantities of a law at a single point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PartialMoments {
    pub pdf: f64,
    pub cdf: f64,
    /// `1 - cdf`, evaluated directly.
    pub ccdf: f64,
    /// `E[X 1{X < x}]`.
    pub m1: f64,
    /// `E[X 1{X >= x}]`, so that `m1 + um1` is constant.
    pub um1: f64,
}

/// Probability and first moment of `X` over the interval `[lo, hi)`, taken
/// from whichever tail keeps the subtraction well conditioned.
pub fn interval_mass(lo: &PartialMoments, hi: &PartialMoments) -> (f64, f64) {
    if lo.cdf > 0.5 {
        (lo.ccdf - hi.ccdf, lo.um1 - hi.um1)
    } else {
        (hi.cdf - lo.cdf, hi.m1 - lo.m1)
    }
}

/// A scalar law described by its density, distribution function and lower
/// partial expectations.
pub trait ScalarDistribution: Send + Sync {
    fn support(&self) -> Support;

    /// Evaluate every partial moment at `x`. Infinite arguments return the
    /// exact limits.
    fn eval(&self, x: f64) -> PartialMoments;

    /// Second lower partial expectation `E[X^2 1{X < x}]`, when available.
    fn m2(&self, _x: f64) -> Option<f64> {
        None
    }

    /// Interval outside of which the density vanishes and the cumulative
    /// quantities are constant to far below double precision.
    fn effective_range(&self) -> (f64, f64) {
        let s = self.support();
        (s.lo, s.hi)
    }

    fn pdf(&self, x: f64) -> f64 {
        self.eval(x).pdf
    }

    fn cdf(&self, x: f64) -> f64 {
        self.eval(x).cdf
    }

    fn m1(&self, x: f64) -> f64 {
        self.eval(x).m1
    }
}

/// Innovation law of an affine update: standard normal or noncentral
/// chi-squared with one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    Normal(StdNormal),
    Ncx2(NoncentralChiSquared1),
}

impl ScalarDistribution for Innovation {
    fn support(&self) -> Support {
        match self {
            Innovation::Normal(d) => d.support(),
            Innovation::Ncx2(d) => d.support(),
        }
    }

    fn eval(&self, x: f64) -> PartialMoments {
        match self {
            Innovation::Normal(d) => d.eval(x),
            Innovation::Ncx2(d) => d.eval(x),
        }
    }

    fn m2(&self, x: f64) -> Option<f64> {
        match self {
            Innovation::Normal(d) => d.m2(x),
            Innovation::Ncx2(d) => d.m2(x),
        }
    }

    fn effective_range(&self) -> (f64, f64) {
        match self {
            Innovation::Normal(d) => d.effective_range(),
            Innovation::Ncx2(d) => d.effective_range(),
        }
    }
}
