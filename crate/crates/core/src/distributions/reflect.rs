use super::{PartialMoments, ScalarDistribution, Support};

/// A law reflected about `xbar`: `f(x) + f(2 xbar - x)` on `[xbar, inf)`.
///
/// The first lower partial expectation omits the additive constants
/// `-2 M1(xbar) + 2 xbar F(xbar)`; only its differences are meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflected<D> {
    base: D,
    xbar: f64,
}

pub fn reflect_funcs<D: ScalarDistribution>(base: D, xbar: f64) -> Reflected<D> {
    Reflected::new(base, xbar)
}

impl<D: ScalarDistribution> Reflected<D> {
    pub fn new(base: D, xbar: f64) -> Self {
        Reflected { base, xbar }
    }

    pub fn xbar(&self) -> f64 {
        self.xbar
    }

    pub fn base(&self) -> &D {
        &self.base
    }

    /// The reflected functions without clamping to `[xbar, inf)`.
    ///
    /// For `x < xbar` these are the mirror-image quantities needed when the
    /// affine scale is negative and the admissible side is `(-inf, xbar]`.
    pub fn eval_unclamped(&self, x: f64) -> PartialMoments {
        let a = self.base.eval(x);
        let b = self.base.eval(2.0 * self.xbar - x);
        let shift = 2.0 * self.xbar * b.cdf;
        PartialMoments {
            pdf: a.pdf + b.pdf,
            cdf: a.cdf - b.cdf,
            ccdf: a.ccdf + b.cdf,
            m1: a.m1 + b.m1 - shift,
            um1: a.um1 - b.m1 + shift,
        }
    }

    pub fn m2_unclamped(&self, x: f64) -> Option<f64> {
        let mirror = 2.0 * self.xbar - x;
        let b = self.base.eval(mirror);
        let xb = self.xbar;
        Some(self.base.m2(x)? - self.base.m2(mirror)? + 4.0 * xb * b.m1 - 4.0 * xb * xb * b.cdf)
    }
}

impl<D: ScalarDistribution> ScalarDistribution for Reflected<D> {
    fn support(&self) -> Support {
        Support::new(self.xbar, f64::INFINITY)
    }

    fn eval(&self, x: f64) -> PartialMoments {
        if x < self.xbar {
            let mut e = self.eval_unclamped(self.xbar);
            e.pdf = 0.0;
            e.cdf = 0.0;
            e.ccdf = 1.0;
            return e;
        }
        self.eval_unclamped(x)
    }

    fn m2(&self, x: f64) -> Option<f64> {
        self.m2_unclamped(x.max(self.xbar))
    }

    fn effective_range(&self) -> (f64, f64) {
        let (lo, hi) = self.base.effective_range();
        let m = 2.0 * self.xbar;
        (lo.min(m - hi), hi.max(m - lo))
    }
}
