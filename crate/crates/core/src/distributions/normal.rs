use super::{PartialMoments, ScalarDistribution, Support, TAIL_CUTOFF_SD};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, evaluated through `erfc` so the
/// lower tail keeps full relative accuracy.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// `(Phi(x), 1 - Phi(x))` with one `erfc` call; the smaller tail is
/// evaluated directly so both keep full relative accuracy.
pub(crate) fn std_normal_cdf_pair(x: f64) -> (f64, f64) {
    if x < 0.0 {
        let lower = std_normal_cdf(x);
        (lower, 1.0 - lower)
    } else {
        let upper = std_normal_cdf(-x);
        (1.0 - upper, upper)
    }
}

/// The standard normal law: `f = phi`, `F = Phi`, `M1 = -phi`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StdNormal;

pub fn std_normal_funcs() -> StdNormal {
    StdNormal
}

impl ScalarDistribution for StdNormal {
    fn support(&self) -> Support {
        Support::REAL_LINE
    }

    fn eval(&self, x: f64) -> PartialMoments {
        let pdf = std_normal_pdf(x);
        let (cdf, ccdf) = std_normal_cdf_pair(x);
        PartialMoments {
            pdf,
            cdf,
            ccdf,
            m1: -pdf,
            um1: pdf,
        }
    }

    fn m2(&self, x: f64) -> Option<f64> {
        if x.is_infinite() {
            return Some(if x > 0.0 { 1.0 } else { 0.0 });
        }
        Some(std_normal_cdf(x) - x * std_normal_pdf(x))
    }

    fn effective_range(&self) -> (f64, f64) {
        (-TAIL_CUTOFF_SD, TAIL_CUTOFF_SD)
    }
}
