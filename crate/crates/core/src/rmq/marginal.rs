//! The continuous marginal implied by one affine step from a quantizer.

use crate::distributions::ScalarDistribution;
use crate::schemes::AffineUpdate;
use crate::vq1d::Quantizer;
use crate::{Error, Result};

use super::BoundaryMode;

/// `F(x) = sum_i p_i P(U_i <= x)` with the boundary convention applied.
///
/// In absorbing mode `zero_mass` is the mass already sitting in the zero
/// state before the step, and the probability of crossing zero collapses
/// onto zero. In reflecting mode each component is replaced by `|U_i|`.
#[derive(Debug, Clone)]
pub struct ImpliedMarginal {
    prev: Quantizer,
    updates: Vec<AffineUpdate>,
    boundary: BoundaryMode,
    zero_mass: f64,
}

impl ImpliedMarginal {
    pub fn new(
        prev: Quantizer,
        updates: Vec<AffineUpdate>,
        boundary: BoundaryMode,
        zero_mass: f64,
    ) -> Result<Self> {
        if prev.len() != updates.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} codewords with {} updates",
                prev.len(),
                updates.len()
            )));
        }
        if updates.iter().any(|u| u.m == 0.0) {
            return Err(Error::ZeroScale);
        }
        Ok(ImpliedMarginal {
            prev,
            updates,
            boundary,
            zero_mass,
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let total = match self.boundary {
            BoundaryMode::Free => self.mixture_cdf(x),
            BoundaryMode::Absorbing if x < 0.0 => 0.0,
            BoundaryMode::Absorbing => self.zero_mass + self.mixture_cdf(x),
            BoundaryMode::Reflecting if x < 0.0 => 0.0,
            BoundaryMode::Reflecting => self.mixture_cdf(x) - self.mixture_cdf(-x),
        };
        total.clamp(0.0, 1.0)
    }

    fn mixture_cdf(&self, x: f64) -> f64 {
        self.updates
            .iter()
            .zip(&self.prev.probabilities)
            .map(|(u, &p)| p * component_cdf(u, x))
            .sum()
    }
}

/// `H(-m) + sgn(m) F_Z((x - c) / m)`.
fn component_cdf(u: &AffineUpdate, x: f64) -> f64 {
    let e = u.law.distribution().eval((x - u.c) / u.m);
    if u.m > 0.0 {
        e.cdf
    } else {
        e.ccdf
    }
}
