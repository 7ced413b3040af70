//! One-step updates written in the affine form `U = m Z + c`.
//!
//! Euler uses a standard normal `Z`. Milstein and the simplified weak order
//! 2.0 scheme complete the square in the Gaussian increment, which turns
//! `Z` into a noncentral chi-squared variable with one degree of freedom and
//! a codeword-dependent noncentrality.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{Innovation, NoncentralChiSquared1, StdNormal};
use crate::sde_models::SdeModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    Milstein,
    Weak2,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Euler, Scheme::Milstein, Scheme::Weak2];

    pub fn update(self, model: &dyn SdeModel, gamma: f64, dt: f64) -> Result<AffineUpdate> {
        match self {
            Scheme::Euler => euler_update(model, gamma, dt),
            Scheme::Milstein => milstein_update(model, gamma, dt),
            Scheme::Weak2 => weak2_update(model, gamma, dt),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Milstein => "milstein",
            Scheme::Weak2 => "weak2",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "milstein" => Ok(Scheme::Milstein),
            "weak2" => Ok(Scheme::Weak2),
            other => Err(Error::Parse(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Law of the innovation `Z` in `U = m Z + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnovationLaw {
    Gaussian,
    NoncentralChi2 { lambda: f64 },
}

impl InnovationLaw {
    pub fn distribution(&self) -> Innovation {
        match *self {
            InnovationLaw::Gaussian => Innovation::Normal(StdNormal),
            InnovationLaw::NoncentralChi2 { lambda } => Innovation::Ncx2(
                NoncentralChiSquared1::new(lambda)
                    .expect("noncentrality validated on construction"),
            ),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            InnovationLaw::Gaussian => 0.0,
            InnovationLaw::NoncentralChi2 { lambda } => 1.0 + lambda,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            InnovationLaw::Gaussian => 1.0,
            InnovationLaw::NoncentralChi2 { lambda } => 2.0 * (1.0 + 2.0 * lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineUpdate {
    pub m: f64,
    pub c: f64,
    pub law: InnovationLaw,
    /// Set when a higher-order scheme degenerated and the Euler update was
    /// used instead.
    #[serde(default)]
    pub euler_fallback: bool,
}

impl AffineUpdate {
    pub fn mean(&self) -> f64 {
        self.m * self.law.mean() + self.c
    }

    pub fn variance(&self) -> f64 {
        self.m * self.m * self.law.variance()
    }
}

fn check_step(gamma: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite state {gamma}")));
    }
    Ok(())
}

/// `m = b sqrt(dt)`, `c = gamma + a dt`, Gaussian innovation.
pub fn euler_update(model: &dyn SdeModel, gamma: f64, dt: f64) -> Result<AffineUpdate> {
    check_step(gamma, dt)?;
    let k = model.try_coefficients(gamma)?;
    Ok(AffineUpdate {
        m: k.b * dt.sqrt(),
        c: gamma + k.a * dt,
        law: InnovationLaw::Gaussian,
        euler_fallback: false,
    })
}

/// The noncentral form is meaningless once `b b' dt` is negligible.
fn degenerate(bdb_dt: f64, gamma: f64) -> bool {
    bdb_dt.abs() < 1e-12 * gamma.abs().max(1.0)
}

fn fallback(model: &dyn SdeModel, gamma: f64, dt: f64) -> Result<AffineUpdate> {
    let mut u = euler_update(model, gamma, dt)?;
    u.euler_fallback = true;
    Ok(u)
}

/// Milstein update by completion of the square:
/// `m = b b' dt / 2`, `c = gamma + (a - b b' / 2) dt - b / (2 b')`,
/// `lambda = 1 / (dt b'^2)`.
pub fn milstein_update(model: &dyn SdeModel, gamma: f64, dt: f64) -> Result<AffineUpdate> {
    check_step(gamma, dt)?;
    let k = model.try_coefficients(gamma)?;
    let bdb = k.b * k.db;
    if degenerate(bdb * dt, gamma) {
        return fallback(model, gamma, dt);
    }
    let shift = 1.0 / (dt.sqrt() * k.db);
    Ok(AffineUpdate {
        m: 0.5 * bdb * dt,
        c: gamma + (k.a - 0.5 * bdb) * dt - 0.5 * k.b / k.db,
        law: InnovationLaw::NoncentralChi2 {
            lambda: shift * shift,
        },
        euler_fallback: false,
    })
}

/// Simplified weak order 2.0 update by completion of the square.
///
/// With `B = b + (a' b + a b' + b'' b^2 / 2) dt / 2`:
/// `m = b b' dt / 2`,
/// `c = gamma + (a - b b' / 2) dt + (a a' + a'' b^2 / 2) dt^2 / 2 - B^2 / (2 b b')`,
/// `lambda = (B / (b b' sqrt(dt)))^2`.
pub fn weak2_update(model: &dyn SdeModel, gamma: f64, dt: f64) -> Result<AffineUpdate> {
    check_step(gamma, dt)?;
    let k = model.try_coefficients(gamma)?;
    let bdb = k.b * k.db;
    if degenerate(bdb * dt, gamma) {
        return fallback(model, gamma, dt);
    }
    let big_b = k.b + 0.5 * (k.da * k.b + k.a * k.db + 0.5 * k.d2b * k.b * k.b) * dt;
    let shift = big_b / (bdb * dt.sqrt());
    Ok(AffineUpdate {
        m: 0.5 * bdb * dt,
        c: gamma + (k.a - 0.5 * bdb) * dt + 0.5 * (k.a * k.da + 0.5 * k.d2a * k.b * k.b) * dt * dt
            - big_b * big_b / (2.0 * bdb),
        law: InnovationLaw::NoncentralChi2 {
            lambda: shift * shift,
        },
        euler_fallback: false,
    })
}
