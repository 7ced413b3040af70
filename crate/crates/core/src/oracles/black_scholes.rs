use serde::{Deserialize, Serialize};

use crate::distributions::std_normal_cdf;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// Closed-form European value under GBM. `sigma = 0` gives the
/// deterministic limit.
pub fn black_scholes(
    kind: OptionKind,
    s0: f64,
    strike: f64,
    r: f64,
    sigma: f64,
    t: f64,
) -> Result<f64> {
    if !(s0 > 0.0 && strike > 0.0 && sigma >= 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "black-scholes needs positive spot, strike and maturity (s0={s0}, k={strike}, sigma={sigma}, t={t})"
        )));
    }
    let df = (-r * t).exp();
    if sigma == 0.0 {
        let forward = s0 - strike * df;
        return Ok(match kind {
            OptionKind::Call => forward.max(0.0),
            OptionKind::Put => (-forward).max(0.0),
        });
    }
    let vol = sigma * t.sqrt();
    let d1 = ((s0 / strike).ln() + (r + 0.5 * sigma * sigma) * t) / vol;
    let d2 = d1 - vol;
    Ok(match kind {
        OptionKind::Call => s0 * std_normal_cdf(d1) - strike * df * std_normal_cdf(d2),
        OptionKind::Put => strike * df * std_normal_cdf(-d2) - s0 * std_normal_cdf(-d1),
    })
}
