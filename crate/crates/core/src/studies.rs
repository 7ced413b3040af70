//! Weak-order and marginal-distribution error experiments.

use serde::{Deserialize, Serialize};

use crate::rmq::{rmq_run_with, BoundaryMode, QuantizationSequence, RunOptions, Schedule};
use crate::schemes::Scheme;
use crate::sde_models::SdeModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakOrderPoint {
    pub steps: usize,
    pub dt: f64,
    pub mean: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakOrderReport {
    pub scheme: Scheme,
    pub points: Vec<WeakOrderPoint>,
    /// Least-squares slope of `log2 |error|` against `log2 dt`.
    pub beta: f64,
    pub intercept: f64,
}

/// Settings shared by the runs of a weak-order study.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakOrderSetup {
    pub s0: f64,
    pub horizon: f64,
    pub step_counts: Vec<usize>,
    pub n: usize,
    pub n_max_vq: usize,
    pub n_max_rmq: usize,
    pub boundary: BoundaryMode,
    /// Exact `E[S_T]`.
    pub exact_mean: f64,
}

/// Least-squares fit `y = slope x + intercept`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "regression needs matching samples of length at least 2 ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "regression abscissae are all equal".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// First-moment error of the final quantizer for each step count, and the
/// regressed weak order.
pub fn weak_order_study(
    model: &dyn SdeModel,
    scheme: Scheme,
    setup: &WeakOrderSetup,
) -> Result<WeakOrderReport> {
    if setup.step_counts.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "a weak-order regression needs at least 3 step counts, got {}",
            setup.step_counts.len()
        )));
    }
    let options = RunOptions {
        keep_transitions: false,
    };
    let mut points = Vec::with_capacity(setup.step_counts.len());
    for &k in &setup.step_counts {
        let schedule =
            Schedule::uniform(setup.horizon, k, setup.n, setup.n_max_vq, setup.n_max_rmq)?;
        let seq = rmq_run_with(model, scheme, setup.s0, &schedule, setup.boundary, &options)?;
        let mean = seq.final_quantizer().mean();
        points.push(WeakOrderPoint {
            steps: k,
            dt: schedule.dt(),
            mean,
            abs_error: (mean - setup.exact_mean).abs(),
        });
    }
    if let Some(p) = points.iter().find(|p| !(p.abs_error > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "zero first-moment error at K={}; the slope is undefined",
            p.steps
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.dt.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.abs_error.log2()).collect();
    let (beta, intercept) = regression_slope(&xs, &ys)?;
    Ok(WeakOrderReport {
        scheme,
        points,
        beta,
        intercept,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub x: Vec<f64>,
    /// Implied minus reference distribution function.
    pub error: Vec<f64>,
    pub sup_norm: f64,
}

/// Implied marginal CDF at the final step minus `reference`, on `points`
/// equally spaced states spanning the live codewords.
pub fn marginal_error_profile(
    seq: &QuantizationSequence,
    reference: impl Fn(f64) -> f64,
    points: usize,
) -> Result<ErrorProfile> {
    if points < 2 {
        return Err(Error::InvalidParameter(
            "an error profile needs at least 2 points".into(),
        ));
    }
    let k = seq.len();
    let implied = seq.implied_marginal(k)?;
    let live = seq.live_quantizer(k);
    let (lo, hi) = (live.codewords[0], live.codewords[live.len() - 1]);
    let x: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let error: Vec<f64> = x.iter().map(|&v| implied.cdf(v) - reference(v)).collect();
    let sup_norm = error.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    Ok(ErrorProfile { x, error, sup_norm })
}
