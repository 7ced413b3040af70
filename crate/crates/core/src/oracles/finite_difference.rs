//! Crank-Nicolson solver for the pricing PDE
//! `V_t + a(s) V_s + b(s)^2 V_ss / 2 - r V = 0` with Bermudan exercise.

use crate::pricing::VanillaPayoff;
use crate::sde_models::SdeModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub time_steps: usize,
    pub space_steps: usize,
    /// Upper end of the grid as a multiple of `s0`.
    pub s_max_mult: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            time_steps: 600,
            space_steps: 800,
            s_max_mult: 4.0,
        }
    }
}

/// Value at `s0` of a claim paying `payoff` at `horizon`, exercisable at each
/// of `exercise_dates` in `(0, horizon]`. An empty date list prices the
/// European claim.
///
/// The first step after the terminal date and after every exercise date is
/// replaced by two implicit Euler half steps to damp the payoff kink. At
/// `s = 0` (a trap state for the drift and diffusion) the claim is worth the
/// payoff at zero discounted to the next exercise date; at `s_max` the second
/// derivative is dropped and `V_s` is taken one-sided.
pub fn cn_bermudan(
    model: &dyn SdeModel,
    payoff: &VanillaPayoff,
    s0: f64,
    horizon: f64,
    exercise_dates: &[f64],
    r: f64,
    cfg: &FdConfig,
) -> Result<f64> {
    if cfg.time_steps == 0 || cfg.space_steps < 2 || !(cfg.s_max_mult > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "invalid finite-difference grid {cfg:?}"
        )));
    }
    if !(s0 > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidParameter(
            "spot and horizon must be positive".into(),
        ));
    }
    let nt = cfg.time_steps;
    let m = cfg.space_steps;
    let dt = horizon / nt as f64;
    let h = cfg.s_max_mult * s0 / m as f64;
    let mut exercise = vec![false; nt + 1];
    for &t in exercise_dates {
        if !(t > 0.0 && t <= horizon * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "exercise date {t} outside (0, {horizon}]"
            )));
        }
        exercise[((t / dt).round() as usize).clamp(1, nt)] = true;
    }
    exercise[nt] = true;

    let s: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let intrinsic: Vec<f64> = s.iter().map(|&x| payoff.value(x)).collect();
    // L V_i = lo_i V_{i-1} + mid_i V_i + up_i V_{i+1}
    let mut lo = vec![0.0; m + 1];
    let mut mid = vec![0.0; m + 1];
    let mut up = vec![0.0; m + 1];
    for i in 1..m {
        let c = model.coefficients(s[i]);
        let v = c.b * c.b;
        lo[i] = 0.5 * v / (h * h) - 0.5 * c.a / h;
        mid[i] = -v / (h * h) - r;
        up[i] = 0.5 * v / (h * h) + 0.5 * c.a / h;
    }
    let top = model.coefficients(s[m]);
    lo[m] = -top.a / h;
    mid[m] = top.a / h - r;

    let mut values = intrinsic.clone();
    let mut next_exercise = nt;
    let mut smooth = 0;
    for n in (0..nt).rev() {
        let t = n as f64 * dt;
        let boundary = intrinsic[0] * (-r * (next_exercise as f64 * dt - t)).exp();
        if exercise[n + 1] {
            smooth = 2;
        }
        if smooth > 0 {
            let half = 0.5 * dt;
            let t_mid = t + half;
            let b_mid = intrinsic[0] * (-r * (next_exercise as f64 * dt - t_mid)).exp();
            values = theta_step(&values, &lo, &mid, &up, half, 1.0, b_mid)?;
            values = theta_step(&values, &lo, &mid, &up, half, 1.0, boundary)?;
            smooth -= 1;
        } else {
            values = theta_step(&values, &lo, &mid, &up, dt, 0.5, boundary)?;
        }
        if n > 0 && exercise[n] {
            for (v, &p) in values.iter_mut().zip(&intrinsic) {
                *v = v.max(p);
            }
            next_exercise = n;
        }
    }
    let x = s0 / h;
    let i = (x.floor() as usize).min(m - 1);
    let w = x - i as f64;
    Ok(values[i] * (1.0 - w) + values[i + 1] * w)
}

/// One theta-scheme step `(I - theta tau L) V_new = (I + (1 - theta) tau L) V_old`
/// with Dirichlet value `left` at node 0.
fn theta_step(
    old: &[f64],
    lo: &[f64],
    mid: &[f64],
    up: &[f64],
    tau: f64,
    theta: f64,
    left: f64,
) -> Result<Vec<f64>> {
    let m = old.len() - 1;
    let explicit = (1.0 - theta) * tau;
    let implicit = theta * tau;
    let mut a = vec![0.0; m + 1];
    let mut b = vec![1.0; m + 1];
    let mut c = vec![0.0; m + 1];
    let mut rhs = vec![left; m + 1];
    for i in 1..=m {
        let lv =
            lo[i] * old[i - 1] + mid[i] * old[i] + if i < m { up[i] * old[i + 1] } else { 0.0 };
        rhs[i] = old[i] + explicit * lv;
        a[i] = -implicit * lo[i];
        b[i] = 1.0 - implicit * mid[i];
        c[i] = if i < m { -implicit * up[i] } else { 0.0 };
    }
    thomas(&a, &b, &c, &rhs)
}

fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut pivot = b[0];
    for i in 0..n {
        if i > 0 {
            pivot = b[i] - a[i] * cp[i - 1];
        }
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: i, pivot });
        }
        cp[i] = c[i] / pivot;
        dp[i] = (d[i] - if i > 0 { a[i] * dp[i - 1] } else { 0.0 }) / pivot;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(x)
}
