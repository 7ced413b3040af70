//! Recursive marginal quantization.
//!
//! Step `k + 1` quantizes the mixture `sum_i p_i law(U_i)` where `U_i` is the
//! affine one-step update from codeword `gamma_i` of step `k`. The final grids
//! and the transition matrices between them form a discrete-time Markov chain.

mod marginal;
mod transition;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use marginal::ImpliedMarginal;
pub use transition::{
    mixture_distortion, normalized_bounds, transition_set, BandMatrix, BandRow, TransitionSet,
};

use crate::newton::{self, floor_empty_regions, Evaluation, Objective};
use crate::schemes::{AffineUpdate, InnovationLaw, Scheme};
use crate::sde_models::SdeModel;
use crate::tridiag::Tridiagonal;
use crate::vq1d::{edges_unchecked, initial_guess, GuessFamily, Quantizer};
use crate::{Error, Result};

use transition::{all_rows, assemble, check_inputs, lower_edge, RowTerms};

/// Previous-step states lighter than this are skipped inside the Newton
/// iterations.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    #[default]
    Free,
    Absorbing,
    Reflecting,
}

impl BoundaryMode {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryMode::Free => "free",
            BoundaryMode::Absorbing => "absorbing",
            BoundaryMode::Reflecting => "reflecting",
        }
    }
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(BoundaryMode::Free),
            "absorbing" => Ok(BoundaryMode::Absorbing),
            "reflecting" => Ok(BoundaryMode::Reflecting),
            other => Err(Error::Parse(format!("unknown boundary mode '{other}'"))),
        }
    }
}

/// Time grid and per-step cardinalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub horizon: f64,
    pub steps: usize,
    /// `N_k` for `k = 1..=steps`.
    pub n_per_step: Vec<usize>,
    pub n_max_vq: usize,
    pub n_max_rmq: usize,
}

impl Schedule {
    pub fn uniform(
        horizon: f64,
        steps: usize,
        n: usize,
        n_max_vq: usize,
        n_max_rmq: usize,
    ) -> Result<Self> {
        let s = Schedule {
            horizon,
            steps,
            n_per_step: vec![n; steps],
            n_max_vq,
            n_max_rmq,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter(
                "at least one time step is required".into(),
            ));
        }
        if self.n_per_step.len() != self.steps {
            return Err(Error::DimensionMismatch(format!(
                "{} cardinalities for {} steps",
                self.n_per_step.len(),
                self.steps
            )));
        }
        if self.n_per_step.contains(&0) {
            return Err(Error::InvalidParameter(
                "cardinalities must be at least 1".into(),
            ));
        }
        if self.n_max_vq == 0 || self.n_max_rmq == 0 {
            return Err(Error::InvalidParameter(
                "iteration counts must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Store transition matrices (required by the Bermudan and barrier pricers).
    pub keep_transitions: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            keep_transitions: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepReport {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub lloyd_steps: usize,
}

/// One time step of a [`QuantizationSequence`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// In absorbing mode index 0 is the zero state carrying `absorbed_mass`.
    pub quantizer: Quantizer,
    pub absorbed_mass: f64,
    /// Transition probabilities from the previous step's states (the single
    /// initial state for step 1) to this step's states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<BandMatrix>,
    /// Affine updates of the previous step's live states.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub updates: Vec<AffineUpdate>,
    #[serde(default)]
    pub report: StepReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationSequence {
    pub s0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub boundary: BoundaryMode,
    pub steps: Vec<StepRecord>,
}

impl QuantizationSequence {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_quantizer(&self) -> &Quantizer {
        &self.steps[self.steps.len() - 1].quantizer
    }

    pub fn has_transitions(&self) -> bool {
        self.steps.iter().all(|s| s.transition.is_some())
    }

    /// Live states of step `k` (the zero state removed in absorbing mode);
    /// step 0 is the initial point.
    pub fn live_quantizer(&self, k: usize) -> Quantizer {
        if k == 0 {
            return Quantizer::point(self.s0);
        }
        let q = &self.steps[k - 1].quantizer;
        match self.boundary {
            BoundaryMode::Absorbing => Quantizer {
                codewords: q.codewords[1..].to_vec(),
                probabilities: q.probabilities[1..].to_vec(),
            },
            _ => q.clone(),
        }
    }

    /// The continuous law of step `k` implied by one affine step from the
    /// quantizer of step `k - 1`.
    pub fn implied_marginal(&self, k: usize) -> Result<ImpliedMarginal> {
        if k == 0 || k > self.steps.len() {
            return Err(Error::InvalidParameter(format!(
                "step {k} outside 1..={}",
                self.steps.len()
            )));
        }
        let zero_mass = if k == 1 {
            0.0
        } else {
            self.steps[k - 2].absorbed_mass
        };
        ImpliedMarginal::new(
            self.live_quantizer(k - 1),
            self.steps[k - 1].updates.clone(),
            self.boundary,
            zero_mass,
        )
    }
}

/// The step distortion as an objective over the next live codewords.
struct Mixture<'a> {
    probabilities: &'a [f64],
    updates: &'a [AffineUpdate],
    boundary: BoundaryMode,
}

impl Mixture<'_> {
    fn rows(&self, codewords: &[f64], floor: f64) -> Vec<Option<RowTerms>> {
        let edges = edges_unchecked(codewords, lower_edge(self.boundary), f64::INFINITY);
        all_rows(self.updates, &edges, self.boundary, |i| {
            self.probabilities[i] >= floor
        })
    }
}

impl Objective for Mixture<'_> {
    fn admissible(&self, codewords: &[f64]) -> bool {
        newton::strictly_increasing(codewords)
            && (self.boundary == BoundaryMode::Free || codewords[0] > 0.0)
    }

    fn evaluate(&self, codewords: &[f64]) -> Result<Evaluation> {
        let n = codewords.len();
        let rows = self.rows(codewords, PROBABILITY_FLOOR);
        let mut mass = vec![0.0; n];
        let mut first = vec![0.0; n];
        let mut density = vec![0.0; n.saturating_sub(1)];
        for ((row, &p), u) in rows.iter().zip(self.probabilities).zip(self.updates) {
            let Some(row) = row else { continue };
            let scale = p / u.m.abs();
            for t in 0..row.p.len() {
                let j = row.start + t;
                mass[j] += p * row.p[t];
                first[j] += p * row.first[t];
                if j + 1 < n {
                    density[j] += scale * row.f[t];
                }
            }
        }
        let gradient = codewords
            .iter()
            .zip(mass.iter().zip(&first))
            .map(|(&g, (&q, &m))| 2.0 * (g * q - m))
            .collect();
        let off: Vec<f64> = density
            .iter()
            .enumerate()
            .map(|(j, &d)| -0.5 * d * (codewords[j + 1] - codewords[j]))
            .collect();
        let mut diag: Vec<f64> = mass.iter().map(|q| 2.0 * q).collect();
        for (j, o) in off.iter().enumerate() {
            diag[j] += o;
            diag[j + 1] += o;
        }
        floor_empty_regions(&mut diag, &mass);
        Ok(Evaluation {
            gradient,
            hessian: Tridiagonal::new(diag, off)?,
            mass,
            first,
        })
    }
}

/// Gradient and tridiagonal Hessian of the mixture distortion at
/// `next_codewords`.
pub fn mixture_derivatives(
    prev: &Quantizer,
    updates: &[AffineUpdate],
    next_codewords: &[f64],
    boundary: BoundaryMode,
) -> Result<(Vec<f64>, Tridiagonal)> {
    check_inputs(prev, updates, next_codewords, boundary)?;
    let objective = Mixture {
        probabilities: &prev.probabilities,
        updates,
        boundary,
    };
    let e = objective.evaluate(next_codewords)?;
    Ok((e.gradient, e.hessian))
}

/// One safeguarded Newton-Raphson step on the mixture distortion.
pub fn rmq_newton_step(
    next_codewords: &[f64],
    prev: &Quantizer,
    updates: &[AffineUpdate],
    boundary: BoundaryMode,
) -> Result<Vec<f64>> {
    check_inputs(prev, updates, next_codewords, boundary)?;
    let objective = Mixture {
        probabilities: &prev.probabilities,
        updates,
        boundary,
    };
    let (x, _, _) = newton::minimize(&objective, next_codewords.to_vec(), 1)?;
    Ok(x)
}

pub fn rmq_run(
    model: &dyn SdeModel,
    scheme: Scheme,
    s0: f64,
    schedule: &Schedule,
    boundary: BoundaryMode,
) -> Result<QuantizationSequence> {
    rmq_run_with(
        model,
        scheme,
        s0,
        schedule,
        boundary,
        &RunOptions::default(),
    )
}

pub fn rmq_run_with(
    model: &dyn SdeModel,
    scheme: Scheme,
    s0: f64,
    schedule: &Schedule,
    boundary: BoundaryMode,
    options: &RunOptions,
) -> Result<QuantizationSequence> {
    schedule.validate()?;
    model.try_coefficients(s0)?;
    let dt = schedule.dt();
    let domain = model.domain();
    let mut live = Quantizer::point(s0);
    let mut absorbed_mass = 0.0;
    let mut steps = Vec::with_capacity(schedule.steps);
    for k in 1..=schedule.steps {
        let n = schedule.n_per_step[k - 1];
        let updates = live
            .codewords
            .iter()
            .map(|&g| scheme.update(model, g, dt))
            .collect::<Result<Vec<_>>>()?;
        if updates.iter().any(|u| u.m == 0.0) {
            return Err(Error::ZeroScale);
        }
        let (start, n_max) = if k == 1 {
            (first_guess(&updates[0], n, boundary)?, schedule.n_max_vq)
        } else {
            (resample(&live.codewords, n), schedule.n_max_rmq)
        };
        let objective = Mixture {
            probabilities: &live.probabilities,
            updates: &updates,
            boundary,
        };
        let (codewords, _, report) = newton::minimize(&objective, start, n_max)?;
        for (index, &value) in codewords.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteCodeword { step: k, index });
            }
            if !domain.interior(value) {
                return Err(Error::CodewordOutsideDomain {
                    step: k,
                    index,
                    value,
                });
            }
        }
        let rows = objective
            .rows(&codewords, 0.0)
            .into_iter()
            .flatten()
            .collect::<Vec<_>>();
        let set = assemble(rows, codewords.len());
        let probabilities = set.p.left_mul(&live.probabilities);
        let crossed: f64 = set
            .absorbed
            .iter()
            .zip(&live.probabilities)
            .map(|(a, p)| a * p)
            .sum();
        absorbed_mass += crossed;
        let quantizer = match boundary {
            BoundaryMode::Absorbing => {
                let mut c = Vec::with_capacity(n + 1);
                c.push(0.0);
                c.extend_from_slice(&codewords);
                let mut p = Vec::with_capacity(n + 1);
                p.push(absorbed_mass);
                p.extend_from_slice(&probabilities);
                Quantizer::new(c, p)?
            }
            _ => Quantizer::new(codewords.clone(), probabilities.clone())?,
        };
        let transition = options
            .keep_transitions
            .then(|| stored_transition(set, boundary, k == 1));
        steps.push(StepRecord {
            step: k,
            time: k as f64 * dt,
            quantizer,
            absorbed_mass,
            transition,
            updates,
            report: StepReport {
                iterations: report.iterations,
                gradient_norm: report.gradient_norm,
                lloyd_steps: report.lloyd_steps,
            },
        });
        live = Quantizer {
            codewords,
            probabilities,
        };
    }
    Ok(QuantizationSequence {
        s0,
        horizon: schedule.horizon,
        dt,
        scheme,
        boundary,
        steps,
    })
}

/// The transition matrix between full (augmented) state vectors.
///
/// In absorbing mode the zero state is column 0 and, from step 2 on, row 0
/// with a unit self-transition. Rows that carry absorbed mass are stored
/// densely from column 0.
fn stored_transition(set: TransitionSet, boundary: BoundaryMode, first_step: bool) -> BandMatrix {
    if boundary != BoundaryMode::Absorbing {
        return set.p;
    }
    let ncols = set.p.ncols + 1;
    let mut rows = Vec::with_capacity(set.p.rows.len() + 1);
    if !first_step {
        rows.push(BandRow {
            start: 0,
            values: vec![1.0],
        });
    }
    for (row, &a) in set.p.rows.into_iter().zip(&set.absorbed) {
        if a > 0.0 {
            let mut values = vec![0.0; row.start + 1 + row.values.len()];
            values[0] = a;
            values[row.start + 1..].copy_from_slice(&row.values);
            rows.push(BandRow { start: 0, values });
        } else {
            rows.push(BandRow {
                start: row.start + 1,
                values: row.values,
            });
        }
    }
    BandMatrix { ncols, rows }
}

/// Starting grid for step 1: the innovation's standard guess mapped through
/// the affine update.
fn first_guess(update: &AffineUpdate, n: usize, boundary: BoundaryMode) -> Result<Vec<f64>> {
    let family = match update.law {
        InnovationLaw::Gaussian => GuessFamily::Normal,
        InnovationLaw::NoncentralChi2 { lambda } => GuessFamily::Ncx2 { lambda },
    };
    let mut guess: Vec<f64> = initial_guess(family, n)?
        .into_iter()
        .map(|z| update.m * z + update.c)
        .collect();
    if update.m < 0.0 {
        guess.reverse();
    }
    if boundary != BoundaryMode::Free && guess[0] <= 0.0 {
        let mut hi = guess[n - 1];
        if !(hi > 0.0) {
            hi = update.m.abs() + update.c.abs();
        }
        guess = (1..=n).map(|j| hi * j as f64 / n as f64).collect();
    }
    Ok(guess)
}

/// Linear interpolation of `codewords` at `n` equally spaced fractional
/// indices.
fn resample(codewords: &[f64], n: usize) -> Vec<f64> {
    let m = codewords.len();
    if m == n {
        return codewords.to_vec();
    }
    if m == 1 || n == 1 {
        let mid = codewords[(m - 1) / 2];
        if n == 1 {
            return vec![mid];
        }
        let spread = mid.abs().max(1.0) * 1e-3;
        return (0..n)
            .map(|j| mid + spread * (j as f64 - (n - 1) as f64 / 2.0))
            .collect();
    }
    (0..n)
        .map(|j| {
            let s = j as f64 * (m - 1) as f64 / (n - 1) as f64;
            let i = (s.floor() as usize).min(m - 2);
            let w = s - i as f64;
            codewords[i] * (1.0 - w) + codewords[i + 1] * w
        })
        .collect()
}
