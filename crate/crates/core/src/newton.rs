//! Safeguarded Newton-Raphson iteration shared by single-law quantization
//! and the recursive mixture quantization.

use crate::tridiag::Tridiagonal;
use crate::Result;

pub(crate) const GRADIENT_TOLERANCE: f64 = 1e-12;
const MAX_HALVINGS: usize = 30;

/// Region probabilities below this are treated as empty.
pub(crate) const EMPTY_REGION: f64 = 1e-300;
/// Hessian diagonal floor applied to empty regions.
pub(crate) const DIAGONAL_FLOOR: f64 = 1e-12;

/// Distortion derivatives and region statistics at one quantizer.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub gradient: Vec<f64>,
    pub hessian: Tridiagonal,
    /// Probability of each region.
    pub mass: Vec<f64>,
    /// First moment `E[X 1{X in R_j}]` of each region.
    pub first: Vec<f64>,
}

impl Evaluation {
    pub fn gradient_norm(&self) -> f64 {
        sup_norm(&self.gradient)
    }
}

/// A distortion objective over strictly increasing codewords.
pub(crate) trait Objective {
    /// Whether a candidate quantizer is admissible (ordered, finite, inside
    /// the support).
    fn admissible(&self, codewords: &[f64]) -> bool;

    fn evaluate(&self, codewords: &[f64]) -> Result<Evaluation>;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct NewtonReport {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub halvings: usize,
    pub lloyd_steps: usize,
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

pub(crate) fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

/// Apply the hessian floor for empty regions.
pub(crate) fn floor_empty_regions(diag: &mut [f64], mass: &[f64]) {
    for (d, &p) in diag.iter_mut().zip(mass) {
        if p < EMPTY_REGION && *d < DIAGONAL_FLOOR {
            *d = DIAGONAL_FLOOR;
        }
    }
}

/// Run up to `n_max` safeguarded Newton iterations from `start`.
///
/// A full step that breaks admissibility or increases the gradient sup-norm
/// is halved up to 30 times; failing that the iteration becomes one Lloyd
/// centroid step. Returns the final codewords with their evaluation.
pub(crate) fn minimize<O: Objective>(
    objective: &O,
    start: Vec<f64>,
    n_max: usize,
) -> Result<(Vec<f64>, Evaluation, NewtonReport)> {
    let mut x = start;
    let mut eval = objective.evaluate(&x)?;
    let mut report = NewtonReport::default();
    for _ in 0..n_max {
        let norm = eval.gradient_norm();
        if norm < GRADIENT_TOLERANCE {
            break;
        }
        report.iterations += 1;
        let mut accepted = None;
        if let Ok(step) = eval.hessian.solve(&eval.gradient) {
            if step.iter().all(|s| s.is_finite()) {
                let mut scale = 1.0;
                for halving in 0..=MAX_HALVINGS {
                    let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - scale * s).collect();
                    if objective.admissible(&trial) {
                        if let Ok(e) = objective.evaluate(&trial) {
                            if e.gradient_norm() <= norm {
                                report.halvings += halving;
                                accepted = Some((trial, e));
                                break;
                            }
                        }
                    }
                    scale *= 0.5;
                }
            }
        }
        let (next, next_eval) = match accepted {
            Some(found) => found,
            None => {
                report.lloyd_steps += 1;
                let trial = lloyd_step(&x, &eval);
                if !objective.admissible(&trial) {
                    break;
                }
                let e = objective.evaluate(&trial)?;
                (trial, e)
            }
        };
        x = next;
        eval = next_eval;
    }
    report.gradient_norm = eval.gradient_norm();
    Ok((x, eval, report))
}

/// Move every codeword with nonempty region to its conditional centroid.
pub(crate) fn lloyd_step(x: &[f64], eval: &Evaluation) -> Vec<f64> {
    x.iter()
        .zip(eval.mass.iter().zip(&eval.first))
        .map(|(&g, (&p, &m))| if p > EMPTY_REGION { m / p } else { g })
        .collect()
}
