//! Newton-Raphson vector quantization of a single scalar law.

use serde::{Deserialize, Serialize};

use crate::distributions::{interval_mass, PartialMoments, ScalarDistribution, Support};
use crate::newton::{self, floor_empty_regions, Evaluation, Objective};
use crate::tridiag::Tridiagonal;
use crate::{Error, Result};

/// Strictly increasing codewords with the probabilities of their regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub codewords: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl Quantizer {
    pub fn new(codewords: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if codewords.len() != probabilities.len() || codewords.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} codewords with {} probabilities",
                codewords.len(),
                probabilities.len()
            )));
        }
        check_increasing(&codewords)?;
        Ok(Quantizer {
            codewords,
            probabilities,
        })
    }

    /// The one-point quantizer `{x}` carrying unit mass.
    pub fn point(x: f64) -> Self {
        Quantizer {
            codewords: vec![x],
            probabilities: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// `E[H(X_hat)] = p . H(Gamma)`.
    pub fn expectation(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.codewords
            .iter()
            .zip(&self.probabilities)
            .map(|(&x, &p)| p * h(x))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|x| x)
    }
}

/// Voronoi region edges `r_0 < r_1 < ... < r_N`; region `i` is `(r_i, r_{i+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionBounds {
    edges: Vec<f64>,
}

impl RegionBounds {
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn lowers(&self) -> &[f64] {
        &self.edges[..self.edges.len() - 1]
    }

    pub fn uppers(&self) -> &[f64] {
        &self.edges[1..]
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub(crate) fn check_increasing(codewords: &[f64]) -> Result<()> {
    for (i, x) in codewords.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NotIncreasing { index: i });
        }
    }
    match codewords.windows(2).position(|w| w[0] >= w[1]) {
        Some(i) => Err(Error::NotIncreasing { index: i + 1 }),
        None => Ok(()),
    }
}

/// Midpoint region boundaries, with the outer edges set to the support.
pub fn region_boundaries(codewords: &[f64], support: Support) -> Result<RegionBounds> {
    if codewords.is_empty() {
        return Err(Error::DimensionMismatch("empty quantizer".into()));
    }
    check_increasing(codewords)?;
    for (index, &value) in codewords.iter().enumerate() {
        if value <= support.lo || value > support.hi {
            return Err(Error::OutsideSupport {
                index,
                value,
                lo: support.lo,
                hi: support.hi,
            });
        }
    }
    Ok(RegionBounds {
        edges: edges_unchecked(codewords, support.lo, support.hi),
    })
}

pub(crate) fn edges_unchecked(codewords: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut edges = Vec::with_capacity(codewords.len() + 1);
    edges.push(lo);
    edges.extend(codewords.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(hi);
    edges
}

/// `D(Gamma) = E|X - X_hat|^2` by direct integration against `M2`, `M1`, `F`.
pub fn distortion<D: ScalarDistribution + ?Sized>(dist: &D, codewords: &[f64]) -> Result<f64> {
    let bounds = region_boundaries(codewords, dist.support())?;
    let edges = bounds.edges();
    let m2: Vec<f64> = edges
        .iter()
        .map(|&r| dist.m2(r).ok_or(Error::MissingSecondMoment))
        .collect::<Result<_>>()?;
    let pm: Vec<PartialMoments> = edges.iter().map(|&r| dist.eval(r)).collect();
    let total = codewords
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let (df, dm) = interval_mass(&pm[i], &pm[i + 1]);
            (m2[i + 1] - m2[i]) - 2.0 * g * dm + g * g * df
        })
        .sum::<f64>();
    Ok(total.max(0.0))
}

/// `dD/dgamma_i = 2 gamma_i (F(r+) - F(r-)) - 2 (M1(r+) - M1(r-))`.
pub fn distortion_gradient<D: ScalarDistribution + ?Sized>(
    dist: &D,
    codewords: &[f64],
) -> Result<Vec<f64>> {
    region_boundaries(codewords, dist.support())?;
    Ok(SingleLaw { dist }.evaluate(codewords)?.gradient)
}

/// The tridiagonal Hessian of the distortion.
pub fn distortion_hessian<D: ScalarDistribution + ?Sized>(
    dist: &D,
    codewords: &[f64],
) -> Result<Tridiagonal> {
    region_boundaries(codewords, dist.support())?;
    Ok(SingleLaw { dist }.evaluate(codewords)?.hessian)
}

/// Conditional means `E[X | X in R_i]` of the regions of `codewords`.
pub fn conditional_centroids<D: ScalarDistribution + ?Sized>(
    dist: &D,
    codewords: &[f64],
) -> Result<Vec<f64>> {
    region_boundaries(codewords, dist.support())?;
    let e = SingleLaw { dist }.evaluate(codewords)?;
    Ok(e.first.iter().zip(&e.mass).map(|(m, p)| m / p).collect())
}

/// Convergence information from [`newton_quantize_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VqReport {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub lloyd_steps: usize,
}

/// Quantize `dist` with at most `n_max` Newton-Raphson iterations from `gamma0`.
pub fn newton_quantize<D: ScalarDistribution + ?Sized>(
    dist: &D,
    gamma0: &[f64],
    n_max: usize,
) -> Result<Quantizer> {
    newton_quantize_report(dist, gamma0, n_max).map(|(q, _)| q)
}

pub fn newton_quantize_report<D: ScalarDistribution + ?Sized>(
    dist: &D,
    gamma0: &[f64],
    n_max: usize,
) -> Result<(Quantizer, VqReport)> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    region_boundaries(gamma0, dist.support())?;
    let objective = SingleLaw { dist };
    let (codewords, eval, report) = newton::minimize(&objective, gamma0.to_vec(), n_max)?;
    let quantizer = Quantizer {
        codewords,
        probabilities: eval.mass,
    };
    Ok((
        quantizer,
        VqReport {
            iterations: report.iterations,
            gradient_norm: report.gradient_norm,
            lloyd_steps: report.lloyd_steps,
        },
    ))
}

/// Families with a recommended starting quantizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuessFamily {
    Normal,
    Ncx2 { lambda: f64 },
}

/// Starting codewords for the standard normal and `chi'^2(1, lambda)` laws.
pub fn initial_guess(family: GuessFamily, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "cardinality must be at least 1".into(),
        ));
    }
    let nf = n as f64;
    let guess = match family {
        GuessFamily::Normal => (1..=n)
            .map(|k| 5.5 * k as f64 / (nf + 1.0) - 2.75)
            .collect(),
        GuessFamily::Ncx2 { lambda } => {
            if !(lambda >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "noncentrality must be nonnegative, got {lambda}"
                )));
            }
            let root = lambda.sqrt();
            if root < 2.5 {
                (1..=n)
                    .map(|k| ((3.0 + root) * k as f64 / nf).powi(2))
                    .collect()
            } else {
                (1..=n)
                    .map(|k| (5.0 * k as f64 / (nf + 1.0) - 2.5 + root).powi(2))
                    .collect()
            }
        }
    };
    Ok(guess)
}

struct SingleLaw<'a, D: ?Sized> {
    dist: &'a D,
}

impl<D: ScalarDistribution + ?Sized> Objective for SingleLaw<'_, D> {
    fn admissible(&self, codewords: &[f64]) -> bool {
        let s = self.dist.support();
        newton::strictly_increasing(codewords)
            && codewords[0] > s.lo
            && codewords[codewords.len() - 1] < s.hi
    }

    fn evaluate(&self, codewords: &[f64]) -> Result<Evaluation> {
        let s = self.dist.support();
        let edges = edges_unchecked(codewords, s.lo, s.hi);
        let pm: Vec<PartialMoments> = edges.iter().map(|&r| self.dist.eval(r)).collect();
        let n = codewords.len();
        let mut mass = Vec::with_capacity(n);
        let mut first = Vec::with_capacity(n);
        let mut gradient = Vec::with_capacity(n);
        for (i, &g) in codewords.iter().enumerate() {
            let (df, dm) = interval_mass(&pm[i], &pm[i + 1]);
            mass.push(df);
            first.push(dm);
            gradient.push(2.0 * (g * df - dm));
        }
        let off: Vec<f64> = (0..n - 1)
            .map(|i| -0.5 * pm[i + 1].pdf * (codewords[i + 1] - codewords[i]))
            .collect();
        let mut diag: Vec<f64> = mass.iter().map(|p| 2.0 * p).collect();
        for (i, o) in off.iter().enumerate() {
            diag[i] += o;
            diag[i + 1] += o;
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
