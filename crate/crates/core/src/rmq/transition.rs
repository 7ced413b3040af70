//! Transition matrices between consecutive quantizers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    interval_mass, Innovation, PartialMoments, Reflected, ScalarDistribution,
};
use crate::schemes::AffineUpdate;
use crate::vq1d::{check_increasing, edges_unchecked, Quantizer, RegionBounds};
use crate::{Error, Result};

use super::BoundaryMode;

/// A contiguous run of entries `values[t]` at columns `start + t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub start: usize,
    pub values: Vec<f64>,
}

impl BandRow {
    pub fn get(&self, j: usize) -> f64 {
        j.checked_sub(self.start)
            .and_then(|t| self.values.get(t))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn end(&self) -> usize {
        self.start + self.values.len()
    }

    /// `(column, value)` pairs of the stored entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(t, &v)| (self.start + t, v))
    }
}

/// Row-banded matrix: entries outside each row's band are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMatrix {
    pub ncols: usize,
    pub rows: Vec<BandRow>,
}

impl BandMatrix {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].get(j)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(BandRow::sum).collect()
    }

    /// Row vector times matrix, `p M`.
    pub fn left_mul(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (row, &w) in self.rows.iter().zip(p) {
            for (j, v) in row.entries() {
                out[j] += w * v;
            }
        }
        out
    }

    /// Matrix times column vector, `M h`.
    pub fn mul_vec(&self, h: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.entries().map(|(j, v)| v * h[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| (0..self.ncols).map(|j| row.get(j)).collect())
            .collect()
    }
}

/// The matrices linking a live quantizer to the next grid.
///
/// `p[i][j]` is the probability of moving from state `i` into region `j`,
/// `m[i][j] = M1(R+) - M1(R-)` is the matching difference of the innovation's
/// first lower partial expectation, and `f[i][j]` is the innovation density
/// at the upper boundary of region `j`, for `j < N - 1`. `absorbed[i]` is the
/// probability that state `i` crosses zero (absorbing mode only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSet {
    pub p: BandMatrix,
    pub m: BandMatrix,
    pub f: BandMatrix,
    pub absorbed: Vec<f64>,
}

/// The innovation law of one row, reflected about `-c/m` in reflecting mode.
pub(crate) enum RowLaw {
    Plain(Innovation),
    Reflected(Reflected<Innovation>),
}

impl RowLaw {
    pub fn new(update: &AffineUpdate, boundary: BoundaryMode) -> Self {
        let base = update.law.distribution();
        match boundary {
            BoundaryMode::Reflecting => {
                RowLaw::Reflected(Reflected::new(base, -update.c / update.m))
            }
            _ => RowLaw::Plain(base),
        }
    }

    pub fn eval(&self, z: f64) -> PartialMoments {
        match self {
            RowLaw::Plain(d) => d.eval(z),
            RowLaw::Reflected(d) => d.eval_unclamped(z),
        }
    }

    pub fn m2(&self, z: f64) -> f64 {
        let v = match self {
            RowLaw::Plain(d) => d.m2(z),
            RowLaw::Reflected(d) => d.m2_unclamped(z),
        };
        v.expect("innovation laws provide second partial moments")
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            RowLaw::Plain(d) => d.effective_range(),
            RowLaw::Reflected(d) => d.effective_range(),
        }
    }
}

/// Per-row transition terms over the regions carrying non-negligible mass.
#[derive(Debug, Clone)]
pub(crate) struct RowTerms {
    pub start: usize,
    /// Probability of each region in the band.
    pub p: Vec<f64>,
    /// `M1(R+) - M1(R-)` of each region.
    pub m: Vec<f64>,
    /// `E[U 1{U in region}]` in state space.
    pub first: Vec<f64>,
    /// Innovation density at the upper boundary of each region.
    pub f: Vec<f64>,
    pub absorbed: f64,
}

pub(crate) fn lower_edge(boundary: BoundaryMode) -> f64 {
    match boundary {
        BoundaryMode::Free => f64::NEG_INFINITY,
        BoundaryMode::Absorbing | BoundaryMode::Reflecting => 0.0,
    }
}

/// The range of regions `start..end` hit by the row's effective range.
fn band(update: &AffineUpdate, law: &RowLaw, edges: &[f64]) -> (usize, usize) {
    let n = edges.len() - 1;
    let (zlo, zhi) = law.range();
    let (a, b) = (update.c + update.m * zlo, update.c + update.m * zhi);
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let start = edges[1..].partition_point(|&e| e <= lo).min(n - 1);
    let end = edges[..n].partition_point(|&e| e < hi).max(start);
    (start, end)
}

pub(crate) fn row_terms(update: &AffineUpdate, edges: &[f64], boundary: BoundaryMode) -> RowTerms {
    let law = RowLaw::new(update, boundary);
    let (m, c) = (update.m, update.c);
    let absorbed = match boundary {
        BoundaryMode::Absorbing => {
            let e = law.eval(-c / m);
            if m > 0.0 {
                e.cdf
            } else {
                e.ccdf
            }
        }
        _ => 0.0,
    };
    let (start, end) = band(update, &law, edges);
    let pm: Vec<PartialMoments> = edges[start..=end]
        .iter()
        .map(|&r| law.eval((r - c) / m))
        .collect();
    let width = end - start;
    let mut terms = RowTerms {
        start,
        p: Vec::with_capacity(width),
        m: Vec::with_capacity(width),
        first: Vec::with_capacity(width),
        f: Vec::with_capacity(width),
        absorbed,
    };
    for t in 0..width {
        let (lo, hi) = if m > 0.0 {
            (&pm[t], &pm[t + 1])
        } else {
            (&pm[t + 1], &pm[t])
        };
        let (df, dm) = interval_mass(lo, hi);
        let df = df.max(0.0);
        terms.p.push(df);
        terms.m.push(m.signum() * dm);
        terms.first.push(c * df + m * dm);
        terms.f.push(pm[t + 1].pdf);
    }
    terms
}

/// `E[(U - gamma_j)^2 1{U in region j}]` summed over regions for one row.
pub(crate) fn row_distortion(
    update: &AffineUpdate,
    codewords: &[f64],
    edges: &[f64],
    boundary: BoundaryMode,
) -> f64 {
    let law = RowLaw::new(update, boundary);
    let (m, c) = (update.m, update.c);
    let z: Vec<f64> = edges.iter().map(|&r| (r - c) / m).collect();
    let pm: Vec<PartialMoments> = z.iter().map(|&x| law.eval(x)).collect();
    let m2: Vec<f64> = z.iter().map(|&x| law.m2(x)).collect();
    let mut total = 0.0;
    for (t, &g) in codewords.iter().enumerate() {
        let (lo, hi) = if m > 0.0 { (t, t + 1) } else { (t + 1, t) };
        let (df, dm) = interval_mass(&pm[lo], &pm[hi]);
        let dm2 = m2[hi] - m2[lo];
        let d = c - g;
        total += d * d * df + 2.0 * d * m * dm + m * m * dm2;
    }
    total
}

/// Per-region `(R-, R+) = ((r- - c)/m, (r+ - c)/m)`.
///
/// For `m < 0` the normalized interval is `[R+, R-)`: the inequality
/// direction is reversed.
pub fn normalized_bounds(update: &AffineUpdate, bounds: &RegionBounds) -> Result<Vec<(f64, f64)>> {
    if update.m == 0.0 {
        return Err(Error::ZeroScale);
    }
    let (m, c) = (update.m, update.c);
    Ok(bounds
        .lowers()
        .iter()
        .zip(bounds.uppers())
        .map(|(&lo, &hi)| ((lo - c) / m, (hi - c) / m))
        .collect())
}

pub(crate) fn check_inputs(
    prev: &Quantizer,
    updates: &[AffineUpdate],
    next_codewords: &[f64],
    boundary: BoundaryMode,
) -> Result<()> {
    if prev.len() != updates.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} previous codewords with {} updates",
            prev.len(),
            updates.len()
        )));
    }
    if next_codewords.is_empty() {
        return Err(Error::DimensionMismatch("empty next grid".into()));
    }
    check_increasing(next_codewords)?;
    if boundary != BoundaryMode::Free && next_codewords[0] <= 0.0 {
        return Err(Error::OutsideSupport {
            index: 0,
            value: next_codewords[0],
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if updates
        .iter()
        .any(|u| u.m == 0.0 || !u.m.is_finite() || !u.c.is_finite())
    {
        return Err(Error::ZeroScale);
    }
    Ok(())
}

/// Compute the terms of every row in parallel, keeping row order.
pub(crate) fn all_rows(
    updates: &[AffineUpdate],
    edges: &[f64],
    boundary: BoundaryMode,
    include: impl Fn(usize) -> bool + Sync,
) -> Vec<Option<RowTerms>> {
    updates
        .par_iter()
        .enumerate()
        .map(|(i, u)| include(i).then(|| row_terms(u, edges, boundary)))
        .collect()
}

pub(crate) fn assemble(rows: Vec<RowTerms>, ncols: usize) -> TransitionSet {
    let mut p = Vec::with_capacity(rows.len());
    let mut m = Vec::with_capacity(rows.len());
    let mut f = Vec::with_capacity(rows.len());
    let mut absorbed = Vec::with_capacity(rows.len());
    for mut row in rows {
        let keep = (ncols - 1).saturating_sub(row.start).min(row.f.len());
        row.f.truncate(keep);
        p.push(BandRow {
            start: row.start,
            values: row.p,
        });
        m.push(BandRow {
            start: row.start,
            values: row.m,
        });
        f.push(BandRow {
            start: row.start,
            values: row.f,
        });
        absorbed.push(row.absorbed);
    }
    TransitionSet {
        p: BandMatrix { ncols, rows: p },
        m: BandMatrix { ncols, rows: m },
        f: BandMatrix {
            ncols: ncols - 1,
            rows: f,
        },
        absorbed,
    }
}

/// Transition probabilities, partial-moment differences and boundary
/// densities from the live states of `prev` to `next_codewords`.
pub fn transition_set(
    prev: &Quantizer,
    updates: &[AffineUpdate],
    next_codewords: &[f64],
    boundary: BoundaryMode,
) -> Result<TransitionSet> {
    check_inputs(prev, updates, next_codewords, boundary)?;
    let edges = edges_unchecked(next_codewords, lower_edge(boundary), f64::INFINITY);
    let rows = all_rows(updates, &edges, boundary, |_| true)
        .into_iter()
        .flatten()
        .collect();
    Ok(assemble(rows, next_codewords.len()))
}

/// Distortion of `codewords` under the mixture `sum_i p_i law(U_i)`,
/// restricted to `[0, inf)` in the boundary modes.
pub fn mixture_distortion(
    prev: &Quantizer,
    updates: &[AffineUpdate],
    codewords: &[f64],
    boundary: BoundaryMode,
) -> Result<f64> {
    check_inputs(prev, updates, codewords, boundary)?;
    let edges = edges_unchecked(codewords, lower_edge(boundary), f64::INFINITY);
    let total = updates
        .iter()
        .zip(&prev.probabilities)
        .map(|(u, &p)| p * row_distortion(u, codewords, &edges, boundary))
        .sum::<f64>();
    Ok(total.max(0.0))
}
