//! One-dimensional extended-real convex analysis on grids.
//!
//! Values are `f64` with `+inf` allowed (and excluded from suprema);
//! `-inf` never arises because inputs are bounded below. Conjugation is
//! the direct `O(|xs| * |thetas|)` maximum, which is exact on the grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sampled extended-real function on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    /// At least one finite value is required; `+inf` entries are allowed,
    /// NaN and `-inf` are not.
    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::Grid(format!(
                "{} grid points but {} values",
                xs.len(),
                values.len()
            )));
        }
        if xs.is_empty() {
            return Err(Error::Grid("empty grid".into()));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Grid("grid points must be finite".into()));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Grid("grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::Grid("values must not be NaN or -inf".into()));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::Grid("at least one finite value required".into()));
        }
        Ok(GridFunction { xs, values })
    }

    /// Uniform grid `start, start + step, ...` with `count` points.
    pub fn uniform_grid(start: f64, step: f64, count: usize) -> Vec<f64> {
        (0..count).map(|i| start + step * i as f64).collect()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Finite points as `(x, value)` pairs.
    pub fn finite_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(x, v)| (*x, *v))
    }

    /// Spacing of a uniform grid; errors when the grid is not uniform.
    pub fn uniform_step(&self) -> Result<f64> {
        if self.xs.len() < 2 {
            return Err(Error::Grid("need at least two points".into()));
        }
        let step = self.xs[1] - self.xs[0];
        for w in self.xs.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0) {
                return Err(Error::Grid("grid is not uniform".into()));
            }
        }
        Ok(step)
    }
}

/// Fenchel-Legendre transform on grids:
/// `f*(theta) = max_i (theta * x_i - f(x_i))`, skipping `+inf` entries.
pub fn legendre(f: &GridFunction, thetas: &[f64]) -> Result<GridFunction> {
    let values = thetas
        .iter()
        .map(|&theta| {
            f.finite_points()
                .map(|(x, v)| theta * x - v)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    GridFunction::new(thetas.to_vec(), values)
}

/// Rate function from a log moment generating function: `I = Lambda*`,
/// evaluated on the given grid. Errors if `Lambda` is not finite
/// everywhere on its grid, since the duality identity requires a finite
/// limiting log moment generating function.
pub fn rate_from_mgf(lambda: &GridFunction, xs: &[f64]) -> Result<GridFunction> {
    if lambda.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Grid(
            "the log moment generating function must be finite at every \
             grid point for conjugate duality to identify the rate function"
                .into(),
        ));
    }
    legendre(lambda, xs)
}

/// Applies `legendre` twice over matched grids and returns the sup-norm
/// gap `max |f** - f|` over the finite entries of `f`. For a convex `f`
/// the gap shrinks with grid refinement.
pub fn biconjugate_check(f: &GridFunction, thetas: &[f64]) -> Result<f64> {
    let conj = legendre(f, thetas)?;
    let biconj = legendre(&conj, f.xs())?;
    let gap = f
        .values()
        .iter()
        .zip(biconj.values())
        .filter(|(v, _)| v.is_finite())
        .map(|(v, b)| (v - b).abs())
        .fold(0.0, f64::max);
    Ok(gap)
}

/// Greatest convex minorant of the finite points, evaluated back on the
/// full grid by piecewise-linear interpolation. Outside the span of the
/// finite points the minorant is left at `+inf`.
pub fn lower_convex_hull(f: &GridFunction) -> Result<GridFunction> {
    let pts: Vec<(f64, f64)> = f.finite_points().collect();
    let hull = hull_vertices(&pts);
    let values = f
        .xs()
        .iter()
        .map(|&x| eval_hull(&hull, x).map_or(f64::INFINITY, |(v, _, _)| v))
        .collect();
    GridFunction::new(f.xs().to_vec(), values)
}

/// Per-point convex-minorant gaps with the hull segment supporting each
/// point, for uncertainty propagation. Entries are `None` where `f` is
/// infinite (or outside the hull span).
pub struct HullGap {
    pub gaps: Vec<Option<HullGapPoint>>,
}

#[derive(Debug, Clone, Copy)]
pub struct HullGapPoint {
    pub gap: f64,
    /// Interpolation weight of the left support point.
    pub left_weight: f64,
    /// Grid indices of the supporting hull vertices.
    pub left_index: usize,
    pub right_index: usize,
}

pub fn convex_minorant_gaps(f: &GridFunction) -> Result<HullGap> {
    let pts: Vec<(f64, f64)> = f.finite_points().collect();
    let hull = hull_vertices(&pts);
    let index_of = |x: f64| {
        f.xs()
            .iter()
            .position(|&g| g == x)
            .expect("hull vertices are grid points")
    };
    let gaps = f
        .xs()
        .iter()
        .zip(f.values())
        .map(|(&x, &v)| {
            if !v.is_finite() {
                return None;
            }
            eval_hull(&hull, x).map(|(h, left, right)| {
                let (xl, _) = hull[left];
                let (xr, _) = hull[right];
                let left_weight = if right == left { 1.0 } else { (xr - x) / (xr - xl) };
                HullGapPoint {
                    gap: v - h,
                    left_weight,
                    left_index: index_of(xl),
                    right_index: index_of(xr),
                }
            })
        })
        .collect();
    Ok(HullGap { gaps })
}

/// Lower hull of points sorted by x (Andrew's monotone chain).
fn hull_vertices(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &(x, y) in pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // Keep (x2, y2) only if it lies strictly below the chord
            // from (x1, y1) to the new point.
            let cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1);
            if cross > 0.0 {
                break;
            }
            hull.pop();
        }
        hull.push((x, y));
    }
    hull
}

/// Hull value at `x` with the indices of the bracketing hull vertices;
/// `None` outside the hull span.
fn eval_hull(hull: &[(f64, f64)], x: f64) -> Option<(f64, usize, usize)> {
    if hull.is_empty() || x < hull[0].0 || x > hull[hull.len() - 1].0 {
        return None;
    }
    match hull.binary_search_by(|(hx, _)| hx.partial_cmp(&x).expect("finite")) {
        Ok(i) => Some((hull[i].1, i, i)),
        Err(i) => {
            let (x1, y1) = hull[i - 1];
            let (x2, y2) = hull[i];
            let t = (x - x1) / (x2 - x1);
            Some((y1 + t * (y2 - y1), i - 1, i))
        }
    }
}
