//! Box-counting slope of a planar point cloud.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moebius::C64;

pub const MIN_POINTS: usize = 1000;
pub const MIN_SCALES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCount {
    pub scale: f64,
    pub boxes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCountFit {
    /// Least-squares slope of `log N(eps)` against `log(1/eps)`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub counts: Vec<BoxCount>,
}

/// Number of grid cells of side `scale` hit by the points.
pub fn count_boxes(points: &[C64], scale: f64) -> u64 {
    let cells: HashSet<(i64, i64)> =
        points.iter().map(|z| ((z.re / scale).floor() as i64, (z.im / scale).floor() as i64)).collect();
    cells.len() as u64
}

/// Geometric sequence of `n` scales from `hi` down to `lo`.
pub fn geometric_scales(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![hi];
    }
    let step = (lo / hi).ln() / (n - 1) as f64;
    (0..n).map(|i| hi * (step * i as f64).exp()).collect()
}

pub fn box_counting(points: &[C64], scales: &[f64]) -> Result<BoxCountFit> {
    if points.len() < MIN_POINTS {
        return Err(Error::TooFewPoints { needed: MIN_POINTS, got: points.len() });
    }
    if points.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("points must be finite".into()));
    }
    if scales.len() < MIN_SCALES || scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::DegenerateScales);
    }
    let lo = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scales.iter().copied().fold(0.0, f64::max);
    if hi / lo < 10.0 {
        return Err(Error::DegenerateScales);
    }
    let counts: Vec<BoxCount> =
        scales.iter().map(|&scale| BoxCount { scale, boxes: count_boxes(points, scale) }).collect();
    let xs: Vec<f64> = counts.iter().map(|c| -c.scale.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.boxes as f64).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(BoxCountFit { slope, intercept: my - slope * mx, r_squared, counts })
}
