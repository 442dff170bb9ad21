//! Gromov-Hausdorff ε-isometries between finite metric spaces.
//!
//! Two spaces are within ε when there are maps `F: X → Y`, `G: Y → X` with
//!
//! * `|d_X(x₁,x₂) - d_Y(Fx₁,Fx₂)| ≤ ε`
//! * `|d_Y(y₁,y₂) - d_X(Gy₁,Gy₂)| ≤ ε`
//! * `d_X(x, GFx) ≤ ε`
//! * `d_Y(y, FGy) ≤ ε`

mod search;
mod space;
mod torus;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use search::{gh_upper_bound, gh_upper_bound_seeded, GhBound, SearchRegime, EXHAUSTIVE_LIMIT};
pub use space::{catalogue, FiniteMetricSpace, METRIC_SCHEMA};
pub use torus::{circle_sample, collapse_series, sample_warped_torus, series_csv, CollapsePoint, CollapseSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GhError {
    #[error("invalid metric space: {0}")]
    InvalidSpace(String),
    #[error("map sizes do not match the spaces: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0}")]
    Io(String),
}

/// A pair of index maps `F: X → Y` and `G: Y → X`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrespondencePair {
    pub f: Vec<usize>,
    pub g: Vec<usize>,
}

impl CorrespondencePair {
    pub fn identity(n: usize) -> Self {
        Self {
            f: (0..n).collect(),
            g: (0..n).collect(),
        }
    }

    fn check(&self, x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<(), GhError> {
        if self.f.len() != x.len() || self.g.len() != y.len() {
            return Err(GhError::DimensionMismatch(format!(
                "F has {} entries for {} points, G has {} for {}",
                self.f.len(),
                x.len(),
                self.g.len(),
                y.len()
            )));
        }
        if self.f.iter().any(|&i| i >= y.len()) || self.g.iter().any(|&i| i >= x.len()) {
            return Err(GhError::DimensionMismatch("map value out of range".into()));
        }
        Ok(())
    }
}

/// The four defect families of a map pair; `epsilon` is their maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GhDefects {
    pub distortion_f: f64,
    pub distortion_g: f64,
    pub return_x: f64,
    pub return_y: f64,
    pub epsilon: f64,
}

fn distortion(a: &FiniteMetricSpace, b: &FiniteMetricSpace, map: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            worst = worst.max((a.dist(i, j) - b.dist(map[i], map[j])).abs());
        }
    }
    worst
}

fn return_defect(a: &FiniteMetricSpace, there: &[usize], back: &[usize]) -> f64 {
    (0..a.len()).map(|i| a.dist(i, back[there[i]])).fold(0.0, f64::max)
}

pub fn gh_defects(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    maps: &CorrespondencePair,
) -> Result<GhDefects, GhError> {
    maps.check(x, y)?;
    let distortion_f = distortion(x, y, &maps.f);
    let distortion_g = distortion(y, x, &maps.g);
    let return_x = return_defect(x, &maps.f, &maps.g);
    let return_y = return_defect(y, &maps.g, &maps.f);
    Ok(GhDefects {
        distortion_f,
        distortion_g,
        return_x,
        return_y,
        epsilon: distortion_f.max(distortion_g).max(return_x).max(return_y),
    })
}

/// Smallest ε for which `maps` is an ε-isometry pair.
pub fn gh_epsilon(x: &FiniteMetricSpace, y: &FiniteMetricSpace, maps: &CorrespondencePair) -> Result<f64, GhError> {
    gh_defects(x, y, maps).map(|d| d.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> FiniteMetricSpace {
        FiniteMetricSpace::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn point() -> FiniteMetricSpace {
        FiniteMetricSpace::from_rows(&[vec![0.0]]).unwrap()
    }

    #[test]
    fn identity_is_exact() {
        let x = circle_sample(5);
        assert_eq!(gh_epsilon(&x, &x, &CorrespondencePair::identity(5)).unwrap(), 0.0);
    }

    #[test]
    fn two_points_to_one() {
        let maps = CorrespondencePair { f: vec![0, 0], g: vec![1] };
        let d = gh_defects(&two_points(), &point(), &maps).unwrap();
        assert_eq!(d.distortion_f, 1.0);
        assert_eq!(d.distortion_g, 0.0);
        assert_eq!(d.return_x, 1.0);
        assert_eq!(d.return_y, 0.0);
        assert_eq!(d.epsilon, 1.0);
    }

    #[test]
    fn transposition_isometry() {
        let x = FiniteMetricSpace::from_rows(&[
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 2.0],
            vec![2.0, 2.0, 0.0],
        ])
        .unwrap();
        let maps = CorrespondencePair { f: vec![1, 0, 2], g: vec![1, 0, 2] };
        assert_eq!(gh_epsilon(&x, &x, &maps).unwrap(), 0.0);
    }

    #[test]
    fn size_mismatch() {
        let maps = CorrespondencePair { f: vec![0], g: vec![0] };
        assert!(gh_epsilon(&two_points(), &point(), &maps).is_err());
    }
}
