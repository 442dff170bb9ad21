use serde::Serialize;

use super::{gh_epsilon, CorrespondencePair, FiniteMetricSpace, GhError};

/// `N` equally spaced points on the circle of length 1 with arc-length distance.
pub fn circle_sample(n: usize) -> FiniteMetricSpace {
    let points: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let labels = (0..n).map(|i| format!("{i}/{n}")).collect();
    FiniteMetricSpace::from_points(labels, &points, |a, b| {
        let d = (a - b).abs();
        d.min(1.0 - d)
    })
    .expect("circle metric is valid")
}

/// Geodesic distance on `R²/Z²` with metric `dx² + e^{-t}dy²`.
fn warped_distance(t: f64, p: (f64, f64), q: (f64, f64)) -> f64 {
    let w = (-t).exp();
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let mut best = f64::INFINITY;
    for k in [-1.0, 0.0, 1.0] {
        for l in [-1.0, 0.0, 1.0] {
            best = best.min(((dx + k) * (dx + k) + w * (dy + l) * (dy + l)).sqrt());
        }
    }
    best
}

/// Grid `(i/N_b, j/N_f)` on the warped torus; point `i·N_f + j`.
pub fn sample_warped_torus(t: f64, n_base: usize, n_fiber: usize) -> Result<FiniteMetricSpace, GhError> {
    if n_base == 0 || n_fiber == 0 || !(t >= 0.0) {
        return Err(GhError::InvalidArgument(format!(
            "need N_b, N_f >= 1 and t >= 0 (got {n_base}, {n_fiber}, {t})"
        )));
    }
    let mut points = Vec::with_capacity(n_base * n_fiber);
    let mut labels = Vec::with_capacity(n_base * n_fiber);
    for i in 0..n_base {
        for j in 0..n_fiber {
            points.push((i as f64 / n_base as f64, j as f64 / n_fiber as f64));
            labels.push(format!("({i},{j})"));
        }
    }
    FiniteMetricSpace::from_points(labels, &points, |&p, &q| warped_distance(t, p, q))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CollapsePoint {
    pub t: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseSeries {
    pub n_base: usize,
    pub n_fiber: usize,
    pub points: Vec<CollapsePoint>,
    /// Least-squares fit `ε_t ≈ c₁e^{-t/2} + c₂/N_b`.
    pub c1: f64,
    pub c2: f64,
    /// Largest increase between consecutive samples (0 when nonincreasing).
    pub max_increase: f64,
}

impl CollapseSeries {
    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.max_increase <= tol
    }
}

/// ε of the projection / zero-section pair between the warped torus at each
/// `t` and the base circle.
pub fn collapse_series(ts: &[f64], n_base: usize, n_fiber: usize) -> Result<CollapseSeries, GhError> {
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GhError::InvalidArgument("t values must be increasing".into()));
    }
    let base = circle_sample(n_base);
    let maps = CorrespondencePair {
        f: (0..n_base * n_fiber).map(|p| p / n_fiber).collect(),
        g: (0..n_base).map(|i| i * n_fiber).collect(),
    };
    let points = ts
        .iter()
        .map(|&t| {
            let x = sample_warped_torus(t, n_base, n_fiber)?;
            Ok(CollapsePoint {
                t,
                epsilon: gh_epsilon(&x, &base, &maps)?,
            })
        })
        .collect::<Result<Vec<_>, GhError>>()?;
    let max_increase = points
        .windows(2)
        .map(|w| w[1].epsilon - w[0].epsilon)
        .fold(0.0, f64::max);
    let (c1, c2) = fit_rates(&points, n_base);
    Ok(CollapseSeries {
        n_base,
        n_fiber,
        points,
        c1,
        c2,
        max_increase,
    })
}

fn fit_rates(points: &[CollapsePoint], n_base: usize) -> (f64, f64) {
    // Normal equations for ε = c1·u + c2·v with u = e^{-t/2}, v = 1/N.
    let v = 1.0 / n_base as f64;
    let (mut suu, mut su, mut sue, mut se) = (0.0, 0.0, 0.0, 0.0);
    for p in points {
        let u = (-p.t / 2.0).exp();
        suu += u * u;
        su += u;
        sue += u * p.epsilon;
        se += p.epsilon;
    }
    let m = points.len() as f64;
    let det = suu * m * v * v - su * su * v * v;
    if points.len() < 2 || det.abs() < 1e-300 {
        let c1 = if suu > 0.0 { sue / suu } else { 0.0 };
        return (c1, 0.0);
    }
    let c1 = (sue * m * v * v - se * v * su * v) / det;
    let c2 = (suu * se * v - su * v * sue) / det;
    (c1, c2)
}

/// `t,epsilon,flag` rows; the flag records that ε comes from explicit maps.
pub fn series_csv(series: &CollapseSeries) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "epsilon", "flag"]).expect("in-memory write");
    for p in &series.points {
        w.write_record([p.t.to_string(), p.epsilon.to_string(), "explicit-maps".to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
