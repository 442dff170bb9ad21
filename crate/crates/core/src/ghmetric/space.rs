use serde::{Deserialize, Serialize};

use super::GhError;

pub const METRIC_SCHEMA: u32 = 1;

const TRIANGLE_SLACK: f64 = 1e-12;

/// Finite metric space with a dense row-major distance matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceFile", into = "SpaceFile")]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    d: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    schema: u32,
    labels: Vec<String>,
    #[serde(rename = "D")]
    d: Vec<f64>,
}

impl TryFrom<SpaceFile> for FiniteMetricSpace {
    type Error = GhError;

    fn try_from(file: SpaceFile) -> Result<Self, GhError> {
        if file.schema != METRIC_SCHEMA {
            return Err(GhError::InvalidSpace(format!("unsupported schema {}", file.schema)));
        }
        Self::new(file.labels, file.d)
    }
}

impl From<FiniteMetricSpace> for SpaceFile {
    fn from(space: FiniteMetricSpace) -> Self {
        SpaceFile {
            schema: METRIC_SCHEMA,
            labels: space.labels,
            d: space.d,
        }
    }
}

impl FiniteMetricSpace {
    /// Checks symmetry, zero diagonal, nonnegativity and the triangle inequality.
    pub fn new(labels: Vec<String>, d: Vec<f64>) -> Result<Self, GhError> {
        let n = labels.len();
        if n == 0 || d.len() != n * n {
            return Err(GhError::InvalidSpace(format!(
                "{n} labels need a nonempty {n}x{n} matrix, got {} entries",
                d.len()
            )));
        }
        let at = |i: usize, j: usize| d[i * n + j];
        for i in 0..n {
            if at(i, i) != 0.0 {
                return Err(GhError::InvalidSpace(format!("D[{i}][{i}] = {} is not zero", at(i, i))));
            }
            for j in 0..n {
                let v = at(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(GhError::InvalidSpace(format!("D[{i}][{j}] = {v} is not a distance")));
                }
                if v != at(j, i) {
                    return Err(GhError::InvalidSpace(format!("D is not symmetric at ({i}, {j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if at(i, k) > at(i, j) + at(j, k) + TRIANGLE_SLACK {
                        return Err(GhError::InvalidSpace(format!(
                            "triangle inequality fails for ({i}, {j}, {k})"
                        )));
                    }
                }
            }
        }
        Ok(Self { labels, d })
    }

    /// Labels default to `0, 1, ...`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GhError> {
        let labels = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(labels, rows.concat())
    }

    /// Builds the distance matrix from a point set and a metric.
    pub fn from_points<P>(labels: Vec<String>, points: &[P], metric: impl Fn(&P, &P) -> f64) -> Result<Self, GhError> {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = metric(&points[i], &points[j]);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self::new(labels, d)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.len() + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.d
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// Same space with points reordered: point `i` of the result is point
    /// `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self, GhError> {
        let n = self.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(GhError::InvalidArgument("not a permutation".into()));
        }
        let labels = order.iter().map(|&i| self.labels[i].clone()).collect();
        let d = (0..n * n).map(|k| self.dist(order[k / n], order[k % n])).collect();
        Self::new(labels, d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GhError> {
        serde_json::from_str(text).map_err(|e| GhError::InvalidSpace(e.to_string()))
    }
}

fn graph_metric(name: &str, n: usize, edges: &[(usize, usize)]) -> (String, FiniteMetricSpace) {
    let mut d = vec![f64::INFINITY; n * n];
    for i in 0..n {
        d[i * n + i] = 0.0;
    }
    for &(a, b) in edges {
        d[a * n + b] = 1.0;
        d[b * n + a] = 1.0;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i * n + k] + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    let labels = (0..n).map(|i| format!("v{i}")).collect();
    (name.to_string(), FiniteMetricSpace::new(labels, d).expect("graph metric is valid"))
}

/// Small named spaces (at most 6 points) used for sanity checks.
pub fn catalogue() -> Vec<(String, FiniteMetricSpace)> {
    let euclid = |p: &(f64, f64), q: &(f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
    let grid: Vec<(f64, f64)> = (0..6).map(|k| ((k % 3) as f64, (k / 3) as f64)).collect();
    let grid_labels = grid.iter().map(|p| format!("({},{})", p.0, p.1)).collect();
    vec![
        graph_metric("point", 1, &[]),
        graph_metric("segment", 2, &[(0, 1)]),
        graph_metric("triangle", 3, &[(0, 1), (1, 2), (0, 2)]),
        graph_metric("path-3", 3, &[(0, 1), (1, 2)]),
        graph_metric("cycle-4", 4, &[(0, 1), (1, 2), (2, 3), (3, 0)]),
        graph_metric("star-4", 4, &[(0, 1), (0, 2), (0, 3)]),
        ("circle-5".into(), super::circle_sample(5)),
        ("circle-6".into(), super::circle_sample(6)),
        (
            "grid-2x3".into(),
            FiniteMetricSpace::from_points(grid_labels, &grid, euclid).expect("euclidean grid"),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(FiniteMetricSpace::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::from_rows(&[vec![1.0]]).is_err());
        assert!(FiniteMetricSpace::from_rows(&[
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0]
        ])
        .is_err());
        assert!(FiniteMetricSpace::new(vec![], vec![]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let (_, s) = graph_metric("c", 4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let text = s.to_json();
        assert!(text.contains("\"D\"") && text.contains("\"schema\": 1"));
        assert_eq!(FiniteMetricSpace::from_json(&text).unwrap(), s);
    }

    #[test]
    fn catalogue_is_small_and_valid() {
        let cat = catalogue();
        assert!(cat.iter().all(|(_, s)| s.len() <= 6));
        let (_, cycle) = &cat[4];
        assert_eq!(cycle.dist(0, 2), 2.0);
    }
}
