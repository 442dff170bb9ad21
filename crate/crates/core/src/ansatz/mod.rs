//! Homogeneous and product reductions of the flow.
//!
//! On `CP¹`, `CP¹×CP¹` and `E×C` (E elliptic, C of genus ≥ 2) the flow
//! preserves the product of constant-curvature metrics, so it reduces to a
//! diagonal affine ODE for the scale factors:
//!
//! ```text
//! x_i' = c_i            (unnormalized)
//! x_i' = c_i - x_i      (normalized)
//! ```
//!
//! with `c = -2` for a round sphere factor (Ric(ω_FS) = 2ω_FS), `0` for a flat
//! factor and `+2` for a hyperbolic factor (Ric(ω_hyp) = -2ω_hyp).

mod output;

use std::fmt;
use std::str::FromStr;

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohomology::{
    self, format_rational, qi, to_f64, ClassVector, CohomologyError, ExistenceTime, ManifoldModel,
    Rational,
};
use crate::maflow::FlowMode;

pub use output::{trajectory_csv, trajectory_json, TRAJECTORY_SCHEMA};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnsatzError {
    #[error("integration reaches extinction at t = {t_ext:.12} (requested t_end = {t_end})")]
    PastExtinction { t_ext: f64, t_end: f64 },
    #[error("invalid ansatz model: {0}")]
    InvalidModel(String),
    #[error("operation needs a {expected} model, got {got}")]
    WrongKind { expected: String, got: String },
    #[error("invalid step size {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzKind {
    RoundP1,
    ProductP1P1,
    ProductEC,
}

impl AnsatzKind {
    pub fn scale_count(self) -> usize {
        match self {
            AnsatzKind::RoundP1 => 1,
            _ => 2,
        }
    }

    /// Column names of the scale factors.
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            AnsatzKind::RoundP1 => &["lambda"],
            AnsatzKind::ProductP1P1 => &["lambda1", "lambda2"],
            AnsatzKind::ProductEC => &["a", "b"],
        }
    }

    /// `-Ric` of each unit factor, in units of that factor.
    fn forcing(self) -> &'static [i64] {
        match self {
            AnsatzKind::RoundP1 => &[-2],
            AnsatzKind::ProductP1P1 => &[-2, -2],
            AnsatzKind::ProductEC => &[0, 2],
        }
    }

    /// The matching cohomology model; its coordinates are the scale factors.
    pub fn cohomology_model(self) -> ManifoldModel {
        match self {
            AnsatzKind::RoundP1 => cohomology::riemann_surface(0),
            AnsatzKind::ProductP1P1 => cohomology::product_p1p1(),
            AnsatzKind::ProductEC => cohomology::product_ec(),
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnsatzKind::RoundP1 => "round-p1",
            AnsatzKind::ProductP1P1 => "product-p1p1",
            AnsatzKind::ProductEC => "product-ec",
        })
    }
}

impl FromStr for AnsatzKind {
    type Err = AnsatzError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "round-p1" | "roundp1" | "p1" => Ok(AnsatzKind::RoundP1),
            "product-p1p1" | "productp1p1" | "p1xp1" => Ok(AnsatzKind::ProductP1P1),
            "product-ec" | "productec" | "ec" => Ok(AnsatzKind::ProductEC),
            _ => Err(AnsatzError::InvalidModel(format!("unknown ansatz kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzModel {
    pub kind: AnsatzKind,
    #[serde(with = "cohomology_serde")]
    pub scales: Vec<Rational>,
    pub mode: FlowMode,
}

mod cohomology_serde {
    use super::Rational;
    use crate::cohomology::{format_rational, parse_rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl AnsatzModel {
    pub fn new(kind: AnsatzKind, scales: Vec<Rational>, mode: FlowMode) -> Result<Self, AnsatzError> {
        if scales.len() != kind.scale_count() {
            return Err(AnsatzError::InvalidModel(format!(
                "{kind} takes {} scale(s), got {}",
                kind.scale_count(),
                scales.len()
            )));
        }
        if let Some(bad) = scales.iter().find(|s| !s.is_positive()) {
            return Err(AnsatzError::InvalidModel(format!(
                "scales must be positive, got {}",
                format_rational(bad)
            )));
        }
        Ok(Self { kind, scales, mode })
    }

    pub fn round_p1(lambda: Rational, mode: FlowMode) -> Result<Self, AnsatzError> {
        Self::new(AnsatzKind::RoundP1, vec![lambda], mode)
    }

    pub fn product_p1p1(l1: Rational, l2: Rational, mode: FlowMode) -> Result<Self, AnsatzError> {
        Self::new(AnsatzKind::ProductP1P1, vec![l1, l2], mode)
    }

    pub fn product_ec(lambda_e: Rational, lambda_c: Rational, mode: FlowMode) -> Result<Self, AnsatzError> {
        Self::new(AnsatzKind::ProductEC, vec![lambda_e, lambda_c], mode)
    }

    pub fn initial(&self) -> Vec<f64> {
        self.scales.iter().map(to_f64).collect()
    }

    pub fn class(&self) -> ClassVector {
        ClassVector::new(self.scales.clone())
    }
}

/// Reduced ODE `x_i' = c_i - damping·x_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OdeSystem {
    pub labels: Vec<String>,
    #[serde(with = "cohomology_serde")]
    pub forcing: Vec<Rational>,
    /// 0 (unnormalized) or 1 (normalized).
    pub damping: i64,
}

impl OdeSystem {
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        self.forcing
            .iter()
            .zip(x)
            .map(|(c, xi)| to_f64(c) - self.damping as f64 * xi)
            .collect()
    }
}

impl fmt::Display for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (label, c)) in self.labels.iter().zip(&self.forcing).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match (self.damping, c.is_zero()) {
                (0, _) => write!(f, "{label}' = {}", format_rational(c))?,
                (_, true) => write!(f, "{label}' = -{label}")?,
                (_, false) => write!(f, "{label}' = {} - {label}", format_rational(c))?,
            }
        }
        Ok(())
    }
}

pub fn reduce(model: &AnsatzModel) -> OdeSystem {
    OdeSystem {
        labels: model.kind.labels().iter().map(|s| s.to_string()).collect(),
        forcing: model.kind.forcing().iter().map(|&c| qi(c)).collect(),
        damping: match model.mode {
            FlowMode::Unnormalized => 0,
            FlowMode::Normalized => 1,
        },
    }
}

/// Exact solution of the reduced ODE at time `t`.
pub fn closed_form(model: &AnsatzModel, t: f64) -> Vec<f64> {
    let ode = reduce(model);
    model
        .initial()
        .iter()
        .zip(&ode.forcing)
        .map(|(x0, c)| {
            let c = to_f64(c);
            match model.mode {
                FlowMode::Unnormalized => x0 + c * t,
                FlowMode::Normalized => c + (x0 - c) * (-t).exp(),
            }
        })
        .collect()
}

/// Normalized solution built from the unnormalized one by
/// `ω(t) = e^{-t}·ω̃(e^t - 1)`.
pub fn normalized_from_unnormalized(model: &AnsatzModel, t: f64) -> Vec<f64> {
    let plain = AnsatzModel {
        mode: FlowMode::Unnormalized,
        ..model.clone()
    };
    closed_form(&plain, t.exp_m1())
        .into_iter()
        .map(|x| x * (-t).exp())
        .collect()
}

/// Exact extinction time of the unnormalized flow: the first zero of
/// `x_i(0) + c_i t` over the factors with `c_i < 0`.
pub fn exact_extinction(model: &AnsatzModel) -> ExistenceTime {
    reduce(model)
        .forcing
        .iter()
        .zip(&model.scales)
        .filter(|(c, _)| c.is_negative())
        .map(|(c, x0)| x0 / -c)
        .min()
        .map_or(ExistenceTime::Infinite, ExistenceTime::Exact)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnsatzSample {
    pub t: f64,
    pub scales: Vec<f64>,
    /// `∫ωⁿ` in units of `(2π)ⁿ`.
    pub volume: f64,
    /// `√(smallest scale)`, proportional to the diameter of the shrinking factor.
    pub fiber_diameter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnsatzTrajectory {
    pub model: AnsatzModel,
    pub dt: f64,
    pub samples: Vec<AnsatzSample>,
}

impl AnsatzTrajectory {
    /// Largest deviation of the sampled scales from the closed form.
    pub fn max_closed_form_error(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| {
                closed_form(&self.model, s.t)
                    .into_iter()
                    .zip(&s.scales)
                    .map(|(a, b)| (a - b).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Keeps every `k`-th sample and the last one.
    pub fn thinned(&self, k: usize) -> Self {
        let k = k.max(1);
        let last = self.samples.len().saturating_sub(1);
        Self {
            model: self.model.clone(),
            dt: self.dt,
            samples: self
                .samples
                .iter()
                .enumerate()
                .filter(|(i, _)| i % k == 0 || *i == last)
                .map(|(_, s)| s.clone())
                .collect(),
        }
    }
}

fn sample(kind: AnsatzKind, t: f64, x: &[f64]) -> AnsatzSample {
    let volume = match kind {
        AnsatzKind::RoundP1 => x[0],
        _ => 2.0 * x[0] * x[1],
    };
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    AnsatzSample {
        t,
        scales: x.to_vec(),
        volume,
        fiber_diameter: min.max(0.0).sqrt(),
    }
}

fn rk4(ode: &OdeSystem, x: &[f64], h: f64) -> Vec<f64> {
    let shift = |k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k1 = ode.rhs(x);
    let k2 = ode.rhs(&shift(&k1, 0.5 * h));
    let k3 = ode.rhs(&shift(&k2, 0.5 * h));
    let k4 = ode.rhs(&shift(&k3, h));
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn min_scale(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Bisects `min_scale(rk4(x, h)) = 0` over `h ∈ [0, dt]` to width 1e-12.
fn bisect_extinction(ode: &OdeSystem, x: &[f64], dt: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, dt);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if min_scale(&rk4(ode, x, mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Integrates with classical RK4 at step `dt`, sampling every step.
pub fn integrate(model: &AnsatzModel, t_end: f64, dt: f64) -> Result<AnsatzTrajectory, AnsatzError> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(AnsatzError::InvalidStep(dt));
    }
    let ode = reduce(model);
    let mut x = model.initial();
    let mut t = 0.0;
    let mut samples = vec![sample(model.kind, t, &x)];
    let steps = (t_end / dt).ceil() as usize;
    for i in 0..steps {
        let h = (t_end - i as f64 * dt).min(dt);
        let next = rk4(&ode, &x, h);
        if min_scale(&next) <= 0.0 {
            return Err(AnsatzError::PastExtinction {
                t_ext: t + bisect_extinction(&ode, &x, h),
                t_end,
            });
        }
        x = next;
        t = if i + 1 == steps { t_end } else { (i + 1) as f64 * dt };
        samples.push(sample(model.kind, t, &x));
    }
    Ok(AnsatzTrajectory {
        model: model.clone(),
        dt,
        samples,
    })
}

/// Numerical extinction time: RK4 at step `dt` until the smallest scale
/// changes sign, then bisection to 1e-12. `None` when no factor has negative
/// forcing (the scales then stay positive forever).
pub fn extinction_time(model: &AnsatzModel, dt: f64) -> Result<Option<f64>, AnsatzError> {
    if !(dt > 0.0) {
        return Err(AnsatzError::InvalidStep(dt));
    }
    let ode = reduce(model);
    if !ode.forcing.iter().any(|c| c.is_negative()) {
        return Ok(None);
    }
    let mut x = model.initial();
    let mut t = 0.0;
    loop {
        let next = rk4(&ode, &x, dt);
        if min_scale(&next) <= 0.0 {
            return Ok(Some(t + bisect_extinction(&ode, &x, dt)));
        }
        x = next;
        t += dt;
    }
}

fn require_normalized_ec(model: &AnsatzModel) -> Result<(), AnsatzError> {
    if model.kind != AnsatzKind::ProductEC || model.mode != FlowMode::Normalized {
        return Err(AnsatzError::WrongKind {
            expected: "normalized product-ec".into(),
            got: format!("{:?} {}", model.mode, model.kind).to_lowercase(),
        });
    }
    Ok(())
}

/// `|Ric(bω_hyp) + bω_hyp| = |b - 2|` per unit `ω_hyp`, as `(t, residual)`.
pub fn einstein_residual(traj: &AnsatzTrajectory) -> Result<Vec<(f64, f64)>, AnsatzError> {
    require_normalized_ec(&traj.model)?;
    Ok(traj.samples.iter().map(|s| (s.t, (s.scales[1] - 2.0).abs())).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseSample {
    pub t: f64,
    /// `e^t·a(t)`; constant for the exact flow.
    pub fiber_rescaled: f64,
    pub base: f64,
    /// `|b(t) - 2|`.
    pub base_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseProfile {
    pub samples: Vec<CollapseSample>,
    /// Largest `|e^t a(t) - λ_E| / λ_E`.
    pub fiber_drift: f64,
    /// `min(λ_C, 2)`.
    pub schwarz_floor: f64,
    pub schwarz_holds: bool,
    /// `C` in `|b - 2| ≤ C e^{-t/8}`, namely `|λ_C - 2|`.
    pub base_constant: f64,
    pub base_rate_holds: bool,
}

pub fn collapse_profile(traj: &AnsatzTrajectory) -> Result<CollapseProfile, AnsatzError> {
    require_normalized_ec(&traj.model)?;
    let [le, lc] = [to_f64(&traj.model.scales[0]), to_f64(&traj.model.scales[1])];
    let samples: Vec<CollapseSample> = traj
        .samples
        .iter()
        .map(|s| CollapseSample {
            t: s.t,
            fiber_rescaled: s.t.exp() * s.scales[0],
            base: s.scales[1],
            base_deviation: (s.scales[1] - 2.0).abs(),
        })
        .collect();
    let fiber_drift = samples
        .iter()
        .map(|s| (s.fiber_rescaled - le).abs() / le)
        .fold(0.0, f64::max);
    let schwarz_floor = lc.min(2.0);
    let tol = 1e-12;
    let schwarz_holds = samples.iter().all(|s| s.base >= schwarz_floor - tol);
    let base_constant = (lc - 2.0).abs();
    let base_rate_holds = samples
        .iter()
        .all(|s| s.base_deviation <= base_constant * (-s.t / 8.0).exp() + tol);
    Ok(CollapseProfile {
        samples,
        fiber_drift,
        schwarz_floor,
        schwarz_holds,
        base_constant,
        base_rate_holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeCrossCheck {
    pub ansatz: ExistenceTime,
    /// Extinction found by integration, for comparison with the exact value.
    pub numeric: Option<f64>,
    pub cohomology: ExistenceTime,
    pub equal: bool,
}

/// Compares the extinction time of the unnormalized ODE with the cohomology
/// maximal existence time of the same initial class.
pub fn crosscheck_t(model: &AnsatzModel) -> Result<TimeCrossCheck, AnsatzError> {
    let plain = AnsatzModel {
        mode: FlowMode::Unnormalized,
        ..model.clone()
    };
    let ansatz = exact_extinction(&plain);
    let numeric = extinction_time(&plain, 1e-3)?;
    let cohomology = cohomology::max_existence_time(&model.kind.cohomology_model(), &model.class())?;
    let numeric_agrees = match (&ansatz, numeric) {
        (ExistenceTime::Exact(t), Some(v)) => (to_f64(t) - v).abs() < 1e-9,
        (ExistenceTime::Infinite, None) => true,
        _ => false,
    };
    Ok(TimeCrossCheck {
        equal: ansatz == cohomology && numeric_agrees,
        ansatz,
        numeric,
        cohomology,
    })
}
