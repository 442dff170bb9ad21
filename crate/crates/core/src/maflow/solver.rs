use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::diagnostics::{DiagnosticsRecord, DiagnosticsSeries};
use super::spectral::{Herm, HermitianField, Spectral};
use super::FlowError;

/// Flat reference data on the torus: constant metric `g0` and volume form
/// `Ω = det(g0)·e^f`.
#[derive(Debug)]
pub struct TorusBackground {
    spectral: Spectral,
    g0: Herm,
    twist: Vec<f64>,
    log_omega: Vec<f64>,
    /// Admissibility floor on the smallest eigenvalue of `g0 + H(φ)`.
    pub eps_pos: f64,
}

/// One term `cos_amp·cos(2π k·x) + sin_amp·sin(2π k·x)` of a twist field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

pub const DEFAULT_EPS_POS: f64 = 1e-8;

impl TorusBackground {
    pub fn new(n: usize, res: usize, g0: Herm) -> Result<Self, FlowError> {
        if !(n == 1 || n == 2) {
            return Err(FlowError::InvalidBackground(format!(
                "complex dimension {n} not supported"
            )));
        }
        if res < 4 || !res.is_power_of_two() {
            return Err(FlowError::InvalidBackground(format!(
                "grid size {res} must be a power of two >= 4"
            )));
        }
        if g0.n != n {
            return Err(FlowError::InvalidBackground("g0 size does not match n".into()));
        }
        let (lo, _) = g0.eigen_range();
        if !(lo > 0.0) {
            return Err(FlowError::InvalidBackground(format!(
                "g0 is not positive definite (min eigenvalue {lo})"
            )));
        }
        let spectral = Spectral::new(n, res);
        let len = spectral.len();
        Ok(Self {
            spectral,
            g0,
            twist: vec![0.0; len],
            log_omega: vec![g0.det().ln(); len],
            eps_pos: DEFAULT_EPS_POS,
        })
    }

    /// Replaces `f` in `Ω = det(g0)·e^f`.
    pub fn with_twist(mut self, twist: Vec<f64>) -> Result<Self, FlowError> {
        if twist.len() != self.spectral.len() || twist.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::InvalidBackground("twist field has wrong size or non-finite values".into()));
        }
        let base = self.g0.det().ln();
        self.log_omega = twist.iter().map(|f| base + f).collect();
        self.twist = twist;
        Ok(self)
    }

    pub fn with_twist_modes(self, terms: &[FourierTerm]) -> Result<Self, FlowError> {
        let dims = 2 * self.spectral.n();
        if terms.iter().any(|t| t.k.len() != dims) {
            return Err(FlowError::InvalidBackground(format!(
                "twist wave vectors must have {dims} components"
            )));
        }
        let twist = self.spectral.sample(|x| fourier_sum(terms, x));
        self.with_twist(twist)
    }

    pub fn with_eps_pos(mut self, eps_pos: f64) -> Self {
        self.eps_pos = eps_pos;
        self
    }

    pub fn n(&self) -> usize {
        self.spectral.n()
    }

    pub fn res(&self) -> usize {
        self.spectral.res()
    }

    pub fn g0(&self) -> &Herm {
        &self.g0
    }

    pub fn twist(&self) -> &[f64] {
        &self.twist
    }

    /// Grid mean of `f`; nonzero means `∫Ω ≠ ∫ω₀ⁿ`.
    pub fn twist_mean(&self) -> f64 {
        self.twist.iter().sum::<f64>() / self.twist.len() as f64
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.spectral.sample(f)
    }

    pub fn complex_hessian(&self, phi: &[f64]) -> HermitianField {
        self.spectral.complex_hessian(phi)
    }

    /// `g̃ = g0 + H(φ)` with the admissibility check.
    fn metric(&self, phi: &[f64]) -> Result<HermitianField, FlowError> {
        let metric = self.spectral.complex_hessian(phi).shifted(&self.g0);
        self.check_admissible(&metric)?;
        Ok(metric)
    }

    fn check_admissible(&self, metric: &HermitianField) -> Result<(), FlowError> {
        let mut worst = (f64::INFINITY, 0);
        for i in 0..metric.len() {
            let (lo, _) = metric.at(i).eigen_range();
            if !(lo >= worst.0) {
                worst = (lo, i);
            }
        }
        if !(worst.0 >= self.eps_pos) {
            return Err(FlowError::Admissibility {
                index: worst.1,
                coords: self.spectral.coords(worst.1),
                min_eig: worst.0,
            });
        }
        Ok(())
    }

    /// Explicit step bound `0.25·h²·λ_min(g̃)/n`.
    pub fn cfl(&self, min_eig: f64) -> f64 {
        let h = self.spectral.spacing();
        0.25 * h * h * min_eig / self.n() as f64
    }
}

pub(crate) fn fourier_sum(terms: &[FourierTerm], x: &[f64]) -> f64 {
    terms
        .iter()
        .map(|t| {
            let phase = 2.0 * PI * t.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>();
            t.cos * phase.cos() + t.sin * phase.sin()
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    /// `φ̇ = log(det g̃ / Ω)`.
    Unnormalized,
    /// `φ̇ = log(det g̃ / Ω) - φ`.
    Normalized,
}

/// Potential at time `t` together with `φ̇` and `g̃` evaluated at it.
#[derive(Clone, Debug)]
pub struct FlowState {
    t: f64,
    phi: Vec<f64>,
    mode: FlowMode,
    phidot: Vec<f64>,
    metric: HermitianField,
    min_eig: f64,
}

fn evaluate(
    bg: &TorusBackground,
    phi: &[f64],
    mode: FlowMode,
) -> Result<(Vec<f64>, HermitianField), FlowError> {
    let metric = bg.metric(phi)?;
    let rhs = (0..phi.len())
        .map(|i| {
            let v = metric.at(i).det().ln() - bg.log_omega[i];
            match mode {
                FlowMode::Unnormalized => v,
                FlowMode::Normalized => v - phi[i],
            }
        })
        .collect();
    Ok((rhs, metric))
}

impl FlowState {
    pub fn new(bg: &TorusBackground, phi: Vec<f64>, t: f64, mode: FlowMode) -> Result<Self, FlowError> {
        if phi.len() != bg.spectral.len() {
            return Err(FlowError::InvalidBackground(format!(
                "potential has {} values, grid has {}",
                phi.len(),
                bg.spectral.len()
            )));
        }
        let (phidot, metric) = evaluate(bg, &phi, mode)?;
        let min_eig = (0..metric.len())
            .map(|i| metric.at(i).eigen_range().0)
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            t,
            phi,
            mode,
            phidot,
            metric,
            min_eig,
        })
    }

    pub fn zero(bg: &TorusBackground, mode: FlowMode) -> Result<Self, FlowError> {
        Self::new(bg, vec![0.0; bg.spectral.len()], 0.0, mode)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn into_phi(self) -> Vec<f64> {
        self.phi
    }

    pub fn mode(&self) -> FlowMode {
        self.mode
    }

    pub fn phidot(&self) -> &[f64] {
        &self.phidot
    }

    /// `g̃ = g0 + H(φ)` on the grid.
    pub fn metric(&self) -> &HermitianField {
        &self.metric
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    pub fn sup_phidot(&self) -> f64 {
        sup_abs(&self.phidot)
    }

    pub fn sup_phi(&self) -> f64 {
        sup_abs(&self.phi)
    }
}

pub(crate) fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Right-hand side of the parabolic Monge-Ampère equation at `state`.
pub fn ma_rhs(bg: &TorusBackground, state: &FlowState) -> Result<Vec<f64>, FlowError> {
    evaluate(bg, &state.phi, state.mode).map(|(rhs, _)| rhs)
}

/// Same as [`ma_rhs`] for a bare potential.
pub fn ma_rhs_field(bg: &TorusBackground, phi: &[f64], mode: FlowMode) -> Result<Vec<f64>, FlowError> {
    evaluate(bg, phi, mode).map(|(rhs, _)| rhs)
}

/// `Ric_{jk̄} = -∂_j∂̄_k log det g̃` and `R = tr_{g̃} Ric`.
pub fn ricci_and_scalar(
    bg: &TorusBackground,
    state: &FlowState,
) -> Result<(HermitianField, Vec<f64>), FlowError> {
    bg.check_admissible(&state.metric)?;
    let log_det: Vec<f64> = (0..state.metric.len())
        .map(|i| state.metric.at(i).det().ln())
        .collect();
    let ricci = bg.spectral.complex_hessian(&log_det).negated();
    let scalar = (0..ricci.len())
        .map(|i| state.metric.at(i).trace_inv_times(&ricci.at(i)))
        .collect();
    Ok((ricci, scalar))
}

/// Snapshot of the quantities tracked by the a priori estimates.
pub fn diagnostics(bg: &TorusBackground, state: &FlowState) -> Result<DiagnosticsRecord, FlowError> {
    let (_, scalar) = ricci_and_scalar(bg, state)?;
    let len = state.phi.len() as f64;
    let mean = state.phi.iter().sum::<f64>() / len;
    let energy = (state.phi.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len).sqrt();
    let mut max_eig = f64::NEG_INFINITY;
    let mut sup_trace = f64::NEG_INFINITY;
    let mut volume = 0.0;
    for i in 0..state.metric.len() {
        let g = state.metric.at(i);
        max_eig = max_eig.max(g.eigen_range().1);
        sup_trace = sup_trace.max(bg.g0.trace_inv_times(&g));
        volume += g.det();
    }
    Ok(DiagnosticsRecord {
        t: state.t,
        sup_phi: state.sup_phi(),
        sup_phidot: state.sup_phidot(),
        min_eig: state.min_eig,
        inf_r: scalar.iter().copied().fold(f64::INFINITY, f64::min),
        sup_r: scalar.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        sup_trace,
        volume: volume / len,
        energy,
        max_eig,
    })
}

const MAX_HALVINGS: u32 = 8;

fn rk4(bg: &TorusBackground, state: &FlowState, dt: f64) -> Result<FlowState, FlowError> {
    let mode = state.mode;
    let axpy = |k: &[f64], h: f64| -> Vec<f64> {
        state.phi.iter().zip(k).map(|(p, k)| p + h * k).collect()
    };
    let k1 = &state.phidot;
    let (k2, _) = evaluate(bg, &axpy(k1, 0.5 * dt), mode)?;
    let (k3, _) = evaluate(bg, &axpy(&k2, 0.5 * dt), mode)?;
    let (k4, _) = evaluate(bg, &axpy(&k3, dt), mode)?;
    let phi: Vec<f64> = (0..state.phi.len())
        .map(|i| state.phi[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    FlowState::new(bg, phi, state.t + dt, mode)
}

/// One classical Runge-Kutta step. On loss of positivity the step is retried
/// with `dt` halved, at most 8 times; the returned state records the time
/// step actually taken.
pub fn step(bg: &TorusBackground, state: &FlowState, dt: f64) -> Result<FlowState, FlowError> {
    let bound = bg.cfl(state.min_eig);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-9) {
        return Err(FlowError::TimeStep { dt, bound });
    }
    let mut trial = dt;
    let mut last_err = None;
    for _ in 0..=MAX_HALVINGS {
        match rk4(bg, state, trial) {
            Ok(next) => return Ok(next),
            Err(err @ FlowError::Admissibility { .. }) => {
                last_err = Some(err);
                trial *= 0.5;
            }
            Err(other) => return Err(other),
        }
    }
    let snapshot = diagnostics(bg, state).ok().map(Box::new);
    Err(FlowError::StepFailed {
        t: state.t,
        dt,
        cause: Box::new(last_err.expect("at least one failed attempt")),
        snapshot,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: FlowMode,
    /// Fixed step; `None` uses the adaptive bound every step. A fixed step is
    /// still capped by the bound.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub record_every: usize,
    /// Abort when the high-mode share of the spectrum exceeds this.
    pub tail_tolerance: f64,
    /// Normalized-mode convergence threshold on `sup|φ̇|`.
    pub converge_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: FlowMode::Unnormalized,
            dt: None,
            t_end: 1.0,
            record_every: 100,
            tail_tolerance: 1e-6,
            converge_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub state: FlowState,
    pub series: DiagnosticsSeries,
    pub steps: usize,
    /// Normalized runs that reached `sup|φ̇| < converge_tol`.
    pub converged: bool,
}

/// Integrates from `phi0` at `t = 0` to `config.t_end`.
pub fn run(bg: &TorusBackground, phi0: Vec<f64>, config: &RunConfig) -> Result<RunResult, FlowError> {
    if !(config.t_end >= 0.0) || config.record_every == 0 || config.dt.is_some_and(|d| !(d > 0.0)) {
        return Err(FlowError::InvalidConfig(
            "t_end must be >= 0, record_every >= 1, dt > 0".into(),
        ));
    }
    let mut state = FlowState::new(bg, phi0, 0.0, config.mode)?;
    let mut series = DiagnosticsSeries::new(config.mode);
    let record = |state: &FlowState, series: &mut DiagnosticsSeries| -> Result<(), FlowError> {
        let fraction = bg.spectral.tail_fraction(&state.phi);
        if fraction > config.tail_tolerance {
            return Err(FlowError::SpectralTail { t: state.t, fraction });
        }
        series.push(diagnostics(bg, state)?);
        Ok(())
    };
    record(&state, &mut series)?;
    let mut steps = 0;
    let mut converged = false;
    let end_slack = 1e-12 * config.t_end.max(1.0);
    while state.t < config.t_end - end_slack {
        let bound = bg.cfl(state.min_eig);
        let dt = config
            .dt
            .map_or(bound, |d| d.min(bound))
            .min(config.t_end - state.t);
        state = step(bg, &state, dt)?;
        steps += 1;
        converged = config.mode == FlowMode::Normalized && state.sup_phidot() < config.converge_tol;
        let at_end = state.t >= config.t_end - end_slack;
        if steps % config.record_every == 0 || at_end || converged {
            record(&state, &mut series)?;
        }
        if converged {
            break;
        }
    }
    Ok(RunResult {
        state,
        series,
        steps,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::complex::Complex64;

    fn bg1(res: usize, g: f64) -> TorusBackground {
        TorusBackground::new(1, res, Herm::scalar(g)).unwrap()
    }

    #[test]
    fn zero_potential_is_stationary() {
        let bg = bg1(16, 0.5);
        let state = FlowState::zero(&bg, FlowMode::Unnormalized).unwrap();
        assert!(ma_rhs(&bg, &state).unwrap().iter().all(|v| *v == 0.0));
        let dt = bg.cfl(state.min_eig());
        let mut s = state;
        for _ in 0..10 {
            s = step(&bg, &s, dt).unwrap();
        }
        assert!(s.phi().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rhs_matches_closed_form_in_one_dimension() {
        // g0 = 1/2, φ = A cos 2πx: det g̃ / det g0 = 1 - 2π²A cos 2πx.
        let bg = bg1(32, 0.5);
        let amp = 0.02;
        let phi = bg.sample(|x| amp * (2.0 * PI * x[0]).cos());
        let rhs = ma_rhs_field(&bg, &phi, FlowMode::Unnormalized).unwrap();
        let expect = bg.sample(|x| (1.0 - 2.0 * PI * PI * amp * (2.0 * PI * x[0]).cos()).ln());
        let err = rhs.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn constant_potential_in_normalized_mode() {
        let bg = TorusBackground::new(2, 8, Herm::two(1.0, Complex64::new(0.1, 0.2), 2.0)).unwrap();
        let phi = vec![0.7; bg.spectral().len()];
        let rhs = ma_rhs_field(&bg, &phi, FlowMode::Normalized).unwrap();
        assert!(rhs.iter().all(|v| (v + 0.7).abs() < 1e-14));
    }

    #[test]
    fn admissibility_violation_reports_location() {
        let bg = bg1(16, 0.5);
        // H = -π²A cos: with A = 0.1 the metric goes negative at x = 0.
        let phi = bg.sample(|x| 0.1 * (2.0 * PI * x[0]).cos());
        match FlowState::new(&bg, phi, 0.0, FlowMode::Unnormalized) {
            Err(FlowError::Admissibility { coords, min_eig, .. }) => {
                assert_eq!(coords[0], 0.0);
                assert!(min_eig < 0.0);
            }
            other => panic!("expected admissibility error, got {other:?}"),
        }
    }

    #[test]
    fn step_rejects_dt_above_bound() {
        let bg = bg1(16, 1.0);
        let s = FlowState::zero(&bg, FlowMode::Unnormalized).unwrap();
        let bound = bg.cfl(s.min_eig());
        assert!(matches!(step(&bg, &s, 2.0 * bound), Err(FlowError::TimeStep { .. })));
    }

    #[test]
    fn normalized_constant_decays_exponentially() {
        let bg = bg1(8, 1.0);
        let config = RunConfig {
            mode: FlowMode::Normalized,
            t_end: 0.5,
            record_every: 50,
            ..RunConfig::default()
        };
        let out = run(&bg, vec![1.0; 64], &config).unwrap();
        let expect = (-out.state.t()).exp();
        assert!(out.state.phi().iter().all(|v| (v - expect).abs() < 1e-12));
    }

    #[test]
    fn scalar_curvature_of_flat_metric_vanishes() {
        let bg = bg1(16, 1.0);
        let s = FlowState::zero(&bg, FlowMode::Unnormalized).unwrap();
        let (ric, r) = ricci_and_scalar(&bg, &s).unwrap();
        assert!(ric.h11.iter().all(|v| *v == 0.0));
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tail_monitor_aborts_rough_data() {
        let bg = bg1(32, 1.0);
        let phi = bg.sample(|x| 1e-5 * (2.0 * PI * 15.0 * x[0]).cos() + 1e-3 * (2.0 * PI * x[1]).cos());
        let config = RunConfig {
            t_end: 1e-5,
            ..RunConfig::default()
        };
        assert!(matches!(run(&bg, phi, &config), Err(FlowError::SpectralTail { .. })));
    }
}
