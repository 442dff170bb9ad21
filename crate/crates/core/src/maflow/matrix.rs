//! Pointwise matrix inequalities behind the second-order estimates.

use nalgebra::DMatrix;
use num::complex::Complex64;
use serde::Serialize;

use super::FlowError;

/// Constant in `‖A - Id‖² ≤ C(n)·ε` whenever `tr A ≤ n + ε` and `det A ≥ 1 - ε`.
///
/// With `S_k` the normalized elementary symmetric functions of the eigenvalues
/// (`S_1` the mean, `S_n = det A`),
///
/// ```text
/// ‖A - Id‖² = Σ(λ_i - 1)² = n²S_1² - 2nS_1 - n(n-1)S_2 + n.
/// ```
///
/// The right side is a convex parabola in `S_1` and decreasing in `S_2`. The
/// hypotheses plus Maclaurin give `1 - ε ≤ S_n^{1/n} ≤ √S_2 ≤ S_1 ≤ 1 + ε/n`,
/// so `S_2 ≥ (1 - ε)²` and the parabola is maximal at an endpoint of
/// `[1 - ε, 1 + ε/n]`:
///
/// ```text
/// S_1 = 1 + ε/n:  2(n² - 1)ε + (1 - n² + n)ε²
/// S_1 = 1 - ε:    nε²
/// ```
///
/// For `n ≥ 2` the ε² coefficient of the first is negative and `nε² < 2(n²-1)ε`,
/// giving `C = 2(n² - 1)`. For `n = 1` both endpoints give `ε² ≤ ε`, so `C = 1`.
pub fn gap_constant(n: usize) -> f64 {
    let n = n as f64;
    (2.0 * (n * n - 1.0)).max(1.0)
}

/// The sharper bound from the derivation above, before dropping ε² terms.
pub fn gap_bound_exact(n: usize, eps: f64) -> f64 {
    let nf = n as f64;
    let upper = 2.0 * (nf * nf - 1.0) * eps + (1.0 - nf * nf + nf) * eps * eps;
    upper.max(nf * eps * eps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapCheck {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    /// `S_1, S_2^{1/2}, ..., S_n^{1/n}`.
    pub maclaurin: Vec<f64>,
    pub chain_holds: bool,
    pub lhs: f64,
    pub bound: f64,
    pub pass: bool,
}

const REL_TOL: f64 = 1e-12;

fn hermitian_eigenvalues(a: &DMatrix<Complex64>) -> Result<Vec<f64>, FlowError> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(FlowError::InvalidMatrix("matrix must be square and nonempty".into()));
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let skew = (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(skew <= 1e-12 * scale) {
        return Err(FlowError::InvalidMatrix(format!("matrix is not Hermitian (defect {skew:e})")));
    }
    let mut ev: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Elementary symmetric functions `e_0..=e_n`.
fn elementary(ev: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; ev.len() + 1];
    e[0] = 1.0;
    for (i, &x) in ev.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn matrix_gap_check(a: &DMatrix<Complex64>, eps: f64) -> Result<GapCheck, FlowError> {
    let ev = hermitian_eigenvalues(a)?;
    let n = ev.len();
    let nf = n as f64;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FlowError::InvalidMatrix(format!("ε = {eps} outside (0, 1)")));
    }
    if ev[0] <= 0.0 {
        return Err(FlowError::InvalidMatrix("matrix is not positive definite".into()));
    }
    let e = elementary(&ev);
    let s: Vec<f64> = (0..=n).map(|k| e[k] / binomial(n, k)).collect();
    let trace = e[1];
    let det = e[n];
    if trace > (nf + eps) * (1.0 + REL_TOL) || det < (1.0 - eps) * (1.0 - REL_TOL) {
        return Err(FlowError::InvalidMatrix(format!(
            "need tr A <= n + ε and det A >= 1 - ε (tr {trace}, det {det})"
        )));
    }
    let maclaurin: Vec<f64> = (1..=n).map(|k| s[k].powf(1.0 / k as f64)).collect();
    let slack = |x: f64| x * REL_TOL + 1e-15;
    let mut chain_holds = 1.0 + eps / nf + slack(1.0) >= maclaurin[0]
        && maclaurin[n - 1] + slack(1.0) >= 1.0 - eps;
    for w in maclaurin.windows(2) {
        chain_holds &= w[0] + slack(w[0]) >= w[1];
    }
    let s2 = if n >= 2 { s[2] } else { s[1] * s[1] };
    let lhs = nf * nf * s[1] * s[1] - 2.0 * nf * s[1] - nf * (nf - 1.0) * s2 + nf;
    let bound = gap_constant(n) * eps;
    let pass = chain_holds && lhs <= bound + slack(nf * nf);
    Ok(GapCheck {
        n,
        eigenvalues: ev,
        maclaurin,
        chain_holds,
        lhs,
        bound,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceCheck {
    pub n: usize,
    /// Eigenvalues of `B⁻¹A`.
    pub eigenvalues: Vec<f64>,
    /// `tr_B A`.
    pub trace: f64,
    /// `(tr_A B)^{n-1}/(n-1)! · det A / det B`.
    pub trace_bound: f64,
    pub min_eig: f64,
    /// `det(B⁻¹A)·(n-1)^{n-1} / (tr_B A)^{n-1}`.
    pub min_eig_bound: f64,
    pub pass: bool,
}

/// Checks `tr_B A ≤ (tr_A B)^{n-1}/(n-1)!·det A/det B` and the resulting
/// lower bound on the smallest eigenvalue of `B⁻¹A`.
pub fn trace_inequalities_check(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<TraceCheck, FlowError> {
    if a.shape() != b.shape() {
        return Err(FlowError::InvalidMatrix("matrices differ in size".into()));
    }
    for (name, m) in [("A", a), ("B", b)] {
        if hermitian_eigenvalues(m)?[0] <= 0.0 {
            return Err(FlowError::InvalidMatrix(format!("{name} is not positive definite")));
        }
    }
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| FlowError::InvalidMatrix("B is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| FlowError::InvalidMatrix("B is singular".into()))?;
    let c = &l_inv * a * l_inv.adjoint();
    let c = (&c + c.adjoint()).scale(0.5);
    let mu = hermitian_eigenvalues(&c)?;
    let n = mu.len();
    let nm1 = (n - 1) as i32;
    let trace: f64 = mu.iter().sum();
    let inv_trace: f64 = mu.iter().map(|m| 1.0 / m).sum();
    let det: f64 = mu.iter().product();
    let factorial: f64 = (1..n).map(|k| k as f64).product();
    let trace_bound = inv_trace.powi(nm1) / factorial * det;
    let min_eig = mu[0];
    let min_eig_bound = det * ((n - 1) as f64).powi(nm1) / trace.powi(nm1);
    let pass = trace <= trace_bound * (1.0 + 1e-10) && min_eig >= min_eig_bound * (1.0 - 1e-10);
    Ok(TraceCheck {
        n,
        eigenvalues: mu,
        trace,
        trace_bound,
        min_eig,
        min_eig_bound,
        pass,
    })
}

/// Real diagonal matrix helper.
pub fn diag(values: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            Complex64::new(values[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_no_gap() {
        for n in 1..=4 {
            let r = matrix_gap_check(&diag(&vec![1.0; n]), 0.3).unwrap();
            assert!(r.lhs.abs() < 1e-14 && r.pass && r.chain_holds);
        }
    }

    #[test]
    fn one_by_one_case() {
        let eps = 0.2;
        let r = matrix_gap_check(&diag(&[1.0 - eps]), eps).unwrap();
        assert!((r.lhs - eps * eps).abs() < 1e-15);
        assert!(r.bound >= eps * eps);
        assert!(r.pass);
    }

    #[test]
    fn two_by_two_diagonal_perturbation() {
        let d = 0.01;
        let a = diag(&[1.0 + d, 1.0 - d]);
        let eps = d * d;
        let r = matrix_gap_check(&a, eps).unwrap();
        assert!((r.lhs - 2.0 * d * d).abs() < 1e-14);
        assert!(r.pass);
    }

    #[test]
    fn preconditions_enforced() {
        assert!(matrix_gap_check(&diag(&[2.0, 1.0]), 0.1).is_err());
        assert!(matrix_gap_check(&diag(&[1.0, 1.0]), 1.5).is_err());
        assert!(matrix_gap_check(&diag(&[-1.0, 1.0]), 0.5).is_err());
    }

    #[test]
    fn trace_inequality_hand_case() {
        let r = trace_inequalities_check(&diag(&[2.0, 0.5]), &diag(&[1.0, 1.0])).unwrap();
        assert!((r.trace - 2.5).abs() < 1e-14);
        assert!((r.trace_bound - 2.5).abs() < 1e-14);
        assert!(r.pass);
    }

    #[test]
    fn trace_inequality_equal_matrices() {
        let a = diag(&[3.0, 2.0, 1.0]);
        let r = trace_inequalities_check(&a, &a).unwrap();
        assert!((r.trace - 3.0).abs() < 1e-12);
        assert!((r.trace_bound - 4.5).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn gap_constant_dominates_exact_bound() {
        for n in 1..=5 {
            for i in 1..100 {
                let eps = i as f64 / 100.0;
                assert!(gap_bound_exact(n, eps) <= gap_constant(n) * eps + 1e-15);
            }
        }
    }
}
