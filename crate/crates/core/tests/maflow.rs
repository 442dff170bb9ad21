use std::f64::consts::PI;

use krflab::maflow::*;
use nalgebra::DMatrix;
use num::complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `∂_j∂̄_k cos(2π κ·x)` for a real wave vector `κ = (kx₁, ky₁, kx₂, ky₂)`.
fn plane_wave_hessian(kv: &[f64], x: &[f64], j: usize, k: usize) -> Complex64 {
    let theta = 2.0 * PI * kv.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let zj = c(kv[2 * j], -kv[2 * j + 1]);
    let zk = c(kv[2 * k], kv[2 * k + 1]);
    zj * zk * (-PI * PI * theta.cos())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hessian_matches_plane_wave(k in proptest::collection::vec(-3i64..=3, 4), amp in 0.1f64..2.0) {
        let sp = Spectral::new(2, 8);
        let kv: Vec<f64> = k.iter().map(|&v| v as f64).collect();
        let phi = sp.sample(|p| amp * (2.0 * PI * kv.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()).cos());
        let h = sp.complex_hessian(&phi);
        for idx in 0..sp.len() {
            let x = sp.coords(idx);
            let e11 = plane_wave_hessian(&kv, &x, 0, 0) * amp;
            let e22 = plane_wave_hessian(&kv, &x, 1, 1) * amp;
            let e12 = plane_wave_hessian(&kv, &x, 0, 1) * amp;
            prop_assert!((h.h11[idx] - e11.re).abs() < 1e-9);
            prop_assert!((h.h22[idx] - e22.re).abs() < 1e-9);
            prop_assert!((h.h12[idx] - e12).norm() < 1e-9);
        }
    }
}

#[test]
fn rhs_matches_pointwise_formula_in_two_dimensions() {
    let g0 = Herm::two(1.5, c(0.2, -0.1), 1.2);
    let twist = [FourierTerm { k: vec![0, 1, 1, 0], cos: 0.05, sin: -0.02 }];
    let bg = TorusBackground::new(2, 8, g0).unwrap().with_twist_modes(&twist).unwrap();
    let kv = [1.0, 0.0, 0.0, 1.0];
    let amp = 0.01;
    let phi = bg.sample(|p| amp * (2.0 * PI * (p[0] + p[3])).cos());
    let rhs = ma_rhs_field(&bg, &phi, FlowMode::Unnormalized).unwrap();
    let rhs_n = ma_rhs_field(&bg, &phi, FlowMode::Normalized).unwrap();
    let sp = bg.spectral();
    for idx in 0..sp.len() {
        let x = sp.coords(idx);
        let h11 = g0.a + amp * plane_wave_hessian(&kv, &x, 0, 0).re;
        let h22 = g0.d + amp * plane_wave_hessian(&kv, &x, 1, 1).re;
        let h12 = g0.b + amp * plane_wave_hessian(&kv, &x, 0, 1);
        let det = h11 * h22 - h12.norm_sqr();
        let f = 2.0 * PI * (x[1] + x[2]);
        let f = 0.05 * f.cos() - 0.02 * f.sin();
        let expect = det.ln() - g0.det().ln() - f;
        assert!((rhs[idx] - expect).abs() < 1e-12, "{idx}: {} vs {expect}", rhs[idx]);
        assert!((rhs_n[idx] - (expect - phi[idx])).abs() < 1e-12);
    }
}

#[test]
fn small_step_matches_forward_euler() {
    let bg = TorusBackground::new(1, 16, Herm::scalar(2.0)).unwrap();
    let phi = bg.sample(|p| 0.02 * (2.0 * PI * (p[0] + 2.0 * p[1])).sin());
    let state = FlowState::new(&bg, phi.clone(), 0.0, FlowMode::Unnormalized).unwrap();
    let dt = 1e-6;
    let next = step(&bg, &state, dt).unwrap();
    let euler: Vec<f64> = phi.iter().zip(state.phidot()).map(|(p, d)| p + dt * d).collect();
    // RK4 and Euler agree to O(dt²).
    assert!(max_abs_diff(next.phi(), &euler) < 1e-9);
    assert!((next.t() - dt).abs() < 1e-18);
}

#[test]
fn linearized_decay_rate_of_single_modes() {
    // φ = a·cos(2πk·x) on a flat torus with g0 = g·Id: φ̇ ≈ -π²|k|²φ/g.
    for (k, g) in [([1.0, 0.0], 1.0), ([1.0, 1.0], 2.0), ([2.0, 1.0], 4.0)] {
        let bg = TorusBackground::new(1, 16, Herm::scalar(g)).unwrap();
        let amp = 1e-6;
        let wave = |p: &[f64]| (2.0 * PI * (k[0] * p[0] + k[1] * p[1])).cos();
        let phi0 = bg.sample(|p| amp * wave(p));
        let t_end = 0.5 * g / (PI * PI * (k[0] * k[0] + k[1] * k[1]));
        let cfg = RunConfig { t_end, record_every: 1_000_000, ..RunConfig::default() };
        let out = run(&bg, phi0, &cfg).unwrap();
        let amp_end = out.state.phi().iter().zip(bg.sample(wave)).map(|(p, w)| p * w).sum::<f64>()
            / bg.sample(|p| wave(p).powi(2)).iter().sum::<f64>();
        let rate = -(amp_end / amp).ln() / t_end;
        let expect = PI * PI * (k[0] * k[0] + k[1] * k[1]) / g;
        assert!((rate - expect).abs() < 0.01 * expect, "k={k:?}: {rate} vs {expect}");
    }
}

#[test]
fn scalar_curvature_linearization() {
    // R ≈ -Δ_∂∂̄(Δ_∂∂̄ φ)/g² with Δ_∂∂̄ cos(2πk·x) = -π²|k|² cos.
    let g = 1.5;
    let bg = TorusBackground::new(1, 32, Herm::scalar(g)).unwrap();
    let amp = 1e-4;
    let lam = PI * PI * 5.0;
    let phi = bg.sample(|p| amp * (2.0 * PI * (p[0] + 2.0 * p[1])).cos());
    let state = FlowState::new(&bg, phi, 0.0, FlowMode::Unnormalized).unwrap();
    let (_, r) = ricci_and_scalar(&bg, &state).unwrap();
    let expect = bg.sample(|p| -lam * lam * amp * (2.0 * PI * (p[0] + 2.0 * p[1])).cos() / (g * g));
    let scale = expect.iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert!(max_abs_diff(&r, &expect) < 0.01 * scale);
}

#[test]
fn total_scalar_curvature_vanishes() {
    let cases = [
        (1, Herm::scalar(1.0), vec![FourierTerm { k: vec![1, 2], cos: 0.01, sin: 0.004 }]),
        (
            2,
            Herm::two(1.0, c(0.1, 0.05), 1.3),
            vec![
                FourierTerm { k: vec![1, 0, 0, 1], cos: 0.004, sin: 0.0 },
                FourierTerm { k: vec![0, 1, 1, 1], cos: 0.0, sin: 0.003 },
            ],
        ),
    ];
    for (n, g0, terms) in cases {
        let res = if n == 1 { 32 } else { 8 };
        let bg = TorusBackground::new(n, res, g0).unwrap();
        let phi = bg.sample(|p| {
            terms
                .iter()
                .map(|t| {
                    let th = 2.0 * PI * t.k.iter().zip(p).map(|(&k, x)| k as f64 * x).sum::<f64>();
                    t.cos * th.cos() + t.sin * th.sin()
                })
                .sum()
        });
        let state = FlowState::new(&bg, phi, 0.0, FlowMode::Unnormalized).unwrap();
        let (_, r) = ricci_and_scalar(&bg, &state).unwrap();
        let m = state.metric();
        let weighted: f64 = (0..r.len()).map(|i| r[i] * m.at(i).det()).sum::<f64>() / r.len() as f64;
        let size: f64 = (0..r.len()).map(|i| (r[i] * m.at(i).det()).abs()).sum::<f64>() / r.len() as f64;
        assert!(size > 0.0);
        assert!(weighted.abs() < 1e-9 * size.max(1.0), "n={n}: {weighted} vs {size}");
    }
}

#[test]
fn comparison_principle_orders_solutions() {
    let bg = TorusBackground::new(1, 16, Herm::scalar(1.0)).unwrap();
    let below = bg.sample(|p| 0.01 * (2.0 * PI * p[0]).cos());
    let above = bg.sample(|p| 0.01 * (2.0 * PI * p[0]).cos() + 0.003 * (1.0 + (2.0 * PI * p[1]).cos()));
    let cfg = RunConfig { t_end: 0.05, dt: Some(2e-4), record_every: 1000, ..RunConfig::default() };
    let lo = run(&bg, below.clone(), &cfg).unwrap();
    let hi = run(&bg, above, &cfg).unwrap();
    assert!(lo.state.phi().iter().zip(hi.state.phi()).all(|(a, b)| a <= b));
    // A constant shift is carried along unchanged.
    let shifted: Vec<f64> = below.iter().map(|v| v + 0.25).collect();
    let sh = run(&bg, shifted, &cfg).unwrap();
    let diff: Vec<f64> = sh.state.phi().iter().zip(lo.state.phi()).map(|(a, b)| a - b).collect();
    assert!(diff.iter().all(|d| (d - 0.25).abs() < 1e-12));
}

#[test]
fn spatial_resolution_converges() {
    let run_at = |res: usize| {
        let bg = TorusBackground::new(1, res, Herm::scalar(1.0)).unwrap();
        let phi0 = bg.sample(|p| 0.02 * (2.0 * PI * p[0]).cos() + 0.01 * (2.0 * PI * (p[0] - p[1])).sin());
        let cfg = RunConfig { t_end: 0.02, dt: Some(2e-5), record_every: 100_000, ..RunConfig::default() };
        run(&bg, phi0, &cfg).unwrap().state.into_phi()
    };
    let (a, b, fine) = (run_at(8), run_at(16), run_at(32));
    let restrict = |field: &[f64], from: usize, to: usize| -> Vec<f64> {
        let stride = from / to;
        (0..to * to).map(|i| field[(i / to) * stride * from + (i % to) * stride]).collect()
    };
    let e8 = max_abs_diff(&a, &restrict(&fine, 32, 8));
    let e16 = max_abs_diff(&b, &restrict(&fine, 32, 16));
    assert!(e16 < e8 || e16 < 1e-12, "{e8} {e16}");
    assert!(e16 < 1e-8);
}

#[test]
fn normalized_flow_converges_to_zero() {
    let bg = TorusBackground::new(1, 16, Herm::scalar(4.0)).unwrap();
    let phi0 = bg.sample(|p| 0.05 + 0.02 * (2.0 * PI * p[1]).cos());
    let cfg = RunConfig { mode: FlowMode::Normalized, t_end: 6.0, record_every: 200, ..RunConfig::default() };
    let out = run(&bg, phi0, &cfg).unwrap();
    let last = out.series.records.last().unwrap();
    assert!(last.sup_phi < 0.05 * (-5.0f64).exp());
    let fit = fit_decay(&out.series).unwrap();
    assert!((fit.rate - 1.0).abs() < 0.02, "{}", fit.rate);
    let report = estimate_report(&out.series);
    assert!(report.all_pass(), "{report:?}");
}

#[test]
fn diagnostics_files_round_trip() {
    let bg = TorusBackground::new(1, 8, Herm::scalar(1.0)).unwrap();
    let phi0 = bg.sample(|p| 0.01 * (2.0 * PI * p[0]).cos());
    let cfg = RunConfig { t_end: 0.01, record_every: 5, ..RunConfig::default() };
    let out = run(&bg, phi0, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    out.series.write_csv(std::fs::File::create(&csv).unwrap()).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let back = DiagnosticsSeries::read_csv(&text, FlowMode::Unnormalized).unwrap();
    assert_eq!(back.records.len(), out.series.records.len());
    for (a, b) in back.records.iter().zip(&out.series.records) {
        assert!((a.t - b.t).abs() <= 1e-15 * b.t.abs().max(1.0));
        assert!((a.sup_phi - b.sup_phi).abs() <= 1e-15 * b.sup_phi.abs().max(1.0));
    }
    let json = out.series.to_json();
    assert!(json.contains("\"inf_R\""));
    let parsed = DiagnosticsSeries::from_json(&json).unwrap();
    assert_eq!(parsed.records.len(), out.series.records.len());
}

#[test]
fn field_dump_is_little_endian_row_major() {
    let bg = TorusBackground::new(1, 4, Herm::scalar(1.0)).unwrap();
    let phi: Vec<f64> = (0..16).map(|i| i as f64 * 0.5).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.bin");
    write_field(&path, &bg, &phi).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 16 * 8);
    assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), 0.5);
    let (sidecar, back) = read_field(&path).unwrap();
    assert_eq!(back, phi);
    assert_eq!(sidecar.n, 1);
}

#[test]
fn loss_of_positivity_is_reported() {
    let bg = TorusBackground::new(1, 16, Herm::scalar(0.1)).unwrap();
    let phi = bg.sample(|p| 0.02 * (2.0 * PI * p[0]).cos());
    match FlowState::new(&bg, phi, 0.0, FlowMode::Unnormalized) {
        Err(FlowError::Admissibility { index, coords, min_eig }) => {
            assert!(min_eig <= 0.0);
            assert_eq!(coords, bg.spectral().coords(index));
        }
        other => panic!("expected admissibility failure, got {other:?}"),
    }
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    m.qr().q()
}

fn hermitian_with(rng: &mut ChaCha8Rng, ev: &[f64]) -> DMatrix<Complex64> {
    let u = random_unitary(rng, ev.len());
    let a = &u * diag(ev) * u.adjoint();
    (&a + a.adjoint()).scale(0.5)
}

#[test]
fn gap_inequality_on_random_matrices() {
    let constants = [1.0, 6.0, 16.0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tested = 0;
    for trial in 0..3000 {
        let n = trial % 3 + 1;
        let spread = [1e-3, 1e-2, 0.1, 0.3][trial % 4];
        let ev: Vec<f64> = (0..n).map(|_| 1.0 + rng.gen_range(-spread..spread)).collect();
        let a = hermitian_with(&mut rng, &ev);
        let tr: f64 = ev.iter().sum();
        let det: f64 = ev.iter().product();
        let eps = (tr - n as f64).max(1.0 - det).max(1e-12);
        if eps >= 1.0 {
            continue;
        }
        let frob = (&a - DMatrix::<Complex64>::identity(n, n)).iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!(frob <= constants[n - 1] * eps * (1.0 + 1e-9) + 1e-12, "n={n} {frob} {eps}");
        let check = matrix_gap_check(&a, eps).unwrap();
        assert!(check.pass && check.chain_holds);
        assert!((check.lhs - frob).abs() < 1e-9 * frob.max(1e-3));
        assert_eq!(check.bound, constants[n - 1] * eps);
        tested += 1;
    }
    assert!(tested > 2000);
}

#[test]
fn trace_inequalities_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..500 {
        let n = trial % 3 + 1;
        let ea: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
        let eb: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
        let a = hermitian_with(&mut rng, &ea);
        let b = hermitian_with(&mut rng, &eb);
        // Independent route: B^{-1/2} from the eigendecomposition of B.
        let eig = b.clone().symmetric_eigen();
        let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| c(1.0 / v.sqrt(), 0.0)));
        let s = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
        let m = &s * &a * &s;
        let m = (&m + m.adjoint()).scale(0.5);
        let mut mu: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        mu.sort_by(f64::total_cmp);
        let check = trace_inequalities_check(&a, &b).unwrap();
        assert!(check.pass, "{check:?}");
        for (x, y) in mu.iter().zip(&check.eigenvalues) {
            assert!((x - y).abs() < 1e-8 * x.abs().max(1.0));
        }
        let tr: f64 = mu.iter().sum();
        assert!((check.trace - tr).abs() < 1e-8 * tr);
        let fact: f64 = (1..n).map(|k| k as f64).product();
        let bound = mu.iter().map(|v| 1.0 / v).sum::<f64>().powi(n - 1) / fact * mu.iter().product::<f64>();
        assert!(tr <= bound * (1.0 + 1e-9));
    }
}

#[test]
fn matrix_checks_reject_bad_input() {
    let not_herm = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    assert!(matrix_gap_check(&not_herm, 0.1).is_err());
    assert!(matrix_gap_check(&diag(&[1.0, 1.0]), 1.5).is_err());
    assert!(matrix_gap_check(&diag(&[2.0, 2.0]), 0.1).is_err());
    assert!(trace_inequalities_check(&diag(&[1.0, -1.0]), &diag(&[1.0, 1.0])).is_err());
    assert!(trace_inequalities_check(&diag(&[1.0]), &diag(&[1.0, 1.0])).is_err());
}
