use krflab::ansatz::*;
use krflab::cohomology::{self, q, qi, to_f64, ExistenceTime};
use krflab::maflow::FlowMode;
use proptest::prelude::*;

/// Forcing per factor: -2 sphere, 0 flat, +2 hyperbolic.
fn forcing(kind: AnsatzKind) -> Vec<f64> {
    match kind {
        AnsatzKind::RoundP1 => vec![-2.0],
        AnsatzKind::ProductP1P1 => vec![-2.0, -2.0],
        AnsatzKind::ProductEC => vec![0.0, 2.0],
    }
}

fn oracle(kind: AnsatzKind, x0: &[f64], mode: FlowMode, t: f64) -> Vec<f64> {
    x0.iter()
        .zip(forcing(kind))
        .map(|(x, c)| match mode {
            FlowMode::Unnormalized => x + c * t,
            // e^{-t}(x0 + c(e^t - 1))
            FlowMode::Normalized => (-t).exp() * (x + c * t.exp_m1()),
        })
        .collect()
}

#[test]
fn round_sphere_extinction() {
    let m = AnsatzModel::round_p1(qi(1), FlowMode::Unnormalized).unwrap();
    assert_eq!(exact_extinction(&m), ExistenceTime::Exact(q(1, 2)));
    let t = extinction_time(&m, 1e-3).unwrap().unwrap();
    assert!((t - 0.5).abs() < 1e-9);
    let check = crosscheck_t(&m).unwrap();
    assert!(check.equal, "{check:?}");
    match integrate(&m, 0.7, 1e-3) {
        Err(AnsatzError::PastExtinction { t_ext, .. }) => assert!((t_ext - 0.5).abs() < 1e-9),
        other => panic!("{other:?}"),
    }
}

#[test]
fn product_times_match_cohomology() {
    for (l1, l2) in [(3, 1), (1, 3), (5, 5), (2, 7)] {
        let m = AnsatzModel::product_p1p1(qi(l1), qi(l2), FlowMode::Unnormalized).unwrap();
        let check = crosscheck_t(&m).unwrap();
        assert!(check.equal, "{check:?}");
        assert_eq!(check.cohomology, ExistenceTime::Exact(q(l1.min(l2), 2)));
    }
    let ec = AnsatzModel::product_ec(qi(1), qi(3), FlowMode::Unnormalized).unwrap();
    let check = crosscheck_t(&ec).unwrap();
    assert!(check.equal);
    assert_eq!(check.ansatz, ExistenceTime::Infinite);
    assert_eq!(check.numeric, None);
}

#[test]
fn volume_agrees_with_intersection_numbers() {
    let m = AnsatzModel::product_p1p1(q(3, 2), qi(2), FlowMode::Unnormalized).unwrap();
    let traj = integrate(&m, 0.5, 0.01).unwrap();
    let model = m.kind.cohomology_model();
    for s in traj.samples.iter().step_by(10) {
        let t = q((s.t * 100.0).round() as i64, 100);
        let class = cohomology::evolve_class(&model, &m.class(), &t).unwrap();
        let vol = to_f64(&cohomology::volume(&model, &class).unwrap());
        assert!((s.volume - vol).abs() < 1e-10, "t={} {} vs {vol}", s.t, s.volume);
    }
}

#[test]
fn product_ec_collapse_profile() {
    for lc in [q(1, 2), qi(2), qi(5)] {
        let m = AnsatzModel::product_ec(qi(1), lc.clone(), FlowMode::Normalized).unwrap();
        let traj = integrate(&m, 10.0, 1e-3).unwrap();
        let profile = collapse_profile(&traj).unwrap();
        assert!(profile.fiber_drift < 1e-10);
        assert!(profile.schwarz_holds && profile.base_rate_holds);
        let residual = einstein_residual(&traj).unwrap();
        let (t_last, r_last) = *residual.last().unwrap();
        assert_eq!(t_last, 10.0);
        assert!((r_last - (to_f64(&lc) - 2.0).abs() * (-10.0f64).exp()).abs() < 1e-10);
        let last = traj.samples.last().unwrap();
        assert!((last.fiber_diameter - last.scales[0].sqrt()).abs() < 1e-15);
    }
    let round = AnsatzModel::round_p1(qi(1), FlowMode::Normalized).unwrap();
    let traj = integrate(&round, 0.1, 0.01).unwrap();
    assert!(matches!(collapse_profile(&traj), Err(AnsatzError::WrongKind { .. })));
}

#[test]
fn csv_output_shape() {
    let m = AnsatzModel::product_ec(qi(1), qi(3), FlowMode::Normalized).unwrap();
    let traj = integrate(&m, 0.05, 0.01).unwrap();
    let csv = trajectory_csv(&traj);
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,"));
    assert!(header.ends_with("einstein_residual"));
    assert_eq!(lines.count(), traj.samples.len());
    let json: serde_json::Value = serde_json::from_str(&trajectory_json(&traj)).unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["records"].as_array().unwrap().len(), traj.samples.len());
}

#[test]
fn invalid_models_rejected() {
    assert!(AnsatzModel::round_p1(qi(0), FlowMode::Unnormalized).is_err());
    assert!(AnsatzModel::new(AnsatzKind::ProductEC, vec![qi(1)], FlowMode::Normalized).is_err());
    assert!("torus".parse::<AnsatzKind>().is_err());
    assert_eq!("product-p1p1".parse::<AnsatzKind>().unwrap(), AnsatzKind::ProductP1P1);
}

fn kind_strategy() -> impl Strategy<Value = AnsatzKind> {
    prop_oneof![
        Just(AnsatzKind::RoundP1),
        Just(AnsatzKind::ProductP1P1),
        Just(AnsatzKind::ProductEC),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integration_matches_closed_form(
        kind in kind_strategy(),
        nums in proptest::collection::vec(1i64..=40, 2),
        normalized in any::<bool>(),
    ) {
        let mode = if normalized { FlowMode::Normalized } else { FlowMode::Unnormalized };
        let scales: Vec<_> = nums[..kind.scale_count()].iter().map(|&v| q(v, 4)).collect();
        let x0: Vec<f64> = scales.iter().map(to_f64).collect();
        let m = AnsatzModel::new(kind, scales, mode).unwrap();
        let t_end = match exact_extinction(&m) {
            ExistenceTime::Exact(t) => {
                let t = to_f64(&t);
                if normalized { (1.0 + 0.9 * t).ln() } else { 0.9 * t }
            }
            _ => 3.0,
        };
        let traj = integrate(&m, t_end, 1e-3).unwrap();
        for s in traj.samples.iter().step_by(50) {
            let want = oracle(kind, &x0, mode, s.t);
            for (a, b) in s.scales.iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} vs {b}");
            }
            let cf = closed_form(&m, s.t);
            for (a, b) in cf.iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
            }
            if normalized {
                for (a, b) in normalized_from_unnormalized(&m, s.t).iter().zip(&want) {
                    prop_assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn extinction_is_first_zero(a in 1i64..=60, b in 1i64..=60) {
        let m = AnsatzModel::product_p1p1(q(a, 3), q(b, 3), FlowMode::Unnormalized).unwrap();
        let expect = a.min(b) as f64 / 6.0;
        let got = extinction_time(&m, 1e-3).unwrap().unwrap();
        prop_assert!((got - expect).abs() < 1e-9);
        prop_assert!(crosscheck_t(&m).unwrap().equal);
    }
}
