use krflab::ghmetric::*;
use proptest::prelude::*;

/// ε of a map pair, computed from scratch.
fn epsilon_of(x: &FiniteMetricSpace, y: &FiniteMetricSpace, f: &[usize], g: &[usize]) -> f64 {
    let mut e: f64 = 0.0;
    for a in 0..x.len() {
        for b in 0..x.len() {
            e = e.max((x.dist(a, b) - y.dist(f[a], f[b])).abs());
        }
        e = e.max(x.dist(a, g[f[a]]));
    }
    for a in 0..y.len() {
        for b in 0..y.len() {
            e = e.max((y.dist(a, b) - x.dist(g[a], g[b])).abs());
        }
        e = e.max(y.dist(a, f[g[a]]));
    }
    e
}

fn all_maps(from: usize, to: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..from {
        out = out
            .into_iter()
            .flat_map(|m| (0..to).map(move |v| {
                let mut m = m.clone();
                m.push(v);
                m
            }))
            .collect();
    }
    out
}

fn brute_force(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> f64 {
    let fs = all_maps(x.len(), y.len());
    let gs = all_maps(y.len(), x.len());
    let mut best = f64::INFINITY;
    for f in &fs {
        for g in &gs {
            best = best.min(epsilon_of(x, y, f, g));
        }
    }
    best
}

/// Random metric from random points in the plane.
fn space_strategy(max: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    proptest::collection::vec((0u8..10, 0u8..10), 1..=max).prop_map(|pts| {
        let pts: Vec<(f64, f64)> = pts.iter().map(|&(a, b)| (a as f64, b as f64)).collect();
        let labels = (0..pts.len()).map(|i| format!("p{i}")).collect();
        FiniteMetricSpace::from_points(labels, &pts, |p, q| (p.0 - q.0).abs() + (p.1 - q.1).abs()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn exhaustive_matches_brute_force(x in space_strategy(4), y in space_strategy(4)) {
        let bound = gh_upper_bound(&x, &y);
        prop_assert_eq!(bound.regime, SearchRegime::Exhaustive);
        let brute = brute_force(&x, &y);
        prop_assert!((bound.epsilon - brute).abs() < 1e-12, "{} vs {brute}", bound.epsilon);
        prop_assert!((gh_epsilon(&x, &y, &bound.maps).unwrap() - bound.epsilon).abs() < 1e-12);
    }

    #[test]
    fn bound_is_symmetric(x in space_strategy(6), y in space_strategy(6)) {
        let xy = gh_upper_bound(&x, &y);
        let yx = gh_upper_bound(&y, &x);
        if xy.regime == SearchRegime::Exhaustive {
            prop_assert!((xy.epsilon - yx.epsilon).abs() < 1e-12);
        }
        prop_assert!(xy.epsilon >= (x.diameter() - y.diameter()).abs() - 1e-12);
    }

    #[test]
    fn relabelling_does_not_change_bound(x in space_strategy(5), y in space_strategy(5), seed in any::<u64>()) {
        let n = x.len();
        let mut order: Vec<usize> = (0..n).collect();
        // Deterministic shuffle from the seed.
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let px = x.permuted(&order).unwrap();
        let a = gh_upper_bound(&x, &y);
        let b = gh_upper_bound(&px, &y);
        if a.regime == SearchRegime::Exhaustive {
            prop_assert!((a.epsilon - b.epsilon).abs() < 1e-12);
        }
    }

    #[test]
    fn defects_are_bounded_by_diameters(x in space_strategy(5), y in space_strategy(5)) {
        let f = vec![0; x.len()];
        let g = vec![0; y.len()];
        let maps = CorrespondencePair { f: f.clone(), g: g.clone() };
        let d = gh_defects(&x, &y, &maps).unwrap();
        prop_assert!((d.epsilon - epsilon_of(&x, &y, &f, &g)).abs() < 1e-12);
        prop_assert!(d.epsilon <= x.diameter().max(y.diameter()) + 1e-12);
    }
}

#[test]
fn catalogue_self_distance_is_zero() {
    for (name, space) in catalogue() {
        let b = gh_upper_bound(&space, &space);
        assert_eq!(b.epsilon, 0.0, "{name}");
    }
}

#[test]
fn heuristic_flag_on_large_inputs() {
    let x = circle_sample(8);
    let y = circle_sample(6);
    let b = gh_upper_bound(&x, &y);
    assert_eq!(b.regime, SearchRegime::Heuristic);
    assert_eq!(b.flag(), "heuristic");
    assert!(b.epsilon >= 0.0);
    assert!((gh_epsilon(&x, &y, &b.maps).unwrap() - b.epsilon).abs() < 1e-15);
}

#[test]
fn collapse_matches_closed_form() {
    let ts: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
    for (nb, nf) in [(6, 4), (8, 2), (5, 6)] {
        let series = collapse_series(&ts, nb, nf).unwrap();
        assert!(series.is_nonincreasing(0.0));
        for p in &series.points {
            let expect = 0.5 * (-p.t / 2.0).exp();
            assert!((p.epsilon - expect).abs() < 1e-12, "{nb}x{nf} t={}: {}", p.t, p.epsilon);
        }
        assert!((series.c1 - 0.5).abs() < 1e-9 && series.c2.abs() < 1e-9);
    }
    let csv = series_csv(&collapse_series(&[0.0, 1.0], 4, 2).unwrap());
    assert_eq!(csv.lines().next().unwrap(), "t,epsilon,flag");
    assert!(collapse_series(&[1.0, 0.5], 4, 2).is_err());
}

#[test]
fn warped_torus_distances() {
    let x = sample_warped_torus(2.0, 4, 4).unwrap();
    // (0,0) to (0,1/4): fiber distance (1/4)·e^{-1}.
    assert!((x.dist(0, 1) - 0.25 * (-1.0f64).exp()).abs() < 1e-15);
    // (0,0) to (1/4,0): base distance 1/4.
    assert!((x.dist(0, 4) - 0.25).abs() < 1e-15);
    assert!(sample_warped_torus(-1.0, 2, 2).is_err());
}

#[test]
fn space_validation_and_json() {
    assert!(FiniteMetricSpace::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
    assert!(FiniteMetricSpace::from_rows(&[vec![1.0]]).is_err());
    assert!(FiniteMetricSpace::from_rows(&[
        vec![0.0, 1.0, 5.0],
        vec![1.0, 0.0, 1.0],
        vec![5.0, 1.0, 0.0],
    ])
    .is_err());
    let x = circle_sample(5);
    let back = FiniteMetricSpace::from_json(&x.to_json()).unwrap();
    assert_eq!(back, x);
    let maps = CorrespondencePair { f: vec![0; 5], g: vec![0, 9] };
    assert!(matches!(gh_epsilon(&x, &circle_sample(2), &maps), Err(GhError::DimensionMismatch(_))));
}
