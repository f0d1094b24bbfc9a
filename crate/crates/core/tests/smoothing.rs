mod common;

use common::{clustered, rng, root_srp};
use proptest::prelude::*;
use rand::Rng;
use regpave_core::smoothing::{cv_score, map_estimate, select_traced};
use regpave_core::{run_pqmc, NodeLabel, OutsidePolicy, PqmcConfig, Priority, Srp, SmoothingConfig};

/// Leave-one-out score by literally removing each point and evaluating the
/// remaining histogram at it, on the fixed partition.
fn brute_force_cv(s: &Srp, points: &regpave_core::PointSet) -> f64 {
    let n = s.n() as f64;
    let stats = s.leaf_stats().unwrap();
    let l2: f64 = stats.iter().map(|(_, c, v)| (*c as f64 / (n * v)).powi(2) * v).sum();
    let h = s.histogram().unwrap();
    let loo: f64 = points
        .iter()
        .map(|p| {
            let leaf = h.leaf_containing(p).unwrap().unwrap();
            (leaf.count as f64 - 1.0) / ((n - 1.0) * leaf.volume)
        })
        .sum();
    l2 - 2.0 * loo / n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_cv_matches_leave_one_out(seed in any::<u64>(), n in 2usize..=200, d in 1usize..4, leaves in 1usize..60) {
        let mut r = rng(seed);
        let pts = clustered(&mut r, n, d);
        let root = root_srp(&pts);
        let path = run_pqmc(&root, &pts, Priority::Seb, &PqmcConfig::seb(0.0, leaves)).unwrap();
        let t = r.random_range(0..path.len());
        let s = path.state(t);
        let cf = cv_score(&s).unwrap();
        let bf = brute_force_cv(&s, &pts);
        prop_assert!((cf - bf).abs() <= 1e-10 * cf.abs().max(1.0), "{} vs {}", cf, bf);
    }

    #[test]
    fn map_estimate_ignores_path_order(seed in any::<u64>(), tau in 0.01f64..1e4) {
        let mut r = rng(seed);
        let pts = clustered(&mut r, 400, 2);
        let root = root_srp(&pts);
        let mut paths: Vec<_> = [5.0, 20.0, 80.0]
            .iter()
            .map(|&m| run_pqmc(&root, &pts, Priority::Seb, &PqmcConfig::seb(m, usize::MAX)).unwrap())
            .collect();
        let a = map_estimate(&paths, tau).unwrap();
        paths.reverse();
        let b = map_estimate(&paths, tau).unwrap();
        prop_assert_eq!(a.srp, b.srp);
        prop_assert_eq!(a.penalized_score, b.penalized_score);
    }
}

#[test]
fn selected_leaf_count_grows_with_tau() {
    // mean of three uniforms per coordinate: a smooth bump
    let mut r = rng(5);
    let mut pts = regpave_core::PointSet::new(2);
    for _ in 0..5000 {
        let mut p = [0.0; 2];
        for x in &mut p {
            *x = (0..3).map(|_| r.random::<f64>()).sum::<f64>() / 3.0;
        }
        pts.push(&p).unwrap();
    }
    let root = root_srp(&pts);
    let path = run_pqmc(&root, &pts, Priority::Seb, &PqmcConfig::seb(5.0, usize::MAX)).unwrap();
    let (best, trace) = select_traced(std::slice::from_ref(&path), &SmoothingConfig::default()).unwrap();
    for w in trace.windows(2) {
        assert!(w[0].leaves <= w[1].leaves);
    }
    let min_cv = trace.iter().map(|t| t.cv_score).fold(f64::INFINITY, f64::min);
    assert_eq!(best.cv_score, min_cv);
    // neither extreme of the path
    assert!(best.srp.leaf_count() > 1 && best.srp.leaf_count() < path.last().leaf_count());
}

#[test]
fn cv_of_the_three_leaf_srp() {
    let pts = regpave_core::PointSet::from_rows(&[
        [0.1, 0.1],
        [0.3, 0.4],
        [0.1, 0.6],
        [0.2, 0.9],
        [0.45, 0.7],
        [0.6, 0.1],
        [0.7, 0.5],
        [0.9, 0.9],
        [0.55, 0.3],
        [0.8, 0.75],
    ])
    .unwrap();
    let l = |v| NodeLabel::from_u64(v).unwrap();
    let tree = regpave_core::RpTree::from_leaves(regpave_core::IntervalBox::unit(2).unwrap(), [l(3), l(4), l(5)])
        .unwrap();
    let s = Srp::ingest(tree, &pts, OutsidePolicy::Strict).unwrap();
    // (25/0.5 + 4/0.25 + 9/0.25)/100 - 2/90 * (20/0.5 + 2/0.25 + 6/0.25)
    let expected = 1.02 - 2.0 / 90.0 * 72.0;
    assert!((cv_score(&s).unwrap() - expected).abs() < 1e-12);
    assert!((brute_force_cv(&s, &pts) - expected).abs() < 1e-12);
}
