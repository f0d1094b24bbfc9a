#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regpave_core::pqmc::splittable_leaves;
use regpave_core::{
    bounding_box, IntervalBox, NodeLabel, OutsidePolicy, PointSet, PqmcConfig, PqmcPath, Priority, RpTree, Srp,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Clustered data: a few uniform blobs of random size, which gives uneven
/// cell counts at every scale.
pub fn clustered(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PointSet {
    let k = rng.random_range(1..=4);
    let blobs: Vec<(Vec<f64>, f64)> = (0..k)
        .map(|_| ((0..d).map(|_| rng.random::<f64>()).collect(), rng.random_range(0.02..0.6)))
        .collect();
    let mut pts = PointSet::new(d);
    let mut p = vec![0.0; d];
    for _ in 0..n {
        let (c, s) = &blobs[rng.random_range(0..k)];
        for j in 0..d {
            p[j] = c[j] + s * (rng.random::<f64>() - 0.5);
        }
        pts.push(&p).unwrap();
    }
    pts
}

pub fn root_srp(points: &PointSet) -> Srp {
    let b = bounding_box(points, regpave_core::geometry::DEFAULT_PAD).unwrap();
    Srp::ingest(RpTree::new(b), points, OutsidePolicy::Strict).unwrap()
}

/// True when at every step of `path` the split cell was the unique top
/// priority among the splittable leaves.
pub fn strictly_ordered(path: &PqmcPath, priority: Priority, cfg: &PqmcConfig) -> bool {
    for (t, s) in path.states().enumerate().take(path.split_count()) {
        let boxes = s.tree().node_boxes().unwrap();
        let mut ps: Vec<f64> = splittable_leaves(&s, cfg)
            .unwrap()
            .iter()
            .map(|v| priority.value(s.count(v).unwrap(), boxes[v].volume(), s.n()))
            .collect();
        ps.sort_by(|a, b| b.total_cmp(a));
        if ps.len() > 1 && ps[0] == ps[1] {
            return false;
        }
        debug_assert_eq!(ps[0], path.split_priorities()[t]);
    }
    true
}

/// Splits over-threshold cells one at a time in a random order, recounting
/// from scratch each time. Returns the terminal tree.
pub fn random_schedule(points: &PointSet, root_box: &IntervalBox, threshold: f64, rng: &mut ChaCha8Rng) -> RpTree {
    let mut s = Srp::ingest(RpTree::new(root_box.clone()), points, OutsidePolicy::Strict).unwrap();
    loop {
        let boxes = s.tree().node_boxes().unwrap();
        let eligible: Vec<NodeLabel> = s
            .tree()
            .leaves()
            .iter()
            .filter(|v| {
                let c = s.count(v).unwrap();
                c as f64 > threshold && boxes[*v].is_bisectable()
            })
            .cloned()
            .collect();
        if eligible.is_empty() {
            return s.into_tree();
        }
        let v = &eligible[rng.random_range(0..eligible.len())];
        let t = s.tree().with_split(v).unwrap();
        s = Srp::ingest(t, points, OutsidePolicy::Strict).unwrap();
    }
}
