//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a hard gate fails. Run with
//! `cargo test -p regpave --test acceptance`; append `-- 3 7` to run a
//! subset and `seed=N` to change the data.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use regpave::eval::{l1_error, Reference, DEFAULT_MC_PER_LEAF};
use regpave::pipeline::{run_on_points, RunConfig, RunOutput};
use regpave::RayonExecutor;
use regpave_core::builder::{BuildConfig, ThresholdBuild};
use regpave_core::pqmc::splittable_leaves;
use regpave_core::smoothing::cv_score;
use regpave_core::{
    backtrack, bounding_box, build_threshold_tree, run_pqmc, IntervalBox, NodeLabel, OutsidePolicy, PointSet,
    PqmcConfig, PqmcPath, Priority, RpTree, SequentialExecutor, Srp,
};

struct Outcome {
    pass: bool,
    /// Failing this criterion does not fail the suite.
    soft: bool,
    detail: String,
}

impl Outcome {
    fn hard(pass: bool, detail: String) -> Self {
        Outcome { pass, soft: false, detail }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(r: &mut ChaCha8Rng, n: usize, d: usize) -> PointSet {
    let coords: Vec<f64> = (0..n * d).map(|_| r.sample(StandardNormal)).collect();
    PointSet::from_flat(d, coords).unwrap()
}

/// A few uniform blobs of random size: uneven counts at every scale.
fn clustered(r: &mut ChaCha8Rng, n: usize, d: usize) -> PointSet {
    let k = r.random_range(1..=4);
    let blobs: Vec<(Vec<f64>, f64)> =
        (0..k).map(|_| ((0..d).map(|_| r.random::<f64>()).collect(), r.random_range(0.02..0.6))).collect();
    let mut pts = PointSet::new(d);
    let mut p = vec![0.0; d];
    for _ in 0..n {
        let (c, s) = &blobs[r.random_range(0..k)];
        for j in 0..d {
            p[j] = c[j] + s * (r.random::<f64>() - 0.5);
        }
        pts.push(&p).unwrap();
    }
    pts
}

fn root_srp(points: &PointSet) -> Srp {
    let b = bounding_box(points, regpave_core::geometry::DEFAULT_PAD).unwrap();
    Srp::ingest(RpTree::new(b), points, OutsidePolicy::Strict).unwrap()
}

fn l(v: u64) -> NodeLabel {
    NodeLabel::from_u64(v).unwrap()
}

/// Σ height·volume and Σ leaf counts of an SRP's histogram.
fn mass_and_count(s: &Srp) -> (f64, u64) {
    let h = s.histogram().unwrap();
    (h.total_mass(), h.leaves().iter().map(|r| r.count).sum())
}

fn normalized(s: &Srp) -> bool {
    let (mass, count) = mass_and_count(s);
    (mass - 1.0).abs() <= 1e-9 && count == s.n()
}

fn c1_golden_histogram() -> Outcome {
    let pts = PointSet::from_rows(&[
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
    let tree = RpTree::from_leaves(IntervalBox::unit(2).unwrap(), [l(3), l(4), l(5)]).unwrap();
    let h = Srp::ingest(tree, &pts, OutsidePolicy::Strict).unwrap().histogram().unwrap();
    let got: BTreeMap<u64, (u64, f64)> =
        h.leaves().iter().map(|r| (r.label.to_u64().unwrap(), (r.count, r.height))).collect();
    let want: BTreeMap<u64, (u64, f64)> = [(3, (5, 1.0)), (4, (2, 0.8)), (5, (3, 1.2))].into_iter().collect();
    Outcome::hard(got == want, format!("leaf (count, height) = {got:?}"))
}

fn c2_normalization(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut iterations = 0;
    for case in 0..220 {
        let d = r.random_range(1..=5);
        let n = r.random_range(1..=10_000);
        let pts = if r.random_bool(0.5) { clustered(&mut r, n, d) } else { gaussian(&mut r, n, d) };
        let root = root_srp(&pts);
        let spc = r.random_bool(0.3);
        let (priority, threshold) = if spc {
            (Priority::Spc, root.root_box().volume() * r.random_range(1e-4..0.05))
        } else {
            (Priority::Seb, r.random_range(1..=200) as f64)
        };

        // prune-phase conservation at every iteration
        let cfg = BuildConfig { shards: r.random_range(1..=8), ..BuildConfig::new(priority, threshold) };
        let mut b = ThresholdBuild::new(&pts, root.tree(), cfg, &SequentialExecutor).unwrap();
        loop {
            let more = b.step(&SequentialExecutor).unwrap();
            iterations += 1;
            if b.working().len() as u64 + b.passed().total() != n as u64 {
                failures.push(format!("case {case}: conservation broken"));
            }
            if !more {
                break;
            }
        }
        let built = b.finish().unwrap();
        if !normalized(&built.final_srp) {
            failures.push(format!("case {case}: threshold tree not normalized"));
        }

        // a random state along a random chain
        let pq = PqmcConfig {
            max_psi: threshold,
            max_leaves: r.random_range(1..=2000),
            rng_seed: r.random(),
            tie_break: regpave_core::TieBreak::Random,
            ..Default::default()
        };
        let path = run_pqmc(&root, &pts, priority, &pq).unwrap();
        let s = path.state(r.random_range(0..path.len()));
        if !normalized(&s) || !normalized(path.last()) {
            failures.push(format!("case {case}: chain state not normalized"));
        }
        checked += 1;
    }
    Outcome::hard(
        failures.is_empty(),
        format!("{checked} datasets, {iterations} prune iterations, {} failures {:?}", failures.len(), failures.first()),
    )
}

fn strictly_ordered(path: &PqmcPath, priority: Priority, cfg: &PqmcConfig) -> bool {
    for s in path.states().take(path.split_count()) {
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
    }
    true
}

fn c3_equivalence(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let (mut strict, mut tied, mut mismatches, mut attempts) = (0, 0, 0, 0);
    let mut strict_splits = 0;
    while strict < 60 && attempts < 5000 {
        attempts += 1;
        let n = r.random_range(2..=4096);
        let d = r.random_range(1..=3);
        let pts = clustered(&mut r, n, d);
        let root = root_srp(&pts);
        // coarse thresholds keep the top priority unique more often
        let threshold = r.random_range((n / 256).max(1)..=(n / 2).max(1)) as f64;
        let cfg = PqmcConfig::seb(threshold, usize::MAX);
        let seq = run_pqmc(&root, &pts, Priority::Seb, &cfg).unwrap();
        let is_strict = strictly_ordered(&seq, Priority::Seb, &cfg);
        if !is_strict && tied >= 100 {
            continue;
        }
        let bcfg = BuildConfig { shards: r.random_range(1..=8), ..BuildConfig::new(Priority::Seb, threshold) };
        let built = build_threshold_tree(&pts, root.tree(), bcfg, &RayonExecutor).unwrap();
        let tree_ok = &built.final_srp == seq.last();
        let coarse = backtrack(&built.final_srp, root.tree(), Priority::Seb).unwrap();
        let mut back: Vec<Srp> = coarse.states().collect();
        back.reverse();
        let path_ok = back.len() == seq.len() && back.into_iter().zip(seq.states()).all(|(a, b)| a == b);
        if !(tree_ok && path_ok) {
            mismatches += 1;
        }
        if is_strict {
            strict += 1;
            strict_splits += seq.split_count();
        } else {
            tied += 1;
        }
    }
    Outcome::hard(
        strict >= 50 && mismatches == 0,
        format!(
            "{strict} strict-priority instances ({:.1} splits on average, +{tied} with ties), {mismatches} mismatches",
            strict_splits as f64 / strict.max(1) as f64
        ),
    )
}

/// Splits over-threshold cells one at a time in a random order, recounting
/// from the data after every split.
fn random_schedule(points: &PointSet, root_box: &IntervalBox, threshold: f64, r: &mut ChaCha8Rng) -> RpTree {
    let mut s = Srp::ingest(RpTree::new(root_box.clone()), points, OutsidePolicy::Strict).unwrap();
    loop {
        let boxes = s.tree().node_boxes().unwrap();
        let eligible: Vec<NodeLabel> = s
            .tree()
            .leaves()
            .iter()
            .filter(|v| s.count(v).unwrap() as f64 > threshold && boxes[*v].is_bisectable())
            .cloned()
            .collect();
        if eligible.is_empty() {
            return s.into_tree();
        }
        let v = &eligible[r.random_range(0..eligible.len())];
        let t = s.tree().with_split(v).unwrap();
        s = Srp::ingest(t, points, OutsidePolicy::Strict).unwrap();
    }
}

fn c4_order_invariance(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let mut mismatches = 0;
    for _ in 0..30 {
        let n = r.random_range(10..=1000);
        let d = r.random_range(1..=3);
        let pts = clustered(&mut r, n, d);
        let root = root_srp(&pts);
        let threshold = r.random_range(1..=(n / 20).max(2)) as f64;
        let built =
            build_threshold_tree(&pts, root.tree(), BuildConfig::new(Priority::Seb, threshold), &SequentialExecutor)
                .unwrap();
        for _ in 0..10 {
            if &random_schedule(&pts, root.root_box(), threshold, &mut r) != built.final_srp.tree() {
                mismatches += 1;
            }
        }
    }
    Outcome::hard(mismatches == 0, format!("30 instances x 10 random orders, {mismatches} mismatches"))
}

fn brute_force_cv(s: &Srp, points: &PointSet) -> f64 {
    let n = s.n() as f64;
    let h = s.histogram().unwrap();
    let l2: f64 = h.leaves().iter().map(|r| r.height * r.height * r.volume).sum();
    let loo: f64 = points
        .iter()
        .map(|p| {
            // remove x_i: its leaf loses one point, the sample loses one point
            let leaf = h.leaf_containing(p).unwrap().unwrap();
            (leaf.count as f64 - 1.0) / ((n - 1.0) * leaf.volume)
        })
        .sum();
    l2 - 2.0 * loo / n
}

fn c5_cv_oracle(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(2..=200);
        let d = r.random_range(1..=4);
        let pts = clustered(&mut r, n, d);
        let root = root_srp(&pts);
        let cfg = PqmcConfig::seb(0.0, r.random_range(1..=80));
        let path = run_pqmc(&root, &pts, Priority::Seb, &cfg).unwrap();
        let s = path.state(r.random_range(0..path.len()));
        let (a, b) = (cv_score(&s).unwrap(), brute_force_cv(&s, &pts));
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Outcome::hard(worst <= 1e-10, format!("100 random SRPs, worst relative difference {worst:.2e}"))
}

fn c6_shards(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let pts = gaussian(&mut r, 1_000_000, 2);
    let root = root_srp(&pts);
    let cfg = |s| BuildConfig { shards: s, ..BuildConfig::new(Priority::Seb, 50.0) };

    let t0 = Instant::now();
    let one = build_threshold_tree(&pts, root.tree(), cfg(1), &SequentialExecutor).unwrap();
    let t_one = t0.elapsed();
    let mut same = true;
    for s in [2, 4, 8] {
        same &= build_threshold_tree(&pts, root.tree(), cfg(s), &RayonExecutor).unwrap() == one;
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let t0 = Instant::now();
    let four = pool.install(|| build_threshold_tree(&pts, root.tree(), cfg(4), &RayonExecutor).unwrap());
    let t_four = t0.elapsed();
    same &= four == one;
    let ratio = t_four.as_secs_f64() / t_one.as_secs_f64();

    let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
    let speed = if cores >= 4 {
        format!("4-thread/1-shard time {ratio:.2} (target <= 0.6, fails above 1.0)")
    } else {
        format!("4-thread/1-shard time {ratio:.2}; speed check not applicable on {cores} core(s)")
    };
    let speed_ok = cores < 4 || ratio <= 1.0;
    Outcome::hard(
        same && speed_ok,
        format!(
            "identical BuildResult for S in {{1,2,4,8}}: {same}; {} leaves, {} iterations; {speed}",
            one.final_srp.leaf_count(),
            one.iterations
        ),
    )
}

fn pipeline_config(seed: u64, dim: usize) -> RunConfig {
    RunConfig {
        dim,
        carve_leaves: Some(100),
        tributaries: 5,
        maxpts: vec![50.0, 500.0, 1500.0],
        maxlvs: 10_000,
        seed,
        ..Default::default()
    }
}

fn root_tributary_leaves(out: &RunOutput, maxpts: f64) -> usize {
    out.manifest.tributaries.iter().find(|t| t.tributary == 0 && t.maxpts == maxpts).unwrap().final_leaves
}

fn histogram_invariants(out: &RunOutput) -> bool {
    let h = &out.histogram;
    let count: u64 = h.leaves().iter().map(|r| r.count).sum();
    (h.total_mass() - 1.0).abs() <= 1e-9 && count == out.manifest.n && normalized(&out.estimate.srp)
}

fn c7_gaussian(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let pts = gaussian(&mut r, 100_000, 2);
    let out = run_on_points(pts, &pipeline_config(seed, 2)).unwrap();
    let report = l1_error(&out.histogram, &Reference::Gaussian { dim: 2 }, DEFAULT_MC_PER_LEAF, seed).unwrap();
    let (fine, coarse) = (root_tributary_leaves(&out, 50.0), root_tributary_leaves(&out, 1500.0));
    let l1_ok = report.l1_estimate <= 0.15;
    let bands_ok = (700..=3000).contains(&fine) && (50..=300).contains(&coarse);
    Outcome::hard(
        l1_ok && bands_ok && histogram_invariants(&out),
        format!(
            "L1 = {:.4} ± {:.4} (selected {} leaves, tau {:.3}); maxpts=50 -> {fine} leaves, maxpts=1500 -> {coarse} leaves",
            report.l1_estimate, report.l1_std_error, out.manifest.selected.leaves, out.manifest.selected.tau
        ),
    )
}

fn c8_ten_dim(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let pts = gaussian(&mut r, 1_000_000, 10);
    let cfg = pipeline_config(seed, 10);
    let out = run_on_points(pts.clone(), &cfg).unwrap();
    let mut ok = histogram_invariants(&out);
    for p in &out.paths {
        ok &= normalized(p.last());
    }

    // prune conservation on the same data, from the root
    let root = Srp::ingest(RpTree::new(out.histogram.root_box().clone()), &pts, OutsidePolicy::Strict).unwrap();
    let bcfg = BuildConfig { shards: 8, ..BuildConfig::new(Priority::Seb, 500.0) };
    let mut b = ThresholdBuild::new(&pts, root.tree(), bcfg, &RayonExecutor).unwrap();
    while b.step(&RayonExecutor).unwrap() {
        ok &= b.working().len() as u64 + b.passed().total() == 1_000_000;
    }
    let built = b.finish().unwrap();
    ok &= normalized(&built.final_srp);
    Outcome::hard(
        ok,
        format!(
            "n = {}, selected {} leaves (tau {:.3}), invariants hold: {ok}",
            out.manifest.n, out.manifest.selected.leaves, out.manifest.selected.tau
        ),
    )
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.iter().find_map(|a| a.strip_prefix("seed=")?.parse().ok()).unwrap_or(20_240_601);
    type Check = Box<dyn Fn() -> Outcome>;
    let criteria: Vec<(u32, &str, Duration, Check)> = vec![
        (1, "golden three-leaf histogram", Duration::from_secs(1), Box::new(c1_golden_histogram)),
        (2, "normalization and conservation", Duration::from_secs(120), Box::new(move || c2_normalization(seed))),
        (3, "sequential/parallel equivalence", Duration::from_secs(180), Box::new(move || c3_equivalence(seed))),
        (4, "split-order invariance", Duration::from_secs(120), Box::new(move || c4_order_invariance(seed))),
        (5, "closed-form CV vs leave-one-out", Duration::from_secs(60), Box::new(move || c5_cv_oracle(seed))),
        (6, "shard invariance at n = 1e6", Duration::from_secs(600), Box::new(move || c6_shards(seed))),
        (7, "bivariate Gaussian, n = 1e5", Duration::from_secs(600), Box::new(move || c7_gaussian(seed))),
        (8, "10-D Gaussian, n = 1e6", Duration::from_secs(1200), Box::new(move || c8_ten_dim(seed))),
    ];
    let only: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();

    let mut hard_failures = 0;
    for (id, name, limit, check) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let o = check();
        let took = t0.elapsed();
        let pass = o.pass && took <= limit;
        if !pass && !o.soft {
            hard_failures += 1;
        }
        println!(
            "criterion {id} [{}] {name}: {} ({:.1}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
