//! Priority-queued splitting chains over statistical regular pavings.
//!
//! A chain repeatedly splits a splittable leaf of largest priority until no
//! leaf is splittable, the leaf budget is reached, or the largest priority
//! drops to the threshold. A leaf is splittable when it holds data, sits above
//! the depth limit and its box can still be bisected in binary64.
//!
//! Ties are broken either by the lowest label or uniformly at random with a
//! seeded ChaCha stream, so every run is reproducible.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{IntervalBox, PointSet};
use crate::label::{NodeLabel, Side};
use crate::priority::Priority;
use crate::srp::Srp;
use crate::tree::{locate, DEFAULT_MAX_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    Random,
    #[default]
    LowestLabel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqmcConfig {
    /// Splitting stops once every splittable leaf has priority at most this.
    pub max_psi: f64,
    pub max_leaves: usize,
    pub max_depth: u32,
    pub rng_seed: u64,
    pub tie_break: TieBreak,
}

impl Default for PqmcConfig {
    fn default() -> Self {
        PqmcConfig {
            max_psi: 0.0,
            max_leaves: usize::MAX,
            max_depth: DEFAULT_MAX_DEPTH,
            rng_seed: 0,
            tie_break: TieBreak::LowestLabel,
        }
    }
}

impl PqmcConfig {
    pub fn seb(max_points: f64, max_leaves: usize) -> Self {
        PqmcConfig { max_psi: max_points, max_leaves, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.max_leaves == 0 {
            return Err(Error::InvalidConfig("max_leaves must be at least 1".into()));
        }
        if self.max_psi.is_nan() {
            return Err(Error::InvalidConfig("max_psi is NaN".into()));
        }
        Ok(())
    }
}

/// Why a chain stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    NoSplittable,
    MaxLeaves,
    PriorityThreshold,
}

/// A sample path `s(0), s(1), ..., s(T)`: a start state plus the ordered
/// list of split labels. States are materialized on demand.
#[derive(Debug, Clone)]
pub struct PqmcPath {
    start: Srp,
    splits: Vec<NodeLabel>,
    split_priorities: Vec<f64>,
    last: Srp,
    stop: StopReason,
    success: bool,
}

impl PqmcPath {
    /// Assembles a path from its parts. `last` must contain every node
    /// created along the way (it supplies the counts).
    pub fn from_parts(
        start: Srp,
        splits: Vec<NodeLabel>,
        split_priorities: Vec<f64>,
        last: Srp,
        stop: StopReason,
        success: bool,
    ) -> Self {
        debug_assert_eq!(splits.len(), split_priorities.len());
        debug_assert_eq!(start.leaf_count() + splits.len(), last.leaf_count());
        PqmcPath { start, splits, split_priorities, last, stop, success }
    }

    /// Number of states, `T + 1`.
    pub fn len(&self) -> usize {
        self.splits.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn split_count(&self) -> usize {
        self.splits.len()
    }

    pub fn start(&self) -> &Srp {
        &self.start
    }

    pub fn last(&self) -> &Srp {
        &self.last
    }

    /// Label split at each step, in order.
    pub fn splits(&self) -> &[NodeLabel] {
        &self.splits
    }

    /// Priority of the node split at each step.
    pub fn split_priorities(&self) -> &[f64] {
        &self.split_priorities
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop
    }

    /// True when the final state satisfies both the priority and leaf-count
    /// targets.
    pub fn success(&self) -> bool {
        self.success
    }

    /// Leaf count of state `t`.
    pub fn leaves_at(&self, t: usize) -> usize {
        self.start.leaf_count() + t
    }

    /// State `t` (0-based).
    pub fn state(&self, t: usize) -> Srp {
        assert!(t < self.len(), "state index out of range");
        if t == self.splits.len() {
            return self.last.clone();
        }
        let mut s = self.start.clone();
        for v in &self.splits[..t] {
            self.apply(&mut s, v);
        }
        s
    }

    fn apply(&self, s: &mut Srp, v: &NodeLabel) {
        let counts = self.last.counts();
        s.split(v, counts[&v.left()], counts[&v.right()]).expect("path split is valid");
    }

    /// All states in order.
    pub fn states(&self) -> impl Iterator<Item = Srp> + '_ {
        let mut cur = Some(self.start.clone());
        let mut i = 0;
        core::iter::from_fn(move || {
            let out = cur.take()?;
            if i < self.splits.len() {
                let mut next = out.clone();
                self.apply(&mut next, &self.splits[i]);
                cur = Some(next);
                i += 1;
            }
            Some(out)
        })
    }

    /// Keeps only states with at most `max_leaves` leaves. The stop reason
    /// becomes `MaxLeaves` when states are dropped.
    pub fn truncate_leaves(mut self, max_leaves: usize) -> Self {
        let keep_states = max_leaves.saturating_sub(self.start.leaf_count()) + 1;
        if keep_states >= self.len() {
            return self;
        }
        let t = keep_states.saturating_sub(1);
        self.last = self.state(t);
        self.splits.truncate(t);
        self.split_priorities.truncate(t);
        self.stop = StopReason::MaxLeaves;
        self.success = false;
        self
    }

    /// True when both paths visit the same states in the same order.
    pub fn same_states(&self, other: &PqmcPath) -> bool {
        self.start == other.start && self.splits == other.splits && self.last == other.last
    }
}

#[derive(Debug, Clone, Copy)]
struct Key(f64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

// max-heap order: highest priority, then lowest label
type Entry = (Key, Reverse<NodeLabel>);

struct Working {
    cell: IntervalBox,
    members: Vec<u32>,
}

/// Runs the chain from `s0`, whose counts must match `points`.
pub fn run_pqmc(s0: &Srp, points: &PointSet, priority: Priority, cfg: &PqmcConfig) -> Result<PqmcPath> {
    cfg.validate()?;
    run_chain(s0, points, priority, cfg, cfg.max_psi)
}

fn run_chain(s0: &Srp, points: &PointSet, priority: Priority, cfg: &PqmcConfig, max_psi: f64) -> Result<PqmcPath> {
    let tree = s0.tree();
    if !points.is_empty() && points.dim() != tree.dim() {
        return Err(Error::DimensionMismatch { expected: tree.dim(), found: points.dim() });
    }
    let n = s0.n();
    let boxes = tree.node_boxes()?;
    let planes = tree.split_planes()?;

    let mut members: BTreeMap<NodeLabel, Vec<u32>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        if !tree.root_box().contains_unchecked(p) {
            return Err(Error::PointOutsideRootBox { index: i });
        }
        members.entry(locate(&planes, p)).or_default().push(i as u32);
    }
    for v in tree.leaves() {
        let got = members.get(v).map_or(0, |m| m.len() as u64);
        if got != s0.count(v).unwrap_or(0) {
            return Err(Error::InvalidConfig(alloc::format!("counts of the start state do not match the points in leaf {v}")));
        }
    }

    let splittable = |v: &NodeLabel, count: u64, cell: &IntervalBox| {
        count > 0 && v.depth() < cfg.max_depth && cell.is_bisectable()
    };

    let mut work: BTreeMap<NodeLabel, Working> = BTreeMap::new();
    let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
    for v in tree.leaves() {
        let cell = &boxes[v];
        let count = s0.count(v).unwrap_or(0);
        if splittable(v, count, cell) {
            heap.push((Key(priority.value(count, cell.volume(), n)), Reverse(v.clone())));
            let m = members.remove(v).unwrap_or_default();
            work.insert(v.clone(), Working { cell: cell.clone(), members: m });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut srp = s0.clone();
    let mut splits = Vec::new();
    let mut split_priorities = Vec::new();

    let stop = loop {
        let Some(top) = heap.peek() else { break StopReason::NoSplittable };
        if srp.leaf_count() >= cfg.max_leaves {
            break StopReason::MaxLeaves;
        }
        if top.0 .0 <= max_psi {
            break StopReason::PriorityThreshold;
        }
        let (key, Reverse(v)) = match cfg.tie_break {
            TieBreak::LowestLabel => heap.pop().unwrap(),
            TieBreak::Random => {
                let best = top.0;
                let mut tied = Vec::new();
                while heap.peek().is_some_and(|e| e.0 == best) {
                    tied.push(heap.pop().unwrap());
                }
                let pick = if tied.len() > 1 { rng.random_range(0..tied.len()) } else { 0 };
                let chosen = tied.swap_remove(pick);
                heap.extend(tied);
                chosen
            }
        };

        let Working { cell, members } = work.remove(&v).expect("queued leaf has working state");
        let plane = cell.split_plane()?;
        let (left, right): (Vec<u32>, Vec<u32>) =
            members.into_iter().partition(|&i| plane.is_left(points.get(i as usize)));
        srp.split(&v, left.len() as u64, right.len() as u64)?;
        splits.push(v.clone());
        split_priorities.push(key.0);

        for (side, m) in [(Side::Left, left), (Side::Right, right)] {
            let child = v.child(side);
            let child_cell = cell.half(plane, side);
            let count = m.len() as u64;
            if splittable(&child, count, &child_cell) {
                heap.push((Key(priority.value(count, child_cell.volume(), n)), Reverse(child.clone())));
                work.insert(child, Working { cell: child_cell, members: m });
            }
        }
    };

    let success = srp.leaf_count() <= cfg.max_leaves && heap.iter().all(|e| e.0 .0 <= cfg.max_psi);
    Ok(PqmcPath { start: s0.clone(), splits, split_priorities, last: srp, stop, success })
}

/// Leaves of `s` that a chain with `cfg` could split.
pub fn splittable_leaves(s: &Srp, cfg: &PqmcConfig) -> Result<Vec<NodeLabel>> {
    let boxes = s.tree().node_boxes()?;
    Ok(s.tree()
        .leaves()
        .iter()
        .filter(|v| s.count(v).unwrap_or(0) > 0 && v.depth() < cfg.max_depth && boxes[*v].is_bisectable())
        .cloned()
        .collect())
}

/// The core support-carved path: a support-carving chain from `root` that
/// stops only at `cfg.max_leaves` leaves or when nothing is splittable.
///
/// The carving priority of a cell holding the entire sample is 0, so the
/// priority threshold is not applied here (a threshold of 0 would otherwise
/// stop at the root).
pub fn carve_path(root: &Srp, points: &PointSet, cfg: &PqmcConfig) -> Result<PqmcPath> {
    cfg.validate()?;
    run_chain(root, points, Priority::Spc, cfg, f64::NEG_INFINITY)
}

/// Split counts of `c` evenly spread launch states on a path with `total`
/// splits: `floor(i * total / (c - 1))`, always starting at 0.
pub fn launch_indices(total: usize, c: usize) -> Vec<usize> {
    if c == 0 {
        return Vec::new();
    }
    if c == 1 {
        return alloc::vec![0];
    }
    if c > total {
        return (0..=total).collect();
    }
    (0..c).map(|i| i * total / (c - 1)).collect()
}

/// `c` states spread along `carve`, always including its first state.
pub fn launch_states(carve: &PqmcPath, c: usize) -> Result<Vec<Srp>> {
    if c == 0 {
        return Err(Error::InvalidConfig("need at least one launch state".into()));
    }
    let idx = launch_indices(carve.split_count(), c);
    let mut out = Vec::with_capacity(idx.len());
    let mut next = idx.iter().peekable();
    for (t, s) in carve.states().enumerate() {
        if next.peek() == Some(&&t) {
            out.push(s);
            next.next();
            if next.peek().is_none() {
                break;
            }
        }
    }
    Ok(out)
}

/// Carves from `root`, then launches one SEB chain from each of `c` states
/// spread along the carved path. Tributary `i` uses seed
/// `seb_cfg.rng_seed + i`, so the tributary from the root replays a plain
/// SEB chain with the same seed.
pub fn joint_exploration(
    root: &Srp,
    points: &PointSet,
    carve_cfg: &PqmcConfig,
    seb_cfg: &PqmcConfig,
    c: usize,
) -> Result<Vec<PqmcPath>> {
    let carve = carve_path(root, points, carve_cfg)?;
    launch_states(&carve, c)?
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let cfg = PqmcConfig { rng_seed: seb_cfg.rng_seed.wrapping_add(i as u64), ..*seb_cfg };
            run_pqmc(s, points, Priority::Seb, &cfg)
        })
        .collect()
}
