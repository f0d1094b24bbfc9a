//! Data-parallel threshold splitting and path reconstruction.
//!
//! The sample is held as `(cell label, point)` pairs split over a fixed set of
//! shards. Each iteration
//!
//! 1. counts pairs per cell in every shard and merges the partial tables by
//!    addition (a `countByKey`),
//! 2. picks *every* cell whose priority exceeds the threshold and can still be
//!    split,
//! 3. retires all other cells: their counts move to the passed table and
//!    their pairs are dropped from the working set,
//! 4. retags the remaining pairs with the child cell on their side of the
//!    splitting hyperplane, a shard-local map.
//!
//! Since whether a cell is split depends only on the cell itself, the order
//! of splits does not matter and the result is the same tree a one-at-a-time
//! chain stops at. [`backtrack`] then recovers that chain's path by repeatedly
//! merging the cherry whose parent has least priority.
//!
//! Shards only meet at the count merge and at the publication of the split
//! set, so the result does not depend on the shard count or on scheduling.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::error::{Error, Result};
use crate::geometry::{Hyperplane, IntervalBox, PointSet};
use crate::label::{NodeLabel, Side};
use crate::pqmc::{PqmcConfig, PqmcPath, StopReason};
use crate::priority::Priority;
use crate::srp::Srp;
use crate::tree::{locate, RpTree, DEFAULT_MAX_DEPTH};

/// Runs per-shard work. Implementations may run shards concurrently; results
/// are returned in shard order.
pub trait ShardExecutor: Sync {
    fn map_ref<T, R, F>(&self, shards: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send;

    fn map_mut<T, R, F>(&self, shards: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(&mut T) -> R + Sync + Send;
}

/// Runs shards one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialExecutor;

impl ShardExecutor for SequentialExecutor {
    fn map_ref<T, R, F>(&self, shards: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        shards.iter().map(f).collect()
    }

    fn map_mut<T, R, F>(&self, shards: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(&mut T) -> R + Sync + Send,
    {
        shards.iter_mut().map(f).collect()
    }
}

/// Number of points per cell. Only non-empty cells appear.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountTable {
    counts: BTreeMap<NodeLabel, u64>,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, cell: NodeLabel, by: u64) {
        if by > 0 {
            *self.counts.entry(cell).or_insert(0) += by;
        }
    }

    /// Adds every entry of `other` into `self`.
    pub fn merge(&mut self, other: CountTable) {
        if self.counts.is_empty() {
            self.counts = other.counts;
            return;
        }
        for (k, v) in other.counts {
            self.add(k, v);
        }
    }

    pub fn get(&self, cell: &NodeLabel) -> Option<u64> {
        self.counts.get(cell).copied()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeLabel, u64)> + '_ {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    pub fn as_map(&self) -> &BTreeMap<NodeLabel, u64> {
        &self.counts
    }
}

impl FromIterator<(NodeLabel, u64)> for CountTable {
    fn from_iter<I: IntoIterator<Item = (NodeLabel, u64)>>(iter: I) -> Self {
        let mut t = CountTable::new();
        for (k, v) in iter {
            t.add(k, v);
        }
        t
    }
}

/// One shard of tagged points: `cells[i]` is the cell of point `ids[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Shard {
    cells: Vec<NodeLabel>,
    ids: Vec<u32>,
}

impl Shard {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn count(&self) -> CountTable {
        let mut t = CountTable::new();
        // points of one cell tend to sit next to each other
        let mut run: Option<(&NodeLabel, u64)> = None;
        for c in &self.cells {
            match run {
                Some((cur, k)) if cur == c => run = Some((cur, k + 1)),
                _ => {
                    if let Some((cur, k)) = run {
                        t.add(cur.clone(), k);
                    }
                    run = Some((c, 1));
                }
            }
        }
        if let Some((cur, k)) = run {
            t.add(cur.clone(), k);
        }
        t
    }
}

/// A sample partitioned into cells, stored as `(cell, point)` pairs spread
/// over a static set of shards. Points are referenced by index into a shared
/// read-only [`PointSet`].
#[derive(Debug, Clone)]
pub struct TaggedDataset<'a> {
    points: &'a PointSet,
    root_box: IntervalBox,
    shards: Vec<Shard>,
}

impl<'a> TaggedDataset<'a> {
    /// Every point tagged with the root cell, split into `shard_count`
    /// contiguous shards.
    pub fn new(points: &'a PointSet, root_box: IntervalBox, shard_count: usize) -> Result<Self> {
        Self::from_tree(points, &RpTree::new(root_box), shard_count, &SequentialExecutor)
    }

    /// Every point tagged with the leaf of `tree` containing it.
    pub fn from_tree<E: ShardExecutor>(
        points: &'a PointSet,
        tree: &RpTree,
        shard_count: usize,
        exec: &E,
    ) -> Result<Self> {
        if shard_count == 0 {
            return Err(Error::InvalidConfig("need at least one shard".into()));
        }
        if !points.is_empty() && points.dim() != tree.dim() {
            return Err(Error::DimensionMismatch { expected: tree.dim(), found: points.dim() });
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::InvalidConfig("too many points".into()));
        }
        let n = points.len();
        let mut shards: Vec<Shard> = (0..shard_count)
            .map(|s| {
                let (a, b) = (s * n / shard_count, (s + 1) * n / shard_count);
                Shard { cells: Vec::new(), ids: (a as u32..b as u32).collect() }
            })
            .collect();
        let planes = tree.split_planes()?;
        let root_box = tree.root_box();
        let outside = exec.map_mut(&mut shards, |sh| {
            sh.cells.reserve_exact(sh.ids.len());
            for &i in &sh.ids {
                let p = points.get(i as usize);
                if !root_box.contains_unchecked(p) {
                    return Some(i as usize);
                }
                sh.cells.push(locate(&planes, p));
            }
            None
        });
        if let Some(index) = outside.into_iter().flatten().min() {
            return Err(Error::PointOutsideRootBox { index });
        }
        Ok(TaggedDataset { points, root_box: root_box.clone(), shards })
    }

    pub fn root_box(&self) -> &IntervalBox {
        &self.root_box
    }

    pub fn points(&self) -> &'a PointSet {
        self.points
    }

    pub fn shard_count(&self) -> usize {
        self.shards.len()
    }

    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }

    /// Number of pairs currently held.
    pub fn len(&self) -> usize {
        self.shards.iter().map(Shard::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All `(cell, point)` pairs, shard by shard.
    pub fn pairs(&self) -> impl Iterator<Item = (&NodeLabel, &[f64])> + '_ {
        self.shards
            .iter()
            .flat_map(move |sh| sh.cells.iter().zip(&sh.ids).map(move |(c, &i)| (c, self.points.get(i as usize))))
    }
}

/// Multiplicity of every cell: per-shard partial tables merged by addition.
pub fn count_by_cell<E: ShardExecutor>(ds: &TaggedDataset<'_>, exec: &E) -> CountTable {
    let partials = exec.map_ref(&ds.shards, Shard::count);
    let mut total = CountTable::new();
    for p in partials {
        total.merge(p);
    }
    total
}

/// Memoized cell boxes, derived from the parent's box when available.
#[derive(Debug, Clone)]
struct CellCache {
    root_box: IntervalBox,
    boxes: BTreeMap<NodeLabel, IntervalBox>,
}

impl CellCache {
    fn new(root_box: IntervalBox) -> Self {
        CellCache { root_box, boxes: BTreeMap::new() }
    }

    fn get(&mut self, v: &NodeLabel) -> Result<IntervalBox> {
        if let Some(b) = self.boxes.get(v) {
            return Ok(b.clone());
        }
        let b = match (v.parent(), v.side()) {
            (Ok(p), Some(side)) if self.boxes.contains_key(&p) => {
                let pb = &self.boxes[&p];
                pb.half(pb.split_plane()?, side)
            }
            _ => crate::tree::cell_box(&self.root_box, v)?,
        };
        self.boxes.insert(v.clone(), b.clone());
        Ok(b)
    }
}

/// Threshold-splitting parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildConfig {
    pub priority: Priority,
    pub threshold: f64,
    pub max_depth: u32,
    pub shards: usize,
}

impl BuildConfig {
    pub fn new(priority: Priority, threshold: f64) -> Self {
        BuildConfig { priority, threshold, max_depth: DEFAULT_MAX_DEPTH, shards: 1 }
    }
}

struct Decision {
    split: BTreeMap<NodeLabel, Hyperplane>,
    exhausted: Vec<NodeLabel>,
}

fn decide(counts: &CountTable, cache: &mut CellCache, cfg: &BuildConfig, n: u64) -> Result<Decision> {
    let mut split = BTreeMap::new();
    let mut exhausted = Vec::new();
    for (v, c) in counts.iter() {
        let cell = cache.get(v)?;
        if cfg.priority.value(c, cell.volume(), n) <= cfg.threshold {
            continue;
        }
        match cell.split_plane() {
            Ok(plane) if v.depth() < cfg.max_depth => {
                split.insert(v.clone(), plane);
            }
            _ => exhausted.push(v.clone()),
        }
    }
    Ok(Decision { split, exhausted })
}

/// Cells of `counts` whose priority exceeds `threshold` and that can still be
/// split, with their splitting hyperplanes. `n` is the full sample size.
pub fn cells_to_split(
    counts: &CountTable,
    root_box: &IntervalBox,
    cfg: &BuildConfig,
    n: u64,
) -> Result<BTreeMap<NodeLabel, Hyperplane>> {
    let mut cache = CellCache::new(root_box.clone());
    Ok(decide(counts, &mut cache, cfg, n)?.split)
}

/// Retags every pair whose cell is in `split` with the child on its side of
/// the hyperplane. Purely shard-local.
pub fn apply_splits<E: ShardExecutor>(ds: &mut TaggedDataset<'_>, split: &BTreeMap<NodeLabel, Hyperplane>, exec: &E) {
    if split.is_empty() {
        return;
    }
    let points = ds.points;
    exec.map_mut(&mut ds.shards, |sh| {
        for (cell, &i) in sh.cells.iter_mut().zip(&sh.ids) {
            if let Some(plane) = split.get(cell) {
                let side = if plane.is_left(points.get(i as usize)) { Side::Left } else { Side::Right };
                *cell = cell.child(side);
            }
        }
    });
}

/// Drops every pair whose cell is not in `split`, moving those cells' counts
/// into `passed`. Cells that are not split now never will be.
pub fn prune<E: ShardExecutor>(
    ds: &mut TaggedDataset<'_>,
    counts: &CountTable,
    split: &BTreeMap<NodeLabel, Hyperplane>,
    passed: &mut CountTable,
    exec: &E,
) {
    for (v, c) in counts.iter() {
        if !split.contains_key(v) {
            passed.add(v.clone(), c);
        }
    }
    exec.map_mut(&mut ds.shards, |sh| {
        let mut keep = 0;
        for j in 0..sh.ids.len() {
            if split.contains_key(&sh.cells[j]) {
                sh.cells.swap(keep, j);
                sh.ids.swap(keep, j);
                keep += 1;
            }
        }
        sh.cells.truncate(keep);
        sh.ids.truncate(keep);
    });
}

/// Output of the threshold builder.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildResult {
    pub final_srp: Srp,
    /// Counts of cells retired because they were not split.
    pub passed_counts: CountTable,
    /// Iterations that split at least one cell.
    pub iterations: usize,
    /// Cells above the threshold that could not be split (depth limit or
    /// floating-point exhaustion).
    pub exhausted: Vec<NodeLabel>,
    /// Size of the merged count table in each iteration.
    pub table_sizes: Vec<usize>,
}

/// Step-by-step threshold builder; see the module docs.
pub struct ThresholdBuild<'a> {
    ds: TaggedDataset<'a>,
    base: RpTree,
    cfg: BuildConfig,
    n: u64,
    cache: CellCache,
    passed: CountTable,
    split_cells: Vec<NodeLabel>,
    exhausted: Vec<NodeLabel>,
    iterations: usize,
    table_sizes: Vec<usize>,
    done: bool,
}

impl<'a> ThresholdBuild<'a> {
    /// Starts from `base`, tagging each point with its leaf.
    pub fn new<E: ShardExecutor>(points: &'a PointSet, base: &RpTree, cfg: BuildConfig, exec: &E) -> Result<Self> {
        if cfg.threshold.is_nan() {
            return Err(Error::InvalidConfig("threshold is NaN".into()));
        }
        let ds = TaggedDataset::from_tree(points, base, cfg.shards, exec)?;
        Ok(ThresholdBuild {
            cache: CellCache::new(base.root_box().clone()),
            ds,
            base: base.clone(),
            cfg,
            n: points.len() as u64,
            passed: CountTable::new(),
            split_cells: Vec::new(),
            exhausted: Vec::new(),
            iterations: 0,
            table_sizes: Vec::new(),
            done: false,
        })
    }

    /// One count / filter / prune / retag round. Returns false once nothing
    /// was left to split.
    pub fn step<E: ShardExecutor>(&mut self, exec: &E) -> Result<bool> {
        if self.done {
            return Ok(false);
        }
        let counts = count_by_cell(&self.ds, exec);
        self.table_sizes.push(counts.len());
        let Decision { split, exhausted } = decide(&counts, &mut self.cache, &self.cfg, self.n)?;
        self.exhausted.extend(exhausted);
        prune(&mut self.ds, &counts, &split, &mut self.passed, exec);
        if split.is_empty() {
            self.done = true;
            return Ok(false);
        }
        apply_splits(&mut self.ds, &split, exec);
        self.split_cells.extend(split.into_keys());
        self.iterations += 1;
        Ok(true)
    }

    pub fn working(&self) -> &TaggedDataset<'a> {
        &self.ds
    }

    pub fn passed(&self) -> &CountTable {
        &self.passed
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn run<E: ShardExecutor>(mut self, exec: &E) -> Result<BuildResult> {
        while self.step(exec)? {}
        self.finish()
    }

    /// Assembles the final SRP. Leaves never seen in a count table (empty
    /// siblings) get count 0.
    pub fn finish(mut self) -> Result<BuildResult> {
        if !self.done {
            return Err(Error::InvalidConfig("build has not terminated".into()));
        }
        self.split_cells.sort();
        let mut tree = self.base;
        // ascending labels: parents come before their children
        for v in &self.split_cells {
            tree.split(v)?;
        }
        debug_assert!(self.passed.iter().all(|(v, _)| tree.is_leaf(v)));
        self.exhausted.sort();
        let final_srp = Srp::from_leaf_counts(tree, self.passed.as_map());
        Ok(BuildResult {
            final_srp,
            passed_counts: self.passed,
            iterations: self.iterations,
            exhausted: self.exhausted,
            table_sizes: self.table_sizes,
        })
    }
}

/// Splits every cell above the threshold, round after round, starting from
/// `base`, until no cell is above the threshold or splittable.
pub fn build_threshold_tree<E: ShardExecutor>(
    points: &PointSet,
    base: &RpTree,
    cfg: BuildConfig,
    exec: &E,
) -> Result<BuildResult> {
    ThresholdBuild::new(points, base, cfg, exec)?.run(exec)
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

/// A coarsening sequence: the final SRP followed by one merge per step.
#[derive(Debug, Clone)]
pub struct Coarsening {
    final_srp: Srp,
    merges: Vec<NodeLabel>,
    merge_priorities: Vec<f64>,
}

impl Coarsening {
    pub fn merges(&self) -> &[NodeLabel] {
        &self.merges
    }

    pub fn merge_priorities(&self) -> &[f64] {
        &self.merge_priorities
    }

    /// Number of states, including the final SRP.
    pub fn len(&self) -> usize {
        self.merges.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// States from the final SRP down to the base.
    pub fn states(&self) -> impl Iterator<Item = Srp> + '_ {
        let mut cur = Some(self.final_srp.clone());
        let mut i = 0;
        core::iter::from_fn(move || {
            let out = cur.take()?;
            if i < self.merges.len() {
                let mut next = out.clone();
                next.merge(&self.merges[i]).expect("recorded merge is a cherry");
                cur = Some(next);
                i += 1;
            }
            Some(out)
        })
    }

    /// The forward path: the base state followed by the merges in reverse.
    pub fn into_forward_path(self, stop: StopReason, success: bool) -> PqmcPath {
        let mut start = self.final_srp.clone();
        for v in &self.merges {
            start.merge(v).expect("recorded merge is a cherry");
        }
        let splits: Vec<NodeLabel> = self.merges.into_iter().rev().collect();
        let prios: Vec<f64> = self.merge_priorities.into_iter().rev().collect();
        PqmcPath::from_parts(start, splits, prios, self.final_srp, stop, success)
    }
}

/// Coarsens `srp` down to the tree `base` by repeatedly merging the cherry
/// whose node has least priority (computed from the cached count and the
/// label's volume). Ties merge the highest label first, which undoes a
/// lowest-label-first chain exactly. Internal nodes of `base` are never
/// merged.
pub fn backtrack(srp: &Srp, base: &RpTree, priority: Priority) -> Result<Coarsening> {
    for v in base.internal_nodes() {
        if !srp.tree().is_internal(v) {
            return Err(Error::InvalidTree(alloc::format!("base node {v} is not split in the final tree")));
        }
    }
    let n = srp.n();
    let boxes = srp.tree().node_boxes()?;
    let base_internal: BTreeSet<&NodeLabel> = base.internal_nodes().collect();
    let prio = |v: &NodeLabel| priority.value(srp.count(v).unwrap_or(0), boxes[v].volume(), n);

    // max-heap on (lowest priority, highest label)
    let mut heap: BinaryHeap<(Reverse<Key>, NodeLabel)> = srp
        .tree()
        .cherries()
        .filter(|v| !base_internal.contains(v))
        .map(|v| (Reverse(Key(prio(v))), v.clone()))
        .collect();

    let mut tree = srp.tree().clone();
    let mut merges = Vec::new();
    let mut merge_priorities = Vec::new();
    while let Some((Reverse(Key(p)), v)) = heap.pop() {
        tree.merge(&v)?;
        if let Ok(parent) = v.parent() {
            if !base_internal.contains(&parent) && tree.is_cherry(&parent) {
                heap.push((Reverse(Key(prio(&parent))), parent));
            }
        }
        merges.push(v);
        merge_priorities.push(p);
    }
    Ok(Coarsening { final_srp: srp.clone(), merges, merge_priorities })
}

/// Stop reason and success flag a chain with `cfg` would report at `last`.
pub(crate) fn classify_stop(last: &Srp, priority: Priority, cfg: &PqmcConfig) -> Result<(StopReason, bool)> {
    let boxes = last.tree().node_boxes()?;
    let n = last.n();
    let splittable: Vec<f64> = last
        .tree()
        .leaves()
        .iter()
        .filter_map(|v| {
            let c = last.count(v).unwrap_or(0);
            let b = &boxes[v];
            (c > 0 && v.depth() < cfg.max_depth && b.is_bisectable()).then(|| priority.value(c, b.volume(), n))
        })
        .collect();
    let stop = if splittable.is_empty() {
        StopReason::NoSplittable
    } else if last.leaf_count() >= cfg.max_leaves {
        StopReason::MaxLeaves
    } else {
        StopReason::PriorityThreshold
    };
    let success = last.leaf_count() <= cfg.max_leaves && splittable.iter().all(|&p| p <= cfg.max_psi);
    Ok((stop, success))
}

/// The chain path from `start` with threshold `cfg.max_psi`, computed by the
/// threshold builder plus backtracking, then cut at `cfg.max_leaves` leaves.
/// Matches [`crate::pqmc::run_pqmc`] with lowest-label ties.
pub fn threshold_path<E: ShardExecutor>(
    points: &PointSet,
    start: &Srp,
    priority: Priority,
    cfg: &PqmcConfig,
    shards: usize,
    exec: &E,
) -> Result<PqmcPath> {
    if cfg.max_leaves == 0 {
        return Err(Error::InvalidConfig("max_leaves must be at least 1".into()));
    }
    let build_cfg = BuildConfig { priority, threshold: cfg.max_psi, max_depth: cfg.max_depth, shards };
    let built = build_threshold_tree(points, start.tree(), build_cfg, exec)?;
    let coarse = backtrack(&built.final_srp, start.tree(), priority)?;
    let path = coarse.into_forward_path(StopReason::NoSplittable, true);
    if path.start() != start {
        return Err(Error::InvalidConfig("counts of the start state do not match the points".into()));
    }
    let path = path.truncate_leaves(cfg.max_leaves);
    let (stop, success) = classify_stop(path.last(), priority, cfg)?;
    let (start, splits, prios, last) =
        (path.start().clone(), path.splits().to_vec(), path.split_priorities().to_vec(), path.last().clone());
    Ok(PqmcPath::from_parts(start, splits, prios, last, stop, success))
}
