//! End-to-end estimation: ingest, carve, run SEB tributaries, smooth, export.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use regpave_core::pqmc::launch_indices;
use regpave_core::smoothing::{select_traced, TauTrace};
use regpave_core::{
    bounding_box, carve_path, launch_states, run_pqmc, threshold_path, Histogram, IntervalBox, OutsidePolicy,
    PointSet, PqmcConfig, PqmcPath, Priority, RpTree, ScoredEstimate, SmoothingConfig, Srp, TieBreak,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::RayonExecutor;
use crate::format::{histogram_to_json, HistogramFile};
use crate::input::ingest_csv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub dim: usize,
    pub shards: usize,
    /// Relative padding of the data bounding box.
    pub pad: f64,
    /// Fixed root box instead of the padded bounding box.
    pub root_box: Option<Vec<[f64; 2]>>,
    /// Leaves on the support-carved path; `None` means `max(1, maxlvs / 10)`.
    pub carve_leaves: Option<usize>,
    pub tributaries: usize,
    /// SEB thresholds; each tributary runs once per value.
    pub maxpts: Vec<f64>,
    pub maxlvs: usize,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_steps: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Run tributaries with the one-split-at-a-time chain instead of the
    /// sharded threshold builder.
    pub sequential: bool,
    /// Error on malformed rows and points outside the root box instead of
    /// skipping them.
    pub strict: bool,
    /// Lowest-label ties on the carved path instead of seeded random ones.
    pub deterministic_ties: bool,
    pub max_depth: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            dim: 2,
            shards: 8,
            pad: regpave_core::geometry::DEFAULT_PAD,
            root_box: None,
            carve_leaves: None,
            tributaries: 5,
            maxpts: vec![50.0, 500.0, 1500.0],
            maxlvs: 10_000,
            tau_min: SmoothingConfig::DEFAULT_TAU_MIN,
            tau_max: SmoothingConfig::DEFAULT_TAU_MAX,
            tau_steps: SmoothingConfig::DEFAULT_TAU_STEPS,
            seed: 0,
            output: None,
            sequential: false,
            strict: false,
            deterministic_ties: false,
            max_depth: regpave_core::tree::DEFAULT_MAX_DEPTH,
        }
    }
}

impl RunConfig {
    pub fn carve_leaves(&self) -> usize {
        self.carve_leaves.unwrap_or((self.maxlvs / 10).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("shards", self.shards),
            ("tributaries", self.tributaries),
            ("maxlvs", self.maxlvs),
            ("carve leaves", self.carve_leaves()),
            ("tau steps", self.tau_steps),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.maxpts.is_empty() {
            return Err(Error::Config("maxpts grid is empty".into()));
        }
        if self.maxpts.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Config("maxpts values must be finite and non-negative".into()));
        }
        if let Some(b) = &self.root_box {
            if b.len() != self.dim {
                return Err(Error::Config("root box dimension differs from --dim".into()));
            }
        }
        Ok(())
    }

    fn smoothing(&self) -> Result<SmoothingConfig> {
        Ok(SmoothingConfig::geometric(self.tau_min, self.tau_max, self.tau_steps)?)
    }
}

/// One SEB run: which launch state it started from and how it ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TributaryInfo {
    pub tributary: usize,
    /// Splits along the carved path before launch.
    pub launch_index: usize,
    pub maxpts: f64,
    pub start_leaves: usize,
    pub final_leaves: usize,
    pub stop_reason: String,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub tau: f64,
    pub leaves: usize,
    pub cv_score: f64,
    pub penalized_score: f64,
    pub tributary: usize,
    pub maxpts: f64,
    pub state_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub config: RunConfig,
    pub mode: &'static str,
    pub n: u64,
    pub skipped_rows: usize,
    pub dropped_points: usize,
    pub root_box: Vec<[f64; 2]>,
    pub carve_leaves: usize,
    pub carve_stop: String,
    pub tributaries: Vec<TributaryInfo>,
    pub selected: Selection,
    pub tau_trace: Vec<TauTraceRow>,
    /// Wall-clock milliseconds per stage.
    pub timings_ms: BTreeMap<&'static str, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauTraceRow {
    pub tau: f64,
    pub leaves: usize,
    pub cv_score: f64,
}

impl From<&TauTrace> for TauTraceRow {
    fn from(t: &TauTrace) -> Self {
        TauTraceRow { tau: t.tau, leaves: t.leaves, cv_score: t.cv_score }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub histogram: Histogram,
    pub estimate: ScoredEstimate,
    pub paths: Vec<PqmcPath>,
    pub manifest: Manifest,
}

struct Stopwatch {
    last: Instant,
    start: Instant,
    laps: BTreeMap<&'static str, f64>,
}

impl Stopwatch {
    fn new() -> Self {
        let now = Instant::now();
        Stopwatch { last: now, start: now, laps: BTreeMap::new() }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        *self.laps.entry(stage).or_insert(0.0) += (now - self.last).as_secs_f64() * 1e3;
        self.last = now;
    }

    fn finish(mut self) -> BTreeMap<&'static str, f64> {
        self.laps.insert("total", self.start.elapsed().as_secs_f64() * 1e3);
        self.laps
    }
}

/// Reads `cfg.input`, runs the pipeline and writes `cfg.output` plus a
/// manifest next to it.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let input = cfg.input.as_ref().ok_or_else(|| Error::Config("no input file".into()))?;
    let mut watch = Stopwatch::new();
    let ingested = ingest_csv(input, cfg.dim, cfg.strict)?;
    watch.lap("ingest");
    let out = run_with_watch(ingested.points, ingested.skipped, cfg, watch)?;
    if let Some(path) = &cfg.output {
        write_outputs(&out, path)?;
    }
    Ok(out)
}

/// The pipeline on points already in memory. Nothing is written.
pub fn run_on_points(points: PointSet, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    run_with_watch(points, 0, cfg, Stopwatch::new())
}

pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

pub fn write_outputs(out: &RunOutput, path: &Path) -> Result<()> {
    std::fs::write(path, histogram_to_json(&out.histogram)?).map_err(|e| Error::io(path, e))?;
    let mpath = manifest_path(path);
    let text = serde_json::to_string_pretty(&out.manifest)? + "\n";
    std::fs::write(&mpath, text).map_err(|e| Error::io(mpath, e))
}

fn run_with_watch(points: PointSet, skipped_rows: usize, cfg: &RunConfig, mut watch: Stopwatch) -> Result<RunOutput> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if points.dim() != cfg.dim {
        return Err(Error::Config(format!("data has dimension {}, config says {}", points.dim(), cfg.dim)));
    }
    let smoothing = cfg.smoothing()?;

    let root_box = match &cfg.root_box {
        Some(pairs) => IntervalBox::from_bounds(&pairs.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>())?,
        None => bounding_box(&points, cfg.pad)?,
    };
    let policy = if cfg.strict { OutsidePolicy::Strict } else { OutsidePolicy::Drop };
    let (points, dropped_points) = keep_inside(points, &root_box, policy)?;
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let root = Srp::ingest(RpTree::new(root_box.clone()), &points, OutsidePolicy::Strict)?;
    watch.lap("ingest");

    let carve_cfg = PqmcConfig {
        max_psi: 0.0,
        max_leaves: cfg.carve_leaves(),
        max_depth: cfg.max_depth,
        rng_seed: cfg.seed,
        tie_break: if cfg.deterministic_ties { TieBreak::LowestLabel } else { TieBreak::Random },
    };
    let carve = carve_path(&root, &points, &carve_cfg)?;
    let starts = launch_states(&carve, cfg.tributaries)?;
    let launch_idx = launch_indices(carve.split_count(), cfg.tributaries);
    watch.lap("carve");

    // SEB tributaries use lowest-label ties in both modes so that the
    // sharded builder reproduces the chain exactly
    let jobs: Vec<(usize, f64)> =
        (0..starts.len()).flat_map(|i| cfg.maxpts.iter().map(move |&m| (i, m))).collect();
    let seb_cfg = |i: usize, m: f64| PqmcConfig {
        max_psi: m,
        max_leaves: cfg.maxlvs,
        max_depth: cfg.max_depth,
        rng_seed: cfg.seed.wrapping_add(i as u64),
        tie_break: TieBreak::LowestLabel,
    };
    let paths: Vec<PqmcPath> = if cfg.sequential {
        jobs.iter()
            .map(|&(i, m)| run_pqmc(&starts[i], &points, Priority::Seb, &seb_cfg(i, m)))
            .collect::<regpave_core::Result<_>>()?
    } else {
        jobs.par_iter()
            .map(|&(i, m)| {
                threshold_path(&points, &starts[i], Priority::Seb, &seb_cfg(i, m), cfg.shards, &RayonExecutor)
            })
            .collect::<regpave_core::Result<_>>()?
    };
    watch.lap("build");

    let (estimate, trace) = select_traced(&paths, &smoothing)?;
    let histogram = estimate.srp.histogram()?;
    watch.lap("smoothing");

    let tributaries = jobs
        .iter()
        .zip(&paths)
        .map(|(&(i, m), p)| TributaryInfo {
            tributary: i,
            launch_index: launch_idx[i],
            maxpts: m,
            start_leaves: p.start().leaf_count(),
            final_leaves: p.last().leaf_count(),
            stop_reason: format!("{:?}", p.stop_reason()),
            success: p.success(),
        })
        .collect();
    let (sel_trib, sel_maxpts) = jobs[estimate.path_index];
    let selected = Selection {
        tau: estimate.tau,
        leaves: estimate.srp.leaf_count(),
        cv_score: estimate.cv_score,
        penalized_score: estimate.penalized_score,
        tributary: sel_trib,
        maxpts: sel_maxpts,
        state_index: estimate.state_index,
    };
    let manifest = Manifest {
        version: crate::format::HISTOGRAM_VERSION,
        seed: cfg.seed,
        config: cfg.clone(),
        mode: if cfg.sequential { "sequential" } else { "parallel" },
        n: root.n(),
        skipped_rows,
        dropped_points,
        root_box: HistogramFile::from_histogram(&histogram).root_box,
        carve_leaves: carve.last().leaf_count(),
        carve_stop: format!("{:?}", carve.stop_reason()),
        tributaries,
        selected,
        tau_trace: trace.iter().map(TauTraceRow::from).collect(),
        timings_ms: BTreeMap::new(),
    };
    let mut out = RunOutput { histogram, estimate, paths, manifest };
    watch.lap("export");
    out.manifest.timings_ms = watch.finish();
    Ok(out)
}

fn keep_inside(points: PointSet, root_box: &IntervalBox, policy: OutsidePolicy) -> Result<(PointSet, usize)> {
    let mut outside = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !root_box.contains(p)? {
            if policy == OutsidePolicy::Strict {
                return Err(regpave_core::Error::PointOutsideRootBox { index: i }.into());
            }
            outside.push(i);
        }
    }
    if outside.is_empty() {
        return Ok((points, 0));
    }
    let mut kept = PointSet::new(points.dim());
    let mut skip = outside.iter().peekable();
    for (i, p) in points.iter().enumerate() {
        if skip.peek() == Some(&&i) {
            skip.next();
            continue;
        }
        kept.push(p)?;
    }
    Ok((kept, outside.len()))
}
