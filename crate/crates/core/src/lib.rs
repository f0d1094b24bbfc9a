//! Regular pavings and statistical regular paving histograms.
//!
//! A regular paving is a binary tree over a root box where every split bisects
//! a cell at the midpoint of its first widest coordinate. Nodes are addressed by
//! [`NodeLabel`]s (root = 1, children of `n` are `2n` and `2n + 1`), so a cell's
//! box is a pure function of its label and the root box.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, threads and the
//! command line live in the companion `regpave` crate.
//!
//! Layout:
//!
//! - [`geometry`]: intervals, boxes, midpoint bisection, point sets.
//! - [`label`] / [`tree`]: node labels and regular paving trees.
//! - [`srp`]: per-node counts, histograms, likelihood.
//! - [`pqmc`]: priority-queued splitting chains and joint exploration.
//! - [`smoothing`]: penalized likelihood and leave-one-out cross-validation.
//! - [`builder`]: the sharded threshold builder and path backtracking.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod builder;
pub mod error;
pub mod geometry;
pub mod label;
pub mod pqmc;
pub mod priority;
pub mod smoothing;
pub mod srp;
pub mod tree;

pub use builder::{
    backtrack, build_threshold_tree, threshold_path, BuildConfig, BuildResult, Coarsening,
    CountTable, SequentialExecutor, ShardExecutor, TaggedDataset, ThresholdBuild,
};
pub use error::{Error, Result};
pub use geometry::{bounding_box, Hyperplane, Interval, IntervalBox, PointSet};
pub use label::{NodeLabel, Side};
pub use pqmc::{
    carve_path, joint_exploration, launch_states, run_pqmc, PqmcConfig, PqmcPath, StopReason,
    TieBreak,
};
pub use priority::Priority;
pub use smoothing::{ScoredEstimate, SmoothingConfig};
pub use srp::{Histogram, LeafRecord, OutsidePolicy, Srp};
pub use tree::RpTree;
