//! Penalized-likelihood selection along chain paths and choice of the
//! smoothing parameter by leave-one-out cross-validation.
//!
//! For a smoothing parameter `tau`, a state `s` with `m` leaves scores
//! `log L(s) - m / tau`. For every `tau` on a grid the best-scoring candidate
//! state is found, and the `tau` whose choice has the smallest leave-one-out
//! score wins.
//!
//! The leave-one-out estimate keeps the partition fixed and removes the point
//! from its leaf count, so for a point in leaf `l`,
//! `f^(-i)(x_i) = (c_l - 1) / ((n - 1) v_l)` and
//!
//! ```text
//! J = sum_l c_l^2 / (n^2 v_l) - 2 / (n (n - 1)) * sum_l c_l (c_l - 1) / v_l
//! ```

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::label::NodeLabel;
use crate::pqmc::PqmcPath;
use crate::srp::Srp;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingConfig {
    pub tau_grid: Vec<f64>,
}

impl SmoothingConfig {
    pub const DEFAULT_TAU_MIN: f64 = 0.1;
    pub const DEFAULT_TAU_MAX: f64 = 1e5;
    pub const DEFAULT_TAU_STEPS: usize = 30;

    /// `steps` geometrically spaced values from `min` to `max` inclusive.
    pub fn geometric(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(min > 0.0 && min.is_finite() && max.is_finite() && max >= min) {
            return Err(Error::InvalidConfig(alloc::format!("bad tau grid [{min}, {max}] with {steps} steps")));
        }
        if steps == 1 {
            return Self::new(alloc::vec![min]);
        }
        let ratio = libm::log(max / min) / (steps - 1) as f64;
        let mut grid: Vec<f64> = (0..steps).map(|i| min * libm::exp(ratio * i as f64)).collect();
        grid[steps - 1] = max;
        Self::new(grid)
    }

    pub fn new(tau_grid: Vec<f64>) -> Result<Self> {
        if tau_grid.is_empty() {
            return Err(Error::InvalidConfig("empty tau grid".into()));
        }
        for &t in &tau_grid {
            check_tau(t)?;
        }
        if tau_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("tau grid must be strictly increasing".into()));
        }
        Ok(SmoothingConfig { tau_grid })
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self::geometric(Self::DEFAULT_TAU_MIN, Self::DEFAULT_TAU_MAX, Self::DEFAULT_TAU_STEPS)
            .expect("default grid is valid")
    }
}

/// A candidate chosen for a smoothing parameter, with its scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEstimate {
    pub srp: Srp,
    pub tau: f64,
    pub penalized_score: f64,
    pub cv_score: f64,
    /// Which path and which state along it the estimate came from.
    pub path_index: usize,
    pub state_index: usize,
}

/// One row of the tau sweep done by [`select_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct TauTrace {
    pub tau: f64,
    pub leaves: usize,
    pub cv_score: f64,
    pub path_index: usize,
    pub state_index: usize,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTau(tau))
    }
}

pub fn penalized_score(s: &Srp, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(s.log_likelihood()? - s.leaf_count() as f64 / tau)
}

/// Closed-form leave-one-out cross-validation score of the histogram of `s`.
pub fn cv_score(s: &Srp) -> Result<f64> {
    let n = s.n();
    if n < 2 {
        return Err(Error::InsufficientData(n));
    }
    let nf = n as f64;
    let mut square = 0.0;
    let mut loo = 0.0;
    for (v, c, vol) in s.leaf_stats()? {
        if c == 0 {
            continue;
        }
        if vol <= 0.0 {
            return Err(Error::ZeroVolumeCell(v));
        }
        let c = c as f64;
        square += c * c / vol;
        loo += c * (c - 1.0) / vol;
    }
    Ok(square / (nf * nf) - 2.0 * loo / (nf * (nf - 1.0)))
}

fn loglik_term(c: u64, vol: f64, n: f64, label: &NodeLabel) -> Result<f64> {
    if c == 0 {
        return Ok(0.0);
    }
    if vol <= 0.0 {
        return Err(Error::ZeroVolumeCell(label.clone()));
    }
    let c = c as f64;
    Ok(c * libm::log(c / (n * vol)))
}

/// Log-likelihood and leaf count of every state of every path, computed
/// incrementally along each path.
struct CandidateTable {
    // per path: (log-likelihood, leaves) per state
    rows: Vec<Vec<(f64, usize)>>,
}

impl CandidateTable {
    fn build(paths: &[PqmcPath]) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::EmptyCandidateSet);
        }
        let mut rows = Vec::with_capacity(paths.len());
        for path in paths {
            let last = path.last();
            let n = last.n();
            if n == 0 {
                return Err(Error::EmptySample);
            }
            let nf = n as f64;
            let boxes = last.tree().node_boxes()?;
            let vol = |v: &NodeLabel| boxes[v].volume();
            let counts = last.counts();
            let mut ll = path.start().log_likelihood()?;
            let mut m = path.start().leaf_count();
            let mut row = Vec::with_capacity(path.len());
            row.push((ll, m));
            for v in path.splits() {
                let (a, b) = v.children();
                ll += loglik_term(counts[&a], vol(&a), nf, &a)? + loglik_term(counts[&b], vol(&b), nf, &b)?
                    - loglik_term(counts[v], vol(v), nf, v)?;
                m += 1;
                row.push((ll, m));
            }
            rows.push(row);
        }
        Ok(CandidateTable { rows })
    }

    /// Best `(path, state)` at `tau`: highest score, then fewer leaves, then
    /// lexicographically smaller leaf-label list.
    fn argmax(&self, paths: &[PqmcPath], tau: f64) -> (usize, usize) {
        let mut best: Vec<(usize, usize)> = Vec::new();
        let mut best_key = (f64::NEG_INFINITY, usize::MAX);
        for (p, row) in self.rows.iter().enumerate() {
            for (t, &(ll, m)) in row.iter().enumerate() {
                let score = ll - m as f64 / tau;
                let ord = score.total_cmp(&best_key.0).then_with(|| best_key.1.cmp(&m));
                match ord {
                    Ordering::Greater => {
                        best_key = (score, m);
                        best.clear();
                        best.push((p, t));
                    }
                    Ordering::Equal => best.push((p, t)),
                    Ordering::Less => {}
                }
            }
        }
        if best.len() == 1 {
            return best[0];
        }
        best.into_iter()
            .map(|(p, t)| {
                let leaves: Vec<NodeLabel> = paths[p].state(t).tree().leaves().iter().cloned().collect();
                (leaves, p, t)
            })
            .min()
            .map(|(_, p, t)| (p, t))
            .expect("at least one candidate")
    }
}

fn scored(paths: &[PqmcPath], p: usize, t: usize, tau: f64) -> Result<ScoredEstimate> {
    let srp = paths[p].state(t);
    let penalized_score = penalized_score(&srp, tau)?;
    let cv_score = cv_score(&srp)?;
    Ok(ScoredEstimate { srp, tau, penalized_score, cv_score, path_index: p, state_index: t })
}

/// The state, across all states of all paths, maximizing the penalized
/// likelihood at `tau`.
pub fn map_estimate(paths: &[PqmcPath], tau: f64) -> Result<ScoredEstimate> {
    check_tau(tau)?;
    let table = CandidateTable::build(paths)?;
    let (p, t) = table.argmax(paths, tau);
    scored(paths, p, t, tau)
}

/// Picks the MAP estimate of the grid value with the smallest
/// cross-validation score (ties go to the smaller `tau`).
pub fn select(paths: &[PqmcPath], cfg: &SmoothingConfig) -> Result<ScoredEstimate> {
    select_traced(paths, cfg).map(|(best, _)| best)
}

/// Like [`select`], also returning the per-`tau` choices.
pub fn select_traced(paths: &[PqmcPath], cfg: &SmoothingConfig) -> Result<(ScoredEstimate, Vec<TauTrace>)> {
    for &t in &cfg.tau_grid {
        check_tau(t)?;
    }
    let table = CandidateTable::build(paths)?;
    let mut cv_cache: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut trace = Vec::with_capacity(cfg.tau_grid.len());
    let mut best: Option<(f64, f64, usize, usize)> = None;
    for &tau in &cfg.tau_grid {
        let (p, t) = table.argmax(paths, tau);
        let cv = match cv_cache.get(&(p, t)) {
            Some(&cv) => cv,
            None => {
                let cv = cv_score(&paths[p].state(t))?;
                cv_cache.insert((p, t), cv);
                cv
            }
        };
        trace.push(TauTrace { tau, leaves: table.rows[p][t].1, cv_score: cv, path_index: p, state_index: t });
        if best.is_none_or(|(b, ..)| cv < b) {
            best = Some((cv, tau, p, t));
        }
    }
    let (_, tau, p, t) = best.ok_or(Error::EmptyCandidateSet)?;
    Ok((scored(paths, p, t, tau)?, trace))
}
