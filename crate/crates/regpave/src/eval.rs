//! L1 distance between a histogram and a known density.
//!
//! The histogram is constant on each leaf, so
//! `∫|f_n - f| = Σ_leaf ∫_leaf |h_leaf - f(x)| dx + P_f(outside root box)`.
//! Each leaf integral is estimated from uniform draws inside the leaf; the
//! outside mass is exact (products of 1-D CDF differences).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regpave_core::{Histogram, IntervalBox};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_MC_PER_LEAF: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// Standard multivariate Gaussian, identity covariance.
    Gaussian { dim: usize },
    /// Uniform on a box.
    Uniform { support: IntervalBox },
}

/// Standard normal CDF difference `Φ(hi) - Φ(lo)`, computed on the side
/// that keeps precision in the tails.
fn normal_mass(lo: f64, hi: f64) -> f64 {
    let tail = |x: f64| 0.5 * libm::erfc(x * FRAC_1_SQRT_2);
    if lo >= 0.0 {
        tail(lo) - tail(hi)
    } else if hi <= 0.0 {
        tail(-hi) - tail(-lo)
    } else {
        1.0 - tail(-lo) - tail(hi)
    }
}

impl Reference {
    /// `gaussian` or `uniform` (on `uniform_support`, default unit cube).
    pub fn from_name(name: &str, dim: usize, uniform_support: Option<IntervalBox>) -> Result<Self> {
        match name {
            "gaussian" => Ok(Reference::Gaussian { dim }),
            "uniform" => {
                let support = match uniform_support {
                    Some(b) => b,
                    None => IntervalBox::unit(dim)?,
                };
                if support.dim() != dim {
                    return Err(Error::Config("uniform support has the wrong dimension".into()));
                }
                Ok(Reference::Uniform { support })
            }
            other => Err(Error::UnknownReference(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Reference::Gaussian { dim } => *dim,
            Reference::Uniform { support } => support.dim(),
        }
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        match self {
            Reference::Gaussian { dim } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-0.5 * r2).exp() / (2.0 * PI).powf(*dim as f64 / 2.0)
            }
            Reference::Uniform { support } => {
                if support.contains(x).unwrap_or(false) {
                    1.0 / support.volume()
                } else {
                    0.0
                }
            }
        }
    }

    /// Probability of the box `b`.
    pub fn box_mass(&self, b: &IntervalBox) -> f64 {
        match self {
            Reference::Gaussian { .. } => b.intervals().iter().map(|iv| normal_mass(iv.lo, iv.hi)).product(),
            Reference::Uniform { support } => b
                .intervals()
                .iter()
                .zip(support.intervals())
                .map(|(a, s)| (a.hi.min(s.hi) - a.lo.max(s.lo)).max(0.0) / s.width())
                .product(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub l1_estimate: f64,
    pub l1_std_error: f64,
    pub samples_per_leaf: usize,
    pub outside_mass: f64,
}

/// Stratified Monte Carlo estimate of `∫|h - f|`. Leaf `i` draws from its own
/// stream of a generator seeded with `seed`, so the result does not depend
/// on thread scheduling. Empty leaves contribute their exact reference mass.
pub fn l1_error(h: &Histogram, reference: &Reference, mc_per_leaf: usize, seed: u64) -> Result<EvalReport> {
    if reference.dim() != h.dim() {
        return Err(Error::Config(format!(
            "reference has dimension {}, histogram {}",
            reference.dim(),
            h.dim()
        )));
    }
    if mc_per_leaf == 0 {
        return Err(Error::Config("need at least one Monte Carlo draw per leaf".into()));
    }
    let per_leaf: Vec<(f64, f64)> = h
        .leaves()
        .par_iter()
        .enumerate()
        .map(|(i, leaf)| {
            if leaf.height == 0.0 {
                return (reference.box_mass(&leaf.cell), 0.0);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let ivs = leaf.cell.intervals();
            let mut x = vec![0.0; ivs.len()];
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..mc_per_leaf {
                for (xj, iv) in x.iter_mut().zip(ivs) {
                    *xj = iv.lo + rng.random::<f64>() * iv.width();
                }
                let g = (leaf.height - reference.density(&x)).abs();
                sum += g;
                sum_sq += g * g;
            }
            let m = mc_per_leaf as f64;
            let mean = sum / m;
            let var = if mc_per_leaf > 1 { (sum_sq - m * mean * mean).max(0.0) / (m - 1.0) } else { 0.0 };
            (leaf.volume * mean, leaf.volume * leaf.volume * var / m)
        })
        .collect();
    let inside: f64 = per_leaf.iter().map(|p| p.0).sum();
    let variance: f64 = per_leaf.iter().map(|p| p.1).sum();
    let outside_mass = (1.0 - reference.box_mass(h.root_box())).max(0.0);
    Ok(EvalReport {
        // the true value is at most 2; only sampling noise can exceed it
        l1_estimate: (inside + outside_mass).clamp(0.0, 2.0),
        l1_std_error: variance.sqrt(),
        samples_per_leaf: mc_per_leaf,
        outside_mass,
    })
}
