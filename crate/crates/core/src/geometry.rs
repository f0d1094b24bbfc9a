//! Intervals, boxes and midpoint bisection along the first widest coordinate.
//!
//! All arithmetic is plain binary64. A bisection gives the left child the
//! half-open interval `[lo, mid)` on the split coordinate and the right child
//! `[mid, hi]`, so a point on the splitting hyperplane always goes right.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative padding applied per side by default when deriving a root box from data.
pub const DEFAULT_PAD: f64 = 1e-9;

/// Absolute half-width given to zero-width sides when padding is requested.
pub const ZERO_WIDTH_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    /// Closed interval `[lo, hi]`.
    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi, lo_open: false, hi_open: false })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        self.lo + (self.hi - self.lo) / 2.0
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }
}

/// The axis-aligned plane a node is bisected along: points with
/// `coords[axis] < mid` belong to the left child.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperplane {
    pub axis: usize,
    pub mid: f64,
}

impl Hyperplane {
    #[inline]
    pub fn is_left(&self, point: &[f64]) -> bool {
        point[self.axis] < self.mid
    }
}

/// An axis-aligned box: one [`Interval`] per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBox {
    intervals: Vec<Interval>,
}

impl IntervalBox {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::EmptyInput);
        }
        for iv in &intervals {
            if !(iv.lo.is_finite() && iv.hi.is_finite()) || iv.lo > iv.hi {
                return Err(Error::InvalidInterval { lo: iv.lo, hi: iv.hi });
            }
        }
        Ok(IntervalBox { intervals })
    }

    /// Closed box from `(lo, hi)` pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let intervals = bounds
            .iter()
            .map(|&(lo, hi)| Interval::closed(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        IntervalBox::new(intervals)
    }

    /// The closed unit hypercube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        IntervalBox::from_bounds(&alloc::vec![(0.0, 1.0); dim])
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(Interval::width).product()
    }

    /// Index of the first coordinate of maximal width.
    pub fn widest_coordinate(&self) -> usize {
        let mut best = 0;
        let mut best_width = self.intervals[0].width();
        for (i, iv) in self.intervals.iter().enumerate().skip(1) {
            if iv.width() > best_width {
                best = i;
                best_width = iv.width();
            }
        }
        best
    }

    /// The hyperplane a bisection of this box would use, if the box can be
    /// bisected in machine arithmetic.
    pub fn split_plane(&self) -> Result<Hyperplane> {
        let axis = self.widest_coordinate();
        let iv = self.intervals[axis];
        let mid = iv.midpoint();
        if !(iv.lo < mid && mid < iv.hi) {
            return Err(Error::NotBisectable { coordinate: axis, lo: iv.lo, hi: iv.hi });
        }
        Ok(Hyperplane { axis, mid })
    }

    pub fn is_bisectable(&self) -> bool {
        self.split_plane().is_ok()
    }

    /// Regular bisection into `(left, right)`.
    pub fn bisect(&self) -> Result<(IntervalBox, IntervalBox)> {
        let plane = self.split_plane()?;
        Ok((self.half(plane, crate::label::Side::Left), self.half(plane, crate::label::Side::Right)))
    }

    pub(crate) fn half(&self, plane: Hyperplane, side: crate::label::Side) -> IntervalBox {
        let mut intervals = self.intervals.clone();
        let iv = &mut intervals[plane.axis];
        match side {
            crate::label::Side::Left => {
                iv.hi = plane.mid;
                iv.hi_open = true;
            }
            crate::label::Side::Right => {
                iv.lo = plane.mid;
                iv.lo_open = false;
            }
        }
        IntervalBox { intervals }
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: point.len() });
        }
        Ok(self.contains_unchecked(point))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, point: &[f64]) -> bool {
        self.intervals.iter().zip(point).all(|(iv, &x)| iv.contains(x))
    }

    /// True when at least one side has zero width.
    pub fn is_degenerate(&self) -> bool {
        self.intervals.iter().any(|iv| iv.width() == 0.0)
    }
}

/// A finite collection of points in `R^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        PointSet { dim, coords: Vec::new() }
    }

    /// Wraps row-major coordinates. Rejects non-finite entries.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: coords.len() % dim });
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: pos / dim });
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            coords.extend_from_slice(row);
        }
        PointSet::from_flat(dim, coords)
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: point.len() });
        }
        if !point.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { index: self.len() });
        }
        self.coords.extend_from_slice(point);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }
}

/// Smallest closed box containing every point, each side then widened by
/// `pad * width` on both ends. Zero-width sides are widened by
/// [`ZERO_WIDTH_FLOOR`] instead. With `pad > 0` every point ends up strictly
/// inside; `pad = 0` returns the tight box (possibly degenerate).
pub fn bounding_box(points: &PointSet, pad: f64) -> Result<IntervalBox> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(pad >= 0.0 && pad.is_finite()) {
        return Err(Error::InvalidConfig(alloc::format!("pad must be a finite non-negative number, got {pad}")));
    }
    let dim = points.dim();
    let mut lo = alloc::vec![f64::INFINITY; dim];
    let mut hi = alloc::vec![f64::NEG_INFINITY; dim];
    for p in points.iter() {
        for j in 0..dim {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    let intervals = (0..dim)
        .map(|j| {
            let (mut a, mut b) = (lo[j], hi[j]);
            if pad > 0.0 {
                let w = b - a;
                let e = if w > 0.0 { pad * w } else { ZERO_WIDTH_FLOOR };
                a = (a - e).min(a.next_down());
                b = (b + e).max(b.next_up());
            }
            Interval::closed(a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    IntervalBox::new(intervals)
}
