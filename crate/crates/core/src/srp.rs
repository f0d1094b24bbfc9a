//! Statistical regular pavings: a paving plus the number of sample points in
//! every node, and the histogram density they define.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Hyperplane, IntervalBox, PointSet};
use crate::label::NodeLabel;
use crate::tree::{locate, RpTree};

/// What to do with points that fall outside the root box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutsidePolicy {
    #[default]
    Strict,
    Drop,
}

/// A regular paving with the count of sample points cached at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Srp {
    tree: RpTree,
    counts: BTreeMap<NodeLabel, u64>,
    n: u64,
}

impl Srp {
    /// Counts `points` into the cells of `tree`. Returns the SRP and the number
    /// of points dropped for lying outside the root box (always 0 in strict
    /// mode, which errors instead).
    pub fn ingest_with_report(tree: RpTree, points: &PointSet, policy: OutsidePolicy) -> Result<(Srp, usize)> {
        if !points.is_empty() && points.dim() != tree.dim() {
            return Err(Error::DimensionMismatch { expected: tree.dim(), found: points.dim() });
        }
        let planes = tree.split_planes()?;
        let mut leaf_counts: BTreeMap<NodeLabel, u64> = BTreeMap::new();
        let mut dropped = 0;
        for (i, p) in points.iter().enumerate() {
            if !tree.root_box().contains_unchecked(p) {
                match policy {
                    OutsidePolicy::Strict => return Err(Error::PointOutsideRootBox { index: i }),
                    OutsidePolicy::Drop => {
                        dropped += 1;
                        continue;
                    }
                }
            }
            *leaf_counts.entry(locate(&planes, p)).or_insert(0) += 1;
        }
        Ok((Srp::from_leaf_counts(tree, &leaf_counts), dropped))
    }

    pub fn ingest(tree: RpTree, points: &PointSet, policy: OutsidePolicy) -> Result<Srp> {
        Self::ingest_with_report(tree, points, policy).map(|(s, _)| s)
    }

    /// Assembles an SRP from per-leaf counts; leaves missing from the map get
    /// count 0 and internal nodes get the sum of their children.
    pub fn from_leaf_counts(tree: RpTree, leaf_counts: &BTreeMap<NodeLabel, u64>) -> Srp {
        let mut counts = BTreeMap::new();
        // descending label order: children before parents
        for n in tree.nodes().iter().rev() {
            let c = if tree.is_leaf(n) {
                leaf_counts.get(n).copied().unwrap_or(0)
            } else {
                counts[&n.left()] + counts[&n.right()]
            };
            counts.insert(n.clone(), c);
        }
        let n = counts[&NodeLabel::ROOT];
        Srp { tree, counts, n }
    }

    /// Builds an SRP from a tree and a count table covering at least every node
    /// of the tree (extra entries are ignored).
    pub fn from_node_counts(tree: RpTree, all_counts: &BTreeMap<NodeLabel, u64>) -> Result<Srp> {
        let mut counts = BTreeMap::new();
        for v in tree.nodes() {
            let c = *all_counts
                .get(v)
                .ok_or_else(|| Error::InvalidTree(alloc::format!("no count for node {v}")))?;
            counts.insert(v.clone(), c);
        }
        let n = counts[&NodeLabel::ROOT];
        let srp = Srp { tree, counts, n };
        srp.check_counts()?;
        Ok(srp)
    }

    fn check_counts(&self) -> Result<()> {
        for v in self.tree.internal_nodes() {
            if self.counts[v] != self.counts[&v.left()] + self.counts[&v.right()] {
                return Err(Error::InvalidTree(alloc::format!("counts of node {v} do not add up")));
            }
        }
        Ok(())
    }

    pub fn tree(&self) -> &RpTree {
        &self.tree
    }

    pub fn into_tree(self) -> RpTree {
        self.tree
    }

    pub fn root_box(&self) -> &IntervalBox {
        self.tree.root_box()
    }

    /// Total sample size (the root count).
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn count(&self, v: &NodeLabel) -> Option<u64> {
        self.counts.get(v).copied()
    }

    pub fn counts(&self) -> &BTreeMap<NodeLabel, u64> {
        &self.counts
    }

    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count()
    }

    pub fn nonempty_leaves(&self) -> impl Iterator<Item = &NodeLabel> + '_ {
        self.tree.leaves().iter().filter(move |v| self.counts[*v] > 0)
    }

    /// Splits leaf `v`, recording the children's counts.
    pub fn split(&mut self, v: &NodeLabel, left: u64, right: u64) -> Result<()> {
        let c = self.count(v).ok_or_else(|| Error::NotALeaf(v.clone()))?;
        if left + right != c {
            return Err(Error::InvalidTree(alloc::format!("children counts of {v} must add up to {c}")));
        }
        self.tree.split(v)?;
        self.counts.insert(v.left(), left);
        self.counts.insert(v.right(), right);
        Ok(())
    }

    /// Merges cherry `v`; its count already equals the children's sum.
    pub fn merge(&mut self, v: &NodeLabel) -> Result<()> {
        self.tree.merge(v)?;
        self.counts.remove(&v.left());
        self.counts.remove(&v.right());
        Ok(())
    }

    /// `(label, count, volume)` for every leaf, ascending label order.
    pub fn leaf_stats(&self) -> Result<Vec<(NodeLabel, u64, f64)>> {
        let boxes = self.tree.node_boxes()?;
        Ok(self
            .tree
            .leaves()
            .iter()
            .map(|v| (v.clone(), self.counts[v], boxes[v].volume()))
            .collect())
    }

    /// Log-likelihood of the sample under the histogram of this SRP:
    /// the sum over non-empty leaves of `c * ln(c / (n * vol))`.
    pub fn log_likelihood(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::EmptySample);
        }
        let n = self.n as f64;
        let mut total = 0.0;
        for (v, c, vol) in self.leaf_stats()? {
            if c == 0 {
                continue;
            }
            if vol <= 0.0 {
                return Err(Error::ZeroVolumeCell(v));
            }
            let c = c as f64;
            total += c * libm::log(c / (n * vol));
        }
        Ok(total)
    }

    /// The histogram density estimate defined by this SRP.
    pub fn histogram(&self) -> Result<Histogram> {
        if self.n == 0 {
            return Err(Error::EmptySample);
        }
        let boxes = self.tree.node_boxes()?;
        let n = self.n as f64;
        let mut leaves = Vec::with_capacity(self.leaf_count());
        for v in self.tree.leaves() {
            let cell = boxes[v].clone();
            let count = self.counts[v];
            let volume = cell.volume();
            let height = if count == 0 {
                0.0
            } else if volume > 0.0 {
                count as f64 / (n * volume)
            } else {
                return Err(Error::ZeroVolumeCell(v.clone()));
            };
            leaves.push(LeafRecord { label: v.clone(), cell, count, volume, height });
        }
        let planes = self
            .tree
            .internal_nodes()
            .map(|v| Ok((v.clone(), boxes[v].split_plane()?)))
            .collect::<Result<_>>()?;
        let index = leaves.iter().enumerate().map(|(i, r)| (r.label.clone(), i)).collect();
        Ok(Histogram { root_box: self.root_box().clone(), n: self.n, leaves, planes, index })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafRecord {
    pub label: NodeLabel,
    pub cell: IntervalBox,
    pub count: u64,
    pub volume: f64,
    pub height: f64,
}

/// Piecewise-constant density over the leaves of an SRP.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    root_box: IntervalBox,
    n: u64,
    leaves: Vec<LeafRecord>,
    planes: BTreeMap<NodeLabel, Hyperplane>,
    index: BTreeMap<NodeLabel, usize>,
}

impl Histogram {
    pub fn root_box(&self) -> &IntervalBox {
        &self.root_box
    }

    pub fn dim(&self) -> usize {
        self.root_box.dim()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Leaf records in ascending label order.
    pub fn leaves(&self) -> &[LeafRecord] {
        &self.leaves
    }

    pub fn leaf(&self, label: &NodeLabel) -> Option<&LeafRecord> {
        self.index.get(label).map(|&i| &self.leaves[i])
    }

    /// The leaf whose cell contains `point`, if the point is inside the root box.
    pub fn leaf_containing(&self, point: &[f64]) -> Result<Option<&LeafRecord>> {
        if !self.root_box.contains(point)? {
            return Ok(None);
        }
        Ok(self.leaf(&locate(&self.planes, point)))
    }

    /// Density at `point`; zero outside the root box.
    pub fn density_at(&self, point: &[f64]) -> Result<f64> {
        Ok(self.leaf_containing(point)?.map_or(0.0, |r| r.height))
    }

    /// Closed-form integral of the density (1 up to rounding).
    pub fn total_mass(&self) -> f64 {
        self.leaves.iter().map(|r| r.height * r.volume).sum()
    }

    /// Integral of the squared density.
    pub fn l2_norm_squared(&self) -> f64 {
        self.leaves.iter().map(|r| r.height * r.height * r.volume).sum()
    }
}
