//! Regular paving trees as prefix-closed sets of node labels.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Hyperplane, IntervalBox};
use crate::label::{NodeLabel, Side};

/// Refinement guard used when no explicit depth limit is configured.
pub const DEFAULT_MAX_DEPTH: u32 = 1000;

/// Box of the cell with label `label`, obtained by bisecting `root_box` along
/// the label's path.
pub fn cell_box(root_box: &IntervalBox, label: &NodeLabel) -> Result<IntervalBox> {
    let mut b = root_box.clone();
    for side in label.path() {
        let plane = b.split_plane()?;
        b = b.half(plane, side);
    }
    Ok(b)
}

/// A regular paving: the root box plus the labels of every node in the tree.
///
/// Every node has either zero or two children. Cell boxes are not stored;
/// they are recomputed from labels on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct RpTree {
    root_box: IntervalBox,
    nodes: BTreeSet<NodeLabel>,
    leaves: BTreeSet<NodeLabel>,
}

impl RpTree {
    /// The root-only paving of `root_box`.
    pub fn new(root_box: IntervalBox) -> Self {
        let mut nodes = BTreeSet::new();
        nodes.insert(NodeLabel::ROOT);
        let leaves = nodes.clone();
        RpTree { root_box, nodes, leaves }
    }

    /// Rebuilds a tree from its leaf set, checking that the leaves form a
    /// valid paving (every ancestor has both children and no leaf is an
    /// ancestor of another).
    pub fn from_leaves<I: IntoIterator<Item = NodeLabel>>(root_box: IntervalBox, leaves: I) -> Result<Self> {
        let leaves: BTreeSet<NodeLabel> = leaves.into_iter().collect();
        if leaves.is_empty() {
            return Err(Error::InvalidTree("no leaves".into()));
        }
        let mut internal = BTreeSet::new();
        for leaf in &leaves {
            let mut cur = leaf.clone();
            while let Ok(p) = cur.parent() {
                if leaves.contains(&p) {
                    return Err(Error::InvalidTree(format!("leaf {p} is an ancestor of leaf {leaf}")));
                }
                if !internal.insert(p.clone()) {
                    break;
                }
                cur = p;
            }
        }
        for v in &internal {
            for c in [v.left(), v.right()] {
                if !leaves.contains(&c) && !internal.contains(&c) {
                    return Err(Error::InvalidTree(format!("node {v} is missing child {c}")));
                }
            }
        }
        let mut nodes = internal;
        nodes.extend(leaves.iter().cloned());
        Ok(RpTree { root_box, nodes, leaves })
    }

    pub fn root_box(&self) -> &IntervalBox {
        &self.root_box
    }

    pub fn dim(&self) -> usize {
        self.root_box.dim()
    }

    pub fn nodes(&self) -> &BTreeSet<NodeLabel> {
        &self.nodes
    }

    /// Leaves in ascending label order.
    pub fn leaves(&self) -> &BTreeSet<NodeLabel> {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn contains(&self, n: &NodeLabel) -> bool {
        self.nodes.contains(n)
    }

    pub fn is_leaf(&self, n: &NodeLabel) -> bool {
        self.leaves.contains(n)
    }

    pub fn is_internal(&self, n: &NodeLabel) -> bool {
        self.nodes.contains(n) && !self.leaves.contains(n)
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = &NodeLabel> + '_ {
        self.nodes.iter().filter(move |n| !self.leaves.contains(*n))
    }

    /// True when both children of `n` are leaves.
    pub fn is_cherry(&self, n: &NodeLabel) -> bool {
        self.leaves.contains(&n.left()) && self.leaves.contains(&n.right())
    }

    pub fn cherries(&self) -> impl Iterator<Item = &NodeLabel> + '_ {
        self.internal_nodes().filter(move |n| self.is_cherry(n))
    }

    pub fn cell_box(&self, n: &NodeLabel) -> Result<IntervalBox> {
        cell_box(&self.root_box, n)
    }

    /// Splits leaf `n` in place.
    pub fn split(&mut self, n: &NodeLabel) -> Result<()> {
        if !self.leaves.remove(n) {
            return Err(Error::NotALeaf(n.clone()));
        }
        let (l, r) = n.children();
        self.nodes.insert(l.clone());
        self.nodes.insert(r.clone());
        self.leaves.insert(l);
        self.leaves.insert(r);
        Ok(())
    }

    /// Merges the two leaf children of `n` in place.
    pub fn merge(&mut self, n: &NodeLabel) -> Result<()> {
        if !self.nodes.contains(n) || !self.is_cherry(n) {
            return Err(Error::NotACherry(n.clone()));
        }
        let (l, r) = n.children();
        self.nodes.remove(&l);
        self.nodes.remove(&r);
        self.leaves.remove(&l);
        self.leaves.remove(&r);
        self.leaves.insert(n.clone());
        Ok(())
    }

    /// Copy of the tree with leaf `n` split.
    pub fn with_split(&self, n: &NodeLabel) -> Result<Self> {
        let mut t = self.clone();
        t.split(n)?;
        Ok(t)
    }

    /// Copy of the tree with cherry `n` merged.
    pub fn with_merge(&self, n: &NodeLabel) -> Result<Self> {
        let mut t = self.clone();
        t.merge(n)?;
        Ok(t)
    }

    /// Box of every node, computed top-down.
    pub fn node_boxes(&self) -> Result<BTreeMap<NodeLabel, IntervalBox>> {
        let mut out = BTreeMap::new();
        out.insert(NodeLabel::ROOT, self.root_box.clone());
        // ascending label order visits parents before children
        for n in &self.nodes {
            if self.leaves.contains(n) {
                continue;
            }
            let b = &out[n];
            let plane = b.split_plane()?;
            let (l, r) = (b.half(plane, Side::Left), b.half(plane, Side::Right));
            out.insert(n.left(), l);
            out.insert(n.right(), r);
        }
        Ok(out)
    }

    /// The splitting hyperplane of every internal node.
    pub fn split_planes(&self) -> Result<BTreeMap<NodeLabel, Hyperplane>> {
        let boxes = self.node_boxes()?;
        self.internal_nodes()
            .map(|n| Ok((n.clone(), boxes[n].split_plane()?)))
            .collect()
    }
}

/// Descends from the root to the leaf whose cell holds `point`, given the
/// splitting planes of the internal nodes. The point is assumed to be inside
/// the root box.
pub fn locate(planes: &BTreeMap<NodeLabel, Hyperplane>, point: &[f64]) -> NodeLabel {
    let mut n = NodeLabel::ROOT;
    while let Some(plane) = planes.get(&n) {
        n = if plane.is_left(point) { n.left() } else { n.right() };
    }
    n
}

/// Labels of `tree`'s leaves, in ascending order.
pub fn leaf_labels(tree: &RpTree) -> Vec<NodeLabel> {
    tree.leaves().iter().cloned().collect()
}
