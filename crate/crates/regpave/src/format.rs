//! Histogram JSON and tree text files.
//!
//! Histogram JSON:
//!
//! ```json
//! {"version": 1, "root_box": [[0.0, 1.0], [0.0, 1.0]], "n": 10,
//!  "leaves": [{"label": "3", "count": 5, "volume": 0.5, "height": 1.0}, ...]}
//! ```
//!
//! Labels are decimal strings since they are unbounded. Leaves appear in
//! ascending label order.
//!
//! Tree text: a header line `root_box lo1 hi1 lo2 hi2 ...` followed by one
//! decimal leaf label per line, ascending.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use regpave_core::{Histogram, IntervalBox, NodeLabel, RpTree, Srp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HISTOGRAM_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramFile {
    pub version: u32,
    pub root_box: Vec<[f64; 2]>,
    pub n: u64,
    pub leaves: Vec<LeafEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafEntry {
    pub label: String,
    pub count: u64,
    pub volume: f64,
    pub height: f64,
}

fn box_to_pairs(b: &IntervalBox) -> Vec<[f64; 2]> {
    b.intervals().iter().map(|iv| [iv.lo, iv.hi]).collect()
}

fn pairs_to_box(pairs: &[[f64; 2]]) -> Result<IntervalBox> {
    let bounds: Vec<(f64, f64)> = pairs.iter().map(|p| (p[0], p[1])).collect();
    Ok(IntervalBox::from_bounds(&bounds)?)
}

impl HistogramFile {
    pub fn from_histogram(h: &Histogram) -> Self {
        HistogramFile {
            version: HISTOGRAM_VERSION,
            root_box: box_to_pairs(h.root_box()),
            n: h.n(),
            leaves: h
                .leaves()
                .iter()
                .map(|r| LeafEntry { label: r.label.to_string(), count: r.count, volume: r.volume, height: r.height })
                .collect(),
        }
    }

    /// Rebuilds the SRP. Fails unless the labels form a valid paving and the
    /// counts add up to `n`.
    pub fn to_srp(&self) -> Result<Srp> {
        if self.version != HISTOGRAM_VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        let root_box = pairs_to_box(&self.root_box)?;
        let mut counts = BTreeMap::new();
        for leaf in &self.leaves {
            let label: NodeLabel = leaf.label.parse()?;
            if counts.insert(label, leaf.count).is_some() {
                return Err(Error::Format(format!("duplicate leaf {}", leaf.label)));
            }
        }
        let tree = RpTree::from_leaves(root_box, counts.keys().cloned())?;
        let srp = Srp::from_leaf_counts(tree, &counts);
        if srp.n() != self.n {
            return Err(Error::Format(format!("leaf counts sum to {}, file says n = {}", srp.n(), self.n)));
        }
        Ok(srp)
    }

    pub fn to_histogram(&self) -> Result<Histogram> {
        Ok(self.to_srp()?.histogram()?)
    }
}

pub fn histogram_to_json(h: &Histogram) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&HistogramFile::from_histogram(h))?;
    s.push('\n');
    Ok(s)
}

pub fn write_histogram(h: &Histogram, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, histogram_to_json(h)?).map_err(|e| Error::io(path, e))
}

pub fn read_histogram_file(path: impl AsRef<Path>) -> Result<HistogramFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_histogram(path: impl AsRef<Path>) -> Result<Histogram> {
    read_histogram_file(path)?.to_histogram()
}

pub fn tree_to_text(tree: &RpTree) -> String {
    let mut s = String::from("root_box");
    for iv in tree.root_box().intervals() {
        // `{:?}` prints the shortest string that round-trips
        let _ = write!(s, " {:?} {:?}", iv.lo, iv.hi);
    }
    s.push('\n');
    for v in tree.leaves() {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn tree_from_text(text: &str) -> Result<RpTree> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Format("empty tree file".into()))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("root_box") {
        return Err(Error::Format("tree file must start with `root_box`".into()));
    }
    let nums = fields
        .map(|f| f.parse::<f64>().map_err(|_| Error::Format(format!("bad bound {f:?}"))))
        .collect::<Result<Vec<f64>>>()?;
    if nums.is_empty() || !nums.len().is_multiple_of(2) {
        return Err(Error::Format("root_box needs lo/hi pairs".into()));
    }
    let pairs: Vec<[f64; 2]> = nums.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    let leaves = lines.map(|l| l.parse::<NodeLabel>().map_err(Error::from)).collect::<Result<Vec<_>>>()?;
    Ok(RpTree::from_leaves(pairs_to_box(&pairs)?, leaves)?)
}

pub fn write_tree(tree: &RpTree, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, tree_to_text(tree)).map_err(|e| Error::io(path, e))
}

pub fn read_tree(path: impl AsRef<Path>) -> Result<RpTree> {
    let path = path.as_ref();
    tree_from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
