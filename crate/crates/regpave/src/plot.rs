//! Plot-ready CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use regpave_core::Histogram;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// One `x0,y0,x1,y1,height` rectangle per leaf.
    Rectangles,
    /// `label,count,volume,height,lo1,hi1,...` rows, for d != 2.
    LeafTable,
}

pub fn plot_csv(h: &Histogram) -> (PlotKind, String) {
    let mut s = String::new();
    if h.dim() == 2 {
        s.push_str("x0,y0,x1,y1,height\n");
        for r in h.leaves() {
            let [x, y] = [&r.cell.intervals()[0], &r.cell.intervals()[1]];
            let _ = writeln!(s, "{},{},{},{},{}", x.lo, y.lo, x.hi, y.hi, r.height);
        }
        return (PlotKind::Rectangles, s);
    }
    s.push_str("label,count,volume,height");
    for j in 1..=h.dim() {
        let _ = write!(s, ",lo{j},hi{j}");
    }
    s.push('\n');
    for r in h.leaves() {
        let _ = write!(s, "{},{},{},{}", r.label, r.count, r.volume, r.height);
        for iv in r.cell.intervals() {
            let _ = write!(s, ",{},{}", iv.lo, iv.hi);
        }
        s.push('\n');
    }
    (PlotKind::LeafTable, s)
}

/// Writes [`plot_csv`] to `path` and reports which layout was used.
pub fn export_plot_data(h: &Histogram, path: impl AsRef<Path>) -> Result<PlotKind> {
    let path = path.as_ref();
    let (kind, text) = plot_csv(h);
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(kind)
}
