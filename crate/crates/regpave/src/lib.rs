//! Command-line pipeline, file formats and evaluation for regular paving
//! histograms. The estimators themselves live in `regpave-core`.

pub mod error;
pub mod eval;
pub mod exec;
pub mod format;
pub mod input;
pub mod pipeline;
pub mod plot;

pub use error::{Error, Result};
pub use eval::{l1_error, EvalReport, Reference};
pub use exec::RayonExecutor;
pub use input::{ingest_csv, Ingested};
pub use pipeline::{run_on_points, run_pipeline, RunConfig, RunOutput};
pub use plot::{export_plot_data, PlotKind};
