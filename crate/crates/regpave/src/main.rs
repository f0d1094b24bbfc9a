use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use regpave::eval::{l1_error, Reference, DEFAULT_MC_PER_LEAF};
use regpave::format::read_histogram;
use regpave::pipeline::{manifest_path, run_pipeline, RunConfig};
use regpave::plot::{export_plot_data, PlotKind};
use regpave_core::IntervalBox;

#[derive(Parser)]
#[command(name = "regpave", version, about = "Adaptive multivariate histograms on regular pavings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a histogram from a CSV file of points.
    Build(BuildArgs),
    /// Monte Carlo L1 distance between a histogram and a reference density.
    Eval {
        #[arg(long)]
        hist: PathBuf,
        /// `gaussian` (standard) or `uniform`.
        #[arg(long)]
        reference: String,
        /// Support of the uniform reference as `lo1,hi1,lo2,hi2,...`
        /// (default: unit cube).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        support: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_MC_PER_LEAF)]
        mc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write leaf rectangles (2-D) or a leaf table as CSV.
    Plot {
        #[arg(long)]
        hist: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct BuildArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 8)]
    shards: usize,
    #[arg(long, default_value_t = regpave_core::geometry::DEFAULT_PAD)]
    pad: f64,
    /// Fixed root box `lo1,hi1,lo2,hi2,...` instead of the data bounding box.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    root_box: Option<Vec<f64>>,
    /// Leaves on the support-carved path [default: max(1, maxlvs/10)].
    #[arg(long)]
    carve_leaves: Option<usize>,
    #[arg(long, default_value_t = 5)]
    tributaries: usize,
    /// SEB point thresholds, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "50,500,1500")]
    maxpts: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    maxlvs: usize,
    #[arg(long, default_value_t = 0.1)]
    tau_min: f64,
    #[arg(long, default_value_t = 1e5)]
    tau_max: f64,
    #[arg(long, default_value_t = 30)]
    tau_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Grow tributaries one split at a time instead of with the sharded builder.
    #[arg(long)]
    sequential: bool,
    /// Fail on malformed rows or points outside the root box.
    #[arg(long)]
    strict: bool,
    /// Break priority ties on the carved path by lowest label.
    #[arg(long)]
    deterministic_ties: bool,
    #[arg(long, default_value_t = regpave_core::tree::DEFAULT_MAX_DEPTH)]
    max_depth: u32,
}

fn pairs(flat: &[f64]) -> regpave::Result<Vec<[f64; 2]>> {
    if flat.is_empty() || !flat.len().is_multiple_of(2) {
        return Err(regpave::Error::Config("box bounds must come in lo,hi pairs".into()));
    }
    Ok(flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
}

fn build(a: BuildArgs) -> regpave::Result<()> {
    let cfg = RunConfig {
        input: Some(a.input),
        dim: a.dim,
        shards: a.shards,
        pad: a.pad,
        root_box: a.root_box.as_deref().map(pairs).transpose()?,
        carve_leaves: a.carve_leaves,
        tributaries: a.tributaries,
        maxpts: a.maxpts,
        maxlvs: a.maxlvs,
        tau_min: a.tau_min,
        tau_max: a.tau_max,
        tau_steps: a.tau_steps,
        seed: a.seed,
        output: Some(a.out.clone()),
        sequential: a.sequential,
        strict: a.strict,
        deterministic_ties: a.deterministic_ties,
        max_depth: a.max_depth,
    };
    let out = run_pipeline(&cfg)?;
    let m = &out.manifest;
    if m.skipped_rows > 0 || m.dropped_points > 0 {
        eprintln!("skipped {} malformed rows, dropped {} points outside the root box", m.skipped_rows, m.dropped_points);
    }
    println!(
        "n={} leaves={} tau={} cv={:.6} (tributary {}, maxpts {})",
        m.n, m.selected.leaves, m.selected.tau, m.selected.cv_score, m.selected.tributary, m.selected.maxpts
    );
    println!("wrote {} and {}", a.out.display(), manifest_path(&a.out).display());
    Ok(())
}

fn run(cli: Cli) -> regpave::Result<()> {
    match cli.command {
        Command::Build(a) => build(a),
        Command::Eval { hist, reference, support, mc, seed } => {
            let h = read_histogram(hist)?;
            let support = match support {
                Some(flat) => {
                    let p = pairs(&flat)?;
                    Some(IntervalBox::from_bounds(&p.iter().map(|b| (b[0], b[1])).collect::<Vec<_>>())?)
                }
                None => None,
            };
            let r = Reference::from_name(&reference, h.dim(), support)?;
            let report = l1_error(&h, &r, mc, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Plot { hist, out } => {
            let h = read_histogram(hist)?;
            if export_plot_data(&h, &out)? == PlotKind::LeafTable {
                eprintln!("note: histogram is {}-dimensional, wrote a leaf table instead of rectangles", h.dim());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
