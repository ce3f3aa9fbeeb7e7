//! Command-line front end: `cluster`, `eval` and `sweep`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{evaluate, LabelVector, Metrics};
use crate::graph::Assignment;
use crate::io::{format_assignments, load_labels, load_matrix, save_report, Format, RunRecord};
use crate::linalg::DataMatrix;
use crate::pipeline::{fit, Beta, FitConfig, InitMethod, Method, MfaLabelDistances};

#[derive(Debug, Parser)]
#[command(name = "sgec", version, about = "Self-supervised graph-embedding clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a data matrix and write a run report.
    Cluster(ClusterArgs),
    /// Score a predicted labeling against ground truth.
    Eval(EvalArgs),
    /// Re-run clustering over a range of neighbor counts or target dimensions.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Whitespace,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Whitespace => Format::Whitespace,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    OurLpp,
    OurMfa,
    Kmeans,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::OurLpp => Method::OurLpp,
            MethodArg::OurMfa => Method::OurMfa,
            MethodArg::Kmeans => Method::Kmeans,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Balanced,
    Kmeans,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MfaDistArg {
    Full,
    Masked,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value = "our-lpp")]
    pub method: MethodArg,
    #[arg(long)]
    pub clusters: usize,
    #[arg(long, default_value_t = 5)]
    pub neighbors: usize,
    /// Target dimension; defaults to min(clusters, features).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Balance weight, or `auto`.
    #[arg(long, default_value = "auto")]
    pub beta: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub standardize: bool,
    /// Rebuild the kNN graph in the embedded space after every outer iteration.
    #[arg(long)]
    pub recompute_knn: bool,
    #[arg(long, value_enum, default_value = "balanced")]
    pub init: InitArg,
    #[arg(long, value_enum, default_value = "full")]
    pub mfa_label_distances: MfaDistArg,
    /// Ground-truth labels, one per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

impl FitArgs {
    pub fn config(&self) -> Result<FitConfig> {
        let mut cfg = FitConfig::new(self.method.into(), self.clusters);
        cfg.neighbors = self.neighbors;
        cfg.target_dim = self.dim;
        cfg.eta = self.eta;
        cfg.beta = self.beta.parse::<Beta>()?;
        cfg.seed = self.seed;
        cfg.max_outer = self.max_outer;
        cfg.tol = self.tol;
        cfg.standardize = self.standardize;
        cfg.recompute_knn_embedded = self.recompute_knn;
        cfg.init = match self.init {
            InitArg::Balanced => InitMethod::BalancedRandom,
            InitArg::Kmeans => InitMethod::Kmeans,
        };
        cfg.mfa_label_distances = match self.mfa_label_distances {
            MfaDistArg::Full => MfaLabelDistances::Full,
            MfaDistArg::Masked => MfaLabelDistances::NeighborMasked,
        };
        Ok(cfg)
    }

    fn load(&self) -> Result<(DataMatrix, Option<LabelVector>)> {
        let x = load_matrix(&self.input, self.format.into())?;
        let truth = match &self.labels {
            Some(path) => {
                let raw = load_labels(path)?;
                if raw.len() != x.n_samples() {
                    return Err(Error::invalid(format!(
                        "{} labels for {} samples",
                        raw.len(),
                        x.n_samples()
                    )));
                }
                Some(LabelVector::from_raw(&raw))
            }
            None => None,
        };
        Ok((x, truth))
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    /// JSON run report.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Plain cluster ids, one per line.
    #[arg(long)]
    pub assignments: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted ids, one per line, or a JSON run report.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SweepParam {
    Neighbors,
    Dim,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated values, or `start:end[:step]` (inclusive).
    #[arg(long)]
    pub values: String,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Parses `5,10,20` or `5:30:5`.
pub fn parse_values(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::invalid(format!("cannot parse sweep values '{spec}'"));
    if spec.contains(':') {
        let parts: Vec<usize> = spec
            .split(':')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let (start, end, step) = match parts.as_slice() {
            [s, e] => (*s, *e, 1),
            [s, e, st] => (*s, *e, *st),
            _ => return Err(bad()),
        };
        if step == 0 || start > end {
            return Err(bad());
        }
        Ok((start..=end).step_by(step).collect())
    } else {
        let values: Vec<usize> = spec
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(bad());
        }
        Ok(values)
    }
}

fn run_cluster(args: &ClusterArgs, out: &mut dyn Write) -> Result<()> {
    let started_at = unix_now();
    let (x, truth) = args.fit.load()?;
    let cfg = args.fit.config()?;
    let report = fit(&x, &cfg)?;
    let metrics = truth
        .as_ref()
        .map(|t| evaluate(&report.assignment, t))
        .transpose()?;
    let record = RunRecord::from_report(&report, metrics, started_at, unix_now());

    if let Some(path) = &args.assignments {
        fs::write(path, format_assignments(&record.assignments))?;
    }
    match &args.output {
        Some(path) => save_report(&record, path)?,
        None => out.write_all(format_assignments(&record.assignments).as_bytes())?,
    }
    let mut summary = format!(
        "outer_iters={} converged={} time={:.3}s",
        report.outer_iters, report.converged, report.wall_time
    );
    if let Some(m) = metrics {
        summary.push_str(&format!(" acc={:.4} nmi={:.4} purity={:.4}", m.acc, m.nmi, m.purity));
    }
    eprintln!("{summary}");
    Ok(())
}

fn load_prediction(path: &PathBuf) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let record: RunRecord = serde_json::from_str(&text)?;
        return Ok(record.assignments.iter().map(|&l| l as i64).collect());
    }
    crate::io::parse_labels(&text)
}

fn run_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let pred_raw = load_prediction(&args.pred)?;
    let truth = LabelVector::from_raw(&load_labels(&args.truth)?);
    let pred = LabelVector::from_raw(&pred_raw);
    let pred = Assignment::new(pred.values().to_vec(), pred.n_classes().max(1))?;
    let m = evaluate(&pred, &truth)?;
    writeln!(out, "acc={:.6}\nnmi={:.6}\npurity={:.6}", m.acc, m.nmi, m.purity)?;
    Ok(())
}

/// Swept value, metrics if labels were given, outer iterations, seconds.
type SweepRow = (usize, Option<Metrics>, usize, f64);

fn run_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let (x, truth) = args.fit.load()?;
    let base = args.fit.config()?;
    let values = parse_values(&args.values)?;

    let rows: Vec<Result<SweepRow>> = values
        .par_iter()
        .enumerate()
        .map(|(idx, &value)| {
            let mut cfg = base.clone();
            cfg.seed = base.seed.wrapping_add(idx as u64);
            match args.param {
                SweepParam::Neighbors => cfg.neighbors = value,
                SweepParam::Dim => cfg.target_dim = Some(value),
            }
            let start = Instant::now();
            let report = fit(&x, &cfg)?;
            let secs = start.elapsed().as_secs_f64();
            let metrics = truth
                .as_ref()
                .map(|t| evaluate(&report.assignment, t))
                .transpose()?;
            Ok((value, metrics, report.outer_iters, secs))
        })
        .collect();

    let name = match args.param {
        SweepParam::Neighbors => "neighbors",
        SweepParam::Dim => "dim",
    };
    let mut csv = format!("{name},acc,nmi,purity,iterations,seconds\n");
    for row in rows {
        let (value, metrics, iters, secs) = row?;
        let cells = match metrics {
            Some(m) => format!("{:.6},{:.6},{:.6}", m.acc, m.nmi, m.purity),
            None => ",,".to_string(),
        };
        csv.push_str(&format!("{value},{cells},{iters},{secs:.6}\n"));
    }
    match &args.output {
        Some(path) => fs::write(path, csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Cluster(args) => run_cluster(args, out),
        Command::Eval(args) => run_eval(args, out),
        Command::Sweep(args) => run_sweep(args, out),
    }
}

/// Parses arguments and runs, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
