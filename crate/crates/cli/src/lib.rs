//! Command implementations behind the `nncouple` binary.

pub mod dataset;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use nncouple::conditional::psi_hat_joint;
use nncouple::independence::{graph_warnings, TestReport};
use nncouple::simlab::{self, SimKind, SimSetting, Verdict};
use nncouple::{
    build_neighbor_graph, contingency, independence_statistic, psi_conditional_hat, psi_hat, select_variables,
    BinaryVariant, ContingencyF64, LabelVector, PointCloud, SelectionTrace,
};

use dataset::{parse_dataset, Dataset, DatasetFile};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "nncouple", version, about = "Nearest-neighbor coupling dependence coefficient and independence test")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the coefficient psi_hat.
    Psi(DataArgs),
    /// Asymptotic chi-squared test of independence.
    Test(TestArgs),
    /// Conditional coefficient of --covariates given --given.
    Cond(CondArgs),
    /// Greedy forward variable selection.
    Select(SelectArgs),
    /// Power curve of a synthetic setting, written as CSV.
    Simulate(SimulateArgs),
    /// Null calibration: rejection rate and KS distance to chi-squared.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the categorical response column.
    #[arg(long)]
    pub response: String,
    /// Covariate columns (default: every other column).
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Covariate columns are samples of one curve on a uniform grid over [0, 1].
    #[arg(long)]
    pub grid: bool,
    /// Headerless CSV with the n x n distance matrix; replaces the covariates.
    #[arg(long)]
    pub distance_matrix: Option<PathBuf>,
    /// Standardize each covariate to mean 0, unit variance.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Use the binary statistic with W_n replaced by gamma_d for this dimension.
    #[arg(long)]
    pub binary_dim: Option<usize>,
    /// With --binary-dim: the normalization (p q)^2 instead of (p (1-p))^2.
    #[arg(long, requires = "binary_dim")]
    pub as_printed: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CondArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Conditioning columns X.
    #[arg(long, value_delimiter = ',', required = true)]
    pub given: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_kind)]
    pub setting: SimKind,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid points per path for the functional settings.
    #[arg(long, default_value_t = simlab::DEFAULT_GRID)]
    pub grid_size: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    /// Permutation null of this data set instead of the synthetic null.
    #[arg(long, requires = "response")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    #[arg(long)]
    pub standardize: bool,
    /// Synthetic null: sample size.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Synthetic null: number of label levels.
    #[arg(long = "levels", default_value_t = 3)]
    pub k: usize,
    /// Synthetic null: covariate dimension.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_kind(s: &str) -> std::result::Result<SimKind, String> {
    s.parse().map_err(|e: nncouple::Error| e.to_string())
}

/// Fields every JSON report starts with.
#[derive(Debug, Serialize)]
struct Header<'a> {
    version: &'a str,
    command: &'a str,
}

#[derive(Debug, Serialize)]
struct Report<'a, B: Serialize> {
    #[serde(flatten)]
    header: Header<'a>,
    #[serde(flatten)]
    body: B,
}

fn render<B: Serialize>(command: &str, body: B) -> Result<String> {
    let report = Report {
        header: Header { version: VERSION, command },
        body,
    };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

/// What a command produced: text for standard output and a short summary
/// for standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub stdout: String,
    pub summary: String,
}

fn load(args: &DataArgs) -> Result<Dataset> {
    parse_dataset(&DatasetFile {
        path: args.input.clone(),
        response: args.response.clone(),
        covariates: args.covariates.clone(),
        grid: args.grid,
        distance_matrix: args.distance_matrix.clone(),
    })
}

#[derive(Debug, Serialize)]
struct PsiBody {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    psi_hat: f64,
    w_n: f64,
    w_n_prime: f64,
    l_n: usize,
    levels: Vec<String>,
    counts: Vec<Vec<u64>>,
    warnings: Vec<String>,
}

fn table_rows(c: &ContingencyF64) -> Vec<Vec<u64>> {
    (0..c.k()).map(|a| (0..c.k()).map(|b| c.count(a, b)).collect()).collect()
}

fn level_names(y: &LabelVector) -> Vec<String> {
    y.level_names()
        .map(|s| s.to_vec())
        .unwrap_or_else(|| (1..=y.k()).map(|i| i.to_string()).collect())
}

fn psi(args: &DataArgs) -> Result<Output> {
    let data = load(args)?;
    let cloud = data.cloud(&[], args.standardize)?;
    let g = build_neighbor_graph(&cloud)?;
    let c = contingency::<f64>(&data.labels, &g)?;
    let mut warnings = data.warnings.clone();
    warnings.extend(graph_warnings(&g));
    let value = psi_hat(&c)?;
    let body = PsiBody {
        n: data.n(),
        k: data.labels.observed_levels(),
        psi_hat: value,
        w_n: g.mutual_fraction(),
        w_n_prime: g.shared_neighbor_count(),
        l_n: g.max_in_degree(),
        levels: level_names(&data.labels),
        counts: table_rows(&c),
        warnings,
    };
    Ok(Output {
        summary: format!("psi_hat = {value:.6} (n = {}, K = {})", body.n, body.k),
        stdout: render("psi", body)?,
    })
}

fn test(args: &TestArgs) -> Result<Output> {
    let data = load(&args.data)?;
    let cloud = data.cloud(&[], args.data.standardize)?;
    let g = build_neighbor_graph(&cloud)?;
    let c = contingency::<f64>(&data.labels, &g)?;
    let mut report: TestReport<f64> = match args.binary_dim {
        Some(d) => {
            let variant = if args.as_printed {
                BinaryVariant::AsPrinted
            } else {
                BinaryVariant::CovarianceConsistent
            };
            let mut r = nncouple::binary_statistic(&c, d, variant)?;
            r.warnings.extend(graph_warnings(&g));
            r
        }
        None => independence_statistic(&c, &g)?,
    };
    let mut warnings = data.warnings.clone();
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok(Output {
        summary: format!(
            "I_n = {:.4}, df = {}, p = {:.4e} (n = {}, K = {})",
            report.statistic, report.df, report.p_value, report.n, report.k
        ),
        stdout: render("test", &report)?,
    })
}

#[derive(Debug, Serialize)]
struct CondBody {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    covariates: Vec<String>,
    given: Vec<String>,
    psi_conditional: f64,
    psi_given: f64,
    psi_joint: f64,
    warnings: Vec<String>,
}

fn cond(args: &CondArgs) -> Result<Output> {
    if args.data.distance_matrix.is_some() {
        bail!("cond needs covariate columns, not a distance matrix");
    }
    // load the conditioning columns too when --covariates narrows the file
    let mut load_args = args.data.clone();
    if !load_args.covariates.is_empty() {
        load_args.covariates.extend(args.given.iter().filter(|g| !args.data.covariates.contains(g)).cloned());
    }
    let data = load(&load_args)?;
    let covariates: Vec<String> = if args.data.covariates.is_empty() {
        data.covariate_names.iter().filter(|c| !args.given.contains(c)).cloned().collect()
    } else {
        args.data.covariates.clone()
    };
    if covariates.is_empty() {
        bail!("no covariate columns left besides --given");
    }
    let x = data.cloud(&args.given, args.data.standardize)?;
    let z = data.cloud(&covariates, args.data.standardize)?;
    let value = psi_conditional_hat(&[&x], &z, &data.labels)?;
    let body = CondBody {
        n: data.n(),
        k: data.labels.observed_levels(),
        psi_given: psi_hat_joint(&[&x], &data.labels)?,
        psi_joint: psi_hat_joint(&[&x, &z], &data.labels)?,
        covariates,
        given: args.given.clone(),
        psi_conditional: value,
        warnings: data.warnings.clone(),
    };
    Ok(Output {
        summary: format!("conditional psi_hat = {value:.6}"),
        stdout: render("cond", body)?,
    })
}

#[derive(Debug, Serialize)]
struct SelectBody {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(flatten)]
    trace: SelectionTrace<f64>,
    chosen_names: Vec<String>,
    warnings: Vec<String>,
}

fn select(args: &SelectArgs) -> Result<Output> {
    let data = load(&args.data)?;
    let columns = data.column_clouds(args.data.standardize)?;
    let trace = select_variables(&columns, &data.labels, args.max_steps)?;
    let chosen_names: Vec<String> = trace.chosen.iter().map(|&i| data.covariate_names[i].clone()).collect();
    let summary = format!("selected {:?} ({:?})", chosen_names, trace.stopped_because);
    let body = SelectBody {
        n: data.n(),
        k: data.labels.observed_levels(),
        trace,
        chosen_names,
        warnings: data.warnings.clone(),
    };
    Ok(Output {
        summary,
        stdout: render("select", body)?,
    })
}

fn simulate(args: &SimulateArgs) -> Result<Output> {
    let setting = SimSetting::new(args.setting, args.n, args.seed).with_grid(args.grid_size);
    let curve = simlab::power_curve(&setting, &args.lambdas, args.reps, args.alpha, args.seed)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in curve.rows() {
        writer.serialize(row)?;
    }
    let csv_text = String::from_utf8(writer.into_inner().context("flushing CSV")?)?;
    let degenerate: usize = curve.degenerate.iter().sum();
    let mut summary = format!(
        "{} setting, n = {}, {} reps: rates {:?}",
        args.setting.name(),
        args.n,
        args.reps,
        curve.rejections
    );
    if degenerate > 0 {
        summary.push_str(&format!("; {degenerate} degenerate replications counted as non-rejections"));
    }
    match &args.output {
        Some(path) => {
            std::fs::write(path, &csv_text).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(Output { stdout: String::new(), summary })
        }
        None => Ok(Output { stdout: csv_text, summary }),
    }
}

#[derive(Debug, Serialize)]
struct CalibrateBody {
    mode: &'static str,
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    reps: usize,
    alpha: f64,
    df: usize,
    rejection_rate: f64,
    ks_distance: f64,
    degenerate: usize,
    /// Permutation mode: the unpermuted statistic and its permutation p-value.
    observed_statistic: Option<f64>,
    permutation_p_value: Option<f64>,
    warnings: Vec<String>,
}

fn calibrate(args: &CalibrateArgs) -> Result<Output> {
    let body = match (&args.input, &args.response) {
        (Some(input), Some(response)) => {
            let data = load(&DataArgs {
                input: input.clone(),
                response: response.clone(),
                covariates: args.covariates.clone(),
                grid: false,
                distance_matrix: None,
                standardize: args.standardize,
                seed: args.seed,
            })?;
            permutation_null(&data, args)?
        }
        _ => {
            let cal = simlab::null_calibration(args.n, args.k, args.dim, args.reps, args.alpha, args.seed)?;
            let mut warnings = Vec::new();
            if cal.degenerate > 0 {
                warnings.push(format!("{} degenerate replications", cal.degenerate));
            }
            CalibrateBody {
                mode: "synthetic",
                n: cal.n,
                k: cal.k,
                reps: cal.reps,
                alpha: cal.alpha,
                df: cal.df,
                rejection_rate: cal.rejection_rate,
                ks_distance: cal.ks_distance,
                degenerate: cal.degenerate,
                observed_statistic: None,
                permutation_p_value: None,
                warnings,
            }
        }
    };
    Ok(Output {
        summary: format!(
            "rejection rate {:.4} at alpha {}, KS distance {:.4} (df = {})",
            body.rejection_rate, body.alpha, body.ks_distance, body.df
        ),
        stdout: render("calibrate", body)?,
    })
}

fn permutation_null(data: &Dataset, args: &CalibrateArgs) -> Result<CalibrateBody> {
    let cloud = data.cloud(&[], args.standardize)?;
    let g = build_neighbor_graph(&cloud)?;
    let observed = independence_statistic(&contingency::<f64>(&data.labels, &g)?, &g)?;
    let k = data.labels.k();
    let outcomes: Vec<(Verdict, Option<f64>)> = (0..args.reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut codes = data.labels.codes().to_vec();
            codes.shuffle(&mut simlab::stream(args.seed, r));
            let y = LabelVector::from_codes(codes, k)?;
            Ok(simlab::test_outcome(&cloud, &y, args.alpha))
        })
        .collect::<Result<_>>()?;
    let at_least = outcomes
        .iter()
        .filter(|(_, s)| s.is_some_and(|s| s >= observed.statistic))
        .count();
    let cal = simlab::summarize_null(outcomes, data.n(), observed.k, cloud_dim(&cloud), args.reps, args.alpha)?;
    let mut warnings = data.warnings.clone();
    warnings.extend(observed.warnings);
    Ok(CalibrateBody {
        mode: "permutation",
        n: cal.n,
        k: cal.k,
        reps: cal.reps,
        alpha: cal.alpha,
        df: cal.df,
        rejection_rate: cal.rejection_rate,
        ks_distance: cal.ks_distance,
        degenerate: cal.degenerate,
        observed_statistic: Some(observed.statistic),
        permutation_p_value: Some((1 + at_least) as f64 / (1 + args.reps) as f64),
        warnings,
    })
}

fn cloud_dim(cloud: &PointCloud<f64>) -> usize {
    match cloud.backend() {
        nncouple::metric::Backend::Euclidean { dim, .. } => *dim,
        _ => 0,
    }
}

/// Runs a parsed command on the current rayon pool.
pub fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Psi(a) => psi(a),
        Command::Test(a) => test(a),
        Command::Cond(a) => cond(a),
        Command::Select(a) => select(a),
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(a) => calibrate(a),
    }
}
