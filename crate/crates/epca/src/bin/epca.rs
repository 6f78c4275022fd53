//! Command-line front end: fit (SCA), sma, code (sparse coding), tune,
//! sim {lowrank, sbm}, eval {pve, accuracy, kurtosis}.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, unreadable or
//! malformed input, invalid configuration), 2 numerical failure.
//! All artifacts are written atomically (temp file, then rename).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use epca::matcore::{
    read_csv, read_matrix_market, write_csv, write_matrix_market, DataMatrix, DenseMatrix,
};
use epca::simgen;
use epca::tune::{cross_validate, CvMode};
use epca::{sca, sma, sparse_coding, Error, FitConfig, RotationKind, ScaFit};

#[derive(Parser)]
#[command(name = "epca", version, about = "Sparse PCA by orthogonal rotation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit SCA: sparse loadings, orthonormal scores basis.
    Fit(FitArgs),
    /// Fit SMA: l1 budgets on both the loadings and the scores basis.
    Sma(FitArgs),
    /// Sparse coding: SCA on the transposed matrix, so scores come out sparse.
    Code(FitArgs),
    /// Select k and gamma by element-wise K-fold cross-validation.
    Tune(TuneArgs),
    /// Generate synthetic datasets.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Evaluate fitted artifacts.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Csv,
    Mtx,
}

#[derive(Clone, Copy, ValueEnum)]
enum RotationArg {
    Varimax,
    Absmin,
}

impl From<RotationArg> for RotationKind {
    fn from(r: RotationArg) -> Self {
        match r {
            RotationArg::Varimax => RotationKind::Varimax,
            RotationArg::Absmin => RotationKind::Absmin,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input matrix (CSV dense or MatrixMarket sparse).
    #[arg(long)]
    input: PathBuf,
    /// Input format; auto infers from the extension (.mtx = MatrixMarket).
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// Treat the first CSV line as a header.
    #[arg(long)]
    header: bool,
    /// Number of components.
    #[arg(long)]
    k: usize,
    /// l1 budget on the loadings; defaults to sqrt(p*k).
    #[arg(long)]
    gamma: Option<f64>,
    /// l1 budget on the scores basis (sma only); defaults to sqrt(n*k).
    #[arg(long)]
    gamma_z: Option<f64>,
    #[arg(long, value_enum, default_value = "varimax")]
    rotation: RotationArg,
    /// Kaiser row normalization in the varimax step (code defaults on;
    /// use --kaiser=false to disable there).
    #[arg(long)]
    kaiser: Option<bool>,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, env = "EPCA_SEED", default_value_t = 0)]
    seed: u64,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV export of the loadings.
    #[arg(long)]
    loadings_out: Option<PathBuf>,
    /// Optional CSV export of the scores basis.
    #[arg(long)]
    scores_out: Option<PathBuf>,
    /// Suppress the timestamp field for byte-identical reruns.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    #[arg(long)]
    header: bool,
    /// Candidate component counts, comma separated (e.g. 2,4,8).
    #[arg(long, value_delimiter = ',')]
    k_grid: Vec<usize>,
    /// Candidate gamma values, comma separated (e.g. 8,16,32).
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "sca")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "varimax")]
    rotation: RotationArg,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, env = "EPCA_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads for fold-candidate fits (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// CV table CSV path (candidate, k, gamma, fold, mse).
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON summary with the selected configuration.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sca,
    Sma,
}

#[derive(Subcommand)]
enum SimCommand {
    /// Low-rank model with sparse orthonormal loadings plus Gaussian noise.
    Lowrank(LowrankArgs),
    /// Stochastic block model adjacency matrix.
    Sbm(SbmArgs),
}

#[derive(Args)]
struct LowrankArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    p: usize,
    #[arg(long, default_value_t = 16)]
    k: usize,
    /// l1 budget applied to the planted loadings.
    #[arg(long, default_value_t = 20.0)]
    truth_gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    noise_sd: f64,
    #[arg(long, env = "EPCA_SEED", default_value_t = 0)]
    seed: u64,
    /// Data matrix CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Optional sidecar JSON with the planted loadings and scores.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SbmArgs {
    #[arg(long, default_value_t = 900)]
    n: usize,
    /// Number of equal-size blocks; n must be divisible by it.
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    /// Connectivity matrix CSV (blocks x blocks); default is the built-in
    /// 4-block pattern.
    #[arg(long)]
    connectivity: Option<PathBuf>,
    /// Multiplier applied to the connectivity matrix.
    #[arg(long, default_value_t = 0.05)]
    scale: f64,
    #[arg(long, env = "EPCA_SEED", default_value_t = 0)]
    seed: u64,
    /// Adjacency MatrixMarket path.
    #[arg(long)]
    out: PathBuf,
    /// Block labels CSV path (one label per line).
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Proportion of variance explained by a loading matrix.
    Pve(PveArgs),
    /// Permutation-matched clustering accuracy.
    Accuracy(AccuracyArgs),
    /// Per-column sample excess kurtosis.
    Kurtosis(KurtosisArgs),
}

#[derive(Args)]
struct PveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    #[arg(long)]
    header: bool,
    /// Loadings CSV (p rows, k columns).
    #[arg(long)]
    loadings: PathBuf,
    /// JSON output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AccuracyArgs {
    /// Predicted labels CSV (one per line, in 1..=k).
    #[arg(long)]
    labels: PathBuf,
    /// Ground-truth labels CSV.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KurtosisArgs {
    /// Data CSV; kurtosis is reported per column.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    header: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epca: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

// numerical failures get exit 2, everything else is a usage problem
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::RankDeficient { .. } | Error::Convergence(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> epca::Result<()> {
    match cli.command {
        Command::Fit(args) => run_fit(args, Engine::Sca),
        Command::Sma(args) => run_fit(args, Engine::Sma),
        Command::Code(args) => run_fit(args, Engine::Code),
        Command::Tune(args) => run_tune(args),
        Command::Sim(SimCommand::Lowrank(args)) => run_sim_lowrank(args),
        Command::Sim(SimCommand::Sbm(args)) => run_sim_sbm(args),
        Command::Eval(EvalCommand::Pve(args)) => run_eval_pve(args),
        Command::Eval(EvalCommand::Accuracy(args)) => run_eval_accuracy(args),
        Command::Eval(EvalCommand::Kurtosis(args)) => run_eval_kurtosis(args),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Engine {
    Sca,
    Sma,
    Code,
}

#[derive(Serialize)]
struct FitReport {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
    input: String,
    k: usize,
    gamma_used: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_z_used: Option<f64>,
    rotation: RotationKind,
    kaiser: bool,
    seed: u64,
    pve: f64,
    component_ev: Vec<f64>,
    iterations: usize,
    converged: bool,
    objective_trace: Vec<f64>,
    zero_columns: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zero_score_columns: Option<Vec<usize>>,
    warnings: Vec<String>,
    loadings: Vec<Vec<f64>>,
    scores_basis: Vec<Vec<f64>>,
    center: Vec<Vec<f64>>,
}

fn run_fit(args: FitArgs, engine: Engine) -> epca::Result<()> {
    let x = read_input(&args.input, args.format, args.header)?;
    // sparse coding rotates in score space where row scales vary a lot, so
    // Kaiser normalization is on there by default
    let kaiser = args.kaiser.unwrap_or(engine == Engine::Code);
    let mut config = FitConfig::new(args.k);
    config.gamma = args.gamma;
    config.gamma_z = args.gamma_z;
    config.tol = args.tol;
    config.max_iter = args.max_iter;
    config.rotation = args.rotation.into();
    config.kaiser_normalize = kaiser;
    config.seed = args.seed;

    let (name, fit, gamma_z_used, zero_score_columns) = match engine {
        Engine::Sca => ("fit", sca(&x, &config)?, None, None),
        Engine::Code => ("code", sparse_coding(&x, &config)?, None, None),
        Engine::Sma => {
            let out = sma(&x, &config)?;
            (
                "sma",
                out.fit,
                Some(out.gamma_z_used),
                Some(out.zero_score_columns),
            )
        }
    };

    let report = FitReport {
        command: name,
        timestamp: timestamp(args.no_timestamp),
        input: args.input.display().to_string(),
        k: args.k,
        gamma_used: fit.gamma_used,
        gamma_z_used,
        rotation: config.rotation,
        kaiser,
        seed: args.seed,
        pve: fit.pve,
        component_ev: fit.component_ev.clone(),
        iterations: fit.iterations,
        converged: fit.converged,
        objective_trace: fit.objective_trace.clone(),
        zero_columns: fit.zero_columns.clone(),
        zero_score_columns,
        warnings: fit.warnings.clone(),
        loadings: matrix_rows(&fit.loadings),
        scores_basis: matrix_rows(&fit.scores_basis),
        center: matrix_rows(&fit.center),
    };
    write_json_atomic(&args.out, &report)?;
    if let Some(path) = &args.loadings_out {
        write_csv_atomic(path, &fit.loadings)?;
    }
    if let Some(path) = &args.scores_out {
        write_csv_atomic(path, &fit.scores_basis)?;
    }
    print_fit_summary(name, &fit);
    Ok(())
}

fn print_fit_summary(name: &str, fit: &ScaFit) {
    println!(
        "{name}: k={} gamma={} pve={:.6} iterations={} converged={}",
        fit.component_ev.len(),
        fit.gamma_used,
        fit.pve,
        fit.iterations,
        fit.converged
    );
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
}

#[derive(Serialize)]
struct TuneReport {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
    input: String,
    mode: CvMode,
    folds: usize,
    seed: u64,
    candidates: Vec<TuneCandidate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected: Option<TuneCandidate>,
    warnings: Vec<String>,
}

#[derive(Serialize, Clone)]
struct TuneCandidate {
    index: usize,
    k: usize,
    gamma: f64,
    mean_mse: Option<f64>,
}

fn run_tune(args: TuneArgs) -> epca::Result<()> {
    if let Some(jobs) = args.jobs {
        // ignore the error if a pool already exists (e.g. repeated calls in
        // one process)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    if args.k_grid.is_empty() || args.gamma_grid.is_empty() {
        return Err(Error::InvalidParameter(
            "both --k-grid and --gamma-grid must be nonempty".into(),
        ));
    }
    let x = read_input(&args.input, args.format, args.header)?;
    let mode = match args.mode {
        ModeArg::Sca => CvMode::Sca,
        ModeArg::Sma => CvMode::Sma,
    };

    let mut grid = Vec::new();
    for &k in &args.k_grid {
        for &gamma in &args.gamma_grid {
            let mut c = FitConfig::new(k).with_gamma(gamma);
            c.rotation = args.rotation.into();
            c.seed = args.seed;
            grid.push(c);
        }
    }
    let result = cross_validate(&x, &grid, args.folds, args.seed, mode)?;

    let mut table = String::from("candidate,k,gamma,fold,mse\n");
    for (c, folds) in result.mse.iter().enumerate() {
        for (f, mse) in folds.iter().enumerate() {
            let val = mse.map_or(String::from("NA"), |v| format!("{v}"));
            table.push_str(&format!(
                "{c},{},{},{f},{val}\n",
                grid[c].k,
                grid[c].gamma.unwrap()
            ));
        }
    }
    write_string_atomic(&args.out, &table)?;

    let candidates: Vec<TuneCandidate> = grid
        .iter()
        .enumerate()
        .map(|(i, c)| TuneCandidate {
            index: i,
            k: c.k,
            gamma: c.gamma.unwrap(),
            mean_mse: result.mean_mse[i],
        })
        .collect();
    let selected = result.selected.map(|i| candidates[i].clone());
    match &selected {
        Some(s) => println!("selected: k={} gamma={} mean_mse={:?}", s.k, s.gamma, s.mean_mse),
        None => println!("selected: none (all candidates failed)"),
    }
    if let Some(path) = &args.summary {
        let report = TuneReport {
            command: "tune",
            timestamp: timestamp(args.no_timestamp),
            input: args.input.display().to_string(),
            mode,
            folds: args.folds,
            seed: args.seed,
            candidates,
            selected,
            warnings: result.warnings,
        };
        write_json_atomic(path, &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LowrankTruth {
    seed: u64,
    loadings: Vec<Vec<f64>>,
    scores: Vec<Vec<f64>>,
}

fn run_sim_lowrank(args: LowrankArgs) -> epca::Result<()> {
    let singular_values = simgen::default_singular_values(args.k);
    let instance = simgen::gen_lowrank(
        args.n,
        args.p,
        args.k,
        &singular_values,
        args.truth_gamma,
        args.noise_sd,
        args.seed,
    )?;
    write_csv_atomic(&args.out, &instance.x)?;
    if let Some(path) = &args.truth {
        let truth = LowrankTruth {
            seed: args.seed,
            loadings: matrix_rows(&instance.truth_loadings),
            scores: matrix_rows(&instance.truth_scores),
        };
        write_json_atomic(path, &truth)?;
    }
    println!(
        "lowrank: {}x{} k={} seed={} -> {}",
        args.n,
        args.p,
        args.k,
        args.seed,
        args.out.display()
    );
    Ok(())
}

// four-community pattern used when no connectivity file is given,
// normalized so that the default --scale 0.05 gives an expected node degree
// of 45 at n=900 (each row sums to 4, and 225 · 0.05 · 4 = 45)
const DEFAULT_SBM_CONNECTIVITY: [[f64; 4]; 4] = [
    [2.4, 0.8, 0.4, 0.4],
    [0.8, 2.8, 0.2, 0.2],
    [0.4, 0.2, 2.4, 1.0],
    [0.4, 0.2, 1.0, 2.4],
];

fn run_sim_sbm(args: SbmArgs) -> epca::Result<()> {
    if args.blocks == 0 || args.n % args.blocks != 0 {
        return Err(Error::InvalidParameter(format!(
            "n = {} not divisible into {} equal blocks",
            args.n, args.blocks
        )));
    }
    let base = match &args.connectivity {
        Some(path) => read_csv(path, false)?,
        None => {
            if args.blocks != 4 {
                return Err(Error::InvalidParameter(
                    "the built-in connectivity is 4x4; pass --connectivity for other block counts"
                        .into(),
                ));
            }
            DenseMatrix::from_fn(4, 4, |i, j| DEFAULT_SBM_CONNECTIVITY[i][j])
        }
    };
    let connectivity = base.scale(args.scale);
    let block_sizes = vec![args.n / args.blocks; args.blocks];
    let instance = simgen::gen_sbm(args.n, &block_sizes, &connectivity, args.seed)?;
    write_mtx_atomic(&args.out, &instance.adjacency)?;
    if let Some(path) = &args.labels {
        let labels = DenseMatrix::from_fn(args.n, 1, |i, _| instance.labels[i] as f64);
        write_csv_atomic(path, &labels)?;
    }
    println!(
        "sbm: n={} blocks={} edges={} seed={} -> {}",
        args.n,
        args.blocks,
        instance.adjacency.nnz() / 2,
        args.seed,
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PveReport {
    pve: f64,
}

fn run_eval_pve(args: PveArgs) -> epca::Result<()> {
    let x = read_input(&args.input, args.format, args.header)?;
    let y = read_csv(&args.loadings, false)?;
    let pve = epca::pve(&x, &y)?;
    emit_json(args.out.as_deref(), &PveReport { pve })
}

#[derive(Serialize)]
struct AccuracyReport {
    accuracy: f64,
}

fn run_eval_accuracy(args: AccuracyArgs) -> epca::Result<()> {
    let labels = read_labels(&args.labels)?;
    let truth = read_labels(&args.truth)?;
    let accuracy = simgen::accuracy(&labels, &truth, args.k)?;
    emit_json(args.out.as_deref(), &AccuracyReport { accuracy })
}

#[derive(Serialize)]
struct KurtosisReport {
    excess_kurtosis: Vec<f64>,
}

fn run_eval_kurtosis(args: KurtosisArgs) -> epca::Result<()> {
    let x = read_csv(&args.input, args.header)?;
    let excess_kurtosis: Vec<f64> = (0..x.ncols())
        .map(|j| simgen::excess_kurtosis(&x.column(j)))
        .collect::<epca::Result<_>>()?;
    emit_json(args.out.as_deref(), &KurtosisReport { excess_kurtosis })
}

fn read_labels(path: &Path) -> epca::Result<Vec<usize>> {
    let m = read_csv(path, false)?;
    if m.ncols() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "label file {} has {} columns, expected 1",
            path.display(),
            m.ncols()
        )));
    }
    m.column(0)
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && v >= 1.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParameter(format!("label {v} is not a positive integer")))
            }
        })
        .collect()
}

fn read_input(path: &Path, format: FormatArg, header: bool) -> epca::Result<DataMatrix> {
    let use_mtx = match format {
        FormatArg::Csv => false,
        FormatArg::Mtx => true,
        FormatArg::Auto => path.extension().is_some_and(|e| e == "mtx"),
    };
    if use_mtx {
        Ok(read_matrix_market(path)?.into())
    } else {
        Ok(read_csv(path, header)?.into())
    }
}

fn matrix_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).to_vec()).collect()
}

fn timestamp(suppress: bool) -> Option<u64> {
    if suppress {
        return None;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

// write JSON to a file when a path is given, otherwise to stdout
fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> epca::Result<()> {
    match path {
        Some(p) => write_json_atomic(p, value),
        None => {
            let body = serde_json::to_string_pretty(value)
                .map_err(|e| Error::InvalidParameter(format!("serialization failed: {e}")))?;
            println!("{body}");
            Ok(())
        }
    }
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> epca::Result<()> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidParameter(format!("serialization failed: {e}")))?;
    body.push('\n');
    write_string_atomic(path, &body)
}

fn write_string_atomic(path: &Path, body: &str) -> epca::Result<()> {
    let tmp = tmp_path(path);
    std::fs::write(&tmp, body)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_csv_atomic(path: &Path, m: &DenseMatrix) -> epca::Result<()> {
    let tmp = tmp_path(path);
    write_csv(&tmp, m, false)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_mtx_atomic(path: &Path, m: &epca::SparseMatrix) -> epca::Result<()> {
    let tmp = tmp_path(path);
    write_matrix_market(&tmp, m)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}
