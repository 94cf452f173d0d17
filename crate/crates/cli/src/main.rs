//! `tensornet` command-line tool.

mod data;
mod error;
mod settings;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tensornet::bench::{
    compress_with_report, generate_synthetic, run_tkrr_bench, run_ttlayer_bench, LayerBenchConfig, LayerShape,
    SyntheticSpec, TkrrBenchConfig, DEFAULT_DENSE_CAP,
};
use tensornet::io::{load_network, load_tensor, save_network, save_tensor, Network};
use tensornet::metrics::{build_report, EfficiencyReport};
use tensornet::tkrr::{rmse, FitDiagnostics, TkrrOptions};
use tensornet::{Dataset, DenseRidgeModel, FeatureFamily, FeatureMap, TkrrModel, TtTruncation};

use crate::error::CliError;
use crate::settings::{BoundsArg, List, Settings, SyntheticArg};

#[derive(Parser)]
#[command(name = "tensornet", version, about = "Tensor-network regression and layer benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dense ridge baseline versus T-KRR over a grid of basis counts.
    BenchTkrr(BenchTkrrArgs),
    /// Dense versus TT-factorized layer passes over a rank grid.
    BenchTtlayer(BenchLayerArgs),
    /// Compress a dense weight matrix into a TT layer.
    Compress(CompressArgs),
    /// Write a synthetic regression dataset as CSV.
    GenSynthetic(GenArgs),
    /// Fit a regression model and save it.
    Fit(FitArgs),
    /// Predict with a saved regression model.
    Predict(PredictArgs),
    /// Export the dense tensor represented by a saved container.
    Reconstruct(ReconstructArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Synthetic data `N,D,noise` instead of a file.
    #[arg(long)]
    synthetic: Option<SyntheticArg>,
    /// Target column by header name or zero-based index (default: last).
    #[arg(long = "target-col")]
    target_col: Option<String>,
    /// Planted CP rank of synthetic targets.
    #[arg(long = "planted-rank")]
    planted_rank: Option<usize>,
    /// Basis count of the planted synthetic model.
    #[arg(long = "planted-basis")]
    planted_basis: Option<usize>,
    /// Input domain: `auto` (data ranges) or `lo,hi`.
    #[arg(long)]
    bounds: Option<BoundsArg>,
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BenchTkrrArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Feature family: fourier or poly.
    #[arg(long)]
    basis: Option<FeatureFamily>,
    /// Basis counts, e.g. `2,3,4`.
    #[arg(long = "I-grid", alias = "i-grid")]
    i_grid: Option<List<usize>>,
    #[arg(long)]
    rank: Option<usize>,
    /// Ridge regularization.
    #[arg(long)]
    reg: Option<f64>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Element cap for the dense baseline.
    #[arg(long = "dense-cap")]
    dense_cap: Option<u128>,
    /// JSON report path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a Markdown table here.
    #[arg(long)]
    markdown: Option<PathBuf>,
    /// Also write CSV rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    hardware: Option<String>,
}

#[derive(Args)]
struct BenchLayerArgs {
    /// Output mode sizes `I_1,...,I_D`.
    #[arg(long = "output-shape")]
    output_shape: Option<List<usize>>,
    /// Input mode sizes `J_1,...,J_D`.
    #[arg(long = "input-shape")]
    input_shape: Option<List<usize>>,
    /// Internal TT ranks to sweep; each value is used for all cores.
    #[arg(long = "rank-grid")]
    rank_grid: Option<List<usize>>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "dense-cap")]
    dense_cap: Option<u128>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    markdown: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    hardware: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CompressArgs {
    /// Dense matrix in the tensor binary format (2 modes).
    #[arg(long)]
    input: PathBuf,
    /// Row factorization `I_1,...,I_D`.
    #[arg(long = "row-factors")]
    row_factors: List<usize>,
    /// Column factorization `J_1,...,J_D`.
    #[arg(long = "col-factors")]
    col_factors: List<usize>,
    /// Relative error tolerance.
    #[arg(long, conflicts_with = "max_ranks")]
    eps: Option<f64>,
    /// Internal rank caps `R_2,...,R_D`.
    #[arg(long = "max-ranks")]
    max_ranks: Option<List<usize>>,
    /// Output layer container.
    #[arg(long)]
    out: PathBuf,
    /// Compression report JSON (default: stdout).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// `N,D,noise`.
    #[arg(long)]
    synthetic: Option<SyntheticArg>,
    #[arg(long)]
    basis: Option<FeatureFamily>,
    #[arg(long = "planted-basis")]
    planted_basis: Option<usize>,
    #[arg(long = "planted-rank")]
    planted_rank: Option<usize>,
    /// Input domain `lo,hi`.
    #[arg(long)]
    bounds: Option<BoundsArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// `tkrr` or `ridge`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    basis: Option<FeatureFamily>,
    /// Basis functions per input dimension.
    #[arg(long = "basis-count")]
    basis_count: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    reg: Option<f64>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "dense-cap")]
    dense_cap: Option<u128>,
    /// Model container path.
    #[arg(long)]
    out: PathBuf,
    /// Fit diagnostics JSON (default: stdout).
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Model container written by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "target-col")]
    target_col: Option<String>,
    /// Predictions CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    model: PathBuf,
    /// Tensor binary output.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BenchTkrr(a) => bench_tkrr(a),
        Command::BenchTtlayer(a) => bench_ttlayer(a),
        Command::Compress(a) => compress(a),
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Reconstruct(a) => reconstruct(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Writes `text` to `path`, or stdout when `path` is `None`.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(p, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(value: &impl Serialize) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Config(e.to_string()))
}

fn emit_report(
    rows: &[EfficiencyReport],
    out: Option<&Path>,
    markdown: Option<&Path>,
    csv: Option<&Path>,
) -> Result<(), CliError> {
    let doc = build_report(rows)?;
    emit(out, &(doc.json + "\n"))?;
    if let Some(p) = markdown {
        emit(Some(p), &doc.markdown)?;
    }
    if let Some(p) = csv {
        emit(Some(p), &doc.csv)?;
    }
    Ok(())
}

fn synthetic_spec(arg: SyntheticArg, family: FeatureFamily, planted_basis: usize, planted_rank: usize, bounds: (f64, f64), seed: u64) -> Result<SyntheticSpec, CliError> {
    if arg.samples == 0 || arg.dims == 0 || !(arg.noise >= 0.0) {
        return Err(CliError::Config("synthetic spec needs N >= 1, D >= 1 and noise >= 0".into()));
    }
    Ok(SyntheticSpec {
        family,
        basis_count: planted_basis,
        planted_rank,
        bounds,
        seed,
        ..SyntheticSpec::new(arg.samples, arg.dims, arg.noise)
    })
}

/// Loaded data plus the domain to use for feature maps.
struct Loaded {
    data: Dataset<f64>,
    bounds: Option<(f64, f64)>,
}

fn load_data(a: &DataArgs, s: &Settings, family: FeatureFamily, seed: u64) -> Result<Loaded, CliError> {
    let path: Option<PathBuf> = s.pick(a.data.clone(), "data")?;
    let synthetic: Option<SyntheticArg> = s.pick(a.synthetic, "synthetic")?;
    let bounds: Option<BoundsArg> = s.pick(a.bounds, "bounds")?;
    let target: Option<String> = s.pick(a.target_col.clone(), "target-col")?;
    match (path, synthetic) {
        (Some(_), Some(_)) => Err(CliError::Config("give either --data or --synthetic, not both".into())),
        (None, None) => Err(CliError::Config("a dataset is required: --data FILE or --synthetic N,D,noise".into())),
        (Some(p), None) => {
            let data = data::load_dataset(&p, target.as_deref())?;
            let bounds = match bounds {
                Some(BoundsArg::Fixed(lo, hi)) => Some((lo, hi)),
                _ => None,
            };
            Ok(Loaded { data, bounds })
        }
        (None, Some(spec)) => {
            let domain = match bounds {
                Some(BoundsArg::Fixed(lo, hi)) => (lo, hi),
                _ => (0.0, 1.0),
            };
            let spec = synthetic_spec(
                spec,
                family,
                s.get(a.planted_basis, "planted-basis", 4)?,
                s.get(a.planted_rank, "planted-rank", 2)?,
                domain,
                seed,
            )?;
            let (data, _) = generate_synthetic(&spec)?;
            let bounds = match bounds {
                Some(BoundsArg::Auto) => None,
                _ => Some(domain),
            };
            Ok(Loaded { data, bounds })
        }
    }
}

fn bench_tkrr(a: BenchTkrrArgs) -> Result<(), CliError> {
    let s = Settings::load(a.data.config.as_deref())?;
    let seed = s.get(a.seed, "seed", 0)?;
    let family = s.get(a.basis, "basis", FeatureFamily::DeterministicFourier)?;
    let loaded = load_data(&a.data, &s, family, seed)?;
    let grid: List<usize> = s
        .pick(a.i_grid, "I-grid")?
        .ok_or_else(|| CliError::Config("--I-grid is required".into()))?;
    if grid.0.contains(&0) {
        return Err(CliError::Config("grid values must be positive".into()));
    }
    let repeats = s.get(a.repeats, "repeats", 3)?;
    if repeats == 0 {
        return Err(CliError::Config("--repeats must be at least 1".into()));
    }
    if loaded.data.len() < 3 {
        return Err(CliError::Config("benchmarks need N >= 3 for the train/test split".into()));
    }
    let cfg = TkrrBenchConfig {
        family,
        grid: grid.0,
        rank: s.get(a.rank, "rank", 20)?,
        regularization: s.get(a.reg, "reg", 1e-6)?,
        sweeps: s.get(a.sweeps, "sweeps", 10)?,
        repeats,
        seed,
        hardware: s.get(a.hardware, "hardware", "unspecified".to_string())?,
        dense_cap: s.get(a.dense_cap, "dense-cap", DEFAULT_DENSE_CAP)?,
        bounds: loaded.bounds,
        ..Default::default()
    };
    let rows = run_tkrr_bench(&loaded.data, &cfg)?;
    let out: Option<PathBuf> = s.pick(a.out, "out")?;
    let md: Option<PathBuf> = s.pick(a.markdown, "markdown")?;
    let csv: Option<PathBuf> = s.pick(a.csv, "csv")?;
    emit_report(&rows, out.as_deref(), md.as_deref(), csv.as_deref())
}

fn bench_ttlayer(a: BenchLayerArgs) -> Result<(), CliError> {
    let s = Settings::load(a.config.as_deref())?;
    let output: List<usize> = s.get(a.output_shape, "output-shape", List(vec![4, 4, 4]))?;
    let input: List<usize> = s.get(a.input_shape, "input-shape", List(vec![4, 4, 4]))?;
    let ranks: List<usize> = s.get(a.rank_grid, "rank-grid", List(vec![1, 2, 4]))?;
    if output.0.len() != input.0.len() {
        return Err(CliError::Config(format!(
            "output shape {:?} and input shape {:?} need the same number of modes",
            output.0, input.0
        )));
    }
    if output.0.contains(&0) || input.0.contains(&0) || ranks.0.contains(&0) {
        return Err(CliError::Config("shapes and ranks must be positive".into()));
    }
    let d = output.0.len();
    let shapes = ranks
        .0
        .iter()
        .map(|&r| LayerShape {
            output_shape: output.0.clone(),
            input_shape: input.0.clone(),
            ranks: vec![r; d - 1],
        })
        .collect();
    let repeats = s.get(a.repeats, "repeats", 3)?;
    if repeats == 0 {
        return Err(CliError::Config("--repeats must be at least 1".into()));
    }
    let cfg = LayerBenchConfig {
        shapes,
        repeats,
        seed: s.get(a.seed, "seed", 0)?,
        hardware: s.get(a.hardware, "hardware", "unspecified".to_string())?,
        dense_cap: s.get(a.dense_cap, "dense-cap", DEFAULT_DENSE_CAP)?,
    };
    let rows = run_ttlayer_bench(&cfg)?;
    let out: Option<PathBuf> = s.pick(a.out, "out")?;
    let md: Option<PathBuf> = s.pick(a.markdown, "markdown")?;
    let csv: Option<PathBuf> = s.pick(a.csv, "csv")?;
    emit_report(&rows, out.as_deref(), md.as_deref(), csv.as_deref())
}

fn compress(a: CompressArgs) -> Result<(), CliError> {
    let w = load_tensor::<f64>(&a.input).map_err(|e| match e {
        tensornet::Error::Io(io) => CliError::io(&a.input, io),
        other => CliError::input(&a.input, other.to_string()),
    })?;
    if w.ndim() != 2 {
        return Err(CliError::input(&a.input, format!("expected a matrix, found {} modes", w.ndim())));
    }
    let rows: usize = a.row_factors.0.iter().product();
    let cols: usize = a.col_factors.0.iter().product();
    if a.row_factors.0.len() != a.col_factors.0.len() || rows != w.dims()[0] || cols != w.dims()[1] {
        return Err(CliError::Config(format!(
            "factors {:?} x {:?} do not match a {} x {} matrix",
            a.row_factors.0,
            a.col_factors.0,
            w.dims()[0],
            w.dims()[1]
        )));
    }
    let truncation = match (a.eps, a.max_ranks) {
        (Some(eps), None) => TtTruncation::Tolerance(eps),
        (None, Some(r)) => TtTruncation::MaxRanks(r.0),
        (None, None) => TtTruncation::Tolerance(0.0),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    let (layer, report) = compress_with_report(&w, &a.row_factors.0, &a.col_factors.0, &truncation)?;
    save_network(&a.out, &Network::TtLayer(layer))?;
    emit(a.report.as_deref(), &to_json(&report)?)
}

fn gen_synthetic(a: GenArgs) -> Result<(), CliError> {
    let s = Settings::load(a.config.as_deref())?;
    let spec: SyntheticArg = s
        .pick(a.synthetic, "synthetic")?
        .ok_or_else(|| CliError::Config("--synthetic N,D,noise is required".into()))?;
    let bounds = match s.pick(a.bounds, "bounds")? {
        Some(BoundsArg::Fixed(lo, hi)) => (lo, hi),
        Some(BoundsArg::Auto) => return Err(CliError::Config("generation needs explicit bounds".into())),
        None => (0.0, 1.0),
    };
    let spec = synthetic_spec(
        spec,
        s.get(a.basis, "basis", FeatureFamily::DeterministicFourier)?,
        s.get(a.planted_basis, "planted-basis", 4)?,
        s.get(a.planted_rank, "planted-rank", 2)?,
        bounds,
        s.get(a.seed, "seed", 0)?,
    )?;
    let (data, _) = generate_synthetic(&spec)?;
    let mut buf = Vec::new();
    data::write_dataset(&mut buf, &data).expect("writing to memory");
    let out: Option<PathBuf> = s.pick(a.out, "out")?;
    emit(out.as_deref(), std::str::from_utf8(&buf).expect("ASCII output"))
}

#[derive(Serialize)]
struct FitSummary {
    model: String,
    samples: usize,
    train_rmse: f64,
    clipped_inputs: usize,
    diagnostics: Option<FitDiagnostics>,
}

fn fit(a: FitArgs) -> Result<(), CliError> {
    let s = Settings::load(a.data.config.as_deref())?;
    let seed = s.get(a.seed, "seed", 0)?;
    let family = s.get(a.basis, "basis", FeatureFamily::DeterministicFourier)?;
    let loaded = load_data(&a.data, &s, family, seed)?;
    let basis_count = s.get(a.basis_count, "basis-count", 4)?;
    let fm = match loaded.bounds {
        Some((lo, hi)) => FeatureMap::uniform(family, basis_count, loaded.data.dim(), lo, hi)?,
        None => FeatureMap::fit_bounds(family, basis_count, &loaded.data, 0.0)?,
    };
    let reg = s.get(a.reg, "reg", 1e-6)?;
    let kind = s.get(a.model, "model", "tkrr".to_string())?;
    let data = &loaded.data;
    let (net, pred, diagnostics) = match kind.as_str() {
        "tkrr" => {
            let opts = TkrrOptions {
                rank: s.get(a.rank, "rank", 10)?,
                regularization: reg,
                max_sweeps: s.get(a.sweeps, "sweeps", 10)?,
                seed,
                ..Default::default()
            };
            let model = TkrrModel::fit(&fm, data, &opts)?;
            let pred = model.predict(data.inputs())?;
            let diag = model.diagnostics().clone();
            (Network::Tkrr(model), pred, Some(diag))
        }
        "ridge" => {
            let cap = s.get(a.dense_cap, "dense-cap", DEFAULT_DENSE_CAP)?;
            let model = DenseRidgeModel::fit(&fm, data, reg, cap)?;
            let pred = model.predict(data.inputs())?;
            (Network::DenseRidge(model), pred, None)
        }
        other => return Err(CliError::Config(format!("unknown model `{other}`, expected tkrr or ridge"))),
    };
    save_network(&a.out, &net)?;
    let summary = FitSummary {
        model: kind,
        samples: data.len(),
        train_rmse: rmse(&pred.values, data.targets()),
        clipped_inputs: pred.clip_count(),
        diagnostics,
    };
    emit(a.diagnostics.as_deref(), &to_json(&summary)?)
}

fn predict(a: PredictArgs) -> Result<(), CliError> {
    let net = load_network::<f64>(&a.model)?;
    let pred = match &net {
        Network::Tkrr(m) => {
            let x = data::load_inputs(&a.data, m.feature_map().dims(), a.target_col.as_deref())?;
            m.predict(&x)?
        }
        Network::DenseRidge(m) => {
            let x = data::load_inputs(&a.data, m.feature_map().dims(), a.target_col.as_deref())?;
            m.predict(&x)?
        }
        other => {
            return Err(CliError::Config(format!(
                "{} holds a {:?}, not a regression model",
                a.model.display(),
                other.kind()
            )))
        }
    };
    let mut text = String::from("prediction,clipped\n");
    for (v, c) in pred.values.iter().zip(&pred.clipped) {
        text.push_str(&format!("{v:?},{}\n", u8::from(*c)));
    }
    if pred.clip_count() > 0 {
        eprintln!("warning: {} inputs were clipped into the feature domain", pred.clip_count());
    }
    emit(a.out.as_deref(), &text)
}

fn reconstruct(a: ReconstructArgs) -> Result<(), CliError> {
    let net = load_network::<f64>(&a.model)?;
    save_tensor(&a.out, &net.reconstruct()?)?;
    Ok(())
}
