//! Command-line interface. `run` is the whole program minus process exit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::covariance::{log_returns, sample_covariance, to_correlation};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::filter::{run_filter, CostSpec, FilterOptions, Scale, TargetChoice};
use crate::matrix::{MatrixKind, SymMatrix};
use crate::metrics::recovery_metrics;
use crate::network::{build_network, metric_weights, ExportFormat, Network};
use crate::report::{summarize, RunReport};
use crate::shrinkage::{ledoit_wolf, ledoit_wolf_correlation, NercomeParams};
use crate::sim::{
    replicate_table1, sparse10_fixture, spectrum_deviation_study, write_deviation_csv, StudyConfig,
    BENCHMARK_THRESHOLDS,
};
use crate::spectral::{mp_support, spectrum, Band, DistanceSpec, Metric};

pub const THREADS_ENV: &str = "SPARFILTER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sparfilter", version, about = "Spectral-distance filtering of comovement networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter a data set and write the report, sweep table and networks.
    Filter(FilterArgs),
    /// Print the threshold sweep table as CSV.
    Sweep(PipelineArgs),
    /// Run a seeded Monte-Carlo study.
    Simulate(SimulateArgs),
    /// Score a filtered network against a true correlation matrix.
    Metrics(MetricsArgs),
    /// Report sample and target spectra with Marchenko-Pastur bounds.
    Spectrum(PipelineArgs),
    /// Convert prices to log returns.
    Ingest(IngestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Returns {
    None,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Correlation,
    Covariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    LedoitWolf,
    Nercome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandArg {
    Full,
    Mp,
    Range(Band),
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    pub returns: Returns,
    #[arg(long, value_enum, default_value = "correlation")]
    pub scale: ScaleArg,
    #[arg(long, value_enum, default_value = "ledoit-wolf")]
    pub target: TargetArg,
    /// `minkowski:K` (K >= 1) or `linf`.
    #[arg(long, default_value = "minkowski:2", value_parser = parse_metric)]
    pub distance: Metric,
    /// `full`, `mp`, or `PL:PH` (1-based, inclusive).
    #[arg(long, default_value = "full", value_parser = parse_band)]
    pub band: BandArg,
    /// `power:T1,T2` or `weight-ratio:S`.
    #[arg(long, default_value = "power:0,2", value_parser = parse_cost)]
    pub cost: CostSpec,
    /// Seed for the split-sample target.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub nercome_splits: u64,
    #[arg(long, default_value_t = 0.5)]
    pub nercome_fraction: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Output directory; without it only the report is printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated network formats.
    #[arg(long, value_delimiter = ',', default_value = "edge_csv,graph_json", value_parser = parse_format)]
    pub format: Vec<ExportFormat>,
    /// Export correlation distances sqrt(2(1 - rho)) instead of raw weights.
    #[arg(long)]
    pub metric_weights: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureArg {
    #[value(name = "appendix-a")]
    AppendixA,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Bundled true correlation matrix.
    #[arg(long, value_enum, conflicts_with_all = ["sigma", "identity"])]
    pub fixture: Option<FixtureArg>,
    /// CSV with a labelled true covariance or correlation matrix.
    #[arg(long, conflicts_with = "identity")]
    pub sigma: Option<PathBuf>,
    /// Spectrum-deviation study for N(0, I_P); requires --ratios.
    #[arg(long, requires = "ratios")]
    pub identity: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub ratios: Vec<f64>,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value = "minkowski:2", value_parser = parse_metric)]
    pub distance: Metric,
    #[arg(long, default_value = "power:0,2", value_parser = parse_cost)]
    pub cost: CostSpec,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    /// CSV with the labelled true correlation (or covariance) matrix.
    #[arg(long)]
    pub truth: PathBuf,
    /// Filtered network in graph_json format.
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, default_value_t = f64::NAN)]
    pub eta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "log")]
    pub returns: Returns,
    /// Destination CSV; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    if s == "linf" {
        return Ok(Metric::LInfinity);
    }
    let k = s.strip_prefix("minkowski:").ok_or_else(|| format!("expected minkowski:K or linf, got {s:?}"))?;
    let kappa: f64 = k.parse().map_err(|_| format!("bad Minkowski exponent {k:?}"))?;
    Metric::minkowski(kappa).map_err(|e| e.to_string())
}

pub fn parse_band(s: &str) -> std::result::Result<BandArg, String> {
    match s {
        "full" => Ok(BandArg::Full),
        "mp" => Ok(BandArg::Mp),
        _ => {
            let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected full, mp or PL:PH, got {s:?}"))?;
            let low: usize = lo.parse().map_err(|_| format!("bad band start {lo:?}"))?;
            let high: usize = hi.parse().map_err(|_| format!("bad band end {hi:?}"))?;
            if low < 1 || low > high {
                return Err(format!("band needs 1 <= PL <= PH, got {low}:{high}"));
            }
            Ok(BandArg::Range(Band::new(low, high)))
        }
    }
}

pub fn parse_cost(s: &str) -> std::result::Result<CostSpec, String> {
    if let Some(rest) = s.strip_prefix("power:") {
        let (a, b) = rest.split_once(',').ok_or_else(|| format!("expected power:T1,T2, got {s:?}"))?;
        let t1: f64 = a.parse().map_err(|_| format!("bad theta1 {a:?}"))?;
        let t2: f64 = b.parse().map_err(|_| format!("bad theta2 {b:?}"))?;
        CostSpec::power(t1, t2).map_err(|e| e.to_string())
    } else if let Some(rest) = s.strip_prefix("weight-ratio:") {
        let scale: f64 = rest.parse().map_err(|_| format!("bad scale {rest:?}"))?;
        CostSpec::weight_ratio(scale).map_err(|e| e.to_string())
    } else {
        Err(format!("expected power:T1,T2 or weight-ratio:S, got {s:?}"))
    }
}

fn parse_format(s: &str) -> std::result::Result<ExportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Applies `SPARFILTER_THREADS` to the global pool. Ignored if the pool
/// already exists.
pub fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Executes a parsed command, writing the primary result to `stdout`.
pub fn run<W: Write>(cli: Cli, stdout: &mut W) -> Result<()> {
    match cli.command {
        Command::Filter(args) => cmd_filter(&args, stdout),
        Command::Sweep(args) => cmd_sweep(&args, stdout),
        Command::Simulate(args) => cmd_simulate(&args, stdout),
        Command::Metrics(args) => cmd_metrics(&args, stdout),
        Command::Spectrum(args) => cmd_spectrum(&args, stdout),
        Command::Ingest(args) => cmd_ingest(&args, stdout),
    }
}

fn load_data(input: &Path, returns: Returns) -> Result<DataMatrix> {
    let raw = DataMatrix::read_csv_path(input)?;
    match returns {
        Returns::None => Ok(raw),
        Returns::Log => log_returns(&raw),
    }
}

fn returns_name(r: Returns) -> &'static str {
    match r {
        Returns::None => "none",
        Returns::Log => "log",
    }
}

fn target_name(t: TargetArg) -> &'static str {
    match t {
        TargetArg::LedoitWolf => "ledoit-wolf",
        TargetArg::Nercome => "nercome",
    }
}

fn scale_of(s: ScaleArg) -> Scale {
    match s {
        ScaleArg::Correlation => Scale::Correlation,
        ScaleArg::Covariance => Scale::Covariance,
    }
}

fn pipeline_setup(args: &PipelineArgs) -> (DistanceSpec, FilterOptions) {
    let band = match args.band {
        BandArg::Range(b) => Some(b),
        _ => None,
    };
    let target = match args.target {
        TargetArg::LedoitWolf => TargetChoice::LedoitWolf,
        TargetArg::Nercome => TargetChoice::Nercome(NercomeParams {
            split_fraction: args.nercome_fraction,
            n_splits: args.nercome_splits as usize,
            seed: args.seed,
        }),
    };
    let options = FilterOptions { scale: scale_of(args.scale), target, mp_band: args.band == BandArg::Mp };
    (DistanceSpec::new(args.distance, band), options)
}

fn create_file(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn write_json<W: Write, T: Serialize>(stdout: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

fn cmd_filter<W: Write>(args: &FilterArgs, stdout: &mut W) -> Result<()> {
    let started = Instant::now();
    let p = &args.pipeline;
    let d = load_data(&p.input, p.returns)?;
    let (dspec, options) = pipeline_setup(p);
    let result = run_filter(&d, &dspec, &p.cost, &options)?;

    let mut maximal = build_network(&result.matrix_star);
    let mut tuned = build_network(&result.matrix_tilde);
    let summary = summarize(
        &result,
        returns_name(p.returns),
        options.scale,
        target_name(p.target),
        p.distance,
        p.cost,
        p.seed,
        &maximal,
        &tuned,
    );
    if args.metric_weights {
        maximal = metric_weights(&maximal)?;
        tuned = metric_weights(&tuned)?;
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
        result.table.write_csv(create_file(&dir.join("sweep.csv"))?)?;
        for format in &args.format {
            for (name, net) in [("maximal", &maximal), ("tuned", &tuned)] {
                let path = dir.join(format!("{name}.{}", format.extension()));
                net.export(*format, create_file(&path)?)?;
            }
        }
    }

    let report = RunReport::new(summary, started.elapsed().as_secs_f64() * 1e3);
    if let Some(dir) = &args.out {
        let path = dir.join("report.json");
        serde_json::to_writer_pretty(create_file(&path)?, &report)?;
    }
    write_json(stdout, &report)
}

fn cmd_sweep<W: Write>(args: &PipelineArgs, stdout: &mut W) -> Result<()> {
    let d = load_data(&args.input, args.returns)?;
    let (dspec, options) = pipeline_setup(args);
    let result = run_filter(&d, &dspec, &args.cost, &options)?;
    result.table.write_csv(stdout)
}

#[derive(Serialize)]
struct SpectrumReport {
    n: usize,
    p: usize,
    pn_ratio: f64,
    sample: Vec<f64>,
    target: Vec<f64>,
    alpha1: f64,
    alpha2: f64,
    mp_lower: f64,
    mp_upper: f64,
    deviating: usize,
}

fn cmd_spectrum<W: Write>(args: &PipelineArgs, stdout: &mut W) -> Result<()> {
    let d = load_data(&args.input, args.returns)?;
    let (sample, lw) = match args.scale {
        ScaleArg::Correlation => (to_correlation(&sample_covariance(&d)?)?, ledoit_wolf_correlation(&d)?),
        ScaleArg::Covariance => (sample_covariance(&d)?, ledoit_wolf(&d)?),
    };
    let sample = spectrum(&sample)?;
    let target = spectrum(&lw.estimator)?;
    let support = mp_support(d.p() as f64 / d.n() as f64, lw.mu)?;
    write_json(
        stdout,
        &SpectrumReport {
            n: d.n(),
            p: d.p(),
            pn_ratio: lw.pn_ratio,
            deviating: target.count_above(support.upper),
            sample: sample.values().to_vec(),
            target: target.values().to_vec(),
            alpha1: lw.alpha1,
            alpha2: lw.alpha2,
            mp_lower: support.lower,
            mp_upper: support.upper,
        },
    )
}

fn cmd_simulate<W: Write>(args: &SimulateArgs, stdout: &mut W) -> Result<()> {
    if let Some(p) = args.identity {
        let rows = spectrum_deviation_study(p, &args.ratios, args.seed)?;
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
            write_deviation_csv(&rows, create_file(&dir.join("spectrum.csv"))?)?;
            serde_json::to_writer_pretty(create_file(&dir.join("spectrum.json"))?, &rows)?;
        }
        return write_json(stdout, &rows);
    }

    let sigma = match (&args.fixture, &args.sigma) {
        (Some(FixtureArg::AppendixA), _) => sparse10_fixture(),
        (None, Some(path)) => {
            let file = fs::File::open(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            let m = SymMatrix::read_csv(file, MatrixKind::Covariance)?;
            if (0..m.dim()).all(|i| m.get(i, i) == 1.0) {
                SymMatrix::new(m.entries().clone(), MatrixKind::Correlation, m.labels().to_vec())?
            } else {
                m
            }
        }
        (None, None) => {
            return Err(Error::InvalidParameter("simulate needs --fixture, --sigma or --identity".into()));
        }
    };
    let thresholds = if args.thresholds.is_empty() { BENCHMARK_THRESHOLDS.to_vec() } else { args.thresholds.clone() };
    let config = StudyConfig {
        sigma,
        n: args.n as usize,
        replications: args.reps as usize,
        seed: args.seed,
        thresholds,
        dspec: DistanceSpec::new(args.distance, None),
        cspec: args.cost,
    };
    let table = replicate_table1(&config)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
        table.write_csv(create_file(&dir.join("table.csv"))?)?;
        serde_json::to_writer_pretty(create_file(&dir.join("table.json"))?, &table)?;
    }
    write_json(stdout, &table)
}

fn cmd_metrics<W: Write>(args: &MetricsArgs, stdout: &mut W) -> Result<()> {
    let file = fs::File::open(&args.truth).map_err(|source| Error::Io { path: args.truth.clone(), source })?;
    let sigma = SymMatrix::read_csv(file, MatrixKind::Covariance)?;
    let truth_corr = to_correlation(&sigma)?;
    let file = fs::File::open(&args.network).map_err(|source| Error::Io { path: args.network.clone(), source })?;
    let filtered = Network::read_graph_json(std::io::BufReader::new(file))?;
    let m = recovery_metrics(&build_network(&truth_corr), &filtered, &truth_corr, args.eta)?;
    write_json(stdout, &m)
}

fn cmd_ingest<W: Write>(args: &IngestArgs, stdout: &mut W) -> Result<()> {
    let d = load_data(&args.input, args.returns)?;
    match &args.output {
        Some(path) => d.write_csv(create_file(path)?),
        None => d.write_csv(stdout),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flag_values() {
        assert_eq!(parse_metric("linf").unwrap(), Metric::LInfinity);
        assert_eq!(parse_metric("minkowski:1.5").unwrap(), Metric::Minkowski { kappa: 1.5 });
        assert!(parse_metric("minkowski:0.5").is_err());
        assert!(parse_metric("l2").is_err());
        assert_eq!(parse_band("mp").unwrap(), BandArg::Mp);
        assert_eq!(parse_band("2:5").unwrap(), BandArg::Range(Band::new(2, 5)));
        assert!(parse_band("0:3").is_err());
        assert!(parse_band("4:3").is_err());
        assert_eq!(parse_cost("power:0,2").unwrap(), CostSpec::Power { theta1: 0.0, theta2: 2.0 });
        assert_eq!(parse_cost("weight-ratio:0.5").unwrap(), CostSpec::WeightRatio { scale: 0.5 });
        assert!(parse_cost("power:1,1").is_err());
        assert!(parse_cost("linear:1").is_err());
    }

    #[test]
    fn zero_reps_is_a_usage_error() {
        let err =
            Cli::try_parse_from(["sparfilter", "simulate", "--fixture", "appendix-a", "--reps", "0"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn formats_parse_as_list() {
        let cli =
            Cli::try_parse_from(["sparfilter", "filter", "--input", "x.csv", "--format", "graphml,edge_csv"]).unwrap();
        match cli.command {
            Command::Filter(f) => assert_eq!(f.format, vec![ExportFormat::GraphMl, ExportFormat::EdgeCsv]),
            _ => unreachable!(),
        }
    }
}
