//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input or config.

use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgeplace_core::{
    build_merge_tree, default_dmax_grid, neighbor_peak_ratios, partition_by_operator,
    randomize_loads, reconstruct_stations, sweep, AppFilter, DistributionSummary, LoadSeries,
    MaxScope, Station, TraceFrame, TraceRecord,
};
use rayon::prelude::*;
use serde_json::json;

use crate::export::{
    cdf_csv, file_stem, json_bytes, partition_geojson, partition_json, stations_geojson, sweep_csv,
    write_atomic,
};
use crate::synth_config::parse_synth_config;
use crate::trace_io::{parse_records, write_records, TraceFormat};

#[derive(Debug, Parser)]
#[command(
    name = "edgeplace",
    version,
    about = "Edge-server placement analysis on cellular traces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rebuild base stations; writes stations_<op>.geojson and summary.json.
    Reconstruct(TraceArgs),
    /// Efficiency over a d_max grid; writes sweep_<op>.csv.
    Sweep(SweepArgs),
    /// Peak-load CDF and neighbor peak ratios per operator.
    Stats(TraceArgs),
    /// Generate a synthetic trace and its ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Trace file (CSV, or JSONL by .jsonl/.ndjson extension). Repeatable.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Only analyze this operator.
    #[arg(long)]
    pub operator: Option<String>,
    /// Traffic category: facebook, youtube, maps, other or total.
    #[arg(long, default_value = "total", value_parser = parse_app)]
    pub app: AppFilter,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    /// Comma-separated thresholds in meters, strictly increasing.
    /// Defaults to 0 plus 40 log-spaced values from 50 m to 50 km.
    #[arg(long = "dmax-grid")]
    pub dmax_grid: Option<String>,
    /// Also sweep uniformly randomized loads (sweep_<op>_random.csv).
    #[arg(long)]
    pub randomize: bool,
    /// Seed of the randomized baseline.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw each station's random loads up to its own peak instead of the
    /// largest bin over all stations.
    #[arg(long = "per-cell-max")]
    pub per_cell_max: bool,
    /// Also write the clusters at this threshold (partition_<op>.json and
    /// partition_<op>.geojson).
    #[arg(long = "partition-at")]
    pub partition_at: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// key = value generator config; `seed` is required.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

fn parse_app(s: &str) -> Result<AppFilter, String> {
    AppFilter::from_name(s).ok_or_else(|| {
        format!("unknown app `{s}`; expected facebook, youtube, maps, other or total")
    })
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("edgeplace: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

struct Trace {
    frame: TraceFrame,
    operators: Vec<(String, Vec<TraceRecord>)>,
    skipped_lines: usize,
    records: usize,
}

/// Reads every input, reporting skipped lines on stderr. The frame covers
/// the whole input so results do not depend on `--operator`.
fn load_trace(args: &TraceArgs) -> Result<Trace, CliError> {
    let mut records = Vec::new();
    let mut skipped_lines = 0;
    for path in &args.inputs {
        let file = File::open(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        let parsed = parse_records(file, TraceFormat::from_path(path))
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        for d in &parsed.diagnostics {
            eprintln!("{}:{}: skipped: {}", path.display(), d.line, d.message);
        }
        skipped_lines += parsed.diagnostics.len();
        records.extend(parsed.records);
    }
    let frame = TraceFrame::from_records(&records)
        .ok_or_else(|| CliError::Invalid("no records".to_string()))?;
    let total = records.len();
    let mut operators: Vec<(String, Vec<TraceRecord>)> =
        partition_by_operator(records).into_iter().collect();
    if let Some(op) = &args.operator {
        operators.retain(|(name, _)| name == op);
        if operators.is_empty() {
            return Err(CliError::Invalid(format!("no records for operator `{op}`")));
        }
    }
    Ok(Trace {
        frame,
        operators,
        skipped_lines,
        records: total,
    })
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", dir.display())))
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    write_atomic(&path, bytes).map_err(|e| internal(format!("writing {}: {e}", path.display())))
}

/// Stations of every selected operator, computed in parallel.
fn stations_per_operator(trace: &Trace) -> Result<Vec<Vec<Station>>, CliError> {
    trace
        .operators
        .par_iter()
        .map(|(_, recs)| reconstruct_stations(recs, &trace.frame).map_err(internal))
        .collect()
}

fn app_suffix(app: AppFilter) -> String {
    match app {
        AppFilter::Total => String::new(),
        other => format!("_{}", other.name()),
    }
}

fn loads_of(stations: &[Station], app: AppFilter) -> Vec<LoadSeries> {
    stations.iter().map(|s| s.loads.get(app).clone()).collect()
}

fn cmd_reconstruct(args: &TraceArgs) -> Result<(), CliError> {
    let trace = load_trace(args)?;
    prepare_out(&args.out)?;
    let all = stations_per_operator(&trace)?;

    let mut summary_ops = Vec::new();
    for ((op, recs), stations) in trace.operators.iter().zip(&all) {
        let geo = stations_geojson(stations, &trace.frame.projection, args.app);
        write(
            &args.out,
            &format!("stations_{}.geojson", file_stem(op)),
            &json_bytes(&geo),
        )?;

        let lat = recs.iter().map(|r| r.lat);
        let lon = recs.iter().map(|r| r.lon);
        summary_ops.push(json!({
            "operator": op,
            "records": recs.len(),
            "unique_cells": stations.len(),
            "total_bytes": recs.iter().map(|r| r.total_bytes()).sum::<u64>(),
            "coverage_box": {
                "min_lat": lat.clone().fold(f64::INFINITY, f64::min),
                "max_lat": lat.fold(f64::NEG_INFINITY, f64::max),
                "min_lon": lon.clone().fold(f64::INFINITY, f64::min),
                "max_lon": lon.fold(f64::NEG_INFINITY, f64::max),
            },
        }));
    }
    let summary = json!({
        "records": trace.records,
        "skipped_lines": trace.skipped_lines,
        "first_hour": trace.frame.span.origin,
        "hours": trace.frame.span.len,
        "operators": summary_ops,
    });
    write(&args.out, "summary.json", &json_bytes(&summary))
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let grid: Vec<f64> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| CliError::Invalid(format!("bad d_max value `{}`", s.trim())))
        })
        .collect::<Result<_, _>>()?;
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(CliError::Invalid(
            "d_max grid must be strictly increasing".into(),
        ));
    }
    Ok(grid)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let grid = match &args.dmax_grid {
        Some(text) => parse_grid(text)?,
        None => default_dmax_grid(),
    };
    if let Some(d) = args.partition_at {
        if !(d.is_finite() && d >= 0.0) {
            return Err(CliError::Invalid(format!("bad --partition-at value {d}")));
        }
    }
    let ta = &args.trace;
    let trace = load_trace(ta)?;
    prepare_out(&ta.out)?;
    let all = stations_per_operator(&trace)?;
    let scope = if args.per_cell_max {
        MaxScope::PerStation
    } else {
        MaxScope::Global
    };

    struct Output {
        rows: String,
        random: Option<String>,
        partition: Option<(Vec<u8>, Vec<u8>)>,
    }
    let outputs: Vec<Output> = all
        .par_iter()
        .zip(&trace.operators)
        .map(|(stations, (op, _))| {
            let points: Vec<_> = stations.iter().map(|s| s.position).collect();
            let tree = build_merge_tree(&points);
            let loads = loads_of(stations, ta.app);
            let rows = sweep(&tree, &loads, &grid, ta.app).map_err(internal)?;
            let random = if args.randomize {
                let rnd = randomize_loads(&loads, args.seed, scope).map_err(|e| {
                    CliError::Invalid(format!("operator `{op}`: cannot randomize: {e}"))
                })?;
                Some(sweep_csv(
                    &sweep(&tree, &rnd, &grid, ta.app).map_err(internal)?,
                ))
            } else {
                None
            };
            let partition = args.partition_at.map(|d| {
                let part = tree.cut(d);
                (
                    json_bytes(&partition_json(&part, stations)),
                    json_bytes(&partition_geojson(&part, stations, &trace.frame.projection)),
                )
            });
            Ok(Output {
                rows: sweep_csv(&rows),
                random,
                partition,
            })
        })
        .collect::<Result<_, CliError>>()?;

    let suffix = app_suffix(ta.app);
    for ((op, _), out) in trace.operators.iter().zip(outputs) {
        let stem = format!("{}{}", file_stem(op), suffix);
        write(&ta.out, &format!("sweep_{stem}.csv"), out.rows.as_bytes())?;
        if let Some(random) = out.random {
            write(
                &ta.out,
                &format!("sweep_{stem}_random.csv"),
                random.as_bytes(),
            )?;
        }
        if let Some((members, hulls)) = out.partition {
            write(
                &ta.out,
                &format!("partition_{}.json", file_stem(op)),
                &members,
            )?;
            write(
                &ta.out,
                &format!("partition_{}.geojson", file_stem(op)),
                &hulls,
            )?;
        }
    }
    Ok(())
}

fn cmd_stats(args: &TraceArgs) -> Result<(), CliError> {
    let trace = load_trace(args)?;
    prepare_out(&args.out)?;
    let all = stations_per_operator(&trace)?;
    let suffix = app_suffix(args.app);

    for ((op, _), stations) in trace.operators.iter().zip(&all) {
        let stem = format!("{}{}", file_stem(op), suffix);
        let peaks = DistributionSummary::from_samples(
            stations
                .iter()
                .map(|s| s.loads.get(args.app).peak())
                .collect(),
        );
        let ratios = neighbor_peak_ratios(stations, args.app);
        write(
            &args.out,
            &format!("peak_cdf_{stem}.csv"),
            cdf_csv(&peaks).as_bytes(),
        )?;
        write(
            &args.out,
            &format!("neighbor_ratios_{stem}.csv"),
            cdf_csv(&ratios.pairwise).as_bytes(),
        )?;
        let stats = json!({
            "operator": op,
            "app": args.app.name(),
            "stations": stations.len(),
            "zero_peak_stations": peaks.values.iter().filter(|&&p| p == 0.0).count(),
            "peak_log10_span": peaks.log10_span(),
            "peak_median": peaks.quantile(0.5),
            "neighbor_pairs": ratios.pairwise.count(),
            "neighbor_ratio_median": ratios.pairwise.quantile(0.5),
            "stations_considered": ratios.stations_considered,
            "per_cell_disparity": ratios.per_cell_disparity,
        });
        write(
            &args.out,
            &format!("stats_{stem}.json"),
            &json_bytes(&stats),
        )?;
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", args.config.display())))?;
    let config = parse_synth_config(&text)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.config.display())))?;
    let trace =
        edgeplace_core::generate_trace(&config).map_err(|e| CliError::Invalid(e.to_string()))?;
    prepare_out(&args.out)?;

    let format = match args.format {
        OutputFormat::Csv => TraceFormat::Csv,
        OutputFormat::Jsonl => TraceFormat::Jsonl,
    };
    let mut buf = Vec::new();
    write_records(&mut buf, &trace.records, format).map_err(internal)?;
    write(&args.out, &format!("trace.{}", format.extension()), &buf)?;

    let truth: Vec<_> = trace
        .truth
        .iter()
        .map(|t| {
            json!({
                "operator": t.operator,
                "cell_id": t.cell_id,
                "lac": t.lac,
                "lat": t.lat,
                "lon": t.lon,
                "x_m": t.offset.x,
                "y_m": t.offset.y,
                "burst_scale": t.burst_scale,
                "busy_hour": t.busy_hour,
                "total_bytes": t.total_bytes,
            })
        })
        .collect();
    let doc = json!({
        "seed": config.seed,
        "n_stations": config.n_stations,
        "coverage_radius_m": config.coverage_radius_m,
        "peak_sigma": config.peak_sigma,
        "stations": truth,
    });
    write(&args.out, "ground_truth.json", &json_bytes(&doc))
}
