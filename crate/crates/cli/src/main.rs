use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dlcss::dataset::{generate_pool, read_geojson, write_geojson, DEFAULT_MIN_LENGTH_M};
use dlcss::dlcss::metric_sweep;
use dlcss::evaluation::{
    calibrate_from_pairs, cross_validate, emit_report, run_eval, summarize, ReportFormat,
};
use dlcss::geo::Coordinate;
use dlcss::matcher::score_pair;
use dlcss::meeting::{evaluate_meeting_points_par, load_meeting_points, MeetingSearch};
use dlcss::routing::{GridGraph, GridParams};
use dlcss::{filter_pool, Error, Result, Score, DEFAULT_THRESHOLD_M};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "dlcss",
    version,
    about = "Route similarity filtering for ride sharing"
)]
struct Cli {
    /// Worker threads for pair scoring; 0 uses one per CPU. Output does not
    /// depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic grid road network and a pool of shortest-path routes.
    Gen(GenArgs),
    /// Score vehicle routes against request routes and apply a threshold.
    Match(MatchArgs),
    /// Compare threshold decisions with detour-based ground truth.
    Eval(EvalArgs),
    /// Tabulate the score over a grid of overlap fractions and segment sums.
    Sweep(SweepArgs),
    /// Find a meeting point that makes a request compatible with a vehicle.
    Meeting(MeetingArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of routes.
    #[arg(long, default_value_t = 180, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Seed for edge removal and endpoint sampling.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Grid rows.
    #[arg(long, default_value_t = 20)]
    rows: usize,
    /// Grid columns.
    #[arg(long, default_value_t = 20)]
    cols: usize,
    /// Distance between neighbouring nodes in meters.
    #[arg(long, default_value_t = 250.0)]
    spacing_m: f64,
    /// Fraction of edges removed; the grid stays connected.
    #[arg(long, default_value_t = 0.1)]
    removal_fraction: f64,
    /// Latitude of the south-west corner.
    #[arg(long, default_value_t = 50.75, allow_negative_numbers = true)]
    origin_lat: f64,
    /// Longitude of the south-west corner.
    #[arg(long, default_value_t = 6.05, allow_negative_numbers = true)]
    origin_lon: f64,
    /// Shorter routes are resampled.
    #[arg(long, default_value_t = DEFAULT_MIN_LENGTH_M)]
    min_length_m: f64,
    /// Output GeoJSON pool.
    #[arg(long, default_value = "pool.geojson")]
    out: PathBuf,
    /// Output graph JSON.
    #[arg(long, default_value = "graph.json")]
    graph_out: PathBuf,
}

#[derive(Args)]
struct MatchArgs {
    /// GeoJSON pool of vehicle routes.
    #[arg(long)]
    input: PathBuf,
    /// GeoJSON pool of request routes [default: the vehicle pool].
    #[arg(long)]
    requests: Option<PathBuf>,
    /// Acceptance threshold in meters.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_M, allow_negative_numbers = true)]
    threshold: f64,
    /// JSON-lines output, one decision per line [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// GeoJSON route pool.
    #[arg(long)]
    input: PathBuf,
    /// Graph JSON written by `gen`.
    #[arg(long)]
    graph: PathBuf,
    /// Acceptance threshold in meters; also the fallback for `--calibrate`.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_M, allow_negative_numbers = true)]
    threshold: f64,
    /// Use the smallest threshold that accepts every compatible pair with a
    /// finite score.
    #[arg(long)]
    calibrate: bool,
    /// Also run k-fold cross-validation of the calibrated threshold.
    #[arg(long, requires = "cv_out")]
    cv_folds: Option<usize>,
    /// JSON output for the cross-validation folds.
    #[arg(long, requires = "cv_folds")]
    cv_out: Option<PathBuf>,
    /// Report format: json or csv.
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
    /// Report output [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-pair CSV of score, detour fraction and decision.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Include wall-clock stage timings in the report (makes output
    /// non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated overlap fractions in (0, 1] [default: 0.05, 0.10, ..., 1.00].
    #[arg(long, value_delimiter = ',')]
    fractions: Vec<f64>,
    /// Comma-separated segment sums in meters [default: 0, 1000, ..., 20000].
    #[arg(long, value_delimiter = ',')]
    sums: Vec<f64>,
    /// CSV output [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MeetingArgs {
    /// GeoJSON route pool.
    #[arg(long)]
    pool: PathBuf,
    /// Graph JSON used to route from each meeting point.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    vehicle_id: String,
    #[arg(long)]
    request_id: String,
    /// CSV of candidates with header id,lat,lon,label.
    #[arg(long)]
    meeting_points: PathBuf,
    /// Acceptance threshold in meters.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_M, allow_negative_numbers = true)]
    threshold: f64,
    /// JSON output [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Prefixes I/O errors with the file they concern.
fn at<T>(path: &Path, res: Result<T>) -> Result<T> {
    res.map_err(|e| match e {
        Error::Io(io) => Error::Io(io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    at(
        path,
        File::create(path).map(BufWriter::new).map_err(Error::from),
    )
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn gen(args: GenArgs) -> Result<()> {
    let params = GridParams {
        rows: args.rows,
        cols: args.cols,
        origin: Coordinate::new(args.origin_lat, args.origin_lon)?,
        spacing_m: args.spacing_m,
        removal_fraction: args.removal_fraction,
        seed: args.seed,
    };
    let g = GridGraph::generate(params)?;
    let pool = generate_pool(&g, args.n as usize, args.seed, args.min_length_m)?;
    at(&args.out, write_geojson(&pool, &args.out))?;
    at(&args.graph_out, g.write(&args.graph_out))
}

fn match_pools(args: MatchArgs) -> Result<()> {
    let vehicles = at(&args.input, read_geojson(&args.input))?;
    let requests = match &args.requests {
        Some(p) => at(p, read_geojson(p))?,
        None => vehicles.clone(),
    };
    let decisions = filter_pool(vehicles.routes(), requests.routes(), args.threshold)?;
    let mut out = open_output(args.out.as_deref())?;
    for d in &decisions {
        serde_json::to_writer(&mut out, d).map_err(io::Error::from)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let pool = at(&args.input, read_geojson(&args.input))?;
    let g = at(&args.graph, GridGraph::read(&args.graph))?;
    let mut run = run_eval(&pool, &g, args.threshold)?;
    if args.calibrate {
        let threshold = calibrate_from_pairs(&run.pairs).unwrap_or(args.threshold);
        let timings = run.report.runtime_ms;
        run.report = summarize(&run.pairs, threshold);
        run.report.runtime_ms = timings;
    }
    if !args.timings {
        run.report.runtime_ms = None;
    }
    let format: ReportFormat = args.format.parse()?;
    let mut out = open_output(args.out.as_deref())?;
    emit_report(&run, format, &mut out)?;
    out.flush()?;

    if let Some(path) = &args.plot_data {
        let mut w = create(path)?;
        emit_report(&run, ReportFormat::PlotData, &mut w)?;
        w.flush()?;
    }
    if let (Some(folds), Some(path)) = (args.cv_folds, &args.cv_out) {
        let reports = cross_validate(&pool, &g, folds, args.threshold)?;
        let mut w = create(path)?;
        write_json(&mut w, &reports)?;
        w.flush()?;
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let fractions = if args.fractions.is_empty() {
        (1..=20).map(|k| k as f64 / 20.0).collect()
    } else {
        args.fractions
    };
    let sums = if args.sums.is_empty() {
        (0..=20).map(|k| k as f64 * 1_000.0).collect()
    } else {
        args.sums
    };
    let rows = metric_sweep(&fractions, &sums)?;
    let mut out = open_output(args.out.as_deref())?;
    writeln!(out, "overlap_fraction,segment_sum,sm")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.overlap_fraction, r.segment_sum_m, r.sm)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct MeetingReport<'a> {
    vehicle_id: &'a str,
    request_id: &'a str,
    threshold_m: f64,
    direct_sm: Score,
    #[serde(flatten)]
    search: MeetingSearch,
}

fn meeting(args: MeetingArgs) -> Result<()> {
    let pool = at(&args.pool, read_geojson(&args.pool))?;
    let g = at(&args.graph, GridGraph::read(&args.graph))?;
    let find = |id: &str| {
        pool.get(id)
            .ok_or_else(|| Error::InvalidParameter(format!("route `{id}` is not in the pool")))
    };
    let vehicle = find(&args.vehicle_id)?;
    let request = find(&args.request_id)?;
    let candidates = at(
        &args.meeting_points,
        load_meeting_points(&args.meeting_points),
    )?;
    let search = evaluate_meeting_points_par(vehicle, request, &candidates, &g, args.threshold)?;
    let report = MeetingReport {
        vehicle_id: vehicle.id(),
        request_id: request.id(),
        threshold_m: args.threshold,
        direct_sm: score_pair(vehicle, request)?,
        search,
    };
    let mut out = open_output(args.out.as_deref())?;
    write_json(&mut out, &report)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Match(a) => match_pools(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Meeting(a) => meeting(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
