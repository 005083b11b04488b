//! Command-line harness: argument parsing, graph and family file loading,
//! and CSV persistence for the exact engine, the variational solver, and the
//! Monte Carlo simulator.
//!
//! Output conventions, shared by every table: CSV with a fixed header row,
//! `'.'` as the decimal separator, floats at 12 significant digits, one file
//! per table.  All computation downstream of a parsed configuration is
//! deterministic, so identical configurations (seed included) produce
//! byte-identical files.  The `ORRW_THREADS` environment variable caps the
//! worker-thread count of the process-wide pool.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::exact::{build_meta_chain, survival_curve};
use crate::graph::{DecreasingFamily, EdgeSubset, FiniteGraph, GraphError};
use crate::kernel::Measure;
use crate::rate::{self, sequence_label};
use crate::sim::{empirical_survival, fit_log_survival, EmpiricalSurvival, DEFAULT_MIN_SURVIVORS};
use crate::verify;

/// Desk-scale laboratory for once-reinforced random walks on finite graphs:
/// exact stopping-time tails, tail exponents, large-deviation rates, and
/// seeded Monte Carlo, all through one binary.
#[derive(Debug, Parser)]
#[command(name = "orrw", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo survival curve of the stopping time, with a tail-rate fit
    Simulate(SimulateArgs),
    /// Exact survival curve of the stopping time from the traversed-set chain
    Survival(SurvivalArgs),
    /// Tail exponent alpha_c and the subgraph attaining it
    Alpha(AlphaArgs),
    /// Large-deviation rate of one empirical vertex measure
    Rate(RateArgs),
    /// Tail exponent over a log-spaced grid of reinforcement factors
    SweepAlpha(SweepAlphaArgs),
    /// Rate values along a line segment between two vertex measures
    SweepRate(SweepRateArgs),
    /// Cross-validation battery on built-in graphs; nonzero exit on failure
    Verify,
}

/// Where the walk lives.
#[derive(Debug, Args)]
struct GraphOpts {
    /// Graph file: one edge per line as two whitespace-separated vertex
    /// labels; blank lines and lines starting with '#' are ignored
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,

    /// Label of the start vertex
    #[arg(long, value_name = "LABEL")]
    start: String,
}

/// Which stopping time to study.
#[derive(Debug, Args)]
struct FamilyOpts {
    /// Stopping family: "cover" for the edge cover time, or a file with one
    /// edge subset per line, edges written as label-label tokens
    #[arg(long, default_value = "cover", value_name = "SEL")]
    family: String,

    /// Close a family file downward (warning on stderr) instead of rejecting
    /// a file that is not closed under taking subsets
    #[arg(long)]
    close_family: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphOpts,
    #[command(flatten)]
    family: FamilyOpts,

    /// Reinforcement factor: the edge weight after first traversal
    #[arg(long, value_parser = parse_delta, allow_negative_numbers = true)]
    delta: f64,

    /// Number of independent walks
    #[arg(long, default_value_t = 10_000)]
    samples: u64,

    /// Largest step count simulated; walks still alive there are truncated
    #[arg(long, default_value_t = 100)]
    horizon: usize,

    /// Restrict the tail fit to steps lo..=hi (default: the whole curve)
    #[arg(long, value_parser = parse_window, value_name = "LO:HI")]
    window: Option<(usize, usize)>,

    /// RNG seed; sample i draws from the independent stream (seed, i)
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write the CSV table here instead of standard output
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SurvivalArgs {
    #[command(flatten)]
    graph: GraphOpts,
    #[command(flatten)]
    family: FamilyOpts,

    /// Reinforcement factor: the edge weight after first traversal
    #[arg(long, value_parser = parse_delta, allow_negative_numbers = true)]
    delta: f64,

    /// Largest step count in the table
    #[arg(long, default_value_t = 200)]
    horizon: usize,

    /// Also report the least-squares log-slope over steps lo..=hi
    #[arg(long, value_parser = parse_window, value_name = "LO:HI")]
    window: Option<(usize, usize)>,

    /// Write the CSV table here instead of standard output
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AlphaArgs {
    #[command(flatten)]
    graph: GraphOpts,
    #[command(flatten)]
    family: FamilyOpts,

    /// Reinforcement factor: the edge weight after first traversal
    #[arg(long, value_parser = parse_delta, allow_negative_numbers = true)]
    delta: f64,
}

#[derive(Debug, Args)]
struct RateArgs {
    #[command(flatten)]
    graph: GraphOpts,

    /// Reinforcement factor: the edge weight after first traversal
    #[arg(long, value_parser = parse_delta, allow_negative_numbers = true)]
    delta: f64,

    /// Vertex measure as comma-separated label=weight pairs; omitted
    /// vertices get weight zero, and the weights must sum to one
    #[arg(long, value_name = "L=W,...")]
    nu: String,
}

#[derive(Debug, Args)]
struct SweepAlphaArgs {
    #[command(flatten)]
    graph: GraphOpts,
    #[command(flatten)]
    family: FamilyOpts,

    /// Log-spaced grid lo:hi:n of reinforcement factors (n >= 2 points)
    #[arg(long, value_parser = parse_delta_grid, value_name = "LO:HI:N")]
    delta_grid: DeltaGrid,

    /// Write the CSV table here instead of standard output
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepRateArgs {
    #[command(flatten)]
    graph: GraphOpts,

    /// Reinforcement factor: the edge weight after first traversal
    #[arg(long, value_parser = parse_delta, allow_negative_numbers = true)]
    delta: f64,

    /// Measure at parameter 0, as comma-separated label=weight pairs
    #[arg(long, value_name = "L=W,...")]
    nu_from: String,

    /// Measure at parameter 1, as comma-separated label=weight pairs
    #[arg(long, value_name = "L=W,...")]
    nu_to: String,

    /// Number of evenly spaced points on the segment (>= 2)
    #[arg(long, default_value_t = 21)]
    grid_points: usize,

    /// Write the CSV table here instead of standard output
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// A log-spaced grid specification `lo:hi:n`.
#[derive(Clone, Copy, Debug)]
struct DeltaGrid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl DeltaGrid {
    /// The grid points: geometrically spaced, endpoints exact.
    fn values(self) -> Vec<f64> {
        let (llo, lhi) = (self.lo.ln(), self.hi.ln());
        (0..self.n)
            .map(|i| match i {
                0 => self.lo,
                i if i == self.n - 1 => self.hi,
                i => (llo + (lhi - llo) * i as f64 / (self.n - 1) as f64).exp(),
            })
            .collect()
    }
}

fn parse_delta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("reinforcement factor must be a positive finite number, got {s}"))
    }
}

fn parse_delta_grid(s: &str) -> Result<DeltaGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:n, got {s}"));
    }
    let lo = parse_delta(parts[0])?;
    let hi = parse_delta(parts[1])?;
    let n: usize = parts[2].parse().map_err(|_| format!("not a point count: {}", parts[2]))?;
    if hi <= lo {
        return Err(format!("grid upper end must exceed the lower end, got {s}"));
    }
    if n < 2 {
        return Err(format!("grid needs at least two points, got {n}"));
    }
    Ok(DeltaGrid { lo, hi, n })
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let Some((lo, hi)) = s.split_once(':') else {
        return Err(format!("expected lo:hi, got {s}"));
    };
    let lo: usize = lo.parse().map_err(|_| format!("not a step count: {lo}"))?;
    let hi: usize = hi.parse().map_err(|_| format!("not a step count: {hi}"))?;
    if lo >= 1 && lo < hi {
        Ok((lo, hi))
    } else {
        Err(format!("window must satisfy 1 <= lo < hi, got {s}"))
    }
}

/// Binary entry point: honour `ORRW_THREADS`, parse `std::env::args`, run,
/// and turn errors into a message on stderr plus a nonzero exit.
pub fn main() -> ExitCode {
    init_thread_pool();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

/// Cap the process-wide worker pool at `ORRW_THREADS` threads if the
/// variable is set to a positive integer.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("ORRW_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring ORRW_THREADS={v}: expected a positive integer"),
        }
    }
}

/// Run one parsed command to completion.
pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Survival(a) => cmd_survival(a)?,
        Command::Alpha(a) => cmd_alpha(a)?,
        Command::Rate(a) => cmd_rate(a)?,
        Command::SweepAlpha(a) => cmd_sweep_alpha(a)?,
        Command::SweepRate(a) => cmd_sweep_rate(a)?,
        Command::Verify => return cmd_verify(),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let g = load_graph(&a.graph.graph, &a.graph.start)?;
    let family = load_family(&g, &a.family.family, a.family.close_family)?;
    if a.horizon == 0 {
        bail!("horizon must be at least 1");
    }
    let grid: Vec<usize> = (1..=a.horizon).collect();
    let curve = empirical_survival(&g, g.start(), a.delta, &family, &grid, a.samples, a.seed)?;
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                p.survivors.to_string(),
                p.samples.to_string(),
                fmt_sig(p.p_hat),
                fmt_sig(p.stderr),
            ]
        })
        .collect();
    write_table(a.out.as_deref(), &["n", "survivors", "samples", "p_hat", "stderr"], &rows)?;

    // An explicit --window is fitted as given (zero-survivor points must
    // still drop, having no log-survival); only the default window applies
    // the survivor floor, so the data never places the cut-off itself.
    let (fit_curve, min_survivors) = match a.window {
        Some((lo, hi)) => {
            let points: Vec<_> =
                curve.points.iter().filter(|p| p.n >= lo && p.n <= hi).cloned().collect();
            let dead = points.iter().filter(|p| p.survivors == 0).count();
            if dead > 0 {
                eprintln!(
                    "warning: {dead} grid point(s) in [{lo}, {hi}] had zero survivors \
                     and were dropped from the fit"
                );
            }
            (EmpiricalSurvival { points }, 1)
        }
        None => (curve, DEFAULT_MIN_SURVIVORS),
    };
    let mut note = note_stream(a.out.is_some());
    match fit_log_survival(&fit_curve, min_survivors) {
        Ok(fit) => writeln!(
            note,
            "fit: alpha_hat = {}, std_error = {}, window = [{}, {}], samples = {}",
            fmt_sig(-fit.slope),
            fmt_sig(fit.std_error),
            fit.window.0,
            fit.window.1,
            fit.samples,
        )?,
        Err(e) => writeln!(note, "fit: none ({e})")?,
    }
    Ok(())
}

fn cmd_survival(a: SurvivalArgs) -> Result<()> {
    let g = load_graph(&a.graph.graph, &a.graph.start)?;
    let family = load_family(&g, &a.family.family, a.family.close_family)?;
    let chain = build_meta_chain(&g, a.delta, &family)?;
    let curve = survival_curve(&chain, a.horizon)?;
    let rows: Vec<Vec<String>> = (0..curve.len())
        .map(|n| vec![n.to_string(), fmt_sig(curve.p(n)), fmt_sig(curve.log_p(n))])
        .collect();
    write_table(a.out.as_deref(), &["n", "survival", "log_survival"], &rows)?;
    if let Some((lo, hi)) = a.window {
        if hi >= curve.len() {
            bail!("window end {hi} exceeds the horizon {}", a.horizon);
        }
        let mut note = note_stream(a.out.is_some());
        writeln!(note, "tail slope over [{lo}, {hi}] = {}", fmt_sig(curve.tail_slope(lo, hi)))?;
    }
    Ok(())
}

fn cmd_alpha(a: AlphaArgs) -> Result<()> {
    let g = load_graph(&a.graph.graph, &a.graph.start)?;
    let family = load_family(&g, &a.family.family, a.family.close_family)?;
    let (alpha, argmin) = rate::alpha_c_with_argmin(&g, a.delta, &family)?;
    println!("alpha_c = {alpha:.6}");
    println!("attained by {}", format_edge_subset(&g, argmin));
    Ok(())
}

fn cmd_rate(a: RateArgs) -> Result<()> {
    let g = load_graph(&a.graph.graph, &a.graph.start)?;
    let nu = parse_measure(&g, &a.nu)?;
    let rv = rate::rate_i(&g, a.delta, &nu)?;
    match rv.value.finite() {
        Some(v) => {
            println!("I_delta = {}", fmt_sig(v));
            if let Some(d) = &rv.attaining {
                println!("attaining sequence = {}", sequence_label(&d.sequence));
            }
        }
        None => println!("I_delta = inf (no stationary kernel has this vertex marginal)"),
    }
    Ok(())
}

fn cmd_sweep_alpha(a: SweepAlphaArgs) -> Result<()> {
    let g = load_graph(&a.graph.graph, &a.graph.start)?;
    let family = load_family(&g, &a.family.family, a.family.close_family)?;
    let rows = rate::sweep_alpha(&g, &family, &a.delta_grid.values())?;
    let cells: Vec<Vec<String>> =
        rows.iter().map(|r| vec![fmt_sig(r.delta), fmt_sig(r.alpha)]).collect();
    write_table(a.out.as_deref(), &["delta", "alpha_c"], &cells)
}

fn cmd_sweep_rate(a: SweepRateArgs) -> Result<()> {
    let g = load_graph(&a.graph.graph, &a.graph.start)?;
    let from = parse_measure(&g, &a.nu_from)?;
    let to = parse_measure(&g, &a.nu_to)?;
    if a.grid_points < 2 {
        bail!("grid needs at least two points, got {}", a.grid_points);
    }
    let grid: Vec<(f64, Measure)> = (0..a.grid_points)
        .map(|i| {
            let t = i as f64 / (a.grid_points - 1) as f64;
            let w: Vec<f64> = (0..g.n_vertices())
                .map(|v| (1.0 - t) * from.get(v) + t * to.get(v))
                .collect();
            let nu = Measure::probability(w).expect("convex combination of probability vectors");
            (t, nu)
        })
        .collect();
    let rows = rate::sweep_rate(&g, a.delta, &grid)?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_sig(r.param),
                r.value.finite().map_or_else(|| "inf".to_string(), fmt_sig),
                r.attaining.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write_table(a.out.as_deref(), &["nu_param", "I_delta", "attaining_sequence"], &cells)
}

fn cmd_verify() -> Result<ExitCode> {
    let results = verify::run_battery();
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} checks passed", results.len());
    Ok(if verify::all_passed(&results) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

/// Parse a graph file: one edge per line as two whitespace-separated vertex
/// labels; blank lines and lines starting with '#' are ignored.
fn load_graph(path: &Path, start: &str) -> Result<FiniteGraph> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading graph file {}", path.display()))?;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(u), Some(v), None) = (it.next(), it.next(), it.next()) else {
            bail!("{}:{}: expected two vertex labels, got {line:?}", path.display(), idx + 1);
        };
        pairs.push((u.to_string(), v.to_string()));
    }
    FiniteGraph::build(&pairs, start)
        .with_context(|| format!("building graph from {}", path.display()))
}

/// Resolve a family selector: "cover", or a file with one edge subset per
/// line, edges written as label-label tokens ('#' comments allowed).  With
/// `close` the file's subsets are taken as seeds and closed downward.
fn load_family(g: &FiniteGraph, selector: &str, close: bool) -> Result<DecreasingFamily> {
    if selector == "cover" {
        return Ok(g.cover_family());
    }
    let path = Path::new(selector);
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading family file {}", path.display()))?;
    let mut members = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut sub = EdgeSubset(0);
        for tok in line.split_whitespace() {
            let Some((u, v)) = tok.split_once('-') else {
                bail!(
                    "{}:{}: edge token must be label-label, got {tok:?}",
                    path.display(),
                    idx + 1
                );
            };
            let e = edge_by_labels(g, u, v).ok_or_else(|| {
                anyhow!("{}:{}: the graph has no edge {u}-{v}", path.display(), idx + 1)
            })?;
            sub = sub.with(e);
        }
        members.push(sub);
    }
    if close {
        let mut seeds = members;
        seeds.sort_unstable();
        seeds.dedup();
        let family = DecreasingFamily::closure(&seeds, g)
            .with_context(|| format!("closing family file {}", path.display()))?;
        let added = family.members().len() - seeds.len();
        if added > 0 {
            eprintln!(
                "warning: family file {} was not closed downward; added {added} subsets",
                path.display()
            );
        }
        Ok(family)
    } else {
        match DecreasingFamily::new(members, g) {
            Err(e @ GraphError::NotDecreasing { .. }) => Err(anyhow!(e).context(format!(
                "family file {} is not closed under taking subsets (pass --close-family to close it)",
                path.display()
            ))),
            other => {
                other.with_context(|| format!("validating family file {}", path.display()))
            }
        }
    }
}

/// Parse a vertex measure written as comma-separated `label=weight` pairs.
/// Omitted vertices get weight zero; the result must be a probability
/// vector.
fn parse_measure(g: &FiniteGraph, spec: &str) -> Result<Measure> {
    let mut w = vec![0.0; g.n_vertices()];
    let mut seen = vec![false; g.n_vertices()];
    for item in spec.split(',') {
        let item = item.trim();
        let Some((label, weight)) = item.split_once('=') else {
            bail!("measure entries are label=weight, got {item:?}");
        };
        let label = label.trim();
        let v = vertex_by_label(g, label)
            .ok_or_else(|| anyhow!("unknown vertex {label:?} in measure"))?;
        if seen[v] {
            bail!("vertex {label:?} listed twice in measure");
        }
        seen[v] = true;
        w[v] = weight
            .trim()
            .parse::<f64>()
            .with_context(|| format!("weight for vertex {label:?}"))?;
    }
    Measure::probability(w).context("measure must be a probability vector")
}

fn vertex_by_label(g: &FiniteGraph, label: &str) -> Option<usize> {
    (0..g.n_vertices()).find(|&v| g.label(v) == label)
}

fn edge_by_labels(g: &FiniteGraph, u: &str, v: &str) -> Option<usize> {
    let ui = vertex_by_label(g, u)?;
    let vi = vertex_by_label(g, v)?;
    g.edge_between(ui, vi)
}

/// Render an edge subset with vertex labels, e.g. `{0-1, 0-2}`.
fn format_edge_subset(g: &FiniteGraph, sub: EdgeSubset) -> String {
    let parts: Vec<String> = sub
        .iter()
        .map(|e| {
            let (u, v) = g.endpoints(e);
            format!("{}-{}", g.label(u), g.label(v))
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// Format a float with 12 significant digits and a `'.'` decimal separator.
fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// Write one CSV table (header plus rows) to `out`, or to standard output
/// when no path is given.
fn write_table(out: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    match out {
        Some(path) => {
            fs::write(path, &buf).with_context(|| format!("writing {}", path.display()))
        }
        None => io::stdout().write_all(&buf).context("writing standard output"),
    }
}

/// Summary lines accompany a table: on stdout when the table went to a file,
/// on stderr when the table itself occupies stdout.
fn note_stream(table_in_file: bool) -> Box<dyn Write> {
    if table_in_file {
        Box::new(io::stdout())
    } else {
        Box::new(io::stderr())
    }
}
