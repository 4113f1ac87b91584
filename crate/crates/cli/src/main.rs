//! `oddcap`: verify certificates, solve and search orbit graphs, print the
//! bounds table.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 an
//! instance exceeded a size guard.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{Duration, Instant};

use capacity_core::bounds::{assemble_table, capacity_line, render_table, KnownValues};
use capacity_core::certify::{certificate_for, parse_certificate, verify_certificate, Verdict};
use capacity_core::exact::Budget;
use capacity_core::orbitgraph::OrbitGraph;
use capacity_core::search::{run_search, solve_exact, SearchConfig};
use capacity_core::symmetry::{enumerate_generators, GeneratorMode, Group, GroupElement, ORBIT_LIMIT};
use capacity_core::torus::CycleParams;
use capacity_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use manifest::{Artifacts, Manifest};

/// Like `println!`, but a closed pipe (e.g. `| head`) ends the process quietly.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

macro_rules! say_raw {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if write!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

#[derive(Parser)]
#[command(name = "oddcap", version, about = "Independent sets in strong powers of odd cycles")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Expand and check certificate files.
    Verify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Solve an orbit graph exactly.
    Exact(ExactArgs),
    /// Stochastic search on one orbit graph or a sweep of groups.
    Search(SearchArgs),
    /// Table of lower and upper bounds on G(d, p) and the capacity lines.
    Bounds {
        /// Odd values of p: a single value, a list or a range such as 5..15.
        #[arg(long, default_value = "5..15")]
        p: String,
        #[arg(long, default_value = "1..5")]
        d: String,
    },
    /// Orbit counts and conflict graph size.
    Orbits(Instance),
}

#[derive(Args, Clone)]
struct Instance {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    d: usize,
    /// Translation offsets b1,...,bd of a cyclic group; trivial group if absent.
    #[arg(long, value_parser = parse_offsets)]
    generator: Option<Offsets>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    instance: Instance,
    /// Wall-clock budget in seconds for the exact solve.
    #[arg(long)]
    time: Option<f64>,
    /// Node budget for the exact solve.
    #[arg(long)]
    nodes: Option<u64>,
    /// Seconds of stochastic search used to find a starting solution.
    #[arg(long, default_value_t = 20.0)]
    warm: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Certificate output path (only with a prescribed generator).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    d: usize,
    #[arg(long, value_parser = parse_offsets, conflicts_with = "sweep")]
    generator: Option<Offsets>,
    /// Search every generator class of the given kind instead of one group.
    #[arg(long, value_enum)]
    sweep: Option<SweepKind>,
    /// key=value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds for the search (per group when sweeping).
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    restarts: Option<u32>,
    /// Stop once this weight is reached.
    #[arg(long)]
    target: Option<u64>,
    /// Certificate output path for the best solution.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Line-delimited statistics records.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Run manifest path; defaults to the certificate path plus `.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Translations,
    Full,
}

/// Failures mapped onto exit codes.
enum Failure {
    Verification(String),
    Usage(String),
    Guard(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InstanceTooLarge { .. } => Failure::Guard(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { paths } => verify(&paths, cli.format),
        Command::Exact(args) => exact(&args, cli.format),
        Command::Search(args) => search(&args, cli.format),
        Command::Bounds { p, d } => bounds(&p, &d, cli.format),
        Command::Orbits(instance) => orbits(&instance, cli.format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            if !msg.is_empty() {
                eprintln!("{msg}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Guard(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// Translation offsets as given on the command line, e.g. `1,5,8,9`.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
struct Offsets(Vec<u64>);

fn parse_offsets(s: &str) -> Result<Offsets, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("{t:?} is not a non-negative integer")))
        .collect::<Result<_, _>>()
        .map(Offsets)
}

/// "7", "5,7,9" or "5..15"; ranges keep every value, callers filter.
fn parse_values(s: &str) -> Result<Vec<u32>, Failure> {
    let bad = || Failure::Usage(format!("bad value list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (u32::from_str(a.trim()).map_err(|_| bad())?, u32::from_str(b.trim()).map_err(|_| bad())?);
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| u32::from_str(t.trim()).map_err(|_| bad())).collect()
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    use std::hash::{BuildHasher, Hasher};
    seed.unwrap_or_else(|| {
        let mut h = std::collections::hash_map::RandomState::new().build_hasher();
        h.write_u128(std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_nanos()));
        h.finish()
    })
}

fn seconds(s: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(s).map_err(|_| Failure::Usage(format!("bad duration {s}")))
}

fn group_for(params: &CycleParams, generator: Option<&[u64]>) -> Result<Group, Failure> {
    Ok(match generator {
        None => Group::trivial(params),
        Some(b) => Group::cyclic(params, GroupElement::translation(params, b)?)?,
    })
}

fn build_graph(instance: &Instance) -> Result<OrbitGraph, Failure> {
    let params = CycleParams::new(instance.p, instance.d)?;
    let group = group_for(&params, instance.generator.as_ref().map(|o| &o.0[..]))?;
    Ok(OrbitGraph::build(&group, ORBIT_LIMIT)?)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn print_json(value: &impl Serialize) {
    say!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn verify(paths: &[PathBuf], format: Format) -> Result<(), Failure> {
    let mut reports = Vec::new();
    let mut failed = false;
    for path in paths {
        let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
        match parse_certificate(&text) {
            Ok(cert) => {
                let report = verify_certificate(&cert)?;
                failed |= report.verdict == Verdict::Fail;
                if format == Format::Text {
                    say_raw!("{}: {report}", path.display());
                }
                reports.push(json!({ "path": path, "report": report }));
            }
            Err(e) => {
                failed = true;
                if format == Format::Text {
                    say!("{}: FAIL: {e}", path.display());
                }
                reports.push(json!({ "path": path, "error": e.to_string() }));
            }
        }
    }
    if format == Format::Structured {
        print_json(&reports);
    }
    if failed {
        Err(Failure::Verification(String::new()))
    } else {
        Ok(())
    }
}

fn exact(args: &ExactArgs, format: Format) -> Result<(), Failure> {
    let started = Instant::now();
    let graph = build_graph(&args.instance)?;
    let seed = seed_or_fresh(args.seed);
    let warm = SearchConfig {
        seed,
        time_limit: Some(seconds(args.warm)?),
        ..SearchConfig::default()
    };
    let budget = Budget {
        max_nodes: args.nodes,
        time_limit: args.time.map(seconds).transpose()?,
    };
    let outcome = solve_exact(&graph, &budget, &warm)?;
    let elapsed = started.elapsed();
    let cert_path = match (&args.out, &args.instance.generator) {
        (Some(path), _) => Some(path.clone()),
        (None, Some(_)) => Some(PathBuf::from(format!("g{}_{}.cert", args.instance.d, args.instance.p))),
        (None, None) => None,
    };
    if let Some(path) = &cert_path {
        let cert = certificate_for(&graph, &outcome.solution)?;
        write_file(path, &cert.to_string())?;
    }
    match format {
        Format::Text => {
            say!("seed {seed}");
            // Only the trivial group pins down G(d, p) itself.
            let quantity = if args.instance.generator.is_some() {
                format!("largest invariant code in C_{}^{}", args.instance.p, args.instance.d)
            } else {
                format!("G({},{})", args.instance.d, args.instance.p)
            };
            say!(
                "{quantity} {} {}  ({} orbit vertices, {} nodes, {:.2} s)",
                if outcome.optimal { "=" } else { ">=" },
                outcome.solution.weight(),
                graph.n(),
                outcome.nodes,
                elapsed.as_secs_f64()
            );
            say!("optimal: {}", if outcome.optimal { "yes" } else { "no (budget exhausted)" });
            if let Some(path) = &cert_path {
                say!("certificate: {}", path.display());
            }
        }
        Format::Structured => print_json(&json!({
            "p": args.instance.p,
            "d": args.instance.d,
            "generator": args.instance.generator,
            "seed": seed,
            "weight": outcome.solution.weight(),
            "optimal": outcome.optimal,
            "nodes": outcome.nodes,
            "elapsed_ms": elapsed.as_millis() as u64,
            "certificate": cert_path,
        })),
    }
    Ok(())
}

fn search_config(args: &SearchArgs, seed: u64) -> Result<SearchConfig, Failure> {
    let mut config = SearchConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
        config
            .apply_text(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    config.seed = seed;
    if let Some(t) = args.time {
        config.time_limit = Some(seconds(t)?);
    }
    if let Some(r) = args.restarts {
        config.restarts = r;
    }
    if let Some(t) = args.target {
        config.target_weight = Some(t);
    }
    if args.stats.is_some() && config.log_every == 0 {
        config.log_every = 1;
    }
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct SweepRow {
    generator: String,
    group_order: usize,
    vertices: usize,
    best: u64,
}

fn search(args: &SearchArgs, format: Format) -> Result<(), Failure> {
    let started = Instant::now();
    let seed = seed_or_fresh(args.seed);
    let config = search_config(args, seed)?;
    let params = CycleParams::new(args.p, args.d)?;
    if format == Format::Text {
        say!("seed {seed}");
    }

    let (graph, report, sweep) = match args.sweep {
        None => {
            let graph = OrbitGraph::build(&group_for(&params, args.generator.as_ref().map(|o| &o.0[..]))?, ORBIT_LIMIT)?;
            let report = run_search(&graph, &config, args.jobs)?;
            (graph, report, None)
        }
        Some(kind) => {
            let mode = match kind {
                SweepKind::Translations => GeneratorMode::Translations,
                SweepKind::Full => GeneratorMode::Full,
            };
            let generators = enumerate_generators(&params, mode)?;
            let results = sweep_groups(&params, &generators, &config, args.jobs)?;
            let mut rows = Vec::new();
            let mut best: Option<(OrbitGraph, capacity_core::search::SearchReport)> = None;
            for (g, (graph, report)) in generators.iter().zip(results) {
                rows.push(SweepRow {
                    generator: g.to_string(),
                    group_order: graph.group().order(),
                    vertices: graph.n(),
                    best: report.best.weight(),
                });
                if best.as_ref().is_none_or(|(_, b)| report.best.weight() > b.best.weight()) {
                    best = Some((graph, report));
                }
            }
            let Some((graph, report)) = best else {
                return Err(Failure::Usage("no generators to sweep".into()));
            };
            (graph, report, Some(rows))
        }
    };

    let mut artifacts = Artifacts::default();
    if let Some(path) = &args.out {
        let cert = certificate_for(&graph, &report.best)?;
        write_file(path, &cert.to_string())?;
        artifacts.certificate = Some(path.clone());
    }
    if let Some(path) = &args.stats {
        let mut lines = String::new();
        for r in report.restarts.iter().flat_map(|r| &r.records) {
            lines.push_str(&serde_json::to_string(r).expect("records serialize"));
            lines.push('\n');
        }
        write_file(path, &lines)?;
        artifacts.stats = Some(path.clone());
    }
    let manifest_path = args
        .manifest
        .clone()
        .or_else(|| args.out.as_ref().map(|p| PathBuf::from(format!("{}.manifest.json", p.display()))));
    let elapsed = started.elapsed();
    if let Some(path) = &manifest_path {
        let manifest = Manifest {
            command: "search".into(),
            parameters: json!({
                "p": args.p,
                "d": args.d,
                "generator": args.generator,
                "sweep": args.sweep.map(|k| match k { SweepKind::Translations => "translations", SweepKind::Full => "full" }),
                "jobs": args.jobs,
                "config": config,
            }),
            seed,
            wall_time_ms: elapsed.as_millis() as u64,
            best_weight: report.best.weight(),
            artifacts,
        };
        write_file(path, &manifest.to_json())?;
    }

    match format {
        Format::Text => {
            if let Some(rows) = &sweep {
                say!("{:<40} {:>6} {:>8} {:>8}", "generator", "order", "orbits", "best");
                for r in rows {
                    say!("{:<40} {:>6} {:>8} {:>8}", r.generator, r.group_order, r.vertices, r.best);
                }
            }
            say!(
                "best weight {} on {} orbit vertices after {} iterations in {:.2} s",
                report.best.weight(),
                graph.n(),
                report.iterations(),
                elapsed.as_secs_f64()
            );
            say!("refill optimality rate {:.3}", report.refill_optimality_rate());
            if let Some(path) = &args.out {
                say!("certificate: {}", path.display());
            }
        }
        Format::Structured => print_json(&json!({
            "seed": seed,
            "best_weight": report.best.weight(),
            "iterations": report.iterations(),
            "refill_optimality_rate": report.refill_optimality_rate(),
            "restarts": report.restarts,
            "sweep": sweep,
            "elapsed_ms": elapsed.as_millis() as u64,
        })),
    }
    Ok(())
}

/// One search per generator, fanned out over `jobs` threads; results come
/// back in generator order.
fn sweep_groups(
    params: &CycleParams,
    generators: &[GroupElement],
    config: &SearchConfig,
    jobs: usize,
) -> Result<Vec<(OrbitGraph, capacity_core::search::SearchReport)>, Failure> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    let next = AtomicUsize::new(0);
    let jobs = jobs.clamp(1, generators.len().max(1));
    let mut slots: Vec<Option<Result<_, Error>>> = (0..generators.len()).map(|_| None).collect();
    let done: Vec<(usize, Result<_, Error>)> = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..jobs)
            .map(|_| {
                scope.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        if k >= generators.len() {
                            break;
                        }
                        let run = Group::cyclic(params, generators[k].clone())
                            .and_then(|group| OrbitGraph::build(&group, ORBIT_LIMIT))
                            .and_then(|graph| {
                                if graph.n() == 0 {
                                    return Ok((graph, empty_report()));
                                }
                                run_search(&graph, config, 1).map(|r| (graph, r))
                            });
                        out.push((k, run));
                    }
                    out
                })
            })
            .collect();
        workers.into_iter().flat_map(|w| w.join().expect("sweep worker panicked")).collect()
    });
    for (k, r) in done {
        slots[k] = Some(r);
    }
    slots
        .into_iter()
        .map(|s| s.expect("every generator ran").map_err(Failure::from))
        .collect()
}

fn empty_report() -> capacity_core::search::SearchReport {
    capacity_core::search::SearchReport {
        best: capacity_core::exact::Solution::empty(),
        restarts: Vec::new(),
        elapsed_ms: 0,
    }
}

fn bounds(p: &str, d: &str, format: Format) -> Result<(), Failure> {
    let ps = parse_values(p)?;
    let ps: Vec<u32> = if p.contains("..") {
        ps.into_iter().filter(|p| p % 2 == 1 && *p >= 5).collect()
    } else {
        ps
    };
    let ds = parse_values(d)?;
    let cells = assemble_table(&KnownValues::published(), &ps, &ds)?;
    match format {
        Format::Text => say_raw!("{}", render_table(&cells, &ps, &ds)),
        Format::Structured => {
            let lines: Vec<_> = ps
                .iter()
                .filter_map(|&p| capacity_line(&cells, p))
                .map(|l| {
                    let (lower, strict) = l.lower_decimal(4);
                    json!({
                        "p": l.p,
                        "alpha": l.alpha,
                        "d": l.d,
                        "lower": lower.to_string(),
                        "lower_strict": strict,
                        "upper": l.upper_decimal(4).to_string(),
                    })
                })
                .collect();
            print_json(&json!({ "cells": cells, "capacity": lines }));
        }
    }
    Ok(())
}

fn orbits(instance: &Instance, format: Format) -> Result<(), Failure> {
    let graph = build_graph(instance)?;
    let diag = graph.diagnostics();
    match format {
        Format::Text => {
            say!("C_{}^{} under a group of order {}", instance.p, instance.d, graph.group().order());
            say!("codewords    {}", diag.codewords);
            say!("orbits       {}", diag.orbits);
            say!("admissible   {}", diag.admissible);
            say!("inadmissible {}", diag.inadmissible);
            say!("conflicts    {}", diag.edges);
            say!("total weight {}", diag.total_weight);
        }
        Format::Structured => print_json(&json!({
            "p": instance.p,
            "d": instance.d,
            "group_order": graph.group().order(),
            "diagnostics": diag,
        })),
    }
    Ok(())
}
