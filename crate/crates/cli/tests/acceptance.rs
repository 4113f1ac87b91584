//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Runs without the libtest harness so every line reaches the log.
//!
//! `ACCEPTANCE_ONLY=1,4` restricts the run to the listed criteria.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use capacity_core::bounds::{
    assemble_table, capacity_line, lovasz_theta, root_exceeds, theta_below, Decimal, KnownValues,
};
use capacity_core::certify::{parse_certificate, solution_in, verify_certificate};
use capacity_core::exact::{brute_force_mwis, max_weight_is, Budget, WeightedGraph};
use capacity_core::orbitgraph::OrbitGraph;
use capacity_core::search::{run_search, solve_exact, IterationRecord, SearchConfig};
use capacity_core::symmetry::{Group, GroupElement, ORBIT_LIMIT};
use capacity_core::torus::{brute_force_alpha, is_independent_set, CycleParams};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn dec(s: &str) -> Decimal {
    s.parse().expect("decimal literal")
}

fn translation_graph(p: u32, d: usize, offsets: &[u64]) -> OrbitGraph {
    let params = CycleParams::new(p, d).unwrap();
    let g = GroupElement::translation(&params, offsets).unwrap();
    OrbitGraph::build(&Group::cyclic(&params, g).unwrap(), ORBIT_LIMIT).unwrap()
}

const RECORDS: [(&str, u32, usize, usize); 4] = [
    ("g5_7.cert", 7, 5, 350),
    ("g4_11.cert", 11, 4, 748),
    ("g4_13.cert", 13, 4, 1534),
    ("g3_15.cert", 15, 3, 381),
];

/// The four record certificates, checked through the binary and the library.
fn records_verify() -> Outcome {
    let started = Instant::now();
    let paths: Vec<PathBuf> = RECORDS.iter().map(|r| fixture(r.0)).collect();
    let out = Command::new(env!("CARGO_BIN_EXE_oddcap"))
        .args(["--format", "structured", "verify"])
        .args(&paths)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("verify exited with {}", out.status));
    }
    let reports: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let mut sizes = Vec::new();
    for (k, &(name, p, d, expected)) in RECORDS.iter().enumerate() {
        let r = &reports[k]["report"];
        let size = r["size"].as_u64().unwrap_or(0) as usize;
        if size != expected || r["independent"] != true || r["verdict"] != "Pass" {
            return Err(format!("{name}: size {size}, report {r}"));
        }
        let cert = parse_certificate(&std::fs::read_to_string(fixture(name)).unwrap()).map_err(|e| e.to_string())?;
        let report = verify_certificate(&cert).map_err(|e| e.to_string())?;
        if report.size != expected || !report.independent || (cert.params().p(), cert.params().d()) != (p, d) {
            return Err(format!("{name}: library report disagrees: {report}"));
        }
        sizes.push(size.to_string());
    }
    let elapsed = started.elapsed();
    if elapsed >= Duration::from_secs(10) {
        return Err(format!("took {elapsed:.2?}"));
    }
    Ok(format!("sizes {} in {elapsed:.2?}", sizes.join("/")))
}

fn capacity_bounds() -> Outcome {
    let checks = [(350, 5, "3.2271"), (381, 3, "7.2495")];
    for (alpha, d, t) in checks {
        if !root_exceeds(alpha, d, dec(t)) {
            return Err(format!("{alpha}^(1/{d}) > {t} not established"));
        }
    }
    // the next decimal up must not pass, or the check proves nothing
    if root_exceeds(350, 5, dec("3.2272")) || root_exceeds(381, 3, dec("7.2496")) {
        return Err("comparison too loose".into());
    }
    Ok("350^(1/5) > 3.2271, 381^(1/3) > 7.2495".into())
}

fn theta_values() -> Outcome {
    let err = (lovasz_theta(5) - 5f64.sqrt()).abs();
    if err > 1e-12 {
        return Err(format!("theta(5) off by {err:e}"));
    }
    for (p, t) in [(7, "3.3177"), (9, "4.3601"), (11, "5.3864"), (13, "6.4042"), (15, "7.4172")] {
        if !theta_below(p, dec(t)) {
            return Err(format!("theta({p}) < {t} not established"));
        }
    }
    Ok(format!("theta(5) - sqrt 5 = {err:.1e}; five strict upper bounds hold"))
}

/// Rows of the published table, p = 5..15 odd, d = 1..5.
const TABLE: [[&str; 5]; 6] = [
    ["a2a", "a5a", "c10f", "c25d", "c50-55j"],
    ["a3a", "a10a", "f33f", "h108-115d", "k350-401j"],
    ["a4a", "a18a", "e81d", "c324-361j", "c1458-1575j"],
    ["a5a", "a27a", "e148d", "k748-814d", "c3996-4477d"],
    ["a6a", "a39a", "g247i", "k1534-1605d", "c9633-10432d"],
    ["a7a", "a52a", "k381-390d", "b2720-2925d", "c19812-21937d"],
];

fn table_reproduction() -> Outcome {
    let started = Instant::now();
    let ps = [5, 7, 9, 11, 13, 15];
    let ds = [1, 2, 3, 4, 5];
    let cells = assemble_table(&KnownValues::published(), &ps, &ds).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let mut wrong = Vec::new();
    for (row, &p) in TABLE.iter().zip(&ps) {
        for (want, &d) in row.iter().zip(&ds) {
            match cells.iter().find(|c| c.p == p && c.d == d) {
                Some(c) if c.to_string() == *want => {}
                other => wrong.push(format!("({p},{d}) want {want}, got {other:?}")),
            }
        }
    }
    if cells.len() != 30 || !wrong.is_empty() {
        return Err(format!("{} cells, mismatches: {}", cells.len(), wrong.join("; ")));
    }
    // capacity lines use the best lower bound in the table
    let line = capacity_line(&cells, 7).ok_or("no capacity line for p = 7")?;
    if !root_exceeds(line.alpha, line.d, dec("3.2271")) {
        return Err(format!("capacity line for 7 uses {}^(1/{})", line.alpha, line.d));
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:.2?}"));
    }
    Ok(format!("30 cells match in {elapsed:.2?}"))
}

fn exact_optima() -> Outcome {
    let warm = SearchConfig {
        time_limit: Some(Duration::from_secs(5)),
        seed: 1,
        ..SearchConfig::default()
    };
    let mut report = Vec::new();
    for (p, d, want, ceiling) in [(5, 2, 5, 60), (7, 2, 10, 60), (5, 3, 10, 60), (7, 3, 33, 600)] {
        let params = CycleParams::new(p, d).unwrap();
        let graph = OrbitGraph::build(&Group::trivial(&params), ORBIT_LIMIT).map_err(|e| e.to_string())?;
        if graph.n() != params.size() as usize {
            return Err(format!("C_{p}^{d} has {} vertices", graph.n()));
        }
        // cross-check the small cases against exhaustive search
        if params.size() <= 125 {
            let brute = brute_force_alpha(&params).map_err(|e| e.to_string())?;
            if brute != want {
                return Err(format!("exhaustive alpha(C_{p}^{d}) = {brute}"));
            }
        }
        let started = Instant::now();
        let budget = Budget::time(Duration::from_secs(ceiling));
        let out = solve_exact(&graph, &budget, &warm).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        let seen = format!("C_{p}^{d}: {}{} in {elapsed:.1?}", out.solution.weight(), if out.optimal { "" } else { " (unproven)" });
        if !out.optimal || out.solution.weight() != want || elapsed > Duration::from_secs(ceiling) {
            return Err(format!("{seen}; want {want} proven within {ceiling} s"));
        }
        report.push(seen);
    }
    Ok(report.join(", "))
}

fn random_graph(n: usize, density: f64, seed: u64) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..n).map(|_| rng.gen_range(1..=20)).collect();
    let mut g = WeightedGraph::new(weights);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

fn run_property<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, test)
        .map(|()| format!("{cases} cases"))
        .map_err(|e| e.to_string())
}

fn solver_matches_oracle() -> Outcome {
    run_property(200, (1usize..=18, 0.1f64..=0.9, any::<u64>()), |(n, density, seed)| {
        let g = random_graph(n, density, seed);
        let fast = max_weight_is(&g, &Budget::unlimited());
        let slow = brute_force_mwis(&g).unwrap();
        prop_assert!(fast.optimal);
        prop_assert!(fast.solution.is_valid_for(&g));
        prop_assert_eq!(fast.solution.weight(), slow.weight());
        Ok(())
    })
}

fn expansion_is_sound() -> Outcome {
    let instance = (4u32..=9, 1usize..=3).prop_flat_map(|(p, d)| {
        (Just(p), Just(d), prop::collection::vec(0..p as u64, d), any::<u64>())
    });
    run_property(50, instance, |(p, d, offsets, seed)| {
        let graph = translation_graph(p, d, &offsets);
        let g = graph.graph();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..g.n()).collect();
        order.shuffle(&mut rng);
        // a random conflict-free subset, not necessarily maximal
        let mut chosen: Vec<usize> = Vec::new();
        for v in order {
            if rng.gen_bool(0.7) && chosen.iter().all(|&u| !g.has_edge(u, v)) {
                chosen.push(v);
            }
        }
        let weight: u64 = chosen.iter().map(|&v| g.weight(v)).sum();
        let s = capacity_core::exact::Solution::new(g, chosen).unwrap();
        let code = graph.expand(&s);
        prop_assert_eq!(code.len() as u64, weight);
        prop_assert!(is_independent_set(&code));
        Ok(())
    })
}

fn search_reaches(graph: &OrbitGraph, target: u64, limit: Duration) -> Outcome {
    let mut tried = Vec::new();
    for seed in 1..=5 {
        let config = SearchConfig {
            seed,
            time_limit: Some(limit),
            target_weight: Some(target),
            ..SearchConfig::default()
        };
        let started = Instant::now();
        let report = run_search(graph, &config, 1).map_err(|e| e.to_string())?;
        let best = report.best.weight();
        tried.push(format!("seed {seed}: {best} in {:.1?}", started.elapsed()));
        if best >= target {
            return Ok(tried.join(", "));
        }
    }
    Err(tried.join(", "))
}

fn search_sanity() -> Outcome {
    let g5_7 = translation_graph(7, 5, &[0, 1, 1, 5, 1]);
    let first = search_reaches(&g5_7, 300, Duration::from_secs(600)).map_err(|e| format!("C_7^5: {e}"))?;
    let params = CycleParams::new(7, 3).unwrap();
    let full = OrbitGraph::build(&Group::trivial(&params), ORBIT_LIMIT).unwrap();
    let second = search_reaches(&full, 33, Duration::from_secs(60)).map_err(|e| format!("C_7^3: {e}"))?;
    // the record solutions are conflict-free vertex sets of their orbit graphs
    for &(name, p, d, size) in &RECORDS {
        let cert = parse_certificate(&std::fs::read_to_string(fixture(name)).unwrap()).map_err(|e| e.to_string())?;
        let group = cert.group().map_err(|e| e.to_string())?;
        let graph = OrbitGraph::build(&group, ORBIT_LIMIT).map_err(|e| e.to_string())?;
        let s = solution_in(&graph, &cert).map_err(|e| format!("{name}: {e}"))?;
        if s.weight() as usize != size || graph.params() != &CycleParams::new(p, d).unwrap() {
            return Err(format!("{name}: weight {} in the orbit graph", s.weight()));
        }
    }
    Ok(format!("C_7^5 >= 300 ({first}); C_7^3 = 33 ({second}); records are orbit-graph solutions"))
}

fn replay_key(r: &IterationRecord) -> (u32, u64, u64, u64, u32, usize, bool) {
    (r.restart, r.iteration, r.incumbent, r.best, r.radius, r.removed, r.refill_optimal)
}

fn search_invariants() -> Outcome {
    let graph = translation_graph(11, 3, &[1, 3, 5]);
    run_property(3, any::<u64>(), |seed| {
        let config = SearchConfig {
            seed,
            time_limit: None,
            max_iterations: 10_000,
            // A small refill budget keeps 10000 iterations to seconds once
            // the ball radius has grown to cover the whole graph.
            refill_nodes: 2_000,
            log_every: 1,
            ..SearchConfig::default()
        };
        let a = run_search(&graph, &config, 1).unwrap();
        let b = run_search(&graph, &config, 1).unwrap();
        let records = &a.restarts[0].records;
        prop_assert_eq!(records.len(), 10_000);
        prop_assert!(records.windows(2).all(|w| w[0].best <= w[1].best));
        prop_assert!(records.iter().all(|r| r.incumbent <= r.best));
        let ka: Vec<_> = records.iter().map(replay_key).collect();
        let kb: Vec<_> = b.restarts[0].records.iter().map(replay_key).collect();
        prop_assert!(ka == kb, "trajectories differ for seed {}", seed);
        prop_assert_eq!(a.best.vertices(), b.best.vertices());
        Ok(())
    })
    .map(|cases| format!("{cases} of 10000 iterations on {} orbits", graph.n()))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "record certificates verify", records_verify),
        (2, "capacity lower bounds", capacity_bounds),
        (3, "Lovász theta", theta_values),
        (4, "bounds table", table_reproduction),
        (5, "exact small optima", exact_optima),
        (6, "solver matches exhaustive oracle", solver_matches_oracle),
        (7, "orbit expansion soundness", expansion_is_sound),
        (8, "stochastic search sanity", search_sanity),
        (9, "search invariants", search_invariants),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let started = Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} PASS  {name} [{secs:.1} s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL  {name} [{secs:.1} s]: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
