//! The shipped record certificates.

use std::path::PathBuf;

use capacity_core::certify::{emit_certificate, parse_certificate, solution_in, verify_certificate, Certificate, Verdict};
use capacity_core::orbitgraph::OrbitGraph;
use capacity_core::symmetry::ORBIT_LIMIT;

const RECORDS: [(&str, usize); 4] = [("g5_7.cert", 350), ("g4_11.cert", 748), ("g4_13.cert", 1534), ("g3_15.cert", 381)];

fn read(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn load(name: &str) -> Certificate {
    parse_certificate(&read(name)).unwrap()
}

#[test]
fn records_verify_at_their_claims() {
    for (name, size) in RECORDS {
        let report = verify_certificate(&load(name)).unwrap();
        assert_eq!(report.verdict, Verdict::Pass, "{name}");
        assert_eq!(report.size, size, "{name}");
        assert!(report.free_action && report.inadmissible.is_empty() && report.shared_orbits.is_empty());
    }
}

#[test]
fn replacing_a_representative_with_the_origin_breaks_g5_7() {
    let text = read("g5_7.cert");
    let mut lines: Vec<&str> = text.lines().collect();
    let first_rep = lines
        .iter()
        .position(|l| l.starts_with(|c: char| c.is_ascii_digit()))
        .unwrap();
    lines[first_rep] = "0 0 0 0 0";
    let report = verify_certificate(&parse_certificate(&lines.join("\n")).unwrap()).unwrap();
    assert_eq!(report.verdict, Verdict::Fail);
    assert!(!report.independent);
    let (a, b) = report.conflict.expect("a witness pair");
    assert_ne!(a, b);
}

#[test]
fn g3_15_survives_emit_and_parse() {
    let cert = load("g3_15.cert");
    let graph = OrbitGraph::build(&cert.group().unwrap(), ORBIT_LIMIT).unwrap();
    let solution = solution_in(&graph, &cert).unwrap();
    assert_eq!(solution.weight(), 381);
    assert!(solution.is_valid_for(graph.graph()));
    let again = parse_certificate(&emit_certificate(&graph, &solution).unwrap()).unwrap();
    let report = verify_certificate(&again).unwrap();
    assert_eq!((report.verdict, report.size), (Verdict::Pass, 381));
    assert_eq!(again.representatives().len(), cert.representatives().len());
}
