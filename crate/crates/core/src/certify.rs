//! Plain-text certificates: a translation group plus one representative per
//! orbit. Expanding the orbits gives a set of codewords whose independence
//! proves `G(d, p) >= size`.
//!
//! ```text
//! # comments run to the end of the line
//! p 7
//! d 5
//! generator 0 1 1 5 1
//! order 7
//! claim 350
//! 0 5 6 6 0
//! (0, 0, 6, 6, 0), (3, 3, 0, 6, 0)
//! ```
//!
//! A representative line is either bare residues or any number of
//! parenthesized tuples, so lists copied from prose parse unchanged.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::Solution;
use crate::orbitgraph::OrbitGraph;
use crate::symmetry::{Group, GroupElement};
use crate::torus::{first_adjacent_pair, CodeSet, Codeword, CycleParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    params: CycleParams,
    /// Offset vectors of the translation generators.
    generators: Vec<Vec<u8>>,
    claimed_order: Option<u64>,
    claim: Option<u64>,
    representatives: Vec<Codeword>,
}

impl Certificate {
    /// Checks the generators and representatives against `params`. An empty
    /// generator list stands for the trivial group.
    pub fn new(
        params: CycleParams,
        generators: Vec<Vec<u8>>,
        claimed_order: Option<u64>,
        claim: Option<u64>,
        representatives: Vec<Codeword>,
    ) -> Result<Self> {
        for b in &generators {
            // validates length and range
            translation(&params, b)?;
        }
        let mut seen = HashSet::new();
        for r in &representatives {
            Codeword::new(r.coords().to_vec(), &params)?;
            if !seen.insert(r) {
                return Err(Error::Contract(format!("representative {r} listed twice")));
            }
        }
        let cert = Certificate {
            params,
            generators,
            claimed_order,
            claim,
            representatives,
        };
        if let Some(order) = claimed_order {
            let actual = cert.group()?.order() as u64;
            if actual != order {
                return Err(Error::Contract(format!("claimed group order {order}, generators give {actual}")));
            }
        }
        Ok(cert)
    }

    pub fn params(&self) -> &CycleParams {
        &self.params
    }

    pub fn generators(&self) -> &[Vec<u8>] {
        &self.generators
    }

    pub fn claimed_order(&self) -> Option<u64> {
        self.claimed_order
    }

    /// The claimed lower bound; absent means 0.
    pub fn claim(&self) -> u64 {
        self.claim.unwrap_or(0)
    }

    pub fn representatives(&self) -> &[Codeword] {
        &self.representatives
    }

    pub fn group(&self) -> Result<Group> {
        let gens = self
            .generators
            .iter()
            .map(|b| translation(&self.params, b))
            .collect::<Result<Vec<_>>>()?;
        Group::generated(&self.params, gens)
    }

    /// Same certificate with every representative replaced by the least
    /// member of its orbit, sorted and deduplicated.
    pub fn normalized(&self) -> Result<Self> {
        let group = self.group()?;
        let mut reps: Vec<Codeword> = self
            .representatives
            .iter()
            .map(|r| group.orbit_of(r).representative().clone())
            .collect();
        reps.sort();
        reps.dedup();
        Ok(Certificate {
            representatives: reps,
            ..self.clone()
        })
    }
}

fn translation(params: &CycleParams, b: &[u8]) -> Result<GroupElement> {
    let values: Vec<u64> = b.iter().map(|&x| x as u64).collect();
    GroupElement::translation(params, &values)
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p {}", self.params.p())?;
        writeln!(f, "d {}", self.params.d())?;
        for b in &self.generators {
            writeln!(f, "generator {}", join(b))?;
        }
        if let Some(order) = self.claimed_order {
            writeln!(f, "order {order}")?;
        }
        if let Some(claim) = self.claim {
            writeln!(f, "claim {claim}")?;
        }
        for r in &self.representatives {
            writeln!(f, "{}", join(r.coords()))?;
        }
        Ok(())
    }
}

fn join(xs: &[u8]) -> String {
    let mut s = String::new();
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x}");
    }
    s
}

/// Parses the text format. Errors carry the 1-based line number.
pub fn parse_certificate(text: &str) -> Result<Certificate> {
    let mut p: Option<(u32, usize)> = None;
    let mut d: Option<(usize, usize)> = None;
    let mut params: Option<CycleParams> = None;
    let mut generators = Vec::new();
    let mut order = None;
    let mut claim = None;
    let mut reps: Vec<Codeword> = Vec::new();
    let mut seen: HashSet<Codeword> = HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = match line.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r.trim()),
            None => (line, ""),
        };
        let err = |msg: String| Error::parse(line_no, msg);
        match head {
            "p" | "d" | "order" | "claim" => {
                let value: u64 = rest
                    .parse()
                    .map_err(|_| err(format!("expected an integer after {head:?}, found {rest:?}")))?;
                let slot_taken = match head {
                    "p" => p.is_some(),
                    "d" => d.is_some(),
                    "order" => order.is_some(),
                    _ => claim.is_some(),
                };
                if slot_taken {
                    return Err(err(format!("{head:?} given twice")));
                }
                if (head == "p" || head == "d") && (!generators.is_empty() || !reps.is_empty()) {
                    return Err(err(format!("{head:?} must precede generators and representatives")));
                }
                match head {
                    "p" => p = Some((u32::try_from(value).map_err(|_| err(format!("p = {value} is too large")))?, line_no)),
                    "d" => d = Some((value as usize, line_no)),
                    "order" => order = Some(value),
                    _ => claim = Some(value),
                }
            }
            "generator" => {
                let ps = header(&mut params, p, d, line_no)?;
                let values = numbers(rest).map_err(err)?;
                let word = residues(&values, &ps).map_err(|e| relocate(e, line_no))?;
                generators.push(word.coords().to_vec());
            }
            _ => {
                let ps = header(&mut params, p, d, line_no)?;
                for tuple in tuples(line).map_err(err)? {
                    let word = residues(&tuple, &ps).map_err(|e| relocate(e, line_no))?;
                    if !seen.insert(word.clone()) {
                        return Err(err(format!("representative {word} listed twice")));
                    }
                    reps.push(word);
                }
            }
        }
    }
    let params = match params {
        Some(ps) => ps,
        None => header(&mut params, p, d, text.lines().count().max(1))?,
    };
    Certificate::new(params, generators, order, claim, reps).map_err(|e| match e {
        Error::Contract(msg) => Error::parse(order_line(text).unwrap_or(1), msg),
        other => other,
    })
}

fn order_line(text: &str) -> Option<usize> {
    text.lines()
        .position(|l| l.split('#').next().unwrap_or("").trim_start().starts_with("order"))
        .map(|i| i + 1)
}

fn header(
    params: &mut Option<CycleParams>,
    p: Option<(u32, usize)>,
    d: Option<(usize, usize)>,
    line_no: usize,
) -> Result<CycleParams> {
    if let Some(ps) = params {
        return Ok(*ps);
    }
    let (Some((p, p_line)), Some((d, _))) = (p, d) else {
        return Err(Error::parse(line_no, "\"p\" and \"d\" must come first"));
    };
    let ps = CycleParams::new(p, d).map_err(|e| Error::parse(p_line, e.to_string()))?;
    *params = Some(ps);
    Ok(ps)
}

fn relocate(e: Error, line_no: usize) -> Error {
    Error::parse(line_no, e.to_string())
}

fn numbers(s: &str) -> std::result::Result<Vec<u64>, String> {
    s.split(|c: char| c.is_whitespace() || c == ',' || c == '(' || c == ')')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("malformed tuple: {t:?} is not a residue")))
        .collect()
}

/// Tuples on one representative line.
fn tuples(line: &str) -> std::result::Result<Vec<Vec<u64>>, String> {
    if !line.contains('(') {
        return numbers(line).map(|t| vec![t]);
    }
    let mut out = Vec::new();
    let mut rest = line;
    loop {
        let rest_trim = rest.trim_start_matches(|c: char| c.is_whitespace() || c == ',');
        if rest_trim.is_empty() {
            return Ok(out);
        }
        let Some(inner) = rest_trim.strip_prefix('(') else {
            return Err(format!("malformed tuple near {rest_trim:?}"));
        };
        let Some(close) = inner.find(')') else {
            return Err("malformed tuple: missing ')'".into());
        };
        if inner[..close].contains('(') {
            return Err("malformed tuple: nested '('".into());
        }
        out.push(numbers(&inner[..close])?);
        rest = &inner[close + 1..];
    }
}

fn residues(values: &[u64], params: &CycleParams) -> Result<Codeword> {
    Codeword::from_values(values, params)
}

/// Defects found while expanding: two representatives of one orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SharedOrbit {
    pub first: usize,
    pub second: usize,
}

#[derive(Debug, Clone)]
pub struct Expansion {
    pub code: CodeSet,
    /// Orbit size of each representative, in listing order.
    pub orbit_weights: Vec<usize>,
    pub shared_orbits: Vec<SharedOrbit>,
}

/// Union of the orbits of all representatives.
pub fn expand_certificate(c: &Certificate) -> Result<Expansion> {
    let group = c.group()?;
    let mut code = CodeSet::empty(c.params);
    let mut owner: BTreeMap<Codeword, usize> = BTreeMap::new();
    let mut orbit_weights = Vec::with_capacity(c.representatives.len());
    let mut shared_orbits = Vec::new();
    for (k, r) in c.representatives.iter().enumerate() {
        let orbit = group.orbit_of(r);
        orbit_weights.push(orbit.weight());
        if let Some(&first) = owner.get(orbit.representative()) {
            shared_orbits.push(SharedOrbit { first, second: k });
            continue;
        }
        owner.insert(orbit.representative().clone(), k);
        for w in orbit.members() {
            code.insert(w.clone())?;
        }
    }
    Ok(Expansion {
        code,
        orbit_weights,
        shared_orbits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub p: u32,
    pub d: usize,
    pub generators: Vec<Vec<u8>>,
    pub group_order: usize,
    pub representatives: usize,
    /// Number of distinct codewords in the expansion; the implied bound is
    /// `G(d, p) >= size` when the set is independent.
    pub size: usize,
    pub claim: u64,
    pub independent: bool,
    /// A witness pair when the expansion is not independent.
    pub conflict: Option<(Codeword, Codeword)>,
    /// Representatives whose own orbit contains an adjacent pair.
    pub inadmissible: Vec<usize>,
    pub shared_orbits: Vec<SharedOrbit>,
    /// True when every orbit has full size, so size = representatives x order.
    pub free_action: bool,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn implied_bound(&self) -> Option<usize> {
        self.independent.then_some(self.size)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: G({},{}) >= {} claimed", self.verdict, self.d, self.p, self.claim)?;
        let gens: Vec<String> = self.generators.iter().map(|b| format!("({})", join(b).replace(' ', ", "))).collect();
        writeln!(
            f,
            "  group order {} from generator {}",
            self.group_order,
            if gens.is_empty() { "none".to_string() } else { gens.join(" ") }
        )?;
        writeln!(f, "  {} representatives expand to {} codewords", self.representatives, self.size)?;
        match &self.conflict {
            None => writeln!(f, "  independent: yes, so G({},{}) >= {}", self.d, self.p, self.size)?,
            Some((a, b)) => writeln!(f, "  independent: no, {a} and {b} are adjacent")?,
        }
        if !self.inadmissible.is_empty() {
            writeln!(f, "  inadmissible orbits at representatives {:?}", self.inadmissible)?;
        }
        for s in &self.shared_orbits {
            writeln!(f, "  representatives {} and {} share an orbit", s.first, s.second)?;
        }
        Ok(())
    }
}

/// Expands and checks a certificate. Failures are recorded in the report.
/// Independence is decided by comparing every pair of expanded codewords
/// directly, without orbit reasoning.
pub fn verify_certificate(c: &Certificate) -> Result<VerificationReport> {
    let group = c.group()?;
    let expansion = expand_certificate(c)?;
    let conflict = first_adjacent_pair(&expansion.code);
    let inadmissible = c
        .representatives
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            let orbit = CodeSet::new(c.params, group.orbit_of(r).members().iter().cloned())
                .expect("orbit members are distinct codewords");
            first_adjacent_pair(&orbit).is_some()
        })
        .map(|(k, _)| k)
        .collect();
    let independent = conflict.is_none();
    let size = expansion.code.len();
    let verdict = if independent && size as u64 >= c.claim() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(VerificationReport {
        p: c.params.p(),
        d: c.params.d(),
        generators: c.generators.clone(),
        group_order: group.order(),
        representatives: c.representatives.len(),
        size,
        claim: c.claim(),
        independent,
        conflict,
        inadmissible,
        free_action: expansion.orbit_weights.iter().all(|&w| w == group.order()),
        shared_orbits: expansion.shared_orbits,
        verdict,
    })
}

/// Normalized certificate for a solution of an orbit graph, claiming its
/// weight. Groups that are not generated by translations cannot be written
/// in the format, so their solutions are emitted fully expanded under the
/// trivial group.
pub fn certificate_for(graph: &OrbitGraph, s: &Solution) -> Result<Certificate> {
    let params = *graph.params();
    let group = graph.group();
    let code = graph.expand(s);
    let (generators, reps): (Vec<Vec<u8>>, Vec<Codeword>) = if group.is_translation_group() {
        let gens = if group.is_trivial() {
            Vec::new()
        } else {
            group.generators().iter().map(|g| g.offsets().to_vec()).collect()
        };
        let mut reps: Vec<Codeword> = s.vertices().iter().map(|&v| graph.orbit(v).representative().clone()).collect();
        reps.sort();
        (gens, reps)
    } else {
        (Vec::new(), code.iter().cloned().collect())
    };
    let order = if generators.is_empty() { 1 } else { group.order() as u64 };
    Certificate::new(params, generators, Some(order), Some(code.len() as u64), reps)
}

/// Certificate text for a solution of an orbit graph.
pub fn emit_certificate(graph: &OrbitGraph, s: &Solution) -> Result<String> {
    Ok(certificate_for(graph, s)?.to_string())
}

/// The vertices of `graph` named by the certificate's representatives, as a
/// solution. Fails if a representative's orbit is not a vertex or the
/// chosen vertices conflict.
pub fn solution_in(graph: &OrbitGraph, c: &Certificate) -> Result<Solution> {
    if graph.params() != c.params() {
        return Err(Error::Contract(format!("certificate is for {}, graph for {}", c.params(), graph.params())));
    }
    let vertices = c
        .representatives
        .iter()
        .map(|r| {
            graph
                .vertex_of(r)
                .ok_or_else(|| Error::Contract(format!("orbit of {r} is not an admissible orbit")))
        })
        .collect::<Result<Vec<_>>>()?;
    Solution::new(graph.graph(), vertices)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cert(text: &str) -> Certificate {
        parse_certificate(text).unwrap()
    }

    #[test]
    fn parses_bare_and_parenthesized_tuples() {
        let c = cert("# demo\np 7\nd 3\ngenerator 0 1 2\norder 7\nclaim 14\n0 0 0\n(0, 2, 4), (3, 0, 0)  # trailing\n");
        assert_eq!(c.params().p(), 7);
        assert_eq!(c.generators(), &[vec![0, 1, 2]]);
        assert_eq!(c.claimed_order(), Some(7));
        assert_eq!(c.claim(), 14);
        assert_eq!(c.representatives().len(), 3);
        assert_eq!(c.representatives()[2].coords(), &[3, 0, 0]);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let cases = [
            ("p 7\nd 5\n0 5 6 6 7\n", 3),
            ("p 7\nd 3\n0 1\n", 3),
            ("p 7\nd 3\n0 x 1\n", 3),
            ("p 7\nd 3\n(0, 1, 2\n", 3),
            ("0 1 2\n", 1),
            ("p 7\nd 3\ngenerator 0 1 9\n", 3),
            ("p 7\nd 3\n0 0 0\n0 0 0\n", 4),
            ("p 7\nd 3\np 7\n", 3),
            ("p 7\nd 3\ngenerator 0 1 2\norder 5\n", 4),
        ];
        for (text, line) in cases {
            match parse_certificate(text) {
                Err(Error::Parse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn empty_representative_list() {
        let c = cert("p 5\nd 2\n");
        assert_eq!(c.claim(), 0);
        let r = verify_certificate(&c).unwrap();
        assert_eq!(r.size, 0);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn trivial_generator_expands_single_word() {
        let c = cert("p 5\nd 3\ngenerator 0 0 0\n1 2 3\n");
        let e = expand_certificate(&c).unwrap();
        assert_eq!(e.code.len(), 1);
        assert_eq!(e.orbit_weights, vec![1]);
    }

    #[test]
    fn shared_orbits_are_defects() {
        // (1, 1) is (0, 0) shifted once
        let c = cert("p 5\nd 2\ngenerator 1 1\nclaim 10\n0 0\n1 1\n");
        let r = verify_certificate(&c).unwrap();
        assert_eq!(r.shared_orbits, vec![SharedOrbit { first: 0, second: 1 }]);
        assert_eq!(r.size, 5);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn adjacent_words_fail() {
        let c = cert("p 5\nd 2\n0 0\n1 1\n");
        let r = verify_certificate(&c).unwrap();
        assert!(!r.independent);
        assert!(r.conflict.is_some());
        assert_eq!(r.verdict, Verdict::Fail);
        // a lone orbit with adjacent members is inadmissible
        let c = cert("p 5\nd 2\ngenerator 1 0\n0 0\n");
        let r = verify_certificate(&c).unwrap();
        assert_eq!(r.inadmissible, vec![0]);
    }

    #[test]
    fn claim_above_size_fails() {
        let c = cert("p 5\nd 2\nclaim 3\n0 0\n2 2\n");
        let r = verify_certificate(&c).unwrap();
        assert!(r.independent);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn normalization_picks_orbit_minima() {
        let c = cert("p 7\nd 2\ngenerator 1 3\n5 1\n0 2\n");
        let n = c.normalized().unwrap();
        // (5,1) - 5*(1,3) = (0, 0)
        let coords: Vec<&[u8]> = n.representatives().iter().map(|r| r.coords()).collect();
        assert_eq!(coords, vec![&[0u8, 0][..], &[0, 2]]);
        assert_eq!(cert(&n.to_string()), n);
    }
}
