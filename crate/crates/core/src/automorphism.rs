//! Vertex orbits of a group of weight-preserving automorphisms.
//!
//! The exact solver uses them to skip work: every independent set has an
//! image whose smallest vertex is the smallest vertex of its own orbit, so
//! only those vertices need to be tried as the smallest member of an
//! improving solution.

use std::collections::{HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::exact::WeightedGraph;

/// Largest group order times vertex count for which the group elements
/// are listed explicitly.
pub const ELEMENT_LIMIT: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSymmetry {
    orbit: Vec<usize>,
    orbits: usize,
    /// All group elements as vertex permutations, identity first, when the
    /// group is small enough to list.
    elements: Option<Vec<Vec<u32>>>,
}

impl GraphSymmetry {
    /// Every vertex in its own orbit.
    pub fn trivial(n: usize) -> Self {
        GraphSymmetry {
            orbit: (0..n).collect(),
            orbits: n,
            elements: None,
        }
    }

    /// Orbits of the group generated by `generators`, each checked to be an
    /// automorphism of `g` that preserves weights.
    pub fn from_generators(g: &WeightedGraph, generators: &[Vec<usize>]) -> Result<Self> {
        for (k, perm) in generators.iter().enumerate() {
            check_automorphism(g, perm).map_err(|msg| Error::Contract(format!("symmetry {k}: {msg}")))?;
        }
        let n = g.n();
        let mut orbit = vec![usize::MAX; n];
        let mut orbits = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if orbit[start] != usize::MAX {
                continue;
            }
            orbit[start] = orbits;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for perm in generators {
                    let u = perm[v];
                    if orbit[u] == usize::MAX {
                        orbit[u] = orbits;
                        queue.push_back(u);
                    }
                }
            }
            orbits += 1;
        }
        let elements = list_elements(n, generators);
        Ok(GraphSymmetry { orbit, orbits, elements })
    }

    /// The group elements, if the group was small enough to list.
    pub fn elements(&self) -> Option<&[Vec<u32>]> {
        self.elements.as_deref()
    }

    pub fn n(&self) -> usize {
        self.orbit.len()
    }

    pub fn orbit_of(&self, v: usize) -> usize {
        self.orbit[v]
    }

    pub fn orbit_count(&self) -> usize {
        self.orbits
    }

    pub fn is_trivial(&self) -> bool {
        self.orbits == self.orbit.len()
    }
}

/// Breadth-first closure of the generators, abandoned past the limit.
fn list_elements(n: usize, generators: &[Vec<usize>]) -> Option<Vec<Vec<u32>>> {
    let identity: Vec<u32> = (0..n as u32).collect();
    let mut seen: HashSet<Vec<u32>> = HashSet::from([identity.clone()]);
    let mut elements = vec![identity];
    let mut next = 0;
    while next < elements.len() {
        for perm in generators {
            let composed: Vec<u32> = perm.iter().map(|&v| elements[next][v]).collect();
            if !seen.contains(&composed) {
                if (elements.len() + 1).saturating_mul(n.max(1)) > ELEMENT_LIMIT {
                    return None;
                }
                seen.insert(composed.clone());
                elements.push(composed);
            }
        }
        next += 1;
    }
    Some(elements)
}

fn check_automorphism(g: &WeightedGraph, perm: &[usize]) -> std::result::Result<(), String> {
    let n = g.n();
    if perm.len() != n {
        return Err(format!("length {} for {} vertices", perm.len(), n));
    }
    let mut hit = vec![false; n];
    for &v in perm {
        if v >= n || std::mem::replace(&mut hit[v], true) {
            return Err("not a permutation".into());
        }
    }
    for v in 0..n {
        if g.weight(perm[v]) != g.weight(v) {
            return Err(format!("changes the weight of vertex {v}"));
        }
        // a bijection mapping edges to edges preserves the edge count, so
        // it also maps non-edges to non-edges
        if let Some(u) = g.neighbors(v).iter().find(|&u| !g.has_edge(perm[v], perm[u])) {
            return Err(format!("maps edge ({v}, {u}) to a non-edge"));
        }
    }
    Ok(())
}
