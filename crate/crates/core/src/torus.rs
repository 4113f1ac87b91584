//! Codes over `Z_p` of length `d`, viewed as vertices of the strong power
//! `C_p^d`.
//!
//! Two distinct codewords are adjacent when every coordinate differs by at
//! most one modulo `p`. An independent set is therefore the same thing as a
//! packing of side-2 hypercubes in the discrete `d`-dimensional torus of
//! width `p`, with a cube anchored at each codeword.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Budget, WeightedGraph};

/// Largest alphabet supported; residues are stored as bytes.
pub const MAX_P: u32 = 255;

/// Default size guard for exhaustive oracles.
pub const ORACLE_LIMIT: u128 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycleParams {
    p: u32,
    d: usize,
}

impl CycleParams {
    pub fn new(p: u32, d: usize) -> Result<Self> {
        if p < 4 {
            return Err(Error::InvalidParams(format!("p = {p}, need p >= 4")));
        }
        if p > MAX_P {
            return Err(Error::InvalidParams(format!("p = {p}, need p <= {MAX_P}")));
        }
        if d == 0 {
            return Err(Error::InvalidParams("d must be at least 1".into()));
        }
        Ok(CycleParams { p, d })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of codewords, `p^d`.
    pub fn size(&self) -> u128 {
        (self.p as u128).checked_pow(self.d as u32).unwrap_or(u128::MAX)
    }

    /// `p^d` as an index bound, failing if it exceeds `limit`.
    pub fn checked_size(&self, limit: u128) -> Result<usize> {
        let n = self.size();
        if n > limit || n > usize::MAX as u128 {
            return Err(Error::too_large("p^d", n, limit));
        }
        Ok(n as usize)
    }

    /// Largest possible coordinate-sum distance between two codewords.
    pub fn max_distance(&self) -> u32 {
        self.d as u32 * (self.p / 2)
    }

    /// Mixed-radix index of a coordinate slice, first coordinate most
    /// significant, so index order is lexicographic order.
    pub fn index_of(&self, coords: &[u8]) -> usize {
        coords
            .iter()
            .fold(0usize, |acc, &c| acc * self.p as usize + c as usize)
    }

    pub fn coords_of(&self, mut index: usize, out: &mut [u8]) {
        let p = self.p as usize;
        for slot in out.iter_mut().rev() {
            *slot = (index % p) as u8;
            index /= p;
        }
    }

    /// Index deltas are not uniform on a torus, so neighbors are produced
    /// from coordinates.
    pub fn for_each_neighbor(&self, coords: &[u8], mut f: impl FnMut(usize)) {
        let d = self.d;
        let p = self.p as i32;
        let mut step = vec![-1i32; d];
        let mut buf = vec![0u8; d];
        loop {
            if step.iter().any(|&s| s != 0) {
                for i in 0..d {
                    buf[i] = (coords[i] as i32 + step[i]).rem_euclid(p) as u8;
                }
                f(self.index_of(&buf));
            }
            let mut i = 0;
            loop {
                if i == d {
                    return;
                }
                if step[i] < 1 {
                    step[i] += 1;
                    break;
                }
                step[i] = -1;
                i += 1;
            }
        }
    }
}

impl fmt::Display for CycleParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C_{}^{}", self.p, self.d)
    }
}

/// A vertex of `C_p^d`. Coordinate 1 of the usual notation sits at
/// position 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Codeword(Vec<u8>);

impl Codeword {
    pub fn new(coords: Vec<u8>, params: &CycleParams) -> Result<Self> {
        if coords.len() != params.d() {
            return Err(Error::LengthMismatch {
                expected: params.d(),
                found: coords.len(),
            });
        }
        if let Some(&bad) = coords.iter().find(|&&c| c as u32 >= params.p()) {
            return Err(Error::ResidueOutOfRange {
                value: bad as u64,
                p: params.p(),
            });
        }
        Ok(Codeword(coords))
    }

    /// Builds a codeword from arbitrary integers, checking the range.
    pub fn from_values(values: &[u64], params: &CycleParams) -> Result<Self> {
        let mut coords = Vec::with_capacity(values.len());
        for &v in values {
            if v >= params.p() as u64 {
                return Err(Error::ResidueOutOfRange {
                    value: v,
                    p: params.p(),
                });
            }
            coords.push(v as u8);
        }
        Codeword::new(coords, params)
    }

    pub fn from_index(index: usize, params: &CycleParams) -> Self {
        let mut coords = vec![0u8; params.d()];
        params.coords_of(index, &mut coords);
        Codeword(coords)
    }

    pub(crate) fn from_raw(coords: Vec<u8>) -> Self {
        Codeword(coords)
    }

    pub fn coords(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index(&self, params: &CycleParams) -> usize {
        params.index_of(&self.0)
    }

    fn conforms(&self, params: &CycleParams) -> bool {
        self.0.len() == params.d() && self.0.iter().all(|&c| (c as u32) < params.p())
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A set of distinct codewords sharing one parameter pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSet {
    params: CycleParams,
    words: BTreeSet<Codeword>,
}

impl CodeSet {
    pub fn empty(params: CycleParams) -> Self {
        CodeSet {
            params,
            words: BTreeSet::new(),
        }
    }

    /// Fails on malformed words or duplicates.
    pub fn new(params: CycleParams, words: impl IntoIterator<Item = Codeword>) -> Result<Self> {
        let mut set = CodeSet::empty(params);
        for w in words {
            if !w.conforms(&params) {
                return Err(Error::Contract(format!("{w} does not belong to {params}")));
            }
            if !set.words.insert(w.clone()) {
                return Err(Error::Contract(format!("duplicate codeword {w}")));
            }
        }
        Ok(set)
    }

    /// Inserts a word, returning false if it was already present.
    pub fn insert(&mut self, word: Codeword) -> Result<bool> {
        if !word.conforms(&self.params) {
            return Err(Error::Contract(format!(
                "{word} does not belong to {}",
                self.params
            )));
        }
        Ok(self.words.insert(word))
    }

    pub fn params(&self) -> &CycleParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, w: &Codeword) -> bool {
        self.words.contains(w)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Codeword> {
        self.words.iter()
    }
}

/// Circular distance between two residues modulo `p`.
pub fn circ_dist(x: u32, y: u32, p: u32) -> u32 {
    let diff = x.abs_diff(y);
    diff.min(p - diff)
}

/// Sum of coordinate circular distances (used as a heuristic distance).
pub fn lee_distance(a: &[u8], b: &[u8], p: u32) -> u32 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| circ_dist(x as u32, y as u32, p))
        .sum()
}

/// Adjacency without the distinctness check. Equal words report true.
pub(crate) fn within_unit_box(a: &[u8], b: &[u8], p: u32) -> bool {
    a.iter()
        .zip(b)
        .all(|(&x, &y)| circ_dist(x as u32, y as u32, p) < 2)
}

/// Adjacency in `C_p^d`: every coordinate circular distance is at most one.
pub fn is_adjacent(v: &Codeword, w: &Codeword, params: &CycleParams) -> Result<bool> {
    for x in [v, w] {
        if x.len() != params.d() {
            return Err(Error::LengthMismatch {
                expected: params.d(),
                found: x.len(),
            });
        }
    }
    if v == w {
        return Err(Error::SelfAdjacency);
    }
    Ok(within_unit_box(v.coords(), w.coords(), params.p()))
}

/// Pairwise check straight from the adjacency definition. Quadratic, and
/// deliberately independent of any neighbor tables used elsewhere.
pub fn is_independent_set(s: &CodeSet) -> bool {
    first_adjacent_pair(s).is_none()
}

/// The first adjacent pair found, in set order.
pub fn first_adjacent_pair(s: &CodeSet) -> Option<(Codeword, Codeword)> {
    let p = s.params().p();
    let words: Vec<&Codeword> = s.iter().collect();
    for (i, a) in words.iter().enumerate() {
        for b in &words[i + 1..] {
            if within_unit_box(a.coords(), b.coords(), p) {
                return Some(((*a).clone(), (*b).clone()));
            }
        }
    }
    None
}

/// The unweighted conflict graph on all `p^d` codewords, vertex `i` being
/// the codeword with index `i`.
pub fn full_graph(params: &CycleParams, limit: u128) -> Result<WeightedGraph> {
    let n = params.checked_size(limit)?;
    let mut g = WeightedGraph::new(vec![1; n]);
    let mut coords = vec![0u8; params.d()];
    for v in 0..n {
        params.coords_of(v, &mut coords);
        params.for_each_neighbor(&coords, |u| {
            if u > v {
                g.add_edge(v, u);
            }
        });
    }
    Ok(g)
}

/// `α(C_p^d)` by exact search on the full graph, guarded by
/// [`ORACLE_LIMIT`].
pub fn brute_force_alpha(params: &CycleParams) -> Result<u64> {
    brute_force_alpha_with_limit(params, ORACLE_LIMIT)
}

pub fn brute_force_alpha_with_limit(params: &CycleParams, limit: u128) -> Result<u64> {
    let g = full_graph(params, limit)?;
    let out = exact::max_weight_is(&g, &Budget::unlimited());
    debug_assert!(out.optimal);
    Ok(out.solution.weight())
}
