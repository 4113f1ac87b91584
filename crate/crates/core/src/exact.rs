//! Exact maximum-weight independent set.
//!
//! Two searches share one bitset representation of the conflict graph:
//!
//! * a branch-and-bound that bounds each node by a greedy clique cover of
//!   the candidate set (every clique of the conflict graph contributes at
//!   most its heaviest member), with vertices branched in reverse cover
//!   order;
//! * a Russian-doll search that solves the suffixes `v_i, ..., v_{n-1}`
//!   from the back and bounds any partial solution by the already solved
//!   suffix optimum of its smallest remaining candidate, combined with the
//!   same clique-cover bound.
//!
//! Vertex order is non-increasing `weight / (degree + 1)`, ties broken by
//! an optional caller-supplied key and then by vertex id, so a given input
//! always produces the same solution.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::automorphism::GraphSymmetry;
use crate::bits::Bits;
use crate::error::{Error, Result};

/// Undirected conflict graph with positive integer vertex weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    weights: Vec<u64>,
    adj: Vec<Bits>,
}

impl WeightedGraph {
    /// Graph without edges. Zero weights are bumped to one.
    pub fn new(weights: Vec<u64>) -> Self {
        let n = weights.len();
        WeightedGraph {
            weights: weights.into_iter().map(|w| w.max(1)).collect(),
            adj: vec![Bits::new(n); n],
        }
    }

    pub fn from_edges(weights: Vec<u64>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = WeightedGraph::new(weights);
        for &(u, v) in edges {
            if u == v {
                return Err(Error::Contract(format!("self-loop at vertex {u}")));
            }
            if u >= g.n() || v >= g.n() {
                return Err(Error::Contract(format!("edge ({u}, {v}) out of range")));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, v: usize) -> u64 {
        self.weights[v]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert_ne!(u, v, "self-loops are not allowed");
        self.adj[u].set(v);
        self.adj[v].set(u);
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].get(v)
    }

    pub fn neighbors(&self, v: usize) -> &Bits {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Bits::count).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// True if no two listed vertices are adjacent. Duplicates count as
    /// a violation.
    pub fn is_independent(&self, vertices: &[usize]) -> bool {
        let mut seen = Bits::new(self.n());
        for &v in vertices {
            if v >= self.n() || seen.get(v) || self.adj[v].intersects(&seen) {
                return false;
            }
            seen.set(v);
        }
        true
    }

    /// Edge-list text: header `n m`, then `n` weight lines, then `m` lines
    /// `u v` with 1-based vertex numbers.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.edge_count());
        for w in &self.weights {
            out.push_str(&format!("{w}\n"));
        }
        for (u, v) in self.edges() {
            out.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let nums = |line: usize, l: &str| -> Result<Vec<u64>> {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<u64>()
                        .map_err(|_| Error::parse(line, format!("expected integer, found {t:?}")))
                })
                .collect()
        };
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let h = nums(hl, header)?;
        if h.len() != 2 {
            return Err(Error::parse(hl, "header must be `n m`"));
        }
        let (n, m) = (h[0] as usize, h[1] as usize);
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| Error::parse(hl, "fewer weight lines than n"))?;
            let w = nums(ln, l)?;
            if w.len() != 1 || w[0] == 0 {
                return Err(Error::parse(ln, "weight line must hold one positive integer"));
            }
            weights.push(w[0]);
        }
        let mut g = WeightedGraph::new(weights);
        for _ in 0..m {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| Error::parse(hl, "fewer edge lines than m"))?;
            let e = nums(ln, l)?;
            if e.len() != 2 {
                return Err(Error::parse(ln, "edge line must be `u v`"));
            }
            let (u, v) = (e[0] as usize, e[1] as usize);
            if u == 0 || v == 0 || u > n || v > n {
                return Err(Error::parse(ln, format!("vertex out of range 1..={n}")));
            }
            if u == v {
                return Err(Error::parse(ln, "self-loop"));
            }
            g.add_edge(u - 1, v - 1);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::parse(ln, "trailing data after m edge lines"));
        }
        Ok(g)
    }
}

/// An independent vertex set with its total weight.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Solution {
    vertices: Vec<usize>,
    weight: u64,
}

impl Solution {
    pub fn empty() -> Self {
        Solution::default()
    }

    /// Validates independence and computes the weight.
    pub fn new(g: &WeightedGraph, mut vertices: Vec<usize>) -> Result<Self> {
        vertices.sort_unstable();
        if !g.is_independent(&vertices) {
            return Err(Error::Contract("vertex set is not independent".into()));
        }
        let weight = vertices.iter().map(|&v| g.weight(v)).sum();
        Ok(Solution { vertices, weight })
    }

    pub(crate) fn from_trusted(g: &WeightedGraph, mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        debug_assert!(g.is_independent(&vertices));
        let weight = vertices.iter().map(|&v| g.weight(v)).sum();
        Solution { vertices, weight }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    /// Checks the invariants against `g` from scratch.
    pub fn is_valid_for(&self, g: &WeightedGraph) -> bool {
        g.is_independent(&self.vertices)
            && self.vertices.iter().map(|&v| g.weight(v)).sum::<u64>() == self.weight
    }
}

/// Search limits; whichever is hit first stops the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn nodes(n: u64) -> Self {
        Budget {
            max_nodes: Some(n),
            time_limit: None,
        }
    }

    pub fn time(t: Duration) -> Self {
        Budget {
            max_nodes: None,
            time_limit: Some(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub solution: Solution,
    /// Set only when the search tree was exhausted.
    pub optimal: bool,
    pub nodes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Russian-doll for larger instances, plain branch-and-bound below a
    /// small size threshold.
    #[default]
    Auto,
    BranchAndBound,
    RussianDoll,
}

const RUSSIAN_DOLL_MIN: usize = 64;

/// Options beyond the budget.
#[derive(Debug, Clone, Default)]
pub struct SolveOptions<'a> {
    pub strategy: Strategy,
    /// Secondary ordering key per original vertex, applied after the
    /// weight/degree ratio and before the vertex id.
    pub tie_keys: Option<&'a [u64]>,
    /// A known solution to start from. It is used only when it is valid
    /// and lies inside the vertex set being solved.
    pub incumbent: Option<&'a Solution>,
    /// Automorphism orbits of the whole graph. Used only together with an
    /// incumbent, and ignored by restricted solves.
    pub symmetry: Option<&'a GraphSymmetry>,
}

pub fn max_weight_is(g: &WeightedGraph, budget: &Budget) -> SolveOutcome {
    let all: Vec<usize> = (0..g.n()).collect();
    solve_subset(g, &all, budget, &SolveOptions::default())
}

pub fn max_weight_is_with(g: &WeightedGraph, budget: &Budget, opts: &SolveOptions) -> SolveOutcome {
    let all: Vec<usize> = (0..g.n()).collect();
    solve_subset(g, &all, budget, opts)
}

/// Best extension of `fixed` by vertices drawn from `candidates`.
///
/// `fixed` must be independent and no candidate may conflict with it. The
/// returned solution always contains `fixed`.
pub fn max_weight_is_restricted(
    g: &WeightedGraph,
    fixed: &Solution,
    candidates: &[usize],
    budget: &Budget,
    opts: &SolveOptions,
) -> Result<SolveOutcome> {
    if !fixed.is_valid_for(g) {
        return Err(Error::Contract("fixed set is not a valid solution".into()));
    }
    let mut fixed_bits = Bits::new(g.n());
    for &v in fixed.vertices() {
        fixed_bits.set(v);
    }
    let mut cand: Vec<usize> = candidates.to_vec();
    cand.sort_unstable();
    cand.dedup();
    for &c in &cand {
        if c >= g.n() {
            return Err(Error::Contract(format!("candidate {c} out of range")));
        }
        if fixed_bits.get(c) || g.neighbors(c).intersects(&fixed_bits) {
            return Err(Error::Contract(format!(
                "candidate {c} is in or conflicts with the fixed set"
            )));
        }
    }
    let ext = solve_subset(g, &cand, budget, opts);
    let mut all = fixed.vertices().to_vec();
    all.extend_from_slice(ext.solution.vertices());
    Ok(SolveOutcome {
        solution: Solution::from_trusted(g, all),
        optimal: ext.optimal,
        nodes: ext.nodes,
    })
}

/// Greedy by non-increasing weight, ties by vertex id.
pub fn greedy(g: &WeightedGraph) -> Solution {
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.weight(v)), v));
    greedy_in_order(g, &order)
}

/// Adds vertices in the given order whenever they fit.
pub fn greedy_in_order(g: &WeightedGraph, order: &[usize]) -> Solution {
    let mut blocked = Bits::new(g.n());
    let mut chosen = Vec::new();
    for &v in order {
        if !blocked.get(v) {
            chosen.push(v);
            blocked.set(v);
            blocked.or_assign(g.neighbors(v));
        }
    }
    Solution::from_trusted(g, chosen)
}

/// Exhaustive subset enumeration, for testing.
pub const BRUTE_FORCE_LIMIT: usize = 24;

pub fn brute_force_mwis(g: &WeightedGraph) -> Result<Solution> {
    let n = g.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::too_large("n", n as u128, BRUTE_FORCE_LIMIT as u128));
    }
    let masks: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, u| m | 1 << u))
        .collect();
    let mut best = (0u64, 0u32);
    for subset in 0u32..(1u32 << n) {
        let mut ok = true;
        let mut w = 0;
        let mut rest = subset;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if masks[v] & subset != 0 {
                ok = false;
                break;
            }
            w += g.weight(v);
        }
        if ok && w > best.0 {
            best = (w, subset);
        }
    }
    let verts = (0..n).filter(|&v| best.1 >> v & 1 == 1).collect();
    Ok(Solution::from_trusted(g, verts))
}

/// The induced subgraph on `vertices`, re-indexed in search order.
pub(crate) struct Sub {
    pub(crate) weights: Vec<u64>,
    pub(crate) adj: Vec<Bits>,
    pub(crate) orig: Vec<usize>,
}

impl Sub {
    /// The vertices `lo..hi` in the same order.
    pub(crate) fn interval(&self, lo: usize, hi: usize) -> Sub {
        let adj = (lo..hi)
            .map(|v| {
                let mut row = Bits::new(hi - lo);
                for u in self.adj[v].iter().filter(|&u| (lo..hi).contains(&u)) {
                    row.set(u - lo);
                }
                row
            })
            .collect();
        Sub {
            weights: self.weights[lo..hi].to_vec(),
            adj,
            orig: self.orig[lo..hi].to_vec(),
        }
    }

    pub(crate) fn new(g: &WeightedGraph, vertices: &[usize], tie_keys: Option<&[u64]>) -> Self {
        let mut member = Bits::new(g.n());
        for &v in vertices {
            member.set(v);
        }
        let deg: Vec<u64> = vertices
            .iter()
            .map(|&v| {
                let mut row = g.neighbors(v).clone();
                row.and_assign(&member);
                row.count() as u64
            })
            .collect();
        let mut pos: Vec<usize> = (0..vertices.len()).collect();
        pos.sort_by(|&a, &b| {
            let (va, vb) = (vertices[a], vertices[b]);
            // w_a/(deg_a+1) > w_b/(deg_b+1), compared without division
            let lhs = g.weight(va) as u128 * (deg[b] + 1) as u128;
            let rhs = g.weight(vb) as u128 * (deg[a] + 1) as u128;
            rhs.cmp(&lhs)
                .then_with(|| match tie_keys {
                    Some(k) => k[va].cmp(&k[vb]),
                    None => std::cmp::Ordering::Equal,
                })
                .then(va.cmp(&vb))
        });
        let orig: Vec<usize> = pos.iter().map(|&i| vertices[i]).collect();
        let mut local = vec![usize::MAX; g.n()];
        for (i, &v) in orig.iter().enumerate() {
            local[v] = i;
        }
        let n = orig.len();
        let adj = orig
            .iter()
            .map(|&v| {
                let mut row = Bits::new(n);
                for u in g.neighbors(v).iter() {
                    if local[u] != usize::MAX {
                        row.set(local[u]);
                    }
                }
                row
            })
            .collect();
        let weights = orig.iter().map(|&v| g.weight(v)).collect();
        Sub { weights, adj, orig }
    }

    fn n(&self) -> usize {
        self.weights.len()
    }
}

pub(crate) struct Aborted;

/// Prefix length up to which whole-group lexicographic pruning is tried.
const LEX_DEPTH: usize = 8;
/// Most images of the tiling segment checked for starvation.
const MAX_IMAGES: usize = 64;

pub(crate) struct Search<'a> {
    sub: &'a Sub,
    max_nodes: u64,
    deadline: Option<Instant>,
    pub(crate) nodes: u64,
    pub(crate) best_weight: u64,
    pub(crate) best: Vec<usize>,
    current: Vec<usize>,
    /// Russian-doll suffix optima; `suffix[i]` bounds any solution inside
    /// `{i, ..., n-1}`.
    suffix: Vec<u64>,
    /// Stop as soon as `best_weight` reaches this value.
    cap: u64,
    /// Weight of a known solution of the whole instance.
    floor: u64,
    /// Whether each vertex is the first of its automorphism orbit; empty
    /// when no symmetry is used.
    representative: Vec<bool>,
    /// Automorphisms in search indices, when listed.
    elements: Vec<Vec<u32>>,
    /// Inverses of `elements`.
    inverses: Vec<Vec<u32>>,
    /// First vertex of each vertex's orbit, in search indices.
    orbit_first: Vec<u32>,
    /// Per depth, the elements fixing every chosen vertex; empty when
    /// lexicographic pruning is off at that depth.
    stabilizer: Vec<Vec<u32>>,
    /// For each vertex, the elements mapping it to the smallest chosen
    /// vertex; empty when whole-group pruning is off.
    toward: Vec<Vec<u32>>,
    image_buf: Vec<u32>,
    /// Length of an initial segment whose images under the full group tile
    /// the vertices; 0 when none is used.
    block: usize,
    /// Number of tiles.
    tiles: u64,
    /// Distinct images of the segment, the segment itself first, and the
    /// images containing each vertex.
    images: Vec<Bits>,
    images_of: Vec<Vec<u32>>,
    /// Chosen weight in each image.
    image_weight: Vec<u64>,
    block_cap: u64,
    heaviest: u64,
    order_buf: Vec<Vec<usize>>,
    bound_buf: Vec<Vec<u64>>,
    /// Scratch for `suffix_cover`: common neighbourhood and heaviest
    /// member of each open clique.
    cover_common: Vec<Bits>,
    cover_heavy: Vec<u64>,
    /// Index intervals bounded separately; empty when unused. Zone of
    /// each vertex, and the optimum of its zone restricted to `{v, ...}`.
    zone_of: Vec<u32>,
    zone_suffix: Vec<u64>,
}

impl<'a> Search<'a> {
    pub(crate) fn new(sub: &'a Sub, budget: &Budget) -> Self {
        Search {
            sub,
            max_nodes: budget.max_nodes.unwrap_or(u64::MAX),
            deadline: budget.time_limit.map(|t| Instant::now() + t),
            nodes: 0,
            best_weight: 0,
            best: Vec::new(),
            current: Vec::new(),
            suffix: Vec::new(),
            cap: u64::MAX,
            floor: 0,
            representative: Vec::new(),
            elements: Vec::new(),
            inverses: Vec::new(),
            orbit_first: Vec::new(),
            stabilizer: Vec::new(),
            toward: Vec::new(),
            image_buf: Vec::new(),
            block: 0,
            tiles: 0,
            images: Vec::new(),
            images_of: Vec::new(),
            image_weight: Vec::new(),
            block_cap: u64::MAX,
            heaviest: sub.weights.iter().copied().max().unwrap_or(0),
            order_buf: Vec::new(),
            bound_buf: Vec::new(),
            cover_common: Vec::new(),
            cover_heavy: Vec::new(),
            zone_of: Vec::new(),
            zone_suffix: Vec::new(),
        }
    }

    #[inline]
    fn tick(&mut self) -> std::result::Result<(), Aborted> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Aborted);
        }
        if self.nodes & 1023 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(Aborted);
                }
            }
        }
        Ok(())
    }

    /// Greedy clique cover of `p`, heaviest-first within each clique.
    /// Fills `order` class by class and `bound` with the cumulative sum of
    /// class maxima up to each vertex's class.
    fn clique_cover(&self, p: &Bits, order: &mut Vec<usize>, bound: &mut Vec<u64>) {
        order.clear();
        bound.clear();
        let mut rest = p.clone();
        let mut q = Bits::new(self.sub.n());
        let mut total = 0u64;
        while !rest.is_empty() {
            q.clone_from(&rest);
            let mut heaviest = 0;
            let start = order.len();
            while let Some(v) = q.first() {
                order.push(v);
                heaviest = heaviest.max(self.sub.weights[v]);
                rest.clear(v);
                q.clear(v);
                q.and_assign(&self.sub.adj[v]);
            }
            total += heaviest;
            bound.extend(std::iter::repeat_n(total, order.len() - start));
        }
    }

    /// `order` lists `p` ascending and `bound[k]` bounds the weight of any
    /// independent set inside `{order[k], order[k+1], ...}`. Cliques are
    /// grown first-fit from the top index down, so every suffix is covered
    /// by the cliques opened so far. With zones, each zone gets its own
    /// cover, capped by the zone's suffix optimum, and the zone bounds add
    /// up; the solved suffix table caps the result.
    fn suffix_cover(&mut self, p: &Bits, order: &mut Vec<usize>, bound: &mut Vec<u64>) {
        order.clear();
        order.extend(p.iter());
        bound.clear();
        bound.resize(order.len(), 0);
        let zoned = !self.zone_of.is_empty();
        let mut zone = u32::MAX;
        // bound for the candidates in later zones
        let mut rest = 0;
        let mut open = 0;
        let mut total = 0u64;
        for k in (0..order.len()).rev() {
            let v = order[k];
            if zoned && self.zone_of[v] != zone {
                zone = self.zone_of[v];
                rest = bound.get(k + 1).copied().unwrap_or(0);
                open = 0;
                total = 0;
            }
            let w = self.sub.weights[v];
            match (0..open).find(|&c| self.cover_common[c].get(v)) {
                Some(c) => {
                    self.cover_common[c].and_assign(&self.sub.adj[v]);
                    if w > self.cover_heavy[c] {
                        total += w - self.cover_heavy[c];
                        self.cover_heavy[c] = w;
                    }
                }
                None => {
                    if open == self.cover_common.len() {
                        self.cover_common.push(Bits::new(self.sub.n()));
                        self.cover_heavy.push(0);
                    }
                    self.cover_common[open].clone_from(&self.sub.adj[v]);
                    self.cover_heavy[open] = w;
                    open += 1;
                    total += w;
                }
            }
            let local = if zoned { rest + total.min(self.zone_suffix[v]) } else { total };
            bound[k] = local.min(self.suffix[v]);
        }
    }

    /// True if some listed element maps the chosen vertices plus `v` onto
    /// a set that sorts lexicographically below them. Any set extending
    /// them then has a smaller image too, because adding members only
    /// lowers the sorted sequence of an image. Only elements taking a
    /// chosen vertex to the smallest one can win, since no candidate has an
    /// orbit reaching below it.
    fn has_smaller_image(&mut self, v: usize) -> bool {
        let mut buf = std::mem::take(&mut self.image_buf);
        let chosen = &self.current;
        let mut found = false;
        'outer: for &x in chosen.iter().chain(std::iter::once(&v)) {
            for &e in &self.toward[x] {
                let g = &self.elements[e as usize];
                buf.clear();
                buf.extend(chosen.iter().map(|&y| g[y]));
                buf.push(g[v]);
                buf.sort_unstable();
                let smaller = buf
                    .iter()
                    .zip(chosen.iter().chain(std::iter::once(&v)))
                    .find(|(&a, &b)| a as usize != b)
                    .is_some_and(|(&a, &b)| (a as usize) < b);
                if smaller {
                    found = true;
                    break 'outer;
                }
            }
        }
        self.image_buf = buf;
        found
    }

    fn record_if_better(&mut self, weight: u64) {
        if weight > self.best_weight {
            self.best_weight = weight;
            self.best.clone_from(&self.current);
        }
    }

    fn branch_and_bound(&mut self, mut p: Bits, weight: u64, depth: usize) -> std::result::Result<(), Aborted> {
        self.tick()?;
        if p.is_empty() {
            self.record_if_better(weight);
            return Ok(());
        }
        if self.order_buf.len() <= depth {
            self.order_buf.push(Vec::new());
            self.bound_buf.push(Vec::new());
        }
        let mut order = std::mem::take(&mut self.order_buf[depth]);
        let mut bound = std::mem::take(&mut self.bound_buf[depth]);
        self.clique_cover(&p, &mut order, &mut bound);
        let mut result = Ok(());
        for i in (0..order.len()).rev() {
            if weight + bound[i] <= self.best_weight || self.best_weight >= self.cap {
                break;
            }
            let v = order[i];
            p.clear(v);
            let mut next = p.clone();
            next.and_not_assign(&self.sub.adj[v]);
            self.current.push(v);
            result = self.branch_and_bound(next, weight + self.sub.weights[v], depth + 1);
            self.current.pop();
            if result.is_err() {
                break;
            }
        }
        self.order_buf[depth] = order;
        self.bound_buf[depth] = bound;
        result
    }

    fn russian_doll_node(&mut self, mut p: Bits, weight: u64, depth: usize) -> std::result::Result<(), Aborted> {
        self.tick()?;
        let Some(first) = p.first() else {
            self.record_if_better(weight);
            return Ok(());
        };
        if weight + self.suffix[first] <= self.best_weight {
            return Ok(());
        }
        if self.block_cap != u64::MAX && self.starved_image(&p) {
            return Ok(());
        }
        if self.order_buf.len() <= depth {
            self.order_buf.push(Vec::new());
            self.bound_buf.push(Vec::new());
        }
        let mut order = std::mem::take(&mut self.order_buf[depth]);
        let mut bound = std::mem::take(&mut self.bound_buf[depth]);
        self.suffix_cover(&p, &mut order, &mut bound);
        let mut result = Ok(());
        if weight + bound[0] > self.best_weight {
            // Branch in index order so the remaining candidates always sit in
            // a solved suffix.
            if self.stabilizer.len() <= depth + 1 {
                self.stabilizer.resize(depth + 2, Vec::new());
            }
            let stab = std::mem::take(&mut self.stabilizer[depth]);
            for (&v, &covered) in order.iter().zip(bound.iter()) {
                if weight + covered <= self.best_weight || self.best_weight >= self.cap {
                    break;
                }
                p.clear(v);
                // An element fixing the chosen vertices and moving `v` lower
                // gives a lexicographically smaller image of every set
                // extended by `v`.
                if stab.iter().any(|&e| self.elements[e as usize][v] < v as u32) {
                    continue;
                }
                let tiled = self.block_cap != u64::MAX;
                if v < self.block && self.image_weight[0] + self.sub.weights[v] > self.block_cap {
                    continue;
                }
                if !self.toward.is_empty() && self.current.len() < LEX_DEPTH && self.has_smaller_image(v) {
                    continue;
                }
                let mut child = std::mem::take(&mut self.stabilizer[depth + 1]);
                child.clear();
                if stab.len() > 1 {
                    child.extend(stab.iter().copied().filter(|&e| self.elements[e as usize][v] == v as u32));
                }
                self.stabilizer[depth + 1] = child;
                let mut next = p.clone();
                next.and_not_assign(&self.sub.adj[v]);
                self.current.push(v);
                if tiled {
                    for &t in &self.images_of[v] {
                        self.image_weight[t as usize] += self.sub.weights[v];
                    }
                }
                result = self.russian_doll_node(next, weight + self.sub.weights[v], depth + 1);
                if tiled {
                    for &t in &self.images_of[v] {
                        self.image_weight[t as usize] -= self.sub.weights[v];
                    }
                }
                self.current.pop();
                if result.is_err() {
                    break;
                }
            }
            self.stabilizer[depth] = stab;
        }
        self.order_buf[depth] = order;
        self.bound_buf[depth] = bound;
        result
    }

    /// True if some tile can no longer reach the block's weight. The chosen
    /// image puts the least weight into the block, so every other tile must
    /// end up at least as heavy.
    /// Whether some image of the segment can no longer reach the
    /// segment's weight, which the least image of a solution forbids.
    fn starved_image(&self, p: &Bits) -> bool {
        let need = self.image_weight[0];
        self.images.iter().zip(&self.image_weight).skip(1).any(|(mask, &have)| {
            have + p.intersection_count(mask) as u64 * self.heaviest < need
        })
    }

    /// Splits the search order into the interval `[0, b)` followed by
    /// intervals of two tiles each, and solves every interval on its own
    /// for its suffix optima. Neighbouring tiles interact, so pairing them
    /// gives tighter bounds than single tiles.
    fn use_zones(&mut self, b: usize) {
        let n = self.sub.n();
        let mut starts = vec![0];
        starts.extend((b..n).step_by(2 * b));
        starts.push(n);
        self.zone_of = vec![0; n];
        self.zone_suffix = vec![0; n];
        for (z, w) in starts.windows(2).enumerate() {
            let (lo, hi) = (w[0], w[1]);
            let zone = self.sub.interval(lo, hi);
            let mut inner = Search::new(&zone, &Budget::unlimited());
            inner.run_russian_doll();
            for v in lo..hi {
                self.zone_of[v] = z as u32;
                self.zone_suffix[v] = inner.suffix[v - lo];
            }
        }
    }

    /// Sets up orbit skipping and, when the group is small enough to list,
    /// lexicographic pruning. If an initial segment of the search order has
    /// images tiling the vertices, pruning uses only the elements that keep
    /// that segment in place, and the segment's weight is capped.
    fn use_symmetry(&mut self, sym: &GraphSymmetry) {
        let n = self.sub.n();
        let orig = &self.sub.orig;
        let Some(listed) = sym.elements() else {
            let mut first = vec![u32::MAX; sym.orbit_count()];
            self.orbit_first = orig
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let f = &mut first[sym.orbit_of(v)];
                    *f = (*f).min(i as u32);
                    *f
                })
                .collect();
            self.representative = self.orbit_first.iter().enumerate().map(|(i, &f)| f as usize == i).collect();
            return;
        };
        let mut local = vec![0u32; orig.len().max(sym.n())];
        for (i, &v) in orig.iter().enumerate() {
            local[v] = i as u32;
        }
        let mut elements: Vec<Vec<u32>> = listed
            .iter()
            .map(|perm| orig.iter().map(|&v| local[perm[v] as usize]).collect())
            .collect();
        if let Some((b, tile_of)) = tiling_block(&elements, n) {
            let mut home = Bits::new(n);
            (0..b).for_each(|v| home.set(v));
            let mut seen = std::collections::HashSet::from([home.clone()]);
            self.images = vec![home];
            for g in &elements {
                if self.images.len() == MAX_IMAGES {
                    break;
                }
                let mut image = Bits::new(n);
                g[..b].iter().for_each(|&x| image.set(x as usize));
                if seen.insert(image.clone()) {
                    self.images.push(image);
                }
            }
            self.images_of = vec![Vec::new(); n];
            for (t, mask) in self.images.iter().enumerate() {
                for v in mask.iter() {
                    self.images_of[v].push(t as u32);
                }
            }
            self.image_weight = vec![0; self.images.len()];
            elements.retain(|g| g[..b].iter().all(|&x| (x as usize) < b));
            self.block = b;
            self.tiles = (n / b) as u64;
            if tile_of.iter().enumerate().all(|(v, &t)| t as usize == v / b) {
                self.use_zones(b);
            }
        }
        // the listed elements form a group, so images of v are its orbit
        self.orbit_first = (0..n)
            .map(|v| elements.iter().map(|g| g[v]).min().unwrap_or(v as u32))
            .collect();
        self.representative = self.orbit_first.iter().enumerate().map(|(i, &f)| f as usize == i).collect();
        self.inverses = elements
            .iter()
            .map(|perm| {
                let mut inv = vec![0u32; n];
                for (a, &b) in perm.iter().enumerate() {
                    inv[b as usize] = a as u32;
                }
                inv
            })
            .collect();
        self.elements = elements;
    }

    pub(crate) fn run_branch_and_bound(&mut self) -> bool {
        let n = self.sub.n();
        self.branch_and_bound(Bits::full(n), 0, 0).is_ok()
    }

    /// Computes the suffix optima from the last vertex backwards.
    ///
    /// With orbit representatives set, a vertex that is not the first of its
    /// orbit is skipped once the suffix bound has reached the best known
    /// solution: an improving solution has an image whose smallest vertex
    /// is a representative, and representatives then search for any
    /// improvement rather than for one beating the suffix bound.
    pub(crate) fn run_russian_doll(&mut self) -> bool {
        let n = self.sub.n();
        self.suffix = vec![0; n + 1];
        let min_weight = self.sub.weights.iter().copied().min().unwrap_or(1);
        let max_weight = self.sub.weights.iter().copied().max().unwrap_or(1);
        let mut later = Bits::new(n);
        let mut next = n;
        while next > 0 {
            let i = next - 1;
            next = i;
            let w = self.sub.weights[i];
            let previous = self.suffix[i + 1];
            let cap = previous + w;
            let known = self.floor.max(self.best_weight);
            let threshold = if !self.representative.is_empty() && previous >= known {
                if !self.representative[i] {
                    self.suffix[i] = cap;
                    later.set(i);
                    continue;
                }
                known
            } else if self.floor > previous && self.floor - previous <= min_weight {
                // only solutions beating the known one matter, and the
                // suffix bound may be rounded up to it
                self.floor
            } else {
                previous
            };
            // lexicographic pruning is sound only while looking for any
            // improvement, and leaves just the trivial suffix bound
            let pruned = !self.representative.is_empty() && previous >= known;
            // Some image of an improving solution, trimmed to weight at most
            // known + max weight, puts no more than its share into the block.
            self.block_cap = if pruned && self.block > 0 {
                (known + max_weight) / self.tiles
            } else {
                u64::MAX
            };
            self.image_weight.iter_mut().for_each(|t| *t = 0);
            if self.block > 0 {
                for &t in &self.images_of[i] {
                    self.image_weight[t as usize] = w;
                }
            }
            if i < self.block && w > self.block_cap {
                self.suffix[i] = cap;
                later.set(i);
                continue;
            }
            let mut p = later.clone();
            p.and_not_assign(&self.sub.adj[i]);
            if pruned && !self.orbit_first.is_empty() {
                // the smallest vertex of a least image lies below every
                // vertex in the orbits of its members
                for u in later.iter() {
                    if (self.orbit_first[u] as usize) < i {
                        p.clear(u);
                    }
                }
            }
            let saved_best = std::mem::take(&mut self.best);
            let saved_weight = self.best_weight;
            let mut status = Ok(());
            if self.stabilizer.is_empty() {
                self.stabilizer.push(Vec::new());
            }
            self.stabilizer[0].clear();
            self.toward.clear();
            if pruned && self.elements.len() > 1 {
                let fixing: Vec<u32> = (0..self.elements.len() as u32)
                    .filter(|&e| self.elements[e as usize][i] == i as u32)
                    .collect();
                if fixing.len() > 1 {
                    self.stabilizer[0] = fixing;
                }
                self.toward = vec![Vec::new(); n];
                for (e, inv) in self.inverses.iter().enumerate() {
                    self.toward[inv[i] as usize].push(e as u32);
                }
            }
            if threshold < cap {
                self.best_weight = threshold;
                // the pruning rules assume the current known value, so a
                // pruned pass stops at its first improvement and reruns
                self.cap = if pruned { threshold + 1 } else { cap };
                self.current.clear();
                self.current.push(i);
                status = self.russian_doll_node(p, w, 0);
                self.current.clear();
            }
            if threshold < cap && self.best_weight > threshold {
                self.suffix[i] = self.best_weight.max(previous);
            } else {
                self.suffix[i] = threshold.max(previous).min(cap);
                self.best = saved_best;
                self.best_weight = saved_weight;
            }
            if pruned {
                self.suffix[i] = cap;
            }
            self.toward.clear();
            if status.is_err() {
                self.cap = u64::MAX;
                return false;
            }
            if pruned && self.best_weight > saved_weight.max(self.floor) {
                next = i + 1;
                continue;
            }
            later.set(i);
        }
        self.cap = u64::MAX;
        true
    }
}

/// Longest proper initial segment of the search order that some of its
/// images partition the vertices with, and the tile of each vertex. Found
/// greedily, so a tiling may be missed but never invented.
fn tiling_block(elements: &[Vec<u32>], n: usize) -> Option<(usize, Vec<u32>)> {
    (2..n).rev().filter(|b| n % b == 0).find_map(|b| {
        let mut tile_of = vec![u32::MAX; n];
        tile_of[..b].iter_mut().for_each(|t| *t = 0);
        for t in 1..(n / b) as u32 {
            let u = tile_of.iter().position(|&x| x == u32::MAX)?;
            let g = elements.iter().find(|g| {
                g[..b].iter().any(|&x| x as usize == u) && g[..b].iter().all(|&x| tile_of[x as usize] == u32::MAX)
            })?;
            for &x in &g[..b] {
                tile_of[x as usize] = t;
            }
        }
        Some((b, tile_of))
    })
}

fn solve_subset(g: &WeightedGraph, vertices: &[usize], budget: &Budget, opts: &SolveOptions) -> SolveOutcome {
    if vertices.is_empty() {
        return SolveOutcome {
            solution: Solution::empty(),
            optimal: true,
            nodes: 0,
        };
    }
    let sub = Sub::new(g, vertices, opts.tie_keys);
    let n = sub.n();
    let mut search = Search::new(&sub, budget);

    let strategy = match opts.strategy {
        Strategy::Auto if n >= RUSSIAN_DOLL_MIN => Strategy::RussianDoll,
        Strategy::Auto => Strategy::BranchAndBound,
        s => s,
    };
    // greedy incumbent in search order
    let seed: Vec<usize> = {
        let order: Vec<usize> = (0..n).collect();
        let mut blocked = Bits::new(n);
        let mut out = Vec::new();
        for v in order {
            if !blocked.get(v) {
                out.push(v);
                blocked.set(v);
                blocked.or_assign(&sub.adj[v]);
            }
        }
        out
    };
    let mut greedy_weight: u64 = seed.iter().map(|&v| sub.weights[v]).sum();
    let mut seed = seed;
    if let Some(known) = opts.incumbent {
        let local: Option<Vec<usize>> = known
            .vertices()
            .iter()
            .map(|&v| sub.orig.iter().position(|&o| o == v))
            .collect();
        if let Some(local) = local {
            if known.is_valid_for(g) && known.weight() > greedy_weight {
                greedy_weight = known.weight();
                seed = local;
            }
        }
    }

    let (optimal, local) = match strategy {
        Strategy::RussianDoll => {
            search.floor = greedy_weight;
            let symmetric = match (opts.symmetry, opts.incumbent) {
                (Some(sym), Some(_)) if n == g.n() && sym.n() == g.n() && !sym.is_trivial() => {
                    search.use_symmetry(sym);
                    true
                }
                _ => false,
            };
            let done = search.run_russian_doll();
            // without skipped vertices the suffix table bounds the instance
            let proven = done && (symmetric || search.suffix[0] <= search.best_weight.max(greedy_weight));
            if search.best_weight >= greedy_weight && !search.best.is_empty() {
                (proven, search.best.clone())
            } else {
                (proven, seed)
            }
        }
        _ => {
            search.best_weight = greedy_weight;
            search.best = seed;
            let done = search.run_branch_and_bound();
            (done, search.best.clone())
        }
    };
    let verts = local.iter().map(|&i| sub.orig[i]).collect();
    SolveOutcome {
        solution: Solution::from_trusted(g, verts),
        optimal,
        nodes: search.nodes,
    }
}
