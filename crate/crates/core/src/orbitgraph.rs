//! The weighted instance obtained by prescribing a group.
//!
//! Vertices are the admissible orbits (orbits that are themselves
//! independent in `C_p^d`), weighted by orbit size. Two vertices are joined
//! when their orbits cannot coexist, i.e. some codeword of one is adjacent
//! to some codeword of the other. An independent set of this conflict graph
//! expands to an independent set of `C_p^d` whose size is the total weight.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Solution, WeightedGraph};
use crate::symmetry::{automorphism_generators, Group, GroupElement, Orbit, OrbitPartition};
use crate::torus::{lee_distance, within_unit_box, CodeSet, Codeword, CycleParams};

/// Most orbit vertices a graph may have. Adjacency is stored densely, so
/// memory grows with the square of this; the default costs about 300 MB.
pub const VERTEX_LIMIT: usize = 50_000;

/// True if no two distinct members of the orbit are adjacent.
pub fn is_admissible(orbit: &Orbit, params: &CycleParams) -> bool {
    let m = orbit.members();
    let p = params.p();
    m.iter()
        .enumerate()
        .all(|(i, a)| m[i + 1..].iter().all(|b| !within_unit_box(a.coords(), b.coords(), p)))
}

/// Conflict test for two distinct orbits of the same group.
///
/// Conflicts are invariant under the group, so one member of `o1` against
/// all of `o2` decides it.
pub fn orbits_conflict(o1: &Orbit, o2: &Orbit, params: &CycleParams) -> bool {
    let v = o1.representative();
    o2.members()
        .iter()
        .any(|w| w != v && within_unit_box(v.coords(), w.coords(), params.p()))
}

/// Every pair, no group assumption.
pub fn orbits_conflict_naive(o1: &Orbit, o2: &Orbit, params: &CycleParams) -> bool {
    o1.members().iter().any(|v| {
        o2.members()
            .iter()
            .any(|w| v != w && within_unit_box(v.coords(), w.coords(), params.p()))
    })
}

/// Least coordinate-sum circular distance over pairs, one codeword from each
/// orbit. Orbits must come from the same group.
pub fn orbit_distance(o1: &Orbit, o2: &Orbit, params: &CycleParams) -> u32 {
    let v = o1.representative();
    o2.members()
        .iter()
        .map(|w| lee_distance(v.coords(), w.coords(), params.p()))
        .min()
        .unwrap_or(u32::MAX)
}

pub fn orbit_distance_naive(o1: &Orbit, o2: &Orbit, params: &CycleParams) -> u32 {
    o1.members()
        .iter()
        .flat_map(|v| o2.members().iter().map(move |w| lee_distance(v.coords(), w.coords(), params.p())))
        .min()
        .unwrap_or(u32::MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphDiagnostics {
    pub codewords: usize,
    pub orbits: usize,
    pub admissible: usize,
    pub inadmissible: usize,
    pub edges: usize,
    pub total_weight: u64,
}

#[derive(Debug, Clone)]
pub struct OrbitGraph {
    group: Group,
    partition: OrbitPartition,
    /// Orbit id of each vertex.
    vertex_orbit: Vec<usize>,
    /// Vertex of each orbit, `None` for inadmissible ones.
    orbit_vertex: Vec<Option<usize>>,
    /// Member coordinates of vertex `v`, `d` bytes per member.
    coords: Vec<Vec<u8>>,
    graph: WeightedGraph,
    diagnostics: GraphDiagnostics,
}

impl OrbitGraph {
    /// Enumerates orbits (subject to `limit` on `p^d`), drops inadmissible
    /// ones and joins conflicting pairs.
    pub fn build(group: &Group, limit: u128) -> Result<Self> {
        let params = *group.params();
        let d = params.d();
        let partition = OrbitPartition::compute(group, limit)?;
        let mut buf = vec![0u8; d];

        let mut orbit_vertex = vec![None; partition.len()];
        let mut vertex_orbit = Vec::new();
        for o in 0..partition.len() {
            let admissible = partition.members(o).iter().all(|&m| {
                params.coords_of(m as usize, &mut buf);
                let mut clash = false;
                params.for_each_neighbor(&buf, |u| clash |= partition.orbit_id(u) == o);
                !clash
            });
            if admissible {
                orbit_vertex[o] = Some(vertex_orbit.len());
                vertex_orbit.push(o);
            }
        }

        if vertex_orbit.len() > VERTEX_LIMIT {
            return Err(Error::too_large("orbit vertices", vertex_orbit.len() as u128, VERTEX_LIMIT as u128));
        }
        let weights = vertex_orbit.iter().map(|&o| partition.members(o).len() as u64).collect();
        let mut graph = WeightedGraph::new(weights);
        let mut coords = Vec::with_capacity(vertex_orbit.len());
        for (v, &o) in vertex_orbit.iter().enumerate() {
            let mut flat = Vec::with_capacity(partition.members(o).len() * d);
            for &m in partition.members(o) {
                params.coords_of(m as usize, &mut buf);
                flat.extend_from_slice(&buf);
                params.for_each_neighbor(&buf, |u| {
                    if let Some(w) = orbit_vertex[partition.orbit_id(u)] {
                        if w > v {
                            graph.add_edge(v, w);
                        }
                    }
                });
            }
            coords.push(flat);
        }

        let diagnostics = GraphDiagnostics {
            codewords: params.size() as usize,
            orbits: partition.len(),
            admissible: vertex_orbit.len(),
            inadmissible: partition.len() - vertex_orbit.len(),
            edges: graph.edge_count(),
            total_weight: graph.total_weight(),
        };
        Ok(OrbitGraph {
            group: group.clone(),
            partition,
            vertex_orbit,
            orbit_vertex,
            coords,
            graph,
            diagnostics,
        })
    }

    pub fn params(&self) -> &CycleParams {
        self.group.params()
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn diagnostics(&self) -> &GraphDiagnostics {
        &self.diagnostics
    }

    pub fn orbit(&self, v: usize) -> Orbit {
        self.partition.to_orbit(self.vertex_orbit[v])
    }

    pub fn representative(&self, v: usize) -> Codeword {
        let d = self.params().d();
        Codeword::from_raw(self.coords[v][..d].to_vec())
    }

    /// Vertex whose orbit contains `w`, if that orbit is admissible.
    pub fn vertex_of(&self, w: &Codeword) -> Option<usize> {
        if w.len() != self.params().d() || w.coords().iter().any(|&c| c as u32 >= self.params().p()) {
            return None;
        }
        self.orbit_vertex[self.partition.orbit_id(w.index(self.params()))]
    }

    /// Orbit distance between two vertices.
    pub fn distance(&self, u: usize, v: usize) -> u32 {
        if u == v {
            return 0;
        }
        let d = self.params().d();
        let p = self.params().p();
        let anchor = &self.coords[u][..d];
        self.coords[v]
            .chunks_exact(d)
            .map(|w| lee_distance(anchor, w, p))
            .min()
            .unwrap_or(u32::MAX)
    }

    /// The permutation of vertices induced by `h`, if `h` maps every
    /// orbit onto an orbit.
    pub fn vertex_permutation(&self, h: &GroupElement) -> Option<Vec<usize>> {
        let params = *self.params();
        let d = params.d();
        let mut img = vec![0u8; d];
        let mut perm = Vec::with_capacity(self.n());
        for v in 0..self.n() {
            let mut target = None;
            for w in self.coords[v].chunks_exact(d) {
                h.apply_coords(w, &mut img);
                let o = self.partition.orbit_id(params.index_of(&img));
                if *target.get_or_insert(o) != o {
                    return None;
                }
            }
            perm.push(self.orbit_vertex[target?]?);
        }
        Some(perm)
    }

    /// Vertex permutations induced by those generators of the torus
    /// automorphism group that permute the orbits.
    pub fn symmetry_generators(&self) -> Vec<Vec<usize>> {
        automorphism_generators(self.params())
            .iter()
            .filter_map(|h| self.vertex_permutation(h))
            .filter(|perm| perm.iter().enumerate().any(|(i, &j)| i != j))
            .collect()
    }

    /// Union of the orbits of the chosen vertices.
    pub fn expand(&self, s: &Solution) -> CodeSet {
        let d = self.params().d();
        let mut set = CodeSet::empty(*self.params());
        for &v in s.vertices() {
            for w in self.coords[v].chunks_exact(d) {
                set.insert(Codeword::from_raw(w.to_vec()))
                    .expect("orbit members conform to the parameters");
            }
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{max_weight_is, Budget};
    use crate::symmetry::{all_orbits, GroupElement, ORBIT_LIMIT};
    use crate::torus::{brute_force_alpha, is_independent_set};

    fn params(p: u32, d: usize) -> CycleParams {
        CycleParams::new(p, d).unwrap()
    }

    fn cyclic(ps: &CycleParams, b: &[u64]) -> Group {
        Group::cyclic(ps, GroupElement::translation(ps, b).unwrap()).unwrap()
    }

    fn cw(v: &[u8], ps: &CycleParams) -> Codeword {
        Codeword::new(v.to_vec(), ps).unwrap()
    }

    #[test]
    fn admissibility_examples() {
        let ps = params(5, 2);
        let single = Group::trivial(&ps).orbit_of(&cw(&[3, 3], &ps));
        assert!(is_admissible(&single, &ps));

        let ps = params(7, 5);
        let g = cyclic(&ps, &[0, 1, 1, 5, 1]);
        assert!(is_admissible(&g.orbit_of(&cw(&[0, 5, 6, 6, 0], &ps)), &ps));
        // every multiple k*b has a coordinate at distance >= 2, so the zero
        // orbit is admissible too
        assert!(is_admissible(&g.orbit_of(&cw(&[0, 0, 0, 0, 0], &ps)), &ps));
        let h = cyclic(&ps, &[0, 1, 1, 1, 1]);
        assert!(!is_admissible(&h.orbit_of(&cw(&[0, 0, 0, 0, 0], &ps)), &ps));
    }

    #[test]
    fn conflict_examples() {
        let ps = params(5, 2);
        let t = Group::trivial(&ps);
        let o = |v: &[u8]| t.orbit_of(&cw(v, &ps));
        assert!(orbits_conflict(&o(&[0, 0]), &o(&[1, 1]), &ps));
        assert!(!orbits_conflict(&o(&[0, 0]), &o(&[2, 2]), &ps));
    }

    #[test]
    fn distance_examples() {
        let ps = params(5, 2);
        let t = Group::trivial(&ps);
        let a = t.orbit_of(&cw(&[0, 0], &ps));
        let b = t.orbit_of(&cw(&[2, 1], &ps));
        assert_eq!(orbit_distance(&a, &a, &ps), 0);
        assert_eq!(orbit_distance(&a, &b, &ps), 3);

        let ps = params(7, 5);
        let g = cyclic(&ps, &[0, 1, 1, 5, 1]);
        let a = g.orbit_of(&cw(&[0, 5, 6, 6, 0], &ps));
        let b = g.orbit_of(&cw(&[0, 0, 6, 6, 0], &ps));
        assert_eq!(orbit_distance(&a, &b, &ps), orbit_distance_naive(&a, &b, &ps));
        assert_eq!(orbit_distance(&a, &b, &ps), orbit_distance(&b, &a, &ps));
    }

    #[test]
    fn build_matches_definitions() {
        for (p, d, b) in [(5u32, 2usize, vec![1u64, 2]), (7, 2, vec![0, 0]), (6, 3, vec![2, 0, 4]), (7, 3, vec![1, 2, 3])] {
            let ps = params(p, d);
            let grp = cyclic(&ps, &b);
            let g = OrbitGraph::build(&grp, ORBIT_LIMIT).unwrap();
            let orbits = all_orbits(&grp, ORBIT_LIMIT).unwrap();
            let admissible: Vec<&Orbit> = orbits.iter().filter(|o| is_admissible(o, &ps)).collect();
            assert_eq!(g.n(), admissible.len());
            assert_eq!(g.diagnostics().inadmissible, orbits.len() - admissible.len());
            for u in 0..g.n() {
                assert_eq!(&g.orbit(u), admissible[u]);
                for v in 0..g.n() {
                    if u != v {
                        let naive = orbits_conflict_naive(admissible[u], admissible[v], &ps);
                        assert_eq!(g.graph().has_edge(u, v), naive);
                        assert_eq!(orbits_conflict(admissible[u], admissible[v], &ps), naive);
                        assert_eq!(g.distance(u, v), orbit_distance_naive(admissible[u], admissible[v], &ps));
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_group_recovers_alpha() {
        for (p, d) in [(5u32, 2usize), (7, 2), (5, 3)] {
            let ps = params(p, d);
            let g = OrbitGraph::build(&Group::trivial(&ps), ORBIT_LIMIT).unwrap();
            assert_eq!(g.n(), ps.size() as usize);
            let best = max_weight_is(g.graph(), &Budget::unlimited());
            assert_eq!(best.solution.weight(), brute_force_alpha(&ps).unwrap());
            let set = g.expand(&best.solution);
            assert!(is_independent_set(&set));
            assert_eq!(set.len() as u64, best.solution.weight());
        }
    }

    #[test]
    fn vertex_lookup() {
        let ps = params(7, 5);
        let g = OrbitGraph::build(&cyclic(&ps, &[0, 1, 1, 5, 1]), ORBIT_LIMIT).unwrap();
        let v = g.vertex_of(&cw(&[0, 5, 6, 6, 0], &ps)).unwrap();
        assert!(g.orbit(v).contains(&cw(&[0, 5, 6, 6, 0], &ps)));
        assert_eq!(g.diagnostics().orbits, 2401);
        assert_eq!(g.diagnostics().inadmissible, 0);
        let h = OrbitGraph::build(&cyclic(&ps, &[0, 1, 1, 1, 1]), ORBIT_LIMIT).unwrap();
        assert_eq!(h.vertex_of(&cw(&[0, 0, 0, 0, 0], &ps)), None);
        assert_eq!(h.n(), 0);
    }

    #[test]
    fn too_many_vertices_is_refused() {
        let ps = params(15, 4);
        assert!(matches!(
            OrbitGraph::build(&Group::trivial(&ps), ORBIT_LIMIT),
            Err(Error::InstanceTooLarge { size: 50_625, .. })
        ));
    }
}
