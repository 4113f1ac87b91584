//! Symmetries of `C_p^d`.
//!
//! For `p > 3` the automorphism group is the wreath product `D_p ≀ S_d` of
//! order `(2p)^d · d!`. An element permutes coordinates and then applies a
//! map `x -> a x + b (mod p)` with `a = ±1` to each coordinate separately.
//!
//! Only subgroups generated by a few elements are handled, in practice one
//! element: the search prescribes cyclic groups.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{CycleParams, Codeword};

/// Upper bound on group sizes materialized element by element.
pub const GROUP_LIMIT: usize = 1 << 20;

/// Upper bound on `|Aut(C_p^d)|` for the `full` generator enumeration.
pub const FULL_ENUMERATION_LIMIT: u128 = 5_000_000;

/// Default size guard for orbit enumeration.
pub const ORBIT_LIMIT: u128 = 10_000_000;

/// `w[perm[j]] = signs[perm[j]] * v[j] + offsets[perm[j]] (mod p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    p: u32,
    perm: Vec<usize>,
    signs: Vec<i8>,
    offsets: Vec<u8>,
}

impl GroupElement {
    pub fn new(params: &CycleParams, perm: Vec<usize>, signs: Vec<i8>, offsets: Vec<u8>) -> Result<Self> {
        let d = params.d();
        if perm.len() != d || signs.len() != d || offsets.len() != d {
            return Err(Error::InvalidParams(format!(
                "group element components must have length {d}"
            )));
        }
        let mut seen = vec![false; d];
        for &j in &perm {
            if j >= d || seen[j] {
                return Err(Error::InvalidParams(format!("{perm:?} is not a permutation")));
            }
            seen[j] = true;
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParams("signs must be +1 or -1".into()));
        }
        if let Some(&b) = offsets.iter().find(|&&b| b as u32 >= params.p()) {
            return Err(Error::ResidueOutOfRange {
                value: b as u64,
                p: params.p(),
            });
        }
        Ok(GroupElement {
            p: params.p(),
            perm,
            signs,
            offsets,
        })
    }

    pub fn identity(params: &CycleParams) -> Self {
        let d = params.d();
        GroupElement {
            p: params.p(),
            perm: (0..d).collect(),
            signs: vec![1; d],
            offsets: vec![0; d],
        }
    }

    /// Pure translation `v -> v + b`.
    pub fn translation(params: &CycleParams, offsets: &[u64]) -> Result<Self> {
        let d = params.d();
        if offsets.len() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                found: offsets.len(),
            });
        }
        let mut b = Vec::with_capacity(d);
        for &x in offsets {
            if x >= params.p() as u64 {
                return Err(Error::ResidueOutOfRange { value: x, p: params.p() });
            }
            b.push(x as u8);
        }
        GroupElement::new(params, (0..d).collect(), vec![1; d], b)
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn offsets(&self) -> &[u8] {
        &self.offsets
    }

    pub fn d(&self) -> usize {
        self.perm.len()
    }

    pub fn is_identity(&self) -> bool {
        self.is_translation() && self.offsets.iter().all(|&b| b == 0)
    }

    pub fn is_translation(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &j)| i == j) && self.signs.iter().all(|&s| s == 1)
    }

    #[inline]
    fn map_value(&self, k: usize, x: u8) -> u8 {
        let p = self.p as i32;
        (self.signs[k] as i32 * x as i32 + self.offsets[k] as i32).rem_euclid(p) as u8
    }

    /// Applies the element to raw coordinates.
    pub fn apply_coords(&self, v: &[u8], out: &mut [u8]) {
        for (j, &x) in v.iter().enumerate() {
            let k = self.perm[j];
            out[k] = self.map_value(k, x);
        }
    }

    pub fn apply(&self, v: &Codeword) -> Codeword {
        let mut out = vec![0u8; v.len()];
        self.apply_coords(v.coords(), &mut out);
        Codeword::from_raw(out)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let d = self.d();
        let p = self.p as i32;
        let mut perm = vec![0; d];
        let mut signs = vec![1; d];
        let mut offsets = vec![0; d];
        for j in 0..d {
            let m = other.perm[j];
            let k = self.perm[m];
            perm[j] = k;
            signs[k] = self.signs[k] * other.signs[m];
            offsets[k] = (self.signs[k] as i32 * other.offsets[m] as i32 + self.offsets[k] as i32).rem_euclid(p) as u8;
        }
        GroupElement {
            p: self.p,
            perm,
            signs,
            offsets,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let d = self.d();
        let p = self.p as i32;
        let mut perm = vec![0; d];
        let mut signs = vec![1; d];
        let mut offsets = vec![0; d];
        for j in 0..d {
            let k = self.perm[j];
            perm[k] = j;
            signs[j] = self.signs[k];
            offsets[j] = (-(self.signs[k] as i32) * self.offsets[k] as i32).rem_euclid(p) as u8;
        }
        GroupElement {
            p: self.p,
            perm,
            signs,
            offsets,
        }
    }

    pub fn pow(&self, k: u64) -> GroupElement {
        let mut acc = GroupElement {
            p: self.p,
            perm: (0..self.d()).collect(),
            signs: vec![1; self.d()],
            offsets: vec![0; self.d()],
        };
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            k >>= 1;
        }
        acc
    }

    /// Least `n >= 1` with `g^n = id`.
    pub fn order(&self) -> u64 {
        let mut n = 1;
        let mut acc = self.clone();
        while !acc.is_identity() {
            acc = acc.compose(self);
            n += 1;
        }
        n
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_translation() {
            let b: Vec<String> = self.offsets.iter().map(u8::to_string).collect();
            return write!(f, "({})", b.join(", "));
        }
        let parts: Vec<String> = (0..self.d())
            .map(|k| {
                let j = self.perm.iter().position(|&t| t == k).unwrap();
                let sign = if self.signs[k] < 0 { "-" } else { "" };
                format!("{sign}x{}+{}", j + 1, self.offsets[k])
            })
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Order of a translation: lcm over coordinates of `p / gcd(b_i, p)`.
pub fn translation_order(offsets: &[u8], p: u32) -> u64 {
    offsets
        .iter()
        .map(|&b| (p / gcd(b as u64, p as u64) as u32) as u64)
        .fold(1, lcm)
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// A finite subgroup of `Aut(C_p^d)` given by generators, with every
/// element listed. For one generator `g`, `elements[k] = g^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    params: CycleParams,
    generators: Vec<GroupElement>,
    elements: Vec<GroupElement>,
}

impl Group {
    pub fn trivial(params: &CycleParams) -> Self {
        let id = GroupElement::identity(params);
        Group {
            params: *params,
            generators: vec![id.clone()],
            elements: vec![id],
        }
    }

    pub fn cyclic(params: &CycleParams, generator: GroupElement) -> Result<Self> {
        check_element(params, &generator)?;
        let mut elements = vec![GroupElement::identity(params)];
        let mut acc = generator.clone();
        while !acc.is_identity() {
            if elements.len() >= GROUP_LIMIT {
                return Err(Error::too_large("group order", elements.len() as u128 + 1, GROUP_LIMIT as u128));
            }
            elements.push(acc.clone());
            acc = acc.compose(&generator);
        }
        Ok(Group {
            params: *params,
            generators: vec![generator],
            elements,
        })
    }

    /// Closure of several generators; an empty list gives the trivial group.
    pub fn generated(params: &CycleParams, generators: Vec<GroupElement>) -> Result<Self> {
        match generators.len() {
            0 => return Ok(Group::trivial(params)),
            1 => return Group::cyclic(params, generators.into_iter().next().unwrap()),
            _ => {}
        }
        for g in &generators {
            check_element(params, g)?;
        }
        let id = GroupElement::identity(params);
        let mut seen: HashSet<GroupElement> = HashSet::from([id.clone()]);
        let mut elements = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in &generators {
                let y = g.compose(&x);
                if seen.insert(y.clone()) {
                    if elements.len() >= GROUP_LIMIT {
                        return Err(Error::too_large("group order", elements.len() as u128 + 1, GROUP_LIMIT as u128));
                    }
                    elements.push(y.clone());
                    queue.push_back(y);
                }
            }
        }
        Ok(Group {
            params: *params,
            generators,
            elements,
        })
    }

    pub fn params(&self) -> &CycleParams {
        &self.params
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    /// The first generator.
    pub fn generator(&self) -> &GroupElement {
        &self.generators[0]
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    /// True if every generator is a translation.
    pub fn is_translation_group(&self) -> bool {
        self.generators.iter().all(GroupElement::is_translation)
    }

    pub fn orbit_of(&self, v: &Codeword) -> Orbit {
        let members: BTreeSet<Codeword> = self.elements.iter().map(|g| g.apply(v)).collect();
        Orbit {
            members: members.into_iter().collect(),
        }
    }
}

fn check_element(params: &CycleParams, g: &GroupElement) -> Result<()> {
    if g.p != params.p() || g.d() != params.d() {
        return Err(Error::InvalidParams(format!("group element {g} does not act on {params}")));
    }
    Ok(())
}

/// One orbit of codewords, members sorted so the first is the
/// lexicographically least.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Orbit {
    members: Vec<Codeword>,
}

impl Orbit {
    pub fn members(&self) -> &[Codeword] {
        &self.members
    }

    pub fn representative(&self) -> &Codeword {
        &self.members[0]
    }

    pub fn weight(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, v: &Codeword) -> bool {
        self.members.binary_search(v).is_ok()
    }
}

/// Orbits over all codewords in index form.
#[derive(Debug, Clone)]
pub struct OrbitPartition {
    params: CycleParams,
    orbit_of: Vec<u32>,
    /// Codeword indices of each orbit, ascending; orbits ordered by their
    /// least member.
    orbits: Vec<Vec<u32>>,
}

impl OrbitPartition {
    pub fn compute(group: &Group, limit: u128) -> Result<Self> {
        let params = *group.params();
        let n = params.checked_size(limit)?;
        let d = params.d();
        let mut orbit_of = vec![u32::MAX; n];
        let mut orbits = Vec::new();
        let mut v = vec![0u8; d];
        let mut w = vec![0u8; d];
        for start in 0..n {
            if orbit_of[start] != u32::MAX {
                continue;
            }
            let id = orbits.len() as u32;
            params.coords_of(start, &mut v);
            let mut members = Vec::with_capacity(group.order());
            for g in group.elements() {
                g.apply_coords(&v, &mut w);
                let idx = params.index_of(&w);
                if orbit_of[idx] == u32::MAX {
                    orbit_of[idx] = id;
                    members.push(idx as u32);
                }
            }
            members.sort_unstable();
            orbits.push(members);
        }
        Ok(OrbitPartition {
            params,
            orbit_of,
            orbits,
        })
    }

    pub fn params(&self) -> &CycleParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn orbit_id(&self, index: usize) -> usize {
        self.orbit_of[index] as usize
    }

    pub fn members(&self, orbit: usize) -> &[u32] {
        &self.orbits[orbit]
    }

    pub fn to_orbit(&self, orbit: usize) -> Orbit {
        Orbit {
            members: self.orbits[orbit]
                .iter()
                .map(|&i| Codeword::from_index(i as usize, &self.params))
                .collect(),
        }
    }
}

/// Every orbit of the group on `Z_p^d`, ordered by representative.
pub fn all_orbits(group: &Group, limit: u128) -> Result<Vec<Orbit>> {
    let part = OrbitPartition::compute(group, limit)?;
    Ok((0..part.len()).map(|i| part.to_orbit(i)).collect())
}

/// A generating set of `Aut(C_p^d)`: translation and negation of the
/// first coordinate plus two generators of `S_d`.
pub fn automorphism_generators(params: &CycleParams) -> Vec<GroupElement> {
    let d = params.d();
    let id = GroupElement::identity(params);
    let mut shift = id.clone();
    shift.offsets[0] = 1;
    let mut flip = id.clone();
    flip.signs[0] = -1;
    let mut gens = vec![shift, flip];
    if d > 1 {
        let mut swap = id.clone();
        swap.perm.swap(0, 1);
        let mut rotate = id.clone();
        rotate.perm = (0..d).map(|j| (j + 1) % d).collect();
        gens.push(swap);
        gens.push(rotate);
    }
    gens
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorMode {
    /// Pure translations only.
    Translations,
    /// Arbitrary elements of `D_p ≀ S_d`.
    Full,
}

impl std::str::FromStr for GeneratorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translations" => Ok(GeneratorMode::Translations),
            "full" => Ok(GeneratorMode::Full),
            other => Err(Error::InvalidParams(format!("unknown generator mode {other:?}"))),
        }
    }
}

/// Canonical offset vector of the translation class of `b`: the lexicographic
/// minimum over coprime powers, coordinate negations and coordinate
/// permutations.
pub fn canonical_translation(offsets: &[u8], p: u32) -> Vec<u8> {
    let order = translation_order(offsets, p);
    let mut best: Option<Vec<u8>> = None;
    for k in 1..=order {
        if gcd(k, order) != 1 {
            continue;
        }
        let mut v: Vec<u8> = offsets
            .iter()
            .map(|&b| {
                let x = ((b as u64 * k) % p as u64) as u32;
                x.min((p - x) % p) as u8
            })
            .collect();
        v.sort_unstable();
        if best.as_ref().is_none_or(|b| v < *b) {
            best = Some(v);
        }
    }
    best.unwrap_or_default()
}

/// Candidate cyclic-group generators, one per equivalence class, in
/// ascending canonical order. The identity (trivial group) always comes
/// first.
pub fn enumerate_generators(params: &CycleParams, mode: GeneratorMode) -> Result<Vec<GroupElement>> {
    match mode {
        GeneratorMode::Translations => {
            let n = params.checked_size(ORBIT_LIMIT)?;
            let mut classes = BTreeSet::new();
            let mut b = vec![0u8; params.d()];
            for idx in 0..n {
                params.coords_of(idx, &mut b);
                classes.insert(canonical_translation(&b, params.p()));
            }
            Ok(classes
                .into_iter()
                .map(|b| {
                    let d = params.d();
                    GroupElement::new(params, (0..d).collect(), vec![1; d], b).expect("canonical offsets are in range")
                })
                .collect())
        }
        GeneratorMode::Full => enumerate_full(params),
    }
}

/// Total order key placing translations first, then by sign pattern and
/// permutation.
fn element_key(g: &GroupElement) -> (Vec<usize>, Vec<i8>, Vec<u8>) {
    let signs = g.signs.iter().map(|&s| if s == 1 { 0 } else { 1 }).collect();
    (g.perm.clone(), signs, g.offsets.clone())
}

fn enumerate_full(params: &CycleParams) -> Result<Vec<GroupElement>> {
    let d = params.d();
    let p = params.p() as u128;
    let factorial: u128 = (1..=d as u128).product();
    let total = (2 * p).checked_pow(d as u32).and_then(|x| x.checked_mul(factorial)).unwrap_or(u128::MAX);
    if total > FULL_ENUMERATION_LIMIT {
        return Err(Error::too_large("|Aut(C_p^d)|", total, FULL_ENUMERATION_LIMIT));
    }
    // conjugators: a negation per coordinate and adjacent transpositions
    let id = GroupElement::identity(params);
    let mut conjugators = Vec::new();
    for k in 0..d {
        let mut neg = id.clone();
        neg.signs[k] = -1;
        conjugators.push(neg);
    }
    for k in 0..d.saturating_sub(1) {
        let mut swap = id.clone();
        swap.perm.swap(k, k + 1);
        conjugators.push(swap);
    }
    let all = Group::generated(params, automorphism_generators(params))?;
    let mut seen: HashSet<GroupElement> = HashSet::with_capacity(all.order());
    let mut reps = Vec::new();
    for g in all.elements() {
        if seen.contains(g) {
            continue;
        }
        let mut class = vec![g.clone()];
        seen.insert(g.clone());
        let mut i = 0;
        while i < class.len() {
            let x = class[i].clone();
            i += 1;
            let order = x.order();
            let mut images: Vec<GroupElement> = conjugators.iter().map(|c| c.compose(&x).compose(&c.inverse())).collect();
            for k in 2..order {
                if gcd(k, order) == 1 {
                    images.push(x.pow(k));
                }
            }
            for y in images {
                if seen.insert(y.clone()) {
                    class.push(y);
                }
            }
        }
        reps.push(class.into_iter().min_by_key(element_key).unwrap());
    }
    reps.sort_by_key(element_key);
    Ok(reps)
}
