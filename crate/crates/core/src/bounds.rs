//! Bounds on `G(d, p) = α(C_p^d)` and on the Shannon capacity of odd
//! cycles.
//!
//! Lower bounds come from exact small values, the recursive constructions
//! `G(d,p) >= 1 + G(d,p-2) (p^d - 2^d) / (p-2)^d` and
//! `G(d,p) >= G(d1,p) G(d-d1,p)`, and cited or verified constructions.
//! Upper bounds come from `G(d,p) <= floor(p/2 · G(d-1,p))`, the Lovász
//! theta value `θ(p)^d`, and cited exact values.
//!
//! Every cell records which rule produced each end of its interval, using
//! the one-letter keys below.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};

/// Provenance of a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Key {
    /// `G(1,p) = floor(p/2)`, `G(2,p) = floor((p^2-p)/4)`.
    A,
    /// Growth from `p - 2`.
    B,
    /// Product of lower dimensions.
    C,
    /// `floor(p/2 · G(d-1,p))`.
    D,
    /// Baumert et al., Theorem 3.
    E,
    /// Baumert et al., Theorem 4.
    F,
    /// Baumert et al., Theorem 6.
    G,
    /// Vesel and Žerovnik.
    H,
    /// Bohman, Holzman and Natarajan.
    I,
    /// Lovász theta.
    J,
    /// Symmetric constructions verified by this crate's certificates.
    K,
}

impl Key {
    pub fn letter(self) -> char {
        match self {
            Key::A => 'a',
            Key::B => 'b',
            Key::C => 'c',
            Key::D => 'd',
            Key::E => 'e',
            Key::F => 'f',
            Key::G => 'g',
            Key::H => 'h',
            Key::I => 'i',
            Key::J => 'j',
            Key::K => 'k',
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// `floor(p/2)` for `d = 1`, `floor((p^2-p)/4)` for `d = 2` (odd `p`).
pub fn key_a(p: u64, d: u32) -> Result<u64> {
    match d {
        1 => Ok(p / 2),
        2 => Ok((p * p - p) / 4),
        _ => Err(Error::InvalidParams(format!("key a needs d in {{1,2}}, got {d}"))),
    }
}

/// `ceil(1 + g_prev (p^d - 2^d) / (p-2)^d)`, with `g_prev` a lower bound on
/// `G(d, p-2)`. Exact integer arithmetic.
pub fn key_b(p: u64, d: u32, g_prev: u64) -> Result<u64> {
    if p < 5 {
        return Err(Error::InvalidParams(format!("key b needs p >= 5, got {p}")));
    }
    let pd = BigUint::from(p).pow(d);
    let two = BigUint::from(2u32).pow(d);
    let den = BigUint::from(p - 2).pow(d);
    let num = BigUint::from(g_prev) * (pd - two);
    let q = (&num + &den - 1u32) / &den;
    let v: u64 = (q + 1u32)
        .try_into()
        .map_err(|_| Error::InvalidParams("key b overflows u64".into()))?;
    Ok(v)
}

/// Product construction: `g1 · g2`.
pub fn key_c(d: u32, d1: u32, g1: u64, g2: u64) -> Result<u64> {
    if d1 == 0 || d1 >= d {
        return Err(Error::InvalidParams(format!("key c needs 1 <= d1 < d, got d1={d1}, d={d}")));
    }
    g1.checked_mul(g2)
        .ok_or_else(|| Error::InvalidParams("key c overflows u64".into()))
}

/// `floor(p · g_prev / 2)`, with `g_prev` an upper bound on `G(d-1, p)`.
pub fn key_d(p: u64, g_prev: u64) -> u64 {
    p * g_prev / 2
}

/// `θ(p) = p cos(π/p) / (1 + cos(π/p))`, the Lovász theta of `C_p` for
/// odd `p`.
pub fn lovasz_theta(p: u32) -> f64 {
    let c = (std::f64::consts::PI / p as f64).cos();
    p as f64 * c / (1.0 + c)
}

/// Relative error allowance for the double-precision theta value.
pub const THETA_REL_ERR: f64 = 1e-13;

/// `floor(θ(p)^d)`. Values within the error allowance below an integer are
/// rounded up to it, which can only loosen the upper bound.
pub fn key_j(p: u32, d: u32) -> Result<u64> {
    if p < 5 || p % 2 == 0 {
        return Err(Error::InvalidParams(format!("key j needs odd p >= 5, got {p}")));
    }
    let x = lovasz_theta(p).powi(d as i32);
    Ok((x * (1.0 + THETA_REL_ERR * (d as f64 + 1.0))).floor() as u64)
}

/// `alpha^(1/d)`.
pub fn capacity_lower_bound(alpha: u64, d: u32) -> f64 {
    (alpha as f64).powf(1.0 / d as f64)
}

/// A non-negative decimal `mantissa / 10^scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimal {
    pub mantissa: u64,
    pub scale: u32,
}

impl Decimal {
    pub fn to_f64(self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }
}

impl std::str::FromStr for Decimal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("not a decimal: {s:?}"));
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let mantissa = format!("{int}{frac}").parse().map_err(|_| bad())?;
        Ok(Decimal {
            mantissa,
            scale: frac.len() as u32,
        })
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let div = 10u64.pow(self.scale);
        if self.scale == 0 {
            write!(f, "{}", self.mantissa)
        } else {
            write!(
                f,
                "{}.{:0width$}",
                self.mantissa / div,
                self.mantissa % div,
                width = self.scale as usize
            )
        }
    }
}

/// Exact test of `alpha^(1/d) > t`, i.e. `t^d < alpha`.
pub fn root_exceeds(alpha: u64, d: u32, t: Decimal) -> bool {
    let lhs = BigUint::from(t.mantissa).pow(d);
    let rhs = BigUint::from(alpha) * BigUint::from(10u32).pow(t.scale * d);
    lhs < rhs
}

/// `θ(p) < t`, with the double-precision value padded by its error
/// allowance.
pub fn theta_below(p: u32, t: Decimal) -> bool {
    lovasz_theta(p) * (1.0 + THETA_REL_ERR) < t.to_f64()
}

/// Largest `t` with `scale` decimals and `t^d <= alpha`, i.e. `alpha^(1/d)`
/// rounded down; the flag says whether the inequality is strict.
pub fn root_floor(alpha: u64, d: u32, scale: u32) -> (Decimal, bool) {
    let approx = capacity_lower_bound(alpha, d) * 10f64.powi(scale as i32);
    let mut m = approx.floor() as u64 + 1;
    let holds = |m: u64| {
        BigUint::from(m).pow(d) <= BigUint::from(alpha) * BigUint::from(10u32).pow(scale * d)
    };
    while !holds(m) {
        m -= 1;
    }
    while holds(m + 1) {
        m += 1;
    }
    let t = Decimal { mantissa: m, scale };
    (t, root_exceeds(alpha, d, t))
}

/// Smallest `t` with `scale` decimals and `θ(p) < t`, θ rounded up.
pub fn theta_ceil(p: u32, scale: u32) -> Decimal {
    let mut m = (lovasz_theta(p) * 10f64.powi(scale as i32)).floor() as u64;
    while !theta_below(p, Decimal { mantissa: m, scale }) {
        m += 1;
    }
    Decimal { mantissa: m, scale }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnownEntry {
    pub p: u32,
    pub d: u32,
    pub lower: Option<(u64, Key)>,
    pub upper: Option<(u64, Key)>,
    pub source: &'static str,
}

/// Reference values that the formulas cannot reproduce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnownValues {
    entries: Vec<KnownEntry>,
}

impl KnownValues {
    pub fn empty() -> Self {
        KnownValues { entries: Vec::new() }
    }

    /// Cited values plus the four symmetric constructions shipped as
    /// certificates.
    pub fn published() -> Self {
        let lit = |p, d, lower, upper, source| KnownEntry {
            p,
            d,
            lower,
            upper,
            source,
        };
        KnownValues {
            entries: vec![
                lit(5, 3, None, Some((10, Key::F)), "Baumert et al. 1971, Theorem 4"),
                lit(7, 3, Some((33, Key::F)), Some((33, Key::F)), "Baumert et al. 1971, Theorem 4"),
                lit(9, 3, Some((81, Key::E)), None, "Baumert et al. 1971, Theorem 3"),
                lit(11, 3, Some((148, Key::E)), None, "Baumert et al. 1971, Theorem 3"),
                lit(13, 3, Some((247, Key::G)), None, "Baumert et al. 1971, Theorem 6"),
                lit(13, 3, None, Some((247, Key::I)), "Bohman, Holzman, Natarajan 2013"),
                lit(7, 4, Some((108, Key::H)), None, "Vesel and Zerovnik 2002"),
                lit(7, 5, Some((350, Key::K)), None, "certificate G(5,7)"),
                lit(11, 4, Some((748, Key::K)), None, "certificate G(4,11)"),
                lit(13, 4, Some((1534, Key::K)), None, "certificate G(4,13)"),
                lit(15, 3, Some((381, Key::K)), None, "certificate G(3,15)"),
            ],
        }
    }

    /// Adds or strengthens a verified lower bound (key k).
    pub fn add_verified(&mut self, p: u32, d: u32, size: u64, source: &'static str) {
        self.entries.push(KnownEntry {
            p,
            d,
            lower: Some((size, Key::K)),
            upper: None,
            source,
        });
    }

    pub fn entries(&self) -> &[KnownEntry] {
        &self.entries
    }

    fn best_lower(&self, p: u32, d: u32) -> Option<(u64, Key)> {
        pick(self.entries.iter().filter(|e| e.p == p && e.d == d).filter_map(|e| e.lower), |a, b| a > b)
    }

    fn best_upper(&self, p: u32, d: u32) -> Option<(u64, Key)> {
        pick(self.entries.iter().filter(|e| e.p == p && e.d == d).filter_map(|e| e.upper), |a, b| a < b)
    }
}

/// First candidate that is strictly better than all earlier ones wins, so
/// list order encodes the tie preference.
fn pick(cands: impl IntoIterator<Item = (u64, Key)>, better: impl Fn(u64, u64) -> bool) -> Option<(u64, Key)> {
    let mut best: Option<(u64, Key)> = None;
    for c in cands {
        if best.is_none_or(|b| better(c.0, b.0)) {
            best = Some(c);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundsCell {
    pub p: u32,
    pub d: u32,
    pub lower: u64,
    pub upper: u64,
    pub lower_key: Key,
    pub upper_key: Key,
}

impl BoundsCell {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

impl fmt::Display for BoundsCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}{}{}", self.lower_key, self.lower, self.upper_key)
        } else {
            write!(f, "{}{}-{}{}", self.lower_key, self.lower, self.upper, self.upper_key)
        }
    }
}

/// Cells for every odd `p` and every `d` in the given ranges, in row-major
/// order.
pub fn assemble_table(known: &KnownValues, ps: &[u32], ds: &[u32]) -> Result<Vec<BoundsCell>> {
    if let Some(&p) = ps.iter().find(|&&p| p < 5 || p % 2 == 0) {
        return Err(Error::InvalidParams(format!("table rows need odd p >= 5, got {p}")));
    }
    if ds.contains(&0) {
        return Err(Error::InvalidParams("dimension 0 in table range".into()));
    }
    let max_p = ps.iter().copied().max().unwrap_or(5);
    let max_d = ds.iter().copied().max().unwrap_or(1);
    // every odd row from 3 up, every dimension from 1 up
    let mut cells: BTreeMap<(u32, u32), BoundsCell> = BTreeMap::new();
    for p in (3..=max_p).step_by(2) {
        for d in 1..=max_d {
            let cell = if p == 3 {
                // C_3^d is complete
                BoundsCell {
                    p,
                    d,
                    lower: 1,
                    upper: 1,
                    lower_key: Key::A,
                    upper_key: Key::A,
                }
            } else {
                compute_cell(known, &cells, p, d)?
            };
            if cell.lower > cell.upper {
                return Err(Error::Contract(format!(
                    "G({d},{p}): lower bound {} exceeds upper bound {}",
                    cell.lower, cell.upper
                )));
            }
            cells.insert((p, d), cell);
        }
    }
    Ok(ps
        .iter()
        .flat_map(|&p| ds.iter().map(move |&d| (p, d)))
        .map(|k| cells[&k])
        .collect())
}

fn compute_cell(known: &KnownValues, cells: &BTreeMap<(u32, u32), BoundsCell>, p: u32, d: u32) -> Result<BoundsCell> {
    let pu = p as u64;
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    if d <= 2 {
        let a = key_a(pu, d)?;
        lowers.push((a, Key::A));
        uppers.push((a, Key::A));
    }
    lowers.extend(known.best_lower(p, d));
    uppers.extend(known.best_upper(p, d));
    let product = (1..d)
        .map(|d1| {
            let g1 = cells[&(p, d1)].lower;
            let g2 = cells[&(p, d - d1)].lower;
            key_c(d, d1, g1, g2)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(&c) = product.iter().max() {
        lowers.push((c, Key::C));
    }
    lowers.push((key_b(pu, d, cells[&(p - 2, d)].lower)?, Key::B));
    if d >= 2 {
        uppers.push((key_d(pu, cells[&(p, d - 1)].upper), Key::D));
    }
    uppers.push((key_j(p, d)?, Key::J));

    let (lower, lower_key) = pick(lowers, |a, b| a > b).expect("key b always applies");
    let (upper, upper_key) = pick(uppers, |a, b| a < b).expect("key j always applies");
    Ok(BoundsCell {
        p,
        d,
        lower,
        upper,
        lower_key,
        upper_key,
    })
}

/// Capacity interval for one odd cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityLine {
    pub p: u32,
    /// The table cell whose `lower^(1/d)` is largest.
    pub alpha: u64,
    pub d: u32,
    pub lower: f64,
    pub upper: f64,
}

impl CapacityLine {
    pub fn lower_decimal(&self, scale: u32) -> (Decimal, bool) {
        root_floor(self.alpha, self.d, scale)
    }

    pub fn upper_decimal(&self, scale: u32) -> Decimal {
        theta_ceil(self.p, scale)
    }
}

/// Best lower bound `G(d,p)^(1/d)` among the cells of row `p`, ties to the
/// smaller `d`, with the theta upper bound.
pub fn capacity_line(cells: &[BoundsCell], p: u32) -> Option<CapacityLine> {
    let mut best: Option<&BoundsCell> = None;
    for c in cells.iter().filter(|c| c.p == p) {
        let better = match best {
            None => true,
            // a^(1/da) > b^(1/db)  <=>  a^db > b^da
            Some(b) => BigUint::from(c.lower).pow(b.d) > BigUint::from(b.lower).pow(c.d),
        };
        if better {
            best = Some(c);
        }
    }
    best.map(|c| CapacityLine {
        p,
        alpha: c.lower,
        d: c.d,
        lower: capacity_lower_bound(c.lower, c.d),
        upper: lovasz_theta(p),
    })
}

/// Plain-text table: one row per `p`, then the capacity lines.
pub fn render_table(cells: &[BoundsCell], ps: &[u32], ds: &[u32]) -> String {
    let width = cells.iter().map(|c| c.to_string().len()).max().unwrap_or(1).max(3);
    let mut out = format!("{:>4}", "p\\d");
    for d in ds {
        out.push_str(&format!("  {:>width$}", d));
    }
    out.push('\n');
    for &p in ps {
        out.push_str(&format!("{p:>4}"));
        for &d in ds {
            if let Some(c) = cells.iter().find(|c| c.p == p && c.d == d) {
                out.push_str(&format!("  {:>width$}", c.to_string()));
            }
        }
        out.push('\n');
    }
    out.push('\n');
    for &p in ps {
        if let Some(line) = capacity_line(cells, p) {
            let (lo, strict) = line.lower_decimal(4);
            let hi = line.upper_decimal(4);
            out.push_str(&format!(
                "c(C_{p}) {} {lo}  ({}^(1/{}))    c(C_{p}) < {hi}  (theta)\n",
                if strict { ">" } else { ">=" },
                line.alpha,
                line.d
            ));
        }
    }
    out
}
