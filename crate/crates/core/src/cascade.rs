//! Period-doubling cascade: saddle-node and flip parameters, the
//! Feigenbaum ratio and accumulation point, for `a − x²` and for Hénon at a
//! fixed `b`.
//!
//! A `p`-cycle is tracked across parameter values by natural continuation
//! (the previous cycle point seeds Newton at the next parameter). Crossings
//! of the dominant multiplier through `−1` (flip) or `+1` (saddle-node) are
//! then pinned down by bisection.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt17;
use crate::maps::{iterate, FamilyTag, Family, MapError, MapSystem, Point};
use crate::periodic::{newton_refine, orbit_multipliers, residual, NewtonFailure};

pub const CONTINUATION_STEP: f64 = 1e-3;
pub const DEFAULT_N_MAX: usize = 6;
pub const MAX_N_MAX: usize = 8;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_ITER: usize = 100;
const TRANSIENT: usize = 4000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CascadeError {
    #[error("no sign change of {quantity} in [{lo}, {hi}]")]
    Bracket { quantity: &'static str, lo: f64, hi: f64 },
    #[error("cycle refinement failed at a = {param}: {source}")]
    Refinement { param: f64, source: NewtonFailure },
    #[error("no {period}-cycle found at a = {param}")]
    NoCycle { period: usize, param: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// A one-parameter family swept in its first parameter `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CascadeFamily {
    Quadratic,
    Henon { b: f64 },
}

impl CascadeFamily {
    pub fn map_at(&self, a: f64) -> Result<MapSystem, MapError> {
        match *self {
            CascadeFamily::Quadratic => MapSystem::quadratic(a),
            CascadeFamily::Henon { b } => MapSystem::henon(a, b),
        }
    }

    pub fn tag(&self) -> FamilyTag {
        match self {
            CascadeFamily::Quadratic => FamilyTag::Quadratic,
            CascadeFamily::Henon { .. } => FamilyTag::Henon,
        }
    }

    pub fn from_family(f: Family) -> Result<Self, CascadeError> {
        match f {
            Family::Quadratic { .. } => Ok(CascadeFamily::Quadratic),
            Family::Henon { b, .. } => Ok(CascadeFamily::Henon { b }),
            other => Err(CascadeError::InvalidInput(format!(
                "no period-doubling cascade for {:?}",
                other.tag()
            ))),
        }
    }

    /// Starting points whose forward orbits settle on the attractor.
    fn attractor_starts(&self) -> Vec<Point> {
        match self {
            // the critical point lies in the immediate basin of any attracting cycle
            CascadeFamily::Quadratic => vec![Point::one(0.0), Point::one(0.1), Point::one(-0.1)],
            CascadeFamily::Henon { .. } => vec![
                Point::two(0.0, 0.0),
                Point::two(0.1, 0.1),
                Point::two(-0.1, 0.0),
                Point::two(0.3, -0.2),
            ],
        }
    }

    /// Newton seeds for fixed points, which lie on the diagonal for Hénon.
    fn fixed_point_seeds(&self) -> Vec<Point> {
        let ts = (0..=60).map(|i| -3.0 + 0.1 * i as f64);
        match self {
            CascadeFamily::Quadratic => ts.map(Point::one).collect(),
            CascadeFamily::Henon { .. } => ts.map(|t| Point::two(t, t)).collect(),
        }
    }
}

/// A refined cycle point with the multipliers of its cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleMultiplier {
    pub point: Point,
    pub multipliers: Vec<Complex64>,
}

impl CycleMultiplier {
    /// Real part of the largest-modulus multiplier.
    pub fn dominant_re(&self) -> f64 {
        self.multipliers[0].re
    }
}

/// Refines the `p`-cycle near `seed` and returns its multipliers.
pub fn cycle_multiplier(map: &MapSystem, p: usize, seed: Point) -> Result<CycleMultiplier, CascadeError> {
    let param = map.family().params()[0].1;
    let point = newton_refine(map, seed, p, NEWTON_TOL, NEWTON_ITER)
        .map_err(|source| CascadeError::Refinement { param, source })?;
    let multipliers = orbit_multipliers(map, point, p)?;
    Ok(CycleMultiplier { point, multipliers })
}

fn has_least_period(map: &MapSystem, x: Point, p: usize) -> bool {
    (1..p)
        .filter(|q| p.is_multiple_of(*q))
        .all(|q| residual(map, x, q).map(|r| r > 1e-8).unwrap_or(false))
}

/// Finds a `p`-cycle of least period `p` at parameter `a`: first from the
/// attractor, then from a grid of Newton seeds.
fn acquire_cycle(family: &CascadeFamily, a: f64, p: usize) -> Result<CycleMultiplier, CascadeError> {
    let map = family.map_at(a)?;
    for start in family.attractor_starts() {
        let Ok(settled) = iterate(&map, start, TRANSIENT * p.max(4)) else {
            continue;
        };
        if let Ok(c) = cycle_multiplier(&map, p, settled) {
            if has_least_period(&map, c.point, p) {
                return Ok(c);
            }
        }
    }
    for seed in family.fixed_point_seeds() {
        if let Ok(c) = cycle_multiplier(&map, p, seed) {
            if has_least_period(&map, c.point, p) {
                return Ok(c);
            }
        }
    }
    Err(CascadeError::NoCycle { period: p, param: a })
}

/// Follows a `p`-cycle from `(a0, x0)` to `a1`, halving the step on failure.
fn continue_cycle(
    family: &CascadeFamily,
    p: usize,
    a0: f64,
    x0: Point,
    a1: f64,
    step: f64,
) -> Result<CycleMultiplier, CascadeError> {
    let mut a = a0;
    let mut x = x0;
    let mut h = step;
    let mut last = None;
    while a != a1 {
        let next = if (a1 - a).abs() <= h { a1 } else { a + h * (a1 - a).signum() };
        let map = family.map_at(next)?;
        match cycle_multiplier(&map, p, x) {
            Ok(c) => {
                a = next;
                x = c.point;
                last = Some(c);
                h = (h * 2.0).min(step);
            }
            Err(e) => {
                h *= 0.5;
                if h < 1e-15 {
                    return Err(e);
                }
            }
        }
    }
    match last {
        Some(c) => Ok(c),
        None => cycle_multiplier(&family.map_at(a1)?, p, x0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipPoint {
    pub param: f64,
    pub period: usize,
    /// A point of the `p`-cycle at `param`.
    pub point: Point,
}

/// Bisection on `Re μ + 1` for the dominant multiplier `μ` of the `p`-cycle,
/// located to bracket width `tol`.
pub fn locate_flip(
    family: &CascadeFamily,
    p: usize,
    bracket: (f64, f64),
    tol: f64,
) -> Result<FlipPoint, CascadeError> {
    let (lo, hi) = bracket;
    if p == 0 || !(lo < hi) || !(tol > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(CascadeError::InvalidInput(format!(
            "locate_flip needs p ≥ 1, lo < hi and tol > 0; got p = {p}, [{lo}, {hi}], tol = {tol}"
        )));
    }
    let g = |c: &CycleMultiplier| c.dominant_re() + 1.0;

    let start = acquire_cycle(family, lo, p)?;
    let s0 = g(&start).signum();
    if s0 == 0.0 {
        return Ok(FlipPoint { param: lo, period: p, point: start.point });
    }

    // scan for the first sign change along the continuation
    let step = CONTINUATION_STEP.min((hi - lo) / 50.0);
    let (mut a_in, mut x_in) = (lo, start.point);
    let mut a_out = None;
    while a_in < hi {
        let next = (a_in + step).min(hi);
        let c = continue_cycle(family, p, a_in, x_in, next, step)?;
        if g(&c).signum() != s0 {
            a_out = Some(next);
            break;
        }
        a_in = next;
        x_in = c.point;
    }
    let Some(mut a_out) = a_out else {
        return Err(CascadeError::Bracket { quantity: "multiplier + 1", lo, hi });
    };

    while (a_out - a_in).abs() > tol {
        let mid = 0.5 * (a_in + a_out);
        let c = cycle_multiplier(&family.map_at(mid)?, p, x_in)?;
        if g(&c).signum() == s0 {
            a_in = mid;
            x_in = c.point;
        } else {
            a_out = mid;
        }
    }
    Ok(FlipPoint { param: 0.5 * (a_in + a_out), period: p, point: x_in })
}

/// `min (Re μ − 1)` over the fixed points at `a`, or `+1` when none exist.
fn saddle_node_indicator(family: &CascadeFamily, a: f64) -> Result<f64, CascadeError> {
    let map = family.map_at(a)?;
    let mut best: Option<f64> = None;
    for seed in family.fixed_point_seeds() {
        if let Ok(c) = cycle_multiplier(&map, 1, seed) {
            let v = c.dominant_re() - 1.0;
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    Ok(best.unwrap_or(1.0))
}

/// The parameter where the first fixed-point pair is born: bisection on
/// `μ − 1`, with the fixed-point-free side counting as positive.
pub fn locate_saddle_node(family: &CascadeFamily, bracket: (f64, f64), tol: f64) -> Result<f64, CascadeError> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(CascadeError::InvalidInput(format!("bad bracket [{lo}, {hi}] or tol {tol}")));
    }
    let s_lo = saddle_node_indicator(family, lo)?.signum();
    let s_hi = saddle_node_indicator(family, hi)?.signum();
    if s_lo == s_hi {
        return Err(CascadeError::Bracket { quantity: "multiplier − 1", lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if saddle_node_indicator(family, mid)?.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeEntry {
    pub n: usize,
    pub period: usize,
    /// `f_{2ⁿ}`: the parameter after which the attracting `2ⁿ`-cycle exists.
    pub flip_param: f64,
    /// `(f_{2ⁿ} − f_{2ⁿ⁻¹}) / (f_{2ⁿ⁺¹} − f_{2ⁿ})`, for `n ≥ 2`.
    pub delta_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeTable {
    pub family: CascadeFamily,
    pub saddle_node: f64,
    pub entries: Vec<CascadeEntry>,
    pub feigenbaum_param: Option<f64>,
    pub tol: f64,
    /// Why the table ends before `n_max`, if it does.
    pub stopped: Option<String>,
}

impl CascadeTable {
    pub fn flips(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.flip_param).collect()
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.entries.iter().filter_map(|e| e.delta_estimate).collect()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        let mut prev = self.saddle_node;
        self.entries.iter().all(|e| {
            let ok = e.flip_param > prev;
            prev = e.flip_param;
            ok
        })
    }

    /// Rows `n, period, flip_param, delta_estimate`, with the saddle-node as row 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,period,flip_param,delta_estimate\n");
        out.push_str(&format!("0,1,{},\n", fmt17(self.saddle_node)));
        for e in &self.entries {
            let d = e.delta_estimate.map(fmt17).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", e.n, e.period, fmt17(e.flip_param), d));
        }
        out
    }
}

pub const SADDLE_NODE_BRACKET: (f64, f64) = (-1.0, 0.0);

/// Saddle-node `s₁` followed by the flips `f₂, f₄, …, f_{2^{n_max}}`, each
/// bracketed just past the previous one.
pub fn build_cascade(family: &CascadeFamily, n_max: usize, tol: f64) -> Result<CascadeTable, CascadeError> {
    build_cascade_from(family, n_max, tol, SADDLE_NODE_BRACKET)
}

/// [`build_cascade`] with an explicit bracket for the saddle-node search.
pub fn build_cascade_from(
    family: &CascadeFamily,
    n_max: usize,
    tol: f64,
    saddle_node_bracket: (f64, f64),
) -> Result<CascadeTable, CascadeError> {
    if n_max == 0 || n_max > MAX_N_MAX {
        return Err(CascadeError::InvalidInput(format!("n_max must be in 1..={MAX_N_MAX}, got {n_max}")));
    }
    let s1 = locate_saddle_node(family, saddle_node_bracket, tol)?;
    let mut flips: Vec<f64> = Vec::new();
    let mut stopped = None;
    let (mut born, mut gap) = (s1, 1.0);
    for k in 0..n_max {
        let p = 1usize << k;
        let bracket = (born + 0.05 * gap, born + if k == 0 { 2.0 } else { gap });
        match locate_flip(family, p, bracket, tol) {
            Ok(f) => {
                gap = f.param - born;
                born = f.param;
                flips.push(f.param);
            }
            Err(e) => {
                stopped = Some(format!("period {p}: {e}"));
                break;
            }
        }
    }

    let delta = |i: usize| (flips[i] - flips[i - 1]) / (flips[i + 1] - flips[i]);
    let entries: Vec<CascadeEntry> = flips
        .iter()
        .enumerate()
        .map(|(i, &f)| CascadeEntry {
            n: i + 1,
            period: 2usize << i,
            flip_param: f,
            delta_estimate: (i >= 1 && i + 1 < flips.len()).then(|| delta(i)),
        })
        .collect();

    let last_delta = entries.iter().rev().find_map(|e| e.delta_estimate);
    let feigenbaum_param = match (last_delta, flips.len()) {
        (Some(d), n) if n >= 2 => Some(flips[n - 1] + (flips[n - 1] - flips[n - 2]) / (d - 1.0)),
        _ => None,
    };

    Ok(CascadeTable { family: *family, saddle_node: s1, entries, feigenbaum_param, tol, stopped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_multipliers() {
        // 2-cycle of a − x² has multiplier 4(1 − a)
        let q = MapSystem::quadratic(1.0).unwrap();
        let c = cycle_multiplier(&q, 2, Point::one(0.05)).unwrap();
        assert!(c.dominant_re().abs() < 1e-10);
        let q = MapSystem::quadratic(0.5).unwrap();
        let c = cycle_multiplier(&q, 1, Point::one(0.3)).unwrap();
        assert!((c.dominant_re() + 3f64.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn henon_fixed_point_multipliers() {
        let h = MapSystem::henon(1.4, 0.3).unwrap();
        let c = cycle_multiplier(&h, 1, Point::two(0.7, 0.7)).unwrap();
        let disc = (1.96f64 - 1.2).sqrt();
        assert!((c.multipliers[0].re - (-1.4 - disc) / 2.0).abs() < 1e-10);
        assert!((c.multipliers[1].re - (-1.4 + disc) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn quadratic_flips_match_closed_forms() {
        let f = locate_flip(&CascadeFamily::Quadratic, 1, (0.5, 1.0), 1e-12).unwrap();
        assert!((f.param - 0.75).abs() < 1e-10);
        let f = locate_flip(&CascadeFamily::Quadratic, 2, (1.0, 1.3), 1e-12).unwrap();
        assert!((f.param - 1.25).abs() < 1e-8);
    }

    #[test]
    fn henon_flip_and_saddle_node_closed_forms() {
        let b = 0.05;
        let fam = CascadeFamily::Henon { b };
        let f = locate_flip(&fam, 1, (0.7, 0.9), 1e-12).unwrap();
        assert!((f.param - 3.0 * (1.0 + b) * (1.0 + b) / 4.0).abs() < 1e-9);
        let s = locate_saddle_node(&fam, SADDLE_NODE_BRACKET, 1e-12).unwrap();
        assert!((s + (1.0 + b) * (1.0 + b) / 4.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_saddle_node() {
        let s = locate_saddle_node(&CascadeFamily::Quadratic, SADDLE_NODE_BRACKET, 1e-12).unwrap();
        assert!((s + 0.25).abs() < 1e-10);
    }

    #[test]
    fn bracket_without_crossing_is_an_error() {
        let r = locate_flip(&CascadeFamily::Quadratic, 1, (0.1, 0.5), 1e-10);
        assert!(matches!(r, Err(CascadeError::Bracket { .. })), "{r:?}");
        let r = locate_saddle_node(&CascadeFamily::Quadratic, (0.0, 1.0), 1e-10);
        assert!(matches!(r, Err(CascadeError::Bracket { .. })), "{r:?}");
    }

    #[test]
    fn csv_layout() {
        let t = CascadeTable {
            family: CascadeFamily::Quadratic,
            saddle_node: -0.25,
            entries: vec![
                CascadeEntry { n: 1, period: 2, flip_param: 0.75, delta_estimate: None },
                CascadeEntry { n: 2, period: 4, flip_param: 1.25, delta_estimate: Some(4.5) },
            ],
            feigenbaum_param: None,
            tol: 1e-12,
            stopped: None,
        };
        let csv = t.to_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "n,period,flip_param,delta_estimate");
        assert!(rows[1].starts_with("0,1,-2.5000000000000000e-1,"));
        assert!(rows[3].ends_with(",4.5000000000000000e0"));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn rejects_large_n_max() {
        assert!(build_cascade(&CascadeFamily::Quadratic, 9, 1e-12).is_err());
        assert!(build_cascade(&CascadeFamily::Quadratic, 0, 1e-12).is_err());
        assert!(CascadeFamily::from_family(Family::Sphere { lambda: 1.0 }).is_err());
    }
}
