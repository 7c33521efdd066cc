//! One-dimensional tools: the Sharkovskii order, forcing and power-of-two
//! checks on orbit catalogs, and lap-number entropy estimates.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maps::{MapError, PhaseMap, Point};
use crate::periodic::OrbitCatalog;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyClass {
    /// `2^k · m` with odd `m > 1`.
    OddMultiple,
    /// `2^k`.
    PurePower,
}

/// Position of a positive integer `n = 2^k · m` (`m` odd) in the Sharkovskii order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SharkovskiiKey {
    pub class: KeyClass,
    pub exponent: u32,
    pub odd_part: u64,
}

impl SharkovskiiKey {
    pub fn new(n: u64) -> Result<Self, IntervalError> {
        if n == 0 {
            return Err(IntervalError::InvalidInput("periods start at 1".into()));
        }
        let exponent = n.trailing_zeros();
        let odd_part = n >> exponent;
        let class = if odd_part > 1 { KeyClass::OddMultiple } else { KeyClass::PurePower };
        Ok(Self { class, exponent, odd_part })
    }

    pub fn value(&self) -> u64 {
        self.odd_part << self.exponent
    }
}

impl Ord for SharkovskiiKey {
    fn cmp(&self, other: &Self) -> Ordering {
        use KeyClass::*;
        match (self.class, other.class) {
            (OddMultiple, PurePower) => Ordering::Less,
            (PurePower, OddMultiple) => Ordering::Greater,
            (OddMultiple, OddMultiple) => {
                (self.exponent, self.odd_part).cmp(&(other.exponent, other.odd_part))
            }
            // 2^3 ≺ 2^2 ≺ 2 ≺ 1
            (PurePower, PurePower) => other.exponent.cmp(&self.exponent),
        }
    }
}

impl PartialOrd for SharkovskiiKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharkovskiiOrder {
    Precedes,
    Equals,
    Succeeds,
}

impl From<Ordering> for SharkovskiiOrder {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => SharkovskiiOrder::Precedes,
            Ordering::Equal => SharkovskiiOrder::Equals,
            Ordering::Greater => SharkovskiiOrder::Succeeds,
        }
    }
}

pub fn shark_compare(m: u64, n: u64) -> Result<SharkovskiiOrder, IntervalError> {
    Ok(SharkovskiiKey::new(m)?.cmp(&SharkovskiiKey::new(n)?).into())
}

fn forced_up_to(n: u64, cap: u64) -> BTreeSet<u64> {
    let key = SharkovskiiKey::new(n).expect("n ≥ 1");
    (1..=cap)
        .filter(|&m| key <= SharkovskiiKey::new(m).expect("m ≥ 1"))
        .collect()
}

/// Every `m ≤ cap` whose presence is forced by a period-`n` orbit (including `n`).
pub fn forced_periods(n: u64, cap: u64) -> Result<BTreeSet<u64>, IntervalError> {
    if n == 0 {
        return Err(IntervalError::InvalidInput("periods start at 1".into()));
    }
    if cap < n {
        return Err(IntervalError::InvalidInput(format!("cap {cap} is below n = {n}")));
    }
    Ok(forced_up_to(n, cap))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcingCheck {
    pub pass: bool,
    pub cap: u64,
    pub present: BTreeSet<u64>,
    pub missing: BTreeSet<u64>,
}

/// Passes iff every period `≤ cap` forced by a period present in the catalog
/// is itself present. Periods above `cap` still force the ones below it.
pub fn check_forcing_closure(catalog: &OrbitCatalog, cap: u64) -> Result<ForcingCheck, IntervalError> {
    if cap == 0 {
        return Err(IntervalError::InvalidInput("cap must be ≥ 1".into()));
    }
    if catalog.region.dim() != 1 {
        return Err(IntervalError::InvalidInput("forcing applies to interval maps only".into()));
    }
    let present: BTreeSet<u64> = catalog.periods().into_iter().map(|p| p as u64).collect();
    let missing: BTreeSet<u64> = present
        .iter()
        .flat_map(|&n| forced_up_to(n, cap))
        .filter(|m| !present.contains(m))
        .collect();
    Ok(ForcingCheck { pass: missing.is_empty(), cap, present, missing })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerOfTwoCheck {
    pub pass: bool,
    /// Least periods that are not powers of two; any one of them certifies
    /// that the periodic set is not closed.
    pub offending: BTreeSet<u64>,
}

pub fn power_of_two_check(catalog: &OrbitCatalog) -> Result<PowerOfTwoCheck, IntervalError> {
    if catalog.region.dim() != 1 {
        return Err(IntervalError::InvalidInput("power-of-two check applies to interval maps only".into()));
    }
    let offending: BTreeSet<u64> = catalog
        .periods()
        .into_iter()
        .map(|p| p as u64)
        .filter(|p| !p.is_power_of_two())
        .collect();
    Ok(PowerOfTwoCheck { pass: offending.is_empty(), offending })
}

pub const MAX_LAP_ITERATIONS: usize = 64;
pub const MAX_SAMPLE_DENSITY: u32 = 28;
/// Lap counts on the full and half grids must agree this closely to be trusted.
pub const LAP_AGREEMENT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapEntropy {
    pub entropy: f64,
    /// Interval on which laps were counted.
    pub interval: (f64, f64),
    /// `lap_counts[n − 1]` is the lap count of `fⁿ` on the full grid.
    pub lap_counts: Vec<u64>,
    /// Same, on every other grid point.
    pub coarse_lap_counts: Vec<u64>,
    /// Largest `N` such that the two grids agree for every `n ≤ N`.
    pub resolved_iterations: usize,
    pub fit_range: (usize, usize),
    /// Set when some requested iterate was not resolved by the grid.
    pub underresolved: bool,
}

/// Running sign-change counts along a grid. A bit whose sign is undefined
/// for a sample (the orbit hit a critical point exactly) is compared at the
/// next sample where it is defined.
#[derive(Clone, Copy)]
struct SignTrack {
    first: u64,
    first_mask: u64,
    last: u64,
    mask: u64,
    counts: [u64; MAX_LAP_ITERATIONS],
}

impl SignTrack {
    fn new() -> Self {
        Self { first: 0, first_mask: 0, last: 0, mask: 0, counts: [0; MAX_LAP_ITERATIONS] }
    }

    fn add_changes(&mut self, diff: u64) {
        let mut diff = diff;
        while diff != 0 {
            self.counts[diff.trailing_zeros() as usize] += 1;
            diff &= diff - 1;
        }
    }

    fn push(&mut self, word: u64, defined: u64) {
        self.add_changes((self.last ^ word) & self.mask & defined);
        let fresh = defined & !self.first_mask;
        self.first = (self.first & !fresh) | (word & fresh);
        self.first_mask |= defined;
        self.last = (self.last & !defined) | (word & defined);
        self.mask |= defined;
    }

    /// Appends a track covering the grid points immediately to the right.
    fn append(&mut self, next: &SignTrack) {
        for (c, n) in self.counts.iter_mut().zip(&next.counts) {
            *c += n;
        }
        if next.first_mask != 0 {
            self.push(next.first, next.first_mask);
            self.last = (self.last & !next.mask) | (next.last & next.mask);
        }
    }
}

/// Bit `n − 1` of the word is set when `(fⁿ)′(x) < 0`; bits from the first
/// exactly vanishing derivative on are left out of the returned mask.
fn sign_word<M: PhaseMap + ?Sized>(map: &M, x: f64, iterations: usize) -> Result<(u64, u64), MapError> {
    let mut word = 0u64;
    let mut negative = false;
    let mut y = Point::one(x);
    for n in 0..iterations {
        let d = map.jacobian(y).entry(0, 0);
        if d == 0.0 {
            return Ok((word, (1u64 << n) - 1));
        }
        if d < 0.0 {
            negative = !negative;
        }
        if negative {
            word |= 1 << n;
        }
        if n + 1 < iterations {
            y = map.eval(y).map_err(|e| match e {
                MapError::Escaped { .. } => MapError::Escaped { step: n + 1 },
                other => other,
            })?;
        }
    }
    let mask = if iterations == 64 { u64::MAX } else { (1u64 << iterations) - 1 };
    Ok((word, mask))
}

/// The interval spanned by `f(c)` and `f²(c)` for the turning point `c` of a
/// unimodal map, clipped to the domain. Every nonwandering point other than
/// a boundary fixed point lies in it. Maps whose derivative does not change
/// sign exactly once get the whole domain.
pub fn dynamical_core<M: PhaseMap + ?Sized>(map: &M) -> (f64, f64) {
    const SCAN: usize = 4096;
    let ax = map.domain().axes[0];
    let slope = |x: f64| map.jacobian(Point::one(x)).entry(0, 0);
    let mut turns = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=SCAN {
        let x = ax.lower + ax.length() * i as f64 / SCAN as f64;
        let d = slope(x);
        if d == 0.0 {
            continue;
        }
        if let Some((px, pd)) = prev {
            if (pd < 0.0) != (d < 0.0) {
                turns.push((px, x));
            }
        }
        prev = Some((x, d));
    }
    let whole = (ax.lower, ax.upper);
    let [(mut lo, mut hi)] = turns[..] else { return whole };
    let lo_negative = slope(lo) < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let d = slope(mid);
        if d == 0.0 {
            (lo, hi) = (mid, mid);
            break;
        }
        if (d < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let Ok(v1) = map.eval(Point::one(c)) else { return whole };
    let Ok(v2) = map.eval(v1) else { return whole };
    let lower = v1[0].min(v2[0]).max(ax.lower);
    let upper = v1[0].max(v2[0]).min(ax.upper);
    (lower, upper.max(lower))
}

/// Topological entropy of a piecewise-monotone interval map, estimated as the
/// growth rate of the lap number of `fⁿ`.
///
/// Laps are counted on [`dynamical_core`] as sign changes of `(fⁿ)′` over
/// `2^sample_density` grid points. Counts are repeated on every other grid point; the fit of
/// `log(laps)` against `n` uses the last half of the longest prefix of `n`
/// on which both counts agree to within [`LAP_AGREEMENT`].
pub fn lap_entropy<M: PhaseMap + ?Sized>(
    map: &M,
    iterations: usize,
    sample_density: u32,
) -> Result<LapEntropy, IntervalError> {
    if map.domain().dim() != 1 {
        return Err(IntervalError::InvalidInput("lap entropy needs a one-dimensional map".into()));
    }
    if iterations == 0 || iterations > MAX_LAP_ITERATIONS {
        return Err(IntervalError::InvalidInput(format!(
            "iterations must be in 1..={MAX_LAP_ITERATIONS}, got {iterations}"
        )));
    }
    if !(4..=MAX_SAMPLE_DENSITY).contains(&sample_density) {
        return Err(IntervalError::InvalidInput(format!(
            "sample_density must be in 4..={MAX_SAMPLE_DENSITY}, got {sample_density}"
        )));
    }
    let (lower, upper) = dynamical_core(map);
    if upper <= lower {
        return Ok(LapEntropy {
            entropy: 0.0,
            interval: (lower, upper),
            lap_counts: vec![1; iterations],
            coarse_lap_counts: vec![1; iterations],
            resolved_iterations: iterations,
            fit_range: (iterations.div_ceil(2), iterations),
            underresolved: false,
        });
    }
    let total = 1usize << sample_density;
    let h = (upper - lower) / total as f64;
    let chunk = 1usize << 12.min(sample_density);

    let chunks: Vec<(SignTrack, SignTrack)> = (0..total / chunk)
        .into_par_iter()
        .map(|c| {
            let (mut fine, mut coarse) = (SignTrack::new(), SignTrack::new());
            for i in 0..chunk {
                let x = lower + ((c * chunk + i) as f64 + 0.5) * h;
                let (w, m) = sign_word(map, x, iterations)?;
                fine.push(w, m);
                if i % 2 == 0 {
                    coarse.push(w, m);
                }
            }
            Ok((fine, coarse))
        })
        .collect::<Result<_, MapError>>()?;

    let (mut fine, mut coarse) = (SignTrack::new(), SignTrack::new());
    for (f, c) in &chunks {
        fine.append(f);
        coarse.append(c);
    }
    let (fine, coarse) = (fine.counts, coarse.counts);
    let lap_counts: Vec<u64> = fine[..iterations].iter().map(|c| c + 1).collect();
    let coarse_lap_counts: Vec<u64> = coarse[..iterations].iter().map(|c| c + 1).collect();

    let resolved_iterations = lap_counts
        .iter()
        .zip(&coarse_lap_counts)
        .take_while(|(&f, &c)| (f as f64 - c as f64).abs() <= LAP_AGREEMENT * f as f64)
        .count();

    let (entropy, fit_range) = if resolved_iterations == 0 {
        (0.0, (0, 0))
    } else {
        let hi = resolved_iterations;
        let lo = if hi == 1 { 1 } else { hi / 2 + 1 };
        let pts: Vec<(f64, f64)> = (lo..=hi)
            .map(|n| (n as f64, (lap_counts[n - 1] as f64).ln()))
            .collect();
        (fit_slope(&pts).max(0.0), (lo, hi))
    };

    Ok(LapEntropy {
        entropy,
        interval: (lower, upper),
        lap_counts,
        coarse_lap_counts,
        resolved_iterations,
        fit_range,
        underresolved: resolved_iterations < iterations,
    })
}

/// Least-squares slope; a single point `(n, y)` gives `y / n`.
fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() == 1 {
        return pts[0].1 / pts[0].0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{IdentityMap, MapSystem, PhaseDomain};
    use crate::periodic::{PeriodicOrbit, StabilityClass};

    fn fake_catalog(periods: &[usize]) -> OrbitCatalog {
        let orbits = periods
            .iter()
            .enumerate()
            .map(|(i, &p)| PeriodicOrbit {
                least_period: p,
                points: (0..p).map(|j| Point::one((i * 10 + j) as f64 * 1e-3)).collect(),
                multipliers: vec![],
                class: StabilityClass::Repelling,
                residual: 0.0,
            })
            .collect();
        OrbitCatalog::from_orbits("test".into(), PhaseDomain::interval(0.0, 1.0).unwrap(), 64, orbits)
    }

    #[test]
    fn compare_examples() {
        assert_eq!(shark_compare(3, 5).unwrap(), SharkovskiiOrder::Precedes);
        assert_eq!(shark_compare(6, 8).unwrap(), SharkovskiiOrder::Precedes);
        assert_eq!(shark_compare(2, 1).unwrap(), SharkovskiiOrder::Precedes);
        assert_eq!(shark_compare(1, 2).unwrap(), SharkovskiiOrder::Succeeds);
        assert_eq!(shark_compare(12, 12).unwrap(), SharkovskiiOrder::Equals);
        // 7 ≺ 2·3 ≺ 2²·3 ≺ 2⁴ ≺ 2³
        assert_eq!(shark_compare(7, 6).unwrap(), SharkovskiiOrder::Precedes);
        assert_eq!(shark_compare(10, 12).unwrap(), SharkovskiiOrder::Precedes);
        assert_eq!(shark_compare(16, 8).unwrap(), SharkovskiiOrder::Precedes);
        assert!(shark_compare(0, 3).is_err());
    }

    #[test]
    fn forced_examples() {
        assert_eq!(forced_periods(3, 8).unwrap(), (1..=8).collect());
        assert_eq!(forced_periods(1, 100).unwrap(), BTreeSet::from([1]));
        assert_eq!(forced_periods(4, 16).unwrap(), BTreeSet::from([1, 2, 4]));
        assert!(forced_periods(5, 4).is_err());
    }

    #[test]
    fn forcing_closure_of_lone_period_three() {
        let chk = check_forcing_closure(&fake_catalog(&[3]), 2).unwrap();
        assert!(!chk.pass);
        assert_eq!(chk.missing, BTreeSet::from([1, 2]));
        let chk = check_forcing_closure(&fake_catalog(&[1, 2, 4]), 8).unwrap();
        assert!(chk.pass);
    }

    #[test]
    fn power_of_two_examples() {
        assert!(power_of_two_check(&fake_catalog(&[])).unwrap().pass);
        assert!(power_of_two_check(&fake_catalog(&[1, 2, 4])).unwrap().pass);
        let chk = power_of_two_check(&fake_catalog(&[1, 3, 6])).unwrap();
        assert_eq!(chk.offending, BTreeSet::from([3, 6]));
    }

    #[test]
    fn identity_has_one_lap() {
        let id = IdentityMap::new(PhaseDomain::interval(-1.0, 1.0).unwrap());
        let e = lap_entropy(&id, 10, 12).unwrap();
        assert!(e.lap_counts.iter().all(|&c| c == 1));
        assert_eq!(e.entropy, 0.0);
    }

    #[test]
    fn full_shift_lap_counts_are_powers_of_two() {
        // brute force: laps of q₂ⁿ on [−2, 2] are 2ⁿ
        let q = MapSystem::quadratic(2.0).unwrap();
        let e = lap_entropy(&q, 10, 20).unwrap();
        for (n, &c) in e.lap_counts.iter().enumerate() {
            assert_eq!(c, 1 << (n + 1), "n = {}", n + 1);
        }
    }

    #[test]
    fn lap_entropy_rejects_bad_input() {
        let h = MapSystem::henon(1.0, 0.1).unwrap();
        assert!(lap_entropy(&h, 10, 12).is_err());
        let q = MapSystem::quadratic(1.0).unwrap();
        assert!(lap_entropy(&q, 0, 12).is_err());
        assert!(lap_entropy(&q, 65, 12).is_err());
        assert!(lap_entropy(&q, 10, 40).is_err());
    }

    #[test]
    fn laps_are_counted_on_the_critical_orbit_hull() {
        let (lo, hi) = dynamical_core(&MapSystem::quadratic(1.5).unwrap());
        assert!((lo + 0.75).abs() < 1e-12 && (hi - 1.5).abs() < 1e-12);
        let l = lap_entropy(&MapSystem::quadratic(1.0).unwrap(), 30, 16).unwrap();
        assert_eq!(l.interval, (0.0, 1.0));
        assert!(l.lap_counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn escape_during_lap_count_is_reported() {
        let q = MapSystem::with_domain(
            crate::maps::Family::Quadratic { a: 3.0 },
            PhaseDomain::interval(-5.0, 5.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(lap_entropy(&q, 30, 10), Err(IntervalError::Map(MapError::Escaped { .. }))));
    }
}
