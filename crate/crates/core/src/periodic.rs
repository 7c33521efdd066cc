//! Periodic orbit search: damped Newton on `ψ^p(x) − x`, least-period
//! reduction, deduplication and stability classification.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maps::{
    iterate, orbit_jacobian, Family, Jacobian, MapError, MapSystem, PhaseDomain, PhaseMap, Point,
};

/// `|det(Dψ^p − I)|` below this is treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;
pub const MAX_HALVINGS: usize = 20;
/// Longest period the search will attempt.
pub const MAX_PERIOD_LIMIT: usize = 64;
pub const DEFAULT_DEDUP_RADIUS: f64 = 1e-6;
pub const DEFAULT_HYPERBOLICITY_BAND: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NewtonFailure {
    #[error("singular Jacobian of ψ^p − id near {at:?} (nonhyperbolic or bifurcating cycle)")]
    Singular { at: Point },
    #[error("no convergence: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("iteration diverged: {0}")]
    Diverged(MapError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl From<MapError> for NewtonFailure {
    fn from(e: MapError) -> Self {
        match e {
            MapError::Escaped { .. } => NewtonFailure::Diverged(e),
            other => NewtonFailure::InvalidInput(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("invalid search request: {0}")]
    InvalidInput(String),
}

/// `max |ψ^p(x) − x|` in the map's metric (wrap axes and poles respected).
pub fn residual<M: PhaseMap + ?Sized>(map: &M, x: Point, p: usize) -> Result<f64, MapError> {
    let y = iterate(map, x, p)?;
    Ok(map.domain().distance(y, x))
}

/// Plain damped Newton for `F(x) = ψ^p(x) − x`.
fn damped_newton<M: PhaseMap + ?Sized>(
    map: &M,
    x0: Point,
    p: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Point, NewtonFailure> {
    let dom = map.domain();
    let mut x = dom.normalize(x0);
    let mut res = f64::INFINITY;
    for it in 0..max_iter {
        let (y, jac) = orbit_jacobian(map, x, p)?;
        let f = dom.diff(y, x);
        res = f.max_abs();
        if res < tol {
            // near a multiple root the residual is quadratic in the error, so
            // |det| stays above 2√tol at any simple root that converged
            if jac.minus_identity().det().abs() < 2.0 * tol.sqrt() {
                return Err(NewtonFailure::Singular { at: x });
            }
            return Ok(x);
        }
        let step = jac
            .minus_identity()
            .solve(f, SINGULAR_DET)
            .ok_or(NewtonFailure::Singular { at: x })?;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut cand = x;
            for i in 0..x.dim() {
                cand = cand.with(i, x[i] - t * step[i]);
            }
            let cand = dom.normalize(cand);
            if let Ok(r) = residual(map, cand, p) {
                if r < res {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some(c) => x = c,
            None => {
                return Err(NewtonFailure::NoConvergence { residual: res, iterations: it + 1 });
            }
        }
    }
    let r = residual(map, x, p)?;
    if r < tol {
        Ok(x)
    } else {
        Err(NewtonFailure::NoConvergence { residual: r.min(res), iterations: max_iter })
    }
}

/// The autonomous φ-component of the sphere map, as a map of `[0, π]`.
struct PolarComponent {
    domain: PhaseDomain,
}

impl PolarComponent {
    fn new() -> Self {
        Self { domain: PhaseDomain::interval(0.0, PI).expect("[0, π]") }
    }
}

impl PhaseMap for PolarComponent {
    fn domain(&self) -> &PhaseDomain {
        &self.domain
    }

    fn eval(&self, x: Point) -> Result<Point, MapError> {
        let u = x[0] - FRAC_PI_2;
        let y = 4.0 / (PI * PI) * u * u * u + FRAC_PI_2;
        if !y.is_finite() || y.abs() > crate::maps::ESCAPE_RADIUS {
            return Err(MapError::Escaped { step: 1 });
        }
        Ok(Point::one(y))
    }

    fn jacobian(&self, x: Point) -> Jacobian {
        let u = x[0] - FRAC_PI_2;
        Jacobian::scalar(12.0 / (PI * PI) * u * u)
    }

    fn identity(&self) -> String {
        "sphere-polar-component".into()
    }
}

/// The sphere map is a skew product over its φ-dynamics, and the chart is
/// singular at the poles, so Newton runs on φ alone. A solution `φ*` is a
/// periodic point iff it is a pole or the rotation closes: `pλ ≡ 0 (mod 2π)`.
fn sphere_refine(
    map: &MapSystem,
    lambda: f64,
    x0: Point,
    p: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Point, NewtonFailure> {
    let x0 = map.domain().normalize(x0);
    let polar = PolarComponent::new();
    let phi = damped_newton(&polar, Point::one(x0[1]), p, tol, max_iter)?[0];
    if phi.abs() < tol {
        return Ok(Point::two(0.0, 0.0));
    }
    if (phi - PI).abs() < tol {
        return Ok(Point::two(0.0, PI));
    }
    if !(0.0..=PI).contains(&phi) {
        return Err(NewtonFailure::Diverged(MapError::Escaped { step: 0 }));
    }
    let theta_axis = map.domain().axes[0];
    let closure = theta_axis.diff(p as f64 * lambda, 0.0).abs();
    if closure < tol {
        Ok(map.domain().normalize(Point::two(x0[0], phi)))
    } else {
        // off the poles the θ-equation has zero derivative and cannot be met
        Err(NewtonFailure::Singular { at: Point::two(x0[0], phi) })
    }
}

/// Refines `x0` to a solution of `ψ^p(x) = x` with residual below `tol`.
///
/// Damped Newton on `F(x) = ψ^p(x) − x` with `DF = Dψ^p − I`; a step is
/// halved up to [`MAX_HALVINGS`] times while the residual fails to decrease.
/// A converged root where `|det DF| < 2√tol` is reported as singular: it
/// cannot be told apart from a multiple root at that tolerance.
pub fn newton_refine(
    map: &MapSystem,
    x0: Point,
    p: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Point, NewtonFailure> {
    if p == 0 {
        return Err(NewtonFailure::InvalidInput("period must be ≥ 1".into()));
    }
    if !(tol > 0.0) {
        return Err(NewtonFailure::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if x0.dim() != map.dim() || !x0.is_finite() {
        return Err(NewtonFailure::InvalidInput(format!("bad seed {x0:?}")));
    }
    match map.family() {
        Family::Sphere { lambda } => sphere_refine(map, lambda, x0, p, tol, max_iter),
        _ => damped_newton(map, x0, p, tol, max_iter),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Attracting,
    Repelling,
    Saddle,
    Nonhyperbolic,
}

/// Multipliers of the `p`-cycle through `x`, largest modulus first.
///
/// At a pole of the sphere the chart is singular; there the local
/// linearization is the φ-expansion composed with rotation by `pλ`, so the
/// multipliers are `∏φ′ · e^{±ipλ}`.
pub fn orbit_multipliers(map: &MapSystem, x: Point, p: usize) -> Result<Vec<Complex64>, MapError> {
    if let Family::Sphere { lambda } = map.family() {
        let x = map.domain().normalize(x);
        if x[1] == 0.0 || x[1] == PI {
            let radial = map.jacobian(x).entry(1, 1).powi(p as i32);
            let angle = p as f64 * lambda;
            return Ok(vec![
                Complex64::from_polar(radial, angle.abs()),
                Complex64::from_polar(radial, -angle.abs()),
            ]);
        }
    }
    crate::maps::jacobian_along_orbit(map, x, p).map(|j| j.eigenvalues())
}

pub fn classify_multipliers(multipliers: &[Complex64], band: f64) -> StabilityClass {
    if multipliers.iter().any(|m| (m.norm() - 1.0).abs() <= band) {
        StabilityClass::Nonhyperbolic
    } else if multipliers.iter().all(|m| m.norm() < 1.0) {
        StabilityClass::Attracting
    } else if multipliers.iter().all(|m| m.norm() > 1.0) {
        StabilityClass::Repelling
    } else {
        StabilityClass::Saddle
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub least_period: usize,
    pub points: Vec<Point>,
    pub multipliers: Vec<Complex64>,
    pub class: StabilityClass,
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn first(&self) -> Point {
        self.points[0]
    }
}

/// Stability class of a cataloged orbit, recomputed from its first point.
pub fn classify_orbit(map: &MapSystem, orbit: &PeriodicOrbit, band: f64) -> Result<StabilityClass, MapError> {
    let m = orbit_multipliers(map, orbit.first(), orbit.least_period)?;
    Ok(classify_multipliers(&m, band))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub max_period: usize,
    pub grid_per_axis: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub dedup_radius: f64,
    pub hyperbolicity_band: f64,
}

impl SearchSettings {
    pub fn new(max_period: usize, grid_per_axis: usize, tol: f64) -> Self {
        Self {
            max_period,
            grid_per_axis,
            tol,
            max_iter: 60,
            dedup_radius: DEFAULT_DEDUP_RADIUS,
            hyperbolicity_band: DEFAULT_HYPERBOLICITY_BAND,
        }
    }

    fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: String| Err(SearchError::InvalidInput(m));
        if self.max_period == 0 || self.max_period > MAX_PERIOD_LIMIT {
            return bad(format!("max_period must be in 1..={MAX_PERIOD_LIMIT}, got {}", self.max_period));
        }
        if self.grid_per_axis == 0 {
            return bad("grid_per_axis must be ≥ 1".into());
        }
        if !(self.tol > 0.0 && self.tol < 1e-3) {
            return bad(format!("tol must be in (0, 1e-3), got {}", self.tol));
        }
        if !(self.dedup_radius > 0.0) || !(self.hyperbolicity_band >= 0.0) {
            return bad("dedup_radius must be positive and hyperbolicity_band non-negative".into());
        }
        Ok(())
    }
}

/// Per-attempt outcomes, summed over seeds and periods.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    pub seeds: usize,
    pub attempts: usize,
    pub converged: usize,
    pub singular: usize,
    pub diverged: usize,
    pub no_convergence: usize,
    pub out_of_region: usize,
    pub duplicates: usize,
}

/// The periodic points found up to a period horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCatalog {
    pub map: String,
    pub max_period: usize,
    pub region: PhaseDomain,
    pub settings: SearchSettings,
    pub diagnostics: SearchDiagnostics,
    pub orbits: Vec<PeriodicOrbit>,
}

impl OrbitCatalog {
    /// A catalog holding the given orbits; mainly for tests and tooling.
    pub fn from_orbits(map: String, region: PhaseDomain, max_period: usize, orbits: Vec<PeriodicOrbit>) -> Self {
        Self {
            map,
            max_period,
            region,
            settings: SearchSettings::new(max_period, 1, 1e-10),
            diagnostics: SearchDiagnostics::default(),
            orbits,
        }
    }

    pub fn periods(&self) -> BTreeSet<usize> {
        self.orbits.iter().map(|o| o.least_period).collect()
    }

    pub fn with_period(&self, p: usize) -> impl Iterator<Item = &PeriodicOrbit> {
        self.orbits.iter().filter(move |o| o.least_period == p)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.orbits.iter().flat_map(|o| o.points.iter().copied())
    }
}

enum Attempt {
    Found(PeriodicOrbit),
    Singular,
    Diverged,
    NoConvergence,
    OutOfRegion,
}

fn seed_grid(region: &PhaseDomain, n: usize) -> Vec<Point> {
    let centers = |ax: &crate::maps::Axis| -> Vec<f64> {
        let w = ax.length() / n as f64;
        (0..n).map(|i| ax.lower + (i as f64 + 0.5) * w).collect()
    };
    match region.axes.as_slice() {
        [x] => centers(x).into_iter().map(Point::one).collect(),
        [x, y] => {
            let ys = centers(y);
            centers(x)
                .into_iter()
                .flat_map(|a| ys.iter().map(move |&b| Point::two(a, b)))
                .collect()
        }
        _ => Vec::new(),
    }
}

fn lex_cmp(a: &Point, b: &Point) -> std::cmp::Ordering {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Builds the orbit through a converged root of `ψ^p = id`, reducing `p` to
/// the least period and starting the cycle at its lexicographically smallest point.
fn assemble_orbit(
    map: &MapSystem,
    x: Point,
    p: usize,
    s: &SearchSettings,
    region: &PhaseDomain,
) -> Attempt {
    let guard = 10.0 * s.tol;
    let mut least = p;
    for q in (1..p).filter(|q| p.is_multiple_of(*q)) {
        match residual(map, x, q) {
            Ok(r) if r <= guard => {
                least = q;
                break;
            }
            Ok(_) => {}
            Err(_) => return Attempt::Diverged,
        }
    }
    let x = if least < p {
        newton_refine(map, x, least, s.tol, s.max_iter).unwrap_or(x)
    } else {
        x
    };
    let mut points = Vec::with_capacity(least);
    let mut y = x;
    for _ in 0..least {
        points.push(map.domain().normalize(y));
        y = match map.eval(y) {
            Ok(v) => v,
            Err(_) => return Attempt::Diverged,
        };
    }
    if points.iter().any(|&pt| !region.contains(pt, 1e-9)) {
        return Attempt::OutOfRegion;
    }
    let start = points
        .iter()
        .enumerate()
        .min_by(|a, b| lex_cmp(a.1, b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    points.rotate_left(start);

    let mut res: f64 = 0.0;
    for &pt in &points {
        match residual(map, pt, least) {
            Ok(r) => res = res.max(r),
            Err(_) => return Attempt::Diverged,
        }
    }
    let multipliers = match orbit_multipliers(map, points[0], least) {
        Ok(m) => m,
        Err(_) => return Attempt::Diverged,
    };
    let class = classify_multipliers(&multipliers, s.hyperbolicity_band);
    Attempt::Found(PeriodicOrbit { least_period: least, points, multipliers, class, residual: res })
}

/// Searches `region` for periodic orbits of least period `1..=max_period`.
pub fn find_periodic(
    map: &MapSystem,
    region: &PhaseDomain,
    max_period: usize,
    grid_per_axis: usize,
    tol: f64,
) -> Result<OrbitCatalog, SearchError> {
    find_periodic_with(map, region, &SearchSettings::new(max_period, grid_per_axis, tol))
}

pub fn find_periodic_with(
    map: &MapSystem,
    region: &PhaseDomain,
    s: &SearchSettings,
) -> Result<OrbitCatalog, SearchError> {
    s.validate()?;
    region.validate().map_err(|e| SearchError::InvalidInput(e.to_string()))?;
    if region.dim() != map.dim() {
        return Err(SearchError::InvalidInput(format!(
            "region has {} axes, map is {}-dimensional",
            region.dim(),
            map.dim()
        )));
    }
    let seeds = seed_grid(region, s.grid_per_axis);

    // results are merged in seed order, so output does not depend on thread count
    let attempts: Vec<Vec<Attempt>> = seeds
        .par_iter()
        .map(|&seed| {
            (1..=s.max_period)
                .map(|p| match newton_refine(map, seed, p, s.tol, s.max_iter) {
                    Ok(x) => assemble_orbit(map, x, p, s, region),
                    Err(NewtonFailure::Singular { at }) if residual(map, at, p).is_ok_and(|r| r < s.tol) => {
                        assemble_orbit(map, at, p, s, region)
                    }
                    Err(NewtonFailure::Singular { .. }) => Attempt::Singular,
                    Err(NewtonFailure::Diverged(_)) => Attempt::Diverged,
                    Err(_) => Attempt::NoConvergence,
                })
                .collect()
        })
        .collect();

    let mut diag = SearchDiagnostics { seeds: seeds.len(), ..Default::default() };
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let dom = map.domain();
    for attempt in attempts.into_iter().flatten() {
        diag.attempts += 1;
        match attempt {
            Attempt::Found(orbit) => {
                diag.converged += 1;
                let head = orbit.first();
                let dup = orbits.iter().any(|o| {
                    o.least_period == orbit.least_period
                        && o.points.iter().any(|&q| dom.distance(q, head) <= s.dedup_radius)
                });
                if dup {
                    diag.duplicates += 1;
                } else {
                    orbits.push(orbit);
                }
            }
            Attempt::Singular => diag.singular += 1,
            Attempt::Diverged => diag.diverged += 1,
            Attempt::NoConvergence => diag.no_convergence += 1,
            Attempt::OutOfRegion => diag.out_of_region += 1,
        }
    }
    orbits.sort_by(|a, b| {
        a.least_period
            .cmp(&b.least_period)
            .then_with(|| lex_cmp(&a.first(), &b.first()))
    });

    Ok(OrbitCatalog {
        map: map.identity(),
        max_period: s.max_period,
        region: region.clone(),
        settings: *s,
        diagnostics: diag,
        orbits,
    })
}
