//! Phase domains and the built-in map families.
//!
//! Every family is evaluated in a fixed chart: the real line for the
//! quadratic and logistic maps, the plane for Hénon, and the `(θ, φ)`
//! spherical chart for the sphere rotation map. Jacobians are exact analytic
//! derivatives of the evaluation rule in that chart.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Index, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coordinates beyond this magnitude count as escape to infinity.
pub const ESCAPE_RADIUS: f64 = 1e8;

/// Points this close to a pole of the spherical chart are snapped onto it.
const POLE_SNAP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("orbit escaped after {step} steps")]
    Escaped { step: usize },
    #[error("map is not invertible: {0}")]
    NotInvertible(String),
}

/// A point of a one- or two-dimensional phase space.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: u8,
}

impl Point {
    pub fn one(x: f64) -> Self {
        Self { coords: [x, 0.0], dim: 1 }
    }

    pub fn two(x: f64, y: f64) -> Self {
        Self { coords: [x, y], dim: 2 }
    }

    pub fn from_slice(c: &[f64]) -> Result<Self, MapError> {
        match *c {
            [x] => Ok(Self::one(x)),
            [x, y] => Ok(Self::two(x, y)),
            _ => Err(MapError::InvalidInput(format!(
                "points have 1 or 2 coordinates, got {}",
                c.len()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    pub fn with(mut self, axis: usize, value: f64) -> Self {
        self.coords[axis] = value;
        self
    }

    fn escaped(&self) -> bool {
        self.coords().iter().any(|c| !c.is_finite() || c.abs() > ESCAPE_RADIUS)
    }

    pub fn max_abs(&self) -> f64 {
        self.coords().iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords()[i]
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point {
            coords: [self.coords[0] - rhs.coords[0], self.coords[1] - rhs.coords[1]],
            dim: self.dim,
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// A `d×d` real matrix with `d ∈ {1, 2}`; used for Jacobians and their products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian {
    m: [[f64; 2]; 2],
    dim: u8,
}

impl Jacobian {
    pub fn identity(dim: usize) -> Self {
        let m = if dim == 1 {
            [[1.0, 0.0], [0.0, 0.0]]
        } else {
            [[1.0, 0.0], [0.0, 1.0]]
        };
        Self { m, dim: dim as u8 }
    }

    pub fn scalar(d: f64) -> Self {
        Self { m: [[d, 0.0], [0.0, 0.0]], dim: 1 }
    }

    pub fn from_rows(r0: [f64; 2], r1: [f64; 2]) -> Self {
        Self { m: [r0, r1], dim: 2 }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn trace(&self) -> f64 {
        match self.dim {
            1 => self.m[0][0],
            _ => self.m[0][0] + self.m[1][1],
        }
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.m[0][0],
            _ => self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0],
        }
    }

    /// `self − I`.
    pub fn minus_identity(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim() {
            out.m[i][i] -= 1.0;
        }
        out
    }

    /// Solves `self · v = rhs`; `None` when `|det| < min_det`.
    pub fn solve(&self, rhs: Point, min_det: f64) -> Option<Point> {
        let det = self.det();
        if !(det.abs() >= min_det) {
            return None;
        }
        Some(match self.dim {
            1 => Point::one(rhs[0] / det),
            _ => {
                let [[a, b], [c, d]] = self.m;
                Point::two((d * rhs[0] - b * rhs[1]) / det, (a * rhs[1] - c * rhs[0]) / det)
            }
        })
    }

    /// Eigenvalues sorted by modulus, largest first.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        if self.dim == 1 {
            return vec![Complex64::new(self.m[0][0], 0.0)];
        }
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr - 4.0 * det;
        let mut eig = if disc >= 0.0 {
            let s = disc.sqrt();
            // avoid cancellation: take the larger root directly, recover the other from det
            let big = if tr >= 0.0 { (tr + s) / 2.0 } else { (tr - s) / 2.0 };
            let small = if big != 0.0 { det / big } else { 0.0 };
            vec![Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
        } else {
            let im = (-disc).sqrt() / 2.0;
            vec![Complex64::new(tr / 2.0, im), Complex64::new(tr / 2.0, -im)]
        };
        eig.sort_by(|x, y| y.norm().total_cmp(&x.norm()).then(y.im.total_cmp(&x.im)));
        eig
    }
}

impl Mul for Jacobian {
    type Output = Jacobian;
    fn mul(self, rhs: Jacobian) -> Jacobian {
        if self.dim == 1 {
            return Jacobian::scalar(self.m[0][0] * rhs.m[0][0]);
        }
        let a = self.m;
        let b = rhs.m;
        Jacobian::from_rows(
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Bounded,
    /// Coordinates are taken modulo the axis length.
    Wrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub topology: Topology,
}

impl Axis {
    pub fn bounded(lower: f64, upper: f64) -> Self {
        Self { lower, upper, topology: Topology::Bounded }
    }

    pub fn wrap(lower: f64, upper: f64) -> Self {
        Self { lower, upper, topology: Topology::Wrap }
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn normalize(&self, v: f64) -> f64 {
        match self.topology {
            Topology::Bounded => v,
            Topology::Wrap => {
                let len = self.length();
                let r = (v - self.lower).rem_euclid(len);
                // rem_euclid can round up to exactly len
                if r >= len {
                    self.lower
                } else {
                    self.lower + r
                }
            }
        }
    }

    /// Signed difference `a − b`, reduced to `[−len/2, len/2)` on wrap axes.
    pub fn diff(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        match self.topology {
            Topology::Bounded => d,
            Topology::Wrap => {
                let len = self.length();
                (d + len / 2.0).rem_euclid(len) - len / 2.0
            }
        }
    }
}

/// How chart coordinates relate to the underlying manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Cartesian,
    /// Axis 0 is longitude θ (wrap), axis 1 is polar angle φ ∈ [0, π].
    /// The rows φ = 0 and φ = π each collapse to a single pole point.
    Spherical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDomain {
    pub axes: Vec<Axis>,
    pub chart: Chart,
}

impl PhaseDomain {
    pub fn new(axes: Vec<Axis>) -> Result<Self, MapError> {
        let d = Self { axes, chart: Chart::Cartesian };
        d.validate()?;
        Ok(d)
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self, MapError> {
        Self::new(vec![Axis::bounded(lower, upper)])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64)) -> Result<Self, MapError> {
        Self::new(vec![Axis::bounded(x.0, x.1), Axis::bounded(y.0, y.1)])
    }

    pub fn sphere() -> Self {
        Self {
            axes: vec![Axis::wrap(0.0, TAU), Axis::bounded(0.0, PI)],
            chart: Chart::Spherical,
        }
    }

    pub fn validate(&self) -> Result<(), MapError> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(MapError::InvalidInput(format!(
                "domain dimension must be 1 or 2, got {}",
                self.axes.len()
            )));
        }
        for (i, ax) in self.axes.iter().enumerate() {
            if !(ax.lower.is_finite() && ax.upper.is_finite() && ax.lower < ax.upper) {
                return Err(MapError::InvalidInput(format!(
                    "axis {i} needs finite lower < upper, got [{}, {}]",
                    ax.lower, ax.upper
                )));
            }
        }
        if self.chart == Chart::Spherical && self.axes.len() != 2 {
            return Err(MapError::InvalidInput("spherical chart is two-dimensional".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Wrap-normalizes coordinates; on the spherical chart also snaps points
    /// at a pole to the canonical representative `θ = 0`.
    pub fn normalize(&self, mut p: Point) -> Point {
        for (i, ax) in self.axes.iter().enumerate() {
            p.coords[i] = ax.normalize(p.coords[i]);
        }
        if self.chart == Chart::Spherical {
            let phi = p.coords[1].clamp(0.0, PI);
            if phi <= POLE_SNAP {
                return Point::two(0.0, 0.0);
            }
            if phi >= PI - POLE_SNAP {
                return Point::two(0.0, PI);
            }
            p.coords[1] = phi;
        }
        p
    }

    /// Per-axis difference `a − b` respecting wrap axes and pole collapse.
    pub fn diff(&self, a: Point, b: Point) -> Point {
        let mut out = a - b;
        for (i, ax) in self.axes.iter().enumerate() {
            out.coords[i] = ax.diff(a.coords[i], b.coords[i]);
        }
        out
    }

    /// Max-norm distance after wrap normalization.
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        if self.chart == Chart::Spherical {
            let (a, b) = (self.normalize(a), self.normalize(b));
            let pole = |p: Point| p[1] == 0.0 || p[1] == PI;
            // θ carries no information at a pole
            if pole(a) || pole(b) {
                return (a[1] - b[1]).abs();
            }
            return self.diff(a, b).max_abs();
        }
        self.diff(a, b).max_abs()
    }

    /// Closed containment test, with wrap axes always satisfied.
    pub fn contains(&self, p: Point, slack: f64) -> bool {
        self.axes.iter().enumerate().all(|(i, ax)| match ax.topology {
            Topology::Wrap => true,
            Topology::Bounded => p[i] >= ax.lower - slack && p[i] <= ax.upper + slack,
        })
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }
}

/// Anything that can be iterated by the orbit, recurrence and entropy tools.
pub trait PhaseMap: Sync {
    fn domain(&self) -> &PhaseDomain;

    /// One step of the map, wrap-normalized. Escape is reported as an error.
    fn eval(&self, x: Point) -> Result<Point, MapError>;

    /// Analytic derivative of `eval` in chart coordinates.
    fn jacobian(&self, x: Point) -> Jacobian;

    /// Stable identity string; reports built from different maps refuse to mix.
    fn identity(&self) -> String;

    /// Extra padding for box images, on top of half the cell diagonal.
    fn padding_inflation(&self, _lower: Point, _upper: Point, _cell: f64) -> f64 {
        0.0
    }
}

/// The built-in map families with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `x ↦ a − x²`
    Quadratic { a: f64 },
    /// `x ↦ λ x (1 − x)`
    Logistic { lambda: f64 },
    /// `(x, y) ↦ (a − x² − b y, x)`
    Henon { a: f64, b: f64 },
    /// `(θ, φ) ↦ (θ + λ, (4/π²)(φ − π/2)³ + π/2)`
    Sphere { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Quadratic,
    Logistic,
    Henon,
    Sphere,
}

impl Family {
    pub fn tag(&self) -> FamilyTag {
        match self {
            Family::Quadratic { .. } => FamilyTag::Quadratic,
            Family::Logistic { .. } => FamilyTag::Logistic,
            Family::Henon { .. } => FamilyTag::Henon,
            Family::Sphere { .. } => FamilyTag::Sphere,
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Family::Quadratic { a } => vec![("a", a)],
            Family::Logistic { lambda } => vec![("lambda", lambda)],
            Family::Henon { a, b } => vec![("a", a), ("b", b)],
            Family::Sphere { lambda } => vec![("lambda", lambda)],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Family::Quadratic { .. } | Family::Logistic { .. } => 1,
            Family::Henon { .. } | Family::Sphere { .. } => 2,
        }
    }

    /// The natural working domain: the invariant interval `[−β, β]` for `a − x²`
    /// (β the repelling fixed point), `[0, 1]` for the logistic map,
    /// `[−3, 3]²` for Hénon and the full chart for the sphere.
    pub fn default_domain(&self) -> PhaseDomain {
        match *self {
            Family::Quadratic { a } => {
                let beta = if 1.0 + 4.0 * a >= 0.0 {
                    (1.0 + (1.0 + 4.0 * a).sqrt()) / 2.0
                } else {
                    0.5
                };
                PhaseDomain::interval(-beta, beta).expect("β > 0")
            }
            Family::Logistic { .. } => PhaseDomain::interval(0.0, 1.0).expect("unit interval"),
            Family::Henon { .. } => PhaseDomain::rectangle((-3.0, 3.0), (-3.0, 3.0)).expect("square"),
            Family::Sphere { .. } => PhaseDomain::sphere(),
        }
    }
}

/// The φ-component of the sphere map.
fn sphere_phi(phi: f64) -> f64 {
    let u = phi - FRAC_PI_2;
    4.0 / (PI * PI) * u * u * u + FRAC_PI_2
}

fn sphere_dphi(phi: f64) -> f64 {
    let u = phi - FRAC_PI_2;
    12.0 / (PI * PI) * u * u
}

/// A parameterized self-map of a phase domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSystem {
    family: Family,
    domain: PhaseDomain,
}

impl MapSystem {
    pub fn new(family: Family) -> Result<Self, MapError> {
        let domain = family.default_domain();
        Self::with_domain(family, domain)
    }

    pub fn with_domain(family: Family, domain: PhaseDomain) -> Result<Self, MapError> {
        for (name, v) in family.params() {
            if !v.is_finite() {
                return Err(MapError::InvalidInput(format!("parameter {name} = {v} is not finite")));
            }
        }
        domain.validate()?;
        if domain.dim() != family.dim() {
            return Err(MapError::InvalidInput(format!(
                "{:?} is {}-dimensional but the domain has {} axes",
                family.tag(),
                family.dim(),
                domain.dim()
            )));
        }
        if family.tag() == FamilyTag::Sphere && domain.chart != Chart::Spherical {
            return Err(MapError::InvalidInput("sphere map needs the spherical chart".into()));
        }
        Ok(Self { family, domain })
    }

    pub fn quadratic(a: f64) -> Result<Self, MapError> {
        Self::new(Family::Quadratic { a })
    }

    pub fn logistic(lambda: f64) -> Result<Self, MapError> {
        Self::new(Family::Logistic { lambda })
    }

    pub fn henon(a: f64, b: f64) -> Result<Self, MapError> {
        Self::new(Family::Henon { a, b })
    }

    pub fn sphere(lambda: f64) -> Result<Self, MapError> {
        Self::new(Family::Sphere { lambda })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn tag(&self) -> FamilyTag {
        self.family.tag()
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// Hénon with `b ≠ 0` and the sphere map are diffeomorphisms; the
    /// interval maps and Hénon with `b = 0` are not.
    pub fn invertible(&self) -> bool {
        match self.family {
            Family::Henon { b, .. } => b != 0.0,
            Family::Sphere { .. } => true,
            _ => false,
        }
    }

    fn check_input(&self, x: Point) -> Result<(), MapError> {
        if x.dim() != self.dim() {
            return Err(MapError::InvalidInput(format!(
                "expected a {}-dimensional point, got {:?}",
                self.dim(),
                x
            )));
        }
        if !x.is_finite() {
            return Err(MapError::InvalidInput(format!("non-finite point {x:?}")));
        }
        Ok(())
    }

    fn raw_eval(&self, x: Point) -> Point {
        match self.family {
            Family::Quadratic { a } => Point::one(a - x[0] * x[0]),
            Family::Logistic { lambda } => Point::one(lambda * x[0] * (1.0 - x[0])),
            Family::Henon { a, b } => Point::two(a - x[0] * x[0] - b * x[1], x[0]),
            Family::Sphere { lambda } => {
                let x = self.domain.normalize(x);
                if x[1] == 0.0 || x[1] == PI {
                    // poles are fixed; θ is meaningless there
                    x
                } else {
                    Point::two(x[0] + lambda, sphere_phi(x[1]))
                }
            }
        }
    }

    /// Inverse map. Defined for Hénon with `b ≠ 0` and for the sphere map.
    pub fn inverse(&self, x: Point) -> Result<Point, MapError> {
        self.check_input(x)?;
        match self.family {
            Family::Henon { a, b } if b != 0.0 => {
                // (X, Y) = H(x, y) ⇒ x = Y, y = (a − Y² − X)/b
                Ok(Point::two(x[1], (a - x[1] * x[1] - x[0]) / b))
            }
            Family::Sphere { lambda } => {
                let x = self.domain.normalize(x);
                if x[1] == 0.0 || x[1] == PI {
                    return Ok(x);
                }
                let v = (x[1] - FRAC_PI_2) * PI * PI / 4.0;
                Ok(self.domain.normalize(Point::two(x[0] - lambda, v.cbrt() + FRAC_PI_2)))
            }
            _ => Err(MapError::NotInvertible(format!("{:?}", self.family))),
        }
    }
}

impl PhaseMap for MapSystem {
    fn domain(&self) -> &PhaseDomain {
        &self.domain
    }

    fn eval(&self, x: Point) -> Result<Point, MapError> {
        self.check_input(x)?;
        let y = self.raw_eval(x);
        if y.escaped() {
            return Err(MapError::Escaped { step: 1 });
        }
        Ok(self.domain.normalize(y))
    }

    fn jacobian(&self, x: Point) -> Jacobian {
        match self.family {
            Family::Quadratic { .. } => Jacobian::scalar(-2.0 * x[0]),
            Family::Logistic { lambda } => Jacobian::scalar(lambda * (1.0 - 2.0 * x[0])),
            Family::Henon { b, .. } => Jacobian::from_rows([-2.0 * x[0], -b], [1.0, 0.0]),
            Family::Sphere { .. } => Jacobian::from_rows([1.0, 0.0], [0.0, sphere_dphi(x[1])]),
        }
    }

    fn identity(&self) -> String {
        let params: Vec<String> = self
            .family
            .params()
            .iter()
            .map(|(k, v)| format!("{k}={v:e}"))
            .collect();
        format!("{:?}({})", self.tag(), params.join(",")).to_lowercase()
    }

    fn padding_inflation(&self, lower: Point, upper: Point, cell: f64) -> f64 {
        match self.family {
            Family::Henon { .. } => {
                let xmax = lower[0].abs().max(upper[0].abs());
                (2.0 * xmax).max(1.0) * cell
            }
            _ => 0.0,
        }
    }
}

/// The identity map on a domain; a reference map for the recurrence and
/// entropy tools.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityMap {
    domain: PhaseDomain,
}

impl IdentityMap {
    pub fn new(domain: PhaseDomain) -> Self {
        Self { domain }
    }
}

impl PhaseMap for IdentityMap {
    fn domain(&self) -> &PhaseDomain {
        &self.domain
    }

    fn eval(&self, x: Point) -> Result<Point, MapError> {
        if !x.is_finite() {
            return Err(MapError::InvalidInput(format!("non-finite point {x:?}")));
        }
        Ok(self.domain.normalize(x))
    }

    fn jacobian(&self, x: Point) -> Jacobian {
        Jacobian::identity(x.dim())
    }

    fn identity(&self) -> String {
        format!("identity(dim={})", self.domain.dim())
    }
}

/// `ψⁿ(x)`; `n = 0` returns `x` unchanged.
pub fn iterate<M: PhaseMap + ?Sized>(map: &M, x: Point, n: usize) -> Result<Point, MapError> {
    let mut y = x;
    for step in 0..n {
        y = map.eval(y).map_err(|e| match e {
            MapError::Escaped { .. } => MapError::Escaped { step: step + 1 },
            other => other,
        })?;
    }
    Ok(y)
}

/// Chain-rule product `J(ψ^{p−1}x) ⋯ J(x)` together with `ψ^p(x)`.
pub fn orbit_jacobian<M: PhaseMap + ?Sized>(
    map: &M,
    x: Point,
    p: usize,
) -> Result<(Point, Jacobian), MapError> {
    let mut y = x;
    let mut acc = Jacobian::identity(x.dim());
    for step in 0..p {
        acc = map.jacobian(y) * acc;
        y = map.eval(y).map_err(|e| match e {
            MapError::Escaped { .. } => MapError::Escaped { step: step + 1 },
            other => other,
        })?;
    }
    Ok((y, acc))
}

/// Derivative of `ψ^p` at `x`.
pub fn jacobian_along_orbit<M: PhaseMap + ?Sized>(
    map: &M,
    x: Point,
    p: usize,
) -> Result<Jacobian, MapError> {
    if p == 0 {
        return Err(MapError::InvalidInput("orbit Jacobian needs p ≥ 1".into()));
    }
    orbit_jacobian(map, x, p).map(|(_, j)| j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn henon_origin() {
        let h = MapSystem::henon(1.4, 0.3).unwrap();
        let y = h.eval(Point::two(0.0, 0.0)).unwrap();
        assert_eq!(y, Point::two(1.4, 0.0));
    }

    #[test]
    fn sphere_poles_fixed_and_equator_invariant() {
        let s = MapSystem::sphere(1.0).unwrap();
        let y = s.eval(Point::two(0.5, 0.0)).unwrap();
        assert_eq!(y[1], 0.0);
        let y = s.eval(Point::two(0.5, PI)).unwrap();
        assert_eq!(y[1], PI);
        // away from the pole θ advances by λ
        let y = s.eval(Point::two(0.5, 1.0)).unwrap();
        assert!((y[0] - 1.5).abs() < 1e-15);
        for lam in [0.3, 1.0, 2.5, 6.0] {
            let s = MapSystem::sphere(lam).unwrap();
            let y = s.eval(Point::two(0.1, FRAC_PI_2)).unwrap();
            assert_eq!(y[1], FRAC_PI_2);
        }
    }

    #[test]
    fn jacobian_examples() {
        let h = MapSystem::henon(1.4, 0.3).unwrap();
        for x in [-2.0, 0.0, 0.7, 1.3] {
            assert!((h.jacobian(Point::two(x, 0.4)).det() - 0.3).abs() < 1e-15);
        }
        let s = MapSystem::sphere(1.0).unwrap();
        // (12/π²)(π/2)² = 3
        assert!((s.jacobian(Point::two(0.0, 0.0)).entry(1, 1) - 3.0).abs() < 1e-14);
        let q = MapSystem::quadratic(0.37).unwrap();
        assert_eq!(q.jacobian(Point::one(0.0)).entry(0, 0), 0.0);
    }

    #[test]
    fn iterate_examples() {
        let q = MapSystem::quadratic(2.0).unwrap();
        let x = Point::one(0.0);
        assert_eq!(iterate(&q, x, 0).unwrap(), x);
        assert_eq!(iterate(&q, x, 1).unwrap(), Point::one(2.0));
        assert_eq!(iterate(&q, x, 2).unwrap(), Point::one(-2.0));

        let s = MapSystem::sphere(PI / 3.0).unwrap();
        let x = Point::two(0.4, FRAC_PI_2);
        let y = iterate(&s, x, 6).unwrap();
        assert!(s.domain().distance(x, y) < 1e-12);
    }

    #[test]
    fn escape_is_an_error_not_a_panic() {
        let q = MapSystem::quadratic(2.0).unwrap();
        match iterate(&q, Point::one(3.0), 50) {
            Err(MapError::Escaped { step }) => assert!(step > 1 && step < 10),
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(MapSystem::henon(f64::NAN, 0.3).is_err());
        let h = MapSystem::henon(1.4, 0.3).unwrap();
        assert!(h.eval(Point::two(f64::INFINITY, 0.0)).is_err());
        assert!(h.eval(Point::one(0.0)).is_err());
        assert!(PhaseDomain::interval(1.0, 1.0).is_err());
        assert!(jacobian_along_orbit(&h, Point::two(0.0, 0.0), 0).is_err());
    }

    #[test]
    fn henon_b_zero_is_not_invertible() {
        let h = MapSystem::henon(1.0, 0.0).unwrap();
        assert!(!h.invertible());
        assert!(matches!(h.inverse(Point::two(0.1, 0.2)), Err(MapError::NotInvertible(_))));
    }

    #[test]
    fn orbit_jacobian_examples() {
        let q = MapSystem::quadratic(0.5).unwrap();
        let xs = (-1.0 + 3f64.sqrt()) / 2.0;
        let j = jacobian_along_orbit(&q, Point::one(xs), 1).unwrap();
        assert!((j.entry(0, 0) + 0.732_050_807_568_877_2).abs() < 1e-12);

        let h = MapSystem::henon(1.2, 0.3).unwrap();
        let x = Point::two(0.1, -0.2);
        assert_eq!(jacobian_along_orbit(&h, x, 1).unwrap(), h.jacobian(x));
        let j = jacobian_along_orbit(&h, x, 5).unwrap();
        assert!((j.det() - 0.3f64.powi(5)).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_henon_fixed_point() {
        // μ² + 1.4μ + 0.3 = 0
        let h = MapSystem::henon(1.4, 0.3).unwrap();
        let eig = h.jacobian(Point::two(0.7, 0.7)).eigenvalues();
        let disc = (1.4f64 * 1.4 - 1.2).sqrt();
        assert!((eig[0].re - (-1.4 - disc) / 2.0).abs() < 1e-12);
        assert!((eig[1].re - (-1.4 + disc) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_axis_normalizes_into_half_open_range() {
        let ax = Axis::wrap(0.0, TAU);
        assert_eq!(ax.normalize(TAU), 0.0);
        assert!((ax.normalize(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        assert!((ax.diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-14);
    }
}
