//! Periodic orbits, nonwandering sets, and bifurcation cascades of
//! low-dimensional maps.
//!
//! The crate is organised bottom-up: [`maps`] defines phase domains and the
//! built-in families, [`periodic`] finds and classifies periodic orbits,
//! [`interval`] adds one-dimensional tools (Sharkovskii order, lap entropy),
//! [`cascade`] tracks period-doubling bifurcations, and [`recurrence`]
//! approximates the nonwandering set with box covers.

pub mod cascade;
pub mod interval;
pub mod maps;
pub mod periodic;
pub mod recurrence;

pub use maps::{Family, FamilyTag, MapError, MapSystem, PhaseDomain, PhaseMap, Point};
pub use periodic::{find_periodic, find_periodic_with, OrbitCatalog, PeriodicOrbit, StabilityClass};

/// Formats a float with 17 significant digits; non-finite values print as `nan`.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".into()
    }
}
