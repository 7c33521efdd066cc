//! Run configuration: what to compute, on which map, and where to write it.

use periomega::cascade::{CascadeFamily, MAX_N_MAX};
use periomega::interval::{MAX_LAP_ITERATIONS, MAX_SAMPLE_DENSITY};
use periomega::maps::Axis;
use periomega::periodic::MAX_PERIOD_LIMIT;
use periomega::{Family, FamilyTag, MapSystem, PhaseDomain};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliError};

/// Largest number of Newton seeds a periodic search may request.
const MAX_SEEDS: usize = 10_000_000;
/// Largest period cap accepted by Sharkovskii queries.
const MAX_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapConfig>,
    pub task: Task,
    /// Not echoed: where a report is written does not change its content.
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub family: FamilyTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Working domain as one `[lower, upper]` pair per axis; the family's
    /// natural domain when absent. Not available for the sphere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Periodic(PeriodicTask),
    Omega(OmegaTask),
    Compare(CompareTask),
    Bifurcate(BifurcateTask),
    Sharkovskii(SharkovskiiTask),
    Entropy(EntropyTask),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicTask {
    #[serde(default = "default_max_period")]
    pub max_period: usize,
    /// Newton seeds per axis; 400 for interval maps and 40 for planar ones when absent.
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaTask {
    #[serde(default = "default_depth")]
    pub depth: u32,
    /// Depth of the first, full cover; `min(4, depth)` when absent.
    #[serde(default)]
    pub initial_depth: Option<u32>,
    #[serde(default = "default_samples")]
    pub samples_per_box: usize,
    /// Image padding as a multiple of the cell diagonal.
    #[serde(default = "default_padding")]
    pub padding: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareTask {
    #[serde(default = "default_max_period")]
    pub max_period: usize,
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_depth")]
    pub depth: u32,
    #[serde(default)]
    pub initial_depth: Option<u32>,
    #[serde(default = "default_samples")]
    pub samples_per_box: usize,
    #[serde(default = "default_padding")]
    pub padding: f64,
    #[serde(default)]
    pub seed: u64,
    /// Largest discrepancy volume, relative to the recurrent volume, that still counts as agreement.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcateTask {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_cascade_tol")]
    pub tol: f64,
    /// Parameter interval searched for the saddle-node.
    #[serde(default = "default_bracket")]
    pub bracket: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "snake_case", deny_unknown_fields)]
pub enum SharkovskiiTask {
    Compare {
        m: u64,
        n: u64,
    },
    Forced {
        n: u64,
        #[serde(default = "default_cap")]
        cap: u64,
    },
    /// Forcing closure and power-of-two checks on a periodic search.
    Check {
        #[serde(default = "default_max_period")]
        max_period: usize,
        #[serde(default)]
        grid: Option<usize>,
        #[serde(default = "default_tol")]
        tol: f64,
        /// Periods checked for closure; the search horizon `max_period` when absent.
        #[serde(default)]
        cap: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyTask {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_sample_density")]
    pub sample_density: u32,
}

fn default_max_period() -> usize {
    8
}

fn default_tol() -> f64 {
    1e-10
}

fn default_depth() -> u32 {
    8
}

fn default_samples() -> usize {
    9
}

fn default_padding() -> f64 {
    0.5
}

fn default_threshold() -> f64 {
    0.01
}

fn default_n_max() -> usize {
    6
}

fn default_cascade_tol() -> f64 {
    1e-12
}

fn default_bracket() -> [f64; 2] {
    [-1.0, 0.0]
}

fn default_cap() -> u64 {
    20
}

fn default_iterations() -> usize {
    30
}

fn default_sample_density() -> u32 {
    20
}

impl Default for PeriodicTask {
    fn default() -> Self {
        Self { max_period: default_max_period(), grid: None, tol: default_tol() }
    }
}

impl Default for OmegaTask {
    fn default() -> Self {
        Self {
            depth: default_depth(),
            initial_depth: None,
            samples_per_box: default_samples(),
            padding: default_padding(),
            seed: 0,
        }
    }
}

impl Default for CompareTask {
    fn default() -> Self {
        Self {
            max_period: default_max_period(),
            grid: None,
            tol: default_tol(),
            depth: default_depth(),
            initial_depth: None,
            samples_per_box: default_samples(),
            padding: default_padding(),
            seed: 0,
            threshold: default_threshold(),
        }
    }
}

impl Default for BifurcateTask {
    fn default() -> Self {
        Self { n_max: default_n_max(), tol: default_cascade_tol(), bracket: default_bracket() }
    }
}

impl Default for EntropyTask {
    fn default() -> Self {
        Self { iterations: default_iterations(), sample_density: default_sample_density() }
    }
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Periodic(_) => "periodic",
            Task::Omega(_) => "omega",
            Task::Compare(_) => "compare",
            Task::Bifurcate(_) => "bifurcate",
            Task::Sharkovskii(_) => "sharkovskii",
            Task::Entropy(_) => "entropy",
        }
    }

    fn needs_map(&self) -> bool {
        !matches!(self, Task::Sharkovskii(SharkovskiiTask::Compare { .. } | SharkovskiiTask::Forced { .. }))
    }
}

impl MapConfig {
    pub fn new(family: FamilyTag) -> Self {
        Self { family, a: None, b: None, lambda: None, domain: None }
    }

    fn require(&self, name: &str, v: Option<f64>) -> Result<f64, CliError> {
        match v {
            Some(v) if v.is_finite() => Ok(v),
            Some(v) => invalid(format!("map parameter {name} = {v} is not finite")),
            None => invalid(format!("map family {} needs parameter {name}", tag_name(self.family))),
        }
    }

    fn reject(&self, name: &str, v: Option<f64>) -> Result<(), CliError> {
        match v {
            Some(_) => invalid(format!("parameter {name} does not apply to {}", tag_name(self.family))),
            None => Ok(()),
        }
    }

    pub fn family(&self) -> Result<Family, CliError> {
        let f = match self.family {
            FamilyTag::Quadratic => Family::Quadratic { a: self.require("a", self.a)? },
            FamilyTag::Logistic => Family::Logistic { lambda: self.require("lambda", self.lambda)? },
            FamilyTag::Henon => Family::Henon { a: self.require("a", self.a)?, b: self.require("b", self.b)? },
            FamilyTag::Sphere => Family::Sphere { lambda: self.require("lambda", self.lambda)? },
        };
        let uses = |name: &str| f.params().iter().any(|(n, _)| *n == name);
        for (name, v) in [("a", self.a), ("b", self.b), ("lambda", self.lambda)] {
            if !uses(name) {
                self.reject(name, v)?;
            }
        }
        Ok(f)
    }

    pub fn build(&self) -> Result<MapSystem, CliError> {
        let family = self.family()?;
        let Some(domain) = &self.domain else {
            return Ok(MapSystem::new(family)?);
        };
        if family.tag() == FamilyTag::Sphere {
            return invalid("the sphere map always uses the full spherical chart; drop `domain`");
        }
        if domain.len() != family.dim() {
            return invalid(format!(
                "domain has {} axes but {} is {}-dimensional",
                domain.len(),
                tag_name(self.family),
                family.dim()
            ));
        }
        let axes = domain.iter().map(|&[lo, hi]| Axis::bounded(lo, hi)).collect();
        Ok(MapSystem::with_domain(family, PhaseDomain::new(axes)?)?)
    }

    /// The one-parameter family swept by `bifurcate`; the swept `a` must be absent.
    pub fn cascade_family(&self) -> Result<CascadeFamily, CliError> {
        if self.a.is_some() {
            return invalid("bifurcate sweeps the parameter a; drop it from the map");
        }
        if self.domain.is_some() {
            return invalid("bifurcate uses the natural domain at each parameter; drop `domain`");
        }
        self.reject("lambda", self.lambda)?;
        match self.family {
            FamilyTag::Quadratic => {
                self.reject("b", self.b)?;
                Ok(CascadeFamily::Quadratic)
            }
            FamilyTag::Henon => Ok(CascadeFamily::Henon { b: self.require("b", self.b)? }),
            other => invalid(format!("bifurcate supports quadratic and henon, not {}", tag_name(other))),
        }
    }
}

pub fn tag_name(tag: FamilyTag) -> &'static str {
    match tag {
        FamilyTag::Quadratic => "quadratic",
        FamilyTag::Logistic => "logistic",
        FamilyTag::Henon => "henon",
        FamilyTag::Sphere => "sphere",
    }
}

fn default_grid(dim: usize) -> usize {
    if dim == 1 {
        400
    } else {
        40
    }
}

fn check_search(max_period: usize, grid: usize, tol: f64, dim: usize) -> Result<(), CliError> {
    if max_period == 0 || max_period > MAX_PERIOD_LIMIT {
        return invalid(format!("max_period must be in 1..={MAX_PERIOD_LIMIT}, got {max_period}"));
    }
    if grid == 0 || grid.checked_pow(dim as u32).is_none_or(|n| n > MAX_SEEDS) {
        return invalid(format!("grid must be ≥ 1 with at most {MAX_SEEDS} seeds in total, got {grid} per axis"));
    }
    if !(tol > 0.0 && tol < 1e-3) {
        return invalid(format!("tol must be in (0, 1e-3), got {tol}"));
    }
    Ok(())
}

fn check_omega(depth: u32, initial: u32, samples: usize, padding: f64) -> Result<(), CliError> {
    if initial == 0 || initial > depth {
        return invalid(format!("initial_depth must be in 1..=depth ({depth}), got {initial}"));
    }
    if samples < 5 {
        return invalid(format!("samples_per_box must be ≥ 5 (corners and center), got {samples}"));
    }
    if !(padding.is_finite() && padding >= 0.0) {
        return invalid(format!("padding must be finite and ≥ 0, got {padding}"));
    }
    Ok(())
}

fn check_cap(n: u64, cap: u64) -> Result<(), CliError> {
    if n == 0 {
        return invalid("periods start at 1");
    }
    if cap < n || cap > MAX_CAP {
        return invalid(format!("cap must be in n..={MAX_CAP}, got {cap} with n = {n}"));
    }
    Ok(())
}

impl RunConfig {
    /// Fills defaults that depend on the map, then checks every precondition.
    /// Returns the map when the task uses one.
    pub fn resolve(&mut self) -> Result<Option<MapSystem>, CliError> {
        let map = match (&self.map, self.task.needs_map()) {
            (None, true) => return invalid(format!("task {} needs a map", self.task.kind())),
            (Some(_), false) => return invalid("this sharkovskii query takes no map"),
            (Some(m), true) if matches!(self.task, Task::Bifurcate(_)) => {
                m.cascade_family()?;
                None
            }
            (Some(m), true) => Some(m.build()?),
            (None, false) => None,
        };
        let dim = map.as_ref().map_or(1, MapSystem::dim);
        let one_dim = |what: &str| {
            if dim == 1 {
                Ok(())
            } else {
                invalid(format!("{what} needs a one-dimensional map"))
            }
        };
        match &mut self.task {
            Task::Periodic(t) => {
                let grid = *t.grid.get_or_insert(default_grid(dim));
                check_search(t.max_period, grid, t.tol, dim)?;
            }
            Task::Omega(t) => {
                let initial = *t.initial_depth.get_or_insert(t.depth.clamp(1, 4));
                check_omega(t.depth, initial, t.samples_per_box, t.padding)?;
            }
            Task::Compare(t) => {
                let grid = *t.grid.get_or_insert(default_grid(dim));
                check_search(t.max_period, grid, t.tol, dim)?;
                let initial = *t.initial_depth.get_or_insert(t.depth.clamp(1, 4));
                check_omega(t.depth, initial, t.samples_per_box, t.padding)?;
                if !(t.threshold > 0.0 && t.threshold < 1.0) {
                    return invalid(format!("threshold must be in (0, 1), got {}", t.threshold));
                }
            }
            Task::Bifurcate(t) => {
                if t.n_max == 0 || t.n_max > MAX_N_MAX {
                    return invalid(format!("n_max must be in 1..={MAX_N_MAX}, got {}", t.n_max));
                }
                if !(t.tol > 0.0 && t.tol < 1e-3) {
                    return invalid(format!("tol must be in (0, 1e-3), got {}", t.tol));
                }
                let [lo, hi] = t.bracket;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return invalid(format!("bracket must be finite with lower < upper, got [{lo}, {hi}]"));
                }
            }
            Task::Sharkovskii(SharkovskiiTask::Compare { m, n }) => {
                if *m == 0 || *n == 0 {
                    return invalid("periods start at 1");
                }
            }
            Task::Sharkovskii(SharkovskiiTask::Forced { n, cap }) => check_cap(*n, *cap)?,
            Task::Sharkovskii(SharkovskiiTask::Check { max_period, grid, tol, cap }) => {
                one_dim("the forcing check")?;
                let grid = *grid.get_or_insert(default_grid(dim));
                check_search(*max_period, grid, *tol, dim)?;
                let cap = *cap.get_or_insert(*max_period as u64);
                if cap == 0 || cap > *max_period as u64 {
                    return invalid(format!("cap must be in 1..=max_period ({max_period}), got {cap}"));
                }
            }
            Task::Entropy(t) => {
                one_dim("lap entropy")?;
                if t.iterations == 0 || t.iterations > MAX_LAP_ITERATIONS {
                    return invalid(format!("iterations must be in 1..={MAX_LAP_ITERATIONS}, got {}", t.iterations));
                }
                if !(4..=MAX_SAMPLE_DENSITY).contains(&t.sample_density) {
                    return invalid(format!(
                        "sample_density must be in 4..={MAX_SAMPLE_DENSITY}, got {}",
                        t.sample_density
                    ));
                }
            }
        }
        if matches!(self.task, Task::Sharkovskii(_)) && self.output.format == Format::Csv {
            return invalid("sharkovskii writes JSON lines only");
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(s)
    }

    #[test]
    fn defaults_fill_in_and_are_echoed() {
        let mut cfg = parse(r#"{"map": {"family": "henon", "a": 1.0, "b": 0.05}, "task": {"kind": "compare"}}"#).unwrap();
        cfg.resolve().unwrap();
        let Task::Compare(t) = &cfg.task else { panic!("wrong task") };
        assert_eq!((t.grid, t.initial_depth, t.depth, t.samples_per_box), (Some(40), Some(4), 8, 9));
        let echo = serde_json::to_value(&cfg).unwrap();
        assert_eq!(echo["task"]["threshold"], 0.01);
        assert_eq!(echo["task"]["kind"], "compare");
        assert!(echo.get("output").is_none());
    }

    #[test]
    fn unknown_fields_are_rejected_everywhere() {
        assert!(parse(r#"{"task": {"kind": "entropy"}, "extra": 1}"#).is_err());
        assert!(parse(r#"{"map": {"family": "quadratic", "a": 1, "c": 2}, "task": {"kind": "entropy"}}"#).is_err());
        assert!(parse(r#"{"map": {"family": "quadratic", "a": 1}, "task": {"kind": "entropy", "depth": 3}}"#).is_err());
        assert!(parse(r#"{"task": {"kind": "sharkovskii", "query": "compare", "m": 3, "n": 5, "cap": 2}}"#).is_err());
        assert!(parse(r#"{"task": {"kind": "entropy"}, "output": {"format": "xml"}}"#).is_err());
        assert!(parse(r#"{"task": {"kind": "sharkovskii", "query": "compare", "m": 3, "n": 5}}"#).is_ok());
    }

    #[test]
    fn map_parameters_must_fit_the_family() {
        let mut m = MapConfig::new(FamilyTag::Henon);
        m.a = Some(1.0);
        assert!(m.build().is_err(), "b missing");
        m.b = Some(0.3);
        m.lambda = Some(1.0);
        assert!(m.build().is_err(), "lambda is foreign to henon");
        m.lambda = None;
        assert_eq!(m.build().unwrap().dim(), 2);
        m.domain = Some(vec![[-2.0, 2.0]]);
        assert!(m.build().is_err(), "domain needs two axes");
        m.a = Some(f64::NAN);
        m.domain = None;
        assert!(m.build().is_err());
    }

    #[test]
    fn preconditions_are_checked_before_running() {
        let bad = [
            r#"{"map": {"family": "sphere", "lambda": 1}, "task": {"kind": "omega", "samples_per_box": 3}}"#,
            r#"{"map": {"family": "sphere", "lambda": 1}, "task": {"kind": "omega", "depth": 3, "initial_depth": 5}}"#,
            r#"{"map": {"family": "sphere", "lambda": 1}, "task": {"kind": "entropy"}}"#,
            r#"{"map": {"family": "quadratic", "a": 1}, "task": {"kind": "periodic", "max_period": 0}}"#,
            r#"{"map": {"family": "quadratic", "a": 1}, "task": {"kind": "bifurcate"}}"#,
            r#"{"map": {"family": "quadratic"}, "task": {"kind": "bifurcate", "bracket": [0, -1]}}"#,
            r#"{"map": {"family": "quadratic", "a": 1}, "task": {"kind": "compare", "threshold": 1.5}}"#,
            r#"{"task": {"kind": "sharkovskii", "query": "forced", "n": 30, "cap": 20}}"#,
            r#"{"task": {"kind": "periodic"}}"#,
        ];
        for s in bad {
            let mut cfg = parse(s).unwrap();
            assert!(matches!(cfg.resolve(), Err(CliError::Validation(_))), "{s}");
        }
    }
}
