//! Task dispatch and report rendering.

use std::fmt::Write as _;

use periomega::cascade::{build_cascade_from, CascadeTable};
use periomega::interval::{
    check_forcing_closure, forced_periods, lap_entropy, power_of_two_check, shark_compare, LapEntropy,
};
use periomega::recurrence::{
    build_cover, compare_p_omega, refine_loop, OmegaReport, PaddingRule, RefineOutcome, Threshold,
};
use periomega::{find_periodic, fmt17, MapSystem, OrbitCatalog, PhaseMap};
use serde::Serialize;

use crate::config::{Format, OmegaTask, RunConfig, SharkovskiiTask, Task};
use crate::error::CliError;
use crate::json;

/// Summary of one refinement level.
#[derive(Debug, Serialize)]
struct LevelSummary {
    depth: u32,
    boxes: usize,
    edges: usize,
    recurrent: usize,
}

#[derive(Debug, Serialize)]
struct RecurrentBox {
    center: Vec<f64>,
    halfwidth: Vec<f64>,
    component: u32,
}

#[derive(Debug, Serialize)]
struct OmegaResult {
    map: String,
    depth: u32,
    levels: Vec<LevelSummary>,
    boxes_recurrent: usize,
    recurrent_volume: f64,
    warning: Option<String>,
    boxes: Vec<RecurrentBox>,
}

#[derive(Debug, Serialize)]
struct CompareResult {
    catalog: OrbitCatalog,
    levels: Vec<LevelSummary>,
    warning: Option<String>,
    report: OmegaReport,
}

#[derive(Debug, Serialize)]
struct EntropyResult {
    map: String,
    #[serde(flatten)]
    entropy: LapEntropy,
}

#[derive(Serialize)]
struct Document<'a, R> {
    config: &'a RunConfig,
    result: R,
}

fn levels(outcome: &RefineOutcome) -> Vec<LevelSummary> {
    outcome
        .levels
        .iter()
        .map(|l| LevelSummary {
            depth: l.cover.depth(),
            boxes: l.cover.len(),
            edges: l.graph.edge_count(),
            recurrent: l.recurrent.len(),
        })
        .collect()
}

fn refine(map: &MapSystem, t: &OmegaTask) -> Result<RefineOutcome, CliError> {
    let initial = build_cover(map.domain(), t.initial_depth.unwrap_or(t.depth))?;
    Ok(refine_loop(map, initial, t.depth, t.samples_per_box, PaddingRule::CellDiagonal(t.padding), t.seed)?)
}

fn omega_result(map: &MapSystem, outcome: &RefineOutcome) -> OmegaResult {
    let cover = outcome.cover();
    let rec = outcome.recurrent();
    let boxes = rec
        .indices()
        .into_iter()
        .map(|i| {
            let key = cover.boxes()[i as usize];
            RecurrentBox {
                center: cover.center(&key).coords().to_vec(),
                halfwidth: cover.halfwidths(&key),
                component: rec.component(i),
            }
        })
        .collect();
    OmegaResult {
        map: map.identity(),
        depth: cover.depth(),
        levels: levels(outcome),
        boxes_recurrent: rec.len(),
        recurrent_volume: rec.volume(cover),
        warning: outcome.warning.clone(),
        boxes,
    }
}

/// Executes the task and returns the report text, newline-terminated.
pub fn run(cfg: &mut RunConfig) -> Result<String, CliError> {
    let map = cfg.resolve()?;
    let format = cfg.output.format;
    let header = || -> Result<String, CliError> { Ok(format!("# config: {}\n", json::compact(&*cfg)?)) };
    let doc = |result: &dyn erased::Report| result.document(cfg);
    let need_map = || map.as_ref().expect("resolve returns a map for tasks that need one");

    match &cfg.task {
        Task::Periodic(t) => {
            let map = need_map();
            let catalog = find_periodic(map, map.domain(), t.max_period, t.grid.unwrap_or(1), t.tol)?;
            match format {
                Format::Json => doc(&catalog),
                Format::Csv => Ok(header()? + &catalog_csv(&catalog)),
            }
        }
        Task::Omega(t) => {
            let map = need_map();
            let result = omega_result(map, &refine(map, t)?);
            match format {
                Format::Json => doc(&result),
                Format::Csv => Ok(header()? + &omega_csv(&result)),
            }
        }
        Task::Compare(t) => {
            let map = need_map();
            let catalog = find_periodic(map, map.domain(), t.max_period, t.grid.unwrap_or(1), t.tol)?;
            let omega = OmegaTask {
                depth: t.depth,
                initial_depth: t.initial_depth,
                samples_per_box: t.samples_per_box,
                padding: t.padding,
                seed: t.seed,
            };
            let outcome = refine(map, &omega)?;
            let report =
                compare_p_omega(&catalog, outcome.recurrent(), outcome.cover(), Threshold::Relative(t.threshold))?;
            match format {
                Format::Json => {
                    doc(&CompareResult { catalog, levels: levels(&outcome), warning: outcome.warning, report })
                }
                Format::Csv => Ok(header()? + &report.to_csv()),
            }
        }
        Task::Bifurcate(t) => {
            let family = cfg.map.as_ref().expect("bifurcate has a map").cascade_family()?;
            let table: CascadeTable = build_cascade_from(&family, t.n_max, t.tol, (t.bracket[0], t.bracket[1]))?;
            match format {
                Format::Json => doc(&table),
                Format::Csv => Ok(header()? + &table.to_csv()),
            }
        }
        Task::Sharkovskii(q) => sharkovskii(cfg, q, map.as_ref()),
        Task::Entropy(t) => {
            let map = need_map();
            let entropy = lap_entropy(map, t.iterations, t.sample_density)?;
            match format {
                Format::Json => doc(&EntropyResult { map: map.identity(), entropy }),
                Format::Csv => Ok(header()? + &entropy_csv(&entropy)),
            }
        }
    }
}

fn sharkovskii(cfg: &RunConfig, q: &SharkovskiiTask, map: Option<&MapSystem>) -> Result<String, CliError> {
    #[derive(Serialize)]
    struct ConfigLine<'a> {
        config: &'a RunConfig,
    }
    let mut out = json::compact(&ConfigLine { config: cfg })?;
    out.push('\n');
    let mut line = |v: serde_json::Value| -> Result<(), CliError> {
        out.push_str(&json::compact(&v)?);
        out.push('\n');
        Ok(())
    };
    match *q {
        SharkovskiiTask::Compare { m, n } => {
            let order = shark_compare(m, n)?;
            line(serde_json::json!({ "m": m, "n": n, "order": order }))?;
        }
        SharkovskiiTask::Forced { n, cap } => {
            line(serde_json::json!({ "n": n, "cap": cap, "forced": forced_periods(n, cap)? }))?;
        }
        SharkovskiiTask::Check { max_period, grid, tol, cap } => {
            let map = map.expect("check has a map");
            let catalog = find_periodic(map, map.domain(), max_period, grid.unwrap_or(1), tol)?;
            line(serde_json::json!({ "map": map.identity(), "periods": catalog.periods() }))?;
            line(serde_json::json!({ "forcing_closure": check_forcing_closure(&catalog, cap.unwrap_or(max_period as u64))? }))?;
            line(serde_json::json!({ "power_of_two": power_of_two_check(&catalog)? }))?;
        }
    }
    Ok(out)
}

fn catalog_csv(catalog: &OrbitCatalog) -> String {
    let dim = catalog.region.dim();
    let coords: Vec<String> = (0..dim).map(|i| format!("x_{i}")).collect();
    let mut out = format!("orbit,least_period,class,point,{},multiplier_modulus\n", coords.join(","));
    for (k, orbit) in catalog.orbits.iter().enumerate() {
        let modulus = orbit.multipliers.first().map_or(f64::NAN, |m| m.norm());
        let class = serde_json::to_value(orbit.class).ok().and_then(|v| v.as_str().map(String::from));
        for (j, p) in orbit.points.iter().enumerate() {
            let xs: Vec<String> = p.coords().iter().map(|&v| fmt17(v)).collect();
            let _ = writeln!(
                out,
                "{k},{},{},{j},{},{}",
                orbit.least_period,
                class.as_deref().unwrap_or(""),
                xs.join(","),
                fmt17(modulus)
            );
        }
    }
    out
}

fn omega_csv(result: &OmegaResult) -> String {
    let dim = result.boxes.first().map_or(0, |b| b.center.len());
    let mut cols: Vec<String> = (0..dim).map(|i| format!("center_{i}")).collect();
    cols.extend((0..dim).map(|i| format!("halfwidth_{i}")));
    cols.push("component".into());
    let mut out = cols.join(",") + "\n";
    for b in &result.boxes {
        let nums: Vec<String> = b.center.iter().chain(&b.halfwidth).map(|&v| fmt17(v)).collect();
        let _ = writeln!(out, "{},{}", nums.join(","), b.component);
    }
    out
}

fn entropy_csv(e: &LapEntropy) -> String {
    let mut out = String::from("n,laps,coarse_laps\n");
    for (i, (laps, coarse)) in e.lap_counts.iter().zip(&e.coarse_lap_counts).enumerate() {
        let _ = writeln!(out, "{},{laps},{coarse}", i + 1);
    }
    out
}

/// Lets one closure render any serializable result as a pretty document.
mod erased {
    use super::*;

    pub trait Report {
        fn document(&self, cfg: &RunConfig) -> Result<String, CliError>;
    }

    impl<T: Serialize> Report for T {
        fn document(&self, cfg: &RunConfig) -> Result<String, CliError> {
            Ok(json::pretty(&Document { config: cfg, result: self })? + "\n")
        }
    }
}
