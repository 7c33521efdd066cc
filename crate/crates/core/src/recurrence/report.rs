//! Comparing a periodic catalog with a recurrent box set.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cover::BoxCover;
use super::graph::RecurrentSet;
use super::RecurrenceError;
use crate::fmt17;
use crate::periodic::OrbitCatalog;

/// Name of the approximated object, carried in every report.
pub const OBJECT: &str = "chain-recurrent approximation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "P≈Ω")]
    Agree,
    #[serde(rename = "P≠Ω")]
    Differ,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Agree => "P≈Ω",
            Verdict::Differ => "P≠Ω",
        })
    }
}

/// Discrepancy threshold on the total volume of unmatched recurrent boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Fraction of the recurrent volume.
    Relative(f64),
    /// Absolute chart volume.
    Absolute(f64),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Relative(0.01)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxStatus {
    Matched,
    Discrepant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub center: Vec<f64>,
    pub halfwidth: Vec<f64>,
}

/// Outcome of comparing cataloged periodic points against recurrent boxes.
///
/// Recurrent boxes are grouped into clusters: boxes sharing a strongly
/// connected component or touching each other belong to the same cluster. A
/// recurrent box is matched when its cluster contains a cataloged periodic
/// point and discrepant otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub object: String,
    pub map: String,
    pub catalog_max_period: usize,
    pub depth: u32,
    pub boxes_total: usize,
    pub boxes_recurrent: usize,
    pub matched: usize,
    pub boxes_with_periodic_points: usize,
    pub clusters: usize,
    pub clusters_matched: usize,
    pub periodic_points: usize,
    pub periodic_points_contained: usize,
    pub discrepancy: Vec<BoxRecord>,
    pub recurrent_volume: f64,
    pub discrepancy_volume: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    #[serde(skip)]
    pub statuses: Vec<(BoxRecord, BoxStatus)>,
}

impl OmegaReport {
    /// Centers, half-widths, and status of every recurrent box.
    pub fn to_csv(&self) -> String {
        let dim = self.statuses.first().map_or(0, |(b, _)| b.center.len());
        let mut cols: Vec<String> = (0..dim).map(|i| format!("center_{i}")).collect();
        cols.extend((0..dim).map(|i| format!("halfwidth_{i}")));
        cols.push("status".into());
        let mut out = cols.join(",");
        out.push('\n');
        for (b, status) in &self.statuses {
            let nums: Vec<String> = b.center.iter().chain(&b.halfwidth).map(|&v| fmt17(v)).collect();
            let status = match status {
                BoxStatus::Matched => "matched",
                BoxStatus::Discrepant => "discrepant",
            };
            let _ = writeln!(out, "{},{status}", nums.join(","));
        }
        out
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Marks every recurrent box matched or discrepant and issues a verdict.
pub fn compare_p_omega(
    catalog: &OrbitCatalog,
    recurrent: &RecurrentSet,
    cover: &BoxCover,
    threshold: Threshold,
) -> Result<OmegaReport, RecurrenceError> {
    if catalog.map != recurrent.map() {
        return Err(RecurrenceError::MapMismatch {
            catalog: catalog.map.clone(),
            recurrent: recurrent.map().to_string(),
        });
    }
    if recurrent.box_count() != cover.len() || recurrent.depth() != cover.depth() {
        return Err(RecurrenceError::InvalidInput("recurrent set does not belong to this cover".into()));
    }
    if catalog.max_period == 0 {
        return Err(RecurrenceError::InvalidInput("catalog horizon must be stated".into()));
    }

    let n = cover.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut first_in_component = std::collections::HashMap::new();
    for i in recurrent.indices() {
        let root = *first_in_component.entry(recurrent.component(i)).or_insert(i as usize);
        union(&mut parent, root, i as usize);
        for j in cover.neighbors(&cover.boxes()[i as usize]) {
            if recurrent.is_recurrent(j) {
                union(&mut parent, i as usize, j as usize);
            }
        }
    }

    let mut seeded = vec![false; n];
    let mut with_points = vec![false; n];
    let mut contained = 0;
    let mut total_points = 0;
    for p in catalog.points() {
        total_points += 1;
        let hits: Vec<u32> = cover.boxes_containing(p).into_iter().filter(|&i| recurrent.is_recurrent(i)).collect();
        if !hits.is_empty() {
            contained += 1;
        }
        for i in hits {
            with_points[i as usize] = true;
            let r = find(&mut parent, i as usize);
            seeded[r] = true;
        }
    }

    let mut statuses = Vec::new();
    let mut discrepancy = Vec::new();
    let (mut recurrent_volume, mut discrepancy_volume) = (0.0, 0.0);
    let mut roots = std::collections::BTreeSet::new();
    let mut matched_roots = std::collections::BTreeSet::new();
    for i in recurrent.indices() {
        let key = cover.boxes()[i as usize];
        let record = BoxRecord { center: cover.center(&key).coords().to_vec(), halfwidth: cover.halfwidths(&key) };
        let vol = cover.volume(&key);
        recurrent_volume += vol;
        let r = find(&mut parent, i as usize);
        roots.insert(r);
        let status = if seeded[r] {
            matched_roots.insert(r);
            BoxStatus::Matched
        } else {
            discrepancy_volume += vol;
            discrepancy.push(record.clone());
            BoxStatus::Discrepant
        };
        statuses.push((record, status));
    }

    let threshold = match threshold {
        Threshold::Relative(f) => f * recurrent_volume,
        Threshold::Absolute(v) => v,
    };
    let verdict = if discrepancy_volume < threshold {
        Verdict::Agree
    } else {
        Verdict::Differ
    };
    let boxes_recurrent = statuses.len();
    Ok(OmegaReport {
        object: OBJECT.into(),
        map: catalog.map.clone(),
        catalog_max_period: catalog.max_period,
        depth: cover.depth(),
        boxes_total: n,
        boxes_recurrent,
        matched: boxes_recurrent - discrepancy.len(),
        boxes_with_periodic_points: with_points.iter().filter(|&&b| b).count(),
        clusters: roots.len(),
        clusters_matched: matched_roots.len(),
        periodic_points: total_points,
        periodic_points_contained: contained,
        discrepancy,
        recurrent_volume,
        discrepancy_volume,
        threshold,
        verdict,
        statuses,
    })
}
