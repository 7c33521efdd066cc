//! Chain-recurrent approximation of the nonwandering set by box covers.
//!
//! A cover of the phase domain is turned into a directed graph by sampling
//! each box and linking it to the boxes its (padded) images meet. Boxes on
//! directed cycles approximate the chain-recurrent set; repeatedly keeping
//! only those boxes and subdividing them sharpens the picture.

mod cover;
mod graph;
mod report;

use thiserror::Error;

pub use cover::{build_cover, BoxCover, BoxKey, MAX_COVER_BYTES, MAX_INDEX_BITS};
pub use graph::{box_samples, recurrent_boxes, sample_transitions, RecurrentSet, TransitionGraph};
pub use report::{compare_p_omega, BoxRecord, BoxStatus, OmegaReport, Threshold, Verdict};

use crate::maps::PhaseMap;

#[derive(Debug, Error, PartialEq)]
pub enum RecurrenceError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cover of {boxes} boxes would need about {bytes} bytes")]
    TooLarge { boxes: u64, bytes: u64 },
    #[error("map mismatch: catalog is for {catalog}, recurrent set is for {recurrent}")]
    MapMismatch { catalog: String, recurrent: String },
}

/// How the padding radius follows the cell size during refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PaddingRule {
    /// A multiple of the cell diagonal at the current depth.
    CellDiagonal(f64),
    /// The same radius at every depth.
    Fixed(f64),
}

impl Default for PaddingRule {
    fn default() -> Self {
        PaddingRule::CellDiagonal(0.5)
    }
}

impl PaddingRule {
    pub fn radius(&self, cover: &BoxCover) -> f64 {
        match *self {
            PaddingRule::CellDiagonal(f) => f * cover.cell_diagonal(),
            PaddingRule::Fixed(r) => r,
        }
    }
}

/// One refinement level: the active cover and its recurrent boxes.
#[derive(Debug, Clone)]
pub struct RefineLevel {
    pub cover: BoxCover,
    pub graph: TransitionGraph,
    pub recurrent: RecurrentSet,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub levels: Vec<RefineLevel>,
    pub warning: Option<String>,
}

impl RefineOutcome {
    pub fn last(&self) -> &RefineLevel {
        self.levels.last().expect("refinement yields at least one level")
    }

    pub fn cover(&self) -> &BoxCover {
        &self.last().cover
    }

    pub fn recurrent(&self) -> &RecurrentSet {
        &self.last().recurrent
    }
}

/// Samples, keeps recurrent boxes, subdivides, and repeats until
/// `target_depth`. Stops early with a warning if nothing is recurrent.
pub fn refine_loop<M: PhaseMap + ?Sized>(
    map: &M,
    initial: BoxCover,
    target_depth: u32,
    samples_per_box: usize,
    rule: PaddingRule,
    seed: u64,
) -> Result<RefineOutcome, RecurrenceError> {
    if target_depth < initial.depth() {
        return Err(RecurrenceError::InvalidInput(format!(
            "target depth {target_depth} is below the initial depth {}",
            initial.depth()
        )));
    }
    let mut levels = Vec::new();
    let mut cover = initial;
    loop {
        let graph = sample_transitions(map, &cover, samples_per_box, rule.radius(&cover), seed)?;
        let recurrent = recurrent_boxes(&graph);
        let depth = cover.depth();
        let keep = recurrent.keys(&cover);
        levels.push(RefineLevel { cover, graph, recurrent });
        if keep.is_empty() {
            let warning = format!("no recurrent boxes at depth {depth}; every sample may escape");
            return Ok(RefineOutcome { levels, warning: Some(warning) });
        }
        if depth == target_depth {
            return Ok(RefineOutcome { levels, warning: None });
        }
        cover = levels.last().expect("just pushed").cover.subdivide(&keep)?;
    }
}
