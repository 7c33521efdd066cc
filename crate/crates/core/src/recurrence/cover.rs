//! Dyadic box covers of a phase domain.

use std::collections::HashMap;

use super::RecurrenceError;
use crate::maps::{Chart, PhaseDomain, Point, Topology};

/// Multi-index of a cell; one-dimensional covers leave the second slot at 0.
pub type BoxKey = [u32; 2];

/// Total index bits allowed across all axes.
pub const MAX_INDEX_BITS: u32 = 48;
/// Refuse covers whose bookkeeping would exceed this many bytes.
pub const MAX_COVER_BYTES: u64 = 8 << 30;
/// Rough per-box footprint: key, index entry, edges.
const BYTES_PER_BOX: u64 = 96;

/// A set of equal-sized cells at a fixed subdivision depth.
///
/// On the spherical chart the first and last φ-rows are single annular cells
/// (θ-index 0) at every depth.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCover {
    domain: PhaseDomain,
    depth: u32,
    boxes: Vec<BoxKey>,
    index: HashMap<BoxKey, u32>,
}

impl BoxCover {
    fn from_boxes(domain: PhaseDomain, depth: u32, mut boxes: Vec<BoxKey>) -> Self {
        boxes.sort_unstable();
        boxes.dedup();
        let index = boxes.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
        Self { domain, depth, boxes, index }
    }

    pub fn domain(&self) -> &PhaseDomain {
        &self.domain
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn boxes(&self) -> &[BoxKey] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn index_of(&self, key: &BoxKey) -> Option<u32> {
        self.index.get(key).copied()
    }

    pub fn cells_per_axis(&self) -> u32 {
        1 << self.depth
    }

    pub fn cell_widths(&self) -> Vec<f64> {
        let n = self.cells_per_axis() as f64;
        self.domain.axes.iter().map(|a| a.length() / n).collect()
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.cell_widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    fn is_pole_row(&self, row: u32) -> bool {
        self.domain.chart == Chart::Spherical && (row == 0 || row + 1 == self.cells_per_axis())
    }

    /// Maps a raw multi-index to the key of the cell that owns it.
    pub fn canonical(&self, mut key: BoxKey) -> BoxKey {
        if self.is_pole_row(key[1]) {
            key[0] = 0;
        }
        key
    }

    pub fn is_collapsed(&self, key: &BoxKey) -> bool {
        self.is_pole_row(key[1])
    }

    pub fn lower(&self, key: &BoxKey) -> Point {
        let w = self.cell_widths();
        let ax = &self.domain.axes;
        match ax.len() {
            1 => Point::one(ax[0].lower + key[0] as f64 * w[0]),
            _ => {
                let x = if self.is_collapsed(key) { ax[0].lower } else { ax[0].lower + key[0] as f64 * w[0] };
                Point::two(x, ax[1].lower + key[1] as f64 * w[1])
            }
        }
    }

    pub fn upper(&self, key: &BoxKey) -> Point {
        let w = self.cell_widths();
        let lo = self.lower(key);
        match self.domain.dim() {
            1 => Point::one(lo[0] + w[0]),
            _ => {
                let wx = if self.is_collapsed(key) { self.domain.axes[0].length() } else { w[0] };
                Point::two(lo[0] + wx, lo[1] + w[1])
            }
        }
    }

    pub fn center(&self, key: &BoxKey) -> Point {
        let (lo, hi) = (self.lower(key), self.upper(key));
        match self.domain.dim() {
            1 => Point::one(0.5 * (lo[0] + hi[0])),
            _ => Point::two(0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])),
        }
    }

    pub fn halfwidths(&self, key: &BoxKey) -> Vec<f64> {
        let (lo, hi) = (self.lower(key), self.upper(key));
        (0..self.domain.dim()).map(|i| 0.5 * (hi[i] - lo[i])).collect()
    }

    /// Chart (Lebesgue) measure of a cell.
    pub fn volume(&self, key: &BoxKey) -> f64 {
        let (lo, hi) = (self.lower(key), self.upper(key));
        (0..self.domain.dim()).map(|i| hi[i] - lo[i]).product()
    }

    /// Keys of active cells meeting the axis-aligned cube of half-width `r`
    /// around `p`. Bounded axes are clipped to the domain; wrap axes cycle.
    pub fn boxes_meeting(&self, p: Point, r: f64, out: &mut Vec<u32>) {
        let n = self.cells_per_axis() as i64;
        let w = self.cell_widths();
        let mut ranges: [(i64, i64); 2] = [(0, 0); 2];
        for (i, ax) in self.domain.axes.iter().enumerate() {
            let lo = ((p[i] - r - ax.lower) / w[i]).floor() as i64;
            let hi = ((p[i] + r - ax.lower) / w[i]).floor() as i64;
            ranges[i] = match ax.topology {
                Topology::Bounded => {
                    let (lo, hi) = (lo.max(0), hi.min(n - 1));
                    if lo > hi {
                        return;
                    }
                    (lo, hi)
                }
                Topology::Wrap if hi - lo + 1 >= n => (0, n - 1),
                Topology::Wrap => (lo, hi),
            };
        }
        let wrap = |i: usize, v: i64| -> u32 {
            match self.domain.axes[i].topology {
                Topology::Wrap => v.rem_euclid(n) as u32,
                Topology::Bounded => v as u32,
            }
        };
        let dim = self.domain.dim();
        let (r1lo, r1hi) = if dim == 2 { ranges[1] } else { (0, 0) };
        for j in r1lo..=r1hi {
            let row = if dim == 2 { wrap(1, j) } else { 0 };
            if dim == 2 && self.is_pole_row(row) {
                if let Some(idx) = self.index_of(&[0, row]) {
                    out.push(idx);
                }
                continue;
            }
            for i in ranges[0].0..=ranges[0].1 {
                if let Some(idx) = self.index_of(&[wrap(0, i), row]) {
                    out.push(idx);
                }
            }
        }
    }

    /// Keys of active cells whose closure contains `p`.
    pub fn boxes_containing(&self, p: Point) -> Vec<u32> {
        let r = 1e-9 * self.cell_widths().iter().cloned().fold(f64::INFINITY, f64::min);
        let p = self.domain.normalize(p);
        let mut out = Vec::new();
        self.boxes_meeting(p, r, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Active cells whose closures touch the closure of `key`, excluding it.
    pub fn neighbors(&self, key: &BoxKey) -> Vec<u32> {
        let n = self.cells_per_axis() as i64;
        let step = |axis: usize, v: i64| -> Option<u32> {
            match self.domain.axes[axis].topology {
                Topology::Wrap => Some(v.rem_euclid(n) as u32),
                Topology::Bounded if (0..n).contains(&v) => Some(v as u32),
                Topology::Bounded => None,
            }
        };
        let mut out = Vec::new();
        if self.domain.dim() == 1 {
            for d in [-1, 1] {
                if let Some(i) = step(0, key[0] as i64 + d).and_then(|i| self.index_of(&[i, 0])) {
                    out.push(i);
                }
            }
        } else if self.is_collapsed(key) {
            for d in [-1, 1] {
                if let Some(row) = step(1, key[1] as i64 + d) {
                    out.extend((0..n as u32).filter_map(|i| self.index_of(&self.canonical([i, row]))));
                }
            }
        } else {
            for dj in -1..=1 {
                let Some(row) = step(1, key[1] as i64 + dj) else { continue };
                for di in -1..=1 {
                    if let Some(col) = step(0, key[0] as i64 + di) {
                        let k = self.canonical([col, row]);
                        if k != *key {
                            out.extend(self.index_of(&k));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn children(&self, key: &BoxKey) -> Vec<BoxKey> {
        let dim = self.domain.dim();
        if dim == 1 {
            return vec![[2 * key[0], 0], [2 * key[0] + 1, 0]];
        }
        if self.is_collapsed(key) {
            // an annular pole cell splits into the finer pole cell and a full row
            let fine = 2 * self.cells_per_axis();
            let (pole_row, full_row) = if key[1] == 0 { (0, 1) } else { (fine - 1, fine - 2) };
            let mut out = vec![[0, pole_row]];
            out.extend((0..fine).map(|i| [i, full_row]));
            return out;
        }
        let mut out = Vec::with_capacity(4);
        for dj in 0..2 {
            for di in 0..2 {
                out.push([2 * key[0] + di, 2 * key[1] + dj]);
            }
        }
        out
    }

    /// The children of `keep` one level deeper.
    pub fn subdivide(&self, keep: &[BoxKey]) -> Result<BoxCover, RecurrenceError> {
        check_size(self.domain.dim(), self.depth + 1, keep.len() as u64 * 4)?;
        let deeper = BoxCover::from_boxes(self.domain.clone(), self.depth + 1, Vec::new());
        let kids: Vec<BoxKey> = keep
            .iter()
            .flat_map(|k| self.children(k))
            .map(|k| deeper.canonical(k))
            .collect();
        Ok(BoxCover::from_boxes(self.domain.clone(), self.depth + 1, kids))
    }

    /// Builds a cover from explicit keys (canonicalized and deduplicated).
    pub fn from_keys(domain: PhaseDomain, depth: u32, keys: Vec<BoxKey>) -> Result<BoxCover, RecurrenceError> {
        check_size(domain.dim(), depth, keys.len() as u64)?;
        let shell = BoxCover::from_boxes(domain.clone(), depth, Vec::new());
        let keys = keys.into_iter().map(|k| shell.canonical(k)).collect();
        Ok(BoxCover::from_boxes(domain, depth, keys))
    }
}

fn check_size(dim: usize, depth: u32, boxes: u64) -> Result<(), RecurrenceError> {
    if depth == 0 {
        return Err(RecurrenceError::InvalidInput("cover depth must be ≥ 1".into()));
    }
    if depth as u64 * dim as u64 > MAX_INDEX_BITS as u64 {
        return Err(RecurrenceError::InvalidInput(format!(
            "depth {depth} × dimension {dim} exceeds {MAX_INDEX_BITS} index bits"
        )));
    }
    let bytes = boxes.saturating_mul(BYTES_PER_BOX);
    if bytes > MAX_COVER_BYTES {
        return Err(RecurrenceError::TooLarge { boxes, bytes });
    }
    Ok(())
}

/// The full grid of `2^depth` cells per axis.
pub fn build_cover(domain: &PhaseDomain, depth: u32) -> Result<BoxCover, RecurrenceError> {
    domain.validate().map_err(|e| RecurrenceError::InvalidInput(e.to_string()))?;
    let dim = domain.dim();
    let total = if (depth as u64) * (dim as u64) < 64 { 1u64 << (depth as u64 * dim as u64) } else { u64::MAX };
    check_size(dim, depth, total)?;
    let n = 1u32 << depth;
    let shell = BoxCover::from_boxes(domain.clone(), depth, Vec::new());
    let keys: Vec<BoxKey> = match dim {
        1 => (0..n).map(|i| [i, 0]).collect(),
        _ => (0..n)
            .flat_map(|j| (0..n).map(move |i| [i, j]))
            .map(|k| shell.canonical(k))
            .collect(),
    };
    Ok(BoxCover::from_boxes(domain.clone(), depth, keys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn unit_interval_depth_three() {
        let c = build_cover(&PhaseDomain::interval(0.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(c.len(), 8);
        for k in c.boxes() {
            assert!((c.volume(k) - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn sphere_chart_grid_with_collapsed_poles() {
        let c = build_cover(&PhaseDomain::sphere(), 5).unwrap();
        // 30 full rows of 32 plus the two pole cells
        assert_eq!(c.len(), 30 * 32 + 2);
        let total: f64 = c.boxes().iter().map(|k| c.volume(k)).sum();
        assert!((total - TAU * PI).abs() < 1e-9);
        // θ indices wrap: a ball straddling θ = 0 meets the first and last columns
        let mut hits = Vec::new();
        c.boxes_meeting(Point::two(0.0, 1.5), 0.01, &mut hits);
        let cols: Vec<u32> = hits.iter().map(|&i| c.boxes()[i as usize][0]).collect();
        assert!(cols.contains(&0) && cols.contains(&31));
    }

    #[test]
    fn depth_zero_refused() {
        let d = PhaseDomain::rectangle((0.0, 1.0), (0.0, 1.0)).unwrap();
        assert!(matches!(build_cover(&d, 0), Err(RecurrenceError::InvalidInput(_))));
        assert!(matches!(build_cover(&d, 25), Err(RecurrenceError::InvalidInput(_))));
        assert!(matches!(build_cover(&d, 20), Err(RecurrenceError::TooLarge { .. })));
    }

    #[test]
    fn boundary_points_belong_to_both_cells() {
        let c = build_cover(&PhaseDomain::interval(0.0, 1.0).unwrap(), 2).unwrap();
        assert_eq!(c.boxes_containing(Point::one(0.5)).len(), 2);
        assert_eq!(c.boxes_containing(Point::one(0.3)).len(), 1);
    }

    #[test]
    fn subdividing_a_pole_cell() {
        let c = build_cover(&PhaseDomain::sphere(), 2).unwrap();
        let finer = c.subdivide(&[[0, 0]]).unwrap();
        assert_eq!(finer.depth(), 3);
        assert_eq!(finer.len(), 1 + 8);
        let area: f64 = finer.boxes().iter().map(|k| finer.volume(k)).sum();
        assert!((area - c.volume(&[0, 0])).abs() < 1e-12);
    }
}
