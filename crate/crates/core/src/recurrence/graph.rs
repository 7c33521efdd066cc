//! Sampled transition graphs and their strongly connected components.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cover::{BoxCover, BoxKey};
use super::RecurrenceError;
use crate::maps::{PhaseMap, Point};

/// Directed graph on the active boxes of a cover plus one escape node.
///
/// Adjacency is stored in compressed rows; the escape node has index
/// `box_count()` and no outgoing edges in a freshly sampled graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionGraph {
    map: String,
    depth: u32,
    boxes: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl TransitionGraph {
    /// Builds a graph from per-node successor lists (boxes first, then
    /// optionally the escape node).
    pub fn from_adjacency(map: String, depth: u32, boxes: usize, mut adjacency: Vec<Vec<u32>>) -> Self {
        adjacency.resize(boxes + 1, Vec::new());
        let mut offsets = Vec::with_capacity(boxes + 2);
        let mut targets = Vec::new();
        offsets.push(0);
        for mut succ in adjacency {
            succ.sort_unstable();
            succ.dedup();
            targets.extend(succ);
            offsets.push(targets.len());
        }
        Self { map, depth, boxes, offsets, targets }
    }

    pub fn map(&self) -> &str {
        &self.map
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn box_count(&self) -> usize {
        self.boxes
    }

    /// Box count plus the escape node.
    pub fn node_count(&self) -> usize {
        self.boxes + 1
    }

    pub fn escape(&self) -> u32 {
        self.boxes as u32
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn successors(&self, node: u32) -> &[u32] {
        let n = node as usize;
        &self.targets[self.offsets[n]..self.offsets[n + 1]]
    }

    pub fn has_edge(&self, from: u32, to: u32) -> bool {
        self.successors(from).binary_search(&to).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count() as u32).flat_map(move |u| self.successors(u).iter().map(move |&v| (u, v)))
    }

    /// The same nodes with every edge reversed.
    pub fn transpose(&self) -> TransitionGraph {
        let mut adjacency = vec![Vec::new(); self.node_count()];
        for (u, v) in self.edges() {
            adjacency[v as usize].push(u);
        }
        TransitionGraph::from_adjacency(self.map.clone(), self.depth, self.boxes, adjacency)
    }

    /// Strongly connected components by an iterative Tarjan traversal.
    ///
    /// Component ids are renumbered in order of each component's smallest
    /// node, so the labelling depends only on the partition.
    pub fn components(&self) -> (Vec<u32>, usize) {
        const UNSEEN: u32 = u32::MAX;
        let n = self.node_count();
        let mut index = vec![UNSEEN; n];
        let mut low = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<u32> = Vec::new();
        let mut raw = vec![UNSEEN; n];
        let mut raw_count = 0u32;
        let mut counter = 0u32;
        let mut calls: Vec<(u32, usize)> = Vec::new();

        for root in 0..n as u32 {
            if index[root as usize] != UNSEEN {
                continue;
            }
            index[root as usize] = counter;
            low[root as usize] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root as usize] = true;
            calls.push((root, self.offsets[root as usize]));

            while let Some(top) = calls.last_mut() {
                let v = top.0 as usize;
                if top.1 < self.offsets[v + 1] {
                    let w = self.targets[top.1] as usize;
                    top.1 += 1;
                    if index[w] == UNSEEN {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w as u32);
                        on_stack[w] = true;
                        calls.push((w as u32, self.offsets[w]));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                calls.pop();
                if let Some(&(parent, _)) = calls.last() {
                    let p = parent as usize;
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w as usize] = false;
                        raw[w as usize] = raw_count;
                        if w as usize == v {
                            break;
                        }
                    }
                    raw_count += 1;
                }
            }
        }

        let mut relabel = vec![UNSEEN; raw_count as usize];
        let mut next = 0u32;
        let comp = raw
            .iter()
            .map(|&c| {
                if relabel[c as usize] == UNSEEN {
                    relabel[c as usize] = next;
                    next += 1;
                }
                relabel[c as usize]
            })
            .collect();
        (comp, next as usize)
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-box stream seed; depends only on the run seed, depth, and box key.
fn box_seed(seed: u64, depth: u32, key: &BoxKey) -> u64 {
    mix(mix(mix(seed ^ depth as u64) ^ key[0] as u64) ^ key[1] as u64)
}

/// Corners, center, then seeded uniform interior points of a box.
pub fn box_samples(cover: &BoxCover, key: &BoxKey, samples: usize, seed: u64) -> Vec<Point> {
    let lo = cover.lower(key);
    let hi = cover.upper(key);
    let dim = cover.domain().dim();
    let mut out = Vec::with_capacity(samples);
    for corner in 0..(1usize << dim) {
        let c: Vec<f64> = (0..dim).map(|i| if corner >> i & 1 == 0 { lo[i] } else { hi[i] }).collect();
        out.push(Point::from_slice(&c).expect("dimension 1 or 2"));
    }
    out.push(cover.center(key));
    let mut rng = ChaCha8Rng::seed_from_u64(box_seed(seed, cover.depth(), key));
    while out.len() < samples {
        let c: Vec<f64> = (0..dim).map(|i| lo[i] + rng.random::<f64>() * (hi[i] - lo[i])).collect();
        out.push(Point::from_slice(&c).expect("dimension 1 or 2"));
    }
    out
}

/// Builds the transition graph of `map` on the active boxes of `cover`.
///
/// Each sample image is inflated to a cube of half-width
/// `padding + map.padding_inflation(..)` and linked to every active box it
/// meets. Samples that diverge, leave the domain, or meet no active box link
/// to the escape node.
pub fn sample_transitions<M: PhaseMap + ?Sized>(
    map: &M,
    cover: &BoxCover,
    samples_per_box: usize,
    padding: f64,
    seed: u64,
) -> Result<TransitionGraph, RecurrenceError> {
    if samples_per_box < 5 {
        return Err(RecurrenceError::InvalidInput(format!(
            "samples_per_box must be ≥ 5, got {samples_per_box}"
        )));
    }
    if !(padding.is_finite() && padding >= 0.0) {
        return Err(RecurrenceError::InvalidInput(format!("padding must be finite and ≥ 0, got {padding}")));
    }
    if map.domain().dim() != cover.domain().dim() {
        return Err(RecurrenceError::InvalidInput("map and cover dimensions differ".into()));
    }
    let domain = cover.domain();
    let escape = cover.len() as u32;
    let cell = cover.cell_widths().into_iter().fold(0.0, f64::max);
    let adjacency: Vec<Vec<u32>> = cover
        .boxes()
        .par_iter()
        .map(|key| {
            let radius = padding + map.padding_inflation(cover.lower(key), cover.upper(key), cell);
            let mut succ = Vec::new();
            for x in box_samples(cover, key, samples_per_box, seed) {
                let y = match map.eval(x) {
                    Ok(y) if y.is_finite() => domain.normalize(y),
                    _ => {
                        succ.push(escape);
                        continue;
                    }
                };
                let before = succ.len();
                cover.boxes_meeting(y, radius, &mut succ);
                if succ.len() == before || !domain.contains(y, 0.0) {
                    succ.push(escape);
                }
            }
            succ
        })
        .collect();
    Ok(TransitionGraph::from_adjacency(map.identity(), cover.depth(), cover.len(), adjacency))
}

/// Boxes lying on directed cycles, with their strongly connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrentSet {
    map: String,
    depth: u32,
    recurrent: Vec<bool>,
    component: Vec<u32>,
}

impl RecurrentSet {
    pub fn map(&self) -> &str {
        &self.map
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Number of boxes in the underlying cover.
    pub fn box_count(&self) -> usize {
        self.recurrent.len()
    }

    pub fn is_recurrent(&self, box_index: u32) -> bool {
        self.recurrent[box_index as usize]
    }

    /// Strongly connected component of a box.
    pub fn component(&self, box_index: u32) -> u32 {
        self.component[box_index as usize]
    }

    /// Indices of recurrent boxes in cover order.
    pub fn indices(&self) -> Vec<u32> {
        (0..self.recurrent.len() as u32).filter(|&i| self.recurrent[i as usize]).collect()
    }

    pub fn len(&self) -> usize {
        self.recurrent.iter().filter(|&&r| r).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keys of recurrent boxes of `cover`.
    pub fn keys(&self, cover: &BoxCover) -> Vec<BoxKey> {
        self.indices().into_iter().map(|i| cover.boxes()[i as usize]).collect()
    }

    pub fn volume(&self, cover: &BoxCover) -> f64 {
        self.keys(cover).iter().map(|k| cover.volume(k)).sum()
    }
}

/// Marks boxes whose component contains an edge (size above one, or a
/// self-loop). The escape node is never recurrent.
pub fn recurrent_boxes(graph: &TransitionGraph) -> RecurrentSet {
    let (component, count) = graph.components();
    let mut size = vec![0usize; count];
    for &c in &component {
        size[c as usize] += 1;
    }
    let recurrent = (0..graph.box_count() as u32)
        .map(|v| size[component[v as usize] as usize] > 1 || graph.has_edge(v, v))
        .collect();
    let mut component = component;
    component.truncate(graph.box_count());
    RecurrentSet { map: graph.map.clone(), depth: graph.depth, recurrent, component }
}
