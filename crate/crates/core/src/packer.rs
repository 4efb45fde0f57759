//! Stratified block selection and I/P canvas packing.
//!
//! Inside a group every candidate block is first attenuated by its rank
//! within its own frame, `A / sqrt(1 + lambda * rank)`, so one busy frame
//! cannot monopolise the group. Frame masses (sum of attenuated scores plus a
//! peak bonus) give a cumulative allocation curve over the group's frames in
//! time order; P-canvas `r` of `m` draws from the frames whose share of that
//! mass falls in `[r/m, (r+1)/m)`, widening to neighbours when those frames
//! run dry.

use std::cmp::Ordering;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PackError {
    #[error("budget of {total} P-canvases cannot cover {groups} groups")]
    InsufficientBudget {
        total: u32,
        groups: usize,
        /// Best-effort split: highest-mass groups get a canvas first.
        allocation: Vec<u32>,
    },
    #[error("invalid packing config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PackingConfig {
    /// Same-frame attenuation strength.
    pub lambda: f64,
    /// Weight of a frame's strongest block in its allocation mass.
    pub alpha_peak: f64,
    /// Capacity of one canvas in 2x2 blocks.
    pub canvas_blocks: u32,
    /// P-canvases for the whole video.
    pub p_canvases_total: u32,
}

impl Default for PackingConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha_peak: 1.0,
            canvas_blocks: 196,
            p_canvases_total: 64,
        }
    }
}

impl PackingConfig {
    pub fn validate(&self) -> Result<(), PackError> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(PackError::InvalidConfig(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.alpha_peak.is_finite() && self.alpha_peak >= 0.0) {
            return Err(PackError::InvalidConfig(format!(
                "alpha_peak must be >= 0, got {}",
                self.alpha_peak
            )));
        }
        if self.canvas_blocks == 0 {
            return Err(PackError::InvalidConfig("canvas_blocks must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCandidate {
    pub frame: u32,
    pub block_i: u32,
    pub block_j: u32,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedCandidate {
    pub candidate: BlockCandidate,
    /// Zero-based rank within its frame, by descending score.
    pub rank: u32,
    pub attenuated: f64,
}

/// Selection order: attenuated score descending, then frame, row, column.
fn selection_order(a: &RankedCandidate, b: &RankedCandidate) -> Ordering {
    b.attenuated
        .total_cmp(&a.attenuated)
        .then(a.candidate.frame.cmp(&b.candidate.frame))
        .then(a.candidate.block_i.cmp(&b.candidate.block_i))
        .then(a.candidate.block_j.cmp(&b.candidate.block_j))
}

/// Rank candidates within each frame and attenuate. Output is ordered by
/// frame, then rank.
pub fn attenuate(candidates: &[BlockCandidate], lambda: f64) -> Vec<RankedCandidate> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| {
        a.frame
            .cmp(&b.frame)
            .then(b.score.total_cmp(&a.score))
            .then(a.block_i.cmp(&b.block_i))
            .then(a.block_j.cmp(&b.block_j))
    });
    let mut out = Vec::with_capacity(sorted.len());
    let mut rank = 0u32;
    let mut prev_frame = None;
    for c in sorted {
        if prev_frame != Some(c.frame) {
            rank = 0;
            prev_frame = Some(c.frame);
        }
        out.push(RankedCandidate {
            candidate: c,
            rank,
            attenuated: c.score / (1.0 + lambda * f64::from(rank)).sqrt(),
        });
        rank += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameWeight {
    pub frame: u32,
    pub weight: f64,
}

/// `w_t = sum(max(0, A~)) + alpha_peak * max(A~)` per frame, frames ascending.
pub fn frame_weights(ranked: &[RankedCandidate], alpha_peak: f64) -> Vec<FrameWeight> {
    let mut out: Vec<FrameWeight> = Vec::new();
    let mut peak = f64::NEG_INFINITY;
    for rc in ranked {
        match out.last_mut() {
            Some(fw) if fw.frame == rc.candidate.frame => {
                fw.weight += rc.attenuated.max(0.0);
            }
            _ => {
                if let Some(fw) = out.last_mut() {
                    fw.weight += alpha_peak * peak;
                }
                out.push(FrameWeight {
                    frame: rc.candidate.frame,
                    weight: rc.attenuated.max(0.0),
                });
                peak = f64::NEG_INFINITY;
            }
        }
        peak = peak.max(rc.attenuated);
    }
    if let Some(fw) = out.last_mut() {
        fw.weight += alpha_peak * peak;
    }
    out
}

/// Normalized cumulative mass `F(l)` over frames in time order. Falls back
/// to the uniform curve `(l+1)/M` when the total is zero.
pub fn allocation_curve(weights: &[f64]) -> Vec<f64> {
    let m = weights.len();
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return (1..=m).map(|l| l as f64 / m as f64).collect();
    }
    let mut acc = 0.0;
    let mut curve: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc / total
        })
        .collect();
    if let Some(last) = curve.last_mut() {
        *last = 1.0;
    }
    curve
}

/// Split `total` canvases over groups in proportion to their bit-cost mass,
/// with at least one canvas per group and largest-remainder rounding.
pub fn allocate_by_mass(masses: &[u64], total: u32) -> Result<Vec<u32>, PackError> {
    let groups = masses.len();
    if groups == 0 {
        return Ok(Vec::new());
    }
    if (total as usize) < groups {
        // One canvas each to the heaviest groups, ties to the earlier group.
        let mut order: Vec<usize> = (0..groups).collect();
        order.sort_by(|&a, &b| masses[b].cmp(&masses[a]).then(a.cmp(&b)));
        let mut allocation = vec![0u32; groups];
        for &k in order.iter().take(total as usize) {
            allocation[k] = 1;
        }
        return Err(PackError::InsufficientBudget {
            total,
            groups,
            allocation,
        });
    }

    let spare = u64::from(total) - groups as u64;
    let mass_total: u64 = masses.iter().sum();
    let mut allocation = vec![1u32; groups];
    // Exact integer shares: spare * m_k / M, remainders compared as integers.
    let (shares, remainders): (Vec<u64>, Vec<u128>) = if mass_total == 0 {
        let each = spare / groups as u64;
        ((0..groups).map(|_| each).collect(), vec![0; groups])
    } else {
        masses
            .iter()
            .map(|&m| {
                let num = u128::from(spare) * u128::from(m);
                ((num / u128::from(mass_total)) as u64, num % u128::from(mass_total))
            })
            .unzip()
    };
    let mut assigned = 0u64;
    for (a, s) in allocation.iter_mut().zip(&shares) {
        *a += *s as u32;
        assigned += s;
    }
    let mut order: Vec<usize> = (0..groups).collect();
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
    for &k in order.iter().take((spare - assigned) as usize) {
        allocation[k] += 1;
    }
    Ok(allocation)
}

/// Per-group P-canvas counts from the groups' P/B bit-cost.
pub fn allocate_canvases(
    partition: &crate::gop::GopPartition,
    energies: &crate::gop::BinEnergies,
    total: u32,
) -> Result<Vec<u32>, PackError> {
    let masses: Vec<u64> = partition
        .groups
        .iter()
        .map(|g| energies.mass(g.start, g.end))
        .collect();
    allocate_by_mass(&masses, total)
}

/// Positions (in time order) of the frames whose mass interval
/// `[F(n-1), F(n))` meets `[r/m, (r+1)/m)`. Zero-mass frames count as the
/// point `F(n-1)`.
pub fn stratum_frames(curve: &[f64], r: u32, m: u32) -> Range<usize> {
    let lo = f64::from(r) / f64::from(m);
    let hi = f64::from(r + 1) / f64::from(m);
    let mut first = None;
    let mut last = 0;
    let mut prev = 0.0;
    for (n, &end) in curve.iter().enumerate() {
        let start = prev;
        let hit = if end > start {
            start < hi && end > lo
        } else {
            start >= lo && start < hi
        };
        if hit {
            first.get_or_insert(n);
            last = n;
        }
        prev = end;
    }
    match first {
        Some(f) => f..last + 1,
        None if curve.is_empty() => 0..0,
        None => {
            // Float edge case: take the frame whose interval contains lo.
            let n = curve.partition_point(|&f| f <= lo).min(curve.len() - 1);
            n..n + 1
        }
    }
}

/// A block placed on a canvas, identified by its source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanvasCell {
    pub frame: u32,
    pub block_i: u32,
    pub block_j: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CanvasLabel {
    I,
    P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    pub index: u32,
    pub label: CanvasLabel,
    pub group: u32,
    /// Grid size in blocks.
    pub rows: u32,
    pub cols: u32,
    pub cells: Vec<CanvasCell>,
}

/// Token metadata: canvas, source frame, packed and source patch coordinates, group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub canvas_index: u32,
    pub source_frame: u32,
    pub canvas_pos: (u32, u32),
    pub source_pos: (u32, u32),
    pub group: u32,
}

/// Block grid `(rows, cols)` of a canvas holding `capacity` blocks, as square as possible.
pub fn canvas_grid(capacity: u32) -> (u32, u32) {
    let mut cols = (f64::from(capacity)).sqrt() as u32;
    while cols * cols < capacity {
        cols += 1;
    }
    (capacity.div_ceil(cols.max(1)), cols.max(1))
}

impl Canvas {
    pub fn new(label: CanvasLabel, group: u32, capacity: u32) -> Self {
        let (rows, cols) = canvas_grid(capacity);
        Self {
            index: 0,
            label,
            group,
            rows,
            cols,
            cells: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        (self.rows * self.cols) as usize
    }

    pub fn source_frames(&self) -> Vec<u32> {
        let mut f: Vec<u32> = self.cells.iter().map(|c| c.frame).collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Four tokens per cell, cells row-major in placement order; within a
    /// block the patches go (0,0), (0,1), (1,0), (1,1).
    pub fn tokens(&self) -> impl Iterator<Item = TokenRecord> + '_ {
        self.cells.iter().enumerate().flat_map(move |(slot, cell)| {
            let slot = slot as u32;
            let (ci, cj) = (slot / self.cols, slot % self.cols);
            [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().map(move |(a, b)| TokenRecord {
                canvas_index: self.index,
                source_frame: cell.frame,
                canvas_pos: (2 * ci + a, 2 * cj + b),
                source_pos: (2 * cell.block_i + a, 2 * cell.block_j + b),
                group: self.group,
            })
        })
    }
}

/// Dense I-canvas pages for an anchor frame: every block of the padded
/// frame grid, row-major, `capacity` blocks per page.
pub fn pack_i_canvas(anchor_frame: u32, group: u32, grid: (u32, u32), capacity: u32) -> Vec<Canvas> {
    let (blocks_i, blocks_j) = grid;
    let cells: Vec<CanvasCell> = (0..blocks_i)
        .flat_map(|i| {
            (0..blocks_j).map(move |j| CanvasCell {
                frame: anchor_frame,
                block_i: i,
                block_j: j,
            })
        })
        .collect();
    cells
        .chunks(capacity as usize)
        .map(|page| {
            let mut c = Canvas::new(CanvasLabel::I, group, capacity);
            c.cells = page.to_vec();
            c
        })
        .collect()
}

/// Candidate pool of one group, tracking which blocks are already placed.
#[derive(Debug, Clone)]
pub struct GroupSelector {
    frames: Vec<u32>,
    /// Per frame (time order), candidates in selection order.
    pools: Vec<Vec<RankedCandidate>>,
    used: Vec<Vec<bool>>,
    weights: Vec<f64>,
    curve: Vec<f64>,
}

impl GroupSelector {
    pub fn new(candidates: &[BlockCandidate], lambda: f64, alpha_peak: f64) -> Self {
        let ranked = attenuate(candidates, lambda);
        let weights = frame_weights(&ranked, alpha_peak);
        let mut pools: Vec<Vec<RankedCandidate>> = Vec::with_capacity(weights.len());
        for rc in ranked {
            match pools.last_mut() {
                Some(p) if p[0].candidate.frame == rc.candidate.frame => p.push(rc),
                _ => pools.push(vec![rc]),
            }
        }
        for p in &mut pools {
            p.sort_by(selection_order);
        }
        let w: Vec<f64> = weights.iter().map(|fw| fw.weight).collect();
        Self {
            frames: weights.iter().map(|fw| fw.frame).collect(),
            used: pools.iter().map(|p| vec![false; p.len()]).collect(),
            pools,
            curve: allocation_curve(&w),
            weights: w,
        }
    }

    pub fn frames(&self) -> &[u32] {
        &self.frames
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn curve(&self) -> &[f64] {
        &self.curve
    }

    pub fn remaining(&self) -> usize {
        self.used.iter().flatten().filter(|u| !**u).count()
    }

    fn take_from(&mut self, frames: &[usize], budget: usize, out: &mut Vec<CanvasCell>) {
        if budget == 0 {
            return;
        }
        let mut avail: Vec<(usize, usize)> = frames
            .iter()
            .flat_map(|&n| {
                self.used[n]
                    .iter()
                    .enumerate()
                    .filter(|(_, u)| !**u)
                    .map(move |(k, _)| (n, k))
            })
            .collect();
        avail.sort_by(|&(n1, k1), &(n2, k2)| selection_order(&self.pools[n1][k1], &self.pools[n2][k2]));
        for (n, k) in avail.into_iter().take(budget) {
            self.used[n][k] = true;
            let c = self.pools[n][k].candidate;
            out.push(CanvasCell {
                frame: c.frame,
                block_i: c.block_i,
                block_j: c.block_j,
            });
        }
    }

    /// Blocks for P-canvas `r` of `m`: the stratum first, then rings of one
    /// frame on each side until `capacity` blocks are found or the whole
    /// group is exhausted.
    pub fn pack_p_canvas(&mut self, r: u32, m: u32, capacity: usize) -> Vec<CanvasCell> {
        let mut cells = Vec::with_capacity(capacity);
        let total = self.frames.len();
        if total == 0 || m == 0 {
            return cells;
        }
        let window = stratum_frames(&self.curve, r, m);
        let (mut lo, mut hi) = (window.start, window.end);
        let inner: Vec<usize> = window.collect();
        self.take_from(&inner, capacity, &mut cells);
        while cells.len() < capacity && (lo > 0 || hi < total) {
            let mut ring = Vec::with_capacity(2);
            if lo > 0 {
                lo -= 1;
                ring.push(lo);
            }
            if hi < total {
                ring.push(hi);
                hi += 1;
            }
            let budget = capacity - cells.len();
            self.take_from(&ring, budget, &mut cells);
        }
        cells
    }
}
