//! End-to-end tokenization: bins, quota, groups, block scores, canvases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gop::{self, BinEnergies, GopError, GopPartition, PartitionConfig};
use crate::packer::{self, BlockCandidate, Canvas, CanvasLabel, GroupSelector, PackError, PackingConfig, TokenRecord};
use crate::saliency::{self, BlockScoreGrid, SaliencyConfig, SaliencyError};
use crate::trace::{block_grid_dims, CodecTrace, FrameType, TraceError};
use crate::PATCH_SIZE;

#[derive(Debug, Error)]
pub enum TokenizeError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Gop(#[from] GopError),
    #[error(transparent)]
    Saliency(#[from] SaliencyError),
    #[error(transparent)]
    Pack(#[from] PackError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TokenizerConfig {
    pub partition: PartitionConfig,
    pub saliency: SaliencyConfig,
    pub packing: PackingConfig,
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<(), TokenizeError> {
        self.partition.validate()?;
        self.saliency.validate()?;
        self.packing.validate()?;
        Ok(())
    }
}

/// Everything the codec front end emits for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct Tokenization {
    pub energies: BinEnergies,
    pub partition: GopPartition,
    /// Group id of every source frame.
    pub frame_groups: Vec<u32>,
    /// Anchor frame per group, `None` for groups that contain no frame.
    pub anchors: Vec<Option<u32>>,
    /// P-canvases per group.
    pub allocation: Vec<u32>,
    pub canvases: Vec<Canvas>,
    pub tokens: Vec<TokenRecord>,
}

impl Tokenization {
    pub fn p_canvas_count(&self) -> usize {
        self.canvases.iter().filter(|c| c.label == CanvasLabel::P).count()
    }
}

/// Block scores for every frame that carries motion or residual data.
pub fn score_frames(trace: &CodecTrace, cfg: &SaliencyConfig) -> Result<Vec<Option<BlockScoreGrid>>, SaliencyError> {
    cfg.validate()?;
    trace
        .frames()
        .iter()
        .map(|f| saliency::frame_block_scores(f, trace.width(), trace.height(), cfg))
        .collect()
}

/// Partition-and-pack stage, given precomputed block scores (one entry per
/// frame, as produced by [`score_frames`]).
pub fn pack(trace: &CodecTrace, scores: &[Option<BlockScoreGrid>], cfg: &TokenizerConfig) -> Result<Tokenization, TokenizeError> {
    cfg.validate()?;
    assert_eq!(scores.len(), trace.len(), "one score slot per frame");

    let energies = gop::bin_bitcost(trace, cfg.partition.bin_duration_s)?;
    let quota = gop::compute_quota(&energies, cfg.partition.target_groups);
    let partition = gop::partition_gops(&energies, &cfg.partition, quota)?;

    let groups = partition.len();
    let mut frame_groups = Vec::with_capacity(trace.len());
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); groups];
    for f in trace.frames() {
        let k = gop::assign_group(f.packet.frame_index, trace.fps(), &partition)?;
        frame_groups.push(k as u32);
        members[k].push(f.packet.frame_index);
    }

    let anchors: Vec<Option<u32>> = members
        .iter()
        .map(|m| {
            m.iter()
                .copied()
                .find(|&f| trace.frames()[f as usize].packet.frame_type == FrameType::I)
                .or_else(|| m.first().copied())
        })
        .collect();

    let allocation = packer::allocate_canvases(&partition, &energies, cfg.packing.p_canvases_total)?;

    let grid = block_grid_dims(trace.width(), trace.height(), PATCH_SIZE);
    let capacity = cfg.packing.canvas_blocks;
    let mut canvases = Vec::new();
    for k in 0..groups {
        let group = k as u32;
        if let Some(anchor) = anchors[k] {
            canvases.extend(packer::pack_i_canvas(anchor, group, grid, capacity));
        }
        let candidates: Vec<BlockCandidate> = members[k]
            .iter()
            .filter(|&&f| Some(f) != anchors[k])
            .filter_map(|&f| scores[f as usize].as_ref().map(|g| (f, g)))
            .flat_map(|(f, g)| {
                (0..g.blocks_i).flat_map(move |i| {
                    (0..g.blocks_j).map(move |j| BlockCandidate {
                        frame: f,
                        block_i: i,
                        block_j: j,
                        score: g.get(i, j),
                    })
                })
            })
            .collect();
        let mut selector = GroupSelector::new(&candidates, cfg.packing.lambda, cfg.packing.alpha_peak);
        let m = allocation[k];
        for r in 0..m {
            let mut canvas = Canvas::new(CanvasLabel::P, group, capacity);
            canvas.cells = selector.pack_p_canvas(r, m, capacity as usize);
            canvases.push(canvas);
        }
    }

    for (s, c) in canvases.iter_mut().enumerate() {
        c.index = s as u32;
    }
    let tokens = canvases.iter().flat_map(Canvas::tokens).collect();

    Ok(Tokenization {
        energies,
        partition,
        frame_groups,
        anchors,
        allocation,
        canvases,
        tokens,
    })
}

/// Score every frame, then partition and pack.
pub fn tokenize(trace: &CodecTrace, cfg: &TokenizerConfig) -> Result<Tokenization, TokenizeError> {
    cfg.validate()?;
    let scores = score_frames(trace, &cfg.saliency)?;
    pack(trace, &scores, cfg)
}
