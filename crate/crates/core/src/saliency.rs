//! Motion-residual saliency and 2x2-patch block scores.
//!
//! For a predicted frame, motion-vector magnitudes are spread over the pixels
//! of their codec block and the luma residual is read as its deviation from
//! 128. Both are scaled by a frame-level percentile and clipped to `[0, 1]`;
//! their sum is the saliency map. Block scores sum the map over the 32x32
//! footprint of each 2x2 group of 16x16 patches, so a selected block always
//! lines up with the encoder's 2x2 token merge.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{block_grid_dims, FrameTrace, MotionVectorField, ResidualPlane, RESIDUAL_ZERO_POINT};
use crate::PATCH_SIZE;

#[derive(Debug, Error, PartialEq)]
pub enum SaliencyError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid saliency config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaliencyConfig {
    /// Percentile in (0, 100] used as the normalization anchor.
    pub percentile: f64,
    pub bitcost_prior_weight: f64,
}

impl Default for SaliencyConfig {
    fn default() -> Self {
        Self {
            percentile: 95.0,
            bitcost_prior_weight: 0.0,
        }
    }
}

impl SaliencyConfig {
    pub fn validate(&self) -> Result<(), SaliencyError> {
        if !(self.percentile > 0.0 && self.percentile <= 100.0) {
            return Err(SaliencyError::InvalidConfig(format!(
                "percentile must lie in (0, 100], got {}",
                self.percentile
            )));
        }
        if !(self.bitcost_prior_weight.is_finite() && self.bitcost_prior_weight >= 0.0) {
            return Err(SaliencyError::InvalidConfig(format!(
                "bitcost_prior_weight must be >= 0, got {}",
                self.bitcost_prior_weight
            )));
        }
        Ok(())
    }
}

/// Dense per-pixel values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl PixelMap {
    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// `S = M + R`, each term in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap(pub PixelMap);

#[derive(Debug, Clone, PartialEq)]
pub struct BlockScoreGrid {
    pub blocks_i: u32,
    pub blocks_j: u32,
    pub scores: Vec<f64>,
}

impl BlockScoreGrid {
    pub fn get(&self, i: u32, j: u32) -> f64 {
        self.scores[(i * self.blocks_j + j) as usize]
    }

    /// Row-major block with the highest score (first on ties).
    pub fn argmax(&self) -> (u32, u32) {
        let mut best = 0usize;
        for (k, &s) in self.scores.iter().enumerate() {
            if s > self.scores[best] {
                best = k;
            }
        }
        (best as u32 / self.blocks_j, best as u32 % self.blocks_j)
    }
}

/// Fill each pixel with the magnitude of the motion vector of the codec
/// block covering it. Pixels outside the vector grid get 0.
pub fn densify_motion(mv: &MotionVectorField, width: u32, height: u32) -> PixelMap {
    let mut out = PixelMap::zeros(width, height);
    let bs = mv.block_size_px;
    let cols = (mv.block_w.saturating_mul(bs)).min(width) as usize;
    let w = width as usize;
    for y in 0..height.min(mv.block_h.saturating_mul(bs)) {
        let by = y / bs;
        let row = &mut out.values[y as usize * w..y as usize * w + cols];
        for (x, px) in row.iter_mut().enumerate() {
            let (dx, dy) = mv.vector(x as u32 / bs, by);
            *px = dx.hypot(dy);
        }
    }
    out
}

/// Linearly interpolated percentile (`pct` in (0, 100]) of a non-empty slice.
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty map");
    let mut scratch = values.to_vec();
    let rank = pct / 100.0 * (scratch.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    let (_, &mut lo_val, upper) = scratch.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || upper.is_empty() {
        return lo_val;
    }
    let hi_val = upper.iter().copied().fold(f64::INFINITY, f64::min);
    lo_val + (hi_val - lo_val) * frac
}

/// Divide by the `pct` percentile and clip to `[0, 1]`. A non-positive
/// anchor yields all zeros.
pub fn normalize_percentile(values: &[f64], pct: f64) -> Vec<f64> {
    let q = percentile(values, pct);
    if q <= 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|&v| (v / q).clamp(0.0, 1.0)).collect()
}

fn normalize_map(map: PixelMap, pct: f64) -> PixelMap {
    let values = normalize_percentile(&map.values, pct);
    PixelMap { values, ..map }
}

/// Normalized motion response.
pub fn motion_response(mv: &MotionVectorField, width: u32, height: u32, pct: f64) -> PixelMap {
    normalize_map(densify_motion(mv, width, height), pct)
}

/// Normalized absolute deviation of the residual from its zero point.
pub fn residual_response(residual: &ResidualPlane, pct: f64) -> PixelMap {
    let zero = i16::from(RESIDUAL_ZERO_POINT);
    let dev = PixelMap {
        width: residual.width,
        height: residual.height,
        values: residual
            .luma
            .iter()
            .map(|&v| f64::from((i16::from(v) - zero).abs()))
            .collect(),
    };
    normalize_map(dev, pct)
}

pub fn saliency_map(motion: &PixelMap, residual: &PixelMap) -> Result<SaliencyMap, SaliencyError> {
    if motion.width != residual.width || motion.height != residual.height {
        return Err(SaliencyError::DimensionMismatch(format!(
            "motion {}x{} vs residual {}x{}",
            motion.width, motion.height, residual.width, residual.height
        )));
    }
    let values = motion
        .values
        .iter()
        .zip(&residual.values)
        .map(|(m, r)| m + r)
        .collect();
    Ok(SaliencyMap(PixelMap {
        width: motion.width,
        height: motion.height,
        values,
    }))
}

/// Sum saliency over each `2p x 2p` footprint. The frame is implicitly
/// zero-padded on the bottom/right to a whole number of blocks.
pub fn block_scores(s: &SaliencyMap, patch: u32) -> BlockScoreGrid {
    let map = &s.0;
    let (blocks_i, blocks_j) = block_grid_dims(map.width, map.height, patch);
    let block = 2 * patch;
    let mut scores = vec![0.0; (blocks_i * blocks_j) as usize];
    let w = map.width as usize;
    for y in 0..map.height {
        let bi = (y / block) as usize;
        let row = &map.values[y as usize * w..(y as usize + 1) * w];
        let out = &mut scores[bi * blocks_j as usize..(bi + 1) * blocks_j as usize];
        for (bj, chunk) in row.chunks(block as usize).enumerate() {
            out[bj] += chunk.iter().sum::<f64>();
        }
    }
    BlockScoreGrid {
        blocks_i,
        blocks_j,
        scores,
    }
}

/// `A + weight * normalize(bitcost)`, block-wise. Weight 0 returns `A` untouched.
pub fn fuse_bitcost_prior(
    a: &BlockScoreGrid,
    bitcost: &[f64],
    weight: f64,
    pct: f64,
) -> Result<BlockScoreGrid, SaliencyError> {
    if bitcost.len() != a.scores.len() {
        return Err(SaliencyError::DimensionMismatch(format!(
            "bit-cost grid has {} blocks, score grid {}",
            bitcost.len(),
            a.scores.len()
        )));
    }
    if weight == 0.0 {
        return Ok(a.clone());
    }
    let prior = normalize_percentile(bitcost, pct);
    let scores = a
        .scores
        .iter()
        .zip(prior)
        .map(|(s, p)| s + weight * p)
        .collect();
    Ok(BlockScoreGrid { scores, ..*a })
}

/// Per-block bit cost of a frame: the trace's block map when present, the
/// packet bytes spread evenly otherwise.
pub fn frame_bitcost_grid(frame: &FrameTrace, width: u32, height: u32) -> Vec<f64> {
    let (bi, bj) = block_grid_dims(width, height, PATCH_SIZE);
    let n = (bi * bj) as usize;
    match &frame.block_bits {
        Some(bits) => bits.iter().map(|&b| b as f64).collect(),
        None => vec![frame.packet.byte_size as f64 / n as f64; n],
    }
}

/// Saliency map of one predicted frame; missing side data contributes zero.
pub fn frame_saliency(frame: &FrameTrace, width: u32, height: u32, cfg: &SaliencyConfig) -> Result<SaliencyMap, SaliencyError> {
    let motion = match &frame.mv {
        Some(mv) => motion_response(mv, width, height, cfg.percentile),
        None => PixelMap::zeros(width, height),
    };
    let residual = match &frame.residual {
        Some(r) => residual_response(r, cfg.percentile),
        None => PixelMap::zeros(width, height),
    };
    saliency_map(&motion, &residual)
}

/// Full block scoring for one predicted frame, including the bit-cost prior.
/// Returns `None` for frames that carry no motion or residual data.
pub fn frame_block_scores(
    frame: &FrameTrace,
    width: u32,
    height: u32,
    cfg: &SaliencyConfig,
) -> Result<Option<BlockScoreGrid>, SaliencyError> {
    if !frame.packet.frame_type.is_predicted() || !frame.has_evidence() {
        return Ok(None);
    }
    let s = frame_saliency(frame, width, height, cfg)?;
    let a = block_scores(&s, PATCH_SIZE);
    if cfg.bitcost_prior_weight == 0.0 {
        return Ok(Some(a));
    }
    let prior = frame_bitcost_grid(frame, width, height);
    fuse_bitcost_prior(&a, &prior, cfg.bitcost_prior_weight, cfg.percentile).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(block_w: u32, block_h: u32, vectors: Vec<(f64, f64)>) -> MotionVectorField {
        MotionVectorField {
            block_w,
            block_h,
            block_size_px: 16,
            vectors,
        }
    }

    #[test]
    fn zero_vectors_densify_to_zero() {
        let m = densify_motion(&mv(2, 2, vec![(0.0, 0.0); 4]), 32, 32);
        assert!(m.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_block_fills_its_pixels() {
        let m = densify_motion(&mv(1, 1, vec![(3.0, 4.0)]), 32, 32);
        for y in 0..32 {
            for x in 0..32 {
                let expect = if x < 16 && y < 16 { 5.0 } else { 0.0 };
                assert_eq!(m.get(x, y), expect, "({x},{y})");
            }
        }
    }

    #[test]
    fn two_block_grid_splits_frame() {
        let m = densify_motion(&mv(2, 1, vec![(3.0, 4.0), (0.0, 0.0)]), 32, 16);
        for y in 0..16 {
            for x in 0..32 {
                assert_eq!(m.get(x, y), if x < 16 { 5.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn grid_larger_than_frame_is_clipped() {
        let m = densify_motion(&mv(3, 3, vec![(1.0, 0.0); 9]), 20, 20);
        assert_eq!(m.values.len(), 400);
        assert!(m.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn percentile_interpolates() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 95.0), 95.0);
        assert_eq!(percentile(&v, 100.0), 100.0);
        assert_eq!(percentile(&[1.0, 3.0], 50.0), 2.0);
        assert_eq!(percentile(&[7.0], 10.0), 7.0);
    }

    #[test]
    fn normalize_linear_and_clipped() {
        // 0, 0.5, ..., 100: the 95th percentile is exactly 95.
        let v: Vec<f64> = (0..=200).map(|k| f64::from(k) * 0.5).collect();
        let n = normalize_percentile(&v, 95.0);
        assert_eq!(n[190], 1.0);
        assert_eq!(n[95], 0.5);
        assert_eq!(n[200], 1.0);
        assert!(n.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn normalize_zero_guard() {
        assert_eq!(normalize_percentile(&[0.0; 9], 95.0), vec![0.0; 9]);
    }

    #[test]
    fn normalize_at_100_is_max_scaling() {
        let v = [1.0, 4.0, 2.0];
        assert_eq!(normalize_percentile(&v, 100.0), vec![0.25, 1.0, 0.5]);
    }

    #[test]
    fn flat_residual_is_zero() {
        let r = ResidualPlane { width: 4, height: 4, luma: vec![128; 16] };
        assert!(residual_response(&r, 95.0).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_sign_symmetry() {
        let r = ResidualPlane { width: 2, height: 1, luma: vec![128 - 37, 128 + 37] };
        let out = residual_response(&r, 100.0);
        assert_eq!(out.values[0], out.values[1]);
    }

    #[test]
    fn checkerboard_residual() {
        let luma: Vec<u8> = (0..64).map(|k| if (k / 8 + k % 8) % 2 == 0 { 0 } else { 255 }).collect();
        let r = ResidualPlane { width: 8, height: 8, luma: luma.clone() };
        let out = residual_response(&r, 100.0);
        for (v, l) in out.values.iter().zip(luma) {
            let expect = if l == 0 { 1.0 } else { 127.0 / 128.0 };
            assert_eq!(*v, expect);
        }
    }

    #[test]
    fn saliency_is_pointwise_sum() {
        let m = PixelMap { width: 2, height: 1, values: vec![0.0, 1.0] };
        let r = PixelMap { width: 2, height: 1, values: vec![0.25, 1.0] };
        assert_eq!(saliency_map(&m, &r).unwrap().0.values, vec![0.25, 2.0]);
        let wrong = PixelMap::zeros(1, 2);
        assert!(matches!(saliency_map(&m, &wrong), Err(SaliencyError::DimensionMismatch(_))));
    }

    #[test]
    fn unit_map_block_area() {
        let s = SaliencyMap(PixelMap { width: 64, height: 64, values: vec![1.0; 4096] });
        let a = block_scores(&s, 16);
        assert_eq!((a.blocks_i, a.blocks_j), (2, 2));
        assert_eq!(a.scores, vec![1024.0; 4]);
    }

    #[test]
    fn spike_lands_in_one_block() {
        // Patch (2i, 2j+1) with i=1, j=0 covers rows 32..48, cols 16..32.
        let mut s = PixelMap::zeros(64, 64);
        s.values[40 * 64 + 20] = 1.5;
        let a = block_scores(&SaliencyMap(s), 16);
        assert_eq!(a.scores, vec![0.0, 0.0, 1.5, 0.0]);
        assert_eq!(a.argmax(), (1, 0));
    }

    #[test]
    fn padded_frame_grid() {
        let s = SaliencyMap(PixelMap { width: 40, height: 20, values: vec![1.0; 800] });
        let a = block_scores(&s, 16);
        assert_eq!((a.blocks_i, a.blocks_j), (1, 2));
        assert_eq!(a.scores, vec![640.0, 160.0]);
    }

    #[test]
    fn fuse_identity_and_constant_prior() {
        let a = BlockScoreGrid { blocks_i: 1, blocks_j: 3, scores: vec![3.0, 0.5, 9.0] };
        assert_eq!(fuse_bitcost_prior(&a, &[1.0, 50.0, 7.0], 0.0, 95.0).unwrap(), a);
        let zero = BlockScoreGrid { blocks_i: 1, blocks_j: 3, scores: vec![0.0; 3] };
        let fused = fuse_bitcost_prior(&zero, &[40.0; 3], 1.0, 95.0).unwrap();
        assert_eq!(fused.scores, vec![1.0; 3]);
        assert!(fuse_bitcost_prior(&a, &[1.0], 1.0, 95.0).is_err());
    }

    #[test]
    fn prior_is_scale_invariant() {
        let a = BlockScoreGrid { blocks_i: 2, blocks_j: 2, scores: vec![1.0, 2.0, 3.0, 4.0] };
        let bits = [10.0, 300.0, 20.0, 45.0];
        let doubled: Vec<f64> = bits.iter().map(|b| b * 2.0).collect();
        assert_eq!(
            fuse_bitcost_prior(&a, &bits, 2.0, 95.0).unwrap(),
            fuse_bitcost_prior(&a, &doubled, 2.0, 95.0).unwrap()
        );
    }

    #[test]
    fn config_validation() {
        assert!(SaliencyConfig { percentile: 0.0, ..Default::default() }.validate().is_err());
        assert!(SaliencyConfig { percentile: 100.5, ..Default::default() }.validate().is_err());
        assert!(SaliencyConfig { percentile: 100.0, ..Default::default() }.validate().is_ok());
        assert!(SaliencyConfig { bitcost_prior_weight: -1.0, ..Default::default() }.validate().is_err());
    }
}
