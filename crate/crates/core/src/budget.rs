//! Token accounting: uniform frame sampling vs codec canvases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BudgetError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("canvas capacity of {capacity} blocks does not merge evenly with factor {merge}")]
    UnevenMerge { capacity: u32, merge: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetQuery {
    pub frames: u64,
    pub width: u32,
    pub height: u32,
    pub patch: u32,
    pub merge: u32,
    /// 2x2-patch blocks per canvas.
    pub canvas_blocks: u32,
    /// Codec canvases to compare against (I and P together).
    pub canvases: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub tokens_per_frame: u64,
    pub uniform_tokens: u64,
    pub tokens_per_canvas: u64,
    pub codec_tokens: u64,
    /// Canvases that fit in the uniform budget.
    pub matched_canvases: u64,
}

/// Tokens one frame yields after patching and `merge x merge` merging. A
/// partial patch or merge window still produces a token.
pub fn tokens_per_frame(width: u32, height: u32, patch: u32, merge: u32) -> Result<u64, BudgetError> {
    check(patch, "patch")?;
    check(merge, "merge")?;
    let rows = height.div_ceil(patch).div_ceil(merge);
    let cols = width.div_ceil(patch).div_ceil(merge);
    Ok(u64::from(rows) * u64::from(cols))
}

pub fn tokens_per_canvas(canvas_blocks: u32, merge: u32) -> Result<u64, BudgetError> {
    check(canvas_blocks, "canvas_blocks")?;
    check(merge, "merge")?;
    let patches = 4 * u64::from(canvas_blocks);
    let window = u64::from(merge) * u64::from(merge);
    if patches % window != 0 {
        return Err(BudgetError::UnevenMerge {
            capacity: canvas_blocks,
            merge,
        });
    }
    Ok(patches / window)
}

pub fn compare(q: &BudgetQuery) -> Result<BudgetReport, BudgetError> {
    check(q.width, "width")?;
    check(q.height, "height")?;
    let per_frame = tokens_per_frame(q.width, q.height, q.patch, q.merge)?;
    let per_canvas = tokens_per_canvas(q.canvas_blocks, q.merge)?;
    let uniform = q.frames * per_frame;
    Ok(BudgetReport {
        tokens_per_frame: per_frame,
        uniform_tokens: uniform,
        tokens_per_canvas: per_canvas,
        codec_tokens: q.canvases * per_canvas,
        matched_canvases: uniform / per_canvas,
    })
}

fn check(v: u32, name: &'static str) -> Result<(), BudgetError> {
    if v == 0 {
        Err(BudgetError::NonPositive(name))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn query(frames: u64, merge: u32) -> BudgetQuery {
        BudgetQuery {
            frames,
            width: 392,
            height: 392,
            patch: 14,
            merge,
            canvas_blocks: 196,
            canvases: 10,
        }
    }

    #[test]
    fn per_frame_counts() {
        assert_eq!(tokens_per_frame(392, 392, 14, 2), Ok(196));
        assert_eq!(tokens_per_frame(392, 392, 14, 1), Ok(784));
        assert_eq!(tokens_per_frame(400, 392, 14, 2), Ok(15 * 14));
    }

    #[test]
    fn comparison() {
        let r = compare(&query(64, 2)).unwrap();
        assert_eq!(r.uniform_tokens, 64 * 196);
        assert_eq!(r.tokens_per_canvas, 196);
        assert_eq!(r.codec_tokens, 1960);
        assert_eq!(r.matched_canvases, 64);
        let r = compare(&query(0, 2)).unwrap();
        assert_eq!((r.uniform_tokens, r.matched_canvases), (0, 0));
        assert_eq!(compare(&query(1, 1)).unwrap().tokens_per_canvas, 784);
    }

    #[test]
    fn errors() {
        assert_eq!(tokens_per_frame(10, 10, 0, 2), Err(BudgetError::NonPositive("patch")));
        assert_eq!(
            tokens_per_canvas(3, 4),
            Err(BudgetError::UnevenMerge { capacity: 3, merge: 4 })
        );
        let mut q = query(1, 2);
        q.width = 0;
        assert_eq!(compare(&q), Err(BudgetError::NonPositive("width")));
    }
}
