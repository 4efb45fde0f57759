//! Group-visible attention masks and per-token (t, h, w) coordinates.

use std::collections::HashSet;
use std::io::{self, Write};

use thiserror::Error;

use crate::packer::TokenRecord;

/// Dense masks above this many tokens are refused.
pub const DEFAULT_DENSE_LIMIT: usize = 16_384;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AttentionError {
    #[error("dense mask for {n} tokens exceeds the limit of {limit}")]
    MaskTooLarge { n: usize, limit: usize },
    #[error("source patch (frame {frame}, row {row}, col {col}) appears twice")]
    DuplicateSource { frame: u32, row: u32, col: u32 },
    #[error("slots must be >= 1")]
    ZeroSlots,
}

/// Group id per token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityGroups(pub Vec<u32>);

impl VisibilityGroups {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn visible(&self, a: usize, b: usize) -> bool {
        self.0[a] == self.0[b]
    }

    pub fn distinct(&self) -> usize {
        self.0.iter().collect::<HashSet<_>>().len()
    }
}

pub fn codec_groups(tokens: &[TokenRecord]) -> VisibilityGroups {
    VisibilityGroups(tokens.iter().map(|t| t.group).collect())
}

pub fn fixed_slot_groups(frame_indices: &[u32], slots: u32) -> Result<VisibilityGroups, AttentionError> {
    if slots == 0 {
        return Err(AttentionError::ZeroSlots);
    }
    Ok(VisibilityGroups(frame_indices.iter().map(|f| f / slots).collect()))
}

pub fn image_group(n: usize) -> VisibilityGroups {
    VisibilityGroups(vec![0; n])
}

/// Packed row-major boolean matrix. Bit `b` of row `a` lives in byte
/// `a * stride + b / 8` at bit position `b % 8` (LSB first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseMask {
    pub n: usize,
    pub stride: usize,
    pub bits: Vec<u8>,
}

impl DenseMask {
    pub fn get(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.stride + b / 8] >> (b % 8) & 1 == 1
    }

    /// 16-byte header (N, row stride; u64 little-endian) then the rows.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.stride as u64).to_le_bytes())?;
        w.write_all(&self.bits)?;
        w.flush()
    }

    pub fn read_from(bytes: &[u8]) -> Option<Self> {
        let n = u64::from_le_bytes(bytes.get(0..8)?.try_into().ok()?) as usize;
        let stride = u64::from_le_bytes(bytes.get(8..16)?.try_into().ok()?) as usize;
        let bits = bytes.get(16..)?;
        if stride != n.div_ceil(8) || bits.len() != n.checked_mul(stride)? {
            return None;
        }
        Some(Self {
            n,
            stride,
            bits: bits.to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionMask {
    pub groups: VisibilityGroups,
    pub dense: Option<DenseMask>,
}

/// Build the mask. `dense_limit = None` skips the bitmask entirely.
pub fn build_mask(groups: &VisibilityGroups, dense_limit: Option<usize>) -> Result<AttentionMask, AttentionError> {
    let dense = match dense_limit {
        None => None,
        Some(limit) if groups.len() > limit => {
            return Err(AttentionError::MaskTooLarge { n: groups.len(), limit });
        }
        Some(_) => Some(dense_mask(groups)),
    };
    Ok(AttentionMask {
        groups: groups.clone(),
        dense,
    })
}

fn dense_mask(groups: &VisibilityGroups) -> DenseMask {
    let n = groups.len();
    let stride = n.div_ceil(8);
    let mut bits = vec![0u8; n * stride];
    for (a, row) in bits.chunks_mut(stride.max(1)).take(n).enumerate() {
        let ga = groups.0[a];
        for (b, &gb) in groups.0.iter().enumerate() {
            if gb == ga {
                row[b / 8] |= 1 << (b % 8);
            }
        }
    }
    DenseMask { n, stride, bits }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PositionTriple {
    pub t: u32,
    pub h: u32,
    pub w: u32,
}

/// Codec tokens sit at their source frame and source patch.
pub fn position_coords(tokens: &[TokenRecord]) -> Result<Vec<PositionTriple>, AttentionError> {
    let mut seen = HashSet::with_capacity(tokens.len());
    tokens
        .iter()
        .map(|tok| {
            let p = PositionTriple {
                t: tok.source_frame,
                h: tok.source_pos.0,
                w: tok.source_pos.1,
            };
            if !seen.insert(p) {
                return Err(AttentionError::DuplicateSource {
                    frame: p.t,
                    row: p.h,
                    col: p.w,
                });
            }
            Ok(p)
        })
        .collect()
}

/// Sampled frames: every patch of a `rows x cols` grid, frame by frame.
pub fn frame_coords(frame_indices: &[u32], rows: u32, cols: u32) -> Vec<PositionTriple> {
    frame_indices
        .iter()
        .flat_map(|&t| (0..rows).flat_map(move |h| (0..cols).map(move |w| PositionTriple { t, h, w })))
        .collect()
}

/// A still image is a single frame at t = 0.
pub fn image_coords(rows: u32, cols: u32) -> Vec<PositionTriple> {
    frame_coords(&[0], rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(group: u32, canvas: u32, f: u32, src: (u32, u32)) -> TokenRecord {
        TokenRecord {
            canvas_index: canvas,
            source_frame: f,
            canvas_pos: (0, 0),
            source_pos: src,
            group,
        }
    }

    #[test]
    fn cross_canvas_visibility() {
        let g = codec_groups(&[tok(0, 0, 1, (0, 0)), tok(0, 3, 2, (0, 0)), tok(1, 4, 9, (0, 0))]);
        assert!(g.visible(0, 1));
        assert!(!g.visible(0, 2));
    }

    #[test]
    fn slot_groups() {
        let g = fixed_slot_groups(&(0..8).collect::<Vec<_>>(), 4).unwrap();
        assert_eq!(g.0, vec![0, 0, 0, 0, 1, 1, 1, 1]);
        let g = fixed_slot_groups(&[0, 1, 2, 3, 4], 4).unwrap();
        assert_eq!(g.0, vec![0, 0, 0, 0, 1]);
        let g = fixed_slot_groups(&[0, 1, 2], 1).unwrap();
        assert_eq!(g.0, vec![0, 1, 2]);
        assert_eq!(fixed_slot_groups(&[0], 0), Err(AttentionError::ZeroSlots));
    }

    #[test]
    fn dense_example() {
        let m = build_mask(&VisibilityGroups(vec![0, 0, 1]), Some(DEFAULT_DENSE_LIMIT)).unwrap();
        let d = m.dense.unwrap();
        let want = [[true, true, false], [true, true, false], [false, false, true]];
        for (a, row) in want.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                assert_eq!(d.get(a, b), v);
            }
        }
    }

    #[test]
    fn image_mask_is_all_ones() {
        let d = build_mask(&image_group(11), Some(100)).unwrap().dense.unwrap();
        assert!((0..11).all(|a| (0..11).all(|b| d.get(a, b))));
        let empty = build_mask(&image_group(0), Some(100)).unwrap().dense.unwrap();
        assert_eq!(empty.n, 0);
        assert!(empty.bits.is_empty());
    }

    #[test]
    fn too_large() {
        let g = image_group(20);
        assert_eq!(build_mask(&g, Some(19)), Err(AttentionError::MaskTooLarge { n: 20, limit: 19 }));
        assert!(build_mask(&g, None).unwrap().dense.is_none());
    }

    #[test]
    fn mask_file_roundtrip() {
        let d = build_mask(&VisibilityGroups(vec![2, 0, 2, 1, 0, 0, 2, 1, 1, 0]), Some(64))
            .unwrap()
            .dense
            .unwrap();
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 10 * 2);
        assert_eq!(DenseMask::read_from(&buf).unwrap(), d);
        assert!(DenseMask::read_from(&buf[..20]).is_none());
    }

    #[test]
    fn coords() {
        let p = position_coords(&[tok(0, 0, 12, (3, 5))]).unwrap();
        assert_eq!(p, vec![PositionTriple { t: 12, h: 3, w: 5 }]);
        assert_eq!(image_coords(2, 2)[0], PositionTriple { t: 0, h: 0, w: 0 });
        assert_eq!(frame_coords(&[4, 8], 1, 3).len(), 6);
        let dup = position_coords(&[tok(0, 0, 1, (2, 2)), tok(0, 1, 1, (2, 2))]);
        assert_eq!(dup, Err(AttentionError::DuplicateSource { frame: 1, row: 2, col: 2 }));
    }
}
