//! Codec trace data model.
//!
//! A [`CodecTrace`] is what the toolkit sees of a compressed video: one
//! [`PacketRecord`] per frame (type, presentation time, packet size), plus
//! optional motion-vector and luma-residual side data for predicted frames.
//! Traces are produced by an external decoder and read through
//! [`format::read_trace`], or synthesized with [`synth::synthesize_trace`].

pub mod format;
pub mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{read_trace, residual_blob_path, write_trace, load_trace, save_trace};
pub use synth::{synthesize_trace, Segment, SynthSpec};

/// Luma value that encodes a zero residual.
pub const RESIDUAL_ZERO_POINT: u8 = 128;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("malformed record at line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },
    #[error("pts regression at frame {frame_index}: {pts} does not exceed previous {previous}")]
    NonMonotonicPts {
        frame_index: u32,
        previous: f64,
        pts: f64,
    },
    #[error("dimension mismatch at frame {frame_index}: {msg}")]
    DimensionMismatch { frame_index: u32, msg: String },
    #[error("trace contains no frames")]
    EmptyTrace,
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameType {
    I,
    P,
    B,
}

impl FrameType {
    /// P and B packets both carry inter-frame prediction cost.
    pub fn is_predicted(self) -> bool {
        matches!(self, FrameType::P | FrameType::B)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketRecord {
    pub frame_index: u32,
    pub frame_type: FrameType,
    pub pts_seconds: f64,
    pub byte_size: u64,
}

/// Per-block motion vectors in pixels, row-major over a `block_h x block_w` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionVectorField {
    pub block_w: u32,
    pub block_h: u32,
    pub block_size_px: u32,
    pub vectors: Vec<(f64, f64)>,
}

impl MotionVectorField {
    pub fn vector(&self, bx: u32, by: u32) -> (f64, f64) {
        self.vectors[(by * self.block_w + bx) as usize]
    }

    fn check(&self) -> Result<(), String> {
        if self.block_size_px == 0 {
            return Err("mv block_size_px must be >= 1".into());
        }
        let expected = self.block_w as usize * self.block_h as usize;
        if self.vectors.len() != expected {
            return Err(format!(
                "mv grid {}x{} expects {} vectors, found {}",
                self.block_w,
                self.block_h,
                expected,
                self.vectors.len()
            ));
        }
        if self.vectors.iter().any(|(dx, dy)| !dx.is_finite() || !dy.is_finite()) {
            return Err("mv vectors must be finite".into());
        }
        Ok(())
    }
}

/// 8-bit luma residual centred on [`RESIDUAL_ZERO_POINT`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualPlane {
    pub width: u32,
    pub height: u32,
    pub luma: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub packet: PacketRecord,
    pub mv: Option<MotionVectorField>,
    pub residual: Option<ResidualPlane>,
    /// Optional sub-frame bit allocation over the 2x2-patch block grid,
    /// row-major. Takes precedence over spreading `byte_size` uniformly.
    pub block_bits: Option<Vec<u64>>,
}

impl FrameTrace {
    pub fn new(packet: PacketRecord) -> Self {
        Self {
            packet,
            mv: None,
            residual: None,
            block_bits: None,
        }
    }

    /// Whether the frame carries any motion or residual side data.
    pub fn has_evidence(&self) -> bool {
        self.mv.is_some() || self.residual.is_some()
    }
}

/// A validated trace. Construct through [`CodecTrace::new`] so every
/// invariant holds for the lifetime of the value.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecTrace {
    fps: f64,
    width: u32,
    height: u32,
    frames: Vec<FrameTrace>,
}

impl CodecTrace {
    pub fn new(fps: f64, width: u32, height: u32, frames: Vec<FrameTrace>) -> Result<Self, TraceError> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(TraceError::MalformedRecord {
                line: 1,
                msg: format!("fps must be positive, got {fps}"),
            });
        }
        if width == 0 || height == 0 {
            return Err(TraceError::MalformedRecord {
                line: 1,
                msg: format!("frame dimensions must be positive, got {width}x{height}"),
            });
        }
        if frames.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        let mut previous: Option<f64> = None;
        for (pos, frame) in frames.iter().enumerate() {
            let line = pos + 2;
            let p = &frame.packet;
            if p.frame_index as usize != pos {
                return Err(TraceError::MalformedRecord {
                    line,
                    msg: format!("frame_index {} out of sequence, expected {pos}", p.frame_index),
                });
            }
            if !(p.pts_seconds.is_finite() && p.pts_seconds >= 0.0) {
                return Err(TraceError::MalformedRecord {
                    line,
                    msg: format!("pts_seconds must be finite and >= 0, got {}", p.pts_seconds),
                });
            }
            if let Some(prev) = previous {
                if p.pts_seconds <= prev {
                    return Err(TraceError::NonMonotonicPts {
                        frame_index: p.frame_index,
                        previous: prev,
                        pts: p.pts_seconds,
                    });
                }
            }
            previous = Some(p.pts_seconds);

            if p.frame_type == FrameType::I && frame.has_evidence() {
                return Err(TraceError::MalformedRecord {
                    line,
                    msg: "I-frames carry no motion vectors or residual".into(),
                });
            }
            if let Some(mv) = &frame.mv {
                mv.check().map_err(|msg| TraceError::MalformedRecord { line, msg })?;
            }
            if let Some(res) = &frame.residual {
                if res.width != width || res.height != height {
                    return Err(TraceError::DimensionMismatch {
                        frame_index: p.frame_index,
                        msg: format!(
                            "residual is {}x{}, trace is {width}x{height}",
                            res.width, res.height
                        ),
                    });
                }
                if res.luma.len() != width as usize * height as usize {
                    return Err(TraceError::DimensionMismatch {
                        frame_index: p.frame_index,
                        msg: format!(
                            "residual holds {} samples, expected {}",
                            res.luma.len(),
                            width as usize * height as usize
                        ),
                    });
                }
            }
            if let Some(bits) = &frame.block_bits {
                let (bi, bj) = block_grid_dims(width, height, crate::PATCH_SIZE);
                if bits.len() != (bi * bj) as usize {
                    return Err(TraceError::DimensionMismatch {
                        frame_index: p.frame_index,
                        msg: format!(
                            "block_bits holds {} entries, block grid is {bi}x{bj}",
                            bits.len()
                        ),
                    });
                }
            }
        }
        Ok(Self {
            fps,
            width,
            height,
            frames,
        })
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn frames(&self) -> &[FrameTrace] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Span covered by the trace: long enough for every frame time `f/fps`
    /// and every packet timestamp.
    pub fn duration_s(&self) -> f64 {
        let by_count = self.frames.len() as f64 / self.fps;
        let last_pts = self.frames.last().map_or(0.0, |f| f.packet.pts_seconds);
        by_count.max(last_pts + 1.0 / self.fps)
    }

    pub fn into_frames(self) -> Vec<FrameTrace> {
        self.frames
    }
}

/// Dimensions `(rows, cols)` of the 2x2-patch block grid over a frame padded
/// to a multiple of `2 * patch`.
pub fn block_grid_dims(width: u32, height: u32, patch: u32) -> (u32, u32) {
    let block = 2 * patch;
    (height.div_ceil(block), width.div_ceil(block))
}
