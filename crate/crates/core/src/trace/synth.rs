//! Deterministic synthetic traces for tests and benchmarks.
//!
//! Each [`Segment`] opens with an I-frame followed by predicted frames whose
//! packet sizes hover around `bitcost_level` (+-5%). Motion is a rectangular
//! "object" sweeping across the frame: blocks inside it move at
//! `motion_amplitude` pixels/frame, the background at a tenth of that. The
//! residual follows the same layout. An amplitude of zero yields exactly zero
//! vectors and a flat 128 residual.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CodecTrace, FrameTrace, FrameType, MotionVectorField, PacketRecord, ResidualPlane, TraceError, RESIDUAL_ZERO_POINT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration_s: f64,
    pub motion_amplitude: f64,
    pub bitcost_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub segments: Vec<Segment>,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    /// Only every `map_interval`-th frame carries motion/residual maps
    /// (1 = every predicted frame).
    #[serde(default = "default_interval")]
    pub map_interval: u32,
    #[serde(default = "default_mv_block")]
    pub mv_block_px: u32,
    /// Alternate P and B frames after each I-frame.
    #[serde(default)]
    pub b_frames: bool,
}

fn default_interval() -> u32 {
    1
}

fn default_mv_block() -> u32 {
    16
}

impl SynthSpec {
    pub fn new(segments: Vec<Segment>, fps: f64, width: u32, height: u32, seed: u64) -> Self {
        Self {
            segments,
            fps,
            width,
            height,
            seed,
            map_interval: 1,
            mv_block_px: 16,
            b_frames: false,
        }
    }

    fn validate(&self) -> Result<(), TraceError> {
        let bad = |m: &str| Err(TraceError::InvalidSpec(m.to_string()));
        if self.segments.is_empty() {
            return bad("at least one segment is required");
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad("fps must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("dimensions must be positive");
        }
        if self.map_interval == 0 || self.mv_block_px == 0 {
            return bad("map_interval and mv_block_px must be >= 1");
        }
        for s in &self.segments {
            if !(s.duration_s.is_finite() && s.duration_s > 0.0) {
                return bad("segment durations must be positive");
            }
            if !(s.motion_amplitude.is_finite() && s.motion_amplitude >= 0.0) {
                return bad("motion_amplitude must be >= 0");
            }
            if !(s.bitcost_level.is_finite() && s.bitcost_level >= 0.0) {
                return bad("bitcost_level must be >= 0");
            }
        }
        Ok(())
    }
}

/// Generate a trace. Identical specs (including the seed) give identical traces.
pub fn synthesize_trace(spec: &SynthSpec) -> Result<CodecTrace, TraceError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut frames = Vec::new();
    let mut index: u32 = 0;

    for seg in &spec.segments {
        let count = ((seg.duration_s * spec.fps).round() as u32).max(1);
        for k in 0..count {
            let frame_type = if k == 0 {
                FrameType::I
            } else if spec.b_frames && k % 2 == 0 {
                FrameType::B
            } else {
                FrameType::P
            };
            let byte_size = if frame_type == FrameType::I {
                (4.0 * seg.bitcost_level).round() as u64 + 1000
            } else {
                let jitter: f64 = rng.gen_range(-0.05..=0.05);
                (seg.bitcost_level * (1.0 + jitter)).round() as u64
            };
            let mut frame = FrameTrace::new(PacketRecord {
                frame_index: index,
                frame_type,
                pts_seconds: index as f64 / spec.fps,
                byte_size,
            });
            if frame_type.is_predicted() && index.is_multiple_of(spec.map_interval) {
                let object = object_rect(spec, k, count);
                frame.mv = Some(motion_field(spec, seg.motion_amplitude, object, &mut rng));
                frame.residual = Some(residual_plane(spec, seg.motion_amplitude, object, &mut rng));
            }
            frames.push(frame);
            index += 1;
        }
    }
    CodecTrace::new(spec.fps, spec.width, spec.height, frames)
}

/// Pixel rectangle (x0, y0, x1, y1) of the moving object at step `k` of `n`.
fn object_rect(spec: &SynthSpec, k: u32, n: u32) -> (u32, u32, u32, u32) {
    let w = (spec.width / 4).max(1);
    let h = (spec.height / 4).max(1);
    let travel = spec.width - w;
    let x0 = if n > 1 {
        (u64::from(travel) * u64::from(k) / u64::from(n - 1)) as u32
    } else {
        0
    };
    let y0 = (spec.height - h) / 2;
    (x0, y0, x0 + w, y0 + h)
}

fn inside(rect: (u32, u32, u32, u32), x: u32, y: u32) -> bool {
    x >= rect.0 && x < rect.2 && y >= rect.1 && y < rect.3
}

fn quarter_pel(v: f64) -> f64 {
    (v * 4.0).round() / 4.0
}

fn motion_field(spec: &SynthSpec, amplitude: f64, object: (u32, u32, u32, u32), rng: &mut ChaCha8Rng) -> MotionVectorField {
    let bs = spec.mv_block_px;
    let block_w = spec.width.div_ceil(bs);
    let block_h = spec.height.div_ceil(bs);
    let mut vectors = Vec::with_capacity((block_w * block_h) as usize);
    for by in 0..block_h {
        for bx in 0..block_w {
            if amplitude == 0.0 {
                vectors.push((0.0, 0.0));
                continue;
            }
            let cx = bx * bs + bs / 2;
            let cy = by * bs + bs / 2;
            let scale = if inside(object, cx, cy) { 1.0 } else { 0.1 };
            let angle: f64 = rng.gen_range(-0.3..0.3);
            let mag = amplitude * scale * rng.gen_range(0.8..1.2);
            vectors.push((quarter_pel(mag * angle.cos()), quarter_pel(mag * angle.sin())));
        }
    }
    MotionVectorField {
        block_w,
        block_h,
        block_size_px: bs,
        vectors,
    }
}

fn residual_plane(spec: &SynthSpec, amplitude: f64, object: (u32, u32, u32, u32), rng: &mut ChaCha8Rng) -> ResidualPlane {
    let (w, h) = (spec.width, spec.height);
    let mut luma = vec![RESIDUAL_ZERO_POINT; w as usize * h as usize];
    if amplitude > 0.0 {
        let strong = (amplitude * 8.0).min(127.0) as i32;
        let weak = (amplitude * 0.5).min(127.0) as i32;
        for y in 0..h {
            let row = &mut luma[(y * w) as usize..((y + 1) * w) as usize];
            for (x, px) in row.iter_mut().enumerate() {
                let spread = if inside(object, x as u32, y) { strong } else { weak };
                if spread > 0 {
                    let d = rng.gen_range(-spread..=spread);
                    *px = (i32::from(RESIDUAL_ZERO_POINT) + d).clamp(0, 255) as u8;
                }
            }
        }
    }
    ResidualPlane {
        width: w,
        height: h,
        luma,
    }
}
