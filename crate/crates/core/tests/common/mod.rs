//! Independent reference implementations and fixtures shared by the
//! integration tests (also pulled into the CLI acceptance suite).
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use codecstream::gop::assign_group;
use codecstream::packer::CanvasLabel;
use codecstream::pipeline::{Tokenization, TokenizerConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use codecstream::trace::{synthesize_trace, CodecTrace, MotionVectorField, ResidualPlane, Segment, SynthSpec};

/// Brute-force partition: every prefix sum is recomputed from scratch and
/// every candidate window bin is tested against the full constraint list.
pub fn gop_oracle(e: &[u64], l_min: usize, l_max: usize, w: usize, theta: f64) -> Vec<(usize, usize)> {
    let n = e.len();
    let mut out = Vec::new();
    let mut s = 0;
    while s < n {
        let mut trigger = None;
        for i in s..n {
            let len = i - s + 1;
            let sum: u64 = (s..=i).map(|b| e[b]).sum();
            if len >= l_max || (len >= l_min && sum as f64 >= theta) {
                trigger = Some(i);
                break;
            }
        }
        let Some(i) = trigger else {
            out.push((s, n - 1));
            break;
        };
        let mut best: Option<usize> = None;
        for b in 0..n {
            let allowed = b + w >= i && b <= i + w && b + 1 >= s + l_min && b < s + l_max && b <= n - 1;
            if !allowed {
                continue;
            }
            best = match best {
                None => Some(b),
                Some(c) => {
                    let kb = (e[b], b.abs_diff(i));
                    let kc = (e[c], c.abs_diff(i));
                    if kb < kc {
                        Some(b)
                    } else {
                        Some(c)
                    }
                }
            };
        }
        let c = best.expect("trigger bin is always admissible");
        out.push((s, c));
        s = c + 1;
    }
    out
}

/// Naive per-block pixel sums with explicit bounds checks.
pub fn block_sum_oracle(values: &[f64], width: usize, height: usize, patch: usize) -> (usize, usize, Vec<f64>) {
    let block = 2 * patch;
    let bi = height.div_ceil(block);
    let bj = width.div_ceil(block);
    let mut out = vec![0.0; bi * bj];
    for i in 0..bi {
        for j in 0..bj {
            let mut acc = 0.0;
            for dy in 0..block {
                for dx in 0..block {
                    let (y, x) = (i * block + dy, j * block + dx);
                    if y < height && x < width {
                        acc += values[y * width + x];
                    }
                }
            }
            out[i * bj + j] = acc;
        }
    }
    (bi, bj, out)
}

/// Dense mask straight from the definition.
pub fn dense_mask_oracle(groups: &[u32]) -> Vec<Vec<bool>> {
    groups
        .iter()
        .map(|a| groups.iter().map(|b| a == b).collect())
        .collect()
}

pub fn seg(duration_s: f64, motion_amplitude: f64, bitcost_level: f64) -> Segment {
    Segment {
        duration_s,
        motion_amplitude,
        bitcost_level,
    }
}

/// A synthetic trace where one predicted frame has uniform motion and
/// residual over the whole picture while every other frame only moves a
/// small object. After normalization the dominant frame scores high
/// everywhere.
pub fn dominant_frame_trace(seed: u64) -> (CodecTrace, u32) {
    let spec = SynthSpec::new(vec![seg(4.0, 3.0, 600.0)], 8.0, 128, 96, seed);
    let base = synthesize_trace(&spec).unwrap();
    let (fps, w, h) = (base.fps(), base.width(), base.height());
    let mut frames = base.into_frames();
    let dominant = frames.len() as u32 / 2;
    let f = &mut frames[dominant as usize];
    let mv = f.mv.as_ref().unwrap();
    f.mv = Some(MotionVectorField {
        vectors: vec![(6.0, 0.0); mv.vectors.len()],
        ..mv.clone()
    });
    f.residual = Some(ResidualPlane {
        width: w,
        height: h,
        luma: vec![160; (w * h) as usize],
    });
    (CodecTrace::new(fps, w, h, frames).unwrap(), dominant)
}

/// Packing invariants: budget spent exactly, group ids match frame
/// assignment, no repeated source patch per group, every 2x2 canvas cell
/// holds one aligned source block, anchors stay out of P-canvases.
pub fn check_invariants(trace: &CodecTrace, cfg: &TokenizerConfig, out: &Tokenization) {
    assert_eq!(out.p_canvas_count() as u32, cfg.packing.p_canvases_total);
    assert_eq!(out.allocation.iter().sum::<u32>(), cfg.packing.p_canvases_total);

    let mut seen = HashSet::new();
    let mut cells: HashMap<(u32, u32, u32), Vec<_>> = HashMap::new();
    for t in &out.tokens {
        let k = assign_group(t.source_frame, trace.fps(), &out.partition).unwrap();
        assert_eq!(t.group as usize, k, "token group differs from its frame's group");
        assert!(seen.insert((t.group, t.source_frame, t.source_pos)), "duplicate source patch {t:?}");
        assert_eq!(t.canvas_pos.0 % 2, t.source_pos.0 % 2);
        assert_eq!(t.canvas_pos.1 % 2, t.source_pos.1 % 2);
        cells
            .entry((t.canvas_index, t.canvas_pos.0 / 2, t.canvas_pos.1 / 2))
            .or_default()
            .push((t.source_frame, t.source_pos.0 / 2, t.source_pos.1 / 2));
    }
    for v in cells.values() {
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|x| *x == v[0]), "2x2 cell mixes sources");
    }
    for c in &out.canvases {
        assert!(c.cells.len() <= c.capacity());
        if c.label == CanvasLabel::P {
            assert!(c.cells.iter().all(|cell| Some(cell.frame) != out.anchors[c.group as usize]));
        }
    }
}


/// Small random synthetic trace; `zero` forces motion amplitude 0.
pub fn random_trace(rng: &mut ChaCha8Rng, zero: bool) -> CodecTrace {
    let segments = (0..rng.gen_range(1..4))
        .map(|_| {
            let amp = if zero { 0.0 } else { rng.gen_range(0.0..6.0) };
            seg(rng.gen_range(0.5..3.0), amp, rng.gen_range(0.0..2000.0))
        })
        .collect();
    let mut spec = SynthSpec::new(
        segments,
        rng.gen_range(4.0..12.0),
        rng.gen_range(20..130),
        rng.gen_range(20..100),
        rng.gen(),
    );
    spec.b_frames = rng.gen_bool(0.3);
    spec.map_interval = rng.gen_range(1..3);
    synthesize_trace(&spec).unwrap()
}

pub fn random_config(rng: &mut ChaCha8Rng) -> TokenizerConfig {
    let mut cfg = TokenizerConfig::default();
    cfg.partition.bin_duration_s = rng.gen_range(0.25..1.0);
    cfg.partition.target_groups = rng.gen_range(1..6);
    cfg.partition.min_span_s = rng.gen_range(0.2..1.0);
    cfg.partition.max_span_s = rng.gen_range(1.0..4.0);
    cfg.packing.lambda = rng.gen_range(0.0..4.0);
    cfg.packing.canvas_blocks = rng.gen_range(1..10);
    cfg.packing.p_canvases_total = rng.gen_range(12..40);
    cfg
}

