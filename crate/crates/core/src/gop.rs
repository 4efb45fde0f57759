//! Bit-cost adaptive temporal groups.
//!
//! The timeline is cut into bins of `bin_duration_s`; each bin accumulates
//! the packet bytes of the predicted (P/B) frames presented inside it. A group
//! starting at bin `s` is closed at the first bin `i` where the span reaches
//! the maximum, or reaches the minimum with the running sum at or above the
//! quota. The close point is then moved to the cheapest bin in a window
//! around `i` (ties: nearest to `i`, then the earlier bin).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::CodecTrace;

#[derive(Debug, Error, PartialEq)]
pub enum GopError {
    #[error("invalid partition config: {0}")]
    InvalidConfig(String),
    #[error("frame {frame_index} at {time_s}s lies outside the partitioned timeline")]
    OutOfRange { frame_index: u32, time_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionConfig {
    pub bin_duration_s: f64,
    pub target_groups: u32,
    pub min_span_s: f64,
    pub max_span_s: f64,
    pub valley_window_bins: u32,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            bin_duration_s: 1.0,
            target_groups: 8,
            min_span_s: 1.0,
            max_span_s: 60.0,
            valley_window_bins: 2,
        }
    }
}

/// `ceil(x)` that ignores float noise just above an integer (0.3/0.1 and friends).
fn ceil_bins(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

impl PartitionConfig {
    pub fn validate(&self) -> Result<(), GopError> {
        let bad = |m: String| Err(GopError::InvalidConfig(m));
        if !(self.bin_duration_s.is_finite() && self.bin_duration_s > 0.0) {
            return bad(format!("bin_duration_s must be > 0, got {}", self.bin_duration_s));
        }
        if self.target_groups < 1 {
            return bad("target_groups must be >= 1".into());
        }
        if !(self.min_span_s.is_finite() && self.min_span_s > 0.0) {
            return bad(format!("min_span_s must be > 0, got {}", self.min_span_s));
        }
        if !(self.max_span_s.is_finite() && self.max_span_s >= self.min_span_s) {
            return bad(format!(
                "max_span_s ({}) must be >= min_span_s ({})",
                self.max_span_s, self.min_span_s
            ));
        }
        Ok(())
    }

    /// Minimum group span in bins, `ceil(T_min / bin)`, at least 1.
    pub fn min_span_bins(&self) -> usize {
        ceil_bins(self.min_span_s / self.bin_duration_s).max(1)
    }

    /// Maximum group span in bins, `ceil(T_max / bin)`, never below the minimum.
    pub fn max_span_bins(&self) -> usize {
        ceil_bins(self.max_span_s / self.bin_duration_s).max(self.min_span_bins())
    }
}

/// Per-bin P/B byte totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEnergies {
    pub energies: Vec<u64>,
    pub bin_duration_s: f64,
}

impl BinEnergies {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.energies.iter().sum()
    }

    /// Sum over the inclusive bin range.
    pub fn mass(&self, start: usize, end: usize) -> u64 {
        self.energies[start..=end].iter().sum()
    }
}

/// Index `b` with `b*bin <= t < (b+1)*bin`. Times within float noise of a
/// bin edge belong to the bin that starts there.
pub fn bin_of(t: f64, bin: f64) -> usize {
    let x = (t / bin).max(0.0);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// Aggregate predicted-frame packet bytes into bins. I-frame bytes are excluded.
pub fn bin_bitcost(trace: &CodecTrace, bin_duration_s: f64) -> Result<BinEnergies, GopError> {
    if !(bin_duration_s.is_finite() && bin_duration_s > 0.0) {
        return Err(GopError::InvalidConfig(format!(
            "bin_duration_s must be > 0, got {bin_duration_s}"
        )));
    }
    let mut bins = ceil_bins(trace.duration_s() / bin_duration_s).max(1);
    // Make sure the last packet and the last frame time land inside the range.
    let last_frame_t = (trace.len() - 1) as f64 / trace.fps();
    let last_pts = trace.frames().last().map_or(0.0, |f| f.packet.pts_seconds);
    bins = bins.max(bin_of(last_frame_t.max(last_pts), bin_duration_s) + 1);

    let mut energies = vec![0u64; bins];
    for frame in trace.frames() {
        let p = &frame.packet;
        if p.frame_type.is_predicted() {
            energies[bin_of(p.pts_seconds, bin_duration_s)] += p.byte_size;
        }
    }
    Ok(BinEnergies {
        energies,
        bin_duration_s,
    })
}

/// Average P/B bit-cost per group: `sum(e) / max(1, K_tar)`.
pub fn compute_quota(e: &BinEnergies, target_groups: u32) -> f64 {
    e.total() as f64 / f64::from(target_groups.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseReason {
    Quota,
    MaxSpan,
    /// Ran out of bins before either trigger fired.
    Tail,
}

/// One group: inclusive bin range `[start, end]`, plus the tentative trigger
/// bin that the valley search started from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gop {
    pub start: usize,
    pub end: usize,
    pub trigger: usize,
    pub reason: CloseReason,
}

impl Gop {
    pub fn span(&self) -> usize {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GopPartition {
    pub groups: Vec<Gop>,
    pub quota: f64,
    pub bin_duration_s: f64,
    pub num_bins: usize,
}

/// Wire form embedded in output headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub quota: f64,
    pub groups: Vec<SpanRecord>,
    pub bin_duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub s: usize,
    pub c: usize,
}

impl GopPartition {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn record(&self) -> PartitionRecord {
        PartitionRecord {
            quota: self.quota,
            groups: self
                .groups
                .iter()
                .map(|g| SpanRecord { s: g.start, c: g.end })
                .collect(),
            bin_duration_s: self.bin_duration_s,
        }
    }

    /// Group containing bin `b`.
    pub fn group_of_bin(&self, b: usize) -> Option<usize> {
        if b >= self.num_bins {
            return None;
        }
        let k = self.groups.partition_point(|g| g.end < b);
        (k < self.groups.len()).then_some(k)
    }
}

/// Partition the bins into groups. `quota` is computed once for the whole
/// video (see [`compute_quota`]).
pub fn partition_gops(e: &BinEnergies, cfg: &PartitionConfig, quota: f64) -> Result<GopPartition, GopError> {
    cfg.validate()?;
    if e.is_empty() {
        return Err(GopError::InvalidConfig("partition needs at least one bin".into()));
    }
    let bins = e.len();
    let l_min = cfg.min_span_bins();
    let l_max = cfg.max_span_bins();
    let w = cfg.valley_window_bins as usize;

    let mut groups = Vec::new();
    let mut start = 0usize;
    while start < bins {
        let mut acc = 0u64;
        let mut trigger = None;
        for i in start..bins {
            acc += e.energies[i];
            let span = i - start + 1;
            if span >= l_max {
                trigger = Some((i, CloseReason::MaxSpan));
                break;
            }
            if span >= l_min && acc as f64 >= quota {
                trigger = Some((i, CloseReason::Quota));
                break;
            }
        }
        let Some((i, reason)) = trigger else {
            groups.push(Gop {
                start,
                end: bins - 1,
                trigger: bins - 1,
                reason: CloseReason::Tail,
            });
            break;
        };

        let lo = i.saturating_sub(w).max(start + l_min - 1);
        let hi = (i + w).min(start + l_max - 1).min(bins - 1);
        // (energy, distance, index) lexicographic minimum.
        let end = (lo..=hi)
            .min_by_key(|&b| (e.energies[b], b.abs_diff(i), b))
            .expect("window contains the trigger bin");
        groups.push(Gop {
            start,
            end,
            trigger: i,
            reason,
        });
        start = end + 1;
    }

    Ok(GopPartition {
        groups,
        quota,
        bin_duration_s: e.bin_duration_s,
        num_bins: bins,
    })
}

/// Group id of a source frame: the group whose `[s*bin, (c+1)*bin)` interval
/// contains `frame_index / fps`.
pub fn assign_group(frame_index: u32, fps: f64, partition: &GopPartition) -> Result<usize, GopError> {
    let t = f64::from(frame_index) / fps;
    let out_of_range = || GopError::OutOfRange {
        frame_index,
        time_s: t,
    };
    if !(t.is_finite() && t >= 0.0) {
        return Err(out_of_range());
    }
    partition
        .group_of_bin(bin_of(t, partition.bin_duration_s))
        .ok_or_else(out_of_range)
}
