//! Numbers behind the bit-cost / cumulative-energy figure.

use serde::{Deserialize, Serialize};

use crate::gop::{BinEnergies, GopPartition, SpanRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub bin_duration_s: f64,
    /// Bit-cost per bin.
    pub bins: Vec<u64>,
    /// Running energy inside the current group; restarts at each group start.
    pub cumulative: Vec<u64>,
    pub quota: f64,
    /// Closing bin of every group, one per group.
    pub boundaries: Vec<usize>,
    pub groups: Vec<SpanRecord>,
}

pub fn plot_data(e: &BinEnergies, partition: &GopPartition) -> PlotData {
    let mut cumulative = Vec::with_capacity(e.len());
    for g in &partition.groups {
        let mut acc = 0u64;
        for &v in &e.energies[g.start..=g.end] {
            acc += v;
            cumulative.push(acc);
        }
    }
    PlotData {
        bin_duration_s: e.bin_duration_s,
        bins: e.energies.clone(),
        cumulative,
        quota: partition.quota,
        boundaries: partition.groups.iter().map(|g| g.end).collect(),
        groups: partition.record().groups,
    }
}
