//! Codec-stream video tokenization.
//!
//! Turns a per-frame codec trace (packet sizes, motion vectors, residual luma)
//! into grouped canvases of 2x2 patch blocks, plus the group-visibility and
//! position metadata a downstream encoder needs.

pub mod attention;
pub mod budget;
pub mod gop;
pub mod output;
pub mod packer;
pub mod pipeline;
pub mod plot;
pub mod saliency;
pub mod trace;

/// Patch edge in pixels. Blocks are 2x2 patches.
pub const PATCH_SIZE: u32 = 16;

pub use gop::{partition_gops, GopPartition, PartitionConfig};
pub use packer::PackingConfig;
pub use pipeline::{tokenize, Tokenization, TokenizeError, TokenizerConfig};
pub use saliency::SaliencyConfig;
pub use trace::{CodecTrace, TraceError};
