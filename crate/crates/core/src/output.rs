//! Line-delimited JSON writers for token metadata and canvas manifests.
//!
//! Both files open with a header line carrying the format version and the
//! full run configuration.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::attention::VisibilityGroups;
use crate::gop::PartitionRecord;
use crate::packer::{Canvas, CanvasLabel, TokenRecord};
use crate::pipeline::Tokenization;

pub const OUTPUT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokensHeader<C> {
    pub format_version: u32,
    pub config: C,
    pub partition: PartitionRecord,
    /// P-canvases per group.
    pub allocation: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenLine {
    pub iota: u32,
    pub f: u32,
    pub p_can: (u32, u32),
    pub p_src: (u32, u32),
    pub kappa: u32,
    /// Visibility group.
    pub group: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader<C> {
    pub format_version: u32,
    pub config: C,
    pub canvases: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLine {
    pub index: u32,
    pub label: CanvasLabel,
    pub group: u32,
    pub rows: u32,
    pub cols: u32,
    pub source_frames: Vec<u32>,
}

impl From<&Canvas> for ManifestLine {
    fn from(c: &Canvas) -> Self {
        Self {
            index: c.index,
            label: c.label,
            group: c.group,
            rows: c.rows,
            cols: c.cols,
            source_frames: c.source_frames(),
        }
    }
}

pub fn token_line(t: &TokenRecord, group: u32) -> TokenLine {
    TokenLine {
        iota: t.canvas_index,
        f: t.source_frame,
        p_can: t.canvas_pos,
        p_src: t.source_pos,
        kappa: t.group,
        group,
    }
}

fn write_line<W: Write, T: Serialize>(w: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

pub fn write_tokens<W: Write, C: Serialize>(
    mut w: W,
    config: &C,
    out: &Tokenization,
    groups: &VisibilityGroups,
) -> io::Result<()> {
    assert_eq!(groups.len(), out.tokens.len(), "one group id per token");
    write_line(
        &mut w,
        &TokensHeader {
            format_version: OUTPUT_FORMAT_VERSION,
            config,
            partition: out.partition.record(),
            allocation: out.allocation.clone(),
        },
    )?;
    for (t, &g) in out.tokens.iter().zip(&groups.0) {
        write_line(&mut w, &token_line(t, g))?;
    }
    w.flush()
}

pub fn write_manifest<W: Write, C: Serialize>(mut w: W, config: &C, canvases: &[Canvas]) -> io::Result<()> {
    write_line(
        &mut w,
        &ManifestHeader {
            format_version: OUTPUT_FORMAT_VERSION,
            config,
            canvases: canvases.len(),
        },
    )?;
    for c in canvases {
        write_line(&mut w, &ManifestLine::from(c))?;
    }
    w.flush()
}

/// Parse a tokens file back. Mostly for tests and downstream tooling.
pub fn read_tokens<R: BufRead, C: for<'de> Deserialize<'de>>(r: R) -> io::Result<(TokensHeader<C>, Vec<TokenLine>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "missing header"))??;
    let header: TokensHeader<C> = serde_json::from_str(&header)?;
    let mut tokens = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        tokens.push(serde_json::from_str(&line)?);
    }
    Ok((header, tokens))
}
