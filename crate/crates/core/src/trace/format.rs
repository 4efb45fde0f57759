//! Sidecar trace format.
//!
//! A trace is a line-delimited JSON text file plus an optional companion
//! binary blob holding raw 8-bit luma residuals:
//!
//! ```text
//! {"version":1,"fps":30.0,"width":64,"height":64}
//! {"frame_index":0,"frame_type":"I","pts_seconds":0.0,"byte_size":9000}
//! {"frame_index":1,"frame_type":"P","pts_seconds":0.03333333333333333,"byte_size":1200,
//!  "mv":{"block_size_px":16,"block_w":4,"block_h":4,"vectors":[0.25,-1.0,...]},
//!  "residual":{"offset":0,"length":4096}}
//! ```
//!
//! (the frame record is a single line in the file). Field order is fixed.
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! trace written by [`write_trace`] re-serializes byte-for-byte.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CodecTrace, FrameTrace, FrameType, MotionVectorField, PacketRecord, ResidualPlane, TraceError};

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    version: u32,
    fps: f64,
    width: u32,
    height: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MvRecord {
    block_size_px: u32,
    block_w: u32,
    block_h: u32,
    vectors: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlobRef {
    offset: u64,
    length: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    frame_index: u32,
    frame_type: FrameType,
    pts_seconds: f64,
    byte_size: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mv: Option<MvRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    residual: Option<BlobRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    block_bits: Option<Vec<u64>>,
}

/// Companion residual blob for a trace file: same path with a `.luma` extension.
pub fn residual_blob_path(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("luma")
}

/// Parse a trace from its text records. `blob` must be supplied when any
/// frame references residual data.
pub fn read_trace<R: BufRead>(text: R, blob: Option<&[u8]>) -> Result<CodecTrace, TraceError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(TraceError::EmptyTrace),
            Some((_, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str::<HeaderRecord>(&line).map_err(|e| TraceError::MalformedRecord {
                    line: 1,
                    msg: format!("bad header: {e}"),
                })?;
            }
        }
    };
    if header.version != TRACE_FORMAT_VERSION {
        return Err(TraceError::MalformedRecord {
            line: 1,
            msg: format!("unsupported trace version {}", header.version),
        });
    }

    let mut frames = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FrameRecord = serde_json::from_str(&line).map_err(|e| TraceError::MalformedRecord {
            line: lineno,
            msg: e.to_string(),
        })?;
        frames.push(frame_from_record(rec, &header, blob, lineno)?);
    }
    CodecTrace::new(header.fps, header.width, header.height, frames)
}

fn frame_from_record(
    rec: FrameRecord,
    header: &HeaderRecord,
    blob: Option<&[u8]>,
    line: usize,
) -> Result<FrameTrace, TraceError> {
    let malformed = |msg: String| TraceError::MalformedRecord { line, msg };
    let mv = match rec.mv {
        None => None,
        Some(m) => {
            if m.vectors.len() % 2 != 0 {
                return Err(malformed("mv vectors must hold dx,dy pairs".into()));
            }
            Some(MotionVectorField {
                block_w: m.block_w,
                block_h: m.block_h,
                block_size_px: m.block_size_px,
                vectors: m.vectors.chunks_exact(2).map(|c| (c[0], c[1])).collect(),
            })
        }
    };
    let residual = match rec.residual {
        None => None,
        Some(r) => {
            let blob = blob.ok_or_else(|| malformed("residual referenced but no residual blob supplied".into()))?;
            let start = usize::try_from(r.offset).map_err(|_| malformed("residual offset overflow".into()))?;
            let len = usize::try_from(r.length).map_err(|_| malformed("residual length overflow".into()))?;
            let end = start
                .checked_add(len)
                .filter(|&end| end <= blob.len())
                .ok_or_else(|| {
                    malformed(format!(
                        "residual range {}+{} exceeds blob of {} bytes",
                        r.offset,
                        r.length,
                        blob.len()
                    ))
                })?;
            let expected = header.width as usize * header.height as usize;
            if len != expected {
                return Err(TraceError::DimensionMismatch {
                    frame_index: rec.frame_index,
                    msg: format!("residual length {len} does not match {}x{}", header.width, header.height),
                });
            }
            Some(ResidualPlane {
                width: header.width,
                height: header.height,
                luma: blob[start..end].to_vec(),
            })
        }
    };
    Ok(FrameTrace {
        packet: PacketRecord {
            frame_index: rec.frame_index,
            frame_type: rec.frame_type,
            pts_seconds: rec.pts_seconds,
            byte_size: rec.byte_size,
        },
        mv,
        residual,
        block_bits: rec.block_bits,
    })
}

/// Serialize a trace. Residual planes are appended to `blob` in frame order.
pub fn write_trace<W: Write, B: Write>(trace: &CodecTrace, mut text: W, mut blob: B) -> Result<(), TraceError> {
    let header = HeaderRecord {
        version: TRACE_FORMAT_VERSION,
        fps: trace.fps(),
        width: trace.width(),
        height: trace.height(),
    };
    serde_json::to_writer(&mut text, &header).map_err(std::io::Error::from)?;
    text.write_all(b"\n")?;

    let mut offset = 0u64;
    for frame in trace.frames() {
        let residual = match &frame.residual {
            Some(plane) => {
                blob.write_all(&plane.luma)?;
                let r = BlobRef {
                    offset,
                    length: plane.luma.len() as u64,
                };
                offset += plane.luma.len() as u64;
                Some(r)
            }
            None => None,
        };
        let rec = FrameRecord {
            frame_index: frame.packet.frame_index,
            frame_type: frame.packet.frame_type,
            pts_seconds: frame.packet.pts_seconds,
            byte_size: frame.packet.byte_size,
            mv: frame.mv.as_ref().map(|m| MvRecord {
                block_size_px: m.block_size_px,
                block_w: m.block_w,
                block_h: m.block_h,
                vectors: m.vectors.iter().flat_map(|&(dx, dy)| [dx, dy]).collect(),
            }),
            residual,
            block_bits: frame.block_bits.clone(),
        };
        serde_json::to_writer(&mut text, &rec).map_err(std::io::Error::from)?;
        text.write_all(b"\n")?;
    }
    text.flush()?;
    blob.flush()?;
    Ok(())
}

/// Read a trace file and, if present, its `.luma` companion.
pub fn load_trace(path: &Path) -> Result<CodecTrace, TraceError> {
    let blob_path = residual_blob_path(path);
    let blob = if blob_path.exists() {
        Some(std::fs::read(&blob_path)?)
    } else {
        None
    };
    let text = BufReader::new(File::open(path)?);
    read_trace(text, blob.as_deref())
}

/// Write a trace file; the `.luma` companion is only created when some frame
/// carries a residual.
pub fn save_trace(trace: &CodecTrace, path: &Path) -> Result<(), TraceError> {
    let text = BufWriter::new(File::create(path)?);
    if trace.frames().iter().any(|f| f.residual.is_some()) {
        let blob = BufWriter::new(File::create(residual_blob_path(path))?);
        write_trace(trace, text, blob)
    } else {
        write_trace(trace, text, std::io::sink())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_FRAMES: &str = r#"{"version":1,"fps":30.0,"width":32,"height":32}
{"frame_index":0,"frame_type":"I","pts_seconds":0.0,"byte_size":9000}
{"frame_index":1,"frame_type":"P","pts_seconds":0.033,"byte_size":1200}
{"frame_index":2,"frame_type":"P","pts_seconds":0.066,"byte_size":1100}
"#;

    #[test]
    fn parses_minimal_trace() {
        let t = read_trace(THREE_FRAMES.as_bytes(), None).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.fps(), 30.0);
        assert_eq!(t.frames()[2].packet.pts_seconds, 0.066);
        assert_eq!(t.frames()[0].packet.frame_type, FrameType::I);
    }

    #[test]
    fn pts_regression_is_rejected() {
        let text = THREE_FRAMES.replace("0.066", "0.01");
        assert!(matches!(
            read_trace(text.as_bytes(), None),
            Err(TraceError::NonMonotonicPts { frame_index: 2, .. })
        ));
    }

    #[test]
    fn bad_field_is_malformed() {
        let text = THREE_FRAMES.replace("\"P\",\"pts_seconds\":0.033", "\"X\",\"pts_seconds\":0.033");
        match read_trace(text.as_bytes(), None) {
            Err(TraceError::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected MalformedRecord, got {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_malformed() {
        let text = THREE_FRAMES.replace("\"byte_size\":1100", "\"byte_size\":1100,\"extra\":1");
        assert!(matches!(
            read_trace(text.as_bytes(), None),
            Err(TraceError::MalformedRecord { line: 4, .. })
        ));
    }

    #[test]
    fn header_only_is_empty() {
        let text = "{\"version\":1,\"fps\":30.0,\"width\":32,\"height\":32}\n";
        assert!(matches!(read_trace(text.as_bytes(), None), Err(TraceError::EmptyTrace)));
        assert!(matches!(read_trace("".as_bytes(), None), Err(TraceError::EmptyTrace)));
    }

    #[test]
    fn residual_without_blob_is_malformed() {
        let text = THREE_FRAMES.replace(
            "\"byte_size\":1100}",
            "\"byte_size\":1100,\"residual\":{\"offset\":0,\"length\":1024}}",
        );
        assert!(matches!(
            read_trace(text.as_bytes(), None),
            Err(TraceError::MalformedRecord { .. })
        ));
        let blob = vec![128u8; 1024];
        let t = read_trace(text.as_bytes(), Some(&blob)).unwrap();
        assert_eq!(t.frames()[2].residual.as_ref().unwrap().luma.len(), 1024);
    }

    #[test]
    fn residual_size_mismatch() {
        let text = THREE_FRAMES.replace(
            "\"byte_size\":1100}",
            "\"byte_size\":1100,\"residual\":{\"offset\":0,\"length\":512}}",
        );
        let blob = vec![128u8; 1024];
        assert!(matches!(
            read_trace(text.as_bytes(), Some(&blob)),
            Err(TraceError::DimensionMismatch { frame_index: 2, .. })
        ));
    }

    #[test]
    fn writes_what_it_reads() {
        let t = read_trace(THREE_FRAMES.as_bytes(), None).unwrap();
        let mut out = Vec::new();
        write_trace(&t, &mut out, std::io::sink()).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), THREE_FRAMES);
    }
}
