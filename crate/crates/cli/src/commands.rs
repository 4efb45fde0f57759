//! Subcommand implementations. Each returns its result so tests can drive
//! them in-process.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use codecstream::attention::{build_mask, codec_groups, VisibilityGroups};
use codecstream::budget::{compare, BudgetQuery, BudgetReport};
use codecstream::gop::{bin_bitcost, compute_quota, partition_gops};
use codecstream::output::{write_manifest, write_tokens, TokenLine, OUTPUT_FORMAT_VERSION};
use codecstream::plot::{plot_data, PlotData};
use codecstream::saliency::{block_scores, motion_response, residual_response, saliency_map, PixelMap};
use codecstream::trace::{load_trace, save_trace, synthesize_trace, CodecTrace, SynthSpec};
use codecstream::{tokenize, PATCH_SIZE};
use jumpscore::{evaluate, read_annotations, read_predictions, ApFormula, Report};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::render;

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::internal(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into())
}

fn read_trace_file(path: &Path) -> CliResult<CodecTrace> {
    load_trace(path).map_err(|e| CliError::from(e).context(path.display()))
}

/// Header written in front of single-document JSON outputs.
#[derive(Serialize)]
struct Document<'a, T> {
    format_version: u32,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(path: &Path, cfg: &RunConfig, body: T) -> CliResult<()> {
    let mut w = create(path)?;
    let doc = Document {
        format_version: OUTPUT_FORMAT_VERSION,
        config: cfg,
        body,
    };
    serde_json::to_writer(&mut w, &doc).map_err(|e| CliError::internal(e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(write_err(path))
}

pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> CliResult<CodecTrace> {
    let trace = synthesize_trace(spec)?;
    save_trace(&trace, out).map_err(|e| CliError::internal(format!("{}: {e}", out.display())))?;
    info!("wrote {} frames to {}", trace.len(), out.display());
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenizeSummary {
    pub trace: PathBuf,
    pub frames: usize,
    pub groups: usize,
    pub i_canvases: usize,
    pub p_canvases: usize,
    pub tokens: usize,
    pub tokens_path: PathBuf,
    pub manifest_path: PathBuf,
}

pub fn output_paths(trace: &Path, out_dir: &Path) -> (PathBuf, PathBuf) {
    let s = stem(trace);
    (
        out_dir.join(format!("{s}.tokens.jsonl")),
        out_dir.join(format!("{s}.canvases.jsonl")),
    )
}

/// Tokenize an in-memory trace and write both output files.
pub fn tokenize_trace(trace: &CodecTrace, trace_path: &Path, out_dir: &Path, cfg: &RunConfig) -> CliResult<TokenizeSummary> {
    let run = cfg.with_trace(trace_path);
    let out = tokenize(trace, &cfg.tokenizer())?;
    let groups = codec_groups(&out.tokens);
    let (tokens_path, manifest_path) = output_paths(trace_path, out_dir);
    write_tokens(create(&tokens_path)?, &run, &out, &groups).map_err(write_err(&tokens_path))?;
    write_manifest(create(&manifest_path)?, &run, &out.canvases).map_err(write_err(&manifest_path))?;
    let p = out.p_canvas_count();
    Ok(TokenizeSummary {
        trace: trace_path.to_path_buf(),
        frames: trace.len(),
        groups: out.partition.len(),
        i_canvases: out.canvases.len() - p,
        p_canvases: p,
        tokens: out.tokens.len(),
        tokens_path,
        manifest_path,
    })
}

pub fn tokenize_one(trace_path: &Path, out_dir: &Path, cfg: &RunConfig) -> CliResult<TokenizeSummary> {
    let trace = read_trace_file(trace_path)?;
    tokenize_trace(&trace, trace_path, out_dir, cfg).map_err(|e| e.context(trace_path.display()))
}

/// Tokenize several traces, `jobs` at a time. Results keep input order.
pub fn cmd_tokenize(traces: &[PathBuf], out_dir: &Path, cfg: &RunConfig, jobs: usize) -> CliResult<Vec<TokenizeSummary>> {
    cfg.validate()?;
    let mut stems = HashSet::new();
    for t in traces {
        if !stems.insert(stem(t)) {
            return Err(CliError::config(format!("two inputs share the output name {}", stem(t))));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(write_err(out_dir))?;
    if jobs <= 1 {
        return traces.iter().map(|t| tokenize_one(t, out_dir, cfg)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::internal(e.to_string()))?;
    pool.install(|| traces.par_iter().map(|t| tokenize_one(t, out_dir, cfg)).collect())
}

pub fn plot_for_trace(trace: &CodecTrace, cfg: &RunConfig) -> CliResult<PlotData> {
    cfg.validate()?;
    let e = bin_bitcost(trace, cfg.partition.bin_duration_s)?;
    let quota = compute_quota(&e, cfg.partition.target_groups);
    let p = partition_gops(&e, &cfg.partition, quota)?;
    Ok(plot_data(&e, &p))
}

#[derive(Serialize)]
struct PlotBody<'a> {
    plot: &'a PlotData,
}

/// Write `<stem>.plot.png` and `<stem>.plot.json`.
pub fn cmd_plot(trace_path: &Path, out_dir: &Path, cfg: &RunConfig) -> CliResult<(PlotData, PathBuf, PathBuf)> {
    let trace = read_trace_file(trace_path)?;
    let data = plot_for_trace(&trace, cfg)?;
    std::fs::create_dir_all(out_dir).map_err(write_err(out_dir))?;
    let s = stem(trace_path);
    let png = out_dir.join(format!("{s}.plot.png"));
    let json = out_dir.join(format!("{s}.plot.json"));
    render::save_png(&render::plot_image(&data), &png)?;
    write_json(&json, &cfg.with_trace(trace_path), PlotBody { plot: &data })?;
    Ok((data, png, json))
}

pub fn cmd_budget(q: &BudgetQuery) -> CliResult<BudgetReport> {
    Ok(compare(q)?)
}

pub fn cmd_eval(annotations: &Path, predictions: &Path, tolerances: &[f64], formula: ApFormula) -> CliResult<Report> {
    let ann = read_annotations(open(annotations)?).map_err(|e| CliError::from(e).context(annotations.display()))?;
    let pred = read_predictions(open(predictions)?).map_err(|e| CliError::from(e).context(predictions.display()))?;
    let report = evaluate(&ann, &pred, tolerances, formula)?;
    for w in &report.warnings {
        warn!("{w}");
    }
    Ok(report)
}

#[derive(Serialize)]
struct BlocksBody {
    frame: u32,
    blocks_i: u32,
    blocks_j: u32,
    scores: Vec<f64>,
}

/// Dump motion, residual and saliency images plus raw block scores for
/// the given frames. With no frames, the first frame with side data is used.
pub fn cmd_inspect(trace_path: &Path, frames: &[u32], out_dir: &Path, cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let trace = read_trace_file(trace_path)?;
    let frames: Vec<u32> = if frames.is_empty() {
        let first = trace
            .frames()
            .iter()
            .find(|f| f.has_evidence())
            .ok_or_else(|| CliError::input("trace has no frame with motion or residual data"))?;
        vec![first.packet.frame_index]
    } else {
        frames.to_vec()
    };
    std::fs::create_dir_all(out_dir).map_err(write_err(out_dir))?;
    let (w, h, pct) = (trace.width(), trace.height(), cfg.saliency.percentile);
    let s = stem(trace_path);
    let run = cfg.with_trace(trace_path);
    let mut written = Vec::new();
    for n in frames {
        let f = trace
            .frames()
            .get(n as usize)
            .ok_or_else(|| CliError::input(format!("frame {n} is out of range")))?;
        let motion = f.mv.as_ref().map_or_else(|| PixelMap::zeros(w, h), |mv| motion_response(mv, w, h, pct));
        let residual = f.residual.as_ref().map_or_else(|| PixelMap::zeros(w, h), |r| residual_response(r, pct));
        let sal = saliency_map(&motion, &residual)?;
        let blocks = block_scores(&sal, PATCH_SIZE);
        for (name, map, scale) in [("motion", &motion, 255.0), ("residual", &residual, 255.0), ("saliency", &sal.0, 127.5)] {
            let path = out_dir.join(format!("{s}.f{n}.{name}.png"));
            render::save_png(&render::gray_image(map, scale), &path)?;
            written.push(path);
        }
        let path = out_dir.join(format!("{s}.f{n}.blocks.json"));
        write_json(
            &path,
            &run,
            BlocksBody {
                frame: n,
                blocks_i: blocks.blocks_i,
                blocks_j: blocks.blocks_j,
                scores: blocks.scores,
            },
        )?;
        written.push(path);
    }
    Ok(written)
}

/// Read the group column of a tokens file.
pub fn read_token_groups(path: &Path) -> CliResult<VisibilityGroups> {
    let mut groups = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let t: TokenLine =
            serde_json::from_str(&line).map_err(|e| CliError::input(format!("{} line {}: {e}", path.display(), n + 1)))?;
        groups.push(t.group);
    }
    Ok(VisibilityGroups(groups))
}

/// Write the packed dense mask of a tokens file.
pub fn cmd_mask(tokens: &Path, out: &Path, limit: usize) -> CliResult<VisibilityGroups> {
    let groups = read_token_groups(tokens)?;
    let mask = build_mask(&groups, Some(limit))?;
    let dense = mask.dense.expect("dense mask requested");
    dense.write_to(create(out)?).map_err(write_err(out))?;
    Ok(groups)
}
