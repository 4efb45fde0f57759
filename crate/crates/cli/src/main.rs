use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use codecstream::budget::BudgetQuery;
use codecstream::trace::{Segment, SynthSpec};
use codecstream_cli::commands;
use codecstream_cli::config::ConfigFlags;
use codecstream_cli::error::{CliError, CliResult};
use jumpscore::{ApFormula, DEFAULT_TOLERANCES};

#[derive(Parser)]
#[command(name = "codecstream", version, about = "Codec-stream video tokenization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace.
    Synth {
        /// Output trace path; residuals go next to it with a `.luma` extension.
        #[arg(long)]
        out: PathBuf,
        /// TOML spec (segments, fps, width, height, seed, ...). Flags below override it.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// `DURATION:AMPLITUDE:BITCOST`, repeatable.
        #[arg(long = "segment", value_parser = parse_segment)]
        segments: Vec<Segment>,
        #[arg(long)]
        fps: Option<f64>,
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        height: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// Attach motion/residual maps to every N-th frame.
        #[arg(long)]
        map_interval: Option<u32>,
        #[arg(long)]
        mv_block: Option<u32>,
        #[arg(long)]
        b_frames: bool,
    },
    /// Tokenize traces into canvases and token metadata.
    Tokenize {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Traces processed in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Bit-cost and group-boundary figure plus its data file.
    Plot {
        trace: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Compare token counts of uniform frame sampling and codec canvases.
    Budget {
        #[arg(long)]
        frames: u64,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        #[arg(long, default_value_t = 14)]
        patch: u32,
        #[arg(long, default_value_t = 2)]
        merge: u32,
        #[arg(long, default_value_t = 196)]
        canvas_blocks: u32,
        #[arg(long, default_value_t = 0)]
        canvases: u64,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Score cycle-start predictions against annotations.
    Eval {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Tolerance in seconds, repeatable. Defaults to 0.1, 0.2, 0.3.
        #[arg(long = "delta")]
        deltas: Vec<f64>,
        /// Use F1 instead of precision x recall.
        #[arg(long)]
        f1: bool,
        /// Also write JSONL records here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump saliency debug images and block scores for chosen frames.
    Inspect {
        trace: PathBuf,
        #[arg(long = "frame")]
        frames: Vec<u32>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Write the dense visibility mask of a tokens file.
    Mask {
        tokens: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = codecstream::attention::DEFAULT_DENSE_LIMIT)]
        max_tokens: usize,
    },
}

fn parse_segment(s: &str) -> Result<Segment, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [d, a, b] = parts[..] else {
        return Err(format!("expected DURATION:AMPLITUDE:BITCOST, got {s}"));
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok(Segment {
        duration_s: num(d)?,
        motion_amplitude: num(a)?,
        bitcost_level: num(b)?,
    })
}

fn load_spec(path: &PathBuf) -> CliResult<SynthSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth {
            out,
            spec,
            segments,
            fps,
            width,
            height,
            seed,
            map_interval,
            mv_block,
            b_frames,
        } => {
            let mut s = match &spec {
                Some(p) => load_spec(p)?,
                None => SynthSpec::new(Vec::new(), 30.0, 320, 192, 0),
            };
            if !segments.is_empty() {
                s.segments = segments;
            }
            s.fps = fps.unwrap_or(s.fps);
            s.width = width.unwrap_or(s.width);
            s.height = height.unwrap_or(s.height);
            s.seed = seed.unwrap_or(s.seed);
            s.map_interval = map_interval.unwrap_or(s.map_interval);
            s.mv_block_px = mv_block.unwrap_or(s.mv_block_px);
            s.b_frames |= b_frames;
            let t = commands::cmd_synth(&s, &out)?;
            println!("{}: {} frames, {:.3} s", out.display(), t.len(), t.duration_s());
        }
        Command::Tokenize {
            traces,
            out_dir,
            jobs,
            config,
        } => {
            let cfg = config.resolve()?;
            for s in commands::cmd_tokenize(&traces, &out_dir, &cfg, jobs)? {
                println!(
                    "{}: frames={} groups={} canvases={} (I {}, P {}) tokens={}",
                    s.trace.display(),
                    s.frames,
                    s.groups,
                    s.i_canvases + s.p_canvases,
                    s.i_canvases,
                    s.p_canvases,
                    s.tokens
                );
            }
        }
        Command::Plot { trace, out_dir, config } => {
            let cfg = config.resolve()?;
            let (d, png, json) = commands::cmd_plot(&trace, &out_dir, &cfg)?;
            println!(
                "{} bins, {} groups, quota {}; wrote {} and {}",
                d.bins.len(),
                d.boundaries.len(),
                d.quota,
                png.display(),
                json.display()
            );
        }
        Command::Budget {
            frames,
            width,
            height,
            patch,
            merge,
            canvas_blocks,
            canvases,
            json,
        } => {
            let r = commands::cmd_budget(&BudgetQuery {
                frames,
                width,
                height,
                patch,
                merge,
                canvas_blocks,
                canvases,
            })?;
            if json {
                println!("{}", serde_json::to_string(&r).map_err(|e| CliError::internal(e.to_string()))?);
            } else {
                println!("tokens per frame:   {}", r.tokens_per_frame);
                println!("uniform tokens:     {}", r.uniform_tokens);
                println!("tokens per canvas:  {}", r.tokens_per_canvas);
                println!("codec tokens:       {}", r.codec_tokens);
                println!("matched canvases:   {}", r.matched_canvases);
            }
        }
        Command::Eval {
            annotations,
            predictions,
            deltas,
            f1,
            out,
        } => {
            let deltas = if deltas.is_empty() { DEFAULT_TOLERANCES.to_vec() } else { deltas };
            let formula = if f1 { ApFormula::F1 } else { ApFormula::PrecisionRecall };
            let report = commands::cmd_eval(&annotations, &predictions, &deltas, formula)?;
            print!("{}", report.to_table());
            if let Some(path) = out {
                std::fs::write(&path, report.to_jsonl())
                    .map_err(|e| CliError::internal(format!("{}: {e}", path.display())))?;
            }
        }
        Command::Inspect {
            trace,
            frames,
            out_dir,
            config,
        } => {
            let cfg = config.resolve()?;
            for p in commands::cmd_inspect(&trace, &frames, &out_dir, &cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Mask { tokens, out, max_tokens } => {
            let g = commands::cmd_mask(&tokens, &out, max_tokens)?;
            println!("{} tokens in {} groups; wrote {}", g.len(), g.distinct(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("codecstream: {e}");
            e.exit_code()
        }
    }
}
