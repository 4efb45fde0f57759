//! Run configuration: TOML file, then command-line overrides.

use std::path::Path;

use clap::Args;
use codecstream::{PackingConfig, PartitionConfig, SaliencyConfig, TokenizerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything that determines a run's outputs. Written into every output
/// header.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub partition: PartitionConfig,
    pub saliency: SaliencyConfig,
    pub packing: PackingConfig,
    /// Input trace, as given on the command line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

impl RunConfig {
    pub fn tokenizer(&self) -> TokenizerConfig {
        TokenizerConfig {
            partition: self.partition.clone(),
            saliency: self.saliency.clone(),
            packing: self.packing.clone(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.tokenizer().validate().map_err(CliError::from)
    }

    pub fn with_trace(&self, path: &Path) -> Self {
        Self {
            trace: Some(path.display().to_string()),
            ..self.clone()
        }
    }
}

/// One flag per config field. Unset flags keep the file (or default) value.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// TOML file with `seed` and `[partition]`, `[saliency]`, `[packing]` tables.
    #[arg(long, value_name = "FILE")]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bin width in seconds.
    #[arg(long)]
    pub bin_duration: Option<f64>,
    #[arg(long)]
    pub target_groups: Option<u32>,
    /// Minimum group span in seconds.
    #[arg(long)]
    pub min_span: Option<f64>,
    /// Maximum group span in seconds.
    #[arg(long)]
    pub max_span: Option<f64>,
    /// Half-width of the boundary search window, in bins.
    #[arg(long)]
    pub valley_window: Option<u32>,
    /// Normalization percentile in (0, 100].
    #[arg(long)]
    pub percentile: Option<f64>,
    #[arg(long)]
    pub bitcost_prior_weight: Option<f64>,
    /// Same-frame attenuation.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha_peak: Option<f64>,
    /// Blocks (2x2 patches) per canvas.
    #[arg(long)]
    pub canvas_blocks: Option<u32>,
    /// P-canvases for the whole video.
    #[arg(long)]
    pub p_canvases: Option<u32>,
}

impl ConfigFlags {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag {
                    $($field)+ = v;
                }
            };
        }
        set!(seed => cfg.seed);
        set!(bin_duration => cfg.partition.bin_duration_s);
        set!(target_groups => cfg.partition.target_groups);
        set!(min_span => cfg.partition.min_span_s);
        set!(max_span => cfg.partition.max_span_s);
        set!(valley_window => cfg.partition.valley_window_bins);
        set!(percentile => cfg.saliency.percentile);
        set!(bitcost_prior_weight => cfg.saliency.bitcost_prior_weight);
        set!(lambda => cfg.packing.lambda);
        set!(alpha_peak => cfg.packing.alpha_peak);
        set!(canvas_blocks => cfg.packing.canvas_blocks);
        set!(p_canvases => cfg.packing.p_canvases_total);
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorKind;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 9\n[partition]\ntarget_groups = 3\n[packing]\nlambda = 2.0\n").unwrap();
        let flags = ConfigFlags {
            config: Some(path),
            lambda: Some(0.5),
            ..Default::default()
        };
        let cfg = flags.resolve().unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.partition.target_groups, 3);
        assert_eq!(cfg.packing.lambda, 0.5);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[partition]\nbogus = 1\n").unwrap();
        let flags = ConfigFlags {
            config: Some(path),
            ..Default::default()
        };
        assert_eq!(flags.resolve().unwrap_err().kind, ErrorKind::Config);
        let flags = ConfigFlags {
            percentile: Some(0.0),
            ..Default::default()
        };
        assert_eq!(flags.resolve().unwrap_err().kind, ErrorKind::Config);
    }

    #[test]
    fn json_roundtrip() {
        let cfg = RunConfig::default().with_trace(Path::new("a/b.trace"));
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
