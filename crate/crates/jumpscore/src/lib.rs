//! Scoring for cycle-start localization: greedy tolerance matching of
//! predicted timestamps against annotated starts, AP per tolerance and mAP
//! over a dataset.
//!
//! Timestamps are compared in whole microseconds so that decimal inputs such
//! as `1.1` vs `1.0` at a tolerance of `0.1` are decided exactly.

mod matching;
mod parse;
mod report;

pub use matching::{greedy_match, to_micros, MatchResult};
pub use parse::parse_prediction_output;
pub use report::{
    ap_at_delta, evaluate, jumpscore_map, read_annotations, read_predictions, ApFormula, PredictionEntry, Report, ReportRecord,
    VideoScore,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerances in seconds used for the headline number.
pub const DEFAULT_TOLERANCES: [f64; 3] = [0.1, 0.2, 0.3];

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("video {0}: ground truth is empty")]
    EmptyGroundTruth(String),
    #[error("video {video_id}: ground-truth starts must be finite, non-negative and strictly increasing")]
    UnsortedGroundTruth { video_id: String },
    #[error("video {video_id}: prediction {value} is not a finite non-negative time")]
    InvalidPrediction { video_id: String, value: f64 },
    #[error("tolerance must be finite and positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no timestamps found in model output")]
    NoTimestampsFound,
    #[error("duplicate video id {0}")]
    DuplicateVideo(String),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleAnnotations {
    pub video_id: String,
    pub starts: Vec<f64>,
}

impl CycleAnnotations {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.starts.is_empty() {
            return Err(EvalError::EmptyGroundTruth(self.video_id.clone()));
        }
        let ok = self.starts.iter().all(|t| t.is_finite() && *t >= 0.0)
            && self.starts.windows(2).all(|w| to_micros(w[0]) < to_micros(w[1]));
        if !ok {
            return Err(EvalError::UnsortedGroundTruth {
                video_id: self.video_id.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclePrediction {
    pub video_id: String,
    pub starts: Vec<f64>,
}

impl CyclePrediction {
    pub fn validate(&self) -> Result<(), EvalError> {
        match self.starts.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            Some(&value) => Err(EvalError::InvalidPrediction {
                video_id: self.video_id.clone(),
                value,
            }),
            None => Ok(()),
        }
    }
}
