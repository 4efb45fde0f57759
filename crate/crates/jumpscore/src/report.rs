use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::matching::greedy_match;
use crate::parse::parse_prediction_output;
use crate::{CycleAnnotations, CyclePrediction, EvalError};

/// How a match result collapses to one number.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApFormula {
    /// precision * recall
    #[default]
    PrecisionRecall,
    /// 2 tp / (2 tp + fp + fn)
    F1,
}

impl ApFormula {
    pub fn ap(self, pred: &[f64], gt: &[f64], delta: f64) -> f64 {
        let m = greedy_match(pred, gt, delta);
        match self {
            ApFormula::PrecisionRecall => m.precision() * m.recall(),
            ApFormula::F1 => {
                let denom = 2 * m.tp + m.fp + m.fn_;
                if denom == 0 {
                    1.0
                } else {
                    (2 * m.tp) as f64 / denom as f64
                }
            }
        }
    }
}

fn check_tolerance(delta: f64) -> Result<(), EvalError> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(EvalError::InvalidTolerance(delta))
    }
}

/// AP at one tolerance, precision * recall.
pub fn ap_at_delta(pred: &[f64], gt: &[f64], delta: f64) -> Result<f64, EvalError> {
    check_tolerance(delta)?;
    if gt.is_empty() {
        return Err(EvalError::EmptyGroundTruth(String::new()));
    }
    Ok(ApFormula::PrecisionRecall.ap(pred, gt, delta))
}

/// Where a video's prediction came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictionEntry {
    Timestamps(CyclePrediction),
    Raw { video_id: String, text: String },
}

impl PredictionEntry {
    pub fn video_id(&self) -> &str {
        match self {
            PredictionEntry::Timestamps(p) => &p.video_id,
            PredictionEntry::Raw { video_id, .. } => video_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoScore {
    pub video_id: String,
    /// One AP per tolerance, in the report's tolerance order.
    pub ap: Vec<f64>,
    pub mean: f64,
    pub predictions: usize,
    pub ground_truth: usize,
    pub missing: bool,
    pub unparsed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tolerances: Vec<f64>,
    pub formula: ApFormula,
    pub videos: Vec<VideoScore>,
    pub map: f64,
    pub warnings: Vec<String>,
}

/// One line of the machine-readable report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ReportRecord {
    Video(VideoScore),
    Summary {
        tolerances: Vec<f64>,
        formula: ApFormula,
        map: f64,
        videos: usize,
    },
}

impl Report {
    pub fn records(&self) -> Vec<ReportRecord> {
        let mut out: Vec<ReportRecord> = self.videos.iter().cloned().map(ReportRecord::Video).collect();
        out.push(ReportRecord::Summary {
            tolerances: self.tolerances.clone(),
            formula: self.formula,
            map: self.map,
            videos: self.videos.len(),
        });
        out
    }

    pub fn to_jsonl(&self) -> String {
        self.records()
            .iter()
            .map(|r| serde_json::to_string(r).expect("report records serialize") + "\n")
            .collect()
    }

    pub fn to_table(&self) -> String {
        let id_width = self.videos.iter().map(|v| v.video_id.len()).max().unwrap_or(5).max(5);
        let mut s = String::new();
        let _ = write!(s, "{:<id_width$}", "video");
        for d in &self.tolerances {
            let _ = write!(s, "  {:>8}", format!("AP@{d}"));
        }
        let _ = writeln!(s, "  {:>8}  note", "mean");
        for v in &self.videos {
            let _ = write!(s, "{:<id_width$}", v.video_id);
            for ap in &v.ap {
                let _ = write!(s, "  {ap:>8.4}");
            }
            let note = match (v.missing, v.unparsed) {
                (true, _) => "missing",
                (_, true) => "unparsed",
                _ => "",
            };
            let _ = writeln!(s, "  {:>8.4}  {note}", v.mean);
        }
        let _ = writeln!(s, "mAP {:.4} over {} videos", self.map, self.videos.len());
        s
    }
}

/// Score every annotated video. Videos without a prediction, or whose raw
/// output holds no timestamps, score as empty predictions and are flagged.
pub fn evaluate(
    annotations: &[CycleAnnotations],
    predictions: &[PredictionEntry],
    tolerances: &[f64],
    formula: ApFormula,
) -> Result<Report, EvalError> {
    if tolerances.is_empty() {
        return Err(EvalError::InvalidTolerance(f64::NAN));
    }
    for &d in tolerances {
        check_tolerance(d)?;
    }
    let mut seen = HashSet::new();
    for a in annotations {
        a.validate()?;
        if !seen.insert(a.video_id.as_str()) {
            return Err(EvalError::DuplicateVideo(a.video_id.clone()));
        }
    }
    let mut by_id: BTreeMap<&str, &PredictionEntry> = BTreeMap::new();
    for p in predictions {
        if let PredictionEntry::Timestamps(c) = p {
            c.validate()?;
        }
        if by_id.insert(p.video_id(), p).is_some() {
            return Err(EvalError::DuplicateVideo(p.video_id().to_string()));
        }
    }

    let mut warnings = Vec::new();
    for id in by_id.keys().filter(|id| !seen.contains(*id)) {
        warnings.push(format!("prediction for unknown video {id} ignored"));
    }

    let mut videos = Vec::with_capacity(annotations.len());
    for a in annotations {
        let (starts, missing, unparsed) = match by_id.get(a.video_id.as_str()) {
            None => {
                warnings.push(format!("no prediction for video {}; scored as empty", a.video_id));
                (Vec::new(), true, false)
            }
            Some(PredictionEntry::Timestamps(p)) => (p.starts.clone(), false, false),
            Some(PredictionEntry::Raw { text, .. }) => match parse_prediction_output(text) {
                Ok(v) => (v, false, false),
                Err(_) => {
                    warnings.push(format!("no timestamps found in output for video {}", a.video_id));
                    (Vec::new(), false, true)
                }
            },
        };
        let ap: Vec<f64> = tolerances.iter().map(|&d| formula.ap(&starts, &a.starts, d)).collect();
        let mean = ap.iter().sum::<f64>() / ap.len() as f64;
        videos.push(VideoScore {
            video_id: a.video_id.clone(),
            ap,
            mean,
            predictions: starts.len(),
            ground_truth: a.starts.len(),
            missing,
            unparsed,
        });
    }
    let map = if videos.is_empty() {
        0.0
    } else {
        videos.iter().map(|v| v.mean).sum::<f64>() / videos.len() as f64
    };
    Ok(Report {
        tolerances: tolerances.to_vec(),
        formula,
        videos,
        map,
        warnings,
    })
}

/// Dataset mAP with the default formula.
pub fn jumpscore_map(
    annotations: &[CycleAnnotations],
    predictions: &[CyclePrediction],
    tolerances: &[f64],
) -> Result<f64, EvalError> {
    let entries: Vec<PredictionEntry> = predictions.iter().cloned().map(PredictionEntry::Timestamps).collect();
    evaluate(annotations, &entries, tolerances, ApFormula::PrecisionRecall).map(|r| r.map)
}

fn read_jsonl<T: for<'de> Deserialize<'de>, R: BufRead>(r: R) -> Result<Vec<T>, EvalError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Malformed {
            line: n + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// One `{video_id, starts}` record per line.
pub fn read_annotations<R: BufRead>(r: R) -> Result<Vec<CycleAnnotations>, EvalError> {
    read_jsonl(r)
}

/// One `{video_id, starts}` or `{video_id, text}` record per line.
pub fn read_predictions<R: BufRead>(r: R) -> Result<Vec<PredictionEntry>, EvalError> {
    read_jsonl(r)
}
