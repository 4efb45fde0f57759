use serde::{Deserialize, Serialize};

/// Seconds to whole microseconds, rounded to nearest.
pub fn to_micros(seconds: f64) -> i64 {
    (seconds * 1e6).round() as i64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `(prediction index, ground-truth index)`, in matching order.
    pub pairs: Vec<(usize, usize)>,
}

impl MatchResult {
    pub fn precision(&self) -> f64 {
        let n = self.tp + self.fp;
        if n == 0 {
            if self.fn_ == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.tp as f64 / n as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let n = self.tp + self.fn_;
        if n == 0 {
            1.0
        } else {
            self.tp as f64 / n as f64
        }
    }
}

/// Walk the predictions in time order; each takes the nearest unmatched
/// ground-truth start within `delta` (the earlier one on a tie).
pub fn greedy_match(pred: &[f64], gt: &[f64], delta: f64) -> MatchResult {
    let tol = to_micros(delta);
    let gt_us: Vec<i64> = gt.iter().map(|&t| to_micros(t)).collect();
    let mut order: Vec<(i64, usize)> = pred.iter().enumerate().map(|(k, &t)| (to_micros(t), k)).collect();
    order.sort_unstable();

    let mut used = vec![false; gt.len()];
    let mut pairs = Vec::new();
    for (p, k) in order {
        // Candidates lie in [p - tol, p + tol]; gt is sorted.
        let lo = gt_us.partition_point(|&g| g < p - tol);
        let hi = gt_us.partition_point(|&g| g <= p + tol);
        let best = (lo..hi)
            .filter(|&j| !used[j])
            .min_by_key(|&j| ((gt_us[j] - p).abs(), j));
        if let Some(j) = best {
            used[j] = true;
            pairs.push((k, j));
        }
    }
    let tp = pairs.len();
    MatchResult {
        tp,
        fp: pred.len() - tp,
        fn_: gt.len() - tp,
        pairs,
    }
}
