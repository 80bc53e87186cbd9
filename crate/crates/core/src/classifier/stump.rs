//! Single-threshold light-condition classifier on `rawmax`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::frame::FrameError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightLabel {
    /// Too little ambient light; active mode is needed.
    Dark,
    Bright,
}

impl fmt::Display for LightLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LightLabel::Dark => "dark",
            LightLabel::Bright => "bright",
        })
    }
}

impl FromStr for LightLabel {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dark" => Ok(LightLabel::Dark),
            "bright" => Ok(LightLabel::Bright),
            other => Err(FrameError::UnknownLabel(other.to_string())),
        }
    }
}

/// A frame maximum together with the light condition it was recorded in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub rawmax: f64,
    pub label: LightLabel,
}

impl ScoredSample {
    pub fn new(rawmax: f64, label: LightLabel) -> Self {
        Self { rawmax, label }
    }
}

fn entropy(dark: usize, bright: usize) -> f64 {
    let n = (dark + bright) as f64;
    if n == 0.0 {
        return 0.0;
    }
    [dark, bright]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Information gain of splitting at `threshold` (dark side: score < threshold).
pub fn information_gain(scores: &[ScoredSample], threshold: f64) -> f64 {
    let (mut ld, mut lb, mut rd, mut rb) = (0, 0, 0, 0);
    for s in scores {
        match (s.rawmax < threshold, s.label) {
            (true, LightLabel::Dark) => ld += 1,
            (true, LightLabel::Bright) => lb += 1,
            (false, LightLabel::Dark) => rd += 1,
            (false, LightLabel::Bright) => rb += 1,
        }
    }
    let n = scores.len() as f64;
    let left = (ld + lb) as f64;
    let right = (rd + rb) as f64;
    entropy(ld + rd, lb + rb) - left / n * entropy(ld, lb) - right / n * entropy(rd, rb)
}

/// Threshold with maximal information gain among the midpoints of adjacent
/// distinct scores. Equal gains resolve to the lowest midpoint.
pub fn train_stump(scores: &[ScoredSample]) -> Result<f64, ClassifierError> {
    let has = |l| scores.iter().any(|s| s.label == l);
    if !has(LightLabel::Dark) || !has(LightLabel::Bright) {
        return Err(ClassifierError::SingleClass);
    }
    let mut values: Vec<f64> = scores.iter().map(|s| s.rawmax).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    if values.len() < 2 {
        return Err(ClassifierError::Unsplittable);
    }

    let n = scores.len();
    let total_dark = scores
        .iter()
        .filter(|s| s.label == LightLabel::Dark)
        .count();
    let parent = entropy(total_dark, n - total_dark);
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.rawmax.total_cmp(&b.rawmax));

    // single pass: left side grows one distinct value at a time
    let (mut ld, mut lb) = (0usize, 0usize);
    let mut idx = 0;
    let mut best: Option<(f64, f64)> = None;
    for w in values.windows(2) {
        while idx < n && sorted[idx].rawmax <= w[0] {
            match sorted[idx].label {
                LightLabel::Dark => ld += 1,
                LightLabel::Bright => lb += 1,
            }
            idx += 1;
        }
        let (rd, rb) = (total_dark - ld, n - total_dark - lb);
        let gain = parent
            - (ld + lb) as f64 / n as f64 * entropy(ld, lb)
            - (rd + rb) as f64 / n as f64 * entropy(rd, rb);
        let mid = 0.5 * (w[0] + w[1]);
        if best.is_none_or(|(g, _)| gain > g + 1e-12) {
            best = Some((gain, mid));
        }
    }
    Ok(best.expect("at least one midpoint").1)
}
