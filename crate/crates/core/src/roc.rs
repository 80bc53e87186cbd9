//! ROC analysis of the `rawmax` light-condition threshold.
//!
//! Dark is the positive class. A threshold `t` labels a score dark iff
//! `score < t`, so raising `t` can only move samples from bright to dark.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{LightLabel, ScoredSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RocError {
    #[error("one class has no samples (tp+fn and tn+fp must both be positive)")]
    EmptyClass,
    #[error("scores contain only one light label")]
    SingleClass,
    #[error("sweep step must be positive and the range non-empty")]
    InvalidRange,
    #[error("curve is empty")]
    EmptyCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
}

pub fn confusion_metrics(tp: u64, fn_: u64, fp: u64, tn: u64) -> Result<Metrics, RocError> {
    if tp + fn_ == 0 || tn + fp == 0 {
        return Err(RocError::EmptyClass);
    }
    Ok(Metrics {
        sensitivity: tp as f64 / (tp + fn_) as f64,
        specificity: tn as f64 / (tn + fp) as f64,
        accuracy: (tp + tn) as f64 / (tp + fn_ + fp + tn) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
    pub sensitivity: f64,
    pub specificity: f64,
}

impl RocPoint {
    pub fn from_counts(
        threshold: f64,
        tp: u64,
        fn_: u64,
        fp: u64,
        tn: u64,
    ) -> Result<Self, RocError> {
        let m = confusion_metrics(tp, fn_, fp, tn)?;
        Ok(Self {
            threshold,
            tp,
            fn_,
            fp,
            tn,
            sensitivity: m.sensitivity,
            specificity: m.specificity,
        })
    }

    /// Distance to the perfect classifier at (fpr 0, tpr 1).
    pub fn distance(&self) -> f64 {
        (1.0 - self.specificity).hypot(1.0 - self.sensitivity)
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / (self.tp + self.fn_ + self.fp + self.tn) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub t_lo: f64,
    pub t_hi: f64,
    pub step: f64,
}

impl Default for SweepRange {
    fn default() -> Self {
        Self {
            t_lo: 0.0,
            t_hi: 3.8,
            step: 0.01,
        }
    }
}

impl SweepRange {
    /// Grid thresholds `t_lo + i*step`, endpoint included up to rounding.
    pub fn thresholds(&self) -> Result<Vec<f64>, RocError> {
        if !(self.step > 0.0) || !(self.t_hi >= self.t_lo) {
            return Err(RocError::InvalidRange);
        }
        let n = ((self.t_hi - self.t_lo) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.t_lo + i as f64 * self.step).collect())
    }
}

/// Confusion counts at every grid threshold, in threshold order.
pub fn roc_sweep(scores: &[ScoredSample], range: SweepRange) -> Result<Vec<RocPoint>, RocError> {
    let mut dark: Vec<f64> = scores
        .iter()
        .filter(|s| s.label == LightLabel::Dark)
        .map(|s| s.rawmax)
        .collect();
    let mut bright: Vec<f64> = scores
        .iter()
        .filter(|s| s.label == LightLabel::Bright)
        .map(|s| s.rawmax)
        .collect();
    if dark.is_empty() || bright.is_empty() {
        return Err(RocError::SingleClass);
    }
    dark.sort_by(f64::total_cmp);
    bright.sort_by(f64::total_cmp);
    let below = |v: &[f64], t: f64| v.partition_point(|&x| x < t) as u64;
    let (nd, nb) = (dark.len() as u64, bright.len() as u64);
    range
        .thresholds()?
        .into_iter()
        .map(|t| {
            let tp = below(&dark, t);
            let fp = below(&bright, t);
            RocPoint::from_counts(t, tp, nd - tp, fp, nb - fp)
        })
        .collect()
}

/// Point closest to the perfect corner; equal distances keep the lower threshold.
pub fn optimal_point(curve: &[RocPoint]) -> Result<RocPoint, RocError> {
    let mut best: Option<&RocPoint> = None;
    for p in curve {
        match best {
            Some(b) if p.distance() > b.distance() => {}
            Some(b) if p.distance() == b.distance() && p.threshold >= b.threshold => {}
            _ => best = Some(p),
        }
    }
    best.copied().ok_or(RocError::EmptyCurve)
}

pub const ROC_CSV_VERSION: &str = "# optogest-roc v1";

pub fn write_curve_csv<W: Write>(curve: &[RocPoint], out: W) -> Result<(), csv::Error> {
    let mut out = out;
    writeln!(out, "{ROC_CSV_VERSION}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "threshold",
        "tp",
        "fn",
        "fp",
        "tn",
        "sensitivity",
        "specificity",
    ])?;
    for p in curve {
        w.write_record([
            format!("{:.2}", p.threshold),
            p.tp.to_string(),
            p.fn_.to_string(),
            p.fp.to_string(),
            p.tn.to_string(),
            format!("{:.6}", p.sensitivity),
            format!("{:.6}", p.specificity),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use LightLabel::{Bright, Dark};

    fn brute(scores: &[ScoredSample], t: f64) -> (u64, u64, u64, u64) {
        let (mut tp, mut fn_, mut fp, mut tn) = (0, 0, 0, 0);
        for s in scores {
            match (s.rawmax < t, s.label) {
                (true, Dark) => tp += 1,
                (false, Dark) => fn_ += 1,
                (true, Bright) => fp += 1,
                (false, Bright) => tn += 1,
            }
        }
        (tp, fn_, fp, tn)
    }

    fn random_scores(seed: u64, n: usize) -> Vec<ScoredSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = if i % 3 == 0 { Bright } else { Dark };
                let v: f64 = match label {
                    Dark => rng.random_range(0.0..1.5),
                    Bright => rng.random_range(0.4..3.8),
                };
                // round some scores onto the grid to exercise equality
                let v = if i % 5 == 0 {
                    (v * 100.0).round() / 100.0
                } else {
                    v
                };
                ScoredSample::new(v, label)
            })
            .collect()
    }

    #[test]
    fn table_three_metrics() {
        let m = confusion_metrics(127, 24, 21, 154).unwrap();
        assert_eq!(format!("{:.2}", m.sensitivity * 100.0), "84.11");
        assert_eq!(format!("{:.2}", m.specificity * 100.0), "88.00");
        assert_eq!(format!("{:.2}", m.accuracy * 100.0), "86.20");
        let perfect = confusion_metrics(5, 0, 0, 7).unwrap();
        assert_eq!(
            (perfect.sensitivity, perfect.specificity, perfect.accuracy),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(confusion_metrics(0, 0, 1, 1), Err(RocError::EmptyClass));
        assert_eq!(confusion_metrics(1, 1, 0, 0), Err(RocError::EmptyClass));
    }

    #[test]
    fn table_three_point_distance() {
        let p = RocPoint::from_counts(0.6, 127, 24, 21, 154).unwrap();
        // 0.199153..., quoted to four places as 0.1991
        assert!((p.distance() - 0.1991).abs() < 1e-4);
        assert_eq!(optimal_point(&[p]).unwrap(), p);
        assert_eq!(optimal_point(&[]), Err(RocError::EmptyCurve));
    }

    #[test]
    fn sweep_has_381_points_and_matches_brute_force() {
        let scores = random_scores(1, 100);
        let curve = roc_sweep(&scores, SweepRange::default()).unwrap();
        assert_eq!(curve.len(), 381);
        assert!((curve[380].threshold - 3.8).abs() < 1e-9);
        for p in &curve {
            assert_eq!((p.tp, p.fn_, p.fp, p.tn), brute(&scores, p.threshold));
        }
        for w in curve.windows(2) {
            assert!(w[1].sensitivity >= w[0].sensitivity);
            assert!(w[1].specificity <= w[0].specificity);
        }
    }

    #[test]
    fn separable_scores_reach_the_corner() {
        let scores: Vec<_> = [0.1, 0.2, 0.3]
            .iter()
            .map(|&v| ScoredSample::new(v, Dark))
            .chain([1.0, 2.0].iter().map(|&v| ScoredSample::new(v, Bright)))
            .collect();
        let curve = roc_sweep(&scores, SweepRange::default()).unwrap();
        let best = optimal_point(&curve).unwrap();
        assert_eq!(best.distance(), 0.0);
        // lowest perfect threshold is the first grid value above 0.3
        assert!((best.threshold - 0.31).abs() < 1e-9);
    }

    #[test]
    fn constructed_optimum_at_060() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut scores = Vec::new();
        for _ in 0..200 {
            scores.push(ScoredSample::new(rng.random_range(0.0..0.595), Dark));
            scores.push(ScoredSample::new(rng.random_range(0.6..3.8), Bright));
        }
        // a few overlapping samples so the optimum is not trivially wide
        scores.push(ScoredSample::new(0.7, Dark));
        scores.push(ScoredSample::new(0.5, Bright));
        let best = optimal_point(&roc_sweep(&scores, SweepRange::default()).unwrap()).unwrap();
        assert!(
            (best.threshold - 0.60).abs() <= 0.01 + 1e-9,
            "{}",
            best.threshold
        );
    }

    #[test]
    fn single_class_and_bad_range() {
        let scores = [ScoredSample::new(0.1, Dark)];
        assert_eq!(
            roc_sweep(&scores, SweepRange::default()),
            Err(RocError::SingleClass)
        );
        let both = [ScoredSample::new(0.1, Dark), ScoredSample::new(1.0, Bright)];
        let r = SweepRange {
            step: 0.0,
            ..Default::default()
        };
        assert_eq!(roc_sweep(&both, r), Err(RocError::InvalidRange));
    }

    #[test]
    fn fine_grid_agrees_with_midpoint_oracle() {
        let scores: Vec<_> = random_scores(3, 60)
            .into_iter()
            .map(|s| ScoredSample::new((s.rawmax * 20.0).round() / 20.0, s.label))
            .collect();
        let curve = roc_sweep(&scores, SweepRange::default()).unwrap();
        let mut values: Vec<f64> = scores.iter().map(|s| s.rawmax).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        // every distinct midpoint's counts appear on the grid curve
        for w in values.windows(2) {
            let want = brute(&scores, 0.5 * (w[0] + w[1]));
            assert!(curve.iter().any(|p| (p.tp, p.fn_, p.fp, p.tn) == want));
        }
    }

    #[test]
    fn csv_export() {
        let scores = random_scores(2, 20);
        let curve = roc_sweep(&scores, SweepRange::default()).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&curve, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], ROC_CSV_VERSION);
        assert_eq!(lines[1], "threshold,tp,fn,fp,tn,sensitivity,specificity");
        assert_eq!(lines.len(), 2 + 381);
        assert!(lines[2].starts_with("0.00,0,"));
    }

    proptest! {
        #[test]
        fn optimum_is_no_worse_than_any_point(seed in 0u64..500, n in 4usize..60) {
            let curve = roc_sweep(&random_scores(seed, n), SweepRange::default()).unwrap();
            let best = optimal_point(&curve).unwrap();
            let supports = (best.tp + best.fn_, best.fp + best.tn);
            for p in &curve {
                prop_assert!(best.distance() <= p.distance());
                prop_assert_eq!((p.tp + p.fn_, p.fp + p.tn), supports);
            }
        }
    }
}
