//! Scalar features of a normalized pattern.
//!
//! Widths, center of gravity, slope and the spatial moments treat the pattern
//! as a function of lateral photodiode position (cm). The amplitude statistics
//! (`mean`, `sd`, `max`, `min`, `diff`) and the two counts work on the bare
//! 8 values. `rawmax` is the only feature taken from before normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{NormalizedFrame, SensorGeometry, PD_COUNT};

/// Variance below which a pattern is treated as concentrated on one point.
const MIN_SPATIAL_VARIANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FeatureError {
    #[error("pattern carries no signal (all values zero)")]
    NoSignal,
    #[error("pattern has zero spread, higher moments are undefined")]
    DegenerateDistribution,
    #[error("width fraction must lie in (0, 1)")]
    InvalidFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureName {
    Fw15,
    Fw50,
    Fw85,
    Cog,
    Mean,
    Sd,
    Max,
    Min,
    Diff,
    SlopeAngle,
    Skewness,
    Kurtosis,
    NBelow2Sd,
    NAboveMean,
    Rawmax,
}

impl FeatureName {
    pub const ALL: [FeatureName; 15] = [
        FeatureName::Fw15,
        FeatureName::Fw50,
        FeatureName::Fw85,
        FeatureName::Cog,
        FeatureName::Mean,
        FeatureName::Sd,
        FeatureName::Max,
        FeatureName::Min,
        FeatureName::Diff,
        FeatureName::SlopeAngle,
        FeatureName::Skewness,
        FeatureName::Kurtosis,
        FeatureName::NBelow2Sd,
        FeatureName::NAboveMean,
        FeatureName::Rawmax,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureName::Fw15 => "fw15",
            FeatureName::Fw50 => "fw50",
            FeatureName::Fw85 => "fw85",
            FeatureName::Cog => "cog",
            FeatureName::Mean => "mean",
            FeatureName::Sd => "sd",
            FeatureName::Max => "max",
            FeatureName::Min => "min",
            FeatureName::Diff => "diff",
            FeatureName::SlopeAngle => "slope_angle",
            FeatureName::Skewness => "skewness",
            FeatureName::Kurtosis => "kurtosis",
            FeatureName::NBelow2Sd => "n_below_2sd",
            FeatureName::NAboveMean => "n_above_mean",
            FeatureName::Rawmax => "rawmax",
        }
    }
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown feature `{s}`"))
    }
}

/// Named feature subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSetId {
    /// The nine features used by the active-mode pose network.
    ActiveNine,
    /// The nine features used by the passive-mode pose network.
    PassiveNine,
    /// Every feature this module can compute.
    All,
}

impl FeatureSetId {
    pub fn names(self) -> &'static [FeatureName] {
        use FeatureName::*;
        match self {
            FeatureSetId::ActiveNine => &[
                Fw50, Fw85, Cog, Mean, SlopeAngle, Sd, Kurtosis, NBelow2Sd, NAboveMean,
            ],
            FeatureSetId::PassiveNine => &[
                Fw15, Fw85, Cog, Mean, SlopeAngle, Skewness, Kurtosis, NBelow2Sd, Rawmax,
            ],
            FeatureSetId::All => &FeatureName::ALL,
        }
    }
}

/// How skewness and kurtosis are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMode {
    /// Pattern as a distribution over photodiode positions.
    #[default]
    Weighted,
    /// Plain sample moments of the 8 values.
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    pub moments: MomentMode,
}

/// Ordered list of named feature values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    entries: Vec<(FeatureName, f64)>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (FeatureName, f64)>) -> Self {
        let mut v = Self::new();
        for (n, x) in pairs {
            v.set(n, x);
        }
        v
    }

    pub fn set(&mut self, name: FeatureName, value: f64) {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((name, value)),
        }
    }

    pub fn get(&self, name: FeatureName) -> Option<f64> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, v)| v)
    }

    pub fn contains(&self, name: FeatureName) -> bool {
        self.get(name).is_some()
    }

    pub fn names(&self) -> impl Iterator<Item = FeatureName> + '_ {
        self.entries.iter().map(|&(n, _)| n)
    }

    pub fn entries(&self) -> &[(FeatureName, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Values in the order of `names`, or `None` if any is missing.
    pub fn gather(&self, names: &[FeatureName]) -> Option<Vec<f64>> {
        names.iter().map(|&n| self.get(n)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasicStats {
    pub mean: f64,
    /// Population standard deviation (divide by n).
    pub sd: f64,
    pub max: f64,
    pub min: f64,
    pub diff: f64,
}

pub fn basic_stats(values: &[f64]) -> BasicStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    // offsets from the first value keep a constant frame at exactly zero
    let origin = values.first().copied().unwrap_or(0.0);
    let shifted_mean = values.iter().map(|v| v - origin).sum::<f64>() / n;
    let var = values
        .iter()
        .map(|v| (v - origin - shifted_mean).powi(2))
        .sum::<f64>()
        / n;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    BasicStats {
        mean,
        sd: var.sqrt(),
        max,
        min,
        diff: max - min,
    }
}

/// Population standard deviation.
pub fn population_sd(values: &[f64]) -> f64 {
    basic_stats(values).sd
}

/// Intensity-weighted mean position of the pattern, cm.
pub fn cog(pattern: &NormalizedFrame, geometry: &SensorGeometry) -> Result<f64, FeatureError> {
    let total: f64 = pattern.values.iter().sum();
    if total <= 0.0 {
        return Err(FeatureError::NoSignal);
    }
    let x = geometry.pd_positions();
    let moment: f64 = x.iter().zip(&pattern.values).map(|(x, v)| x * v).sum();
    Ok(moment / total)
}

/// Full width of the pattern at `fraction` of its maximum, cm.
///
/// Uses the outermost photodiodes at or above the level and interpolates
/// linearly towards their outer neighbours. A side that is still above the
/// level at the edge of the array is clamped to the edge position.
pub fn full_width_at(
    pattern: &NormalizedFrame,
    fraction: f64,
    geometry: &SensorGeometry,
) -> Result<f64, FeatureError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(FeatureError::InvalidFraction);
    }
    let v = &pattern.values;
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(FeatureError::NoSignal);
    }
    let level = fraction * max;
    let x = geometry.pd_positions();
    let first = v
        .iter()
        .position(|&y| y >= level)
        .expect("max is above level");
    let last = v
        .iter()
        .rposition(|&y| y >= level)
        .expect("max is above level");

    let left = if first == 0 {
        x[0]
    } else {
        let (lo, hi) = (v[first - 1], v[first]);
        x[first - 1] + (level - lo) / (hi - lo) * (x[first] - x[first - 1])
    };
    let right = if last == PD_COUNT - 1 {
        x[PD_COUNT - 1]
    } else {
        let (hi, lo) = (v[last], v[last + 1]);
        x[last] + (hi - level) / (hi - lo) * (x[last + 1] - x[last])
    };
    Ok(right - left)
}

/// Angle of the least-squares line through (position, value), degrees.
pub fn slope_angle(pattern: &NormalizedFrame, geometry: &SensorGeometry) -> f64 {
    let x = geometry.pd_positions();
    let n = PD_COUNT as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = pattern.values.iter().sum::<f64>() / n;
    let sxy: f64 = x
        .iter()
        .zip(&pattern.values)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let sxx: f64 = x.iter().map(|x| (x - mx).powi(2)).sum();
    (sxy / sxx).atan().to_degrees()
}

/// Skewness and (non-excess) kurtosis of the pattern read as a distribution
/// over photodiode positions.
pub fn weighted_moments(
    pattern: &NormalizedFrame,
    geometry: &SensorGeometry,
) -> Result<(f64, f64), FeatureError> {
    let total: f64 = pattern.values.iter().sum();
    if total <= 0.0 {
        return Err(FeatureError::NoSignal);
    }
    let x = geometry.pd_positions();
    let w = pattern.values.map(|v| v / total);
    let mu: f64 = x.iter().zip(&w).map(|(x, w)| x * w).sum();
    let central = |k: i32| -> f64 { x.iter().zip(&w).map(|(x, w)| w * (x - mu).powi(k)).sum() };
    standardized(central(2), central(3), central(4))
}

/// Skewness and kurtosis of the 8 values themselves.
pub fn unweighted_moments(values: &[f64]) -> Result<(f64, f64), FeatureError> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let central = |k: i32| -> f64 { values.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n };
    standardized(central(2), central(3), central(4))
}

fn standardized(m2: f64, m3: f64, m4: f64) -> Result<(f64, f64), FeatureError> {
    if m2 <= MIN_SPATIAL_VARIANCE {
        return Err(FeatureError::DegenerateDistribution);
    }
    Ok((m3 / m2.powf(1.5), m4 / (m2 * m2)))
}

/// `(count(v < 2 sd), count(v > mean))`, strict inequalities.
pub fn count_features(values: &[f64]) -> (usize, usize) {
    let s = basic_stats(values);
    let below = values.iter().filter(|&&v| v < 2.0 * s.sd).count();
    let above = values.iter().filter(|&&v| v > s.mean).count();
    (below, above)
}

/// Computes exactly the requested features, in the requested order.
pub fn extract_named(
    pattern: &NormalizedFrame,
    names: &[FeatureName],
    geometry: &SensorGeometry,
    options: FeatureOptions,
) -> Result<FeatureVector, FeatureError> {
    let stats = basic_stats(&pattern.values);
    let mut moments: Option<(f64, f64)> = None;
    let mut moments_of = |p: &NormalizedFrame| -> Result<(f64, f64), FeatureError> {
        if let Some(m) = moments {
            return Ok(m);
        }
        let m = match options.moments {
            MomentMode::Weighted => weighted_moments(p, geometry)?,
            MomentMode::Unweighted => unweighted_moments(&p.values)?,
        };
        moments = Some(m);
        Ok(m)
    };

    let mut out = FeatureVector::new();
    for &name in names {
        let value = match name {
            FeatureName::Fw15 => full_width_at(pattern, 0.15, geometry)?,
            FeatureName::Fw50 => full_width_at(pattern, 0.50, geometry)?,
            FeatureName::Fw85 => full_width_at(pattern, 0.85, geometry)?,
            FeatureName::Cog => cog(pattern, geometry)?,
            FeatureName::Mean => stats.mean,
            FeatureName::Sd => stats.sd,
            FeatureName::Max => stats.max,
            FeatureName::Min => stats.min,
            FeatureName::Diff => stats.diff,
            FeatureName::SlopeAngle => slope_angle(pattern, geometry),
            FeatureName::Skewness => moments_of(pattern)?.0,
            FeatureName::Kurtosis => moments_of(pattern)?.1,
            FeatureName::NBelow2Sd => count_features(&pattern.values).0 as f64,
            FeatureName::NAboveMean => count_features(&pattern.values).1 as f64,
            FeatureName::Rawmax => pattern.rawmax,
        };
        out.set(name, value);
    }
    Ok(out)
}

pub fn extract(
    pattern: &NormalizedFrame,
    set: FeatureSetId,
    geometry: &SensorGeometry,
    options: FeatureOptions,
) -> Result<FeatureVector, FeatureError> {
    extract_named(pattern, set.names(), geometry, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Mode;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn pat(v: [f64; 8]) -> NormalizedFrame {
        NormalizedFrame::from_values(v, 0.0, Mode::Passive)
    }

    fn geom() -> SensorGeometry {
        SensorGeometry::default()
    }

    #[test]
    fn basic_stats_examples() {
        let s = basic_stats(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.0]);
        assert!((s.mean - 1.25).abs() < TOL);
        // var = 16/8 - 1.25^2 = 0.4375
        assert!((s.sd - 0.4375f64.sqrt()).abs() < TOL);
        assert!((s.sd - 0.6614).abs() < 1e-4);
        assert!((s.diff - 2.0).abs() < TOL);

        let s = basic_stats(&[0.7; 8]);
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.diff, 0.0);

        let s = basic_stats(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.8]);
        assert_eq!((s.max, s.min, s.diff), (3.8, 0.0, 3.8));
    }

    #[test]
    fn cog_examples() {
        let g = geom();
        assert!(
            cog(&pat([0., 0., 1., 2., 2., 1., 0., 0.]), &g)
                .unwrap()
                .abs()
                < TOL
        );
        assert!((cog(&pat([0., 0., 0., 0., 1., 1., 0., 0.]), &g).unwrap() - 1.0).abs() < TOL);
        assert_eq!(cog(&pat([0.0; 8]), &g), Err(FeatureError::NoSignal));
    }

    #[test]
    fn width_examples() {
        let g = geom();
        let p = pat([0., 0., 1., 2., 1., 0., 0., 0.]);
        // crossings at -1.5 and +0.5
        assert!((full_width_at(&p, 0.5, &g).unwrap() - 2.0).abs() < TOL);
        // level 1.7: crossings at -0.8 and -0.2
        assert!((full_width_at(&p, 0.85, &g).unwrap() - 0.6).abs() < TOL);
        assert!((full_width_at(&pat([0.4; 8]), 0.5, &g).unwrap() - 7.0).abs() < TOL);
        assert_eq!(
            full_width_at(&pat([0.0; 8]), 0.5, &g),
            Err(FeatureError::NoSignal)
        );
        assert_eq!(
            full_width_at(&p, 1.0, &g),
            Err(FeatureError::InvalidFraction)
        );
    }

    #[test]
    fn width_clamps_one_side() {
        let g = geom();
        let p = pat([2., 2., 1., 0., 0., 0., 0., 0.]);
        // left clamps at -3.5, right crossing at level 1.0 is exactly PD 2 (-1.5)
        assert!((full_width_at(&p, 0.5, &g).unwrap() - 2.0).abs() < TOL);
    }

    #[test]
    fn slope_examples() {
        let g = geom();
        assert!(slope_angle(&pat([0.3; 8]), &g).abs() < TOL);
        let ramp = g.pd_positions().map(|x| x + 3.5);
        assert!((slope_angle(&pat(ramp), &g) - 45.0).abs() < TOL);
        let mut mirrored = ramp;
        mirrored.reverse();
        assert!((slope_angle(&pat(mirrored), &g) + 45.0).abs() < TOL);
    }

    #[test]
    fn moment_examples() {
        let g = geom();
        let (skew, _) = weighted_moments(&pat([0., 1., 2., 3., 3., 2., 1., 0.]), &g).unwrap();
        assert!(skew.abs() < TOL);
        // equal weights at -1.5 and +1.5: m4 / m2^2 = 1
        let (skew, kurt) = weighted_moments(&pat([0., 0., 1., 0., 0., 1., 0., 0.]), &g).unwrap();
        assert!(skew.abs() < TOL);
        assert!((kurt - 1.0).abs() < TOL);
        assert_eq!(
            weighted_moments(&pat([0., 0., 0., 2., 0., 0., 0., 0.]), &g),
            Err(FeatureError::DegenerateDistribution)
        );
        assert_eq!(
            weighted_moments(&pat([0.0; 8]), &g),
            Err(FeatureError::NoSignal)
        );
    }

    #[test]
    fn unweighted_moments_two_point() {
        // four zeros and four ones: symmetric two-point distribution
        let (skew, kurt) = unweighted_moments(&[0., 1., 0., 1., 0., 1., 0., 1.]).unwrap();
        assert!(skew.abs() < TOL);
        assert!((kurt - 1.0).abs() < TOL);
        assert!(unweighted_moments(&[1.0; 8]).is_err());
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_features(&[0.5; 8]), (0, 0));
        // mean 0.5, population sd sqrt(0.5) = 0.7071, 2 sd = 1.414
        let v = [0., 0., 1., 2., 1., 0., 0., 0.];
        assert!((population_sd(&v) - 0.5f64.sqrt()).abs() < TOL);
        assert_eq!(count_features(&v), (7, 3));
        let (_, above) = count_features(&[0., 0., 0., 0., 0., 0., 0., 3.8]);
        assert_eq!(above, 1);
    }

    #[test]
    fn extract_passive_nine() {
        let g = geom();
        let p =
            NormalizedFrame::from_values([0., 0., 0.5, 1.2, 0.5, 0., 0., 0.], 3.0, Mode::Passive);
        let f = extract(&p, FeatureSetId::PassiveNine, &g, FeatureOptions::default()).unwrap();
        assert_eq!(f.len(), 9);
        // (-1.5*0.5 - 0.5*1.2 + 0.5*0.5) / 2.2 = -0.5
        assert!((f.get(FeatureName::Cog).unwrap() + 0.5).abs() < TOL);
        assert_eq!(f.get(FeatureName::Rawmax), Some(3.0));
        assert!(!f.contains(FeatureName::Sd));
        let names: Vec<_> = f.names().collect();
        assert_eq!(names, FeatureSetId::PassiveNine.names());
    }

    #[test]
    fn extract_active_nine_membership() {
        let g = geom();
        let p = pat([0., 0., 1., 2., 2., 1., 0., 0.]);
        let f = extract(&p, FeatureSetId::ActiveNine, &g, FeatureOptions::default()).unwrap();
        assert!(f.contains(FeatureName::Sd));
        assert!(!f.contains(FeatureName::Skewness));
        assert!(!f.contains(FeatureName::Rawmax));
        assert_eq!(
            extract(
                &pat([0.0; 8]),
                FeatureSetId::ActiveNine,
                &g,
                FeatureOptions::default()
            ),
            Err(FeatureError::NoSignal)
        );
    }

    #[test]
    fn extract_unweighted_option() {
        let g = geom();
        let p = pat([0., 0., 1., 3., 1., 0., 0., 0.]);
        let opts = FeatureOptions {
            moments: MomentMode::Unweighted,
        };
        let f = extract_named(&p, &[FeatureName::Kurtosis], &g, opts).unwrap();
        let (_, k) = unweighted_moments(&p.values).unwrap();
        assert_eq!(f.get(FeatureName::Kurtosis), Some(k));
    }

    #[test]
    fn feature_names_parse() {
        for n in FeatureName::ALL {
            assert_eq!(n.as_str().parse::<FeatureName>().unwrap(), n);
        }
    }

    /// Non-degenerate pattern: at least two positive entries and a zero min.
    fn pattern_values() -> impl Strategy<Value = [f64; 8]> {
        prop::array::uniform8(0.0f64..3.0).prop_filter_map("needs spread", |mut v| {
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            v.iter_mut().for_each(|x| *x -= min);
            let positive = v.iter().filter(|&&x| x > 1e-3).count();
            (positive >= 2).then_some(v)
        })
    }

    proptest! {
        #[test]
        fn cog_stays_on_the_array(v in pattern_values()) {
            let c = cog(&pat(v), &geom()).unwrap();
            prop_assert!((-3.5..=3.5).contains(&c));
        }

        #[test]
        fn width_is_monotone_in_fraction(v in pattern_values(), a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let g = geom();
            let w_lo = full_width_at(&pat(v), lo, &g).unwrap();
            let w_hi = full_width_at(&pat(v), hi, &g).unwrap();
            prop_assert!(w_hi <= w_lo + 1e-9);
            prop_assert!(w_lo >= 0.0 && w_lo <= 7.0 + 1e-9);
        }

        #[test]
        fn mirroring(v in pattern_values()) {
            let g = geom();
            let mut m = v;
            m.reverse();
            let (p, q) = (pat(v), pat(m));
            prop_assert!((cog(&p, &g).unwrap() + cog(&q, &g).unwrap()).abs() < 1e-9);
            let (s1, k1) = weighted_moments(&p, &g).unwrap();
            let (s2, k2) = weighted_moments(&q, &g).unwrap();
            prop_assert!((s1 + s2).abs() < 1e-6);
            prop_assert!((k1 - k2).abs() < 1e-6 * k1.abs().max(1.0));
            for f in [0.15, 0.5, 0.85] {
                let a = full_width_at(&p, f, &g).unwrap();
                let b = full_width_at(&q, f, &g).unwrap();
                prop_assert!((a - b).abs() < 1e-9);
            }
            prop_assert!((population_sd(&v) - population_sd(&m)).abs() < 1e-12);
        }

        #[test]
        fn scale_invariance(v in pattern_values(), s in 0.1f64..5.0) {
            let g = geom();
            let scaled = v.map(|x| x * s);
            let names = [
                FeatureName::Cog, FeatureName::Fw15, FeatureName::Fw50, FeatureName::Fw85,
                FeatureName::Skewness, FeatureName::Kurtosis,
                FeatureName::NBelow2Sd, FeatureName::NAboveMean,
            ];
            let a = extract_named(&pat(v), &names, &g, FeatureOptions::default()).unwrap();
            let b = extract_named(&pat(scaled), &names, &g, FeatureOptions::default()).unwrap();
            for n in names {
                let (x, y) = (a.get(n).unwrap(), b.get(n).unwrap());
                prop_assert!((x - y).abs() < 1e-6 * x.abs().max(1.0), "{n}: {x} vs {y}");
            }
        }

        #[test]
        fn counts_bounded_and_diff_consistent(v in pattern_values()) {
            let (below, above) = count_features(&v);
            prop_assert!(below <= 8 && above <= 8);
            let s = basic_stats(&v);
            prop_assert!((s.diff - (s.max - s.min)).abs() < 1e-12);
        }
    }
}
