//! Core value types shared by the whole pipeline: sensor geometry, raw and
//! normalized data frames, operating modes and pose classes.
//!
//! A data frame is one 40 Hz sampling cycle of the 8 photodiodes. Lateral
//! positions are measured from the sensor center, so a centered pattern has
//! a center of gravity of 0 cm.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of photodiodes on the linear array.
pub const PD_COUNT: usize = 8;

/// Physical layout and electrical limits of the photodiode array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorGeometry {
    /// Distance between neighbouring photodiodes, cm.
    pub pitch_cm: f64,
    /// Half of the collimated field of view, degrees.
    pub fov_half_angle_deg: f64,
    /// Output voltage at which the photodiodes saturate, V.
    pub v_saturation: f64,
    /// Illuminance of the calibration anchor, lux.
    pub lux_anchor: f64,
    /// Voltage read at the calibration anchor (half of saturation), V.
    pub lux_anchor_volts: f64,
    /// Battery supply voltage, V.
    pub supply_voltage: f64,
}

impl Default for SensorGeometry {
    fn default() -> Self {
        Self {
            pitch_cm: 1.0,
            fov_half_angle_deg: 30.0,
            v_saturation: 3.8,
            lux_anchor: 592.0,
            lux_anchor_volts: 1.9,
            supply_voltage: 5.0,
        }
    }
}

impl SensorGeometry {
    /// Lateral photodiode coordinates in cm, centered on the array.
    pub fn pd_positions(&self) -> [f64; PD_COUNT] {
        let center = (PD_COUNT as f64 - 1.0) / 2.0;
        std::array::from_fn(|i| (i as f64 - center) * self.pitch_cm)
    }

    /// Distance between the two outermost photodiodes, cm.
    pub fn span_cm(&self) -> f64 {
        (PD_COUNT as f64 - 1.0) * self.pitch_cm
    }

    pub fn check(&self) -> Result<(), FrameError> {
        let ok = self.pitch_cm > 0.0
            && self.fov_half_angle_deg > 0.0
            && self.fov_half_angle_deg < 90.0
            && self.v_saturation > 0.0
            && self.lux_anchor > 0.0
            && (self.lux_anchor_volts - self.v_saturation / 2.0).abs() < 1e-12
            && self.supply_voltage > 0.0;
        if ok {
            Ok(())
        } else {
            Err(FrameError::InvalidGeometry)
        }
    }
}

/// Free function form of [`SensorGeometry::pd_positions`].
pub fn pd_positions(geometry: &SensorGeometry) -> [f64; PD_COUNT] {
    geometry.pd_positions()
}

/// Operating mode a frame was sampled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// LEDs on, the pattern is light reflected off the hand.
    Active,
    /// Ambient light only, the pattern is the hand's shadow.
    Passive,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Active => "active",
            Mode::Passive => "passive",
        })
    }
}

impl FromStr for Mode {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "active" => Ok(Mode::Active),
            "passive" => Ok(Mode::Passive),
            other => Err(FrameError::UnknownLabel(other.to_string())),
        }
    }
}

/// Hand pose classes, ordered by the width of the finger plane.
///
/// The derived ordering is also the tie-break order used by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PoseClass {
    /// One finger separated (1FS).
    #[serde(rename = "1FS")]
    OneFingerSeparated,
    /// Two fingers joined (2FJ).
    #[serde(rename = "2FJ")]
    TwoFingersJoined,
    /// Four fingers joined (4FJ).
    #[serde(rename = "4FJ")]
    FourFingersJoined,
}

impl PoseClass {
    pub const ALL: [PoseClass; 3] = [
        PoseClass::OneFingerSeparated,
        PoseClass::TwoFingersJoined,
        PoseClass::FourFingersJoined,
    ];

    pub fn index(self) -> usize {
        match self {
            PoseClass::OneFingerSeparated => 0,
            PoseClass::TwoFingersJoined => 1,
            PoseClass::FourFingersJoined => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            PoseClass::OneFingerSeparated => "1FS",
            PoseClass::TwoFingersJoined => "2FJ",
            PoseClass::FourFingersJoined => "4FJ",
        }
    }
}

impl fmt::Display for PoseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for PoseClass {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1FS" => Ok(PoseClass::OneFingerSeparated),
            "2FJ" => Ok(PoseClass::TwoFingersJoined),
            "4FJ" => Ok(PoseClass::FourFingersJoined),
            other => Err(FrameError::UnknownLabel(other.to_string())),
        }
    }
}

/// Scene description attached to simulated or recorded frames.
///
/// Never read by the processing pipeline; only evaluation code looks at it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameMeta {
    pub lux: f64,
    pub phi_deg: f64,
    pub theta_deg: f64,
    pub distance_cm: Option<f64>,
    pub width_mm: Option<f64>,
    pub true_pose: Option<PoseClass>,
}

/// One sampling cycle: 8 photodiode voltages plus the mode they were taken in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawDataFrame {
    voltages: [f64; PD_COUNT],
    pub mode: Mode,
    pub meta: Option<FrameMeta>,
}

impl RawDataFrame {
    pub fn voltages(&self) -> &[f64; PD_COUNT] {
        &self.voltages
    }

    /// Largest voltage of the frame, before any normalization.
    pub fn rawmax(&self) -> f64 {
        self.voltages
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn with_meta(mut self, meta: FrameMeta) -> Self {
        self.meta = Some(meta);
        self
    }
}

/// Non-negative light/shadow pattern produced by mode-specific normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedFrame {
    pub values: [f64; PD_COUNT],
    /// Maximum of the frame before normalization, V.
    pub rawmax: f64,
    pub source_mode: Mode,
}

impl NormalizedFrame {
    /// Builds a pattern directly, e.g. for feature tests. Values are taken as-is.
    pub fn from_values(values: [f64; PD_COUNT], rawmax: f64, source_mode: Mode) -> Self {
        Self {
            values,
            rawmax,
            source_mode,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("voltage {value} at photodiode {index} outside [0, {limit}] V")]
    OutOfRange {
        index: usize,
        value: f64,
        limit: f64,
    },
    #[error("expected {PD_COUNT} voltages, got {0}")]
    WrongArity(usize),
    #[error("sensor geometry violates its invariants")]
    InvalidGeometry,
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
}

/// Checks arity and the [0, v_saturation] range and builds a frame.
pub fn validate_frame(
    voltages: &[f64],
    mode: Mode,
    geometry: &SensorGeometry,
) -> Result<RawDataFrame, FrameError> {
    if voltages.len() != PD_COUNT {
        return Err(FrameError::WrongArity(voltages.len()));
    }
    for (index, &value) in voltages.iter().enumerate() {
        // NaN fails both comparisons and is rejected here as well.
        if !(value >= 0.0 && value <= geometry.v_saturation) {
            return Err(FrameError::OutOfRange {
                index,
                value,
                limit: geometry.v_saturation,
            });
        }
    }
    let mut out = [0.0; PD_COUNT];
    out.copy_from_slice(voltages);
    Ok(RawDataFrame {
        voltages: out,
        mode,
        meta: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_frame_is_valid() {
        let g = SensorGeometry::default();
        let f = validate_frame(&[0.0; 8], Mode::Passive, &g).unwrap();
        assert_eq!(f.voltages(), &[0.0; 8]);
        assert_eq!(f.rawmax(), 0.0);
    }

    #[test]
    fn above_saturation_is_rejected() {
        let g = SensorGeometry::default();
        let mut v = [1.0; 8];
        v[7] = 3.9;
        assert!(matches!(
            validate_frame(&v, Mode::Active, &g),
            Err(FrameError::OutOfRange { index: 7, .. })
        ));
        v[7] = -0.01;
        assert!(validate_frame(&v, Mode::Active, &g).is_err());
        v[7] = f64::NAN;
        assert!(validate_frame(&v, Mode::Active, &g).is_err());
    }

    #[test]
    fn saturation_bound_is_inclusive() {
        let g = SensorGeometry::default();
        assert!(validate_frame(&[3.8; 8], Mode::Active, &g).is_ok());
    }

    #[test]
    fn wrong_arity() {
        let g = SensorGeometry::default();
        assert_eq!(
            validate_frame(&[0.0; 7], Mode::Active, &g),
            Err(FrameError::WrongArity(7))
        );
    }

    #[test]
    fn positions_are_centered_with_unit_pitch() {
        let p = pd_positions(&SensorGeometry::default());
        assert_eq!(p[0], -3.5);
        assert_eq!(p, [-3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5]);
        assert_eq!(p.iter().sum::<f64>(), 0.0);
        assert_eq!(p[5] - p[4], 1.0);
        for i in 0..PD_COUNT {
            assert_eq!(p[i], -p[PD_COUNT - 1 - i]);
        }
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn default_geometry_satisfies_invariants() {
        SensorGeometry::default().check().unwrap();
        let bad = SensorGeometry {
            lux_anchor_volts: 2.0,
            ..Default::default()
        };
        assert!(bad.check().is_err());
    }

    #[test]
    fn pose_codes_round_trip() {
        for p in PoseClass::ALL {
            assert_eq!(p.code().parse::<PoseClass>().unwrap(), p);
            assert_eq!(PoseClass::from_index(p.index()), Some(p));
        }
        assert!("5FJ".parse::<PoseClass>().is_err());
    }
}
