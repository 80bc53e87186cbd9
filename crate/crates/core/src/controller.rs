//! Per-cycle decision logic: gesture gate, light-mode selection with a
//! saturation alarm, and the composition that turns one raw frame into a
//! [`SensorEvent`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::PoseModel;
use crate::features::{cog, extract_named, population_sd, FeatureOptions};
use crate::frame::{Mode, PoseClass, RawDataFrame, SensorGeometry};
use crate::normalize::normalize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("model was trained for {model} mode but the frame is {frame}")]
    ModelModeMismatch { model: Mode, frame: Mode },
    #[error("thresholds violate 0 < t_sd < v_sat and 0 < t_max < v_alarm <= v_sat")]
    InvalidThresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Minimum frame sd (V) for a gesture candidate, exclusive.
    pub t_sd: f64,
    /// Frames whose maximum is below this (V) are dark.
    pub t_max: f64,
    /// Frame maximum (V) at or above which the saturation alarm fires.
    pub v_alarm: f64,
    /// Half-width (V) of the band around `t_max` in which the stateful
    /// controller keeps its current mode. Zero disables it.
    pub hysteresis: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            t_sd: 0.13,
            t_max: 0.6,
            v_alarm: 3.75,
            hysteresis: 0.0,
        }
    }
}

impl Thresholds {
    pub fn check(&self, geometry: &SensorGeometry) -> Result<(), ControllerError> {
        let v_sat = geometry.v_saturation;
        let ok = self.t_sd > 0.0
            && self.t_sd < v_sat
            && self.t_max > 0.0
            && self.t_max < self.v_alarm
            && self.v_alarm <= v_sat
            && self.hysteresis >= 0.0
            && self.hysteresis < self.t_max;
        if ok {
            Ok(())
        } else {
            Err(ControllerError::InvalidThresholds)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateDecision {
    NoGesture,
    GestureCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeDecision {
    StayPassive,
    SwitchToActive,
}

impl ModeDecision {
    pub fn target(self) -> Mode {
        match self {
            ModeDecision::StayPassive => Mode::Passive,
            ModeDecision::SwitchToActive => Mode::Active,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub mode_decision: ModeDecision,
    pub gate: GateDecision,
    pub pose: Option<PoseClass>,
    /// Pattern center of gravity, cm.
    pub cog: Option<f64>,
    pub saturation_alarm: bool,
}

pub fn gate(raw: &RawDataFrame, thresholds: &Thresholds) -> GateDecision {
    if population_sd(raw.voltages()) > thresholds.t_sd {
        GateDecision::GestureCandidate
    } else {
        GateDecision::NoGesture
    }
}

/// Dark (switch to active) iff `rawmax < t_max`; alarm iff `rawmax >= v_alarm`.
pub fn select_mode(rawmax: f64, thresholds: &Thresholds) -> (ModeDecision, bool) {
    let decision = if rawmax < thresholds.t_max {
        ModeDecision::SwitchToActive
    } else {
        ModeDecision::StayPassive
    };
    (decision, rawmax >= thresholds.v_alarm)
}

/// Runs the full per-cycle pipeline on one frame.
///
/// Feature extraction failures (e.g. a pattern concentrated on one diode)
/// leave the frame a gesture candidate without a pose.
pub fn step(
    raw: &RawDataFrame,
    thresholds: &Thresholds,
    model: &PoseModel,
    geometry: &SensorGeometry,
) -> Result<SensorEvent, ControllerError> {
    step_with(raw, thresholds, model, geometry, FeatureOptions::default())
}

pub fn step_with(
    raw: &RawDataFrame,
    thresholds: &Thresholds,
    model: &PoseModel,
    geometry: &SensorGeometry,
    options: FeatureOptions,
) -> Result<SensorEvent, ControllerError> {
    if model.mode != raw.mode {
        return Err(ControllerError::ModelModeMismatch {
            model: model.mode,
            frame: raw.mode,
        });
    }
    let (mode_decision, saturation_alarm) = select_mode(raw.rawmax(), thresholds);
    let gate = gate(raw, thresholds);
    let mut event = SensorEvent {
        mode_decision,
        gate,
        pose: None,
        cog: None,
        saturation_alarm,
    };
    if gate == GateDecision::GestureCandidate {
        let pattern = normalize(raw);
        event.cog = cog(&pattern, geometry).ok();
        if let Ok(fv) = extract_named(&pattern, &model.features, geometry, options) {
            event.pose = model.predict(&fv).ok().map(|p| p.class);
        }
    }
    Ok(event)
}

/// Mode state for one sensor stream, with optional hysteresis around `t_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub current: Mode,
}

impl Default for ModeState {
    fn default() -> Self {
        Self {
            current: Mode::Passive,
        }
    }
}

impl ModeState {
    /// Updates the mode from one frame maximum and returns the decision.
    pub fn update(&mut self, rawmax: f64, thresholds: &Thresholds) -> ModeDecision {
        let h = thresholds.hysteresis;
        let dark = match self.current {
            Mode::Passive => rawmax < thresholds.t_max - h,
            Mode::Active => rawmax < thresholds.t_max + h,
        };
        let decision = if dark {
            ModeDecision::SwitchToActive
        } else {
            ModeDecision::StayPassive
        };
        self.current = decision.target();
        decision
    }
}
