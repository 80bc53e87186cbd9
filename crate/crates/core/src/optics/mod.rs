//! Geometric scene renderer for both operating modes.
//!
//! The array lies along x (cm, centered on the sensor). A rectangular
//! obstacle of width `w` and height `h` floats at distance `d` above it.
//! Ambient light is split into a directed part (fraction `k`, arriving from
//! azimuth `phi` and elevation `theta`) and a uniform diffuse part. Every
//! photodiode sees the directed light through a small aperture window and the
//! diffuse light through a footprint set by the field of view. Voltages are
//! clamped to the saturation level once, at the very end.

mod dataset;
pub mod render;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{PoseClass, SensorGeometry, PD_COUNT};

pub use dataset::{featurize, gen_dataset, gen_frames, DatasetSpec, LabeledFrame};
pub use render::{render, render_active, render_passive};
pub use sweep::{sweep_distance, sweep_phi, sweep_theta, SweepFrame, SweepKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("distance sweep needs an obstacle in the scene template")]
    MissingObstacle,
    #[error("invalid scene: {0}")]
    InvalidScene(&'static str),
    #[error("dataset spec needs a positive count for every class")]
    EmptySpec,
    #[error("row {row}: no usable frame after {attempts} attempts")]
    RetriesExhausted { row: usize, attempts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LightEnvironment {
    pub lux: f64,
    /// Share of the light that is directed rather than diffuse, 0..=1.
    pub direct_fraction: f64,
    /// Azimuth of the source relative to the sensor normal (top view), degrees.
    pub phi_deg: f64,
    /// Elevation of the source (side view), degrees.
    pub theta_deg: f64,
    /// Angular radius of the directed source. Zero gives sharp shadows; an
    /// extended source (e.g. a whole window) blurs them with distance.
    pub source_half_angle_deg: f64,
}

impl Default for LightEnvironment {
    fn default() -> Self {
        Self {
            lux: 700.0,
            direct_fraction: 0.8,
            phi_deg: 0.0,
            theta_deg: 0.0,
            source_half_angle_deg: 0.0,
        }
    }
}

impl LightEnvironment {
    pub fn check(&self) -> Result<(), OpticsError> {
        if !(self.lux >= 0.0) {
            return Err(OpticsError::InvalidScene("lux must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.direct_fraction) {
            return Err(OpticsError::InvalidScene("direct fraction outside [0, 1]"));
        }
        if !(self.phi_deg.abs() <= 180.0) || !(self.theta_deg.abs() <= 90.0) {
            return Err(OpticsError::InvalidScene(
                "phi must be within 180 deg, theta within 90 deg",
            ));
        }
        if !(0.0..90.0).contains(&self.source_half_angle_deg) {
            return Err(OpticsError::InvalidScene(
                "source half-angle outside [0, 90)",
            ));
        }
        Ok(())
    }
}

/// Default obstacle widths per pose, mm. Only the 2FJ width is measured;
/// the other two are assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseWidths {
    pub one_finger_mm: f64,
    pub two_fingers_mm: f64,
    pub four_fingers_mm: f64,
}

impl Default for PoseWidths {
    fn default() -> Self {
        Self {
            one_finger_mm: 17.0,
            two_fingers_mm: 32.0,
            four_fingers_mm: 72.0,
        }
    }
}

impl PoseWidths {
    pub fn of(&self, pose: PoseClass) -> f64 {
        match pose {
            PoseClass::OneFingerSeparated => self.one_finger_mm,
            PoseClass::TwoFingersJoined => self.two_fingers_mm,
            PoseClass::FourFingersJoined => self.four_fingers_mm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub pose: PoseClass,
    pub width_mm: f64,
    /// Lateral position of the obstacle center, cm.
    pub lateral_offset_cm: f64,
    /// Height above the photodiode plane, cm.
    pub distance_cm: f64,
    /// Extent across the array axis, cm.
    pub height_cm: f64,
}

impl Obstacle {
    pub const DEFAULT_HEIGHT_CM: f64 = 2.0;

    /// Centered obstacle with the default width of `pose`.
    pub fn new(pose: PoseClass, distance_cm: f64) -> Self {
        Self {
            pose,
            width_mm: PoseWidths::default().of(pose),
            lateral_offset_cm: 0.0,
            distance_cm,
            height_cm: Self::DEFAULT_HEIGHT_CM,
        }
    }

    pub fn check(&self) -> Result<(), OpticsError> {
        if !(self.width_mm > 0.0) || !(self.distance_cm > 0.0) || !(self.height_cm > 0.0) {
            return Err(OpticsError::InvalidScene(
                "obstacle width, height and distance must be positive",
            ));
        }
        if !self.lateral_offset_cm.is_finite() {
            return Err(OpticsError::InvalidScene("obstacle offset must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionModel {
    /// Per-photodiode sensitivity multipliers.
    pub gains: [f64; PD_COUNT],
    /// Additive Gaussian noise, V.
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for ImperfectionModel {
    fn default() -> Self {
        Self {
            gains: [1.0; PD_COUNT],
            noise_sd: 0.02,
            seed: 0,
        }
    }
}

impl ImperfectionModel {
    pub fn ideal() -> Self {
        Self {
            noise_sd: 0.0,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), OpticsError> {
        if self.gains.iter().any(|g| !(*g > 0.0)) || !(self.noise_sd >= 0.0) {
            return Err(OpticsError::InvalidScene(
                "gains must be positive and noise non-negative",
            ));
        }
        Ok(())
    }
}

/// Reflection model of the sensor's own LEDs (active mode).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LedParams {
    /// Reflected signal of a fully covering obstacle at zero distance, V.
    pub amplitude_v: f64,
    /// Distance at which the reflection has dropped to half, cm.
    pub falloff_cm: f64,
}

impl Default for LedParams {
    fn default() -> Self {
        Self {
            amplitude_v: 2.5,
            falloff_cm: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub light: LightEnvironment,
    pub obstacle: Option<Obstacle>,
    pub imperfections: ImperfectionModel,
    pub geometry: SensorGeometry,
    pub led: LedParams,
    /// Half-width of each photodiode's directed-light aperture, cm.
    pub aperture_half_width_cm: f64,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            light: LightEnvironment::default(),
            obstacle: None,
            imperfections: ImperfectionModel::default(),
            geometry: SensorGeometry::default(),
            led: LedParams::default(),
            aperture_half_width_cm: 0.2,
        }
    }
}

impl Scene {
    pub fn check(&self) -> Result<(), OpticsError> {
        self.light.check()?;
        if let Some(o) = &self.obstacle {
            o.check()?;
        }
        self.imperfections.check()?;
        self.geometry
            .check()
            .map_err(|_| OpticsError::InvalidScene("sensor geometry"))?;
        if !(self.aperture_half_width_cm > 0.0)
            || !(self.led.falloff_cm > 0.0)
            || !(self.led.amplitude_v >= 0.0)
        {
            return Err(OpticsError::InvalidScene(
                "aperture, LED falloff and amplitude",
            ));
        }
        Ok(())
    }
}

/// Linear calibration through the anchor point, clamped at saturation.
pub fn lux_to_volts(lux: f64, geometry: &SensorGeometry) -> f64 {
    lux_to_volts_linear(lux, geometry).clamp(0.0, geometry.v_saturation)
}

/// The calibration line without the saturation clamp.
pub fn lux_to_volts_linear(lux: f64, geometry: &SensorGeometry) -> f64 {
    lux * geometry.lux_anchor_volts / geometry.lux_anchor
}

/// Triangular acceptance window, 1 on axis and 0 at or beyond the FOV edge.
pub fn angular_acceptance(alpha_deg: f64, geometry: &SensorGeometry) -> f64 {
    (1.0 - alpha_deg.abs() / geometry.fov_half_angle_deg).max(0.0)
}

/// Angle between the source direction and the sensor normal, degrees.
pub fn incidence_angle(phi_deg: f64, theta_deg: f64) -> f64 {
    let c = phi_deg.to_radians().cos() * theta_deg.to_radians().cos();
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Seed for item `index` of a run seeded with `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_anchor() {
        let g = SensorGeometry::default();
        assert_eq!(lux_to_volts(592.0, &g), 1.9);
        assert_eq!(lux_to_volts(0.0, &g), 0.0);
        assert_eq!(lux_to_volts(1400.0, &g), 3.8);
        assert!((lux_to_volts_linear(1400.0, &g) - 4.4932).abs() < 1e-4);
    }

    #[test]
    fn acceptance_window() {
        let g = SensorGeometry::default();
        assert_eq!(angular_acceptance(0.0, &g), 1.0);
        assert_eq!(angular_acceptance(30.0, &g), 0.0);
        assert_eq!(angular_acceptance(15.0, &g), 0.5);
        assert_eq!(angular_acceptance(-15.0, &g), 0.5);
        assert_eq!(angular_acceptance(90.0, &g), 0.0);
    }

    #[test]
    fn incidence_combines_both_angles() {
        assert!((incidence_angle(20.0, 0.0) - 20.0).abs() < 1e-9);
        assert!((incidence_angle(0.0, -20.0) - 20.0).abs() < 1e-9);
        assert!((incidence_angle(180.0, 0.0) - 180.0).abs() < 1e-9);
        assert!((incidence_angle(0.0, 90.0) - 90.0).abs() < 1e-9);
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    #[test]
    fn scene_validation() {
        assert!(Scene::default().check().is_ok());
        let mut s = Scene::default();
        s.light.direct_fraction = 1.5;
        assert!(s.check().is_err());
        let mut s = Scene::default();
        s.obstacle = Some(Obstacle {
            width_mm: 0.0,
            ..Obstacle::new(PoseClass::TwoFingersJoined, 2.0)
        });
        assert!(s.check().is_err());
        let mut s = Scene::default();
        s.imperfections.gains[3] = 0.0;
        assert!(s.check().is_err());
    }
}
