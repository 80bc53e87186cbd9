//! TOML run configuration. Every key is optional; missing keys take the
//! built-in defaults.
//!
//! ```toml
//! [thresholds]
//! t_sd = 0.13
//! t_max = 0.6
//!
//! [scene]
//! lux = 700.0
//! direct_fraction = 0.8   # cloudy ~0.3, sunny ~0.9
//! pose = "2FJ"
//! distance_cm = 2.0
//!
//! [dataset]
//! per_class = 300
//!
//! [power]
//! settling_time_us = 375.0
//! ```

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{SplitRatios, TrainConfig};
use crate::controller::Thresholds;
use crate::features::{FeatureName, FeatureOptions};
use crate::frame::{Mode, PoseClass, SensorGeometry, PD_COUNT};
use crate::optics::{
    DatasetSpec, ImperfectionModel, LedParams, LightEnvironment, Obstacle, PoseWidths, Scene,
};
use crate::power::PowerParams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub geometry: SensorGeometry,
    pub thresholds: Thresholds,
    pub features: FeatureOptions,
    pub scene: SceneConfig,
    pub dataset: DatasetConfig,
    pub training: TrainingConfig,
    pub scores: ScoresConfig,
    pub power: PowerParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub mode: Mode,
    pub lux: f64,
    pub direct_fraction: f64,
    pub phi_deg: f64,
    pub theta_deg: f64,
    pub source_half_angle_deg: f64,
    /// Set to false for an empty scene.
    pub obstacle: bool,
    pub pose: PoseClass,
    /// Overrides the pose's default width.
    pub width_mm: Option<f64>,
    pub offset_cm: f64,
    pub distance_cm: f64,
    pub height_cm: f64,
    pub pose_widths: PoseWidths,
    pub noise_sd: f64,
    /// Per-diode gains are drawn from `1 +- gain_spread` unless `gains` is set.
    pub gain_spread: f64,
    pub gains: Option<[f64; PD_COUNT]>,
    pub led: LedParams,
    pub aperture_half_width_cm: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let light = LightEnvironment::default();
        Self {
            mode: Mode::Passive,
            lux: light.lux,
            direct_fraction: light.direct_fraction,
            phi_deg: light.phi_deg,
            theta_deg: light.theta_deg,
            source_half_angle_deg: light.source_half_angle_deg,
            obstacle: true,
            pose: PoseClass::TwoFingersJoined,
            width_mm: None,
            offset_cm: 0.0,
            distance_cm: 2.0,
            height_cm: Obstacle::DEFAULT_HEIGHT_CM,
            pose_widths: PoseWidths::default(),
            noise_sd: ImperfectionModel::default().noise_sd,
            gain_spread: 0.05,
            gains: None,
            led: LedParams::default(),
            aperture_half_width_cm: Scene::default().aperture_half_width_cm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Rows per class; defaults to 2000 (passive) or 2200 (active).
    pub per_class: Option<usize>,
    pub lux_levels: Option<Vec<f64>>,
    pub lux_jitter: Option<f64>,
    pub direct_fraction: Option<f64>,
    pub width_sd_fraction: Option<f64>,
    pub offset_range_cm: Option<(f64, f64)>,
    pub distance_range_cm: Option<(f64, f64)>,
    pub gain_spread: Option<f64>,
    pub noise_sd: Option<f64>,
    pub max_attempts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub hidden_active: usize,
    pub hidden_passive: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub train_ratio: f64,
    pub validation_ratio: f64,
    pub test_ratio: f64,
    /// Explicit input features; empty means the mode's standard nine.
    pub features: Vec<FeatureName>,
    /// When set, inputs are chosen by correlation ranking instead.
    pub select_k: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let r = SplitRatios::default();
        Self {
            hidden_active: 22,
            hidden_passive: 25,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            train_ratio: r.train,
            validation_ratio: r.validation,
            test_ratio: r.test,
            features: Vec::new(),
            select_k: None,
        }
    }
}

impl TrainingConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
        }
    }

    pub fn ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.train_ratio,
            validation: self.validation_ratio,
            test: self.test_ratio,
        }
    }

    pub fn hidden(&self, mode: Mode) -> usize {
        match mode {
            Mode::Active => self.hidden_active,
            Mode::Passive => self.hidden_passive,
        }
    }
}

/// Scenes used to collect labeled `rawmax` scores for threshold tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoresConfig {
    pub lux_levels: Vec<f64>,
    pub direct_fractions: Vec<f64>,
    pub distance_cm: f64,
}

impl Default for ScoresConfig {
    fn default() -> Self {
        Self {
            lux_levels: vec![
                25.0, 50.0, 100.0, 150.0, 200.0, 300.0, 450.0, 700.0, 1000.0, 1500.0,
            ],
            direct_fractions: vec![0.3, 0.6, 0.9],
            distance_cm: 2.0,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.check()?;
        Ok(c)
    }

    /// Reads `path`, or returns the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        self.geometry
            .check()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.thresholds
            .check(&self.geometry)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.power
            .check()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.scene(0)
            .check()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(0.0..1.0).contains(&self.scene.gain_spread) {
            return Err(Error::Config("scene.gain_spread must be in [0, 1)".into()));
        }
        Ok(())
    }

    /// Scene described by `[scene]`; `seed` drives gains (unless fixed) and noise.
    pub fn scene(&self, seed: u64) -> Scene {
        let s = &self.scene;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gains = s.gains.unwrap_or_else(|| {
            let mut g = [1.0; PD_COUNT];
            if s.gain_spread > 0.0 {
                for x in &mut g {
                    *x = rng.random_range(1.0 - s.gain_spread..1.0 + s.gain_spread);
                }
            }
            g
        });
        Scene {
            light: LightEnvironment {
                lux: s.lux,
                direct_fraction: s.direct_fraction,
                phi_deg: s.phi_deg,
                theta_deg: s.theta_deg,
                source_half_angle_deg: s.source_half_angle_deg,
            },
            obstacle: s.obstacle.then(|| Obstacle {
                pose: s.pose,
                width_mm: s.width_mm.unwrap_or(s.pose_widths.of(s.pose)),
                lateral_offset_cm: s.offset_cm,
                distance_cm: s.distance_cm,
                height_cm: s.height_cm,
            }),
            imperfections: ImperfectionModel {
                gains,
                noise_sd: s.noise_sd,
                seed: rng.random(),
            },
            geometry: self.geometry,
            led: s.led,
            aperture_half_width_cm: s.aperture_half_width_cm,
        }
    }

    pub fn dataset_spec(&self, mode: Mode, seed: u64) -> DatasetSpec {
        let base = match mode {
            Mode::Active => DatasetSpec::active(),
            Mode::Passive => DatasetSpec::passive(),
        };
        let d = &self.dataset;
        DatasetSpec {
            per_class: d.per_class.map_or(base.per_class, |n| [n; 3]),
            mode,
            lux_levels: d.lux_levels.clone().unwrap_or(base.lux_levels),
            lux_jitter: d.lux_jitter.unwrap_or(base.lux_jitter),
            direct_fraction: d.direct_fraction.unwrap_or(base.direct_fraction),
            widths: self.scene.pose_widths,
            width_sd_fraction: d.width_sd_fraction.unwrap_or(base.width_sd_fraction),
            offset_range_cm: d.offset_range_cm.unwrap_or(base.offset_range_cm),
            distance_range_cm: d.distance_range_cm.unwrap_or(base.distance_range_cm),
            gain_spread: d.gain_spread.unwrap_or(base.gain_spread),
            noise_sd: d.noise_sd.unwrap_or(base.noise_sd),
            t_sd: self.thresholds.t_sd,
            max_attempts: d.max_attempts.unwrap_or(base.max_attempts),
            seed,
        }
    }
}
