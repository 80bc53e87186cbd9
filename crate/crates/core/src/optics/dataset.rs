use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{derive_seed, render, LightEnvironment, Obstacle, OpticsError, PoseWidths, Scene};
use crate::classifier::{LabeledDataset, PoseSample};
use crate::features::{extract, population_sd, FeatureOptions, FeatureSetId};
use crate::frame::{Mode, PoseClass, RawDataFrame, PD_COUNT};
use crate::normalize::normalize;

/// Recipe for a synthetic labeled dataset under favorable (perpendicular) light.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    /// Rows per class, in 1FS, 2FJ, 4FJ order.
    pub per_class: [usize; 3],
    pub mode: Mode,
    pub lux_levels: Vec<f64>,
    /// Relative half-range of the uniform lux jitter around each level.
    pub lux_jitter: f64,
    pub direct_fraction: f64,
    pub widths: PoseWidths,
    /// Width sd as a fraction of the class mean width.
    pub width_sd_fraction: f64,
    pub offset_range_cm: (f64, f64),
    pub distance_range_cm: (f64, f64),
    /// Gains are drawn uniformly from `1 +- gain_spread` for every row.
    pub gain_spread: f64,
    pub noise_sd: f64,
    /// Rows whose frame sd does not exceed this are redrawn.
    pub t_sd: f64,
    /// Draws per row before giving up.
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self::passive()
    }
}

impl DatasetSpec {
    pub fn passive() -> Self {
        Self {
            per_class: [2000; 3],
            mode: Mode::Passive,
            lux_levels: vec![230.0, 700.0, 1460.0, 2200.0],
            lux_jitter: 0.1,
            direct_fraction: 0.6,
            widths: PoseWidths::default(),
            width_sd_fraction: 0.1,
            offset_range_cm: (-2.0, 2.0),
            distance_range_cm: (1.0, 5.0),
            gain_spread: 0.05,
            noise_sd: 0.02,
            t_sd: 0.13,
            max_attempts: 10,
            seed: 0,
        }
    }

    /// Active-mode recipe: no ambient light at all.
    pub fn active() -> Self {
        Self {
            per_class: [2200; 3],
            mode: Mode::Active,
            lux_levels: vec![0.0],
            ..Self::passive()
        }
    }

    pub fn total_rows(&self) -> usize {
        self.per_class.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledFrame {
    pub frame: RawDataFrame,
    pub label: PoseClass,
}

fn draw_scene(
    spec: &DatasetSpec,
    template: &Scene,
    pose: PoseClass,
    rng: &mut ChaCha8Rng,
) -> Scene {
    let mean_w = spec.widths.of(pose);
    let width = Normal::new(mean_w, spec.width_sd_fraction * mean_w)
        .expect("width sd is finite")
        .sample(rng)
        .max(0.1 * mean_w);
    let (x0, x1) = spec.offset_range_cm;
    let (d0, d1) = spec.distance_range_cm;
    let offset = if x1 > x0 {
        rng.random_range(x0..x1)
    } else {
        x0
    };
    let distance = if d1 > d0 {
        rng.random_range(d0..d1)
    } else {
        d0
    };
    let level = spec.lux_levels[rng.random_range(0..spec.lux_levels.len())];
    let j = spec.lux_jitter;
    let lux = level
        * if j > 0.0 {
            rng.random_range(1.0 - j..1.0 + j)
        } else {
            1.0
        };
    let mut gains = [1.0; PD_COUNT];
    if spec.gain_spread > 0.0 {
        for g in &mut gains {
            *g = rng.random_range(1.0 - spec.gain_spread..1.0 + spec.gain_spread);
        }
    }
    let mut s = *template;
    s.light = LightEnvironment {
        lux,
        direct_fraction: spec.direct_fraction,
        phi_deg: 0.0,
        theta_deg: 0.0,
        ..template.light
    };
    s.obstacle = Some(Obstacle {
        pose,
        width_mm: width,
        lateral_offset_cm: offset,
        distance_cm: distance,
        height_cm: template
            .obstacle
            .map_or(Obstacle::DEFAULT_HEIGHT_CM, |o| o.height_cm),
    });
    s.imperfections.gains = gains;
    s.imperfections.noise_sd = spec.noise_sd;
    s.imperfections.seed = rng.random();
    s
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Renders the rows of `spec`, grouped by class.
///
/// Voltages are rounded to 0.1 mV, the precision of the dataset file, so a
/// dataset read back from disk is identical to the one generated in memory.
/// Each row has its own generator derived from `(seed, row)`.
pub fn gen_frames(
    spec: &DatasetSpec,
    template: &Scene,
    options: FeatureOptions,
) -> Result<Vec<LabeledFrame>, OpticsError> {
    if spec.per_class.contains(&0) || spec.lux_levels.is_empty() {
        return Err(OpticsError::EmptySpec);
    }
    template.check()?;
    let mut rows = Vec::with_capacity(spec.total_rows());
    for pose in PoseClass::ALL {
        for _ in 0..spec.per_class[pose.index()] {
            let row = rows.len();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, row as u64));
            let mut accepted = None;
            for _ in 0..spec.max_attempts.max(1) {
                let scene = draw_scene(spec, template, pose, &mut rng);
                let raw = render(&scene, spec.mode);
                let mut v = *raw.voltages();
                v.iter_mut().for_each(|x| *x = round4(*x));
                let frame = crate::frame::validate_frame(&v, spec.mode, &scene.geometry)
                    .expect("rounding keeps voltages in range");
                let frame = match raw.meta {
                    Some(m) => frame.with_meta(m),
                    None => frame,
                };
                let usable = population_sd(&v) > spec.t_sd
                    && extract(
                        &normalize(&frame),
                        FeatureSetId::All,
                        &scene.geometry,
                        options,
                    )
                    .is_ok();
                if usable {
                    accepted = Some(frame);
                    break;
                }
            }
            let frame = accepted.ok_or(OpticsError::RetriesExhausted {
                row,
                attempts: spec.max_attempts.max(1),
            })?;
            rows.push(LabeledFrame { frame, label: pose });
        }
    }
    Ok(rows)
}

/// Turns labeled frames into feature rows carrying every available feature.
pub fn featurize(
    frames: &[LabeledFrame],
    template: &Scene,
    options: FeatureOptions,
) -> Result<LabeledDataset, crate::Error> {
    let samples = frames
        .iter()
        .map(|f| {
            let features = extract(
                &normalize(&f.frame),
                FeatureSetId::All,
                &template.geometry,
                options,
            )?;
            Ok(PoseSample {
                features,
                label: f.label,
                meta: f.frame.meta,
            })
        })
        .collect::<Result<Vec<_>, crate::Error>>()?;
    Ok(LabeledDataset::new(
        FeatureSetId::All.names().to_vec(),
        samples,
    )?)
}

/// [`gen_frames`] followed by [`featurize`].
pub fn gen_dataset(
    spec: &DatasetSpec,
    template: &Scene,
    options: FeatureOptions,
) -> Result<LabeledDataset, crate::Error> {
    let frames = gen_frames(spec, template, options)?;
    featurize(&frames, template, options)
}
