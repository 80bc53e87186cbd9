use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{angular_acceptance, incidence_angle, lux_to_volts_linear, Scene};
use crate::frame::{validate_frame, FrameMeta, Mode, RawDataFrame, PD_COUNT};

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Per-diode coverage fractions of the current obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Coverage {
    /// Share of the directed-light window blocked, lateral times vertical.
    pub direct: [f64; PD_COUNT],
    /// Share of the diffuse footprint covered.
    pub diffuse: [f64; PD_COUNT],
}

pub(crate) fn coverage(scene: &Scene) -> Coverage {
    let mut c = Coverage {
        direct: [0.0; PD_COUNT],
        diffuse: [0.0; PD_COUNT],
    };
    let Some(o) = scene.obstacle else {
        return c;
    };
    let d = o.distance_cm;
    let half_w = o.width_mm / 20.0;
    let (lo, hi) = (o.lateral_offset_cm - half_w, o.lateral_offset_cm + half_w);
    let window =
        scene.aperture_half_width_cm + d * scene.light.source_half_angle_deg.to_radians().tan();
    let foot = d * scene.geometry.fov_half_angle_deg.to_radians().tan();

    let cy = -d * scene.light.theta_deg.to_radians().tan();
    let vertical = (overlap(
        cy - window,
        cy + window,
        -o.height_cm / 2.0,
        o.height_cm / 2.0,
    ) / (2.0 * window))
        .min(1.0);
    let shift = d * scene.light.phi_deg.to_radians().tan();

    for (i, x) in scene.geometry.pd_positions().into_iter().enumerate() {
        let cx = x - shift;
        c.direct[i] =
            (overlap(cx - window, cx + window, lo, hi) / (2.0 * window) * vertical).min(1.0);
        c.diffuse[i] = (overlap(x - foot, x + foot, lo, hi) / (2.0 * foot)).min(1.0);
    }
    c
}

/// Passive light level of each diode before gains, noise and clamping, V.
pub fn passive_signal(scene: &Scene) -> [f64; PD_COUNT] {
    let l = lux_to_volts_linear(scene.light.lux, &scene.geometry);
    let k = scene.light.direct_fraction;
    let a = angular_acceptance(
        incidence_angle(scene.light.phi_deg, scene.light.theta_deg),
        &scene.geometry,
    );
    let cov = coverage(scene);
    let mut out = [0.0; PD_COUNT];
    for i in 0..PD_COUNT {
        let direct = if a > 0.0 {
            k * a * (1.0 - cov.direct[i])
        } else {
            0.0
        };
        out[i] = l * (direct + (1.0 - k) * (1.0 - cov.diffuse[i]));
    }
    out
}

/// Unobstructed passive level, identical for every diode, V.
pub fn ambient_baseline(scene: &Scene) -> f64 {
    passive_signal(&Scene {
        obstacle: None,
        ..*scene
    })[0]
}

/// Active level of each diode before gains, noise and clamping, V.
pub fn active_signal(scene: &Scene) -> [f64; PD_COUNT] {
    let ambient = ambient_baseline(scene);
    let Some(o) = scene.obstacle else {
        return [ambient; PD_COUNT];
    };
    let falloff = 1.0 + (o.distance_cm / scene.led.falloff_cm).powi(2);
    let cov = coverage(scene);
    cov.diffuse
        .map(|f| scene.led.amplitude_v * f / falloff + ambient)
}

fn finish(scene: &Scene, signal: [f64; PD_COUNT], mode: Mode) -> RawDataFrame {
    let imp = &scene.imperfections;
    let mut noise = [0.0; PD_COUNT];
    if imp.noise_sd > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(imp.seed);
        let normal = Normal::new(0.0, imp.noise_sd).expect("noise sd checked non-negative");
        for n in &mut noise {
            *n = normal.sample(&mut rng);
        }
    }
    let v_sat = scene.geometry.v_saturation;
    let mut v = [0.0; PD_COUNT];
    for i in 0..PD_COUNT {
        v[i] = (imp.gains[i] * signal[i] + noise[i]).clamp(0.0, v_sat);
    }
    let meta = FrameMeta {
        lux: scene.light.lux,
        phi_deg: scene.light.phi_deg,
        theta_deg: scene.light.theta_deg,
        distance_cm: scene.obstacle.map(|o| o.distance_cm),
        width_mm: scene.obstacle.map(|o| o.width_mm),
        true_pose: scene.obstacle.map(|o| o.pose),
    };
    validate_frame(&v, mode, &scene.geometry)
        .expect("clamped voltages are in range")
        .with_meta(meta)
}

/// Shadow frame under ambient light.
pub fn render_passive(scene: &Scene) -> RawDataFrame {
    finish(scene, passive_signal(scene), Mode::Passive)
}

/// LED reflection frame on top of the ambient baseline.
pub fn render_active(scene: &Scene) -> RawDataFrame {
    finish(scene, active_signal(scene), Mode::Active)
}

pub fn render(scene: &Scene, mode: Mode) -> RawDataFrame {
    match mode {
        Mode::Active => render_active(scene),
        Mode::Passive => render_passive(scene),
    }
}
