use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{derive_seed, render, OpticsError, Scene};
use crate::frame::{Mode, RawDataFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Phi,
    Theta,
    Distance,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::Phi => "phi",
            SweepKind::Theta => "theta",
            SweepKind::Distance => "distance",
        })
    }
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phi" => Ok(SweepKind::Phi),
            "theta" => Ok(SweepKind::Theta),
            "distance" => Ok(SweepKind::Distance),
            other => Err(format!("unknown sweep kind `{other}`")),
        }
    }
}

impl SweepKind {
    pub fn run(self, template: &Scene, mode: Mode) -> Result<Vec<SweepFrame>, OpticsError> {
        match self {
            SweepKind::Phi => sweep_phi(template, mode),
            SweepKind::Theta => sweep_theta(template, mode),
            SweepKind::Distance => sweep_distance(template, mode),
        }
    }
}

/// One sweep position: nominal angle (degrees) or distance (cm) and its frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepFrame {
    pub position: f64,
    pub frame: RawDataFrame,
}

fn wrap_degrees(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

fn run(
    template: &Scene,
    mode: Mode,
    positions: impl Iterator<Item = f64>,
    place: impl Fn(&mut Scene, f64),
) -> Result<Vec<SweepFrame>, OpticsError> {
    template.check()?;
    Ok(positions
        .enumerate()
        .map(|(i, position)| {
            let mut s = *template;
            place(&mut s, position);
            s.imperfections.seed = derive_seed(template.imperfections.seed, i as u64);
            SweepFrame {
                position,
                frame: render(&s, mode),
            }
        })
        .collect())
}

/// Full turn of the source azimuth in 10 degree steps (36 frames), elevation 0.
pub fn sweep_phi(template: &Scene, mode: Mode) -> Result<Vec<SweepFrame>, OpticsError> {
    run(template, mode, (0..36).map(|i| i as f64 * 10.0), |s, a| {
        s.light.phi_deg = wrap_degrees(a);
        s.light.theta_deg = 0.0;
    })
}

/// Half turn over the top, 0 to 180 degrees in 10 degree steps (19 frames).
///
/// Past the zenith the source is behind the sensor, expressed as azimuth 180
/// and the complementary elevation.
pub fn sweep_theta(template: &Scene, mode: Mode) -> Result<Vec<SweepFrame>, OpticsError> {
    run(template, mode, (0..19).map(|i| i as f64 * 10.0), |s, a| {
        if a <= 90.0 {
            s.light.phi_deg = 0.0;
            s.light.theta_deg = a;
        } else {
            s.light.phi_deg = 180.0;
            s.light.theta_deg = 180.0 - a;
        }
    })
}

/// Obstacle distance 1 to 10 cm in 1 cm steps (10 frames).
pub fn sweep_distance(template: &Scene, mode: Mode) -> Result<Vec<SweepFrame>, OpticsError> {
    if template.obstacle.is_none() {
        return Err(OpticsError::MissingObstacle);
    }
    run(template, mode, (1..=10).map(f64::from), |s, d| {
        if let Some(o) = s.obstacle.as_mut() {
            o.distance_cm = d;
        }
    })
}
