//! Processing pipeline and scene simulator for a linear 8-photodiode optical
//! gesture sensor that works either with its own IR LEDs (active mode) or
//! with ambient light only (passive mode).
//!
//! The pipeline runs once per 40 Hz sampling cycle:
//!
//! 1. [`frame`]: validate the 8 raw voltages.
//! 2. [`controller::select_mode`]: decide from the frame maximum whether the
//!    ambient light suffices for passive operation.
//! 3. [`controller::gate`]: reject flat frames (no hand present).
//! 4. [`normalize`] and [`features`]: turn the frame into a non-negative
//!    pattern and compute shape features.
//! 5. [`classifier`]: recognize the hand pose with a per-mode network.
//!
//! [`optics`] renders synthetic frames for both modes, [`roc`] tunes the
//! light threshold, [`power`] estimates the front-end energy budget, and
//! [`cli`] ties everything into the `optogest` command.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod controller;
pub mod features;
pub mod frame;
pub mod io;
pub mod normalize;
pub mod optics;
pub mod power;
pub mod roc;

use thiserror::Error;

/// Any failure surfaced by the library or the command line.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Frame(#[from] frame::FrameError),
    #[error(transparent)]
    Normalize(#[from] normalize::NormalizeError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Classifier(#[from] classifier::ClassifierError),
    #[error(transparent)]
    Controller(#[from] controller::ControllerError),
    #[error(transparent)]
    Optics(#[from] optics::OpticsError),
    #[error(transparent)]
    Roc(#[from] roc::RocError),
    #[error(transparent)]
    Power(#[from] power::PowerError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("data: {0}")]
    Data(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Data(format!("{other:?}")),
        }
    }
}

impl Error {
    /// Process exit status: 2 for configuration or schema problems, 3 for
    /// everything concerning the data itself.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Schema(_) => 2,
            Error::Power(_) => 2,
            Error::Controller(controller::ControllerError::InvalidThresholds) => 2,
            Error::Optics(optics::OpticsError::InvalidScene(_)) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
