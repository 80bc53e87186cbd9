//! Command implementations behind the `optogest` binary. Each command takes
//! its inputs explicitly and returns a printable summary, so the same code
//! paths are exercised by tests and by the executable.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::classifier::{
    evaluate, select_features, split, train_mlp, EvalReport, LabeledDataset, LightLabel, PoseModel,
    ScoredSample, Topology,
};
use crate::config::Config;
use crate::controller::{step_with, ControllerError, GateDecision, ModeDecision};
use crate::features::{basic_stats, FeatureName, FeatureSetId};
use crate::frame::{Mode, PoseClass};
use crate::io::{self, ScoreRow};
use crate::optics::{
    featurize, gen_frames, render, sweep_phi, sweep_theta, LabeledFrame, SweepKind,
};
use crate::power::{power_report, write_report_csv, PowerReport};
use crate::roc::{
    confusion_metrics, optimal_point, roc_sweep, write_curve_csv, RocPoint, SweepRange,
};
use crate::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> Result<PoseModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    io::model_from_json(&text)
}

pub fn read_frames(path: &Path, config: &Config) -> Result<Vec<LabeledFrame>> {
    io::read_dataset(open(path)?, &config.geometry)
}

fn dataset_summary(frames: &[LabeledFrame], lux_levels: &[f64]) -> String {
    let mut by_class = [0usize; 3];
    let mut by_lux = vec![0usize; lux_levels.len()];
    for f in frames {
        by_class[f.label.index()] += 1;
        let lux = f.frame.meta.map_or(0.0, |m| m.lux);
        let nearest = (0..lux_levels.len()).min_by(|&a, &b| {
            (lux_levels[a] - lux)
                .abs()
                .total_cmp(&(lux_levels[b] - lux).abs())
        });
        if let Some(i) = nearest {
            by_lux[i] += 1;
        }
    }
    let mut s = format!("rows: {}\n", frames.len());
    for c in PoseClass::ALL {
        let _ = writeln!(s, "  {}: {}", c, by_class[c.index()]);
    }
    for (lux, n) in lux_levels.iter().zip(by_lux) {
        let _ = writeln!(s, "  ~{lux} lux: {n}");
    }
    s
}

pub fn cmd_gen_dataset(config: &Config, mode: Mode, seed: u64, out: &Path) -> Result<String> {
    let spec = config.dataset_spec(mode, seed);
    let frames = gen_frames(&spec, &config.scene(seed), config.features)?;
    let mut w = create(out)?;
    io::write_dataset(&frames, &mut w)?;
    w.flush()?;
    Ok(dataset_summary(&frames, &spec.lux_levels))
}

/// Mode shared by all rows, checked against the requested one if any.
fn dataset_mode(frames: &[LabeledFrame], requested: Option<Mode>) -> Result<Mode> {
    let first = frames
        .first()
        .map(|f| f.frame.mode)
        .ok_or_else(|| Error::Data("dataset has no rows".into()))?;
    if frames.iter().any(|f| f.frame.mode != first) {
        return Err(Error::Data("dataset mixes active and passive rows".into()));
    }
    if let Some(m) = requested {
        if m != first {
            return Err(Error::Data(format!(
                "requested {m} mode but the dataset is {first}"
            )));
        }
    }
    Ok(first)
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: PoseModel,
    pub sizes: (usize, usize, usize),
    pub report: EvalReport,
}

impl TrainOutcome {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "mode: {}\nfeatures: {}\nhidden: {}\nsplit: train {} / validation {} / test {}\nepochs: {} (best {})\n",
            self.model.mode,
            self.model.features.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(","),
            self.model.hidden_dim(),
            self.sizes.0,
            self.sizes.1,
            self.sizes.2,
            self.model.training.epochs_run,
            self.model.training.best_epoch,
        );
        s.push_str(&eval_summary(&self.report));
        s
    }
}

pub fn eval_summary(r: &EvalReport) -> String {
    let mut s = format!(
        "accuracy: {:.4}\nconfusion (rows true, columns predicted; 1FS 2FJ 4FJ):\n",
        r.accuracy
    );
    for (c, row) in PoseClass::ALL.iter().zip(r.confusion) {
        let _ = writeln!(s, "  {c}: {} {} {}", row[0], row[1], row[2]);
    }
    s
}

pub fn train_on_frames(
    config: &Config,
    frames: &[LabeledFrame],
    mode: Mode,
    seed: u64,
) -> Result<TrainOutcome> {
    let data = featurize(frames, &config.scene(seed), config.features)?;
    let (train, validation, test) = split(&data, config.training.ratios(), seed)?;
    let t = &config.training;
    let features: Vec<FeatureName> = match (t.select_k, t.features.is_empty()) {
        (Some(k), _) => select_features(&train, k)?,
        (None, false) => t.features.clone(),
        (None, true) => match mode {
            Mode::Active => FeatureSetId::ActiveNine,
            Mode::Passive => FeatureSetId::PassiveNine,
        }
        .names()
        .to_vec(),
    };
    let topology = Topology {
        hidden: t.hidden(mode),
    };
    let model = train_mlp(
        &train,
        &validation,
        mode,
        &features,
        topology,
        t.train_config(),
        seed,
    )?;
    let report = evaluate(&model, &test)?;
    Ok(TrainOutcome {
        model,
        sizes: (train.len(), validation.len(), test.len()),
        report,
    })
}

pub fn cmd_train(
    config: &Config,
    dataset: &Path,
    mode: Option<Mode>,
    seed: u64,
    out_model: &Path,
) -> Result<TrainOutcome> {
    let frames = read_frames(dataset, config)?;
    let mode = dataset_mode(&frames, mode)?;
    let outcome = train_on_frames(config, &frames, mode, seed)?;
    std::fs::write(out_model, io::model_to_json(&outcome.model)?)?;
    Ok(outcome)
}

/// Evaluates a model on every row of a dataset, whatever mode it was taken in.
pub fn cmd_eval(config: &Config, dataset: &Path, model_path: &Path) -> Result<EvalReport> {
    let model = read_model(model_path)?;
    let frames = read_frames(dataset, config)?;
    let data: LabeledDataset = featurize(&frames, &config.scene(0), config.features)?;
    Ok(evaluate(&model, &data)?)
}

const SWEEP_HEADER: [&str; 11] = [
    "position",
    "sd",
    "max",
    "min",
    "diff",
    "gate",
    "mode_decision",
    "pose",
    "cog",
    "alarm",
    "true_pose",
];

pub fn cmd_sweep(
    config: &Config,
    kind: SweepKind,
    model_path: &Path,
    seed: u64,
    out: &Path,
) -> Result<String> {
    let model = read_model(model_path)?;
    let mode = config.scene.mode;
    if model.mode != mode {
        return Err(ControllerError::ModelModeMismatch {
            model: model.mode,
            frame: mode,
        }
        .into());
    }
    let frames = kind.run(&config.scene(seed), mode)?;
    let mut w = create(out)?;
    writeln!(w, "{}", io::SWEEP_VERSION)?;
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(SWEEP_HEADER)?;
    let mut recognized = 0;
    for f in &frames {
        let e = step_with(
            &f.frame,
            &config.thresholds,
            &model,
            &config.geometry,
            config.features,
        )?;
        let s = basic_stats(f.frame.voltages());
        let truth = f.frame.meta.and_then(|m| m.true_pose);
        if e.pose.is_some() && e.pose == truth {
            recognized += 1;
        }
        csv.write_record([
            format!("{}", f.position),
            format!("{:.4}", s.sd),
            format!("{:.4}", s.max),
            format!("{:.4}", s.min),
            format!("{:.4}", s.diff),
            match e.gate {
                GateDecision::NoGesture => "no_gesture",
                GateDecision::GestureCandidate => "gesture",
            }
            .to_string(),
            match e.mode_decision {
                ModeDecision::StayPassive => "passive",
                ModeDecision::SwitchToActive => "active",
            }
            .to_string(),
            e.pose.map_or_else(String::new, |p| p.code().to_string()),
            e.cog.map_or_else(String::new, |c| format!("{c:.4}")),
            e.saturation_alarm.to_string(),
            truth.map_or_else(String::new, |p| p.code().to_string()),
        ])?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()?;
    Ok(format!(
        "{kind} sweep: {} positions, pose recognized at {recognized}\n",
        frames.len()
    ))
}

pub struct RocOutcome {
    pub curve: Vec<RocPoint>,
    pub optimum: RocPoint,
}

impl RocOutcome {
    pub fn summary(&self) -> String {
        let o = &self.optimum;
        format!(
            "points: {}\noptimal threshold: {:.2} V\nsensitivity: {:.4}\nspecificity: {:.4}\naccuracy: {:.4}\ndistance: {:.4}\n",
            self.curve.len(),
            o.threshold,
            o.sensitivity,
            o.specificity,
            o.accuracy(),
            o.distance()
        )
    }
}

pub fn roc_from_scores(scores: &[ScoredSample]) -> Result<RocOutcome> {
    let curve = roc_sweep(scores, SweepRange::default())?;
    let optimum = optimal_point(&curve)?;
    Ok(RocOutcome { curve, optimum })
}

pub fn cmd_roc(scores_path: &Path, out: &Path) -> Result<RocOutcome> {
    let rows = io::read_scores(open(scores_path)?)?;
    let scores: Vec<ScoredSample> = rows.iter().map(|r| r.sample).collect();
    let outcome = roc_from_scores(&scores)?;
    let mut w = create(out)?;
    write_curve_csv(&outcome.curve, &mut w)?;
    w.flush()?;
    Ok(outcome)
}

/// Metrics for confusion counts given directly as `tp, fn, fp, tn`.
pub fn cmd_metrics(counts: [u64; 4]) -> Result<String> {
    let [tp, fn_, fp, tn] = counts;
    let m = confusion_metrics(tp, fn_, fp, tn)?;
    Ok(format!(
        "sensitivity: {:.2}%\nspecificity: {:.2}%\naccuracy: {:.2}%\n",
        m.sensitivity * 100.0,
        m.specificity * 100.0,
        m.accuracy * 100.0
    ))
}

pub fn cmd_power(config: &Config, out: Option<&Path>) -> Result<(PowerReport, String)> {
    let report = power_report(&config.power)?;
    let mut buf = Vec::new();
    write_report_csv(&report, &mut buf)?;
    let text = String::from_utf8(buf).expect("report is ASCII");
    if let Some(p) = out {
        std::fs::write(p, &text)?;
    }
    Ok((report, text))
}

/// One frame of the configured scene, as a single CSV-like line.
pub fn cmd_render(config: &Config, mode: Mode, seed: u64) -> Result<String> {
    let f = render(&config.scene(seed), mode);
    let v: Vec<String> = f.voltages().iter().map(|v| format!("{v:.4}")).collect();
    Ok(format!("{mode},{}\n", v.join(",")))
}

/// Collects labeled frame maxima for threshold tuning.
///
/// The configured 2FJ scene is swept in azimuth and elevation at every
/// configured lux level and direct fraction. A position counts as bright when
/// the passive model recognizes the pose there and as dark otherwise.
pub fn gen_scores(config: &Config, model: &PoseModel, seed: u64) -> Result<Vec<ScoreRow>> {
    if model.mode != Mode::Passive {
        return Err(ControllerError::ModelModeMismatch {
            model: model.mode,
            frame: Mode::Passive,
        }
        .into());
    }
    let mut rows = Vec::new();
    let mut scene_index = 0u64;
    for &lux in &config.scores.lux_levels {
        for &k in &config.scores.direct_fractions {
            let mut scene = config.scene(crate::optics::derive_seed(seed, scene_index));
            scene_index += 1;
            scene.light.lux = lux;
            scene.light.direct_fraction = k;
            let pose = PoseClass::TwoFingersJoined;
            scene.obstacle = Some(crate::optics::Obstacle {
                pose,
                width_mm: config.scene.pose_widths.of(pose),
                lateral_offset_cm: 0.0,
                distance_cm: config.scores.distance_cm,
                height_cm: config.scene.height_cm,
            });
            scene.check()?;
            let frames = sweep_phi(&scene, Mode::Passive)?
                .into_iter()
                .chain(sweep_theta(&scene, Mode::Passive)?);
            for f in frames {
                let e = step_with(
                    &f.frame,
                    &config.thresholds,
                    model,
                    &config.geometry,
                    config.features,
                )?;
                let label = if e.pose == Some(pose) {
                    LightLabel::Bright
                } else {
                    LightLabel::Dark
                };
                let meta = f.frame.meta.unwrap_or_default();
                rows.push(ScoreRow {
                    sample: ScoredSample::new(f.frame.rawmax(), label),
                    lux: Some(lux),
                    phi_deg: Some(meta.phi_deg),
                    theta_deg: Some(meta.theta_deg),
                });
            }
        }
    }
    Ok(rows)
}

pub fn cmd_gen_scores(config: &Config, model_path: &Path, seed: u64, out: &Path) -> Result<String> {
    let model = read_model(model_path)?;
    let rows = gen_scores(config, &model, seed)?;
    let mut w = create(out)?;
    io::write_scores(&rows, &mut w)?;
    w.flush()?;
    let dark = rows
        .iter()
        .filter(|r| r.sample.label == LightLabel::Dark)
        .count();
    Ok(format!(
        "scores: {} ({} dark, {} bright)\n",
        rows.len(),
        dark,
        rows.len() - dark
    ))
}
