//! File formats: dataset, score and sweep CSVs, and the JSON model file.
//!
//! Every CSV starts with a `# optogest-<kind> v<N>` line; readers refuse any
//! other kind or version.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::classifier::{LightLabel, PoseModel, ScoredSample};
use crate::frame::{validate_frame, FrameMeta, Mode, PoseClass, SensorGeometry, PD_COUNT};
use crate::optics::LabeledFrame;
use crate::{Error, Result};

pub const DATASET_VERSION: &str = "# optogest-dataset v1";
pub const SCORES_VERSION: &str = "# optogest-scores v1";
pub const SWEEP_VERSION: &str = "# optogest-sweep v1";
pub const MODEL_FORMAT: &str = "optogest-model v1";

const DATASET_HEADER: [&str; 15] = [
    "v0",
    "v1",
    "v2",
    "v3",
    "v4",
    "v5",
    "v6",
    "v7",
    "mode",
    "lux",
    "phi_deg",
    "theta_deg",
    "d_cm",
    "width_mm",
    "label",
];
const SCORES_HEADER: [&str; 5] = ["rawmax", "label", "lux", "phi_deg", "theta_deg"];

/// Splits off and checks the version line, returning the remaining text.
fn versioned_body<R: Read>(input: R, version: &str) -> Result<String> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != version {
        return Err(Error::Schema(format!(
            "expected `{version}` on the first line, found `{}`",
            first.trim_end()
        )));
    }
    let mut rest = String::new();
    reader.read_to_string(&mut rest)?;
    Ok(rest)
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Schema(format!(
            "header `{}` does not match `{}`",
            found.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(field: &str, what: &str, line: usize) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Data(format!("line {line}: bad {what} `{field}`")))
}

fn opt_f64(field: &str, what: &str, line: usize) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse(field, what, line).map(Some)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_dataset<W: Write>(rows: &[LabeledFrame], mut out: W) -> Result<()> {
    writeln!(out, "{DATASET_VERSION}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DATASET_HEADER)?;
    for r in rows {
        let meta = r.frame.meta.unwrap_or_default();
        let mut rec: Vec<String> = r
            .frame
            .voltages()
            .iter()
            .map(|v| format!("{v:.4}"))
            .collect();
        rec.push(r.frame.mode.to_string());
        rec.push(meta.lux.to_string());
        rec.push(meta.phi_deg.to_string());
        rec.push(meta.theta_deg.to_string());
        rec.push(fmt_opt(meta.distance_cm));
        rec.push(fmt_opt(meta.width_mm));
        rec.push(r.label.code().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R, geometry: &SensorGeometry) -> Result<Vec<LabeledFrame>> {
    let body = versioned_body(input, DATASET_VERSION)?;
    let mut r = csv::Reader::from_reader(body.as_bytes());
    check_header(r.headers()?, &DATASET_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 3;
        if rec.len() != DATASET_HEADER.len() {
            return Err(Error::Data(format!(
                "line {line}: expected {} fields",
                DATASET_HEADER.len()
            )));
        }
        let mut v = [0.0; PD_COUNT];
        for (k, x) in v.iter_mut().enumerate() {
            *x = parse(&rec[k], "voltage", line)?;
        }
        let mode: Mode = parse(&rec[8], "mode", line)?;
        let label: PoseClass = parse(&rec[14], "label", line)?;
        let meta = FrameMeta {
            lux: parse(&rec[9], "lux", line)?,
            phi_deg: parse(&rec[10], "phi_deg", line)?,
            theta_deg: parse(&rec[11], "theta_deg", line)?,
            distance_cm: opt_f64(&rec[12], "d_cm", line)?,
            width_mm: opt_f64(&rec[13], "width_mm", line)?,
            true_pose: Some(label),
        };
        let frame = validate_frame(&v, mode, geometry)
            .map_err(|e| Error::Data(format!("line {line}: {e}")))?
            .with_meta(meta);
        rows.push(LabeledFrame { frame, label });
    }
    if rows.is_empty() {
        return Err(Error::Data("dataset has no rows".into()));
    }
    Ok(rows)
}

/// A light-condition score with the scene it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRow {
    pub sample: ScoredSample,
    pub lux: Option<f64>,
    pub phi_deg: Option<f64>,
    pub theta_deg: Option<f64>,
}

pub fn write_scores<W: Write>(rows: &[ScoreRow], mut out: W) -> Result<()> {
    writeln!(out, "{SCORES_VERSION}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCORES_HEADER)?;
    for r in rows {
        w.write_record([
            format!("{:.4}", r.sample.rawmax),
            r.sample.label.to_string(),
            fmt_opt(r.lux),
            fmt_opt(r.phi_deg),
            fmt_opt(r.theta_deg),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a score file. The three scene columns may be left empty.
pub fn read_scores<R: Read>(input: R) -> Result<Vec<ScoreRow>> {
    let body = versioned_body(input, SCORES_VERSION)?;
    let mut r = csv::Reader::from_reader(body.as_bytes());
    check_header(r.headers()?, &SCORES_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 3;
        if rec.len() != SCORES_HEADER.len() {
            return Err(Error::Data(format!(
                "line {line}: expected {} fields",
                SCORES_HEADER.len()
            )));
        }
        let rawmax: f64 = parse(&rec[0], "rawmax", line)?;
        if !rawmax.is_finite() {
            return Err(Error::Data(format!("line {line}: rawmax must be finite")));
        }
        let label: LightLabel = parse(&rec[1], "label", line)?;
        rows.push(ScoreRow {
            sample: ScoredSample::new(rawmax, label),
            lux: opt_f64(&rec[2], "lux", line)?,
            phi_deg: opt_f64(&rec[3], "phi_deg", line)?,
            theta_deg: opt_f64(&rec[4], "theta_deg", line)?,
        });
    }
    Ok(rows)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    model: PoseModel,
}

pub fn model_to_json(model: &PoseModel) -> Result<String> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        model: model.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).map_err(|e| Error::Data(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_json(text: &str) -> Result<PoseModel> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("model file: {e}")))?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(MODEL_FORMAT) => {}
        other => {
            return Err(Error::Schema(format!("unsupported model format {other:?}")));
        }
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| Error::Schema(format!("model file: {e}")))?;
    let m = file.model;
    let p = &m.params;
    let consistent = m.features.len() == p.input_dim
        && p.w1.len() == p.input_dim * p.hidden_dim
        && p.b1.len() == p.hidden_dim
        && p.w2.len() == crate::classifier::mlp::N_CLASSES * p.hidden_dim
        && p.b2.len() == crate::classifier::mlp::N_CLASSES
        && m.standardizer.mean.len() == p.input_dim
        && m.standardizer.sd.len() == p.input_dim
        && m.standardizer.sd.iter().all(|s| *s > 0.0);
    if !consistent {
        return Err(Error::Schema("model dimensions are inconsistent".into()));
    }
    Ok(m)
}
