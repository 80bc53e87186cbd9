//! Duty-cycled current and power budget of the optical front end.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("settling time must be positive and shorter than the cycle period")]
    DegenerateTiming,
    #[error("active current must exceed passive current, both positive")]
    InvalidOrdering,
    #[error("power parameters must be positive")]
    InvalidParams,
}

/// Measured single-photodiode current at 100 % duty for one light condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentRow {
    pub condition: String,
    pub lux: f64,
    pub single_pd_ma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerParams {
    pub n_pd: u32,
    pub settling_time_us: f64,
    pub cycle_period_ms: f64,
    pub supply_voltage: f64,
    pub pd_current_table: Vec<CurrentRow>,
    /// Rounded typical single-photodiode current behind the passive total, mA.
    pub nominal_pd_ma: f64,
    /// Whole active-mode current (photodiodes, LEDs, controller), mA.
    pub active_total_ma: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        let row = |condition: &str, lux, single_pd_ma| CurrentRow {
            condition: condition.to_string(),
            lux,
            single_pd_ma,
        };
        Self {
            n_pd: 8,
            settling_time_us: 375.0,
            cycle_period_ms: 25.0,
            supply_voltage: 5.0,
            pd_current_table: vec![
                row("dark", 0.0, 0.959),
                row("strong", 872.0, 1.125),
                row("stronger", 2000.0, 1.235),
                row("direct sun", 33500.0, 1.041),
            ],
            nominal_pd_ma: 1.1,
            active_total_ma: 1.982,
        }
    }
}

impl PowerParams {
    pub fn check(&self) -> Result<(), PowerError> {
        duty_factor(self.settling_time_us, self.cycle_period_ms)?;
        let positive = self.n_pd > 0
            && self.supply_voltage > 0.0
            && self.nominal_pd_ma > 0.0
            && self.active_total_ma > 0.0
            && !self.pd_current_table.is_empty()
            && self.pd_current_table.iter().all(|r| r.single_pd_ma > 0.0);
        if positive {
            Ok(())
        } else {
            Err(PowerError::InvalidParams)
        }
    }

    pub fn duty(&self) -> Result<f64, PowerError> {
        duty_factor(self.settling_time_us, self.cycle_period_ms)
    }

    /// Passive-mode total: the photodiodes alone at the nominal current, mA.
    pub fn passive_total_ma(&self) -> Result<f64, PowerError> {
        let (ua, _) = pd_budget(
            self.nominal_pd_ma,
            self.n_pd,
            self.duty()?,
            self.supply_voltage,
        );
        Ok(ua / 1000.0)
    }

    pub fn table_average_ma(&self) -> f64 {
        let t = &self.pd_current_table;
        t.iter().map(|r| r.single_pd_ma).sum::<f64>() / t.len() as f64
    }
}

/// Fraction of each cycle the optical elements are powered.
pub fn duty_factor(settling_time_us: f64, cycle_period_ms: f64) -> Result<f64, PowerError> {
    let period_us = cycle_period_ms * 1000.0;
    if !(settling_time_us > 0.0) || !(settling_time_us < period_us) {
        return Err(PowerError::DegenerateTiming);
    }
    Ok(settling_time_us / period_us)
}

/// Total photodiode current (µA) and power (µW) at duty factor `duty`.
pub fn pd_budget(single_pd_ma: f64, n_pd: u32, duty: f64, supply_voltage: f64) -> (f64, f64) {
    let current_ua = single_pd_ma * 1000.0 * f64::from(n_pd) * duty;
    (current_ua, current_ua * supply_voltage)
}

/// Relative saving of passive over active operation, percent.
pub fn mode_savings(active_ma: f64, passive_ma: f64) -> Result<f64, PowerError> {
    if !(passive_ma > 0.0) || !(active_ma > passive_ma) {
        return Err(PowerError::InvalidOrdering);
    }
    Ok(100.0 * (active_ma - passive_ma) / active_ma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetRow {
    pub condition: String,
    pub lux: Option<f64>,
    pub single_pd_ma: f64,
    pub total_ua: f64,
    pub total_uw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub duty: f64,
    /// Table rows followed by the average row.
    pub rows: Vec<BudgetRow>,
    pub passive_total_ma: f64,
    pub active_total_ma: f64,
    pub savings_percent: f64,
}

pub fn power_report(params: &PowerParams) -> Result<PowerReport, PowerError> {
    params.check()?;
    let duty = params.duty()?;
    let budget = |condition: &str, lux, ma| {
        let (total_ua, total_uw) = pd_budget(ma, params.n_pd, duty, params.supply_voltage);
        BudgetRow {
            condition: condition.to_string(),
            lux,
            single_pd_ma: ma,
            total_ua,
            total_uw,
        }
    };
    let mut rows: Vec<BudgetRow> = params
        .pd_current_table
        .iter()
        .map(|r| budget(&r.condition, Some(r.lux), r.single_pd_ma))
        .collect();
    rows.push(budget("average", None, params.table_average_ma()));
    let passive_total_ma = params.passive_total_ma()?;
    Ok(PowerReport {
        duty,
        rows,
        passive_total_ma,
        active_total_ma: params.active_total_ma,
        savings_percent: mode_savings(params.active_total_ma, passive_total_ma)?,
    })
}

pub const POWER_CSV_VERSION: &str = "# optogest-power v1";

pub fn write_report_csv<W: Write>(report: &PowerReport, out: W) -> Result<(), csv::Error> {
    let mut out = out;
    writeln!(out, "{POWER_CSV_VERSION}")?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["condition", "lux", "single_pd_ma", "total_ua", "total_uw"])?;
        for r in &report.rows {
            w.write_record([
                r.condition.clone(),
                r.lux.map_or_else(String::new, |l| format!("{l}")),
                format!("{:.3}", r.single_pd_ma),
                format!("{:.2}", r.total_ua),
                format!("{:.2}", r.total_uw),
            ])?;
        }
        w.flush()?;
    }
    writeln!(out, "# duty={}", report.duty)?;
    writeln!(out, "# passive_total_ma={:.3}", report.passive_total_ma)?;
    writeln!(out, "# active_total_ma={:.3}", report.active_total_ma)?;
    writeln!(out, "# mode_savings_percent={:.2}", report.savings_percent)?;
    Ok(())
}
