//! Mode-specific normalization into a common non-negative pattern.
//!
//! Active frames are reflections: subtracting the frame minimum leaves a bump
//! with a zero baseline. Passive frames are shadows: inverting and shifting
//! turns the dip into a bump of the same shape, `max(raw) - raw[i]`.

use thiserror::Error;

use crate::frame::{Mode, NormalizedFrame, RawDataFrame, PD_COUNT};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("expected a {expected} frame, got a {actual} frame")]
    ModeMismatch { expected: Mode, actual: Mode },
}

/// `values[i] - min(values)`.
pub fn shift_to_zero_min(values: &[f64; PD_COUNT]) -> [f64; PD_COUNT] {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.map(|v| v - min)
}

/// `max(values) - values[i]`.
pub fn invert_to_zero_min(values: &[f64; PD_COUNT]) -> [f64; PD_COUNT] {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.map(|v| max - v)
}

pub fn normalize_active(raw: &RawDataFrame) -> Result<NormalizedFrame, NormalizeError> {
    if raw.mode != Mode::Active {
        return Err(NormalizeError::ModeMismatch {
            expected: Mode::Active,
            actual: raw.mode,
        });
    }
    Ok(NormalizedFrame {
        values: shift_to_zero_min(raw.voltages()),
        rawmax: raw.rawmax(),
        source_mode: Mode::Active,
    })
}

pub fn normalize_passive(raw: &RawDataFrame) -> Result<NormalizedFrame, NormalizeError> {
    if raw.mode != Mode::Passive {
        return Err(NormalizeError::ModeMismatch {
            expected: Mode::Passive,
            actual: raw.mode,
        });
    }
    Ok(NormalizedFrame {
        values: invert_to_zero_min(raw.voltages()),
        rawmax: raw.rawmax(),
        source_mode: Mode::Passive,
    })
}

/// Dispatches on the frame's own mode.
pub fn normalize(raw: &RawDataFrame) -> NormalizedFrame {
    match raw.mode {
        Mode::Active => normalize_active(raw),
        Mode::Passive => normalize_passive(raw),
    }
    .expect("mode dispatch always matches")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{validate_frame, SensorGeometry};
    use proptest::prelude::*;

    fn frame(v: [f64; 8], mode: Mode) -> RawDataFrame {
        validate_frame(&v, mode, &SensorGeometry::default()).unwrap()
    }

    fn assert_close(a: &[f64; 8], b: &[f64; 8]) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    fn pop_sd(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    }

    #[test]
    fn active_subtracts_minimum() {
        let n = normalize_active(&frame(
            [1.0, 1.2, 2.0, 3.0, 2.0, 1.2, 1.0, 1.0],
            Mode::Active,
        ))
        .unwrap();
        assert_close(&n.values, &[0.0, 0.2, 1.0, 2.0, 1.0, 0.2, 0.0, 0.0]);
        assert_eq!(n.rawmax, 3.0);
        assert_eq!(n.source_mode, Mode::Active);
    }

    #[test]
    fn active_constant_and_zero_frames() {
        let n = normalize_active(&frame([1.7; 8], Mode::Active)).unwrap();
        assert_eq!(n.values, [0.0; 8]);
        assert_eq!(n.rawmax, 1.7);
        let n = normalize_active(&frame([0.0; 8], Mode::Active)).unwrap();
        assert_eq!(n.values, [0.0; 8]);
        assert_eq!(n.rawmax, 0.0);
    }

    #[test]
    fn passive_inverts_the_shadow() {
        let n = normalize_passive(&frame(
            [3.0, 3.0, 2.5, 1.8, 2.5, 3.0, 3.0, 3.0],
            Mode::Passive,
        ))
        .unwrap();
        assert_close(&n.values, &[0.0, 0.0, 0.5, 1.2, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(n.rawmax, 3.0);
    }

    #[test]
    fn passive_flat_and_single_dip() {
        let n = normalize_passive(&frame([2.2; 8], Mode::Passive)).unwrap();
        assert_eq!(n.values, [0.0; 8]);
        let mut v = [2.0; 8];
        v[4] = 1.5;
        let n = normalize_passive(&frame(v, Mode::Passive)).unwrap();
        let mut expected = [0.0; 8];
        expected[4] = 0.5;
        assert_close(&n.values, &expected);
    }

    #[test]
    fn mode_mismatch() {
        let f = frame([1.0; 8], Mode::Passive);
        assert!(matches!(
            normalize_active(&f),
            Err(NormalizeError::ModeMismatch { .. })
        ));
        let f = frame([1.0; 8], Mode::Active);
        assert!(normalize_passive(&f).is_err());
    }

    fn volts() -> impl Strategy<Value = [f64; 8]> {
        prop::array::uniform8(0.0f64..=3.8)
    }

    proptest! {
        #[test]
        fn normalized_is_nonnegative_with_zero_min(v in volts(), passive in any::<bool>()) {
            let mode = if passive { Mode::Passive } else { Mode::Active };
            let n = normalize(&frame(v, mode));
            prop_assert!(n.values.iter().all(|&x| x >= 0.0));
            prop_assert_eq!(n.values.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
            prop_assert!(n.rawmax >= 0.0 && n.rawmax <= 3.8);
        }

        #[test]
        fn sd_is_preserved(v in volts(), passive in any::<bool>()) {
            let mode = if passive { Mode::Passive } else { Mode::Active };
            let n = normalize(&frame(v, mode));
            prop_assert!((pop_sd(&n.values) - pop_sd(&v)).abs() < 1e-12);
        }

        #[test]
        fn passive_equals_active_of_reflection(v in volts()) {
            let passive = normalize_passive(&frame(v, Mode::Passive)).unwrap();
            let reflected = v.map(|x| 3.8 - x);
            let active = normalize_active(&frame(reflected, Mode::Active)).unwrap();
            for (a, b) in passive.values.iter().zip(&active.values) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn active_is_idempotent(v in volts()) {
            let once = shift_to_zero_min(&v);
            prop_assert_eq!(shift_to_zero_min(&once), once);
        }
    }
}
