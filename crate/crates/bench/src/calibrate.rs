use std::time::Duration;

use serde::Serialize;

pub const MIN_PROBE: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub hash_rate: f64,
    pub difficulty_bits: u32,
    pub expected_s: f64,
    pub target_low_s: f64,
    pub target_high_s: f64,
}

impl Calibration {
    pub fn in_range(&self) -> bool {
        (self.target_low_s..=self.target_high_s).contains(&self.expected_s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrateError {
    #[error("probe of {0:?} is shorter than the 100 ms minimum")]
    ProbeTooShort(Duration),
    #[error("target range needs 0 <= low < high, got {0}..{1}")]
    BadRange(f64, f64),
}

/// Difficulty whose expected solve time `2^d / H` lies closest to the
/// geometric mean of `[low_s, high_s]`.
pub fn choose_difficulty(hash_rate: f64, low_s: f64, high_s: f64) -> Calibration {
    let target = (low_s * high_s).sqrt();
    let expected = |d: u32| 2f64.powi(d as i32) / hash_rate;
    let difficulty_bits = (0..=64u32)
        .min_by(|a, b| {
            let da = (expected(*a) - target).abs();
            let db = (expected(*b) - target).abs();
            da.total_cmp(&db)
        })
        .expect("non-empty range");
    Calibration {
        hash_rate,
        difficulty_bits,
        expected_s: expected(difficulty_bits),
        target_low_s: low_s,
        target_high_s: high_s,
    }
}

pub fn calibrate_difficulty(low_s: f64, high_s: f64, probe: Duration) -> Result<Calibration, CalibrateError> {
    if !(low_s >= 0.0 && low_s < high_s) {
        return Err(CalibrateError::BadRange(low_s, high_s));
    }
    if probe < MIN_PROBE {
        return Err(CalibrateError::ProbeTooShort(probe));
    }
    let h = cadchain_core::pow::measure_hash_rate(probe);
    Ok(choose_difficulty(h, low_s, high_s))
}

/// Parses `1.1..2.8`.
pub fn parse_target(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text.split_once("..").ok_or_else(|| format!("expected LOW..HIGH, got {text:?}"))?;
    let low = a.trim().parse::<f64>().map_err(|e| format!("low bound: {e}"))?;
    let high = b.trim().parse::<f64>().map_err(|e| format!("high bound: {e}"))?;
    Ok((low, high))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_the_power_of_two_nearest_the_geometric_mean() {
        // 2^20 / 2^19 = 2 s; geometric mean of 1.1 and 2.8 is ~1.755 s.
        let c = choose_difficulty(2f64.powi(19), 1.1, 2.8);
        assert_eq!(c.difficulty_bits, 20);
        assert!(c.in_range());
        // 1.755 s sits between 1.02 s (d = 20) and 2.05 s (d = 21).
        assert_eq!(choose_difficulty(1000.0 * 1024.0, 1.1, 2.8).difficulty_bits, 21);
    }

    #[test]
    fn zero_target_gives_zero_difficulty() {
        assert_eq!(choose_difficulty(1e6, 0.0, 0.001).difficulty_bits, 0);
    }

    #[test]
    fn rejects_short_probes_and_bad_ranges() {
        assert_eq!(
            calibrate_difficulty(1.1, 2.8, Duration::from_millis(99)),
            Err(CalibrateError::ProbeTooShort(Duration::from_millis(99)))
        );
        assert!(calibrate_difficulty(2.8, 1.1, MIN_PROBE).is_err());
        assert_eq!(parse_target("1.1..2.8"), Ok((1.1, 2.8)));
        assert!(parse_target("1.1-2.8").is_err());
    }
}
