//! Deterministic covariate designs: intercept, optional linear trend, and
//! cosine/sine pairs for seasonal periods.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::series::SeriesFrame;

/// Description of a harmonic design, reusable for generating future rows.
///
/// Column order is fixed: intercept, then the trend (when present), then
/// `cos(2*pi*t/P), sin(2*pi*t/P)` for each period in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSchema {
    pub periods: Vec<u32>,
    pub include_trend: bool,
    pub trend_scale: f64,
}

impl HarmonicSchema {
    pub fn new(periods: Vec<u32>, include_trend: bool, trend_scale: f64) -> Result<Self> {
        if periods.iter().any(|&p| p == 0) {
            return Err(Error::InvalidSpec("harmonic period must be positive".into()));
        }
        if include_trend && !trend_scale.is_finite() {
            return Err(Error::InvalidSpec(format!("trend scale {trend_scale} is not finite")));
        }
        Ok(HarmonicSchema { periods, include_trend, trend_scale })
    }

    /// Seasonal pairs only, no trend.
    pub fn seasonal(periods: Vec<u32>) -> Result<Self> {
        Self::new(periods, false, 1.0)
    }

    pub fn dim(&self) -> usize {
        1 + usize::from(self.include_trend) + 2 * self.periods.len()
    }

    /// The covariate row at absolute time `t`.
    pub fn row(&self, t: i64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        out.push(1.0);
        if self.include_trend {
            out.push(t as f64 * self.trend_scale);
        }
        for &period in &self.periods {
            let angle = 2.0 * core::f64::consts::PI * t as f64 / period as f64;
            out.push(libm::cos(angle));
            out.push(libm::sin(angle));
        }
        out
    }

    /// Rows for times `origin+1 .. origin+n`.
    pub fn materialize(&self, n: usize, origin: i64) -> Vec<Vec<f64>> {
        (1..=n as i64).map(|i| self.row(origin + i)).collect()
    }

    /// Builds a frame by pairing counts with generated covariates.
    pub fn frame(&self, counts: Vec<u64>, origin: i64) -> Result<SeriesFrame> {
        let rows = self.materialize(counts.len(), origin);
        Ok(SeriesFrame::new(counts, rows)?.with_time_origin(origin))
    }
}

/// Convenience wrapper returning the design matrix rows directly.
pub fn harmonic_covariates(
    n: usize,
    origin: i64,
    periods: &[u32],
    include_trend: bool,
    trend_scale: f64,
) -> Result<Vec<Vec<f64>>> {
    let schema = HarmonicSchema::new(periods.to_vec(), include_trend, trend_scale)?;
    Ok(schema.materialize(n, origin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn known_angle_at_half_period() {
        // t = 6, P = 12: cos(pi) = -1, sin(pi) = 0
        let rows = harmonic_covariates(1, 5, &[12], false, 1.0).unwrap();
        assert_eq!(rows[0].len(), 3);
        assert!((rows[0][1] + 1.0).abs() < 1e-12);
        assert!(rows[0][2].abs() < 1e-12);
    }

    #[test]
    fn full_period_columns_sum_to_zero() {
        let rows = harmonic_covariates(12, 0, &[12], false, 1.0).unwrap();
        for col in 1..3 {
            let s: f64 = rows.iter().map(|r| r[col]).sum();
            assert!(s.abs() < 1e-10, "column {col} sums to {s}");
        }
    }

    #[test]
    fn six_column_trend_schema() {
        // intercept, t, cos/sin 12, cos/sin 6
        let schema = HarmonicSchema::new(vec![12, 6], true, 1.0).unwrap();
        assert_eq!(schema.dim(), 6);
        let row = schema.row(3);
        assert_eq!(row[0], 1.0);
        assert_eq!(row[1], 3.0);
        let a12 = 2.0 * core::f64::consts::PI * 3.0 / 12.0;
        let a6 = 2.0 * core::f64::consts::PI * 3.0 / 6.0;
        assert!((row[2] - libm::cos(a12)).abs() < 1e-15);
        assert!((row[3] - libm::sin(a12)).abs() < 1e-15);
        assert!((row[4] - libm::cos(a6)).abs() < 1e-15);
        assert!((row[5] - libm::sin(a6)).abs() < 1e-15);
    }

    #[test]
    fn zero_period_rejected() {
        assert!(HarmonicSchema::seasonal(vec![0]).is_err());
    }
}
