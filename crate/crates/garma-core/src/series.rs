//! Observed data container: counts plus per-time covariate rows.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A count series with its covariate matrix.
///
/// Row `i` (0-based) holds the observation at time `t = time_origin + i + 1`,
/// so a default origin of 0 gives the conventional `t = 1..n` indexing used
/// by the harmonic covariate generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    counts: Vec<u64>,
    covariates: Vec<f64>, // row-major, len = counts.len() * k
    k: usize,
    time_origin: i64,
}

impl SeriesFrame {
    pub fn new(counts: Vec<u64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != counts.len() {
            return Err(Error::InvalidSpec(format!(
                "covariate rows ({}) do not match count length ({})",
                rows.len(),
                counts.len()
            )));
        }
        let k = rows.first().map_or(0, Vec::len);
        let mut covariates = Vec::with_capacity(counts.len() * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidSpec(format!(
                    "covariate row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    k
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "covariate row {} contains a non-finite value",
                    i + 1
                )));
            }
            covariates.extend_from_slice(row);
        }
        Ok(SeriesFrame { counts, covariates, k, time_origin: 0 })
    }

    /// Builds from row-major storage without per-row allocation.
    pub fn from_flat(counts: Vec<u64>, k: usize, covariates: Vec<f64>) -> Result<Self> {
        if covariates.len() != counts.len() * k {
            return Err(Error::InvalidSpec(format!(
                "flat covariate length {} does not match {} rows of width {}",
                covariates.len(),
                counts.len(),
                k
            )));
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("covariates contain a non-finite value".into()));
        }
        Ok(SeriesFrame { counts, covariates, k, time_origin: 0 })
    }

    pub fn with_time_origin(mut self, origin: i64) -> Self {
        self.time_origin = origin;
        self
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn covariate_dim(&self) -> usize {
        self.k
    }

    pub fn time_origin(&self) -> i64 {
        self.time_origin
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    #[inline]
    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.k..(i + 1) * self.k]
    }

    /// Appends one observation.
    pub fn push(&mut self, count: u64, row: &[f64]) -> Result<()> {
        if row.len() != self.k {
            return Err(Error::InvalidSpec(format!(
                "appended row has {} entries, expected {}",
                row.len(),
                self.k
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("appended row contains a non-finite value".into()));
        }
        self.counts.push(count);
        self.covariates.extend_from_slice(row);
        Ok(())
    }

    /// Overwrites the count at row `i`, leaving covariates untouched. Used by
    /// the forecaster to sweep candidate future values in place.
    pub fn set_count(&mut self, i: usize, count: u64) {
        self.counts[i] = count;
    }

    /// A copy containing only the first `len` observations.
    pub fn prefix(&self, len: usize) -> SeriesFrame {
        assert!(len <= self.len(), "prefix length exceeds series length");
        SeriesFrame {
            counts: self.counts[..len].to_vec(),
            covariates: self.covariates[..len * self.k].to_vec(),
            k: self.k,
            time_origin: self.time_origin,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_row_count_mismatch() {
        let err = SeriesFrame::new(vec![1, 2], vec![vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = SeriesFrame::new(vec![1, 2], vec![vec![1.0], vec![1.0, 2.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
    }

    #[test]
    fn rejects_non_finite_covariates() {
        let err = SeriesFrame::new(vec![1], vec![vec![f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
    }

    #[test]
    fn prefix_and_push_round_trip() {
        let mut frame = SeriesFrame::new(vec![3, 0, 5], vec![vec![1.0], vec![1.0], vec![1.0]])
            .unwrap();
        let head = frame.prefix(2);
        assert_eq!(head.counts(), &[3, 0]);
        frame.push(7, &[1.0]).unwrap();
        assert_eq!(frame.len(), 4);
        assert_eq!(frame.count(3), 7);
        frame.set_count(3, 9);
        assert_eq!(frame.count(3), 9);
    }
}
