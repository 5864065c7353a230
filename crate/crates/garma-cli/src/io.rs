//! CSV ingestion and export.
//!
//! Series files are comma-separated with a required header row:
//! `time,count[,name1,name2,...]`. Lines starting with `#` are comments.
//! The count column must hold non-negative integers; extra columns are read
//! as covariates in file order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use garma_core::SeriesFrame;

/// A parsed series file: counts with their time stamps and any covariate
/// columns that followed them.
#[derive(Debug, Clone)]
pub struct LoadedSeries {
    pub times: Vec<i64>,
    pub counts: Vec<u64>,
    /// One row per observation; empty rows when the file had no extra columns.
    pub covariates: Vec<Vec<f64>>,
    pub covariate_names: Vec<String>,
}

impl LoadedSeries {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn has_covariates(&self) -> bool {
        !self.covariate_names.is_empty()
    }

    /// Frame using the covariate columns from the file.
    pub fn frame_from_columns(&self) -> Result<SeriesFrame> {
        if !self.has_covariates() {
            bail!("series file has no covariate columns; pass a covariate schema instead");
        }
        let frame = SeriesFrame::new(self.counts.clone(), self.covariates.clone())?;
        Ok(frame.with_time_origin(self.times.first().map_or(0, |t| t - 1)))
    }
}

pub fn read_series(path: &Path) -> Result<LoadedSeries> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    parse_series(&text).with_context(|| format!("{}", path.display()))
}

/// Parses series text; error messages carry 1-based line numbers.
pub fn parse_series(text: &str) -> Result<LoadedSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers().context("cannot read the header row")?.clone();
    if headers.len() < 2
        || !headers[0].eq_ignore_ascii_case("time")
        || !headers[1].eq_ignore_ascii_case("count")
    {
        bail!("header must start with `time,count`, got `{}`", headers.iter().collect::<Vec<_>>().join(","));
    }

    let mut out = LoadedSeries {
        times: Vec::new(),
        counts: Vec::new(),
        covariates: Vec::new(),
        covariate_names: headers.iter().skip(2).map(str::to_string).collect(),
    };

    for record in reader.records() {
        let record = record.context("malformed CSV record")?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            bail!(
                "line {line}: expected {} fields per the header, got {}",
                headers.len(),
                record.len()
            );
        }
        let time: i64 = record[0]
            .parse()
            .with_context(|| format!("line {line}: bad time value `{}`", &record[0]))?;
        let count: u64 = record[1].parse().map_err(|_| {
            anyhow::anyhow!(
                "line {line}: count must be a non-negative integer, got `{}`",
                &record[1]
            )
        })?;
        let mut row = Vec::with_capacity(record.len() - 2);
        for (name, field) in out.covariate_names.iter().zip(record.iter().skip(2)) {
            let v: f64 = field.parse().with_context(|| {
                format!("line {line}: bad value `{field}` in column `{name}`")
            })?;
            row.push(v);
        }
        out.times.push(time);
        out.counts.push(count);
        out.covariates.push(row);
    }

    if out.is_empty() {
        bail!("no observations after the header");
    }
    Ok(out)
}

/// Writes a simulated series with its seed echoed as a comment so the file
/// can be regenerated.
pub fn write_series(out: &mut dyn Write, frame: &SeriesFrame, seed: u64) -> Result<()> {
    writeln!(out, "# seed: {seed}")?;
    write!(out, "time,count")?;
    for j in 0..frame.covariate_dim() {
        write!(out, ",x{j}")?;
    }
    writeln!(out)?;
    for i in 0..frame.len() {
        write!(out, "{},{}", frame.time_origin() + i as i64 + 1, frame.count(i))?;
        for v in frame.row(i) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    let file =
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create_file(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}
