//! Datasets: CSV ingestion, pilot splitting and synthetic generation.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::rng;

/// Design matrix, response and column metadata.
///
/// Rows are observations. No intercept is implied; use [`Dataset::with_intercept`]
/// to prepend a constant column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    column_names: Vec<String>,
    response_name: String,
}

impl Dataset {
    pub fn new(
        x: DMatrix<f64>,
        y: DVector<f64>,
        column_names: Vec<String>,
        response_name: impl Into<String>,
    ) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyData);
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidShape("dataset needs at least one predictor".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if column_names.len() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} column names for {} columns",
                column_names.len(),
                x.ncols()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("dataset contains non-finite values".into()));
        }
        Ok(Self {
            x,
            y,
            column_names,
            response_name: response_name.into(),
        })
    }

    /// Build from row-major predictor values. Column names default to `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidShape("ragged rows".into()));
        }
        let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        Self::new(x, DVector::from_column_slice(y), default_names(d), "y")
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Copy of row `i` of X.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    /// Prepend a column of ones named `intercept`.
    pub fn with_intercept(&self) -> Self {
        let (n, d) = self.x.shape();
        let x = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { self.x[(i, j - 1)] });
        let mut names = Vec::with_capacity(d + 1);
        names.push("intercept".to_string());
        names.extend(self.column_names.iter().cloned());
        Self {
            x,
            y: self.y.clone(),
            column_names: names,
            response_name: self.response_name.clone(),
        }
    }

    /// Rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyData);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(Error::DimensionMismatch(format!(
                "row index {bad} out of range for {} rows",
                self.n()
            )));
        }
        let x = self.x.select_rows(indices);
        let y = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.y[i]));
        Ok(Self {
            x,
            y,
            column_names: self.column_names.clone(),
            response_name: self.response_name.clone(),
        })
    }
}

pub(crate) fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// Read a comma-separated file with a header row.
///
/// The response column becomes `y`; columns in `drop_names` are discarded and
/// the remaining columns form X in header order. Empty cells are an error.
pub fn load_csv(path: impl AsRef<Path>, response_name: &str, drop_names: &[String]) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, response_name, drop_names)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: Read>(reader: R, response_name: &str, drop_names: &[String]) -> Result<Dataset> {
    let table = read_table(reader)?;
    let col = |name: &str| {
        table
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let response_idx = col(response_name)?;
    let mut dropped = vec![false; table.header.len()];
    for name in drop_names {
        dropped[col(name)?] = true;
    }
    dropped[response_idx] = true;
    let keep: Vec<usize> = (0..table.header.len()).filter(|&j| !dropped[j]).collect();
    if keep.is_empty() {
        return Err(Error::InvalidShape("no predictor columns left".into()));
    }
    let n = table.rows.len();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let x = DMatrix::from_fn(n, keep.len(), |i, j| table.rows[i][keep[j]]);
    let y = DVector::from_fn(n, |i, _| table.rows[i][response_idx]);
    let names = keep.iter().map(|&j| table.header[j].clone()).collect();
    Dataset::new(x, y, names, response_name)
}

/// A fully numeric CSV table.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

/// Parse a header plus numeric rows. Row numbers in errors are 1-based data rows.
pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::InvalidShape("missing header row".into()));
    }
    let mut rows = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = k + 1;
        let mut values = Vec::with_capacity(header.len());
        for (j, cell) in record.iter().enumerate() {
            let column = header[j].clone();
            if cell.is_empty() {
                return Err(Error::Parse {
                    row: row_no,
                    column,
                    message: "missing value".into(),
                });
            }
            let v = f64::from_str(cell).map_err(|_| Error::Parse {
                row: row_no,
                column: column.clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    column,
                    message: format!("`{cell}` is not finite"),
                });
            }
            values.push(v);
        }
        rows.push(values);
    }
    Ok(Table { header, rows })
}

/// Write X columns followed by the response column, plus optional extra columns.
///
/// Values use Rust's shortest round-trip formatting, so reading the file back
/// reproduces every entry bit for bit.
pub fn write_csv_with<W: Write>(ds: &Dataset, extra: &[(&str, &[f64])], writer: W) -> Result<()> {
    for (name, col) in extra {
        if col.len() != ds.n() {
            return Err(Error::DimensionMismatch(format!(
                "extra column `{name}` has {} entries for {} rows",
                col.len(),
                ds.n()
            )));
        }
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.column_names.iter().map(String::as_str).collect();
    header.push(&ds.response_name);
    header.extend(extra.iter().map(|(n, _)| *n));
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..ds.n() {
        record.clear();
        record.extend(ds.x.row(i).iter().map(|v| v.to_string()));
        record.push(ds.y[i].to_string());
        record.extend(extra.iter().map(|(_, c)| c[i].to_string()));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_with(ds, &[], std::io::BufWriter::new(file))
}

/// Pilot split parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub pilot_fraction: f64,
    pub seed: u64,
}

/// Row indices (pilot, remainder), both sorted ascending.
///
/// The pilot holds `round(fraction * n)` rows: those with the smallest
/// per-row uniform keys drawn from the seed, which is a uniform draw without
/// replacement.
pub fn split_indices(n: usize, d: usize, spec: SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = split_count(n, spec.pilot_fraction)?;
    if k < d + 1 {
        return Err(Error::PilotTooSmall { rows: k, required: d + 1 });
    }
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "pilot fraction {} leaves no remainder rows",
            spec.pilot_fraction
        )));
    }
    Ok(keyed_split(n, k, spec.seed, rng::TAG_PILOT))
}

fn split_count(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} not in (0, 1)")));
    }
    Ok((fraction * n as f64).round() as usize)
}

fn keyed_split(n: usize, k: usize, seed: u64, tag: &str) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|i| (rng::uniform_at(seed, tag, i as u64), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut first: Vec<usize> = order[..k].iter().map(|&(_, i)| i).collect();
    let mut rest: Vec<usize> = order[k..].iter().map(|&(_, i)| i).collect();
    first.sort_unstable();
    rest.sort_unstable();
    (first, rest)
}

/// Split into (pilot, remainder).
pub fn split_pilot(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let (pilot, rest) = split_indices(ds.n(), ds.d(), spec)?;
    Ok((ds.select_rows(&pilot)?, ds.select_rows(&rest)?))
}

/// Split off a held-out evaluation set of `round(fraction * n)` rows.
pub fn split_holdout(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let k = split_count(ds.n(), fraction)?;
    if k == 0 || k >= ds.n() {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction {fraction} gives {k} of {} rows",
            ds.n()
        )));
    }
    let (held, rest) = keyed_split(ds.n(), k, seed, rng::TAG_HOLDOUT);
    Ok((ds.select_rows(&rest)?, ds.select_rows(&held)?))
}

/// Noise model for [`synth_regression`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    Gaussian,
    StudentT3,
    /// Normal with standard deviation `1 + ||x_i||`.
    Heteroskedastic,
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Noise::Gaussian => "gaussian",
            Noise::StudentT3 => "student_t3",
            Noise::Heteroskedastic => "heteroskedastic",
        })
    }
}

impl FromStr for Noise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Noise::Gaussian),
            "student_t3" | "student-t3" | "t3" => Ok(Noise::StudentT3),
            "heteroskedastic" => Ok(Noise::Heteroskedastic),
            other => Err(Error::InvalidArgument(format!("unknown noise model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub noise: Noise,
    pub seed: u64,
    /// Multiplies every noise draw; 0 gives noiseless responses.
    pub noise_scale: f64,
}

impl SynthSpec {
    pub fn new(n: usize, d: usize, noise: Noise, seed: u64) -> Self {
        Self {
            n,
            d,
            noise,
            seed,
            noise_scale: 1.0,
        }
    }
}

/// Linear model with standard normal predictors and coefficients.
pub fn synth_regression(n: usize, d: usize, noise: Noise, seed: u64) -> Result<(Dataset, DVector<f64>)> {
    synth_regression_with(&SynthSpec::new(n, d, noise, seed))
}

pub fn synth_regression_with(spec: &SynthSpec) -> Result<(Dataset, DVector<f64>)> {
    let SynthSpec { n, d, noise, seed, noise_scale } = *spec;
    if d == 0 || n <= d {
        return Err(Error::InvalidShape(format!("need n > d >= 1, got n = {n}, d = {d}")));
    }
    let mut theta_rng = rng::stream(seed, rng::TAG_SYNTH_THETA);
    let theta = DVector::from_iterator(d, (0..d).map(|_| theta_rng.sample::<f64, _>(StandardNormal)));

    let mut x_rng = rng::stream(seed, rng::TAG_SYNTH_X);
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            x[(i, j)] = x_rng.sample(StandardNormal);
        }
    }

    let mut noise_rng = rng::stream(seed, rng::TAG_SYNTH_NOISE);
    let t3 = StudentT::new(3.0).expect("3 degrees of freedom");
    let mut y = &x * &theta;
    for i in 0..n {
        let eps: f64 = match noise {
            Noise::Gaussian => noise_rng.sample(StandardNormal),
            Noise::StudentT3 => t3.sample(&mut noise_rng),
            Noise::Heteroskedastic => {
                let z: f64 = noise_rng.sample(StandardNormal);
                (1.0 + x.row(i).norm()) * z
            }
        };
        y[i] += noise_scale * eps;
    }
    let ds = Dataset::new(x, y, default_names(d), "y")?;
    Ok((ds, theta))
}
