use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One (scheme, size, replication) outcome. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scheme: String,
    pub model: String,
    pub target: String,
    pub m_expected: f64,
    pub m_realized: usize,
    pub replication: usize,
    pub seed: u64,
    pub coef_err_sq: f64,
    pub loss: f64,
    pub fit_converged: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

/// Quartiles of one metric; NaN entries (failed fits) are excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: String,
    pub m_expected: f64,
    pub replications: usize,
    pub converged: usize,
    pub mean_realized: f64,
    pub coef_err_sq: Option<Quartiles>,
    pub loss: Option<Quartiles>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartiles(values: impl IntoIterator<Item = f64>) -> Option<Quartiles> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(Quartiles {
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
    })
}

impl Report {
    /// Rows for one (scheme, m) cell.
    pub fn cell<'a>(&'a self, scheme: &'a str, m: f64) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.scheme == scheme && r.m_expected == m)
    }

    pub fn median_coef_err(&self, scheme: &str, m: f64) -> Option<f64> {
        quartiles(self.cell(scheme, m).map(|r| r.coef_err_sq)).map(|q| q.median)
    }

    /// Per (scheme, m) summary, in order of first appearance.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut order: Vec<(String, u64)> = Vec::new();
        let mut groups: BTreeMap<(String, u64), Vec<&ReportRow>> = BTreeMap::new();
        for row in &self.rows {
            let key = (row.scheme.clone(), row.m_expected.to_bits());
            if !groups.contains_key(&key) {
                order.push(key.clone());
            }
            groups.entry(key).or_default().push(row);
        }
        order
            .into_iter()
            .map(|key| {
                let rows = &groups[&key];
                SummaryRow {
                    scheme: key.0.clone(),
                    m_expected: f64::from_bits(key.1),
                    replications: rows.len(),
                    converged: rows.iter().filter(|r| r.fit_converged).count(),
                    mean_realized: rows.iter().map(|r| r.m_realized as f64).sum::<f64>() / rows.len() as f64,
                    coef_err_sq: quartiles(rows.iter().map(|r| r.coef_err_sq)),
                    loss: quartiles(rows.iter().map(|r| r.loss)),
                }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        wtr.write_record(CSV_HEADER)?;
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<ReportRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rows": self.rows.iter().map(row_json).collect::<Vec<_>>(),
            "summary": self.summary(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let rows = value
            .get("rows")
            .cloned()
            .ok_or_else(|| Error::InvalidArgument("report JSON has no `rows` array".into()))?;
        let rows: Vec<JsonRow> = serde_json::from_value(rows)?;
        Ok(Self {
            rows: rows.into_iter().map(ReportRow::from).collect(),
        })
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "scheme",
    "model",
    "target",
    "m_expected",
    "m_realized",
    "replication",
    "seed",
    "coef_err_sq",
    "loss",
    "fit_converged",
];

// NaN is not representable in JSON; failed metrics are written as null.
fn row_json(r: &ReportRow) -> serde_json::Value {
    let num = |v: f64| if v.is_finite() { serde_json::json!(v) } else { serde_json::Value::Null };
    serde_json::json!({
        "scheme": r.scheme,
        "model": r.model,
        "target": r.target,
        "m_expected": r.m_expected,
        "m_realized": r.m_realized,
        "replication": r.replication,
        "seed": r.seed,
        "coef_err_sq": num(r.coef_err_sq),
        "loss": num(r.loss),
        "fit_converged": r.fit_converged,
    })
}

#[derive(Deserialize)]
struct JsonRow {
    scheme: String,
    model: String,
    target: String,
    m_expected: f64,
    m_realized: usize,
    replication: usize,
    seed: u64,
    coef_err_sq: Option<f64>,
    loss: Option<f64>,
    fit_converged: bool,
}

impl From<JsonRow> for ReportRow {
    fn from(r: JsonRow) -> Self {
        Self {
            scheme: r.scheme,
            model: r.model,
            target: r.target,
            m_expected: r.m_expected,
            m_realized: r.m_realized,
            replication: r.replication,
            seed: r.seed,
            coef_err_sq: r.coef_err_sq.unwrap_or(f64::NAN),
            loss: r.loss.unwrap_or(f64::NAN),
            fit_converged: r.fit_converged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` selects JSON; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Write the report as CSV, or as JSON `{ "rows": [...], "summary": [...] }`.
pub fn emit(report: &Report, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report.to_json())?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}
