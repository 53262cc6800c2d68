//! `bounds.csv`: one row per train point with columns
//! `mu1, …, mud, beta_lb, beta_ub, eps, beta_truth`. `beta_truth` is empty
//! when not computed. Values are written with 17 significant digits so the
//! file parses back to the same bits.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub mu: Vec<f64>,
    pub beta_lb: f64,
    pub beta_ub: f64,
    pub eps: f64,
    pub beta_truth: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundsTable {
    pub rows: Vec<BoundsRow>,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse(field: &str, line: usize, column: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("row {line}: bad {column} value {field:?}")))
}

impl BoundsTable {
    pub fn new(rows: Vec<BoundsRow>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Largest `eps` over all rows.
    pub fn max_eps(&self) -> f64 {
        self.rows.iter().map(|r| r.eps).fold(f64::NEG_INFINITY, f64::max)
    }

    fn dim(&self) -> usize {
        self.rows.first().map_or(2, |r| r.mu.len())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("mu{i}")).collect();
        header.extend(["beta_lb", "beta_ub", "eps", "beta_truth"].map(String::from));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.mu.iter().copied().map(fmt).collect();
            rec.push(fmt(r.beta_lb));
            rec.push(fmt(r.beta_ub));
            rec.push(fmt(r.eps));
            rec.push(r.beta_truth.map(fmt).unwrap_or_default());
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Invalid(format!("csv flush failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        let dim = header.iter().take_while(|h| h.starts_with("mu")).count();
        let expected: Vec<String> = (1..=dim)
            .map(|i| format!("mu{i}"))
            .chain(["beta_lb", "beta_ub", "eps", "beta_truth"].map(String::from))
            .collect();
        if dim == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Invalid(format!(
                "unexpected bounds header {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut rows = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            if rec.len() != dim + 4 {
                return Err(Error::Invalid(format!(
                    "row {line}: expected {} fields, got {}",
                    dim + 4,
                    rec.len()
                )));
            }
            let mu = (0..dim)
                .map(|i| parse(&rec[i], line, &expected[i]))
                .collect::<Result<_>>()?;
            let truth = rec[dim + 3].trim();
            rows.push(BoundsRow {
                mu,
                beta_lb: parse(&rec[dim], line, "beta_lb")?,
                beta_ub: parse(&rec[dim + 1], line, "beta_ub")?,
                eps: parse(&rec[dim + 2], line, "eps")?,
                beta_truth: if truth.is_empty() {
                    None
                } else {
                    Some(parse(truth, line, "beta_truth")?)
                },
            });
        }
        Ok(Self { rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}
