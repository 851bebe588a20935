//! Return panels and empirical correlation.
//!
//! A panel is a T×N matrix (rows are time steps, columns are assets). All
//! moments use the population divisor T, so for a standardized panel the
//! correlation is exactly XᵀX/T and its trace is N.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::format::fmt_csv;

/// Labeled T×N numeric table as read from the wide CSV format.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub timestamps: Vec<String>,
    pub assets: Vec<String>,
    pub values: DMatrix<f64>,
}

impl Table {
    pub fn new(timestamps: Vec<String>, assets: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != timestamps.len() || values.ncols() != assets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} timestamps and {} assets for a {}x{} matrix",
                timestamps.len(),
                assets.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFiniteValue { row, col });
                }
            }
        }
        Ok(Self {
            timestamps,
            assets,
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    timestamps: Vec<String>,
    assets: Vec<String>,
    values: DMatrix<f64>,
    standardized: bool,
}

impl ReturnPanel {
    /// Wraps raw returns. Requires T ≥ 2, N ≥ 2 and finite entries.
    pub fn new(timestamps: Vec<String>, assets: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let table = Table::new(timestamps, assets, values)?;
        Self::from_table(table)
    }

    pub fn from_table(table: Table) -> Result<Self> {
        let (t, n) = table.values.shape();
        if t < 2 {
            return Err(Error::TooFewRows { rows: t, min: 2 });
        }
        if n < 2 {
            return Err(Error::InvalidShape(format!("need at least 2 assets, got {n}")));
        }
        Ok(Self {
            timestamps: table.timestamps,
            assets: table.assets,
            values: table.values,
            standardized: false,
        })
    }

    /// Panel with generated labels: timestamps `0..T`, assets as given.
    pub fn with_index(assets: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let timestamps = (0..values.nrows()).map(|t| t.to_string()).collect();
        Self::new(timestamps, assets, values)
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn n_steps(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.values.ncols()
    }

    pub fn into_table(self) -> Table {
        Table {
            timestamps: self.timestamps,
            assets: self.assets,
            values: self.values,
        }
    }
}

/// Log returns `ln(p[t+1]/p[t])` from a (T+1)×N price table.
pub fn log_returns(prices: &Table) -> Result<ReturnPanel> {
    let (rows, n) = prices.values.shape();
    if rows < 3 {
        return Err(Error::TooFewRows { rows, min: 3 });
    }
    for col in 0..n {
        for row in 0..rows {
            if prices.values[(row, col)] <= 0.0 {
                return Err(Error::NonPositivePrice { row, col });
            }
        }
    }
    let values = DMatrix::from_fn(rows - 1, n, |t, i| {
        (prices.values[(t + 1, i)] / prices.values[(t, i)]).ln()
    });
    ReturnPanel::new(
        prices.timestamps[1..].to_vec(),
        prices.assets.clone(),
        values,
    )
}

const MIN_VARIANCE: f64 = 1e-14;

fn column_moments(values: &DMatrix<f64>, col: usize) -> (f64, f64) {
    let c = values.column(col);
    let t = c.len() as f64;
    let mean = c.sum() / t;
    let var = c.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / t;
    (mean, var)
}

/// Demeans each column and scales it to unit variance (divisor T).
pub fn standardize(panel: &ReturnPanel) -> Result<ReturnPanel> {
    let mut values = panel.values.clone();
    for col in 0..values.ncols() {
        let (mean, var) = column_moments(&panel.values, col);
        if var <= MIN_VARIANCE {
            return Err(Error::ZeroVarianceColumn(col));
        }
        let sd = var.sqrt();
        values.column_mut(col).apply(|x| *x = (*x - mean) / sd);
    }
    Ok(ReturnPanel {
        timestamps: panel.timestamps.clone(),
        assets: panel.assets.clone(),
        values,
        standardized: true,
    })
}

/// Symmetric correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    assets: Vec<String>,
    entries: DMatrix<f64>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl CorrelationMatrix {
    /// Validates symmetry, unit diagonal and the [-1, 1] entry range.
    pub fn new(assets: Vec<String>, entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::InvalidShape(format!(
                "correlation matrix must be square, got {}x{}",
                n,
                entries.ncols()
            )));
        }
        if assets.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} asset labels for a {n}x{n} matrix",
                assets.len()
            )));
        }
        for i in 0..n {
            if (entries[(i, i)] - 1.0).abs() >= SYMMETRY_TOL {
                return Err(Error::InvalidParameter(format!(
                    "diagonal entry {i} is {} (expected 1)",
                    entries[(i, i)]
                )));
            }
            for j in 0..i {
                let (a, b) = (entries[(i, j)], entries[(j, i)]);
                if !a.is_finite() || (a - b).abs() >= SYMMETRY_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "entries ({i},{j}) and ({j},{i}) are not symmetric"
                    )));
                }
                if a.abs() > 1.0 + SYMMETRY_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "entry ({i},{j}) = {a} outside [-1, 1]"
                    )));
                }
            }
        }
        Ok(Self { assets, entries })
    }

    /// Correlation with generated asset labels `0..N`.
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        let assets = (0..entries.nrows()).map(|i| i.to_string()).collect();
        Self::new(assets, entries)
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Restricts to the given indices, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> Result<CorrelationMatrix> {
        let n = self.dim();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        let entries = DMatrix::from_fn(indices.len(), indices.len(), |a, b| {
            self.entries[(indices[a], indices[b])]
        });
        let assets = indices.iter().map(|&i| self.assets[i].clone()).collect();
        Ok(Self { assets, entries })
    }
}

/// Pearson correlation of the panel's columns.
pub fn empirical_correlation(panel: &ReturnPanel) -> Result<CorrelationMatrix> {
    let std_panel;
    let x = if panel.standardized {
        &panel.values
    } else {
        std_panel = standardize(panel)?;
        &std_panel.values
    };
    let t = x.nrows() as f64;
    let mut c = x.tr_mul(x) / t;
    let n = c.nrows();
    for i in 0..n {
        c[(i, i)] = 1.0;
        for j in 0..i {
            let v = c[(j, i)].clamp(-1.0, 1.0);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(CorrelationMatrix {
        assets: panel.assets.clone(),
        entries: c,
    })
}

/// Reads the wide CSV format: header `time,A1,A2,...`, then one row per
/// timestamp. Empty or non-numeric cells are rejected.
pub fn read_wide_csv<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Parse(
            "header must contain a time column and at least one asset".into(),
        ));
    }
    let assets: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let n = assets.len();
    let mut timestamps = Vec::new();
    let mut data = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != n + 1 {
            return Err(Error::Parse(format!(
                "row {row} has {} fields, expected {}",
                record.len(),
                n + 1
            )));
        }
        timestamps.push(record[0].to_string());
        for (col, field) in record.iter().skip(1).enumerate() {
            if field.is_empty() {
                return Err(Error::NonFiniteValue { row, col });
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}, column {col}: '{field}'")))?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row, col });
            }
            data.push(v);
        }
    }
    let values = DMatrix::from_row_slice(timestamps.len(), n, &data);
    Table::new(timestamps, assets, values)
}

/// Writes the wide CSV format at 10 significant digits.
pub fn write_wide_csv<W: Write>(writer: W, table: &Table) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = Vec::with_capacity(table.assets.len() + 1);
    header.push("time".to_string());
    header.extend(table.assets.iter().cloned());
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (t, ts) in table.timestamps.iter().enumerate() {
        record.clear();
        record.push(ts.clone());
        record.extend((0..table.assets.len()).map(|i| fmt_csv(table.values[(t, i)])));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}
