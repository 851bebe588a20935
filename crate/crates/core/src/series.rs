//! CSV readers and writers for the plot-ready series: eigenvalues,
//! participation ratios, relative IPRs, the eigenvalue histogram and
//! labelled square matrices.
//! Numbers are written at 10 significant digits.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::format::fmt_csv;
use crate::pipeline::HistogramBin;
use crate::spectral::{ParticipationPoint, RelativeIprPoint};

pub const EIGENVALUES_HEADER: [&str; 2] = ["k", "lambda_k"];
pub const PARTICIPATION_HEADER: [&str; 3] = ["k", "lambda_k", "P_k"];
pub const RELATIVE_IPR_HEADER: [&str; 4] = ["k", "lambda_k", "group", "R"];
pub const HISTOGRAM_HEADER: [&str; 5] = ["left", "right", "count", "density", "mp_density"];

fn write_rows<W: Write, const C: usize>(
    writer: W,
    header: [&str; C],
    rows: impl Iterator<Item = [String; C]>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: DeserializeOwned>(reader: R) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(Into::into)).collect()
}

/// One eigenvalue per row with its 1-based rank, largest first.
pub fn write_eigenvalues_csv<W: Write>(writer: W, values: &[f64]) -> Result<()> {
    write_rows(
        writer,
        EIGENVALUES_HEADER,
        values.iter().enumerate().map(|(k, &v)| [(k + 1).to_string(), fmt_csv(v)]),
    )
}

pub fn read_eigenvalues_csv<R: Read>(reader: R) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    struct Row {
        #[allow(dead_code)]
        k: usize,
        lambda_k: f64,
    }
    Ok(read_rows::<_, Row>(reader)?.into_iter().map(|r| r.lambda_k).collect())
}

pub fn write_participation_csv<W: Write>(writer: W, points: &[ParticipationPoint]) -> Result<()> {
    write_rows(
        writer,
        PARTICIPATION_HEADER,
        points
            .iter()
            .map(|p| [p.k.to_string(), fmt_csv(p.lambda), fmt_csv(p.participation)]),
    )
}

pub fn read_participation_csv<R: Read>(reader: R) -> Result<Vec<ParticipationPoint>> {
    read_rows(reader)
}

pub fn write_relative_ipr_csv<W: Write>(writer: W, points: &[RelativeIprPoint]) -> Result<()> {
    write_rows(
        writer,
        RELATIVE_IPR_HEADER,
        points
            .iter()
            .map(|p| [p.k.to_string(), fmt_csv(p.lambda), p.group.clone(), fmt_csv(p.r)]),
    )
}

pub fn read_relative_ipr_csv<R: Read>(reader: R) -> Result<Vec<RelativeIprPoint>> {
    read_rows(reader)
}

pub fn write_histogram_csv<W: Write>(writer: W, bins: &[HistogramBin]) -> Result<()> {
    write_rows(
        writer,
        HISTOGRAM_HEADER,
        bins.iter().map(|b| {
            [
                fmt_csv(b.left),
                fmt_csv(b.right),
                b.count.to_string(),
                fmt_csv(b.density),
                fmt_csv(b.mp_density),
            ]
        }),
    )
}

pub fn read_histogram_csv<R: Read>(reader: R) -> Result<Vec<HistogramBin>> {
    read_rows(reader)
}

/// Square labelled matrix: header `asset,A1,...,AN`, one row per asset.
pub fn write_matrix_csv<W: Write>(writer: W, assets: &[String], m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() || m.nrows() != assets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for a {}x{} matrix",
            assets.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(std::iter::once("asset").chain(assets.iter().map(String::as_str)))?;
    for (i, a) in assets.iter().enumerate() {
        wtr.write_record(std::iter::once(a.clone()).chain((0..m.ncols()).map(|j| fmt_csv(m[(i, j)]))))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(reader: R) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let assets: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    let n = assets.len();
    let mut data = Vec::with_capacity(n * n);
    let mut rows = 0;
    for record in rdr.records() {
        let record = record?;
        if record.len() != n + 1 || assets.get(rows).map(String::as_str) != Some(&record[0]) {
            return Err(Error::Parse(format!("matrix row {rows} does not match the header")));
        }
        for field in record.iter().skip(1) {
            data.push(field.parse::<f64>().map_err(|_| Error::Parse(format!("matrix row {rows}: '{field}'")))?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::InvalidShape(format!("{rows} rows for {n} columns")));
    }
    Ok((assets, DMatrix::from_row_slice(n, n, &data)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{round_sig, CSV_SIG_DIGITS};

    fn r10(x: f64) -> f64 {
        round_sig(x, CSV_SIG_DIGITS)
    }

    #[test]
    fn eigenvalues_round_trip() {
        let v = vec![12.345678901234, 1.0, 0.1234567890123, 3.2e-7];
        let mut buf = Vec::new();
        write_eigenvalues_csv(&mut buf, &v).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("k,lambda_k\n1,12.3456789\n"));
        let back = read_eigenvalues_csv(buf.as_slice()).unwrap();
        assert_eq!(back, v.iter().map(|&x| r10(x)).collect::<Vec<_>>());
    }

    #[test]
    fn matrix_round_trip() {
        let assets = vec!["A".to_string(), "B".to_string()];
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 0.5]);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &assets, &m).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "asset,A,B\nA,1,0.25\nB,0.25,0.5\n");
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), (assets, m));
        assert!(read_matrix_csv("asset,A,B\nA,1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn series_round_trip() {
        let p = vec![
            ParticipationPoint { k: 1, lambda: 2.5, participation: 99.5 },
            ParticipationPoint { k: 2, lambda: 0.75, participation: 12.0 },
        ];
        let mut buf = Vec::new();
        write_participation_csv(&mut buf, &p).unwrap();
        assert_eq!(read_participation_csv(buf.as_slice()).unwrap(), p);

        let r = vec![RelativeIprPoint { k: 3, lambda: 0.5, group: "G23+".into(), r: 0.25 }];
        let mut buf = Vec::new();
        write_relative_ipr_csv(&mut buf, &r).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "k,lambda_k,group,R\n3,0.5,G23+,0.25\n");
        assert_eq!(read_relative_ipr_csv(buf.as_slice()).unwrap(), r);

        let h = vec![HistogramBin { left: 0.0, right: 0.5, count: 3, density: 1.5, mp_density: 0.0 }];
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &h).unwrap();
        assert_eq!(read_histogram_csv(buf.as_slice()).unwrap(), h);
    }
}
