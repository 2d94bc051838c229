//! CSV helpers shared by the model, load and report writers.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Reads a dense matrix whose first row holds column labels.
pub fn read_labeled_matrix(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let file = File::open(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    read_labeled_matrix_from(file).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn read_labeled_matrix_from<R: Read>(reader: R) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} fields, header has {}", rows + 1, record.len(), header.len())));
        }
        for field in record.iter() {
            values.push(parse_number(field)?);
        }
        rows += 1;
    }
    Ok((header.clone(), DMatrix::from_row_slice(rows, header.len(), &values)))
}

pub fn write_labeled_matrix<W: Write>(writer: W, labels: &[String], m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(labels)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| format_number(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes named columns of equal length.
pub fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let len = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != len) || header.len() != columns.len() {
        return Err(Error::InvalidRequest("column lengths or header do not match".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for i in 0..len {
        w.write_record(columns.iter().map(|c| format_number(c[i])))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads all columns of a headed numeric CSV file.
pub fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let (header, m) = read_labeled_matrix(path)?;
    let cols = (0..m.ncols()).map(|j| m.column(j).iter().copied().collect()).collect();
    Ok((header, cols))
}

fn parse_number(field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{field}` is not a number")))
}

pub(crate) fn format_number(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labeled_matrix_round_trip() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -2.5e-7, -2.5e-7, 3.0]);
        let labels = vec!["n0:uz".to_string(), "n1:uz".to_string()];
        let mut buf = Vec::new();
        write_labeled_matrix(&mut buf, &labels, &m).unwrap();
        let (l, back) = read_labeled_matrix_from(buf.as_slice()).unwrap();
        assert_eq!(l, labels);
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_ragged_rows() {
        let text = "a,b\n1,2\n3\n";
        assert!(read_labeled_matrix_from(text.as_bytes()).is_err());
        assert!(read_labeled_matrix_from("a,b\n1,x\n".as_bytes()).is_err());
    }
}
