use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gp::Dataset;
use crate::linalg::Matrix;

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// Parse CSV text into a dataset.
///
/// One column is `y` with implicit `t = 0, 1, …`; two columns are `(t, y)`;
/// more columns are `(x_1, …, x_P, y)`. A first row containing any non-numeric
/// cell is taken as a header. Row and column numbers in errors are 1-based and
/// count the header.
pub fn parse_csv<R: Read>(reader: R) -> Result<Dataset<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::InvalidData("empty input".into()));
    }

    let mut names = None;
    let mut first_data = 0;
    if records[0].iter().any(|c| parse_cell(c).is_none()) {
        names = Some(records[0].iter().map(str::to_string).collect::<Vec<_>>());
        first_data = 1;
    }
    let width = records[0].len();
    if records.len() == first_data {
        return Err(Error::InvalidData("no data rows after header".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(records.len() - first_data);
    for (ri, rec) in records.iter().enumerate().skip(first_data) {
        let line = rec.position().map_or(ri + 1, |p| p.line() as usize);
        if rec.len() != width {
            return Err(Error::Parse {
                row: line,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} columns, found {}", rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(width);
        for (ci, cell) in rec.iter().enumerate() {
            match parse_cell(cell) {
                Some(v) if v.is_finite() => vals.push(v),
                _ => {
                    return Err(Error::Parse {
                        row: line,
                        column: ci + 1,
                        message: format!("'{cell}' is not a finite number"),
                    })
                }
            }
        }
        rows.push(vals);
    }

    let n = rows.len();
    let (x, y) = match width {
        1 => (
            Matrix::column(&(0..n).map(|i| i as f64).collect::<Vec<_>>()),
            rows.iter().map(|r| r[0]).collect(),
        ),
        w => {
            let p = w - 1;
            let x = Matrix::from_fn(n, p, |i, j| rows[i][j]);
            (x, rows.iter().map(|r| r[p]).collect())
        }
    };
    let mut d = Dataset::new(x, y)?;
    if let Some(names) = names {
        d = d.with_names(names);
    }
    Ok(d)
}

pub fn read_csv(path: &Path) -> Result<Dataset<f64>> {
    let f = File::open(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    parse_csv(f).map_err(|e| e.context(path.display().to_string()))
}
