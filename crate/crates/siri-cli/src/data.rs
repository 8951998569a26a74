//! CSV loading/writing and the optional quantile-normalization preprocess.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use siri::numkit::normal_quantile;
use siri::Dataset;

use crate::CliError;

/// Loads a rectangular numeric CSV with one header row. The named response
/// column becomes y; every other column is a predictor. Any non-numeric or
/// missing cell is rejected with its row and column.
pub fn load_csv(path: &Path, response: &str) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {}", path.display(), e)))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {}", path.display(), e)))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let y_col = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| CliError::Data(format!("response column {:?} not found", response)))?;

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            CliError::Data(format!("row {}: {}", row_idx + 1, e))
        })?;
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::Data(format!(
                    "non-numeric cell at row {}, column {}",
                    row_idx + 1,
                    headers[c]
                ))
            })?;
            if c == y_col {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::Data("no observations".into()));
    }
    let p = headers.len() - 1;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != y_col)
        .map(|(_, h)| h.clone())
        .collect();
    let x = Array2::from_shape_vec((n, p), xs)
        .map_err(|e| CliError::Data(format!("shape error: {}", e)))?;
    Dataset::with_names(x, Array1::from(ys), names)
        .map_err(|e| CliError::Data(e.to_string()))
}

/// Writes a dataset as CSV: predictor columns under their names, the
/// response last under `response`.
pub fn write_csv(data: &Dataset, response: &str, path: &Path) -> Result<(), CliError> {
    let file =
        File::create(path).map_err(|e| CliError::Data(format!("{}: {}", path.display(), e)))?;
    let mut w = BufWriter::new(file);
    let mut header = data.names().join(",");
    header.push(',');
    header.push_str(response);
    writeln!(w, "{}", header).map_err(|e| CliError::Data(e.to_string()))?;
    for i in 0..data.n() {
        let mut line = String::new();
        for j in 0..data.p() {
            line.push_str(&format!("{}", data.predictors()[[i, j]]));
            line.push(',');
        }
        line.push_str(&format!("{}", data.response()[i]));
        writeln!(w, "{}", line).map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(())
}

/// Rank-based inverse normal transform of every predictor column: value at
/// average rank r maps to the standard normal quantile of (r - 0.5)/n.
/// Guards downstream statistics against extreme predictor outliers.
pub fn quantile_normalize(data: &Dataset) -> Result<Dataset, CliError> {
    let n = data.n();
    let p = data.p();
    let mut x = Array2::<f64>::zeros((n, p));
    for j in 0..p {
        let col = data.column(j);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).unwrap().then(a.cmp(&b)));
        // average ranks over ties
        let mut ranks = vec![0.0f64; n];
        let mut i = 0;
        while i < n {
            let mut k = i;
            while k + 1 < n && col[order[k + 1]] == col[order[i]] {
                k += 1;
            }
            let avg = (i + k) as f64 / 2.0 + 1.0;
            for &o in &order[i..=k] {
                ranks[o] = avg;
            }
            i = k + 1;
        }
        for i in 0..n {
            let u = (ranks[i] - 0.5) / n as f64;
            x[[i, j]] = normal_quantile(u).map_err(|e| CliError::Numeric(e.to_string()))?;
        }
    }
    Dataset::with_names(x, data.response().to_owned(), data.names().to_vec())
        .map_err(|e| CliError::Numeric(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_csv() {
        let f = write_tmp("x1,x2,y\n0,1,2\n3,4,5\n6,7,8\n");
        let d = load_csv(f.path(), "y").unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.p(), 2);
        assert_eq!(d.response().to_vec(), vec![2.0, 5.0, 8.0]);
        assert_eq!(d.names(), &["x1".to_string(), "x2".to_string()]);
    }

    #[test]
    fn response_can_be_any_column() {
        let f = write_tmp("y,x1\n1,2\n3,4\n");
        let d = load_csv(f.path(), "y").unwrap();
        assert_eq!(d.response().to_vec(), vec![1.0, 3.0]);
        assert_eq!(d.column(0).to_vec(), vec![2.0, 4.0]);
    }

    #[test]
    fn missing_cell_names_row_and_column() {
        let f = write_tmp("x1,x2,y\n0,1,2\n3,,5\n");
        let err = load_csv(f.path(), "y").unwrap_err();
        let msg = format!("{}", err);
        assert!(msg.contains("row 2"), "{}", msg);
        assert!(msg.contains("column x2"), "{}", msg);
    }

    #[test]
    fn header_only_is_no_observations() {
        let f = write_tmp("x1,x2,y\n");
        let err = load_csv(f.path(), "y").unwrap_err();
        assert!(format!("{}", err).contains("no observations"));
    }

    #[test]
    fn ragged_row_rejected() {
        let f = write_tmp("x1,x2,y\n1,2,3\n4,5\n");
        assert!(load_csv(f.path(), "y").is_err());
    }

    #[test]
    fn absent_response_rejected() {
        let f = write_tmp("x1,x2,y\n1,2,3\n");
        let err = load_csv(f.path(), "z").unwrap_err();
        assert!(format!("{}", err).contains("\"z\""));
    }

    #[test]
    fn csv_round_trip() {
        let f = write_tmp("a,b,resp\n0.5,1.25,-3\n2,4.75,6\n");
        let d = load_csv(f.path(), "resp").unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&d, "resp", out.path()).unwrap();
        let d2 = load_csv(out.path(), "resp").unwrap();
        assert_eq!(d.predictors(), d2.predictors());
        assert_eq!(d.response().to_vec(), d2.response().to_vec());
    }

    #[test]
    fn qnorm_maps_to_normal_scores() {
        let f = write_tmp("x1,y\n10,0\n1000,1\n-5,2\n3,3\n");
        let d = load_csv(f.path(), "y").unwrap();
        let q = quantile_normalize(&d).unwrap();
        // Ranks 3,4,1,2 -> quantiles of (2.5/4, 3.5/4, 0.5/4, 1.5/4).
        let col = q.column(0).to_vec();
        assert!(col[1] > col[0] && col[0] > col[3] && col[3] > col[2]);
        let sym = col[1] + col[2];
        assert!(sym.abs() < 1e-9, "extreme quantiles should be symmetric");
    }
}
