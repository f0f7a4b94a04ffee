//! Plain-text dense matrix format.
//!
//! ```text
//! rows cols
//! a11 a12 ...
//! ...
//! ```
//! One header line with two decimal integers, then `rows` lines of
//! whitespace-separated floats. Vectors are written with `cols = 1`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::dense::DenseMatrix;
use super::LinopError;

pub fn parse_matrix(text: &str) -> Result<DenseMatrix, LinopError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(hline + 1, "header must be `rows cols`"));
    }
    let rows: usize = dims[0]
        .parse()
        .map_err(|_| parse_err(hline + 1, "rows is not an integer"))?;
    let cols: usize = dims[1]
        .parse()
        .map_err(|_| parse_err(hline + 1, "cols is not an integer"))?;
    if rows == 0 || cols == 0 {
        return Err(LinopError::EmptyShape { rows, cols });
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (lno, line) in lines {
        if seen == rows {
            return Err(parse_err(lno + 1, "more rows than declared"));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(lno + 1, &format!("invalid float `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(lno + 1, "non-finite entry"));
            }
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(parse_err(
                lno + 1,
                &format!("expected {cols} entries, found {}", data.len() - before),
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(parse_err(
            0,
            &format!("declared {rows} rows, found {seen}"),
        ));
    }
    DenseMatrix::from_row_major(rows, cols, data)
}

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut s = String::with_capacity(m.rows() * m.cols() * 12 + 16);
    let _ = writeln!(s, "{} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        for (c, v) in m.row(r).iter().enumerate() {
            if c > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v:?}");
        }
        s.push('\n');
    }
    s
}

/// Column vector (`n 1` header).
pub fn format_vector(v: &[f64]) -> String {
    let mut s = String::with_capacity(v.len() * 12 + 8);
    let _ = writeln!(s, "{} 1", v.len());
    for x in v {
        let _ = writeln!(s, "{x:?}");
    }
    s
}

/// Reads a vector; both `n 1` and `1 n` shapes are accepted.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, LinopError> {
    let m = parse_matrix(text)?;
    if m.cols() == 1 || m.rows() == 1 {
        Ok(m.as_slice().to_vec())
    } else {
        Err(parse_err(1, "expected a vector (one row or one column)"))
    }
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix, LinopError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_matrix(&text).map_err(|e| e.in_file(path))
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, LinopError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_vector(&text).map_err(|e| e.in_file(path))
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<(), LinopError> {
    fs::write(path, format_matrix(m)).map_err(|e| io_err(path, e))
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), LinopError> {
    fs::write(path, format_vector(v)).map_err(|e| io_err(path, e))
}

fn parse_err(line: usize, msg: &str) -> LinopError {
    LinopError::Parse {
        file: None,
        line,
        message: msg.to_string(),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> LinopError {
    LinopError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_and_rows() {
        let m = parse_matrix("2 3\n1 2 3\n4.5 -6 7e-3\n").unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.get(1, 2), 7e-3);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = DenseMatrix::from_rows(&[vec![0.1, -1.0 / 3.0], vec![1e-300, 12345.678]]).unwrap();
        let back = parse_matrix(&format_matrix(&m)).unwrap();
        assert_eq!(m, back);
        let v = vec![std::f64::consts::PI, -0.0, 2.5e17];
        assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_matrix("2 2\n1 2\n3\n").unwrap_err();
        assert!(matches!(err, LinopError::Parse { line: 3, .. }), "{err}");
        assert!(parse_matrix("2 2\n1 2\n").is_err());
        assert!(parse_matrix("x 2\n").is_err());
        assert!(parse_matrix("1 1\nnan\n").is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_vector(Path::new("/nonexistent/y.txt")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/y.txt"));
    }
}
