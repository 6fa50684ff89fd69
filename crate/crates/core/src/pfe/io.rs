//! Embedding text files: a `n d` header line followed by `n` rows of `d`
//! comma-separated values printed with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn format_embedding<T: Real>(y: &DenseMatrix<T>) -> String {
    let (n, d) = y.shape();
    let mut out = String::with_capacity(n * d * 25 + 16);
    writeln!(out, "{n} {d}").unwrap();
    for i in 0..n {
        for j in 0..d {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{:.16e}", y[(i, j)].to_f64_lossy()).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_embedding<T: Real>(text: &str, path: &Path) -> Result<DenseMatrix<T>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing \"n d\" header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(1, format!("bad header {header:?}: {e}")))?;
    let [n, d] = dims[..] else {
        return Err(err(1, format!("header must be \"n d\", got {header:?}")));
    };
    let mut y = DenseMatrix::zeros(n, d);
    let mut rows = 0;
    for (lineno, line) in lines {
        if rows == n {
            return Err(err(lineno + 1, format!("more than {n} rows")));
        }
        let mut cols = 0;
        for (j, field) in line.split(',').enumerate() {
            if j >= d {
                return Err(err(lineno + 1, format!("more than {d} values")));
            }
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| err(lineno + 1, format!("bad value {field:?}: {e}")))?;
            y[(rows, j)] = T::lit(v);
            cols += 1;
        }
        if cols != d {
            return Err(err(lineno + 1, format!("expected {d} values, found {cols}")));
        }
        rows += 1;
    }
    if rows != n {
        return Err(err(text.lines().count(), format!("expected {n} rows, found {rows}")));
    }
    Ok(y)
}

pub fn write_embedding<T: Real>(path: impl AsRef<Path>, y: &DenseMatrix<T>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_embedding(y)).map_err(|e| Error::io(path, e))
}

pub fn read_embedding<T: Real>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embedding(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::path::PathBuf;

    #[test]
    fn header_and_layout() {
        let y = DenseMatrix::from_rows(&[vec![1.0, -0.5], vec![0.25, 3.0]]).unwrap();
        let text = format_embedding(&y);
        assert!(text.starts_with("2 2\n"));
        assert_eq!(text.lines().nth(1).unwrap(), "1.0000000000000000e0,-5.0000000000000000e-1");
    }

    #[test]
    fn malformed_files() {
        let p = PathBuf::from("e.csv");
        assert!(parse_embedding::<f64>("", &p).is_err());
        assert!(parse_embedding::<f64>("2 1\n1.0\n", &p).is_err());
        assert!(matches!(
            parse_embedding::<f64>("1 2\n1.0,x\n", &p),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(vals in prop::collection::vec(-1e6f64..1e6, 1..40), d in 1usize..4) {
            let n = vals.len() / d;
            prop_assume!(n > 0);
            let y = DenseMatrix::from_col_major(n, d, vals[..n * d].to_vec()).unwrap();
            let back: DenseMatrix<f64> = parse_embedding(&format_embedding(&y), &PathBuf::from("p")).unwrap();
            prop_assert_eq!(back, y);
        }
    }
}
