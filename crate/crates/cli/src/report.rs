use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use pfe_core::{MetricsReport, Result};

use crate::pipeline::io_error;

pub fn format_metrics(m: &MetricsReport) -> String {
    format!("covering={:.4} pri={:.4} vi={:.4}", m.covering, m.pri, m.vi)
}

pub fn mean_metrics(reports: &[MetricsReport]) -> MetricsReport {
    let n = reports.len() as f64;
    MetricsReport {
        covering: reports.iter().map(|r| r.covering).sum::<f64>() / n,
        pri: reports.iter().map(|r| r.pri).sum::<f64>() / n,
        vi: reports.iter().map(|r| r.vi).sum::<f64>() / n,
    }
}

/// Appends `rows` to a CSV file, writing `header` first if the file is new or empty.
pub fn append_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_error(path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(header);
        text.push('\n');
    }
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    f.write_all(text.as_bytes()).map_err(|e| io_error(path, e))
}

/// Linearly interpolated quantile of sorted data, `q ∈ [0, 1]`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// `(min, q25, median, q75, max)`.
pub fn five_numbers(values: &[f64]) -> [f64; 5] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&v, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        assert_eq!(five_numbers(&[4.0, 1.0, 3.0, 2.0, 5.0]), [1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
        assert_eq!(quantile(&[7.0], 0.9), 7.0);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn metrics_format_has_four_decimals() {
        let m = MetricsReport {
            covering: 1.0,
            pri: 0.5,
            vi: 2f64.ln() * 2.0,
        };
        assert_eq!(format_metrics(&m), "covering=1.0000 pri=0.5000 vi=1.3863");
    }

    #[test]
    fn csv_header_written_once() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        append_csv(&p, "a,b", &["1,2".into()]).unwrap();
        append_csv(&p, "a,b", &["3,4".into()]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "a,b\n1,2\n3,4\n");
    }
}
