//! CSV time series. Floats are written in shortest round-trip form.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::sde::RunOutput;

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        let c = self.column("t").ok_or_else(|| Error::Argument("table has no 't' column".into()))?;
        Ok(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|&v| format_value(v))).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Argument(format!("row {}: '{s}': {e}", i + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Table { header, rows })
    }
}

/// Shortest round-trip form, switching to exponent notation for very small or
/// very large magnitudes.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Argument(format!("csv: {e}"))
}

/// t, est_/err_ per observable, then weight diagnostics.
pub fn run_table(out: &RunOutput) -> Table {
    let mut header = vec!["t".to_string()];
    for mi in &out.observables {
        header.push(format!("est_{}", mi.name()));
        header.push(format!("err_{}", mi.name()));
    }
    header.extend(["sum_w", "ess", "neg_w_frac", "escape_frac", "underflow_count"].map(String::from));
    let rows = out
        .records
        .iter()
        .map(|r| {
            let mut row = vec![r.t];
            for e in &r.stats.estimates {
                row.push(e.value);
                row.push(e.stderr);
            }
            row.extend([
                r.stats.sum_w,
                r.stats.ess,
                r.stats.neg_w_frac,
                r.stats.escape_frac,
                (r.stats.underflow_count as u64 + r.drift_underflow) as f64,
            ]);
            row
        })
        .collect();
    Table { header, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let t = Table {
            header: vec!["t".into(), "est_x".into()],
            rows: vec![vec![0.1, 1.0 / 3.0], vec![0.2, f64::NAN], vec![1e-300, -0.0]],
        };
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,est_x\n0.1,0.3333333333333333\n"));
        let back = Table::read(&buf[..]).unwrap();
        assert_eq!(back.header, t.header);
        assert_eq!(back.rows[0], t.rows[0]);
        assert!(back.rows[1][1].is_nan());
        assert_eq!(back.rows[2][0], 1e-300);
        assert_eq!(format_value(1e-300), "1e-300");
        assert_eq!(format_value(3.2e-17), "3.2e-17");
        assert_eq!(format_value(0.25), "0.25");
    }
}
