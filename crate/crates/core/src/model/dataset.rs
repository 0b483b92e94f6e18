//! CSV dataset I/O.
//!
//! One row per subject with header `id,s,delta,epsilon,v,m,d[,t]`. The `t`
//! column holds the true event age and is present only in simulated data.
//! Floating-point fields are written with shortest round-trip formatting,
//! so loading a written file reproduces the in-memory values exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::recall::RecallStatus;
use crate::model::record::SubjectRecord;

fn fmt_float(x: f64) -> String {
    format!("{x}")
}

/// Write records as CSV. The `t` column is emitted when any record carries
/// a true event age.
pub fn write_csv<W: Write>(writer: W, records: &[SubjectRecord]) -> Result<()> {
    let with_truth = records.iter().any(|r| r.true_age.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id", "s", "delta", "epsilon", "v", "m", "d"];
    if with_truth {
        header.push("t");
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.id.to_string(),
            fmt_float(r.interview_age),
            if r.event_occurred { "1" } else { "0" }.to_string(),
            r.recall.code().to_string(),
            fmt_float(r.observed),
            r.birth_month.to_string(),
            fmt_float(r.birth_offset),
        ];
        if with_truth {
            row.push(r.true_age.map(fmt_float).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_path<P: AsRef<Path>>(path: P, records: &[SubjectRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(std::io::BufWriter::new(file), records)
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let raw = row
        .get(idx)
        .ok_or_else(|| Error::InvalidData(format!("missing column `{name}`")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::InvalidData(format!("bad value {raw:?} in column `{name}`")))
}

/// Read and validate a CSV dataset.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<SubjectRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = ["id", "s", "delta", "epsilon", "v", "m", "d"];
    let mut idx = [0usize; 7];
    for (k, name) in required.iter().enumerate() {
        idx[k] = col(name)
            .ok_or_else(|| Error::InvalidData(format!("missing required column `{name}`")))?;
    }
    let t_idx = col("t");

    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let delta: u8 = parse_field(&row, idx[2], "delta")?;
        if delta > 1 {
            return Err(Error::InvalidData(format!("delta must be 0 or 1, got {delta}")));
        }
        let eps_code: u8 = parse_field(&row, idx[3], "epsilon")?;
        let rec = SubjectRecord {
            id: parse_field(&row, idx[0], "id")?,
            interview_age: parse_field(&row, idx[1], "s")?,
            event_occurred: delta == 1,
            recall: RecallStatus::from_code(eps_code)?,
            observed: parse_field(&row, idx[4], "v")?,
            birth_month: parse_field(&row, idx[5], "m")?,
            birth_offset: parse_field(&row, idx[6], "d")?,
            true_age: match t_idx {
                Some(i) => {
                    let raw = row.get(i).unwrap_or("").trim();
                    if raw.is_empty() { None } else { Some(raw.parse().map_err(|_| {
                        Error::InvalidData(format!("bad value {raw:?} in column `t`"))
                    })?) }
                }
                None => None,
            },
        };
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Vec<SubjectRecord>> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| {
        Error::InvalidData(format!("cannot open {}: {e}", path.as_ref().display()))
    })?;
    read_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<SubjectRecord> {
        vec![
            SubjectRecord {
                id: 1,
                interview_age: 14.0,
                event_occurred: true,
                recall: RecallStatus::Exact,
                observed: 11.532,
                birth_month: 6,
                birth_offset: 0.03,
                true_age: Some(11.532),
            },
            SubjectRecord {
                id: 2,
                interview_age: 9.0,
                event_occurred: false,
                recall: RecallStatus::Exact,
                observed: 0.0,
                birth_month: 2,
                birth_offset: 1.0 / 24.0,
                true_age: Some(10.7),
            },
            SubjectRecord {
                id: 3,
                interview_age: 16.0,
                event_occurred: true,
                recall: RecallStatus::Month,
                observed: 139.0 / 12.0,
                birth_month: 11,
                birth_offset: 0.01,
                true_age: Some(11.5901),
            },
        ]
    }

    #[test]
    fn roundtrip_is_exact() {
        let records = sample();
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn truth_column_omitted_without_truth() {
        let mut records = sample();
        for r in &mut records {
            r.true_age = None;
        }
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap() == "id,s,delta,epsilon,v,m,d");
    }

    #[test]
    fn rejects_missing_column() {
        let text = "id,s,delta,epsilon,v,m\n1,14,1,0,11.5,6\n";
        assert!(read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn rejects_invalid_rows() {
        let text = "id,s,delta,epsilon,v,m,d\n1,14,1,9,11.5,6,0.01\n";
        assert!(read_csv(text.as_bytes()).is_err());
        let text = "id,s,delta,epsilon,v,m,d\n1,14,0,0,3.0,6,0.01\n";
        assert!(read_csv(text.as_bytes()).is_err());
    }
}
