//! CSV formats.
//!
//! Datasets use the header `user,grid,value`, occupancies `user,grid,count`.
//! Both are comma separated UTF-8 with a mandatory header row.

use std::io::Write;

use dp_composer_core::dataset::{Dataset, OccupancyArray, Record};

use crate::error::{Error, Result};

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: [&str; 3]) -> Result<()> {
    let headers = rdr.headers()?;
    if headers.iter().ne(expected) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(())
}

/// Yields `(line, user, grid, third column)` for every data row.
fn rows(text: &str, expected: [&str; 3]) -> Result<Vec<(u64, String, String, String)>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, expected)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        if rec[0].is_empty() || rec[1].is_empty() {
            return Err(Error::MalformedRow {
                line,
                reason: "empty user or grid token".into(),
            });
        }
        out.push((
            line,
            rec[0].to_string(),
            rec[1].to_string(),
            rec[2].to_string(),
        ));
    }
    Ok(out)
}

pub fn parse_dataset(csv_text: &str, bound_u: f64) -> Result<Dataset> {
    let mut records = Vec::new();
    for (line, user, grid, value) in rows(csv_text, ["user", "grid", "value"])? {
        let v: f64 = value.parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("`{value}` is not a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::MalformedRow {
                line,
                reason: format!("`{value}` is not finite"),
            });
        }
        records.push(Record::new(user, grid, v));
    }
    Ok(Dataset::new(records, bound_u)?)
}

pub fn parse_occupancy(csv_text: &str) -> Result<OccupancyArray> {
    let mut occ = OccupancyArray::new();
    for (line, user, grid, count) in rows(csv_text, ["user", "grid", "count"])? {
        // negative and zero counts both surface as NonPositiveCount
        let c: i128 = count.parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("`{count}` is not an integer"),
        })?;
        let c = if c <= 0 {
            0
        } else {
            u64::try_from(c).map_err(|_| Error::MalformedRow {
                line,
                reason: format!("count {c} is too large"),
            })?
        };
        occ.insert(user.into(), grid.into(), c)?;
    }
    Ok(occ)
}

pub fn write_dataset<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "grid", "value"])?;
    for r in dataset.records() {
        w.write_record([r.user.as_str(), r.grid.as_str(), &r.value.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn write_occupancy<W: Write>(occupancy: &OccupancyArray, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "grid", "count"])?;
    for (u, g, c) in occupancy.entries() {
        w.write_record([u.as_str(), g.as_str(), &c.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn read_file(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
