//! File formats.
//!
//! | file       | columns                                                   |
//! |------------|-----------------------------------------------------------|
//! | contacts   | `user_a,user_b,time`                                      |
//! | scores     | `user,magnitude,time`                                     |
//! | exposures  | `user_id,exposure_magnitude,timestamp`                    |
//! | partition  | `user_id,actor_index`                                     |
//! | id map     | `raw_id,user_id`                                          |
//! | sweep      | `gamma,alpha,source,estimated,actual_depth,reached_set_size,ratio` |
//!
//! Headers are mandatory. Times are integer seconds, floats are written in
//! their shortest round-trip form.

mod sociopatterns;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

pub use sociopatterns::{gen_realworld_scores, ingest_sociopatterns, parse_sociopatterns, IdMap, Ingested};

use crate::engine::RunMetrics;
use crate::error::{Error, Result};
use crate::graph::{Contact, RiskScore, ScoreSet, UserId};
use crate::reachability::SweepRow;

pub const CONTACTS_HEADER: [&str; 3] = ["user_a", "user_b", "time"];
pub const SCORES_HEADER: [&str; 3] = ["user", "magnitude", "time"];
pub const EXPOSURES_HEADER: [&str; 3] = ["user_id", "exposure_magnitude", "timestamp"];
pub const PARTITION_HEADER: [&str; 2] = ["user_id", "actor_index"];
pub const ID_MAP_HEADER: [&str; 2] = ["raw_id", "user_id"];
pub const SWEEP_HEADER: [&str; 7] = [
    "gamma",
    "alpha",
    "source",
    "estimated",
    "actual_depth",
    "reached_set_size",
    "ratio",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a headed CSV file, checking the header and handing each record's
/// fields to `parse` together with its line number.
fn read_table<T, const N: usize>(
    path: &Path,
    header: [&str; N],
    mut parse: impl FnMut(&csv::StringRecord, u64) -> Result<T>,
) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let found = reader.headers().map_err(csv_err(path))?.clone();
    for (i, expected) in header.iter().enumerate() {
        let got = found.get(i).unwrap_or("");
        if got != *expected {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                expected: expected.to_string(),
                found: got.to_string(),
            });
        }
    }
    if found.len() > N {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            expected: "end of header".into(),
            found: found.get(N).unwrap_or("").to_string(),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let line = record.position().map_or(0, |p| p.line());
        out.push(parse(&record, line)?);
    }
    Ok(out)
}

fn field<T: FromStr>(path: &Path, record: &csv::StringRecord, line: u64, i: usize, name: &str) -> Result<T> {
    let raw = record.get(i).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: format!("invalid {name} `{raw}`"),
    })
}

fn write_table<const N: usize>(path: &Path, header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        writer.write_record(&row).map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

pub fn read_contacts(path: &Path) -> Result<Vec<Contact>> {
    read_table(path, CONTACTS_HEADER, |r, line| {
        let a = UserId(field(path, r, line, 0, "user_a")?);
        let b = UserId(field(path, r, line, 1, "user_b")?);
        let time = field(path, r, line, 2, "time")?;
        Ok(Contact::new(a, b, time).unwrap_or(Contact {
            user_a: a,
            user_b: b,
            time,
        }))
    })
}

pub fn write_contacts(path: &Path, contacts: &[Contact]) -> Result<()> {
    write_table(
        path,
        CONTACTS_HEADER,
        contacts
            .iter()
            .map(|c| [c.user_a.to_string(), c.user_b.to_string(), c.time.to_string()]),
    )
}

pub fn read_scores(path: &Path) -> Result<ScoreSet> {
    let rows = read_table(path, SCORES_HEADER, |r, line| {
        let user = UserId(field(path, r, line, 0, "user")?);
        let magnitude: f64 = field(path, r, line, 1, "magnitude")?;
        let time: i64 = field(path, r, line, 2, "time")?;
        let score = RiskScore::new(magnitude, time).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason: e.to_string(),
        })?;
        Ok((user, score))
    })?;
    let mut scores = ScoreSet::new();
    for (user, score) in rows {
        scores.entry(user).or_default().push(score);
    }
    Ok(scores)
}

pub fn write_scores(path: &Path, scores: &ScoreSet) -> Result<()> {
    write_table(
        path,
        SCORES_HEADER,
        scores
            .iter()
            .flat_map(|(u, list)| list.iter().map(move |s| [u.to_string(), s.magnitude.to_string(), s.time.to_string()])),
    )
}

pub fn read_exposures(path: &Path) -> Result<BTreeMap<UserId, RiskScore>> {
    let rows = read_table(path, EXPOSURES_HEADER, |r, line| {
        let user = UserId(field(path, r, line, 0, "user_id")?);
        let magnitude = field(path, r, line, 1, "exposure_magnitude")?;
        let time = field(path, r, line, 2, "timestamp")?;
        Ok((user, RiskScore { magnitude, time }))
    })?;
    Ok(rows.into_iter().collect())
}

pub fn write_exposures(path: &Path, exposures: &BTreeMap<UserId, RiskScore>) -> Result<()> {
    write_table(
        path,
        EXPOSURES_HEADER,
        exposures
            .iter()
            .map(|(u, s)| [u.to_string(), s.magnitude.to_string(), s.time.to_string()]),
    )
}

pub fn read_partition(path: &Path) -> Result<BTreeMap<UserId, u32>> {
    let rows = read_table(path, PARTITION_HEADER, |r, line| {
        Ok((
            UserId(field(path, r, line, 0, "user_id")?),
            field(path, r, line, 1, "actor_index")?,
        ))
    })?;
    Ok(rows.into_iter().collect())
}

pub fn write_partition(path: &Path, assignment: &BTreeMap<UserId, u32>) -> Result<()> {
    write_table(
        path,
        PARTITION_HEADER,
        assignment.iter().map(|(u, a)| [u.to_string(), a.to_string()]),
    )
}

pub fn write_id_map(path: &Path, map: &IdMap) -> Result<()> {
    write_table(
        path,
        ID_MAP_HEADER,
        map.raw_ids()
            .iter()
            .enumerate()
            .map(|(i, raw)| [raw.clone(), i.to_string()]),
    )
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_table(
        path,
        SWEEP_HEADER,
        rows.iter().map(|r| {
            [
                r.gamma.to_string(),
                r.alpha.to_string(),
                r.source.to_string(),
                r.estimated.to_string(),
                r.actual_depth.to_string(),
                r.reached_set_size.to_string(),
                r.ratio.to_string(),
            ]
        }),
    )
}

/// Writes any serializable rows as a headed CSV (bench and summary tables).
pub fn write_records<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        writer.serialize(row).map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

pub fn metrics_json(metrics: &RunMetrics) -> serde_json::Value {
    serde_json::to_value(metrics).expect("metrics serialize")
}

pub fn write_metrics(path: &Path, metrics: &RunMetrics) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, metrics).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(w).map_err(io_err(path))
}
