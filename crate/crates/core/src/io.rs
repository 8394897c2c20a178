//! On-disk formats.
//!
//! * **Signal CSV**: header `t,<p>1,…,<p>d` for some column prefix `<p>`
//!   (`u`, `x`, `w`, `z`, …), then one row per time step with consecutive,
//!   ascending integer `t`. Values are written in Rust's shortest
//!   round-trip decimal form, so a write/read cycle is bit-exact.
//! * **Dataset directory**: `u.csv`, `x.csv`, `w.csv` plus a `dataset.json`
//!   sidecar `{n, m, T, noise_std, seed, sys_tag}`.
//! * **Closed-loop CSV**: `t,x1..xn,u1..um,stage_cost`; the final row holds
//!   only the terminal state, its input and cost fields are empty.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dpc::ClosedLoopRun;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::signals::Signal;
use crate::simulate::TrajectoryDataset;

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse { path: path.to_path_buf(), line, msg: format!("{other:?}") },
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

/// Splits `x12` into `("x", 12)`.
fn split_column(name: &str) -> Option<(&str, usize)> {
    let digits = name.trim_start_matches(|c: char| !c.is_ascii_digit());
    let prefix = &name[..name.len() - digits.len()];
    if prefix.is_empty() || digits.is_empty() {
        return None;
    }
    digits.parse().ok().map(|i| (prefix, i))
}

pub fn signal_to_csv_string(z: &Signal, prefix: &str) -> String {
    let mut out = String::from("t");
    for i in 1..=z.dim() {
        out.push_str(&format!(",{prefix}{i}"));
    }
    out.push('\n');
    for (j, col) in z.as_matrix().column_iter().enumerate() {
        out.push_str(&(z.first_index() + j as i64).to_string());
        for v in col.iter() {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_signal_csv(path: impl AsRef<Path>, z: &Signal, prefix: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, signal_to_csv_string(z, prefix)).map_err(|e| Error::io(path, e))
}

/// Reads a signal CSV; the column prefix is taken from the header.
pub fn read_signal_csv(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signal_csv(&text, path)
}

pub fn parse_signal_csv(text: &str, path: &Path) -> Result<Signal> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.get(0) != Some("t") {
        return Err(parse_err(path, 1, "first column must be `t`"));
    }
    if header.len() < 2 {
        return Err(parse_err(path, 1, "missing column: no signal components after `t`"));
    }
    let prefix = split_column(&header[1])
        .map(|(p, _)| p.to_string())
        .ok_or_else(|| parse_err(path, 1, format!("bad column name `{}`", &header[1])))?;
    for (expected, name) in (1..).zip(header.iter().skip(1)) {
        let want = format!("{prefix}{expected}");
        if name != want {
            return Err(parse_err(path, 1, format!("missing column `{want}` (found `{name}`)")));
        }
    }
    let dim = header.len() - 1;

    let mut first_index = None;
    let mut values = Vec::new();
    let mut count = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != dim + 1 {
            let missing = if record.len() < dim + 1 {
                format!("; missing column `{prefix}{}`", record.len())
            } else {
                String::new()
            };
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}{missing}", dim + 1, record.len()),
            ));
        }
        let t: i64 = record[0]
            .parse()
            .map_err(|_| parse_err(path, line, format!("column `t`: `{}` is not an integer", &record[0])))?;
        let start = *first_index.get_or_insert(t);
        if t != start + count as i64 {
            return Err(parse_err(path, line, format!("column `t`: expected {}, found {t}", start + count as i64)));
        }
        for (i, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                parse_err(path, line, format!("column `{prefix}{}`: `{field}` is not a number", i + 1))
            })?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("column `{prefix}{}`: non-finite value", i + 1)));
            }
            values.push(v);
        }
        count += 1;
    }
    if count == 0 {
        return Err(parse_err(path, 2, "no samples"));
    }
    Signal::from_matrix(first_index.unwrap_or(0), Matrix::from_vec(dim, count, values))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

/// JSON sidecar written next to a dataset's CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub noise_std: f64,
    pub seed: u64,
    #[serde(default)]
    pub sys_tag: String,
}

pub struct DatasetPaths {
    pub u: PathBuf,
    pub x: PathBuf,
    pub w: PathBuf,
    pub sidecar: PathBuf,
}

impl DatasetPaths {
    pub fn in_dir(dir: &Path) -> Self {
        DatasetPaths {
            u: dir.join("u.csv"),
            x: dir.join("x.csv"),
            w: dir.join("w.csv"),
            sidecar: dir.join("dataset.json"),
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_dataset(dir: impl AsRef<Path>, d: &TrajectoryDataset) -> Result<DatasetPaths> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    let paths = DatasetPaths::in_dir(dir);
    write_signal_csv(&paths.u, &d.u, "u")?;
    write_signal_csv(&paths.x, &d.x, "x")?;
    write_signal_csv(&paths.w, &d.w, "w")?;
    write_json(
        &paths.sidecar,
        &DatasetSidecar {
            n: d.n(),
            m: d.m(),
            t: d.len(),
            noise_std: d.noise_std,
            seed: d.seed,
            sys_tag: d.sys_tag.clone(),
        },
    )?;
    Ok(paths)
}

pub fn read_dataset(dir: impl AsRef<Path>) -> Result<TrajectoryDataset> {
    let paths = DatasetPaths::in_dir(dir.as_ref());
    let meta: DatasetSidecar = read_json(&paths.sidecar)?;
    let u = read_signal_csv(&paths.u)?;
    let x = read_signal_csv(&paths.x)?;
    let w = read_signal_csv(&paths.w)?;
    let shape_ok = u.dim() == meta.m
        && u.len() == meta.t
        && x.dim() == meta.n
        && x.len() == meta.t + 1
        && w.dim() == meta.n
        && w.len() == meta.t;
    if !shape_ok {
        return Err(Error::dimension(format!(
            "{}: CSV shapes disagree with sidecar (n={}, m={}, T={})",
            paths.sidecar.display(),
            meta.n,
            meta.m,
            meta.t
        )));
    }
    Ok(TrajectoryDataset { u, x, w, noise_std: meta.noise_std, seed: meta.seed, sys_tag: meta.sys_tag })
}

pub fn closed_loop_to_csv_string(run: &ClosedLoopRun) -> String {
    let (n, m, steps) = (run.x.nrows(), run.u.nrows(), run.u.ncols());
    let mut out = String::from("t");
    (1..=n).for_each(|i| out.push_str(&format!(",x{i}")));
    (1..=m).for_each(|i| out.push_str(&format!(",u{i}")));
    out.push_str(",stage_cost\n");
    for t in 0..=steps {
        out.push_str(&t.to_string());
        for v in run.x.column(t).iter() {
            out.push_str(&format!(",{v}"));
        }
        if t < steps {
            for v in run.u.column(t).iter() {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{}\n", run.stage_costs[t]));
        } else {
            out.push_str(&",".repeat(m + 1));
            out.push('\n');
        }
    }
    out
}

pub fn write_closed_loop_csv(path: impl AsRef<Path>, run: &ClosedLoopRun) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, closed_loop_to_csv_string(run)).map_err(|e| Error::io(path, e))
}

pub fn read_closed_loop_csv(path: impl AsRef<Path>) -> Result<ClosedLoopRun> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let n = header.iter().filter(|h| split_column(h).is_some_and(|(p, _)| p == "x")).count();
    let m = header.iter().filter(|h| split_column(h).is_some_and(|(p, _)| p == "u")).count();
    if header.get(0) != Some("t") || header.get(header.len() - 1) != Some("stage_cost") || header.len() != n + m + 2 {
        return Err(parse_err(path, 1, "expected header t,x1..xn,u1..um,stage_cost"));
    }
    if n == 0 {
        return Err(parse_err(path, 1, "missing column `x1`"));
    }
    let rows: Vec<csv::StringRecord> =
        rdr.records().collect::<std::result::Result<_, _>>().map_err(|e| csv_error(path, e))?;
    if rows.is_empty() {
        return Err(parse_err(path, 2, "no rows"));
    }
    let steps = rows.len() - 1;
    let mut x = Matrix::zeros(n, steps + 1);
    let mut u = Matrix::zeros(m, steps);
    let mut stage_costs = Vec::with_capacity(steps);
    for (t, rec) in rows.iter().enumerate() {
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(t + 2);
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| parse_err(path, line, format!("column `{}`: `{}` is not a number", &header[i], &rec[i])))
        };
        for i in 0..n {
            x[(i, t)] = num(1 + i)?;
        }
        if t < steps {
            for i in 0..m {
                u[(i, t)] = num(1 + n + i)?;
            }
            stage_costs.push(num(1 + n + m)?);
        }
    }
    let tracking_cost = stage_costs.iter().sum();
    Ok(ClosedLoopRun { x, u, stage_costs, tracking_cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excitation::gaussian_input;
    use proptest::prelude::*;

    #[test]
    fn parse_reports_missing_column() {
        let text = "t,x1,x3\n0,1,2\n";
        let err = parse_signal_csv(text, Path::new("x.csv")).unwrap_err();
        assert!(err.to_string().contains("x2"), "{err}");
        let text = "t,u1,u2\n0,1,2\n1,3\n";
        let err = parse_signal_csv(text, Path::new("u.csv")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("u.csv:3") && msg.contains("u2"), "{msg}");
    }

    #[test]
    fn parse_rejects_gaps_and_garbage() {
        assert!(parse_signal_csv("t,z1\n0,1\n2,3\n", Path::new("a")).is_err());
        assert!(parse_signal_csv("t,z1\n0,abc\n", Path::new("a")).is_err());
        assert!(parse_signal_csv("t,z1\n", Path::new("a")).is_err());
        assert!(parse_signal_csv("time,z1\n0,1\n", Path::new("a")).is_err());
        assert!(parse_signal_csv("t,z1\n0,NaN\n", Path::new("a")).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sys = crate::robustness::LtiSystem::double_integrator();
        let u = gaussian_input(1, 12, 0.1, 3).unwrap();
        let d = crate::simulate::simulate(
            &sys,
            &crate::linalg::Vector::zeros(2),
            &u,
            &crate::simulate::NoiseModel { std: 0.01, seed: 3 },
        )
        .unwrap()
        .with_tag("double-integrator");
        write_dataset(dir.path(), &d).unwrap();
        assert_eq!(read_dataset(dir.path()).unwrap(), d);
    }

    proptest! {
        #[test]
        fn signal_csv_round_trip_is_exact(
            dim in 1usize..4,
            len in 1usize..20,
            first in -5i64..5,
            seed in 0u64..1000,
        ) {
            let z = gaussian_input(dim, len, 1e3, seed).unwrap().reindexed(first);
            let back = parse_signal_csv(&signal_to_csv_string(&z, "z"), Path::new("mem")).unwrap();
            prop_assert_eq!(back, z);
        }
    }
}
