//! On-disk formats: chain CSV, JSON reports, dispersion and aggregate tables.
//!
//! Layout of an output directory:
//!
//! ```text
//! reports/<stem>.json   one RunReport per run
//! chains/<stem>.csv     iter,qw,qx,qy,qz,tx,ty,tz,log_quality,accepted,branch
//! dispersion.csv        c,bias,success_count,dispersion_area
//! aggregate.csv / aggregate.txt
//! failures.json
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::run::{ChainRecord, RunFailure, RunReport, SamplerKind};
use crate::metrics::{aggregate_csv, aggregate_text, full_precision, AggregateRow, RunMetrics};
use crate::rwmh::Bias;

pub const CHAIN_HEADER: &str = "iter,qw,qx,qy,qz,tx,ty,tz,log_quality,accepted,branch";
pub const DISPERSION_HEADER: &str = "c,bias,success_count,dispersion_area";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse { path: path.into(), reason: e.to_string() })?;
    write_text(path, &text)
}

/// 64-bit FNV-1a, hex encoded.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

pub fn chain_csv(chain: &[ChainRecord]) -> String {
    let mut out = String::with_capacity(chain.len() * 220);
    out.push_str(CHAIN_HEADER);
    out.push('\n');
    for r in chain {
        let q = r.pose.rot.quat();
        let t = r.pose.tra;
        let _ = write!(out, "{}", r.iter);
        for v in [q.w, q.x, q.y, q.z, t.x, t.y, t.z, r.log_quality] {
            out.push(',');
            out.push_str(&full_precision(v));
        }
        let _ = writeln!(out, ",{},{}", r.accepted as u8, r.branch.as_str());
    }
    out
}

/// File stem shared by a run's report and chain.
pub fn run_stem(report: &RunReport) -> String {
    match report.sampler {
        SamplerKind::Combined => format!("run_{}_c{:.6}_s{}", report.bias, report.c, report.seed),
        SamplerKind::RandomWalk => format!("baseline_s{}", report.seed),
    }
}

/// Writes `reports/<stem>.json` and `chains/<stem>.csv`; returns the report path.
pub fn write_run(report: &RunReport, out: &Path) -> Result<PathBuf> {
    let stem = run_stem(report);
    let json = out.join("reports").join(format!("{stem}.json"));
    write_json(&json, report)?;
    write_text(&out.join("chains").join(format!("{stem}.csv")), &chain_csv(&report.chain))?;
    Ok(json)
}

pub fn dispersion_csv(metrics: &[RunMetrics]) -> String {
    let mut out = String::from(DISPERSION_HEADER);
    out.push('\n');
    for m in metrics {
        let _ = writeln!(out, "{},{},{},{}", full_precision(m.c_value), m.bias, m.success_count, full_precision(m.dispersion_area));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionRow {
    pub c: f64,
    pub bias: Bias,
    pub success_count: usize,
    pub dispersion_area: f64,
}

pub fn parse_dispersion_csv(path: &Path, text: &str) -> Result<Vec<DispersionRow>> {
    let bad = |line: usize, reason: String| Error::Parse { path: path.into(), reason: format!("line {line}: {reason}") };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(DISPERSION_HEADER) {
        return Err(bad(1, format!("expected header `{DISPERSION_HEADER}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i + 2, format!("expected 4 fields, got {}", f.len())));
            }
            Ok(DispersionRow {
                c: f[0].trim().parse().map_err(|e| bad(i + 2, format!("c: {e}")))?,
                bias: f[1].parse().map_err(|e| bad(i + 2, e))?,
                success_count: f[2].trim().parse().map_err(|e| bad(i + 2, format!("success_count: {e}")))?,
                dispersion_area: f[3].trim().parse().map_err(|e| bad(i + 2, format!("dispersion_area: {e}")))?,
            })
        })
        .collect()
}

pub fn write_summaries(metrics: &[RunMetrics], rows: &[AggregateRow], out: &Path) -> Result<()> {
    write_text(&out.join("dispersion.csv"), &dispersion_csv(metrics))?;
    write_text(&out.join("aggregate.csv"), &aggregate_csv(rows))?;
    write_text(&out.join("aggregate.txt"), &aggregate_text(rows))
}

pub fn write_failures(failures: &[RunFailure], out: &Path) -> Result<()> {
    write_json(&out.join("failures.json"), &failures)
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.into(), reason: e.to_string() })
}

/// Combined-sampler reports under `dir/reports` (or `dir` itself), sorted by file name.
pub fn read_reports(dir: &Path) -> Result<Vec<RunReport>> {
    let sub = dir.join("reports");
    let root = if sub.is_dir() { sub } else { dir.to_path_buf() };
    let mut paths: Vec<PathBuf> = fs::read_dir(&root)
        .map_err(|e| Error::io(&root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("run_")))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_report(p)).collect()
}
