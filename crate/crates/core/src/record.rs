//! Text file format for [`DualChannelRecord`].
//!
//! ```text
//! # format_version = 1
//! # kind = multitone
//! # t0_s = 0.0000000000000000e0
//! # dt_s = 1.2515644555694618e-2
//! # n = 40
//! # filter = diff
//! # snr_db = none
//! # seed = none
//! # truth = {"components":[...]}
//! t,re_x,im_x,re_psi,im_psi
//! 0.0000000000000000e0,...
//! ```
//!
//! Numbers are written with 17 significant digits so that every double
//! survives a write/read cycle unchanged.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numfmt::f17;
use crate::signal::{DualChannelRecord, SamplingGrid, SignalKind};

pub const FORMAT_VERSION: u32 = 1;
const COLUMNS: &str = "t,re_x,im_x,re_psi,im_psi";

/// Largest tolerated mismatch between a row's `t` and the header grid,
/// relative to `max(|t|, dt)`.
const TIME_TOLERANCE: f64 = 1e-9;

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn to_string(record: &DualChannelRecord) -> Result<String> {
    record.validate()?;
    let g = &record.grid;
    let mut out = String::new();
    let mut header = |k: &str, v: String| out.push_str(&format!("# {k} = {v}\n"));
    header("format_version", FORMAT_VERSION.to_string());
    header("kind", record.kind.as_str().into());
    header("t0_s", f17(g.t0));
    header("dt_s", f17(g.dt));
    header("n", g.count.to_string());
    header("filter", record.filter.clone());
    header("snr_db", record.snr_db.map_or("none".into(), f17));
    header("seed", record.seed.map_or("none".into(), |s| s.to_string()));
    if let Some(truth) = &record.truth {
        if truth.contains('\n') {
            return Err(fmt_err("truth must be single-line JSON"));
        }
        header("truth", truth.clone());
    }
    out.push_str(COLUMNS);
    out.push('\n');
    for k in 0..g.count {
        let (x, p) = (record.x[k], record.psi[k]);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            f17(g.instant(k)),
            f17(x.re),
            f17(x.im),
            f17(p.re),
            f17(p.im)
        ));
    }
    Ok(out)
}

pub fn parse(text: &str) -> Result<DualChannelRecord> {
    let mut headers = BTreeMap::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        let Some(rest) = line.strip_prefix('#') else { break };
        let (key, value) = rest
            .split_once('=')
            .ok_or_else(|| fmt_err(format!("malformed header line `{line}`")))?;
        headers.insert(key.trim().to_string(), value.trim().to_string());
        lines.next();
    }
    let get = |k: &str| headers.get(k).ok_or_else(|| fmt_err(format!("missing header `{k}`")));
    let version: u32 = get("format_version")?
        .parse()
        .map_err(|_| fmt_err("format_version must be an integer"))?;
    if version != FORMAT_VERSION {
        return Err(fmt_err(format!("unsupported format_version {version}")));
    }
    let kind: SignalKind = get("kind")?.parse().map_err(|e: Error| fmt_err(e.to_string()))?;
    let t0 = num(get("t0_s")?, "t0_s")?;
    let dt = num(get("dt_s")?, "dt_s")?;
    let count: usize = get("n")?.parse().map_err(|_| fmt_err("n must be a non-negative integer"))?;
    let filter = get("filter")?.clone();
    let snr_db = match get("snr_db")?.as_str() {
        "none" => None,
        s => Some(num(s, "snr_db")?),
    };
    let seed = match get("seed")?.as_str() {
        "none" => None,
        s => Some(s.parse().map_err(|_| fmt_err(format!("seed must be a u64, got `{s}`")))?),
    };
    let truth = headers.get("truth").cloned();
    let grid = SamplingGrid::new(t0, dt, count)?;

    match lines.next() {
        Some((_, l)) if l.trim() == COLUMNS => {}
        _ => return Err(fmt_err(format!("expected column line `{COLUMNS}`"))),
    }
    let mut x = Vec::with_capacity(count);
    let mut psi = Vec::with_capacity(count);
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(fmt_err(format!("line {}: expected 5 fields", lineno + 1)));
        }
        let v: Vec<f64> = fields.iter().map(|f| num(f, "sample")).collect::<Result<_>>()?;
        let k = x.len();
        let expected = grid.instant(k);
        if (v[0] - expected).abs() > TIME_TOLERANCE * expected.abs().max(dt) {
            return Err(fmt_err(format!(
                "line {}: t = {} does not match grid instant {}",
                lineno + 1,
                v[0],
                expected
            )));
        }
        x.push(Complex64::new(v[1], v[2]));
        psi.push(Complex64::new(v[3], v[4]));
    }
    if x.len() != count {
        return Err(fmt_err(format!("header declares {count} samples, found {}", x.len())));
    }
    let record = DualChannelRecord { kind, grid, x, psi, filter, snr_db, seed, truth };
    record.validate()?;
    Ok(record)
}

fn num(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| fmt_err(format!("{what}: not a number `{s}`")))?;
    if v.is_nan() {
        return Err(fmt_err(format!("{what}: NaN is not allowed")));
    }
    Ok(v)
}

pub fn write(record: &DualChannelRecord, path: &Path) -> Result<()> {
    fs::write(path, to_string(record)?)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<DualChannelRecord> {
    parse(&fs::read_to_string(path)?)
}
