//! Reproduction experiments. Each returns its rows as a [`CsvTable`] along
//! with the typed results, so callers can both write files and check values.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::ipfft::ipfft_baseline;
use super::{aggregate, run_trial, run_trials, score, Aggregate, ComponentError, ErrorReport, TrialConfig};
use crate::chirp::{estimate_chirp, ChirpWindow, LosScenario};
use crate::chirp::doppler_to_motion;
use crate::error::Result;
use crate::filters::FilterResponse;
use crate::numfmt::f17;
use crate::pencil::{estimate_multitone, EstimatorOptions, OrderStrategy};
use crate::reference::{self, ten_tone, GNSS_ANGLES_DEG, GNSS_CARRIER_HZ};
use crate::signal::{synth_multitone, DualChannelRecord, SamplingGrid};

/// A CSV document: a `# config = <JSON>` line, a column line, then rows.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub config: serde_json::Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(name: &str, config: serde_json::Value, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            config,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# config = {}\n{}\n", self.config, self.columns.join(","));
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes `<dir>/<name>.csv` and returns its path.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        fs::write(&path, self.to_csv())?;
        Ok(path)
    }
}

fn opt17(x: Option<f64>) -> String {
    x.map_or_else(String::new, f17)
}

pub const TABLE2_SUB_FS: f64 = 79.9;
pub const TABLE2_SUB_COUNT: usize = 38;
pub const TABLE2_SUB_N: usize = 19;
pub const TABLE2_NYQUIST_FS: f64 = 2.5 * 7990.0;
pub const TABLE2_NYQUIST_COUNT: usize = 1024;

pub struct Table2 {
    pub sub_nyquist: ErrorReport,
    pub nyquist: ErrorReport,
    pub ipfft: Vec<ComponentError>,
    pub table: CsvTable,
}

/// Noiseless ten-tone estimation at a sub-Nyquist and a Nyquist rate, plus
/// the interpolated-FFT baseline at the Nyquist rate.
pub fn table2() -> Result<Table2> {
    let spec = ten_tone();
    let mut sub = TrialConfig::multitone(spec.clone(), SamplingGrid::from_rate(TABLE2_SUB_FS, 0.0, TABLE2_SUB_COUNT)?);
    sub.options.pencil_n = Some(TABLE2_SUB_N);
    let nyq_grid = SamplingGrid::from_rate(TABLE2_NYQUIST_FS, 0.0, TABLE2_NYQUIST_COUNT)?;
    let nyq = TrialConfig::multitone(spec.clone(), nyq_grid);

    let sub_nyquist = run_trial(&sub, 0)?;
    let nyquist = run_trial(&nyq, 0)?;
    let x = synth_multitone(&spec, &nyq_grid)?;
    let ipfft = score(&spec, &ipfft_baseline(&x, &nyq_grid, spec.m())?);

    let config = json!({
        "experiment": "table2",
        "sub_nyquist": sub.to_json(),
        "nyquist": nyq.to_json(),
        "ipfft": { "grid": nyq_grid, "m": spec.m() },
        "fs_rule": "sub-Nyquist fs = 0.01 * f_max",
    });
    let mut table = CsvTable::new(
        "table2",
        config,
        &[
            "f_hz", "amp", "phase_deg",
            "sub_df", "sub_da", "sub_dphi_rad",
            "nyq_df", "nyq_da", "nyq_dphi_rad",
            "ipfft_df", "ipfft_da", "ipfft_dphi_rad",
        ],
    );
    for (i, c) in spec.components().iter().enumerate() {
        let mut row = vec![f17(c.f), f17(c.a), f17(reference::TEN_TONE[i].2)];
        for e in [&sub_nyquist.components[i], &nyquist.components[i], &ipfft[i]] {
            row.extend([f17(e.df), f17(e.da), f17(e.dphi)]);
        }
        table.push(row);
    }
    Ok(Table2 { sub_nyquist, nyquist, ipfft, table })
}

pub const FIG5_SCALE: f64 = 1e5;
/// Fraction of the Nyquist rate `2·f_max` used for the sweep.
pub const FIG5_RATE_FRACTION: f64 = 0.001;
pub const FIG5_LENGTHS: [usize; 15] = [76, 114, 152, 190, 228, 266, 304, 342, 380, 418, 456, 494, 532, 570, 608];
pub const FIG5_LENGTH_STEP: usize = 38;

pub struct Fig5 {
    pub points: Vec<(usize, Aggregate)>,
    pub table: CsvTable,
}

/// Sample-length sweep on the frequency-scaled ten-tone signal.
pub fn fig5(trials: usize, seed: u64, snr_db: Option<f64>) -> Result<Fig5> {
    let spec = ten_tone().scale_frequencies(FIG5_SCALE)?;
    let fs = FIG5_RATE_FRACTION * 2.0 * spec.max_frequency();
    let mut configs = Vec::new();
    for &len in &FIG5_LENGTHS {
        let mut c = TrialConfig::multitone(spec.clone(), SamplingGrid::from_rate(fs, 0.0, len)?);
        c.options = EstimatorOptions {
            pencil_n: Some(len / 2),
            order: OrderStrategy::Fixed(spec.m()),
            ..Default::default()
        };
        c.snr_db = snr_db;
        c.trials = trials;
        c.seed = seed;
        configs.push(c);
    }
    let config = json!({
        "experiment": "fig5",
        "spec": spec,
        "fs_hz": fs,
        "lengths": FIG5_LENGTHS,
        "pencil_n": "length / 2",
        "order": configs[0].options.order.to_string(),
        "filter": configs[0].filter.descriptor(),
        "snr_db": snr_db,
        "trials": trials,
        "seed": seed,
    });
    let mut table = CsvTable::new(
        "fig5",
        config,
        &["length", "rel_length", "trials", "failed", "log10_rmse_f", "log10_rmse_a", "log10_rmse_phi"],
    );
    let mut points = Vec::new();
    for c in &configs {
        let len = c.grids[0].count;
        let agg = aggregate(&run_trials(c)?);
        let l = agg.log10_rmse();
        table.push(vec![
            len.to_string(),
            (len / FIG5_LENGTH_STEP).to_string(),
            agg.trials.to_string(),
            agg.failed.to_string(),
            f17(l[0]),
            f17(l[1]),
            f17(l[2]),
        ]);
        points.push((len, agg));
    }
    Ok(Fig5 { points, table })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Table3Row {
    pub angle_deg: f64,
    pub ref_v: f64,
    pub est_v: f64,
    pub err_v: f64,
    pub ref_a: f64,
    pub est_a: f64,
    pub err_a: f64,
}

pub struct Table3 {
    pub rows: Vec<Table3Row>,
    pub table: CsvTable,
}

/// GNSS Doppler scenario: projected velocity and acceleration from two
/// back-to-back windows, per line-of-sight angle.
pub fn table3() -> Result<Table3> {
    let grids = reference::gnss_windows()?;
    let config = json!({
        "experiment": "table3",
        "carrier_hz": GNSS_CARRIER_HZ,
        "speed_mps": reference::GNSS_SPEED_MPS,
        "accel_mps2": reference::GNSS_ACCEL_MPS2,
        "windows": grids,
        "samples_per_window": reference::GNSS_WINDOW_SAMPLES,
        "reference": "v*cos(angle), a*cos(angle)",
        "snr_db": null,
    });
    let mut table = CsvTable::new(
        "table3",
        config,
        &["angle_deg", "ref_v_mps", "sngem_v_mps", "err_v", "ref_a_mps2", "sngem_a_mps2", "err_a", "fit_residual"],
    );
    let mut rows = Vec::new();
    for &angle in &GNSS_ANGLES_DEG {
        let spec = reference::gnss_chirp(angle)?;
        let windows = grids
            .iter()
            .map(|g| ChirpWindow::from_record(&DualChannelRecord::chirp(&spec, *g, None, None)?, None))
            .collect::<Result<Vec<_>>>()?;
        let (est, _) = estimate_chirp(&windows)?;
        let (est_v, est_a) = doppler_to_motion(est.f, est.k, &LosScenario::new(GNSS_CARRIER_HZ, angle)?)?;
        let (ref_v, ref_a) = reference::gnss_projection(angle);
        let row = Table3Row {
            angle_deg: angle,
            ref_v,
            est_v,
            err_v: super::relative(est_v, ref_v),
            ref_a,
            est_a,
            err_a: super::relative(est_a, ref_a),
        };
        table.push(vec![
            f17(angle),
            f17(ref_v),
            f17(est_v),
            f17(row.err_v),
            f17(ref_a),
            f17(est_a),
            f17(row.err_a),
            f17(est.fit_residual),
        ]);
        rows.push(row);
    }
    Ok(Table3 { rows, table })
}

pub const ROBUSTNESS_PENCIL_SIZES: [usize; 3] = [4, 6, 8];
pub const ROBUSTNESS_SNRS: [f64; 4] = [20.0, 40.0, 60.0, 80.0];
/// Relative frequency error under which a dominant component counts as recovered.
pub const RECOVERY_TOL: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedRow {
    pub n: usize,
    pub f_true: f64,
    pub a_true: f64,
    /// 0 for the largest amplitude.
    pub amplitude_rank: usize,
    /// Closest estimated frequency, if any estimate survived.
    pub nearest_f: Option<f64>,
    pub nearest_df: Option<f64>,
}

impl TruncatedRow {
    pub fn recovered(&self) -> bool {
        self.nearest_df.is_some_and(|d| d <= RECOVERY_TOL)
    }
}

pub struct Robustness {
    pub truncated: Vec<TruncatedRow>,
    pub snr: Vec<(f64, Aggregate)>,
    pub truncated_table: CsvTable,
    pub snr_table: CsvTable,
}

fn robustness_grid() -> Result<SamplingGrid> {
    SamplingGrid::from_rate(TABLE2_SUB_FS, 0.0, TABLE2_SUB_COUNT)
}

/// Truncated-pencil runs with `n < m`: which components are still found.
pub fn truncated_runs(sizes: &[usize]) -> Result<(Vec<TruncatedRow>, CsvTable)> {
    let spec = ten_tone();
    let grid = robustness_grid()?;
    let record = DualChannelRecord::multitone(&spec, &FilterResponse::differentiator(), grid, None, None)?;
    let mut by_amp: Vec<usize> = (0..spec.m()).collect();
    by_amp.sort_by(|&i, &j| spec.components()[j].a.total_cmp(&spec.components()[i].a).then(i.cmp(&j)));
    let config = json!({
        "experiment": "robustness_truncated",
        "spec": spec,
        "grid": grid,
        "pencil_n": sizes,
        "order": "fixed:n",
        "recovery_tol": RECOVERY_TOL,
        "matching": "nearest estimate per truth component, not unique",
    });
    let mut table = CsvTable::new(
        "robustness_truncated",
        config,
        &["n", "f_true_hz", "amp_true", "amplitude_rank", "nearest_f_hz", "nearest_df", "recovered"],
    );
    let mut rows = Vec::new();
    for &n in sizes {
        let opts = EstimatorOptions { pencil_n: Some(n), order: OrderStrategy::Fixed(n), ..Default::default() };
        let estimates = match estimate_multitone(&record, &FilterResponse::differentiator(), &opts) {
            Ok(e) => e.components,
            Err(_) => Vec::new(),
        };
        for (i, c) in spec.components().iter().enumerate() {
            let nearest = estimates.iter().map(|e| e.f).min_by(|a, b| (a - c.f).abs().total_cmp(&(b - c.f).abs()));
            let row = TruncatedRow {
                n,
                f_true: c.f,
                a_true: c.a,
                amplitude_rank: by_amp.iter().position(|&k| k == i).unwrap_or(usize::MAX),
                nearest_f: nearest,
                nearest_df: nearest.map(|f| (f - c.f).abs() / c.f),
            };
            table.push(vec![
                n.to_string(),
                f17(c.f),
                f17(c.a),
                row.amplitude_rank.to_string(),
                opt17(row.nearest_f),
                opt17(row.nearest_df),
                row.recovered().to_string(),
            ]);
            rows.push(row);
        }
    }
    Ok((rows, table))
}

/// Monte Carlo SNR sweep at the sub-Nyquist rate with the true order.
pub fn snr_sweep(snrs: &[f64], trials: usize, seed: u64) -> Result<(Vec<(f64, Aggregate)>, CsvTable)> {
    let spec = ten_tone();
    let mut base = TrialConfig::multitone(spec.clone(), robustness_grid()?);
    base.options = EstimatorOptions {
        pencil_n: Some(TABLE2_SUB_N),
        order: OrderStrategy::Fixed(spec.m()),
        ..Default::default()
    };
    base.trials = trials;
    base.seed = seed;
    let mut config = base.to_json();
    config["experiment"] = json!("robustness_snr");
    config["snr_db"] = json!(snrs);
    let mut table = CsvTable::new(
        "robustness_snr",
        config,
        &[
            "snr_db", "trials", "failed",
            "median_rmse_f", "median_rmse_a", "median_rmse_phi",
            "rmse_f", "rmse_a", "rmse_phi",
        ],
    );
    let mut out = Vec::new();
    for &snr in snrs {
        let mut c = base.clone();
        c.snr_db = Some(snr);
        let agg = aggregate(&run_trials(&c)?);
        table.push(vec![
            f17(snr),
            agg.trials.to_string(),
            agg.failed.to_string(),
            f17(agg.median_rmse[0]),
            f17(agg.median_rmse[1]),
            f17(agg.median_rmse[2]),
            f17(agg.rmse[0]),
            f17(agg.rmse[1]),
            f17(agg.rmse[2]),
        ]);
        out.push((snr, agg));
    }
    Ok((out, table))
}

pub fn robustness(trials: usize, seed: u64) -> Result<Robustness> {
    let (truncated, truncated_table) = truncated_runs(&ROBUSTNESS_PENCIL_SIZES)?;
    let (snr, snr_table) = snr_sweep(&ROBUSTNESS_SNRS, trials, seed)?;
    Ok(Robustness { truncated, snr, truncated_table, snr_table })
}
