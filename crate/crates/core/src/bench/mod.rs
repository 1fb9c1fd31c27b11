//! Monte Carlo trial harness.
//!
//! A trial synthesizes a record, adds noise seeded from `(master seed, trial
//! index)`, runs the estimator and scores it against the truth. Trials are
//! independent, so they run in parallel; results are collected in index
//! order and reduced serially, which keeps every aggregate bit-identical
//! between runs and thread counts.

pub mod experiments;
pub mod ipfft;

use rayon::prelude::*;
use serde_json::json;

use crate::chirp::{estimate_chirp, ChirpWindow};
use crate::error::{invalid, Result};
use crate::filters::FilterResponse;
use crate::pencil::{estimate_multitone, EstimatorOptions, ToneEstimate};
use crate::signal::{derive_seed, wrap_phase, ChirpSpec, DualChannelRecord, MultiToneSpec, SamplingGrid};

/// Aliased exponentials closer than this make the pencil unsolvable.
pub const COLLISION_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum TrialSpec {
    Multitone(MultiToneSpec),
    /// A chirp observed in one or more windows.
    Chirp(ChirpSpec),
}

#[derive(Clone, Debug)]
pub struct TrialConfig {
    pub spec: TrialSpec,
    /// One grid for multi-tone specs; one grid per window for chirps.
    pub grids: Vec<SamplingGrid>,
    pub filter: FilterResponse,
    pub snr_db: Option<f64>,
    pub options: EstimatorOptions,
    pub trials: usize,
    pub seed: u64,
}

impl TrialConfig {
    pub fn multitone(spec: MultiToneSpec, grid: SamplingGrid) -> Self {
        Self {
            spec: TrialSpec::Multitone(spec),
            grids: vec![grid],
            filter: FilterResponse::differentiator(),
            snr_db: None,
            options: EstimatorOptions::default(),
            trials: 1,
            seed: 0,
        }
    }

    pub fn chirp(spec: ChirpSpec, windows: Vec<SamplingGrid>) -> Self {
        Self {
            spec: TrialSpec::Chirp(spec),
            grids: windows,
            filter: FilterResponse::differentiator(),
            snr_db: None,
            options: EstimatorOptions::default(),
            trials: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trial count must be at least 1"));
        }
        if self.grids.is_empty() {
            return Err(invalid("at least one sampling grid is required"));
        }
        for g in &self.grids {
            g.validate()?;
        }
        if let Some(s) = self.snr_db {
            if s.is_nan() {
                return Err(invalid("SNR must not be NaN"));
            }
        }
        match &self.spec {
            TrialSpec::Multitone(spec) => {
                if self.grids.len() != 1 {
                    return Err(invalid("multi-tone trials take exactly one grid"));
                }
                let sep = spec.min_alias_separation(self.grids[0].dt);
                if sep <= COLLISION_THRESHOLD {
                    return Err(invalid(format!(
                        "sampling interval {} s aliases two components together (separation {sep:e})",
                        self.grids[0].dt
                    )));
                }
            }
            TrialSpec::Chirp(spec) => spec.validate()?,
        }
        Ok(())
    }

    /// Machine-readable description for output metadata.
    pub fn to_json(&self) -> serde_json::Value {
        let spec = match &self.spec {
            TrialSpec::Multitone(s) => json!({ "multitone": s }),
            TrialSpec::Chirp(s) => json!({ "chirp": s }),
        };
        json!({
            "spec": spec,
            "grids": self.grids,
            "filter": self.filter.descriptor(),
            "snr_db": self.snr_db,
            "pencil_n": self.options.pencil_n,
            "order": self.options.order.to_string(),
            "amplitude": format!("{:?}", self.options.amplitude).to_lowercase(),
            "trials": self.trials,
            "seed": self.seed,
        })
    }
}

/// Errors of one truth component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentError {
    pub f_true: f64,
    pub a_true: f64,
    /// Matched estimate, `None` when the component was not recovered.
    pub estimate: Option<ToneEstimate>,
    /// `|f̂ − f| / |f|`.
    pub df: f64,
    /// `|â − a| / a`.
    pub da: f64,
    /// Wrapped phase difference in radians.
    pub dphi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub trial: usize,
    pub components: Vec<ComponentError>,
    /// Relative error of the chirp rate, for chirp trials.
    pub dk: Option<f64>,
    /// Estimator error message when the trial failed.
    pub failure: Option<String>,
}

impl ErrorReport {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    fn matched(&self) -> impl Iterator<Item = &ComponentError> {
        self.components.iter().filter(|c| c.estimate.is_some())
    }

    /// RMSE of `(Δf, Δa, Δφ)` over the matched components.
    pub fn rmse(&self) -> Option<[f64; 3]> {
        let errs: Vec<[f64; 3]> = self.matched().map(|c| [c.df, c.da, c.dphi]).collect();
        rmse_of(&errs)
    }

    pub fn max_errors(&self) -> [f64; 3] {
        self.matched().fold([0.0; 3], |m, c| [m[0].max(c.df), m[1].max(c.da), m[2].max(c.dphi)])
    }

    /// Number of truth components without a matched estimate.
    pub fn missed(&self) -> usize {
        self.components.iter().filter(|c| c.estimate.is_none()).count()
    }
}

fn rmse_of(errs: &[[f64; 3]]) -> Option<[f64; 3]> {
    if errs.is_empty() {
        return None;
    }
    let mut acc = [0.0; 3];
    for e in errs {
        for k in 0..3 {
            acc[k] += e[k] * e[k];
        }
    }
    Some(acc.map(|s| (s / errs.len() as f64).sqrt()))
}

/// Greedy unique assignment of estimates to truth by nearest frequency.
/// Returns, for each truth index, the index of its estimate.
pub fn match_components(truth: &[f64], estimates: &[f64]) -> Vec<Option<usize>> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(truth.len() * estimates.len());
    for (i, t) in truth.iter().enumerate() {
        for (j, e) in estimates.iter().enumerate() {
            pairs.push(((t - e).abs(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assigned = vec![None; truth.len()];
    let mut used = vec![false; estimates.len()];
    for (_, i, j) in pairs {
        if assigned[i].is_none() && !used[j] {
            assigned[i] = Some(j);
            used[j] = true;
        }
    }
    assigned
}

/// Scores estimates against a multi-tone truth.
pub fn score(spec: &MultiToneSpec, estimates: &[ToneEstimate]) -> Vec<ComponentError> {
    let truth: Vec<f64> = spec.components().iter().map(|c| c.f).collect();
    let est_f: Vec<f64> = estimates.iter().map(|e| e.f).collect();
    match_components(&truth, &est_f)
        .into_iter()
        .zip(spec.components())
        .map(|(j, c)| match j {
            Some(j) => {
                let e = estimates[j];
                ComponentError {
                    f_true: c.f,
                    a_true: c.a,
                    estimate: Some(e),
                    df: (e.f - c.f).abs() / c.f.abs(),
                    da: (e.a - c.a).abs() / c.a,
                    dphi: wrap_phase(e.phi0 - c.phi0).abs(),
                }
            }
            None => ComponentError {
                f_true: c.f,
                a_true: c.a,
                estimate: None,
                df: f64::NAN,
                da: f64::NAN,
                dphi: f64::NAN,
            },
        })
        .collect()
}

/// Runs trial `index` of `config`. Estimator failures are recorded, not raised.
pub fn run_trial(config: &TrialConfig, index: usize) -> Result<ErrorReport> {
    config.validate()?;
    let seed = derive_seed(config.seed, index as u64);
    let mut report = ErrorReport { trial: index, components: Vec::new(), dk: None, failure: None };
    match &config.spec {
        TrialSpec::Multitone(spec) => {
            let record =
                DualChannelRecord::multitone(spec, &config.filter, config.grids[0], config.snr_db, Some(seed))?;
            match estimate_multitone(&record, &config.filter, &config.options) {
                Ok(est) => report.components = score(spec, &est.components),
                Err(e) => {
                    report.components = score(spec, &[]);
                    report.failure = Some(e.to_string());
                }
            }
        }
        TrialSpec::Chirp(spec) => {
            let windows = config
                .grids
                .iter()
                .enumerate()
                .map(|(w, g)| {
                    let r = DualChannelRecord::chirp(spec, *g, config.snr_db, Some(derive_seed(seed, w as u64)))?;
                    ChirpWindow::from_record(&r, config.options.pencil_n)
                })
                .collect::<Result<Vec<_>>>()?;
            match estimate_chirp(&windows) {
                Ok((est, _)) => {
                    let tone = ToneEstimate { f: est.f, a: est.a, phi0: est.phi0, inversion_residual: est.fit_residual };
                    report.components = vec![ComponentError {
                        f_true: spec.f,
                        a_true: spec.a,
                        estimate: Some(tone),
                        df: relative(est.f, spec.f),
                        da: relative(est.a, spec.a),
                        dphi: wrap_phase(est.phi0 - spec.phi0).abs(),
                    }];
                    report.dk = Some(relative(est.k, spec.k));
                }
                Err(e) => report.failure = Some(e.to_string()),
            }
        }
    }
    Ok(report)
}

/// `|est − truth| / |truth|`, or the absolute error when the truth is zero.
pub fn relative(est: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        est.abs()
    } else {
        (est - truth).abs() / truth.abs()
    }
}

/// Runs every trial of `config`, in parallel, returning reports in index order.
pub fn run_trials(config: &TrialConfig) -> Result<Vec<ErrorReport>> {
    config.validate()?;
    (0..config.trials).into_par_iter().map(|i| run_trial(config, i)).collect()
}

/// Serial counterpart of [`run_trials`].
pub fn run_trials_serial(config: &TrialConfig) -> Result<Vec<ErrorReport>> {
    config.validate()?;
    (0..config.trials).map(|i| run_trial(config, i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub trials: usize,
    pub failed: usize,
    /// RMSE of `(Δf, Δa, Δφ)` pooled over all matched components of all
    /// successful trials.
    pub rmse: [f64; 3],
    /// Median over successful trials of the per-trial RMSE.
    pub median_rmse: [f64; 3],
}

impl Aggregate {
    pub fn failure_rate(&self) -> f64 {
        self.failed as f64 / self.trials as f64
    }

    pub fn log10_rmse(&self) -> [f64; 3] {
        self.rmse.map(f64::log10)
    }
}

/// Reduces reports in trial-index order, so the result does not depend on
/// how the trials were scheduled.
pub fn aggregate(reports: &[ErrorReport]) -> Aggregate {
    let mut sorted: Vec<&ErrorReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.trial);
    let ok: Vec<&ErrorReport> = sorted.iter().copied().filter(|r| !r.failed()).collect();
    let pooled: Vec<[f64; 3]> = ok.iter().flat_map(|r| r.matched().map(|c| [c.df, c.da, c.dphi])).collect();
    let per_trial: Vec<[f64; 3]> = ok.iter().filter_map(|r| r.rmse()).collect();
    let median_rmse = [0, 1, 2].map(|k| median(per_trial.iter().map(|e| e[k]).collect()));
    Aggregate {
        trials: reports.len(),
        failed: reports.len() - ok.len(),
        rmse: rmse_of(&pooled).unwrap_or([f64::NAN; 3]),
        median_rmse,
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
