//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! to stderr (uncaptured) before asserting.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sngem::bench::experiments::{fig5, robustness, snr_sweep, table2, table3, truncated_runs, FIG5_LENGTHS};
use sngem::chirp::{build_yh, ChirpWindow, StackedSystem};
use sngem::filters::FilterResponse;
use sngem::linalg::{frobenius, hankel, sub, svd};
use sngem::pencil::{
    estimate_multitone, estimate_order, vandermonde_factors, vandermonde_rebuild, AmpMethod, EstimatorOptions,
    OrderStrategy,
};
use sngem::reference::ten_tone;
use sngem::signal::{
    synth_chirp, synth_chirp_derivative, synth_multitone, wrap_phase, ChirpSpec, DualChannelRecord, MultiToneSpec,
    SamplingGrid, ToneComponent,
};

fn report(criterion: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    // written directly so the line shows even when the harness captures output
    let _ = writeln!(std::io::stderr(), "[acceptance] criterion {criterion}: {verdict} ({detail})");
}

fn check(criterion: &str, pass: bool, detail: String) {
    report(criterion, pass, detail.clone());
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn rel(est: f64, truth: f64) -> f64 {
    (est - truth).abs() / truth.abs()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

#[test]
fn criterion_01_sub_nyquist_ten_tone() {
    let (t, elapsed) = timed(|| table2().unwrap());
    let r = &t.sub_nyquist;
    let [df, da, dphi] = r.max_errors();
    let pass = !r.failed()
        && r.missed() == 0
        && df <= 1e-9
        && da <= 1e-5
        && dphi <= 1e-5
        && elapsed < Duration::from_secs(1);
    check(
        "1",
        pass,
        format!("max df={df:.2e} da={da:.2e} dphi={dphi:.2e} rad, missed={}, {elapsed:.2?}", r.missed()),
    );
}

#[test]
fn criterion_02_nyquist_parity() {
    let t = table2().unwrap();
    let r = &t.nyquist;
    let [df, da, dphi] = r.max_errors();
    let pass = !r.failed() && r.missed() == 0 && df <= 1e-9 && da <= 1e-5 && dphi <= 1e-5;
    check("2", pass, format!("max df={df:.2e} da={da:.2e} dphi={dphi:.2e} rad at fs=19975 Hz"));
}

fn five_tones() -> MultiToneSpec {
    let f = [1200.0, 2750.0, 4100.0, 5600.0, 7300.0];
    let a = [1.0, 0.8, 1.3, 0.6, 1.1];
    let p = [0.3, -1.2, 2.0, 0.9, -2.6];
    MultiToneSpec::new((0..5).map(|i| ToneComponent::new(f[i], a[i], p[i]).unwrap()).collect()).unwrap()
}

#[test]
fn criterion_03_rate_invariance() {
    let spec = five_tones();
    let fmax = spec.max_frequency();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = EstimatorOptions { pencil_n: Some(10), ..Default::default() };
    let mut all = Vec::new();
    let mut worst_truth: f64 = 0.0;
    while all.len() < 20 {
        let fs = rng.gen_range(0.01..0.5) * fmax;
        let grid = SamplingGrid::from_rate(fs, 0.0, 20).unwrap();
        if spec.min_alias_separation(grid.dt) < 0.2 {
            continue;
        }
        let rec = DualChannelRecord::multitone(&spec, &FilterResponse::differentiator(), grid, None, None).unwrap();
        let est = estimate_multitone(&rec, &FilterResponse::differentiator(), &opts).unwrap();
        assert_eq!(est.components.len(), 5, "fs = {fs}");
        for (e, c) in est.components.iter().zip(spec.components()) {
            worst_truth = worst_truth
                .max(rel(e.f, c.f))
                .max(rel(e.a, c.a))
                .max(wrap_phase(e.phi0 - c.phi0).abs());
        }
        all.push(est.components);
    }
    let mut worst_pair: f64 = 0.0;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            for (a, b) in all[i].iter().zip(&all[j]) {
                worst_pair = worst_pair
                    .max(rel(a.f, b.f))
                    .max(rel(a.a, b.a))
                    .max(wrap_phase(a.phi0 - b.phi0).abs());
            }
        }
    }
    check(
        "3",
        worst_truth <= 1e-8 && worst_pair <= 1e-8,
        format!("20 rates, worst vs truth {worst_truth:.2e}, worst pairwise {worst_pair:.2e}"),
    );
}

/// Random spec with `m` tones whose aliased exponentials stay apart at `fs`.
fn random_spec_and_grid(rng: &mut ChaCha8Rng, m: usize, count: usize) -> (MultiToneSpec, SamplingGrid) {
    loop {
        let mut comps = Vec::new();
        while comps.len() < m {
            let f: f64 = rng.gen_range(100.0..1e4);
            if comps.iter().all(|c: &ToneComponent| (c.f - f).abs() > 1.0) {
                comps.push(ToneComponent::new(f, rng.gen_range(0.5..2.0), rng.gen_range(-PI..PI)).unwrap());
            }
        }
        let spec = MultiToneSpec::new(comps).unwrap();
        let grid = SamplingGrid::from_rate(rng.gen_range(50.0..2000.0), 0.0, count).unwrap();
        if spec.min_alias_separation(grid.dt) >= 0.2 {
            return (spec, grid);
        }
    }
}

#[test]
fn criterion_04_amplitude_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let diff = FilterResponse::differentiator();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.gen_range(1..=8);
        let n = 2 * m;
        let (spec, grid) = random_spec_and_grid(&mut rng, m, 2 * n);
        let rec = DualChannelRecord::multitone(&spec, &diff, grid, None, None).unwrap();
        let base = EstimatorOptions { pencil_n: Some(n), order: OrderStrategy::Fixed(m), amplitude: AmpMethod::Eq17 };
        let eq17 = estimate_multitone(&rec, &diff, &base).unwrap();
        let lsq = estimate_multitone(&rec, &diff, &EstimatorOptions { amplitude: AmpMethod::Lsq, ..base }).unwrap();
        assert_eq!(eq17.components.len(), lsq.components.len());
        for (a, b) in eq17.components.iter().zip(&lsq.components) {
            let za = Complex64::from_polar(a.a, a.phi0);
            let zb = Complex64::from_polar(b.a, b.phi0);
            worst = worst.max((za - zb).norm() / zb.norm());
        }
    }
    check("4", worst <= 1e-8, format!("100 specs, worst |a17 - alsq|/|alsq| = {worst:.2e}"));
}

#[test]
fn criterion_05_vandermonde_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.gen_range(1..=8);
        let n = rng.gen_range(m..=12);
        let (spec, grid) = random_spec_and_grid(&mut rng, m, (2 * n - 1).max(3));
        // a start offset of up to ±40 samples; much larger |f·t0| puts the
        // rounding of the phase itself above the 1e-12 budget
        let grid = grid.with_t0(rng.gen_range(-40.0..40.0) * grid.dt);
        let x = hankel(&synth_multitone(&spec, &grid).unwrap(), n).unwrap();
        let (s_c, d) = vandermonde_factors(&spec, &grid, n);
        let rebuilt = vandermonde_rebuild(&s_c, &d);
        worst = worst.max(frobenius(&sub(&x, &rebuilt)) / frobenius(&x));
    }
    check("5", worst <= 1e-12, format!("100 specs, worst relative residual {worst:.2e}"));
}

#[test]
fn criterion_06_chirp_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let spec = ChirpSpec::new(
            rng.gen_range(-2e4..2e4),
            rng.gen_range(-500.0..500.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(-PI..PI),
        )
        .unwrap();
        let count = rng.gen_range(5..80);
        let grid = SamplingGrid::new(rng.gen_range(0.0..0.5), rng.gen_range(1e-4..2e-3), count).unwrap();
        let w = ChirpWindow::new(
            grid,
            synth_chirp(&spec, &grid).unwrap(),
            synth_chirp_derivative(&spec, &grid).unwrap(),
            None,
        )
        .unwrap();
        // exercised for its shape checks; the stacked system vectorizes the same matrices
        build_yh(&w.y, &w.grid, w.n).unwrap();
        let sys = StackedSystem::new(&[w]).unwrap();
        let r = sys.residual(Complex64::new(0.0, 2.0 * spec.k), Complex64::new(0.0, TAU * spec.f));
        worst = worst.max(r);
    }
    check("6", worst <= 1e-12, format!("100 chirps, worst relative residual {worst:.2e}"));
}

#[test]
fn criterion_07_gnss_doppler() {
    let (t, elapsed) = timed(|| table3().unwrap());
    let worst = t.rows.iter().map(|r| r.err_v.max(r.err_a)).fold(0.0, f64::max);
    let pass = t.rows.len() == 4 && worst <= 1e-4 && elapsed < Duration::from_secs(1);
    check("7", pass, format!("4 angles, worst relative error {worst:.2e}, {elapsed:.2?}"));
}

#[test]
fn criterion_08_order_estimation() {
    let spec = ten_tone();
    let grid = SamplingGrid::from_rate(79.9, 0.0, 40).unwrap();
    let x = hankel(&synth_multitone(&spec, &grid).unwrap(), 20).unwrap();
    let s = svd(&x).unwrap().s;
    let rel = estimate_order(&s, OrderStrategy::RelThreshold(1e-8)).unwrap();
    let gap = estimate_order(&s, OrderStrategy::LargestLogGap).unwrap();
    check("8", rel == 10 && gap == 10, format!("relthresh -> {rel}, gap -> {gap}"));
}

#[test]
fn criterion_09a_snr_monotonicity() {
    let (points, _) = snr_sweep(&[20.0, 40.0, 60.0], 100, 2024).unwrap();
    let med: Vec<f64> = points.iter().map(|(_, a)| a.median_rmse[0]).collect();
    let pass = med.windows(2).all(|w| w[1] <= w[0]);
    check("9 (SNR sweep)", pass, format!("median frequency RMSE at 20/40/60 dB = {}", med.iter().map(|m| format!("{m:.2e}")).collect::<Vec<_>>().join(" / ")));
}

#[test]
fn criterion_09b_truncated_dominant_recovery() {
    let (rows, _) = truncated_runs(&[8]).unwrap();
    let dominant: Vec<_> = rows.iter().filter(|r| r.amplitude_rank < 4).collect();
    let pass = dominant.len() == 4 && dominant.iter().all(|r| r.recovered());
    let detail = dominant
        .iter()
        .map(|r| format!("{} Hz: {}", r.f_true, r.nearest_df.map_or("none".into(), |d| format!("{d:.2e}"))))
        .collect::<Vec<_>>()
        .join(", ");
    check("9 (n = m - 2)", pass, format!("nearest relative error of 4 largest: {detail}"));
}

#[test]
fn criterion_10_fig5_sweep() {
    let (f, elapsed) = timed(|| fig5(50, 7, None).unwrap());
    let csv = f.table.to_csv();
    let mut lines = csv.lines();
    let header_ok = lines.next().is_some_and(|l| l.starts_with("# config = {"));
    let cols = lines.next().map(|l| l.split(',').count()).unwrap_or(0);
    let rows: Vec<&str> = lines.collect();
    let rows_ok = rows.len() == FIG5_LENGTHS.len()
        && rows.iter().all(|r| {
            let fields: Vec<&str> = r.split(',').collect();
            fields.len() == cols && fields.iter().all(|v| v.parse::<f64>().is_ok() || *v == "-inf")
        });
    let pass = header_ok && cols == 7 && rows_ok && elapsed < Duration::from_secs(60);
    check("10", pass, format!("{} rows x {cols} columns, 50 trials each, {elapsed:.2?}", rows.len()));
}

#[test]
fn criterion_11_determinism() {
    let mut same = Vec::new();
    same.push(("table2", table2().unwrap().table.to_csv() == table2().unwrap().table.to_csv()));
    same.push(("table3", table3().unwrap().table.to_csv() == table3().unwrap().table.to_csv()));
    let f = || fig5(4, 11, Some(60.0)).unwrap().table.to_csv();
    same.push(("fig5", f() == f()));
    let r = || {
        let r = robustness(20, 11).unwrap();
        (r.truncated_table.to_csv(), r.snr_table.to_csv())
    };
    same.push(("robustness", r() == r()));
    let pass = same.iter().all(|(_, s)| *s);
    check("11", pass, format!("{same:?}"));
}
