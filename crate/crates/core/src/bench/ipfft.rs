//! Interpolated-FFT baseline for Nyquist-rate data.
//!
//! Picks the `m` largest local maxima of the DFT magnitude, refines each
//! with a three-point parabola through the peak bin and its neighbours, and
//! reads amplitude and phase from the DTFT at the refined frequency. Only
//! meaningful when every tone lies in `[0, fs)`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::pencil::{sort_components, ToneEstimate};
use crate::signal::SamplingGrid;

pub const MIN_SAMPLES: usize = 8;

pub fn ipfft_baseline(x: &[Complex64], grid: &SamplingGrid, m: usize) -> Result<Vec<ToneEstimate>> {
    let n = x.len().min(grid.count);
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, got: n });
    }
    if m == 0 || m > n / 2 {
        return Err(invalid(format!("cannot pick {m} peaks from {n} bins")));
    }
    let mut spectrum = x[..n].to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);
    let mag: Vec<f64> = spectrum.iter().map(|z| z.norm()).collect();

    let at = |k: isize| mag[k.rem_euclid(n as isize) as usize];
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&k| {
            let k = k as isize;
            at(k) > at(k - 1) && at(k) >= at(k + 1)
        })
        .collect();
    peaks.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]).then(a.cmp(&b)));
    peaks.truncate(m);

    let fs = 1.0 / grid.dt;
    let mut out: Vec<ToneEstimate> = peaks
        .into_iter()
        .map(|k| {
            let (a, b, c) = (at(k as isize - 1), mag[k], at(k as isize + 1));
            let curvature = a - 2.0 * b + c;
            let delta = if curvature != 0.0 { 0.5 * (a - c) / curvature } else { 0.0 };
            let f = (k as f64 + delta.clamp(-0.5, 0.5)) * fs / n as f64;
            ToneEstimate::from_alpha(f, dtft(&x[..n], grid, f), 0.0)
        })
        .collect();
    sort_components(&mut out);
    Ok(out)
}

/// `(1/N)·Σ x_k·e^{−j2πf t_k}` at the absolute sample instants.
fn dtft(x: &[Complex64], grid: &SamplingGrid, f: f64) -> Complex64 {
    let sum: Complex64 = x
        .iter()
        .enumerate()
        .map(|(k, v)| v * grid.tone(f, k).conj())
        .sum();
    sum / x.len() as f64
}
