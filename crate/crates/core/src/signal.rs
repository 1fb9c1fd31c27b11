//! Parametric signal specifications and dual-channel synthesis.
//!
//! All synthesis is evaluated at absolute instants `t_k = t0 + k·dt`, so a
//! component's phase `phi0` is always its phase at `t = 0`, independent of
//! where the sampling window starts.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filters::FilterResponse;

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// `e^{j2πft}` with the cycle count reduced before the trig call.
#[inline]
pub fn unit_tone(f: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * frac_product(f, t))
}

/// Fractional part of `a·b`, taken from the exact product so that large
/// cycle counts do not lose their low digits.
#[inline]
fn frac_product(a: f64, b: f64) -> f64 {
    let p = a * b;
    let err = a.mul_add(b, -p);
    ((p - p.floor()) + err).rem_euclid(1.0)
}

/// One complex exponential `a·e^{j(2πft + phi0)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneComponent {
    pub f: f64,
    pub a: f64,
    pub phi0: f64,
}

impl ToneComponent {
    pub fn new(f: f64, a: f64, phi0: f64) -> Result<Self> {
        if !(f.is_finite() && f > 0.0) {
            return Err(invalid(format!("tone frequency must be positive and finite, got {f}")));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(invalid(format!("tone amplitude must be non-negative, got {a}")));
        }
        if !phi0.is_finite() {
            return Err(invalid("tone phase must be finite"));
        }
        Ok(Self { f, a, phi0: wrap_phase(phi0) })
    }

    /// Complex amplitude `a·e^{j·phi0}`.
    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.a, self.phi0)
    }
}

/// Sum of `m ≥ 1` tones with pairwise distinct frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MultiToneRepr", into = "MultiToneRepr")]
pub struct MultiToneSpec {
    components: Vec<ToneComponent>,
}

#[derive(Serialize, Deserialize)]
struct MultiToneRepr {
    components: Vec<ToneComponent>,
}

impl TryFrom<MultiToneRepr> for MultiToneSpec {
    type Error = Error;
    fn try_from(r: MultiToneRepr) -> Result<Self> {
        MultiToneSpec::new(r.components)
    }
}

impl From<MultiToneSpec> for MultiToneRepr {
    fn from(s: MultiToneSpec) -> Self {
        MultiToneRepr { components: s.components }
    }
}

impl MultiToneSpec {
    pub fn new(components: Vec<ToneComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("a multi-tone spec needs at least one component"));
        }
        let components = components
            .into_iter()
            .map(|c| ToneComponent::new(c.f, c.a, c.phi0))
            .collect::<Result<Vec<_>>>()?;
        for (i, ci) in components.iter().enumerate() {
            for cj in &components[i + 1..] {
                if ci.f == cj.f {
                    return Err(invalid(format!("duplicate component frequency {} Hz", ci.f)));
                }
            }
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[ToneComponent] {
        &self.components
    }

    /// Number of components.
    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn max_frequency(&self) -> f64 {
        self.components.iter().map(|c| c.f).fold(0.0, f64::max)
    }

    /// Multiplies every frequency by `factor`, keeping amplitudes and phases.
    pub fn scale_frequencies(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.components
                .iter()
                .map(|c| ToneComponent { f: c.f * factor, ..*c })
                .collect(),
        )
    }

    /// Smallest distance `|s_i − s_j|` between aliased exponentials
    /// `s_i = e^{j2πf_i·dt}`. Returns `+∞` for a single tone.
    pub fn min_alias_separation(&self, dt: f64) -> f64 {
        let s: Vec<Complex64> = self.components.iter().map(|c| unit_tone(c.f, dt)).collect();
        let mut best = f64::INFINITY;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                best = best.min((s[i] - s[j]).norm());
            }
        }
        best
    }
}

/// Linear-FM chirp `a·e^{j(k t² + 2πft + phi0)}`; `k` is in rad/s².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChirpSpec {
    pub k: f64,
    pub f: f64,
    pub a: f64,
    pub phi0: f64,
}

impl ChirpSpec {
    pub fn new(k: f64, f: f64, a: f64, phi0: f64) -> Result<Self> {
        let spec = Self { k, f, a, phi0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.f.is_finite() && self.a.is_finite() && self.phi0.is_finite()) {
            return Err(invalid("chirp parameters must be finite"));
        }
        if self.a < 0.0 {
            return Err(invalid("chirp amplitude must be non-negative"));
        }
        Ok(())
    }

    /// Instantaneous frequency in Hz.
    pub fn instantaneous_frequency(&self, t: f64) -> f64 {
        self.f + self.k / PI * t
    }
}

/// Uniform sampling instants `t0 + k·dt`, `k = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub t0: f64,
    pub dt: f64,
    pub count: usize,
}

impl SamplingGrid {
    pub fn new(t0: f64, dt: f64, count: usize) -> Result<Self> {
        let g = Self { t0, dt, count };
        g.validate()?;
        Ok(g)
    }

    pub fn from_rate(fs: f64, t0: f64, count: usize) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(invalid(format!("sampling rate must be positive, got {fs}")));
        }
        Self::new(t0, 1.0 / fs, count)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t0.is_finite() {
            return Err(invalid("grid start must be finite"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("sample spacing must be positive, got {}", self.dt)));
        }
        if self.count < 3 {
            return Err(invalid(format!("need at least 3 samples, got {}", self.count)));
        }
        Ok(())
    }

    /// Fractional cycle count of frequency `f` at the `k`-th instant, computed
    /// as `f·t0 + f·dt·k` without rounding the instant itself.
    pub fn cycles(&self, f: f64, k: usize) -> f64 {
        let hi = f * self.dt;
        let lo = f.mul_add(self.dt, -hi);
        let k = k as f64;
        (frac_product(hi, k) + lo * k + frac_product(f, self.t0)).rem_euclid(1.0)
    }

    /// `e^{j2πf·t_k}` at the `k`-th instant.
    #[inline]
    pub fn tone(&self, f: f64, k: usize) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.cycles(f, k))
    }

    /// Instant of the `k`-th sample (0-based).
    #[inline]
    pub fn instant(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn instants(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.instant(k)).collect()
    }

    /// The grid continuing right after this one, with the same spacing.
    pub fn following(&self, count: usize) -> Result<Self> {
        Self::new(self.instant(self.count), self.dt, count)
    }

    pub fn with_t0(&self, t0: f64) -> Self {
        Self { t0, ..*self }
    }
}

pub fn synth_multitone(spec: &MultiToneSpec, grid: &SamplingGrid) -> Result<Vec<Complex64>> {
    grid.validate()?;
    Ok(synth_weighted(spec, grid, |_| Complex64::new(1.0, 0.0)))
}

/// Steady-state response of the filter to the multi-tone: each component is
/// scaled by `β(f_i)`.
pub fn synth_filtered(
    spec: &MultiToneSpec,
    filter: &FilterResponse,
    grid: &SamplingGrid,
) -> Result<Vec<Complex64>> {
    grid.validate()?;
    let betas = spec
        .components()
        .iter()
        .map(|c| filter.response(c.f))
        .collect::<Result<Vec<_>>>()?;
    Ok(synth_weighted(spec, grid, |i| betas[i]))
}

fn synth_weighted(
    spec: &MultiToneSpec,
    grid: &SamplingGrid,
    weight: impl Fn(usize) -> Complex64,
) -> Vec<Complex64> {
    let coeffs: Vec<Complex64> = spec
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| weight(i) * c.alpha())
        .collect();
    (0..grid.count)
        .map(|k| {
            spec.components()
                .iter()
                .zip(&coeffs)
                .map(|(c, w)| w * grid.tone(c.f, k))
                .sum()
        })
        .collect()
}

fn chirp_phase(spec: &ChirpSpec, t: f64) -> f64 {
    spec.k * t * t + TAU * spec.f * t + spec.phi0
}

pub fn synth_chirp(spec: &ChirpSpec, grid: &SamplingGrid) -> Result<Vec<Complex64>> {
    spec.validate()?;
    grid.validate()?;
    Ok((0..grid.count)
        .map(|k| Complex64::from_polar(spec.a, chirp_phase(spec, grid.instant(k))))
        .collect())
}

/// Exact time derivative `ẏ = j(2kt + 2πf)·y` of [`synth_chirp`].
pub fn synth_chirp_derivative(spec: &ChirpSpec, grid: &SamplingGrid) -> Result<Vec<Complex64>> {
    let y = synth_chirp(spec, grid)?;
    Ok(y.into_iter()
        .enumerate()
        .map(|(k, yk)| {
            let t = grid.instant(k);
            J * (2.0 * spec.k * t + TAU * spec.f) * yk
        })
        .collect())
}

/// Adds circular complex white Gaussian noise at `snr_db`, defined as
/// `10·log10(mean|s|² / σ²)` with `σ²` the noise variance per complex sample.
/// An infinite SNR returns the input unchanged.
pub fn add_noise(seq: &[Complex64], snr_db: f64, seed: u64) -> Result<Vec<Complex64>> {
    if seq.is_empty() {
        return Err(invalid("cannot add noise to an empty sequence"));
    }
    if snr_db == f64::INFINITY {
        return Ok(seq.to_vec());
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(invalid(format!("SNR must be a finite dB value or none, got {snr_db}")));
    }
    let power = seq.iter().map(|z| z.norm_sqr()).sum::<f64>() / seq.len() as f64;
    if power == 0.0 {
        return Err(Error::ZeroPowerSignal);
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(seq
        .iter()
        .map(|z| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            z + Complex64::new(sigma * re, sigma * im)
        })
        .collect())
}

/// Derives an independent 64-bit seed for `stream` from `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Multitone,
    Chirp,
}

impl SignalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignalKind::Multitone => "multitone",
            SignalKind::Chirp => "chirp",
        }
    }
}

impl std::str::FromStr for SignalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multitone" => Ok(SignalKind::Multitone),
            "chirp" => Ok(SignalKind::Chirp),
            other => Err(invalid(format!("unknown signal kind `{other}`"))),
        }
    }
}

/// Synchronous samples of a signal `x` and its filtered copy `psi`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualChannelRecord {
    pub kind: SignalKind,
    pub grid: SamplingGrid,
    pub x: Vec<Complex64>,
    pub psi: Vec<Complex64>,
    /// Filter descriptor, see [`FilterResponse::descriptor`].
    pub filter: String,
    /// `None` means noiseless.
    pub snr_db: Option<f64>,
    pub seed: Option<u64>,
    /// JSON of the generating spec, when known.
    pub truth: Option<String>,
}

impl DualChannelRecord {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.x.len() != self.grid.count || self.psi.len() != self.grid.count {
            return Err(invalid(format!(
                "channel lengths ({}, {}) do not match sample count {}",
                self.x.len(),
                self.psi.len(),
                self.grid.count
            )));
        }
        Ok(())
    }

    /// Synthesizes a multi-tone record. Noise, when requested, is drawn
    /// independently for each channel at the same SNR.
    pub fn multitone(
        spec: &MultiToneSpec,
        filter: &FilterResponse,
        grid: SamplingGrid,
        snr_db: Option<f64>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let x = synth_multitone(spec, &grid)?;
        let psi = synth_filtered(spec, filter, &grid)?;
        let (x, psi) = noisy_pair(x, psi, snr_db, seed)?;
        Ok(Self {
            kind: SignalKind::Multitone,
            grid,
            x,
            psi,
            filter: filter.descriptor(),
            snr_db,
            seed,
            truth: Some(serde_json::to_string(spec)?),
        })
    }

    /// Synthesizes a chirp and its exact derivative.
    pub fn chirp(
        spec: &ChirpSpec,
        grid: SamplingGrid,
        snr_db: Option<f64>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let y = synth_chirp(spec, &grid)?;
        let ydot = synth_chirp_derivative(spec, &grid)?;
        let (x, psi) = noisy_pair(y, ydot, snr_db, seed)?;
        Ok(Self {
            kind: SignalKind::Chirp,
            grid,
            x,
            psi,
            filter: FilterResponse::differentiator().descriptor(),
            snr_db,
            seed,
            truth: Some(serde_json::to_string(spec)?),
        })
    }

    /// Multiplies both channels by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            x: self.x.iter().map(|z| z * c).collect(),
            psi: self.psi.iter().map(|z| z * c).collect(),
            ..self.clone()
        }
    }
}

fn noisy_pair(
    x: Vec<Complex64>,
    psi: Vec<Complex64>,
    snr_db: Option<f64>,
    seed: Option<u64>,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    match snr_db {
        None => Ok((x, psi)),
        Some(snr) => {
            let seed = seed.unwrap_or(0);
            Ok((
                add_noise(&x, snr, derive_seed(seed, 0))?,
                add_noise(&psi, snr, derive_seed(seed, 1))?,
            ))
        }
    }
}
