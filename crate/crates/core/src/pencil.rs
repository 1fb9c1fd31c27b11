//! Hankel-pencil estimation of multi-tone frequencies, amplitudes and phases.
//!
//! Pipeline:
//! 1. Hankel matrices `X`, `Ψ` (n×n) from the signal and filtered channels.
//! 2. SVD of `X`; the model order `m` is read off the singular values.
//! 3. The pencil is projected onto the leading `m` singular triples:
//!    `X_r = Σ_m`, `Ψ_r = U_m^H Ψ V_m`. Because `X` and `Ψ` share row and
//!    column spaces, this projection is exact for noiseless data.
//! 4. Eigenpairs of `X_r^{-1} Ψ_r` are the filter responses `β(f_i)`; the
//!    eigenvectors lift back to `u_i = V_m w_i`.
//! 5. Each `β(f_i)` is inverted through the filter to get `f_i`, and the
//!    complex amplitude follows from the Rayleigh-type quotient
//!    `α_i = (u_i^H X u_i) / (u_i^H G_i u_i)` with `G_i` the Hankel of the
//!    unit tone at `f_i`.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::filters::FilterResponse;
use crate::linalg::{self, CMat, Svd};
use crate::numfmt::{ser_f17, ser_f17_vec};
use crate::signal::{unit_tone, DualChannelRecord, MultiToneSpec, SamplingGrid};

/// `σ_m/σ_1` below which a truncation is refused.
pub const RANK_FLOOR: f64 = 1e-14;
/// Relative distance at which two eigenvalues count as colliding.
pub const COLLISION_TOL: f64 = 1e-10;
/// Relative size of `u^H G u` below which the amplitude quotient is refused.
pub const RAYLEIGH_FLOOR: f64 = 1e-14;
/// Largest condition number accepted for the exponential basis.
pub const MAX_BASIS_CONDITION: f64 = 1e12;
/// Amplitudes below this fraction of the largest are flagged as spurious.
pub const SPURIOUS_AMPLITUDE: f64 = 1e-12;

/// Signal and filtered-signal Hankel matrices of one record.
#[derive(Clone, Debug)]
pub struct HankelPair {
    pub x: CMat,
    pub psi: CMat,
    pub n: usize,
}

impl HankelPair {
    pub fn new(x: &[Complex64], psi: &[Complex64], n: usize) -> Result<Self> {
        Ok(Self { x: build_hankel(x, n)?, psi: build_hankel(psi, n)?, n })
    }
}

pub fn build_hankel(samples: &[Complex64], n: usize) -> Result<CMat> {
    linalg::hankel(samples, n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrderStrategy {
    Fixed(usize),
    /// Count of `σ_k > ε·σ_1`.
    RelThreshold(f64),
    /// Position of the largest drop in `log σ`.
    LargestLogGap,
}

impl Default for OrderStrategy {
    fn default() -> Self {
        OrderStrategy::RelThreshold(1e-8)
    }
}

impl fmt::Display for OrderStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderStrategy::Fixed(m) => write!(f, "fixed:{m}"),
            OrderStrategy::RelThreshold(eps) => write!(f, "relthresh:{eps}"),
            OrderStrategy::LargestLogGap => write!(f, "gap"),
        }
    }
}

impl FromStr for OrderStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid(format!("order strategy must be fixed:<m>, relthresh:<eps> or gap, got `{s}`"));
        match s.split_once(':') {
            None if s == "gap" => Ok(OrderStrategy::LargestLogGap),
            Some(("fixed", m)) => m.parse().map(OrderStrategy::Fixed).map_err(|_| bad()),
            Some(("relthresh", eps)) => {
                let eps: f64 = eps.parse().map_err(|_| bad())?;
                if eps.is_finite() && eps > 0.0 {
                    Ok(OrderStrategy::RelThreshold(eps))
                } else {
                    Err(bad())
                }
            }
            _ => Err(bad()),
        }
    }
}

pub fn estimate_order(singular_values: &[f64], strategy: OrderStrategy) -> Result<usize> {
    let sv = singular_values;
    if sv.is_empty() {
        return Err(invalid("no singular values"));
    }
    if sv.windows(2).any(|w| w[0] < w[1]) || sv.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(invalid("singular values must be finite, non-negative and non-increasing"));
    }
    if sv[0] == 0.0 {
        return Err(Error::AllZeroSpectrum);
    }
    Ok(match strategy {
        OrderStrategy::Fixed(m) => m,
        OrderStrategy::RelThreshold(eps) => sv.iter().filter(|&&s| s > eps * sv[0]).count(),
        OrderStrategy::LargestLogGap => {
            let mut best = (1, f64::NEG_INFINITY);
            for k in 0..sv.len() - 1 {
                let gap = sv[k].ln() - sv[k + 1].ln();
                if gap > best.1 {
                    best = (k + 1, gap);
                }
            }
            best.0
        }
    })
}

/// Pencil projected onto the leading `m` singular triples of `X`.
#[derive(Clone, Debug)]
pub struct ReducedPencil {
    /// Diagonal of `X_r`, i.e. `σ_1..σ_m`.
    pub xr: Vec<f64>,
    pub psi_r: CMat,
    pub v_m: CMat,
    pub u_m: CMat,
}

impl ReducedPencil {
    pub fn order(&self) -> usize {
        self.xr.len()
    }

    /// `X_r` as a dense matrix.
    pub fn x_r(&self) -> CMat {
        let m = self.order();
        Mat::from_fn(m, m, |i, j| if i == j { Complex64::new(self.xr[i], 0.0) } else { Complex64::default() })
    }

    /// `σ_1/σ_m` of the reduced pencil.
    pub fn condition(&self) -> f64 {
        self.xr[0] / self.xr[self.order() - 1]
    }
}

pub fn reduce_pencil(x: &CMat, psi: &CMat, m: usize) -> Result<ReducedPencil> {
    reduce_with_svd(&linalg::svd(x)?, psi, m)
}

fn reduce_with_svd(d: &Svd, psi: &CMat, m: usize) -> Result<ReducedPencil> {
    let n = d.s.len();
    if m == 0 {
        return Err(Error::OrderCollapse);
    }
    if m > n {
        return Err(Error::OrderExceedsPencil { order: m, n });
    }
    if d.s[0] == 0.0 {
        return Err(Error::AllZeroSpectrum);
    }
    let ratio = d.s[m - 1] / d.s[0];
    if ratio < RANK_FLOOR {
        return Err(Error::RankDeficientTruncation { order: m, ratio });
    }
    let u_m = linalg::leading_columns(&d.u, m);
    let v_m = linalg::leading_columns(&d.v, m);
    let psi_r = u_m.adjoint() * psi * &v_m;
    Ok(ReducedPencil { xr: d.s[..m].to_vec(), psi_r, v_m, u_m })
}

/// An eigenvalue of the reduced pencil with its eigenvector in reduced coordinates.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub lambda: Complex64,
    pub w: Vec<Complex64>,
}

/// Solves `Ψ_r w = λ X_r w` with `X_r = diag(xr)`.
pub fn solve_reduced_gep(xr: &[f64], psi_r: &CMat) -> Result<Vec<Eigenpair>> {
    let m = xr.len();
    if psi_r.nrows() != m || psi_r.ncols() != m {
        return Err(invalid("reduced pencil dimensions disagree"));
    }
    if xr.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(invalid("X_r must be diagonal with positive entries"));
    }
    let system = Mat::from_fn(m, m, |i, j| psi_r[(i, j)] / xr[i]);
    let (values, vectors) = linalg::eig(&system)?;
    if let Some(bad) = values.iter().find(|l| !(l.re.is_finite() && l.im.is_finite()) || l.norm() == 0.0) {
        return Err(Error::EigenSolverFailure(format!("degenerate eigenvalue {bad}")));
    }
    let scale = values.iter().map(|l| l.norm()).fold(0.0, f64::max);
    for i in 0..m {
        for j in i + 1..m {
            if (values[i] - values[j]).norm() <= COLLISION_TOL * scale {
                return Err(Error::EigenvalueCollision { i, j, lambda_i: values[i], lambda_j: values[j] });
            }
        }
    }
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(k, lambda)| Eigenpair { lambda, w: linalg::column(&vectors, k) })
        .collect())
}

/// Maps a reduced eigenvector to `u = V_m w`, scaled to unit norm with its
/// first nonzero entry real and positive.
pub fn lift_eigenvector(v_m: &CMat, w: &[Complex64]) -> Vec<Complex64> {
    let mut u = linalg::mat_vec(v_m, w);
    let nrm = linalg::norm(&u);
    if nrm == 0.0 {
        return u;
    }
    let pivot = u
        .iter()
        .find(|z| z.norm() > f64::EPSILON * nrm)
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    let gauge = pivot.conj() / (pivot.norm() * nrm);
    for z in &mut u {
        *z *= gauge;
    }
    u
}

/// Hankel of the unit tone `e^{j2πf t_k}` over the first `2n − 1` instants.
pub fn unit_tone_hankel(f: f64, grid: &SamplingGrid, n: usize) -> Result<CMat> {
    let g: Vec<Complex64> = (0..2 * n - 1).map(|k| grid.tone(f, k)).collect();
    build_hankel(&g, n)
}

/// Complex amplitude `α = (u^H X u) / (u^H G u)` of the component at `f`.
pub fn amp_phase_eq17(x: &CMat, f: f64, u: &[Complex64], grid: &SamplingGrid) -> Result<Complex64> {
    let n = x.nrows();
    if u.len() != n {
        return Err(invalid("eigenvector length does not match pencil size"));
    }
    if !(f.is_finite() && f > 0.0) {
        return Err(invalid(format!("frequency must be positive, got {f}")));
    }
    let unorm = linalg::norm(u);
    if unorm == 0.0 {
        return Err(invalid("eigenvector is zero"));
    }
    if grid.count < 2 * n - 1 {
        return Err(Error::InsufficientSamples { needed: 2 * n - 1, got: grid.count });
    }
    let g = unit_tone_hankel(f, grid, n)?;
    let den = linalg::quad_form(&g, u);
    if den.norm() <= RAYLEIGH_FLOOR * linalg::frobenius(&g) * unorm * unorm {
        return Err(Error::DegenerateRayleighDenominator { f });
    }
    Ok(linalg::quad_form(x, u) / den)
}

/// Least-squares complex amplitudes of known tones, `min ‖Wα − x‖` with
/// `W[k][i] = e^{j2πf_i t_k}`.
pub fn amp_phase_lsq(x: &[Complex64], freqs: &[f64], grid: &SamplingGrid) -> Result<Vec<Complex64>> {
    let rows = x.len();
    let cols = freqs.len();
    if cols == 0 {
        return Ok(Vec::new());
    }
    if rows > grid.count {
        return Err(invalid("more samples than grid instants"));
    }
    if rows < cols {
        return Err(Error::InsufficientSamples { needed: cols, got: rows });
    }
    for (i, fi) in freqs.iter().enumerate() {
        if freqs[i + 1..].contains(fi) {
            return Err(invalid(format!("duplicate frequency {fi} Hz")));
        }
    }
    let basis = Mat::from_fn(rows, cols, |k, i| grid.tone(freqs[i], k));
    let d = linalg::thin_svd(&basis)?;
    let smin = d.s[cols - 1];
    let condition = if smin > 0.0 { d.s[0] / smin } else { f64::INFINITY };
    if condition > MAX_BASIS_CONDITION {
        return Err(Error::IllConditionedBasis { condition });
    }
    // α = V Σ^{-1} U^H x
    let coeffs: Vec<Complex64> = (0..cols)
        .map(|j| (0..rows).map(|k| d.u[(k, j)].conj() * x[k]).sum::<Complex64>() / d.s[j])
        .collect();
    Ok((0..cols)
        .map(|i| (0..cols).map(|j| d.v[(i, j)] * coeffs[j]).sum())
        .collect())
}

/// How amplitudes and phases are recovered once frequencies are known.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AmpMethod {
    /// Eigenvector quotient against the unit-tone Hankel.
    #[default]
    Eq17,
    /// Linear least squares on the exponential basis.
    Lsq,
}

impl FromStr for AmpMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq17" => Ok(AmpMethod::Eq17),
            "lsq" => Ok(AmpMethod::Lsq),
            other => Err(invalid(format!("amplitude method must be eq17 or lsq, got `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EstimatorOptions {
    /// Pencil size; defaults to `⌊(N+1)/2⌋`.
    pub pencil_n: Option<usize>,
    pub order: OrderStrategy,
    pub amplitude: AmpMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ToneEstimate {
    #[serde(rename = "f_hz", serialize_with = "ser_f17")]
    pub f: f64,
    #[serde(rename = "amp", serialize_with = "ser_f17")]
    pub a: f64,
    #[serde(rename = "phase_rad", serialize_with = "ser_f17")]
    pub phi0: f64,
    #[serde(serialize_with = "ser_f17")]
    pub inversion_residual: f64,
}

impl ToneEstimate {
    pub fn from_alpha(f: f64, alpha: Complex64, inversion_residual: f64) -> Self {
        Self { f, a: alpha.norm(), phi0: crate::signal::wrap_phase(alpha.arg()), inversion_residual }
    }
}

#[derive(Clone, Debug)]
pub struct PencilSolution {
    pub singular_values: Vec<f64>,
    pub order: usize,
    pub eigenvalues: Vec<Complex64>,
    /// Lifted, unit-norm eigenvectors `u_i`, one per eigenvalue.
    pub eigenvectors: Vec<Vec<Complex64>>,
    pub condition_diag: f64,
}

/// An eigenvalue that did not become a component, and why.
#[derive(Clone, Debug)]
pub struct Rejection {
    pub lambda: Complex64,
    pub error: String,
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub warnings: Vec<String>,
    pub rejected: Vec<Rejection>,
}

#[derive(Clone, Debug)]
pub struct MultiToneEstimate {
    /// Sorted by ascending frequency.
    pub components: Vec<ToneEstimate>,
    pub solution: PencilSolution,
    pub diagnostics: Diagnostics,
    pub pencil_n: usize,
}

pub fn estimate_multitone(
    record: &DualChannelRecord,
    filter: &FilterResponse,
    options: &EstimatorOptions,
) -> Result<MultiToneEstimate> {
    record.validate()?;
    estimate_samples(&record.x, &record.psi, &record.grid, filter, options)
}

/// [`estimate_multitone`] on raw channel samples.
pub fn estimate_samples(
    x: &[Complex64],
    psi: &[Complex64],
    grid: &SamplingGrid,
    filter: &FilterResponse,
    options: &EstimatorOptions,
) -> Result<MultiToneEstimate> {
    grid.validate()?;
    let count = x.len().min(psi.len()).min(grid.count);
    let n = options.pencil_n.unwrap_or((count + 1) / 2);
    let pair = HankelPair::new(&x[..count], &psi[..count], n)?;
    let d = linalg::svd(&pair.x)?;
    let order = match estimate_order(&d.s, options.order) {
        Err(Error::AllZeroSpectrum) | Ok(0) => return Err(Error::OrderCollapse),
        other => other?,
    };
    let reduced = reduce_with_svd(&d, &pair.psi, order)?;
    let pairs = solve_reduced_gep(&reduced.xr, &reduced.psi_r)?;

    let mut diagnostics = Diagnostics::default();
    let eigenvectors: Vec<Vec<Complex64>> = pairs.iter().map(|p| lift_eigenvector(&reduced.v_m, &p.w)).collect();
    let mut accepted = Vec::new();
    for (p, u) in pairs.iter().zip(&eigenvectors) {
        match filter.invert(p.lambda) {
            Ok(inv) => accepted.push((p.lambda, inv, u)),
            Err(e) => reject(&mut diagnostics, p.lambda, e),
        }
    }

    let mut components = Vec::with_capacity(accepted.len());
    match options.amplitude {
        AmpMethod::Eq17 => {
            for (lambda, inv, u) in &accepted {
                match amp_phase_eq17(&pair.x, inv.f, u, grid) {
                    Ok(alpha) => components.push(ToneEstimate::from_alpha(inv.f, alpha, inv.residual)),
                    Err(e) => reject(&mut diagnostics, *lambda, e),
                }
            }
        }
        AmpMethod::Lsq => {
            let freqs: Vec<f64> = accepted.iter().map(|(_, inv, _)| inv.f).collect();
            let alphas = amp_phase_lsq(&x[..count], &freqs, grid)?;
            for ((_, inv, _), alpha) in accepted.iter().zip(alphas) {
                components.push(ToneEstimate::from_alpha(inv.f, alpha, inv.residual));
            }
        }
    }

    sort_components(&mut components);
    let max_a = components.iter().map(|c| c.a).fold(0.0, f64::max);
    for c in &components {
        if c.a < SPURIOUS_AMPLITUDE * max_a {
            diagnostics.warnings.push(format!(
                "component at {} Hz has negligible amplitude {:e}; likely spurious (order over-estimated)",
                c.f, c.a
            ));
        }
    }

    Ok(MultiToneEstimate {
        components,
        solution: PencilSolution {
            singular_values: d.s,
            order,
            eigenvalues: pairs.iter().map(|p| p.lambda).collect(),
            eigenvectors,
            condition_diag: reduced.condition(),
        },
        diagnostics,
        pencil_n: n,
    })
}

fn reject(diag: &mut Diagnostics, lambda: Complex64, e: Error) {
    diag.warnings.push(format!("eigenvalue {lambda} rejected: {e}"));
    diag.rejected.push(Rejection { lambda, error: e.to_string() });
}

/// Ascending frequency; frequencies equal within 1e-12 relative are ordered
/// by descending amplitude.
pub fn sort_components(components: &mut [ToneEstimate]) {
    components.sort_by(|a, b| {
        let tie = (a.f - b.f).abs() <= 1e-12 * a.f.abs().max(b.f.abs());
        if tie {
            b.a.total_cmp(&a.a)
        } else {
            a.f.total_cmp(&b.f)
        }
    });
}

/// Factors `(S_c, D)` with `X = S_c^T · diag(D) · S_c` for a noiseless
/// multi-tone: rows of `S_c` are `(1, s_i, …, s_i^{n−1})` with
/// `s_i = e^{j2πf_iΔt}` and `D_i = α_i e^{j2πf_i t_0}` (which is `α_i s_i`
/// when the first sample sits at `t_0 = Δt`).
pub fn vandermonde_factors(spec: &MultiToneSpec, grid: &SamplingGrid, n: usize) -> (CMat, Vec<Complex64>) {
    let comps = spec.components();
    let steps = grid.with_t0(0.0);
    let s_c = Mat::from_fn(comps.len(), n, |i, p| steps.tone(comps[i].f, p));
    let d = comps.iter().map(|c| c.alpha() * unit_tone(c.f, grid.t0)).collect();
    (s_c, d)
}

/// `S_c^T · diag(D) · S_c`.
pub fn vandermonde_rebuild(s_c: &CMat, d: &[Complex64]) -> CMat {
    let n = s_c.ncols();
    Mat::from_fn(n, n, |p, q| (0..d.len()).map(|i| s_c[(i, p)] * d[i] * s_c[(i, q)]).sum())
}

/// JSON shape of an estimate.
#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub components: Vec<ToneEstimate>,
    pub diagnostics: ReportDiagnostics,
}

#[derive(Debug, Serialize)]
pub struct ReportDiagnostics {
    pub order: usize,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_sv")]
    pub singular_values: Option<Vec<f64>>,
    #[serde(serialize_with = "ser_f17")]
    pub pencil_condition: f64,
    pub warnings: Vec<String>,
}

fn ser_sv<S: serde::Serializer>(sv: &Option<Vec<f64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match sv {
        Some(v) => ser_f17_vec(v, s),
        None => s.serialize_none(),
    }
}

impl MultiToneEstimate {
    /// Output document; singular values are included only when `verbose`.
    pub fn report(&self, verbose: bool) -> EstimateReport {
        EstimateReport {
            components: self.components.clone(),
            diagnostics: ReportDiagnostics {
                order: self.solution.order,
                singular_values: verbose.then(|| self.solution.singular_values.clone()),
                pencil_condition: self.solution.condition_diag,
                warnings: self.diagnostics.warnings.clone(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synth_filtered, synth_multitone, ToneComponent};
    use std::f64::consts::{PI, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(tones: &[(f64, f64, f64)]) -> MultiToneSpec {
        MultiToneSpec::new(tones.iter().map(|&(f, a, p)| ToneComponent::new(f, a, p).unwrap()).collect()).unwrap()
    }

    #[test]
    fn order_examples() {
        let sv = [5.0, 3.0, 1e-14, 1e-15];
        assert_eq!(estimate_order(&sv, OrderStrategy::RelThreshold(1e-8)).unwrap(), 2);
        assert_eq!(estimate_order(&sv, OrderStrategy::LargestLogGap).unwrap(), 2);
        assert_eq!(estimate_order(&sv, OrderStrategy::Fixed(3)).unwrap(), 3);
        for s in [OrderStrategy::RelThreshold(1e-8), OrderStrategy::LargestLogGap, OrderStrategy::Fixed(1)] {
            assert_eq!(estimate_order(&[1.0], s).unwrap(), 1);
        }
        assert!(matches!(estimate_order(&[0.0, 0.0], OrderStrategy::LargestLogGap), Err(Error::AllZeroSpectrum)));
        assert!(estimate_order(&[1.0, 2.0], OrderStrategy::LargestLogGap).is_err());
        // exact zeros after the signal subspace give an infinite gap
        assert_eq!(estimate_order(&[4.0, 2.0, 1.0, 0.0, 0.0], OrderStrategy::LargestLogGap).unwrap(), 3);
    }

    #[test]
    fn order_strategy_parsing() {
        assert_eq!("fixed:4".parse::<OrderStrategy>().unwrap(), OrderStrategy::Fixed(4));
        assert_eq!("relthresh:1e-6".parse::<OrderStrategy>().unwrap(), OrderStrategy::RelThreshold(1e-6));
        assert_eq!("gap".parse::<OrderStrategy>().unwrap(), OrderStrategy::LargestLogGap);
        for bad in ["fixed", "fixed:x", "relthresh:-1", "loggap", ""] {
            assert!(bad.parse::<OrderStrategy>().is_err(), "{bad}");
        }
        assert_eq!("lsq".parse::<AmpMethod>().unwrap(), AmpMethod::Lsq);
        assert!("svd".parse::<AmpMethod>().is_err());
    }

    #[test]
    fn trivial_reduced_problems() {
        let pairs = solve_reduced_gep(&[2.0], &Mat::from_fn(1, 1, |_, _| c(0.0, 4.0 * PI))).unwrap();
        assert!((pairs[0].lambda - c(0.0, TAU)).norm() < 1e-15);

        let diag = [c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 7.0)];
        let xr = [4.0, 2.0, 0.5];
        let psi_r = Mat::from_fn(3, 3, |i, j| if i == j { diag[i] } else { c(0.0, 0.0) });
        let mut got: Vec<Complex64> = solve_reduced_gep(&xr, &psi_r).unwrap().iter().map(|p| p.lambda).collect();
        let mut want: Vec<Complex64> = (0..3).map(|i| diag[i] / xr[i]).collect();
        got.sort_by(|a, b| a.re.total_cmp(&b.re));
        want.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-14);
        }
    }

    #[test]
    fn collision_is_reported() {
        let psi_r = Mat::from_fn(2, 2, |i, j| if i == j { c(0.0, 5.0) } else { c(0.0, 0.0) });
        assert!(matches!(
            solve_reduced_gep(&[1.0, 1.0], &psi_r),
            Err(Error::EigenvalueCollision { .. })
        ));
    }

    #[test]
    fn single_tone_reduction_is_scalar_ratio() {
        let s = spec(&[(3.0, 2.0, 0.4)]);
        let grid = SamplingGrid::new(0.0, 0.05, 7).unwrap();
        let d = FilterResponse::differentiator();
        let pair = HankelPair::new(
            &synth_multitone(&s, &grid).unwrap(),
            &synth_filtered(&s, &d, &grid).unwrap(),
            4,
        )
        .unwrap();
        let r = reduce_pencil(&pair.x, &pair.psi, 1).unwrap();
        let sigma1 = linalg::svd(&pair.x).unwrap().s[0];
        assert!((r.xr[0] - sigma1).abs() < 1e-14 * sigma1);
        let ratio = r.psi_r[(0, 0)] / r.xr[0];
        assert!((ratio - c(0.0, TAU * 3.0)).norm() < 1e-12 * TAU * 3.0);
        assert!(matches!(
            reduce_pencil(&pair.x, &pair.psi, 2),
            Err(Error::RankDeficientTruncation { .. })
        ));
        assert!(matches!(reduce_pencil(&pair.x, &pair.psi, 5), Err(Error::OrderExceedsPencil { .. })));
    }

    #[test]
    fn full_rank_reduction_preserves_eigenvalues() {
        // regular 2x2 pencil: eigenvalues of X^{-1}Ψ
        let x = Mat::from_fn(2, 2, |i, j| c(1.0 + i as f64, j as f64 - 0.5));
        let psi = Mat::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, 1.0));
        let r = reduce_pencil(&x, &psi, 2).unwrap();
        let mut got: Vec<Complex64> = solve_reduced_gep(&r.xr, &r.psi_r).unwrap().iter().map(|p| p.lambda).collect();
        // det(Ψ − λX) = 0 solved as a quadratic
        let (a, b, cc, d) = (x[(0, 0)], x[(0, 1)], x[(1, 0)], x[(1, 1)]);
        let (e, f, g, h) = (psi[(0, 0)], psi[(0, 1)], psi[(1, 0)], psi[(1, 1)]);
        let qa = a * d - b * cc;
        let qb = -(e * d + a * h - f * cc - b * g);
        let qc = e * h - f * g;
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let mut want = [(-qb + disc) / (2.0 * qa), (-qb - disc) / (2.0 * qa)];
        got.sort_by(|a, b| a.re.total_cmp(&b.re));
        want.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12 * w.norm());
        }
    }

    #[test]
    fn two_tone_eigenvalues() {
        let s = spec(&[(3.0, 1.0, 0.0), (5.0, 1.0, 0.0)]);
        let grid = SamplingGrid::new(0.0, 0.05, 7).unwrap();
        let d = FilterResponse::differentiator();
        let pair = HankelPair::new(
            &synth_multitone(&s, &grid).unwrap(),
            &synth_filtered(&s, &d, &grid).unwrap(),
            4,
        )
        .unwrap();
        let r = reduce_pencil(&pair.x, &pair.psi, 2).unwrap();
        let mut l: Vec<Complex64> = solve_reduced_gep(&r.xr, &r.psi_r).unwrap().iter().map(|p| p.lambda).collect();
        l.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((l[0] - c(0.0, 6.0 * PI)).norm() <= 1e-12 * 6.0 * PI);
        assert!((l[1] - c(0.0, 10.0 * PI)).norm() <= 1e-12 * 10.0 * PI);
    }

    #[test]
    fn eq17_single_tone_is_exact() {
        let alpha = Complex64::from_polar(2.0, PI / 4.0);
        let s = spec(&[(3.0, 2.0, PI / 4.0)]);
        let grid = SamplingGrid::new(0.013, 0.07, 3).unwrap();
        let x = build_hankel(&synth_multitone(&s, &grid).unwrap(), 2).unwrap();
        let u = [c(0.3, -0.2), c(1.1, 0.4)];
        let got = amp_phase_eq17(&x, 3.0, &u, &grid).unwrap();
        assert!((got - alpha).norm() < 1e-14);
        // gauge invariance
        let scaled: Vec<Complex64> = u.iter().map(|z| z * c(-2.0, 5.0)).collect();
        assert!((amp_phase_eq17(&x, 3.0, &scaled, &grid).unwrap() - got).norm() < 1e-13);
    }

    #[test]
    fn eq17_degenerate_denominator() {
        // G = S^T S with S = (1, s); u = (s, -1) gives S u = 0
        let grid = SamplingGrid::new(0.0, 0.1, 3).unwrap();
        let s1 = unit_tone(2.0, 0.1);
        let u = [s1, c(-1.0, 0.0)];
        let x = Mat::from_fn(2, 2, |_, _| c(1.0, 0.0));
        assert!(matches!(
            amp_phase_eq17(&x, 2.0, &u, &grid),
            Err(Error::DegenerateRayleighDenominator { .. })
        ));
    }

    #[test]
    fn lsq_examples() {
        let s = spec(&[(3.0, 1.7, -0.6)]);
        let grid = SamplingGrid::new(0.2, 0.011, 9).unwrap();
        let x = synth_multitone(&s, &grid).unwrap();
        let a = amp_phase_lsq(&x, &[3.0], &grid).unwrap();
        assert!((a[0] - s.components()[0].alpha()).norm() < 1e-14);

        let dt = 0.01;
        let grid = SamplingGrid::new(0.0, dt, 12).unwrap();
        assert!(matches!(
            amp_phase_lsq(&x[..9], &[3.0, 3.0 + 1.0 / dt], &grid),
            Err(Error::IllConditionedBasis { .. })
        ));
        assert!(amp_phase_lsq(&x[..9], &[3.0, 3.0], &grid).is_err());
    }

    #[test]
    fn lifted_vectors_have_fixed_gauge() {
        let v = Mat::from_fn(3, 1, |i, _| c(i as f64 + 1.0, 0.5));
        for w in [c(1.0, 0.0), c(0.0, -3.0), c(-2.0, 2.0)] {
            let u = lift_eigenvector(&v, &[w]);
            assert!((linalg::norm(&u) - 1.0).abs() < 1e-15);
            assert!(u[0].im.abs() < 1e-15 && u[0].re > 0.0);
        }
    }

    #[test]
    fn sorting_breaks_ties_by_amplitude() {
        let t = |f: f64, a: f64| ToneEstimate { f, a, phi0: 0.0, inversion_residual: 0.0 };
        let mut v = vec![t(5.0, 1.0), t(2.0, 0.5), t(2.0, 3.0), t(1.0, 1.0)];
        sort_components(&mut v);
        let got: Vec<(f64, f64)> = v.iter().map(|c| (c.f, c.a)).collect();
        assert_eq!(got, vec![(1.0, 1.0), (2.0, 3.0), (2.0, 0.5), (5.0, 1.0)]);
    }

    #[test]
    fn zero_signal_collapses() {
        let s = spec(&[(3.0, 0.0, 0.0)]);
        let grid = SamplingGrid::new(0.0, 0.05, 9).unwrap();
        let rec = DualChannelRecord::multitone(&s, &FilterResponse::differentiator(), grid, None, None).unwrap();
        assert!(matches!(
            estimate_multitone(&rec, &FilterResponse::differentiator(), &EstimatorOptions::default()),
            Err(Error::OrderCollapse)
        ));
    }

    #[test]
    fn nyquist_single_tone_recovery() {
        let s = spec(&[(40.0, 1.25, 2.0)]);
        let grid = SamplingGrid::from_rate(200.0, 0.0, 16).unwrap();
        let d = FilterResponse::differentiator();
        let rec = DualChannelRecord::multitone(&s, &d, grid, None, None).unwrap();
        let est = estimate_multitone(&rec, &d, &EstimatorOptions::default()).unwrap();
        assert_eq!(est.components.len(), 1);
        let e = est.components[0];
        assert!((e.f - 40.0).abs() <= 1e-12 * 40.0);
        assert!((e.a - 1.25).abs() <= 1e-12);
        assert!((e.phi0 - 2.0).abs() <= 1e-12);
        assert!(e.inversion_residual <= 1e-12);
    }

    #[test]
    fn failed_inversions_become_diagnostics() {
        // over-estimated order on a Butterworth record: extra noise eigenvalues
        let s = spec(&[(80.0, 1.0, 0.0), (130.0, 0.7, 1.0)]);
        let bw = FilterResponse::butterworth_hp1(100.0, 10.0, 1000.0).unwrap();
        let grid = SamplingGrid::from_rate(37.0, 0.0, 21).unwrap();
        let rec = DualChannelRecord::multitone(&s, &bw, grid, Some(30.0), Some(3)).unwrap();
        let opts = EstimatorOptions { order: OrderStrategy::Fixed(6), ..Default::default() };
        let est = estimate_multitone(&rec, &bw, &opts).unwrap();
        assert_eq!(est.solution.eigenvalues.len(), 6);
        assert_eq!(est.components.len() + est.diagnostics.rejected.len(), 6);
        assert!(est.components.windows(2).all(|w| w[0].f <= w[1].f));
    }
}
