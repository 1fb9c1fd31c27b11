//! Linear-FM chirp estimation from a signal and its derivative.
//!
//! For `y(t) = a·e^{j(kt² + 2πft + φ0)}` the Hankel matrices of `ẏ`, `t·y`
//! and `y` satisfy `Ẏ = j2k·Y_H + j2πf·Y` exactly. Every window contributes
//! that identity; stacking the vectorized identities of all windows gives a
//! two-unknown linear least-squares problem in `(λ_L, μ_L) = (j2k, j2πf)`.
//! Once `k` and `f` are known, `a·e^{jφ0}` is the scalar that maps the
//! reference chirp `l(t) = e^{j(kt² + 2πft)}` onto the data.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat};
use crate::numfmt::ser_f17;
use crate::pencil::build_hankel;
use crate::reference::SPEED_OF_LIGHT;
use crate::signal::{wrap_phase, DualChannelRecord, SamplingGrid, SignalKind};

/// Normal-equation condition above which windows are considered degenerate.
pub const MAX_WINDOW_CONDITION: f64 = 1e12;

/// One observation window of a chirp and its derivative.
#[derive(Clone, Debug)]
pub struct ChirpWindow {
    pub grid: SamplingGrid,
    pub y: Vec<Complex64>,
    pub ydot: Vec<Complex64>,
    pub n: usize,
}

impl ChirpWindow {
    /// `n` defaults to `⌊(N+1)/2⌋`.
    pub fn new(grid: SamplingGrid, y: Vec<Complex64>, ydot: Vec<Complex64>, n: Option<usize>) -> Result<Self> {
        grid.validate()?;
        if y.len() != grid.count || ydot.len() != grid.count {
            return Err(invalid("window channel lengths must equal the sample count"));
        }
        let n = n.unwrap_or((grid.count + 1) / 2);
        if n == 0 || 2 * n - 1 > grid.count {
            return Err(Error::InsufficientSamples { needed: 2 * n.max(1) - 1, got: grid.count });
        }
        Ok(Self { grid, y, ydot, n })
    }

    pub fn from_record(record: &DualChannelRecord, n: Option<usize>) -> Result<Self> {
        record.validate()?;
        if record.kind != SignalKind::Chirp {
            return Err(invalid("record does not hold a chirp"));
        }
        Self::new(record.grid, record.x.clone(), record.psi.clone(), n)
    }
}

/// Hankel-patterned matrix with entries `t_{p+q}·y_{p+q}` at absolute instants.
pub fn build_yh(y: &[Complex64], grid: &SamplingGrid, n: usize) -> Result<CMat> {
    if grid.count < y.len().min(2 * n - 1) {
        return Err(invalid("grid is shorter than the sample sequence"));
    }
    let weighted: Vec<Complex64> = y.iter().enumerate().map(|(k, v)| grid.instant(k) * v).collect();
    build_hankel(&weighted, n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoParamSolution {
    /// `j2k` for an exact chirp.
    pub lambda_l: Complex64,
    /// `j2πf` for an exact chirp.
    pub mu_l: Complex64,
    /// `‖stacked residual‖ / ‖stacked vec(Ẏ)‖`.
    pub residual: f64,
    /// Condition number of the column-equilibrated normal equations.
    pub condition: f64,
}

impl TwoParamSolution {
    pub fn k(&self) -> f64 {
        self.lambda_l.im / 2.0
    }

    pub fn f(&self) -> f64 {
        self.mu_l.im / TAU
    }

    /// `|Re λ_L|`, zero for a noiseless chirp.
    pub fn re_lambda(&self) -> f64 {
        self.lambda_l.re.abs()
    }

    /// `|Re μ_L|`, zero for a noiseless chirp.
    pub fn re_mu(&self) -> f64 {
        self.mu_l.re.abs()
    }
}

/// The three vectorized matrices `vec(Ẏ), vec(Y_H), vec(Y)` stacked over windows.
pub struct StackedSystem {
    pub rhs: Vec<Complex64>,
    pub yh: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl StackedSystem {
    pub fn new(windows: &[ChirpWindow]) -> Result<Self> {
        if windows.is_empty() {
            return Err(invalid("need at least one chirp window"));
        }
        let mut sys = StackedSystem { rhs: Vec::new(), yh: Vec::new(), y: Vec::new() };
        for w in windows {
            let ydot = build_hankel(&w.ydot, w.n)?;
            let yh = build_yh(&w.y, &w.grid, w.n)?;
            let y = build_hankel(&w.y, w.n)?;
            for q in 0..w.n {
                for p in 0..w.n {
                    sys.rhs.push(ydot[(p, q)]);
                    sys.yh.push(yh[(p, q)]);
                    sys.y.push(y[(p, q)]);
                }
            }
        }
        Ok(sys)
    }

    /// Relative residual of the identity at `(λ, μ)`.
    pub fn residual(&self, lambda: Complex64, mu: Complex64) -> f64 {
        let r: f64 = self
            .rhs
            .iter()
            .zip(&self.yh)
            .zip(&self.y)
            .map(|((d, a), b)| (d - lambda * a - mu * b).norm_sqr())
            .sum();
        r.sqrt() / linalg::norm(&self.rhs)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Joint least-squares fit of `Ẏ = λ_L·Y_H + μ_L·Y` over all windows.
pub fn solve_two_param(windows: &[ChirpWindow]) -> Result<TwoParamSolution> {
    let sys = StackedSystem::new(windows)?;
    let rhs_norm = linalg::norm(&sys.rhs);
    let na = linalg::norm(&sys.yh);
    let nb = linalg::norm(&sys.y);
    if rhs_norm == 0.0 || na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateWindows { condition: f64::INFINITY });
    }
    // Equilibrated columns; QR by modified Gram-Schmidt with one reorthogonalization.
    let q1: Vec<Complex64> = sys.yh.iter().map(|z| z / na).collect();
    let b: Vec<Complex64> = sys.y.iter().map(|z| z / nb).collect();
    let cos = dot(&q1, &b).norm().min(1.0);
    let condition = if cos < 1.0 { (1.0 + cos) / (1.0 - cos) } else { f64::INFINITY };
    if condition > MAX_WINDOW_CONDITION {
        return Err(Error::DegenerateWindows { condition });
    }
    let mut v = b.clone();
    let mut r12 = Complex64::default();
    for _ in 0..2 {
        let c = dot(&q1, &v);
        r12 += c;
        for (vi, qi) in v.iter_mut().zip(&q1) {
            *vi -= c * qi;
        }
    }
    let r22 = linalg::norm(&v);
    let q2: Vec<Complex64> = v.iter().map(|z| z / r22).collect();
    let z1 = dot(&q1, &sys.rhs);
    let z2 = dot(&q2, &sys.rhs);
    let x2 = z2 / r22;
    let x1 = z1 - r12 * x2;
    let lambda_l = x1 / na;
    let mu_l = x2 / nb;
    Ok(TwoParamSolution { lambda_l, mu_l, residual: sys.residual(lambda_l, mu_l), condition })
}

/// Reference chirp `l(t) = e^{j(kt² + 2πft)}`.
pub fn reference_chirp(k: f64, f: f64, grid: &SamplingGrid) -> Vec<Complex64> {
    (0..grid.count)
        .map(|i| {
            let t = grid.instant(i);
            Complex64::from_polar(1.0, k * t * t + TAU * f * t)
        })
        .collect()
}

/// `λ_Ap = Σ conj(l)·y / Σ|l|²`, which equals `a·e^{jφ0}` for an exact chirp.
pub fn amp_phase_chirp(y: &[Complex64], k: f64, f: f64, grid: &SamplingGrid) -> Result<Complex64> {
    amp_phase_chirp_windows(&[(y, grid)], k, f)
}

fn amp_phase_chirp_windows(parts: &[(&[Complex64], &SamplingGrid)], k: f64, f: f64) -> Result<Complex64> {
    let mut num = Complex64::default();
    let mut den = 0.0;
    for (y, grid) in parts {
        if y.len() > grid.count {
            return Err(invalid("more samples than grid instants"));
        }
        for (yi, li) in y.iter().zip(reference_chirp(k, f, grid)) {
            num += li.conj() * yi;
            den += li.norm_sqr();
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(num / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChirpEstimate {
    #[serde(rename = "k_rad_s2", serialize_with = "ser_f17")]
    pub k: f64,
    #[serde(rename = "f_hz", serialize_with = "ser_f17")]
    pub f: f64,
    #[serde(rename = "amp", serialize_with = "ser_f17")]
    pub a: f64,
    #[serde(rename = "phase_rad", serialize_with = "ser_f17")]
    pub phi0: f64,
    #[serde(serialize_with = "ser_f17")]
    pub fit_residual: f64,
}

/// Estimates `(k, f, a, φ0)` from one or more windows.
pub fn estimate_chirp(windows: &[ChirpWindow]) -> Result<(ChirpEstimate, TwoParamSolution)> {
    let sol = solve_two_param(windows)?;
    let (k, f) = (sol.k(), sol.f());
    let parts: Vec<(&[Complex64], &SamplingGrid)> = windows.iter().map(|w| (w.y.as_slice(), &w.grid)).collect();
    let alpha = amp_phase_chirp_windows(&parts, k, f)?;
    let est = ChirpEstimate { k, f, a: alpha.norm(), phi0: wrap_phase(alpha.arg()), fit_residual: sol.residual };
    Ok((est, sol))
}

/// Line-of-sight geometry of a GNSS observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LosScenario {
    pub carrier_hz: f64,
    pub angle_deg: f64,
    pub c_mps: f64,
}

impl LosScenario {
    pub fn new(carrier_hz: f64, angle_deg: f64) -> Result<Self> {
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return Err(invalid(format!("carrier frequency must be positive, got {carrier_hz}")));
        }
        if !angle_deg.is_finite() {
            return Err(invalid("angle must be finite"));
        }
        Ok(Self { carrier_hz, angle_deg, c_mps: SPEED_OF_LIGHT })
    }
}

/// Projected velocity (m/s) and acceleration (m/s²) from Doppler shift `f`
/// and chirp parameter `k`; the Doppler rate in Hz/s is `k/π`.
pub fn doppler_to_motion(f: f64, k: f64, scenario: &LosScenario) -> Result<(f64, f64)> {
    if !(scenario.carrier_hz.is_finite() && scenario.carrier_hz > 0.0) {
        return Err(invalid("carrier frequency must be positive"));
    }
    if !(f.is_finite() && k.is_finite()) {
        return Err(invalid("Doppler parameters must be finite"));
    }
    let v = scenario.c_mps * f / scenario.carrier_hz;
    let a = scenario.c_mps * (k / PI) / scenario.carrier_hz;
    Ok((v, a))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Kinematics {
    #[serde(serialize_with = "ser_f17")]
    pub v_mps: f64,
    #[serde(serialize_with = "ser_f17")]
    pub a_mps2: f64,
    #[serde(serialize_with = "ser_f17")]
    pub angle_deg: f64,
}

/// JSON shape of a chirp estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChirpReport {
    #[serde(flatten)]
    pub estimate: ChirpEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kinematics: Option<Kinematics>,
}

impl ChirpReport {
    pub fn new(estimate: ChirpEstimate, scenario: Option<&LosScenario>) -> Result<Self> {
        let kinematics = scenario
            .map(|s| {
                doppler_to_motion(estimate.f, estimate.k, s).map(|(v, a)| Kinematics {
                    v_mps: v,
                    a_mps2: a,
                    angle_deg: s.angle_deg,
                })
            })
            .transpose()?;
        Ok(Self { estimate, kinematics })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synth_chirp, synth_chirp_derivative, ChirpSpec};

    fn window(spec: &ChirpSpec, grid: SamplingGrid) -> ChirpWindow {
        ChirpWindow::new(
            grid,
            synth_chirp(spec, &grid).unwrap(),
            synth_chirp_derivative(spec, &grid).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn yh_examples() {
        let one = Complex64::new(1.0, 0.0);
        let grid = SamplingGrid::new(0.0, 1.0, 3).unwrap();
        let yh = build_yh(&[one; 3], &grid, 2).unwrap();
        assert_eq!(yh[(0, 0)].re, 0.0);
        assert_eq!(yh[(0, 1)].re, 1.0);
        assert_eq!(yh[(1, 0)].re, 1.0);
        assert_eq!(yh[(1, 1)].re, 2.0);

        let y: Vec<Complex64> = (0..7).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let grid = SamplingGrid::new(0.0, 0.25, 7).unwrap();
        let tau = 1.75;
        let shifted = build_yh(&y, &grid.with_t0(tau), 4).unwrap();
        let base = build_yh(&y, &grid, 4).unwrap();
        let h = build_hankel(&y, 4).unwrap();
        for p in 0..4 {
            for q in 0..4 {
                assert!((shifted[(p, q)] - base[(p, q)] - tau * h[(p, q)]).norm() < 1e-13);
            }
        }
        assert!(build_yh(&y, &grid, 5).is_err());
    }

    #[test]
    fn noiseless_chirp_two_params() {
        let spec = ChirpSpec::new(1000.0 * PI, 100.0, 1.0, 0.0).unwrap();
        let w = window(&spec, SamplingGrid::new(0.0, 1e-3, 41).unwrap());
        let sol = solve_two_param(&[w]).unwrap();
        assert!((sol.lambda_l - Complex64::new(0.0, 2000.0 * PI)).norm() <= 1e-9 * 2000.0 * PI);
        assert!((sol.mu_l - Complex64::new(0.0, 200.0 * PI)).norm() <= 1e-9 * 200.0 * PI);
        assert!(sol.residual <= 1e-12, "{}", sol.residual);
        assert!(sol.re_lambda() < 1e-6 && sol.re_mu() < 1e-6);
    }

    #[test]
    fn degenerate_chirp_is_a_tone() {
        let spec = ChirpSpec::new(0.0, 1.0, 1.0, 0.0).unwrap();
        let w = window(&spec, SamplingGrid::new(0.0, 0.05, 21).unwrap());
        let (est, sol) = estimate_chirp(&[w]).unwrap();
        assert!(sol.lambda_l.norm() < 1e-9);
        assert!((est.f - 1.0).abs() < 1e-12);
        assert!((est.a - 1.0).abs() < 1e-12);
        assert!(est.phi0.abs() < 1e-12);
    }

    #[test]
    fn amplitude_ratio_is_exact() {
        let grid = SamplingGrid::new(0.01, 0.003, 30).unwrap();
        let l = reference_chirp(321.0, 12.5, &grid);
        let alpha = Complex64::from_polar(3.0, PI / 3.0);
        let y: Vec<Complex64> = l.iter().map(|z| alpha * z).collect();
        assert!((amp_phase_chirp(&y, 321.0, 12.5, &grid).unwrap() - alpha).norm() < 1e-14);
        assert!((amp_phase_chirp(&l, 321.0, 12.5, &grid).unwrap() - 1.0).norm() < 1e-15);
        assert!(matches!(amp_phase_chirp(&[], 1.0, 1.0, &grid), Err(Error::ZeroReference)));
    }

    #[test]
    fn collinear_window_is_degenerate() {
        // constant t across the window makes Y_H = t·Y; use a vanishing spacing
        let spec = ChirpSpec::new(10.0, 5.0, 1.0, 0.0).unwrap();
        let w = window(&spec, SamplingGrid::new(1.0, 1e-14, 5).unwrap());
        assert!(matches!(solve_two_param(&[w]), Err(Error::DegenerateWindows { .. })));
        assert!(solve_two_param(&[]).is_err());
    }

    #[test]
    fn kinematics_examples() {
        let s = LosScenario::new(1.5e9, 0.0).unwrap();
        assert_eq!(doppler_to_motion(0.0, 0.0, &s).unwrap(), (0.0, 0.0));
        assert!(LosScenario::new(0.0, 0.0).is_err());
    }

    #[test]
    fn report_omits_kinematics_without_carrier() {
        let e = ChirpEstimate { k: 1.0, f: 2.0, a: 1.0, phi0: 0.0, fit_residual: 0.0 };
        let s = serde_json::to_string(&ChirpReport::new(e, None).unwrap()).unwrap();
        assert!(!s.contains("kinematics") && s.contains("\"k_rad_s2\""));
        let sc = LosScenario::new(1.5e9, 10.0).unwrap();
        let s = serde_json::to_string(&ChirpReport::new(e, Some(&sc)).unwrap()).unwrap();
        assert!(s.contains("\"v_mps\""));
    }
}
