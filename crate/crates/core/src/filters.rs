//! Filter responses `β(f) = A(f)·e^{jΦ(f)}` and their inverses.
//!
//! The generalized eigenvalues of the Hankel pencil are exactly these
//! responses evaluated at the component frequencies, so inverting `β`
//! recovers the true frequency regardless of aliasing. Only variants whose
//! amplitude response is strictly increasing on the band are offered.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default upper band edge of the ideal differentiator.
pub const DIFFERENTIATOR_MAX_HZ: f64 = 1e12;

/// Margin below unit magnitude where Butterworth inversion is refused.
pub const DEFAULT_INVERSION_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FilterKind {
    /// `β(f) = j2πf`.
    IdealDifferentiator,
    /// First-order Butterworth high-pass, `β(f) = j(f/fc) / (1 + j f/fc)`.
    ButterworthHp1 { fc: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterResponse {
    kind: FilterKind,
    f_lo: f64,
    f_hi: f64,
}

/// Output of [`FilterResponse::invert`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inversion {
    pub f: f64,
    /// Model-mismatch measure; zero for an exact filter response.
    pub residual: f64,
}

impl FilterResponse {
    pub fn differentiator() -> Self {
        Self {
            kind: FilterKind::IdealDifferentiator,
            f_lo: 0.0,
            f_hi: DIFFERENTIATOR_MAX_HZ,
        }
    }

    pub fn differentiator_with_band(f_lo: f64, f_hi: f64) -> Result<Self> {
        check_band(f_lo, f_hi)?;
        Ok(Self { kind: FilterKind::IdealDifferentiator, f_lo, f_hi })
    }

    pub fn butterworth_hp1(fc: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(fc.is_finite() && fc > 0.0) {
            return Err(invalid(format!("cutoff must be positive, got {fc}")));
        }
        check_band(f_lo, f_hi)?;
        Ok(Self { kind: FilterKind::ButterworthHp1 { fc }, f_lo, f_hi })
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn band(&self) -> (f64, f64) {
        (self.f_lo, self.f_hi)
    }

    pub fn in_band(&self, f: f64) -> bool {
        f > 0.0 && f >= self.f_lo && f <= self.f_hi
    }

    fn check(&self, f: f64) -> Result<()> {
        if self.in_band(f) {
            Ok(())
        } else {
            Err(Error::FrequencyOutOfBand { f, lo: self.f_lo, hi: self.f_hi })
        }
    }

    pub fn response(&self, f: f64) -> Result<Complex64> {
        self.check(f)?;
        Ok(self.response_unchecked(f))
    }

    fn response_unchecked(&self, f: f64) -> Complex64 {
        match self.kind {
            FilterKind::IdealDifferentiator => Complex64::new(0.0, TAU * f),
            FilterKind::ButterworthHp1 { fc } => {
                // j r/(1 + j r), rewritten as 1/(1 − j/r) above the cutoff to avoid overflow
                let r = f / fc;
                if r <= 1.0 {
                    Complex64::new(0.0, r) / Complex64::new(1.0, r)
                } else {
                    Complex64::new(1.0, 0.0) / Complex64::new(1.0, -1.0 / r)
                }
            }
        }
    }

    /// Amplitude response `A(f)`.
    pub fn amplitude(&self, f: f64) -> Result<f64> {
        self.response(f).map(|b| b.norm())
    }

    /// Maps an eigenvalue back to a frequency via the amplitude response.
    pub fn invert(&self, lambda: Complex64) -> Result<Inversion> {
        self.invert_with_eps(lambda, DEFAULT_INVERSION_EPS)
    }

    pub fn invert_with_eps(&self, lambda: Complex64, eps: f64) -> Result<Inversion> {
        let mag = lambda.norm();
        if !(mag.is_finite() && mag > 0.0) {
            return Err(invalid(format!("cannot invert eigenvalue {lambda}")));
        }
        let inv = match self.kind {
            FilterKind::IdealDifferentiator => Inversion {
                f: lambda.im / TAU,
                residual: lambda.re.abs() / mag,
            },
            FilterKind::ButterworthHp1 { fc } => {
                if mag >= 1.0 - eps {
                    return Err(Error::AmplitudeOutOfRange { amplitude: mag });
                }
                let f = fc * mag / ((1.0 - mag) * (1.0 + mag)).sqrt();
                let f_phase = fc * (FRAC_PI_2 - lambda.arg()).tan();
                Inversion { f, residual: (f - f_phase).abs() / f }
            }
        };
        if !(inv.f.is_finite() && self.in_band(inv.f)) {
            return Err(Error::NonPositiveFrequency { f: inv.f });
        }
        Ok(inv)
    }

    /// Descriptor string: `diff` or `butterworth_hp1:fc=<Hz>:band=<lo>,<hi>`.
    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

fn check_band(f_lo: f64, f_hi: f64) -> Result<()> {
    if !(f_lo.is_finite() && f_hi.is_finite() && f_lo > 0.0 && f_lo < f_hi) {
        return Err(invalid(format!("band must satisfy 0 < lo < hi, got [{f_lo}, {f_hi}]")));
    }
    Ok(())
}

impl fmt::Display for FilterResponse {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FilterKind::IdealDifferentiator if *self == Self::differentiator() => write!(out, "diff"),
            FilterKind::IdealDifferentiator => write!(out, "diff:band={},{}", self.f_lo, self.f_hi),
            FilterKind::ButterworthHp1 { fc } => {
                write!(out, "butterworth_hp1:fc={fc}:band={},{}", self.f_lo, self.f_hi)
            }
        }
    }
}

impl FromStr for FilterResponse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let mut fc = None;
        let mut band = None;
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| invalid(format!("malformed filter option `{part}` in `{s}`")))?;
            match key {
                "fc" => fc = Some(parse_num(value)?),
                "band" => {
                    let (lo, hi) = value
                        .split_once(',')
                        .ok_or_else(|| invalid(format!("band needs `<lo>,<hi>`, got `{value}`")))?;
                    band = Some((parse_num(lo)?, parse_num(hi)?));
                }
                other => return Err(invalid(format!("unknown filter option `{other}`"))),
            }
        }
        match name {
            "diff" => {
                if fc.is_some() {
                    return Err(invalid("the differentiator takes no cutoff"));
                }
                match band {
                    None => Ok(Self::differentiator()),
                    Some((lo, hi)) => Self::differentiator_with_band(lo, hi),
                }
            }
            "butterworth_hp1" => {
                let fc = fc.ok_or_else(|| invalid("butterworth_hp1 needs fc=<Hz>"))?;
                let (lo, hi) = band.ok_or_else(|| invalid("butterworth_hp1 needs band=<lo>,<hi>"))?;
                Self::butterworth_hp1(fc, lo, hi)
            }
            other => Err(invalid(format!("unknown filter `{other}`"))),
        }
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| invalid(format!("not a number: `{s}`")))
}
