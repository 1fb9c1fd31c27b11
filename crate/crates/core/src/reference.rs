//! Reference scenarios: the ten-tone benchmark signal and the GNSS Doppler
//! case.

use std::f64::consts::PI;

use crate::error::Result;
use crate::signal::{ChirpSpec, MultiToneSpec, SamplingGrid, ToneComponent};

/// `(f Hz, amplitude, phase °)` of the ten-tone benchmark signal.
pub const TEN_TONE: [(f64, f64, f64); 10] = [
    (935.0, 1.5, 30.0),
    (957.0, 3.5, 50.0),
    (1297.0, 2.0, 170.0),
    (1317.5, 0.1, 230.0),
    (3120.0, 1.2, 90.0),
    (3135.0, 0.8, 145.0),
    (4460.0, 2.5, 360.0),
    (5530.0, 0.8, 330.0),
    (5970.0, 1.0, 280.0),
    (7990.0, 0.3, 360.0),
];

pub fn ten_tone() -> MultiToneSpec {
    MultiToneSpec::new(
        TEN_TONE
            .iter()
            .map(|&(f, a, deg)| ToneComponent::new(f, a, deg.to_radians()).expect("valid reference tone"))
            .collect(),
    )
    .expect("valid reference spec")
}

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const MACH_MPS: f64 = 340.3;
pub const STANDARD_GRAVITY: f64 = 9.81;
pub const GNSS_CARRIER_HZ: f64 = 1.5e9;
/// 2 Mach.
pub const GNSS_SPEED_MPS: f64 = 2.0 * MACH_MPS;
/// 20 g.
pub const GNSS_ACCEL_MPS2: f64 = 20.0 * STANDARD_GRAVITY;
/// Length of each of the two GNSS observation windows.
pub const GNSS_WINDOW_S: f64 = 500e-6;
/// Samples per GNSS window.
pub const GNSS_WINDOW_SAMPLES: usize = 64;
pub const GNSS_ANGLES_DEG: [f64; 4] = [0.0, 110.0, 230.0, 320.0];

/// Doppler shift in Hz for a line-of-sight speed.
pub fn doppler_shift(carrier_hz: f64, v_los: f64) -> f64 {
    carrier_hz * v_los / SPEED_OF_LIGHT
}

/// Chirp parameter `k` (rad/s², phase term `k t²`) for a line-of-sight acceleration.
pub fn doppler_chirp_k(carrier_hz: f64, a_los: f64) -> f64 {
    PI * carrier_hz * a_los / SPEED_OF_LIGHT
}

/// Line-of-sight projections `(v·cosθ, a·cosθ)` of the GNSS platform motion.
pub fn gnss_projection(angle_deg: f64) -> (f64, f64) {
    let c = angle_deg.to_radians().cos();
    (GNSS_SPEED_MPS * c, GNSS_ACCEL_MPS2 * c)
}

/// Unit-amplitude received chirp for a line-of-sight angle.
pub fn gnss_chirp(angle_deg: f64) -> Result<ChirpSpec> {
    let (v, a) = gnss_projection(angle_deg);
    ChirpSpec::new(doppler_chirp_k(GNSS_CARRIER_HZ, a), doppler_shift(GNSS_CARRIER_HZ, v), 1.0, 0.0)
}

/// The two back-to-back observation windows.
pub fn gnss_windows() -> Result<[SamplingGrid; 2]> {
    let dt = GNSS_WINDOW_S / GNSS_WINDOW_SAMPLES as f64;
    let first = SamplingGrid::new(0.0, dt, GNSS_WINDOW_SAMPLES)?;
    Ok([first, first.following(GNSS_WINDOW_SAMPLES)?])
}
