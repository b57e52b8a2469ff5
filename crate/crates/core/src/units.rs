//! Unit scale factors and fixed physical constants. Everything internal is SI.

use std::f64::consts::PI;

pub const FF: f64 = 1e-15;
pub const PF: f64 = 1e-12;
pub const NF: f64 = 1e-9;
pub const UF: f64 = 1e-6;

pub const KHZ: f64 = 1e3;
pub const MHZ: f64 = 1e6;

pub const CM2: f64 = 1e-4;
pub const MM: f64 = 1e-3;

/// Vacuum permittivity, F/m. Fixed at three significant figures so the
/// touch/near-touch worked example (0.278 mm at 5 MHz) is reproduced exactly.
pub const EPSILON_0: f64 = 8.85e-12;

/// Default specific contact resistivity, Ω·m². A 1 cm² contact gives 1 kΩ.
/// Illustrative only; override per scenario.
pub const DEFAULT_RHO_C: f64 = 0.1;

/// Signal-plate to ground-plate capacitance of a 2.5 cm radius disc device.
pub const C_PP: f64 = 2.2 * PF;
/// Fringe capacitance range of a wearable device, depending on placement.
pub const C_F_RANGE: (f64, f64) = (0.65 * PF, 0.85 * PF);

#[inline]
pub fn omega(f: f64) -> f64 {
    2.0 * PI * f
}

/// Voltage ratio to dB.
#[inline]
pub fn db20(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}

#[inline]
pub fn db10(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}
