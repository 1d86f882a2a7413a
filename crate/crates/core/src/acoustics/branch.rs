//! Side-branch resonators. Both impedances vanish at the branch resonance,
//! which shorts the main duct and produces a transmission-loss notch.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_dimension, FrequencyGrid, Medium, Result};

/// Helmholtz neck end correction, in neck radii (0.85 r per flanged side).
pub const HELMHOLTZ_END_CORRECTION: f64 = 1.7;

/// Closed quarter-wave side tube: Z = -i (ρc/S) cot(kL).
#[inline]
pub fn quarter_wave_impedance_at(
    length: f64,
    radius: f64,
    freq: f64,
    medium: &Medium,
) -> Complex64 {
    let z = medium.duct_impedance(radius);
    let (s, c) = (2.0 * PI * freq / medium.c() * length).sin_cos();
    Complex64::new(0.0, -z * c / s)
}

pub fn quarter_wave_impedance(
    length: f64,
    radius: f64,
    medium: &Medium,
    grid: &FrequencyGrid,
) -> Result<Vec<Complex64>> {
    check_dimension("branch length", length)?;
    check_dimension("branch radius", radius)?;
    medium.check()?;
    grid.check()?;
    Ok(grid
        .values()
        .into_iter()
        .map(|f| quarter_wave_impedance_at(length, radius, f, medium))
        .collect())
}

/// Notch frequency `(2n - 1) c / (4L)` of a closed side tube, `n >= 1`.
pub fn quarter_wave_notch(length: f64, medium: &Medium, n: u32) -> f64 {
    (2 * n - 1) as f64 * medium.c() / (4.0 * length)
}

/// Neck-plus-cavity resonator: Z = i (ρ ω L_eff / S_n - ρ c² / (ω V)).
#[inline]
pub fn helmholtz_impedance_at(
    neck_length: f64,
    neck_radius: f64,
    cavity_volume: f64,
    freq: f64,
    medium: &Medium,
) -> Complex64 {
    let omega = 2.0 * PI * freq;
    let s_n = PI * neck_radius * neck_radius;
    let l_eff = neck_length + HELMHOLTZ_END_CORRECTION * neck_radius;
    let rho = medium.rho();
    let c = medium.c();
    Complex64::new(
        0.0,
        rho * omega * l_eff / s_n - rho * c * c / (omega * cavity_volume),
    )
}

pub fn helmholtz_impedance(
    neck_length: f64,
    neck_radius: f64,
    cavity_volume: f64,
    medium: &Medium,
    grid: &FrequencyGrid,
) -> Result<Vec<Complex64>> {
    check_dimension("neck length", neck_length)?;
    check_dimension("neck radius", neck_radius)?;
    check_dimension("cavity volume", cavity_volume)?;
    medium.check()?;
    grid.check()?;
    Ok(grid
        .values()
        .into_iter()
        .map(|f| helmholtz_impedance_at(neck_length, neck_radius, cavity_volume, f, medium))
        .collect())
}

/// Resonance (c/2π)·√(S_n / (L_eff V)).
pub fn helmholtz_resonance(
    neck_length: f64,
    neck_radius: f64,
    cavity_volume: f64,
    medium: &Medium,
) -> f64 {
    let s_n = PI * neck_radius * neck_radius;
    let l_eff = neck_length + HELMHOLTZ_END_CORRECTION * neck_radius;
    medium.c() / (2.0 * PI) * (s_n / (l_eff * cavity_volume)).sqrt()
}
