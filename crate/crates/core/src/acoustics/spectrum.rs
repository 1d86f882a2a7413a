use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{Matrix2, TransferMatrixSpectrum};
use super::{check_dimension, AcousticError, FrequencyGrid, Medium, Result, IMPEDANCE_FLOOR};

/// Upper clamp for transmission loss [dB].
pub const TL_MAX_DB: f64 = 120.0;

/// Unflanged open-end length correction coefficient (low ka).
pub const OPEN_END_CORRECTION: f64 = 0.6133;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    TransmissionLossDb,
    ImpedanceMagnitude,
    AdmittanceMagnitude,
}

/// A real-valued quantity sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub kind: SpectrumKind,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: FrequencyGrid, kind: SpectrumKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count {
            return Err(AcousticError::LengthMismatch {
                expected: grid.count,
                actual: values.len(),
            });
        }
        Ok(Self { grid, kind, values })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.values()
    }

    /// Linear interpolation at `f`, clamped to the end values outside the grid.
    pub fn value_at(&self, f: f64) -> f64 {
        let freqs = self.frequencies();
        interpolate(&freqs, &self.values, f)
    }
}

pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let hi = xs.partition_point(|&v| v < x);
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

/// Transmission loss of one matrix between equal ports of impedance `z0`.
#[inline]
pub fn transmission_loss_at(m: &Matrix2, z0: f64) -> f64 {
    let sum = m.a + m.b / z0 + m.c * z0 + m.d;
    let tl = 20.0 * (sum.norm() / 2.0).log10();
    if tl.is_nan() {
        TL_MAX_DB
    } else {
        tl.clamp(0.0, TL_MAX_DB)
    }
}

/// TL = 20·log10(|A + B/Z0 + C·Z0 + D| / 2), clamped to [0, 120] dB.
pub fn transmission_loss(
    t: &TransferMatrixSpectrum,
    port_radius: f64,
    medium: &Medium,
) -> Result<Spectrum> {
    check_dimension("port radius", port_radius)?;
    let z0 = medium.duct_impedance(port_radius);
    let values = t
        .entries
        .iter()
        .map(|m| transmission_loss_at(m, z0))
        .collect();
    Spectrum::new(t.grid, SpectrumKind::TransmissionLossDb, values)
}

/// Load seen at the outlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Termination {
    /// Unflanged open pipe end of the given radius.
    OpenEnd { radius_m: f64 },
    /// Rigid wall (infinite load).
    Closed,
    /// Reflection-free load of the given impedance.
    Anechoic { impedance: f64 },
}

impl Termination {
    /// Load impedance at `freq`; `None` for the rigid (infinite) load.
    pub fn load_at(&self, freq: f64, medium: &Medium) -> Option<Complex64> {
        match *self {
            Termination::OpenEnd { radius_m } => {
                let ka = 2.0 * PI * freq / medium.c() * radius_m;
                let z0 = medium.duct_impedance(radius_m);
                Some(Complex64::new(
                    z0 * ka * ka / 4.0,
                    z0 * OPEN_END_CORRECTION * ka,
                ))
            }
            Termination::Closed => None,
            Termination::Anechoic { impedance } => Some(Complex64::new(impedance, 0.0)),
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            Termination::OpenEnd { radius_m } => check_dimension("open end radius", radius_m),
            Termination::Closed => Ok(()),
            Termination::Anechoic { impedance } => check_dimension("anechoic impedance", impedance),
        }
    }
}

fn regularize(z: Complex64) -> Complex64 {
    let mag = z.norm();
    if mag >= IMPEDANCE_FLOOR {
        z
    } else if mag == 0.0 {
        Complex64::new(IMPEDANCE_FLOOR, 0.0)
    } else {
        z * (IMPEDANCE_FLOOR / mag)
    }
}

/// Z_in = (A·Z_L + B) / (C·Z_L + D), or A/C for a rigid load.
#[inline]
pub fn input_impedance_at(m: &Matrix2, load: Option<Complex64>) -> Complex64 {
    match load {
        None => m.a / regularize(m.c),
        Some(zl) => (m.a * zl + m.b) / regularize(m.c * zl + m.d),
    }
}

pub fn input_impedance(
    t: &TransferMatrixSpectrum,
    termination: &Termination,
    medium: &Medium,
) -> Result<Vec<Complex64>> {
    termination.check()?;
    Ok(t.entries
        .iter()
        .enumerate()
        .map(|(i, m)| input_impedance_at(m, termination.load_at(t.grid.value(i), medium)))
        .collect())
}

/// |1/Z| for an impedance sampled on `grid`.
pub fn admittance_spectrum(grid: &FrequencyGrid, impedance: &[Complex64]) -> Result<Spectrum> {
    let values = impedance
        .iter()
        .map(|z| 1.0 / regularize(*z).norm())
        .collect();
    Spectrum::new(*grid, SpectrumKind::AdmittanceMagnitude, values)
}
