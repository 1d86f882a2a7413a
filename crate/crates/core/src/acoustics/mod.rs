//! Plane-wave transmission-line acoustics.
//!
//! State vectors are (pressure [Pa], volume velocity [m³/s]); every impedance
//! in this module is an acoustic impedance, i.e. ρc/S for a duct of area S.

mod branch;
mod matrix;
mod peaks;
mod spectrum;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use branch::{
    helmholtz_impedance, helmholtz_impedance_at, helmholtz_resonance, quarter_wave_impedance,
    quarter_wave_impedance_at, quarter_wave_notch,
};
pub use matrix::{
    cascade, shunt_admittance, shunt_matrix, tube_matrix, tube_matrix_at, viscous_attenuation,
    Matrix2, TransferMatrixSpectrum,
};
pub use peaks::{find_resonances, Resonance};
pub use spectrum::{
    admittance_spectrum, input_impedance, input_impedance_at, transmission_loss,
    transmission_loss_at, Spectrum, SpectrumKind, Termination, TL_MAX_DB,
};

/// Smallest magnitude allowed for impedances and bilinear-form denominators.
pub const IMPEDANCE_FLOOR: f64 = 1e-12;

/// Dynamic viscosity of air [Pa·s] used by the thermo-viscous loss model.
pub const AIR_VISCOSITY: f64 = 1.81e-5;
/// Ratio of specific heats of air.
pub const AIR_GAMMA: f64 = 1.4;
/// Prandtl number of air.
pub const AIR_PRANDTL: f64 = 0.71;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcousticError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("incompatible frequency grids")]
    IncompatibleGrids,
    #[error("expected {expected} per-frequency values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

pub type Result<T> = std::result::Result<T, AcousticError>;

/// Non-fatal conditions raised while evaluating a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Warning {
    /// A shunt impedance fell below [`IMPEDANCE_FLOOR`] and was clamped.
    NotchClamped { frequency_hz: f64 },
    /// The grid reaches above the first non-planar duct mode.
    AbovePlaneWaveCutoff { f_max_hz: f64, cutoff_hz: f64 },
}

/// Propagation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    pub sound_speed_m_per_s: f64,
    pub density_kg_per_m3: f64,
}

impl Default for Medium {
    /// Air at 20 °C.
    fn default() -> Self {
        Self {
            sound_speed_m_per_s: 343.0,
            density_kg_per_m3: 1.21,
        }
    }
}

impl Medium {
    pub fn new(sound_speed: f64, density: f64) -> Result<Self> {
        let m = Self {
            sound_speed_m_per_s: sound_speed,
            density_kg_per_m3: density,
        };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.sound_speed_m_per_s > 0.0 && self.sound_speed_m_per_s.is_finite()) {
            return Err(AcousticError::InvalidArgument(
                "sound speed must be positive".into(),
            ));
        }
        if !(self.density_kg_per_m3 > 0.0 && self.density_kg_per_m3.is_finite()) {
            return Err(AcousticError::InvalidArgument(
                "density must be positive".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn c(&self) -> f64 {
        self.sound_speed_m_per_s
    }

    #[inline]
    pub fn rho(&self) -> f64 {
        self.density_kg_per_m3
    }

    /// Characteristic acoustic impedance ρc/(πr²) of a circular duct.
    #[inline]
    pub fn duct_impedance(&self, radius: f64) -> f64 {
        self.rho() * self.c() / (std::f64::consts::PI * radius * radius)
    }

    /// First non-planar (1,1) mode cutoff of a circular duct of radius `r`.
    pub fn plane_wave_cutoff(&self, radius: f64) -> f64 {
        1.8412 * self.c() / (2.0 * std::f64::consts::PI * radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Logarithmic,
}

/// Sampled frequency axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl FrequencyGrid {
    pub fn new(f_min: f64, f_max: f64, count: usize, spacing: Spacing) -> Result<Self> {
        let g = Self {
            f_min_hz: f_min,
            f_max_hz: f_max,
            count,
            spacing,
        };
        g.check()?;
        Ok(g)
    }

    pub fn linear(f_min: f64, f_max: f64, count: usize) -> Result<Self> {
        Self::new(f_min, f_max, count, Spacing::Linear)
    }

    pub fn logarithmic(f_min: f64, f_max: f64, count: usize) -> Result<Self> {
        Self::new(f_min, f_max, count, Spacing::Logarithmic)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.f_min_hz > 0.0 && self.f_min_hz < self.f_max_hz && self.f_max_hz.is_finite()) {
            return Err(AcousticError::InvalidArgument(format!(
                "frequency grid needs 0 < f_min < f_max, got [{}, {}]",
                self.f_min_hz, self.f_max_hz
            )));
        }
        if self.count < 2 {
            return Err(AcousticError::InvalidArgument(
                "frequency grid needs count >= 2".into(),
            ));
        }
        let v = self.values();
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AcousticError::InvalidArgument(
                "frequency grid values are not strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        let last = self.count - 1;
        if i == 0 {
            return self.f_min_hz;
        }
        if i == last {
            return self.f_max_hz;
        }
        let t = i as f64 / last as f64;
        match self.spacing {
            Spacing::Linear => self.f_min_hz + t * (self.f_max_hz - self.f_min_hz),
            Spacing::Logarithmic => self.f_min_hz * (self.f_max_hz / self.f_min_hz).powf(t),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_min_hz && f <= self.f_max_hz
    }
}

pub(crate) fn check_dimension(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(AcousticError::InvalidArgument(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_exact() {
        let g = FrequencyGrid::logarithmic(100.0, 4000.0, 20).unwrap();
        let v = g.values();
        assert_eq!(v[0], 100.0);
        assert_eq!(v[19], 4000.0);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_rejects_bad_bounds() {
        assert!(FrequencyGrid::linear(0.0, 10.0, 4).is_err());
        assert!(FrequencyGrid::linear(10.0, 10.0, 4).is_err());
        assert!(FrequencyGrid::linear(1.0, 10.0, 1).is_err());
    }

    #[test]
    fn medium_defaults_to_air() {
        let m = Medium::default();
        assert_eq!(m.c(), 343.0);
        assert_eq!(m.rho(), 1.21);
        assert!(Medium::new(-1.0, 1.0).is_err());
    }
}
