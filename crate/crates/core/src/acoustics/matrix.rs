use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    check_dimension, AcousticError, FrequencyGrid, Medium, Result, Warning, AIR_GAMMA, AIR_PRANDTL,
    AIR_VISCOSITY, IMPEDANCE_FLOOR,
};
use crate::par;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Four-pole matrix mapping inlet (p, U) to outlet (p, U).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2 {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    #[inline]
    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Shunt element `[[1, 0], [1/Z, 1]]`.
    #[inline]
    pub fn shunt(admittance: Complex64) -> Self {
        Self {
            a: ONE,
            b: ZERO,
            c: admittance,
            d: ONE,
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix2) -> f64 {
        [
            (self.a - other.a).norm(),
            (self.b - other.b).norm(),
            (self.c - other.c).norm(),
            (self.d - other.d).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;

    #[inline]
    fn mul(self, r: Matrix2) -> Matrix2 {
        Matrix2 {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

/// Per-frequency transfer matrices on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrixSpectrum {
    pub grid: FrequencyGrid,
    pub entries: Vec<Matrix2>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl TransferMatrixSpectrum {
    pub fn identity(grid: FrequencyGrid) -> Self {
        Self {
            grid,
            entries: vec![Matrix2::IDENTITY; grid.count],
            warnings: Vec::new(),
        }
    }

    pub fn from_fn<F>(grid: FrequencyGrid, f: F) -> Self
    where
        F: Fn(f64) -> Matrix2 + Sync + Send,
    {
        let entries = par::map_range(grid.count, par::FINE_GRAIN, |i| f(grid.value(i)));
        Self {
            grid,
            entries,
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.values()
    }

    /// Largest |det(T) - 1| over the grid.
    pub fn max_det_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|m| (m.det() - ONE).norm())
            .fold(0.0, f64::max)
    }
}

/// Thermo-viscous attenuation constant [1/m] for a circular duct.
pub fn viscous_attenuation(radius: f64, omega: f64, medium: &Medium) -> f64 {
    (1.0 / (radius * medium.c()))
        * (AIR_VISCOSITY * omega / (2.0 * medium.rho())).sqrt()
        * (1.0 + (AIR_GAMMA - 1.0) / AIR_PRANDTL.sqrt())
}

/// Uniform duct matrix at one frequency. No argument checks.
#[inline]
pub fn tube_matrix_at(
    length: f64,
    radius: f64,
    freq: f64,
    medium: &Medium,
    losses: bool,
) -> Matrix2 {
    let omega = 2.0 * std::f64::consts::PI * freq;
    let z = medium.duct_impedance(radius);
    if losses {
        let k = Complex64::new(
            omega / medium.c(),
            -viscous_attenuation(radius, omega, medium),
        );
        let kl = k * length;
        let (s, c) = (kl.sin(), kl.cos());
        Matrix2 {
            a: c,
            b: I * z * s,
            c: I * s / z,
            d: c,
        }
    } else {
        let (s, c) = (omega / medium.c() * length).sin_cos();
        Matrix2 {
            a: Complex64::new(c, 0.0),
            b: Complex64::new(0.0, z * s),
            c: Complex64::new(0.0, s / z),
            d: Complex64::new(c, 0.0),
        }
    }
}

/// Transfer matrix of a uniform circular duct. A zero length gives the identity.
pub fn tube_matrix(
    length: f64,
    radius: f64,
    medium: &Medium,
    grid: &FrequencyGrid,
    losses: bool,
) -> Result<TransferMatrixSpectrum> {
    if !(length >= 0.0 && length.is_finite()) {
        return Err(AcousticError::InvalidArgument(format!(
            "tube length must be non-negative, got {length}"
        )));
    }
    check_dimension("tube radius", radius)?;
    medium.check()?;
    grid.check()?;
    let medium = *medium;
    Ok(TransferMatrixSpectrum::from_fn(*grid, move |f| {
        tube_matrix_at(length, radius, f, &medium, losses)
    }))
}

/// Regularized shunt admittance 1/Z. Infinite or NaN impedances mean "no branch".
#[inline]
pub fn shunt_admittance(z: Complex64) -> (Complex64, bool) {
    if !z.re.is_finite() || !z.im.is_finite() {
        return (ZERO, false);
    }
    let mag = z.norm();
    if mag < IMPEDANCE_FLOOR {
        let zr = if mag == 0.0 {
            Complex64::new(IMPEDANCE_FLOOR, 0.0)
        } else {
            z * (IMPEDANCE_FLOOR / mag)
        };
        (zr.inv(), true)
    } else {
        (z.inv(), false)
    }
}

/// Shunt element for a side-branch impedance sampled on `grid`.
pub fn shunt_matrix(
    grid: &FrequencyGrid,
    impedance: &[Complex64],
) -> Result<TransferMatrixSpectrum> {
    if impedance.len() != grid.count {
        return Err(AcousticError::LengthMismatch {
            expected: grid.count,
            actual: impedance.len(),
        });
    }
    let mut warnings = Vec::new();
    let entries = impedance
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let (y, clamped) = shunt_admittance(z);
            if clamped {
                let f = grid.value(i);
                log::warn!("shunt impedance below {IMPEDANCE_FLOOR:e} at {f} Hz, clamped");
                warnings.push(Warning::NotchClamped { frequency_hz: f });
            }
            Matrix2::shunt(y)
        })
        .collect();
    Ok(TransferMatrixSpectrum {
        grid: *grid,
        entries,
        warnings,
    })
}

/// Series assembly: per-frequency product in inlet-to-outlet order.
pub fn cascade<'a, It>(elements: It) -> Result<TransferMatrixSpectrum>
where
    It: IntoIterator<Item = &'a TransferMatrixSpectrum>,
{
    let elements: Vec<&TransferMatrixSpectrum> = elements.into_iter().collect();
    let first = elements
        .first()
        .ok_or_else(|| AcousticError::InvalidArgument("cascade of zero elements".into()))?;
    let grid = first.grid;
    for e in &elements {
        if e.grid != grid || e.entries.len() != grid.count {
            return Err(AcousticError::IncompatibleGrids);
        }
    }
    let entries = par::map_range(grid.count, par::FINE_GRAIN, |i| {
        elements
            .iter()
            .fold(Matrix2::IDENTITY, |acc, e| acc * e.entries[i])
    });
    let warnings = elements
        .iter()
        .flat_map(|e| e.warnings.iter().cloned())
        .collect();
    Ok(TransferMatrixSpectrum {
        grid,
        entries,
        warnings,
    })
}
