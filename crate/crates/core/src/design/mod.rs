//! Filter design documents and their reduction to transfer matrices.
//!
//! A design is an ordered main chain of ducts (inlet to outlet along +x) with
//! side branches attached between chain elements. A branch with
//! `attach_after = p` sits after the first `p` chain elements, so `0` is the
//! inlet and `chain.len()` the outlet.

mod format;
mod stl;
mod voxel;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::{
    self, find_resonances, helmholtz_impedance_at, input_impedance_at, quarter_wave_impedance_at,
    transmission_loss_at, tube_matrix_at, AcousticError, FrequencyGrid, Matrix2, Medium, Resonance,
    Spectrum, SpectrumKind, Termination, TransferMatrixSpectrum, Warning,
};
use crate::par;

pub use format::{from_document, to_document, FormatVersion, ParseError, FORMAT_VERSION};
pub use stl::{export_stl, stl_signed_volume, stl_triangle_count, StlError};
pub use voxel::{analytic_volume, voxelize, VoxelGrid};

/// Default printability guard on the summed chain length [m].
pub const DEFAULT_MAX_TOTAL_LENGTH_M: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("design failed validation: {}", summarize(.0))]
    ValidationFailed(Vec<Violation>),
    #[error("cell size {cell_size} exceeds the smallest radius {min_radius}")]
    VoxelizationTooCoarse { cell_size: f64, min_radius: f64 },
    #[error(transparent)]
    Acoustic(#[from] AcousticError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

fn summarize(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.code.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

/// A catalog primitive. Dimensions are SI, spelled out in the field names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    Tube {
        length_m: f64,
        radius_m: f64,
    },
    /// Expansion section of the main chain.
    Chamber {
        length_m: f64,
        radius_m: f64,
    },
    /// Closed side tube.
    QuarterWaveBranch {
        length_m: f64,
        radius_m: f64,
        attach_after: usize,
    },
    HelmholtzBranch {
        neck_length_m: f64,
        neck_radius_m: f64,
        cavity_volume_m3: f64,
        attach_after: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Tube,
    Chamber,
    QuarterWaveBranch,
    HelmholtzBranch,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 4] = [
        PrimitiveKind::Tube,
        PrimitiveKind::Chamber,
        PrimitiveKind::QuarterWaveBranch,
        PrimitiveKind::HelmholtzBranch,
    ];

    pub fn is_branch(self) -> bool {
        matches!(
            self,
            PrimitiveKind::QuarterWaveBranch | PrimitiveKind::HelmholtzBranch
        )
    }

    /// Names of the continuous dimensions, in [`Primitive::dimensions`] order.
    pub fn dimension_names(self) -> &'static [&'static str] {
        match self {
            PrimitiveKind::Tube | PrimitiveKind::Chamber | PrimitiveKind::QuarterWaveBranch => {
                &["length_m", "radius_m"]
            }
            PrimitiveKind::HelmholtzBranch => {
                &["neck_length_m", "neck_radius_m", "cavity_volume_m3"]
            }
        }
    }
}

impl Primitive {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            Primitive::Tube { .. } => PrimitiveKind::Tube,
            Primitive::Chamber { .. } => PrimitiveKind::Chamber,
            Primitive::QuarterWaveBranch { .. } => PrimitiveKind::QuarterWaveBranch,
            Primitive::HelmholtzBranch { .. } => PrimitiveKind::HelmholtzBranch,
        }
    }

    pub fn is_branch(&self) -> bool {
        self.kind().is_branch()
    }

    pub fn attach_after(&self) -> Option<usize> {
        match *self {
            Primitive::QuarterWaveBranch { attach_after, .. }
            | Primitive::HelmholtzBranch { attach_after, .. } => Some(attach_after),
            _ => None,
        }
    }

    pub fn set_attach_after(&mut self, position: usize) {
        match self {
            Primitive::QuarterWaveBranch { attach_after, .. }
            | Primitive::HelmholtzBranch { attach_after, .. } => *attach_after = position,
            _ => {}
        }
    }

    pub fn dimensions(&self) -> Vec<f64> {
        match *self {
            Primitive::Tube { length_m, radius_m }
            | Primitive::Chamber { length_m, radius_m }
            | Primitive::QuarterWaveBranch {
                length_m, radius_m, ..
            } => vec![length_m, radius_m],
            Primitive::HelmholtzBranch {
                neck_length_m,
                neck_radius_m,
                cavity_volume_m3,
                ..
            } => {
                vec![neck_length_m, neck_radius_m, cavity_volume_m3]
            }
        }
    }

    /// Overwrites dimension `index`; out-of-range indices are ignored.
    pub fn set_dimension(&mut self, index: usize, value: f64) {
        match (self, index) {
            (
                Primitive::Tube { length_m, .. }
                | Primitive::Chamber { length_m, .. }
                | Primitive::QuarterWaveBranch { length_m, .. },
                0,
            ) => *length_m = value,
            (
                Primitive::Tube { radius_m, .. }
                | Primitive::Chamber { radius_m, .. }
                | Primitive::QuarterWaveBranch { radius_m, .. },
                1,
            ) => *radius_m = value,
            (Primitive::HelmholtzBranch { neck_length_m, .. }, 0) => *neck_length_m = value,
            (Primitive::HelmholtzBranch { neck_radius_m, .. }, 1) => *neck_radius_m = value,
            (
                Primitive::HelmholtzBranch {
                    cavity_volume_m3, ..
                },
                2,
            ) => *cavity_volume_m3 = value,
            _ => {}
        }
    }

    /// Radius that matters for the plane-wave cutoff and voxel resolution.
    pub fn radius(&self) -> f64 {
        match *self {
            Primitive::Tube { radius_m, .. }
            | Primitive::Chamber { radius_m, .. }
            | Primitive::QuarterWaveBranch { radius_m, .. } => radius_m,
            Primitive::HelmholtzBranch { neck_radius_m, .. } => neck_radius_m,
        }
    }

    pub fn chain_length(&self) -> f64 {
        match *self {
            Primitive::Tube { length_m, .. } | Primitive::Chamber { length_m, .. } => length_m,
            _ => 0.0,
        }
    }

    /// Cavity volume enclosed by the primitive [m³].
    pub fn volume(&self) -> f64 {
        match *self {
            Primitive::Tube { length_m, radius_m }
            | Primitive::Chamber { length_m, radius_m }
            | Primitive::QuarterWaveBranch {
                length_m, radius_m, ..
            } => PI * radius_m * radius_m * length_m,
            Primitive::HelmholtzBranch {
                neck_length_m,
                neck_radius_m,
                cavity_volume_m3,
                ..
            } => PI * neck_radius_m * neck_radius_m * neck_length_m + cavity_volume_m3,
        }
    }

    /// Series matrix of a chain element. Identity for branch variants.
    #[inline]
    pub fn series_matrix_at(&self, freq: f64, medium: &Medium, losses: bool) -> Matrix2 {
        match *self {
            Primitive::Tube { length_m, radius_m } | Primitive::Chamber { length_m, radius_m } => {
                tube_matrix_at(length_m, radius_m, freq, medium, losses)
            }
            _ => Matrix2::IDENTITY,
        }
    }

    /// Side-branch impedance. `None` for chain variants.
    #[inline]
    pub fn branch_impedance_at(&self, freq: f64, medium: &Medium) -> Option<Complex64> {
        match *self {
            Primitive::QuarterWaveBranch {
                length_m, radius_m, ..
            } => Some(quarter_wave_impedance_at(length_m, radius_m, freq, medium)),
            Primitive::HelmholtzBranch {
                neck_length_m,
                neck_radius_m,
                cavity_volume_m3,
                ..
            } => Some(helmholtz_impedance_at(
                neck_length_m,
                neck_radius_m,
                cavity_volume_m3,
                freq,
                medium,
            )),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    EmptyChain,
    BranchIndexOutOfRange,
    NegativeDimension,
    NonFiniteValue,
    BranchInChain,
    ChainElementInBranches,
    TotalLengthExceeded,
    InvalidMedium,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EmptyChain => "EMPTY_CHAIN",
            ViolationCode::BranchIndexOutOfRange => "BRANCH_INDEX_OUT_OF_RANGE",
            ViolationCode::NegativeDimension => "NEGATIVE_DIMENSION",
            ViolationCode::NonFiniteValue => "NON_FINITE_VALUE",
            ViolationCode::BranchInChain => "BRANCH_IN_CHAIN",
            ViolationCode::ChainElementInBranches => "CHAIN_ELEMENT_IN_BRANCHES",
            ViolationCode::TotalLengthExceeded => "TOTAL_LENGTH_EXCEEDED",
            ViolationCode::InvalidMedium => "INVALID_MEDIUM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationLimits {
    pub max_total_length_m: f64,
}

impl Default for ValidationLimits {
    fn default() -> Self {
        Self {
            max_total_length_m: DEFAULT_MAX_TOTAL_LENGTH_M,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Thermo-viscous wall losses on chain elements.
    pub losses: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterDesign {
    #[serde(default)]
    pub format_version: FormatVersion,
    pub name: String,
    #[serde(default)]
    pub medium: Medium,
    pub port_radius_m: f64,
    pub chain: Vec<Primitive>,
    #[serde(default)]
    pub branches: Vec<Primitive>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl FilterDesign {
    pub fn new(name: impl Into<String>, port_radius_m: f64, chain: Vec<Primitive>) -> Self {
        Self {
            format_version: FormatVersion,
            name: name.into(),
            medium: Medium::default(),
            port_radius_m,
            chain,
            branches: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_branch(mut self, branch: Primitive) -> Self {
        self.branches.push(branch);
        self
    }

    /// Tube, chamber (area ratio 4), tube: the standard demo.
    pub fn demo() -> Self {
        Self::new(
            "chamber-demo",
            0.02,
            vec![
                Primitive::Tube {
                    length_m: 0.05,
                    radius_m: 0.02,
                },
                Primitive::Chamber {
                    length_m: 0.1,
                    radius_m: 0.04,
                },
                Primitive::Tube {
                    length_m: 0.05,
                    radius_m: 0.02,
                },
            ],
        )
    }

    pub fn total_length(&self) -> f64 {
        self.chain.iter().map(Primitive::chain_length).sum()
    }

    pub fn validate(&self) -> Vec<Violation> {
        self.validate_with(&ValidationLimits::default())
    }

    /// Checks every invariant; never fails, returns the list of violations.
    pub fn validate_with(&self, limits: &ValidationLimits) -> Vec<Violation> {
        use ViolationCode::*;
        let mut out = Vec::new();
        if self.medium.check().is_err() {
            out.push(Violation::new(
                InvalidMedium,
                "sound speed and density must be positive",
            ));
        }
        check_value(&mut out, "port_radius_m", self.port_radius_m);
        if self.chain.is_empty() {
            out.push(Violation::new(EmptyChain, "the main chain has no elements"));
        }
        for (i, p) in self.chain.iter().enumerate() {
            if p.is_branch() {
                out.push(Violation::new(
                    BranchInChain,
                    format!("chain[{i}] is a branch primitive"),
                ));
            }
            for (name, v) in p.kind().dimension_names().iter().zip(p.dimensions()) {
                check_value(&mut out, &format!("chain[{i}].{name}"), v);
            }
        }
        for (i, p) in self.branches.iter().enumerate() {
            match p.attach_after() {
                None => out.push(Violation::new(
                    ChainElementInBranches,
                    format!("branches[{i}] is not a branch primitive"),
                )),
                Some(pos) if pos > self.chain.len() => out.push(Violation::new(
                    BranchIndexOutOfRange,
                    format!(
                        "branches[{i}].attach_after = {pos} exceeds chain length {}",
                        self.chain.len()
                    ),
                )),
                Some(_) => {}
            }
            for (name, v) in p.kind().dimension_names().iter().zip(p.dimensions()) {
                check_value(&mut out, &format!("branches[{i}].{name}"), v);
            }
        }
        let total = self.total_length();
        if total > limits.max_total_length_m {
            out.push(Violation::new(
                TotalLengthExceeded,
                format!(
                    "total chain length {total} m exceeds {} m",
                    limits.max_total_length_m
                ),
            ));
        }
        out
    }

    fn ensure_valid(&self) -> Result<(), DesignError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(DesignError::ValidationFailed(v))
        }
    }

    /// Largest radius anywhere in the cavity, including the ports.
    pub fn max_radius(&self) -> f64 {
        self.chain
            .iter()
            .chain(&self.branches)
            .map(Primitive::radius)
            .fold(self.port_radius_m, f64::max)
    }

    pub fn plane_wave_cutoff(&self) -> f64 {
        self.medium.plane_wave_cutoff(self.max_radius())
    }

    /// Assembled matrix at one frequency: chain elements in order with each
    /// branch shunt inserted at its attachment point. No validation.
    pub fn matrix_at(&self, freq: f64, opts: &EvalOptions) -> Matrix2 {
        let n = self.chain.len();
        let mut m = Matrix2::IDENTITY;
        for pos in 0..=n {
            for b in self
                .branches
                .iter()
                .filter(|b| b.attach_after() == Some(pos))
            {
                if let Some(z) = b.branch_impedance_at(freq, &self.medium) {
                    let (y, _) = acoustics::shunt_admittance(z);
                    m = m * Matrix2::shunt(y);
                }
            }
            if pos < n {
                m = m * self.chain[pos].series_matrix_at(freq, &self.medium, opts.losses);
            }
        }
        m
    }

    /// Transmission loss at arbitrary frequencies. No validation.
    pub fn transmission_loss_at(&self, freqs: &[f64], opts: &EvalOptions) -> Vec<f64> {
        let z0 = self.medium.duct_impedance(self.port_radius_m);
        par::map_slice(freqs, par::FINE_GRAIN, |&f| {
            transmission_loss_at(&self.matrix_at(f, opts), z0)
        })
    }

    pub fn to_transfer_matrix(
        &self,
        grid: &FrequencyGrid,
    ) -> Result<TransferMatrixSpectrum, DesignError> {
        self.to_transfer_matrix_with(grid, &EvalOptions::default())
    }

    pub fn to_transfer_matrix_with(
        &self,
        grid: &FrequencyGrid,
        opts: &EvalOptions,
    ) -> Result<TransferMatrixSpectrum, DesignError> {
        self.ensure_valid()?;
        grid.check()?;
        let mut t = TransferMatrixSpectrum::from_fn(*grid, |f| self.matrix_at(f, opts));
        t.warnings = self.warnings(grid);
        Ok(t)
    }

    /// Non-fatal modelling warnings for evaluating this design on `grid`.
    pub fn warnings(&self, grid: &FrequencyGrid) -> Vec<Warning> {
        let mut out = Vec::new();
        let cutoff = self.plane_wave_cutoff();
        if grid.f_max_hz > cutoff {
            log::warn!(
                "design '{}': grid reaches {} Hz, above the plane-wave cutoff {cutoff:.1} Hz",
                self.name,
                grid.f_max_hz
            );
            out.push(Warning::AbovePlaneWaveCutoff {
                f_max_hz: grid.f_max_hz,
                cutoff_hz: cutoff,
            });
        }
        for f in grid.values() {
            for b in &self.branches {
                if let Some(z) = b.branch_impedance_at(f, &self.medium) {
                    if acoustics::shunt_admittance(z).1 {
                        out.push(Warning::NotchClamped { frequency_hz: f });
                    }
                }
            }
        }
        out
    }

    pub fn transmission_loss(&self, grid: &FrequencyGrid) -> Result<Spectrum, DesignError> {
        self.transmission_loss_with(grid, &EvalOptions::default())
    }

    pub fn transmission_loss_with(
        &self,
        grid: &FrequencyGrid,
        opts: &EvalOptions,
    ) -> Result<Spectrum, DesignError> {
        self.ensure_valid()?;
        grid.check()?;
        let values = self.transmission_loss_at(&grid.values(), opts);
        Ok(Spectrum::new(
            *grid,
            SpectrumKind::TransmissionLossDb,
            values,
        )?)
    }

    /// |1/Z_in| at the inlet with the outlet radiating into free air.
    pub fn open_end_admittance_at(&self, freq: f64, opts: &EvalOptions) -> f64 {
        let load = Termination::OpenEnd {
            radius_m: self.port_radius_m,
        }
        .load_at(freq, &self.medium);
        1.0 / input_impedance_at(&self.matrix_at(freq, opts), load).norm()
    }

    /// Open-outlet admittance peaks: the pitches the assembly sounds.
    pub fn resonances(&self, grid: &FrequencyGrid) -> Result<Vec<Resonance>, DesignError> {
        self.ensure_valid()?;
        grid.check()?;
        let opts = EvalOptions::default();
        let values = par::map_slice(&grid.values(), par::FINE_GRAIN, |&f| {
            self.open_end_admittance_at(f, &opts)
        });
        let spec = Spectrum {
            grid: *grid,
            kind: SpectrumKind::AdmittanceMagnitude,
            values,
        };
        Ok(find_resonances(&spec, usize::MAX))
    }

    /// Geometry-only equality (ignores name and metadata).
    pub fn same_geometry(&self, other: &FilterDesign) -> bool {
        self.medium == other.medium
            && self.port_radius_m == other.port_radius_m
            && self.chain == other.chain
            && self.branches == other.branches
    }
}

fn check_value(out: &mut Vec<Violation>, name: &str, v: f64) {
    if !v.is_finite() {
        out.push(Violation::new(
            ViolationCode::NonFiniteValue,
            format!("{name} is not finite"),
        ));
    } else if v <= 0.0 {
        out.push(Violation::new(
            ViolationCode::NegativeDimension,
            format!("{name} = {v} must be positive"),
        ));
    }
}

/// Evaluates transmission loss for many designs on one grid.
pub fn evaluate_batch(
    designs: &[FilterDesign],
    grid: &FrequencyGrid,
) -> Vec<Result<Spectrum, DesignError>> {
    par::map_slice(designs, 1, |d| d.transmission_loss(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::{cascade, shunt_matrix, transmission_loss, tube_matrix};

    #[test]
    fn validation_codes() {
        let mut d = FilterDesign::demo();
        assert!(d.validate().is_empty());
        d.chain.clear();
        let codes: Vec<_> = d.validate().into_iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::EmptyChain]);

        let d = FilterDesign::demo().with_branch(Primitive::QuarterWaveBranch {
            length_m: 0.1,
            radius_m: 0.01,
            attach_after: 6,
        });
        let codes: Vec<_> = d.validate().into_iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::BranchIndexOutOfRange]);

        let mut d = FilterDesign::demo();
        d.chain[1] = Primitive::Chamber {
            length_m: 0.1,
            radius_m: -0.04,
        };
        assert_eq!(d.validate()[0].code, ViolationCode::NegativeDimension);
    }

    #[test]
    fn length_guard_is_configurable() {
        let d = FilterDesign::new(
            "long",
            0.01,
            vec![Primitive::Tube {
                length_m: 2.5,
                radius_m: 0.01,
            }],
        );
        assert_eq!(d.validate()[0].code, ViolationCode::TotalLengthExceeded);
        assert!(d
            .validate_with(&ValidationLimits {
                max_total_length_m: 3.0
            })
            .is_empty());
    }

    #[test]
    fn fast_path_matches_explicit_cascade() {
        let g = FrequencyGrid::linear(50.0, 3000.0, 97).unwrap();
        let m = Medium::default();
        let d = FilterDesign::demo()
            .with_branch(Primitive::QuarterWaveBranch {
                length_m: 0.11,
                radius_m: 0.008,
                attach_after: 1,
            })
            .with_branch(Primitive::HelmholtzBranch {
                neck_length_m: 0.01,
                neck_radius_m: 0.005,
                cavity_volume_m3: 1e-4,
                attach_after: 3,
            })
            .with_branch(Primitive::QuarterWaveBranch {
                length_m: 0.05,
                radius_m: 0.006,
                attach_after: 0,
            });
        let fast = d.to_transfer_matrix(&g).unwrap();

        let mut parts = Vec::new();
        for pos in 0..=d.chain.len() {
            for b in d.branches.iter().filter(|b| b.attach_after() == Some(pos)) {
                let z: Vec<_> = g
                    .values()
                    .iter()
                    .map(|&f| b.branch_impedance_at(f, &m).unwrap())
                    .collect();
                parts.push(shunt_matrix(&g, &z).unwrap());
            }
            if pos < d.chain.len() {
                let p = d.chain[pos];
                let dims = p.dimensions();
                parts.push(tube_matrix(dims[0], dims[1], &m, &g, false).unwrap());
            }
        }
        let slow = cascade(&parts).unwrap();
        for (a, b) in fast.entries.iter().zip(&slow.entries) {
            let scale = a.a.norm() + a.b.norm() + a.c.norm() + a.d.norm();
            assert!(a.max_abs_diff(b) <= 1e-12 * scale);
        }
        let tl_fast = d.transmission_loss(&g).unwrap();
        let tl_slow = transmission_loss(&slow, d.port_radius_m, &m).unwrap();
        for (a, b) in tl_fast.values.iter().zip(&tl_slow.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn demo_chamber_peak() {
        let g = FrequencyGrid::linear(100.0, 1600.0, 1501).unwrap();
        let tl = FilterDesign::demo().transmission_loss(&g).unwrap();
        let (i, peak) =
            tl.values
                .iter()
                .enumerate()
                .fold((0, 0.0), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
        assert!((g.value(i) - 857.5).abs() <= 1.0);
        assert!((peak - 6.547_178_687_726_607).abs() < 1e-3);
    }

    #[test]
    fn invalid_design_is_rejected_for_evaluation() {
        let mut d = FilterDesign::demo();
        d.chain.clear();
        let g = FrequencyGrid::linear(100.0, 200.0, 4).unwrap();
        assert!(matches!(
            d.to_transfer_matrix(&g),
            Err(DesignError::ValidationFailed(_))
        ));
    }

    #[test]
    fn cutoff_warning() {
        let d = FilterDesign::demo();
        // r_max = 0.04 m puts the first cross mode near 2513 Hz
        let g = FrequencyGrid::linear(100.0, 2000.0, 8).unwrap();
        assert!(d.to_transfer_matrix(&g).unwrap().warnings.is_empty());
        let hi = FrequencyGrid::linear(100.0, 3000.0, 8).unwrap();
        let w = d.to_transfer_matrix(&hi).unwrap().warnings;
        assert!(matches!(w[0], Warning::AbovePlaneWaveCutoff { .. }));
    }
}
