//! Acoustic filter design studio core.
//!
//! * [`acoustics`]: plane-wave transfer matrices for duct primitives and the
//!   spectra derived from them (transmission loss, input impedance, peaks).
//! * [`design`]: the `FilterDesign` document, its reduction to a transfer
//!   matrix, voxelization and STL export.
//! * [`optimize`]: inverse design against pitch, notch or curve targets.
//! * [`coding`]: bit payloads carried by quarter-wave notches.
//! * [`modal`]: voxel mass-spring modal models with analytic material retuning.
//! * [`mesh`]: frequency-adaptive element budgets and vertex clustering.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acoustics;
pub mod coding;
pub mod design;
pub mod io;
pub mod mesh;
pub mod modal;
pub mod optimize;
pub mod par;

pub use acoustics::{
    FrequencyGrid, Medium, Spacing, Spectrum, SpectrumKind, TransferMatrixSpectrum,
};
pub use design::{FilterDesign, Primitive};
