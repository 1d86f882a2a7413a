//! Modal sound models with analytic material retuning.
//!
//! A voxel grid becomes a scalar mass–spring lattice (one degree of freedom
//! per occupied cell). Stiffness scales with Young's modulus and mass with
//! density, so eigenmodes computed once for a reference material retune to
//! any other material by a single frequency factor √((E′/E)(ρ/ρ′)).

mod eigen;
mod synth;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::FormatVersion;
use crate::design::VoxelGrid;

pub use eigen::{jacobi, SymmetricEigen};
pub use synth::{apply_envelope, synthesize, ControlPoint, EnvelopeSpline, Impact, Synthesis};

/// Largest lattice the dense Jacobi solver accepts.
pub const MAX_NODES: usize = 2000;
/// Modes with λ below this fraction of λ_max are rigid-body (zero) modes.
pub const ZERO_MODE_RATIO: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModalError {
    #[error("voxel grid has no occupied cells")]
    EmptyLattice,
    #[error("voxel grid splits into {components} disconnected parts")]
    DisconnectedLattice { components: usize },
    #[error("lattice of {nodes} nodes exceeds the limit of {max}")]
    ModelTooLarge { nodes: usize, max: usize },
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid impact: {0}")]
    InvalidImpact(String),
    #[error("invalid synthesis request: {0}")]
    InvalidRequest(String),
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub youngs_modulus_pa: f64,
    pub density_kg_per_m3: f64,
    /// Mass-proportional Rayleigh coefficient [1/s].
    #[serde(default)]
    pub rayleigh_alpha: f64,
    /// Stiffness-proportional Rayleigh coefficient [s].
    #[serde(default)]
    pub rayleigh_beta: f64,
}

impl Material {
    pub const fn new(youngs_modulus_pa: f64, density_kg_per_m3: f64) -> Self {
        Self {
            youngs_modulus_pa,
            density_kg_per_m3,
            rayleigh_alpha: 0.0,
            rayleigh_beta: 0.0,
        }
    }

    pub const fn with_damping(mut self, alpha: f64, beta: f64) -> Self {
        self.rayleigh_alpha = alpha;
        self.rayleigh_beta = beta;
        self
    }

    pub fn check(&self) -> Result<(), ModalError> {
        let ok = self.youngs_modulus_pa > 0.0
            && self.youngs_modulus_pa.is_finite()
            && self.density_kg_per_m3 > 0.0
            && self.density_kg_per_m3.is_finite()
            && self.rayleigh_alpha >= 0.0
            && self.rayleigh_alpha.is_finite()
            && self.rayleigh_beta >= 0.0
            && self.rayleigh_beta.is_finite();
        if ok {
            Ok(())
        } else {
            Err(ModalError::InvalidMaterial(format!("{self:?}")))
        }
    }

    /// Modal decay rate (α + βω²)/2 for angular frequency ω.
    pub fn decay_rate(&self, omega: f64) -> f64 {
        0.5 * (self.rayleigh_alpha + self.rayleigh_beta * omega * omega)
    }
}

/// Scalar lattice: springs `E·h` between face neighbours, lumped masses `ρ·h³`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub cells: Vec<[usize; 3]>,
    pub positions_m: Vec<[f64; 3]>,
    pub edges: Vec<(usize, usize)>,
    pub cell_size_m: f64,
    pub material: Material,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn spring_constant(&self) -> f64 {
        self.material.youngs_modulus_pa * self.cell_size_m
    }

    pub fn node_mass(&self) -> f64 {
        self.material.density_kg_per_m3 * self.cell_size_m.powi(3)
    }

    /// Dense row-major stiffness: spring-weighted graph Laplacian.
    pub fn stiffness(&self) -> Vec<f64> {
        let n = self.len();
        let k = self.spring_constant();
        let mut m = vec![0.0; n * n];
        for &(a, b) in &self.edges {
            m[a * n + a] += k;
            m[b * n + b] += k;
            m[a * n + b] -= k;
            m[b * n + a] -= k;
        }
        m
    }
}

pub fn build_lattice(grid: &VoxelGrid, material: &Material) -> Result<Lattice, ModalError> {
    material.check()?;
    let cells: Vec<[usize; 3]> = grid.occupied_cells().collect();
    if cells.is_empty() {
        return Err(ModalError::EmptyLattice);
    }
    let components = grid.component_count();
    if components != 1 {
        return Err(ModalError::DisconnectedLattice { components });
    }
    let mut node_of = vec![usize::MAX; grid.occupancy.len()];
    for (n, &c) in cells.iter().enumerate() {
        node_of[grid.index(c)] = n;
    }
    let mut edges = Vec::new();
    for (a, &c) in cells.iter().enumerate() {
        for nb in grid.neighbors(c) {
            let b = node_of[grid.index(nb)];
            if a < b {
                edges.push((a, b));
            }
        }
    }
    Ok(Lattice {
        positions_m: cells.iter().map(|&c| grid.cell_center(c)).collect(),
        cells,
        edges,
        cell_size_m: grid.cell_size_m,
        material: *material,
    })
}

/// Modes of a lattice under a current material, retunable without re-solving.
///
/// Shapes are stored once for the reference material; the current material
/// only rescales frequencies and shape amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalModel {
    pub node_positions_m: Arc<Vec<[f64; 3]>>,
    pub cell_size_m: f64,
    pub reference_material: Material,
    pub material: Material,
    /// Reference angular frequencies [rad/s], ascending.
    pub reference_frequencies: Arc<Vec<f64>>,
    /// Current angular frequencies [rad/s].
    pub frequencies_rad_s: Vec<f64>,
    pub zero_mode: Arc<Vec<bool>>,
    /// Mode-major shapes, mass-orthonormal under the reference material.
    shapes: Arc<Vec<f64>>,
    /// Factor applied to stored shapes for the current material.
    shape_scale: f64,
}

/// Solves the lattice eigenproblem, keeping the lowest `max_modes` modes.
pub fn eigenmodes(lattice: &Lattice, max_modes: Option<usize>) -> Result<ModalModel, ModalError> {
    let n = lattice.len();
    if n == 0 {
        return Err(ModalError::EmptyLattice);
    }
    if n > MAX_NODES {
        return Err(ModalError::ModelTooLarge {
            nodes: n,
            max: MAX_NODES,
        });
    }
    let m = lattice.node_mass();
    // uniform lumped mass: M^(-1/2) K M^(-1/2) = K/m
    let a: Vec<f64> = lattice.stiffness().into_iter().map(|k| k / m).collect();
    let e = jacobi(a, n);
    let keep = max_modes.unwrap_or(n).min(n);
    let lambda_max = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let mut shapes = Vec::with_capacity(keep * n);
    let mut frequencies = Vec::with_capacity(keep);
    let mut zero = Vec::with_capacity(keep);
    for i in 0..keep {
        let lambda = e.values[i];
        frequencies.push(lambda.max(0.0).sqrt());
        zero.push(lambda < ZERO_MODE_RATIO * lambda_max || lambda_max == 0.0);
        let phi: Vec<f64> = e.vectors[i].iter().map(|v| v / m.sqrt()).collect();
        let norm = (phi.iter().map(|p| m * p * p).sum::<f64>()).sqrt();
        shapes.extend(phi.iter().map(|p| p / norm));
    }
    Ok(ModalModel {
        node_positions_m: Arc::new(lattice.positions_m.clone()),
        cell_size_m: lattice.cell_size_m,
        reference_material: lattice.material,
        material: lattice.material,
        reference_frequencies: Arc::new(frequencies.clone()),
        frequencies_rad_s: frequencies,
        zero_mode: Arc::new(zero),
        shapes: Arc::new(shapes),
        shape_scale: 1.0,
    })
}

impl ModalModel {
    pub fn node_count(&self) -> usize {
        self.node_positions_m.len()
    }

    pub fn mode_count(&self) -> usize {
        self.frequencies_rad_s.len()
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.frequencies_rad_s
            .iter()
            .map(|w| w / (2.0 * std::f64::consts::PI))
            .collect()
    }

    /// Lumped node mass under the current material.
    pub fn node_mass(&self) -> f64 {
        self.material.density_kg_per_m3 * self.cell_size_m.powi(3)
    }

    /// Shape amplitude of mode `i` at `node`, mass-normalized for the current material.
    pub fn shape(&self, i: usize, node: usize) -> f64 {
        self.shapes[i * self.node_count() + node] * self.shape_scale
    }

    pub fn mode_shape(&self, i: usize) -> Vec<f64> {
        let n = self.node_count();
        self.shapes[i * n..(i + 1) * n]
            .iter()
            .map(|p| p * self.shape_scale)
            .collect()
    }

    /// Same modes under `material`: O(#modes), no eigen solve. Always derived
    /// from the reference solution, so retuning back is exact.
    pub fn retune(&self, material: &Material) -> Result<ModalModel, ModalError> {
        material.check()?;
        let r = &self.reference_material;
        let e_ratio = material.youngs_modulus_pa / r.youngs_modulus_pa;
        let rho_ratio = r.density_kg_per_m3 / material.density_kg_per_m3;
        let factor = (e_ratio * rho_ratio).sqrt();
        Ok(ModalModel {
            node_positions_m: Arc::clone(&self.node_positions_m),
            cell_size_m: self.cell_size_m,
            reference_material: self.reference_material,
            material: *material,
            reference_frequencies: Arc::clone(&self.reference_frequencies),
            frequencies_rad_s: self
                .reference_frequencies
                .iter()
                .map(|w| w * factor)
                .collect(),
            zero_mode: Arc::clone(&self.zero_mode),
            shapes: Arc::clone(&self.shapes),
            shape_scale: rho_ratio.sqrt(),
        })
    }
}

/// Stored form of a [`ModalModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    #[serde(default)]
    pub format_version: FormatVersion,
    pub cell_size_m: f64,
    pub reference_material: Material,
    pub material: Material,
    pub node_positions_m: Vec<[f64; 3]>,
    pub reference_frequencies_rad_s: Vec<f64>,
    pub zero_mode: Vec<bool>,
    /// One row per mode, mass-orthonormal under the reference material.
    pub mode_shapes: Vec<Vec<f64>>,
}

impl From<&ModalModel> for ModelDocument {
    fn from(m: &ModalModel) -> Self {
        let n = m.node_count();
        Self {
            format_version: FormatVersion,
            cell_size_m: m.cell_size_m,
            reference_material: m.reference_material,
            material: m.material,
            node_positions_m: m.node_positions_m.to_vec(),
            reference_frequencies_rad_s: m.reference_frequencies.to_vec(),
            zero_mode: m.zero_mode.to_vec(),
            mode_shapes: m.shapes.chunks(n.max(1)).map(|c| c.to_vec()).collect(),
        }
    }
}

impl TryFrom<ModelDocument> for ModalModel {
    type Error = ModalError;

    fn try_from(d: ModelDocument) -> Result<Self, ModalError> {
        d.reference_material.check()?;
        let n = d.node_positions_m.len();
        let modes = d.reference_frequencies_rad_s.len();
        let consistent = n > 0
            && d.cell_size_m > 0.0
            && d.zero_mode.len() == modes
            && d.mode_shapes.len() == modes
            && d.mode_shapes.iter().all(|s| s.len() == n);
        if !consistent {
            return Err(ModalError::InvalidRequest(
                "inconsistent model document".into(),
            ));
        }
        let base = ModalModel {
            node_positions_m: Arc::new(d.node_positions_m),
            cell_size_m: d.cell_size_m,
            reference_material: d.reference_material,
            material: d.reference_material,
            frequencies_rad_s: d.reference_frequencies_rad_s.clone(),
            reference_frequencies: Arc::new(d.reference_frequencies_rad_s),
            zero_mode: Arc::new(d.zero_mode),
            shapes: Arc::new(d.mode_shapes.concat()),
            shape_scale: 1.0,
        };
        if d.material == d.reference_material {
            Ok(base)
        } else {
            base.retune(&d.material)
        }
    }
}
