//! Request types and the computations behind them, shared by the CLI and
//! the HTTP service so both emit identical bytes.

use acouforge_core::design::{export_stl, voxelize, DesignError, EvalOptions, VoxelGrid};
use acouforge_core::io::{resonances_csv, spectrum_csv, wav_bytes, DEFAULT_SAMPLE_RATE};
use acouforge_core::modal::{
    apply_envelope, build_lattice, eigenmodes, synthesize, EnvelopeSpline, Impact, Material,
    ModalError, ModalModel,
};
use acouforge_core::{FilterDesign, FrequencyGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRequest {
    pub grid: FrequencyGrid,
    #[serde(default)]
    pub losses: bool,
}

impl Default for SpectrumRequest {
    fn default() -> Self {
        Self {
            grid: FrequencyGrid::linear(100.0, 4000.0, 512).expect("static grid"),
            losses: false,
        }
    }
}

pub fn spectrum(design: &FilterDesign, req: &SpectrumRequest) -> Result<String, DesignError> {
    let tl = design.transmission_loss_with(&req.grid, &EvalOptions { losses: req.losses })?;
    Ok(spectrum_csv(&tl))
}

pub fn resonances(design: &FilterDesign, grid: &FrequencyGrid) -> Result<String, DesignError> {
    Ok(resonances_csv(&design.resonances(grid)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StlRequest {
    pub cell_size_m: f64,
    pub wall_thickness_m: f64,
}

impl Default for StlRequest {
    fn default() -> Self {
        Self {
            cell_size_m: 0.002,
            wall_thickness_m: 0.004,
        }
    }
}

pub fn stl(design: &FilterDesign, req: &StlRequest) -> anyhow::Result<Vec<u8>> {
    let grid = voxelize(design, req.cell_size_m)?;
    Ok(export_stl(&grid, req.wall_thickness_m)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRequest {
    pub voxels: VoxelGrid,
    pub material: Material,
    #[serde(default)]
    pub max_modes: Option<usize>,
}

pub fn build_model(req: &ModelRequest) -> Result<ModalModel, ModalError> {
    eigenmodes(&build_lattice(&req.voxels, &req.material)?, req.max_modes)
}

fn one() -> f64 {
    1.0
}

fn default_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRequest {
    /// Material to sound; the model's current material when absent.
    #[serde(default)]
    pub material: Option<Material>,
    pub impact: Impact,
    #[serde(default = "one")]
    pub listener_distance_m: f64,
    #[serde(default = "one")]
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: u32,
    #[serde(default)]
    pub envelope: Option<EnvelopeSpline>,
}

pub struct Rendered {
    pub wav: Vec<u8>,
    pub gain: f64,
    pub silent: bool,
}

pub fn synth(model: &ModalModel, req: &SynthRequest) -> Result<Rendered, ModalError> {
    let material = req.material.unwrap_or(model.material);
    let s = synthesize(
        model,
        &material,
        &req.impact,
        req.listener_distance_m,
        req.duration_s,
        req.sample_rate_hz,
    )?;
    let waveform = match &req.envelope {
        Some(e) => apply_envelope(&s.waveform, e)?,
        None => s.waveform,
    };
    Ok(Rendered {
        wav: wav_bytes(&waveform),
        gain: s.gain,
        silent: s.silent,
    })
}

/// Retuned frequencies as reported to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub node_count: usize,
    pub mode_count: usize,
    pub material: Material,
    pub frequencies_hz: Vec<f64>,
    pub zero_mode: Vec<bool>,
}

impl From<&ModalModel> for ModeSummary {
    fn from(m: &ModalModel) -> Self {
        Self {
            node_count: m.node_count(),
            mode_count: m.mode_count(),
            material: m.material,
            frequencies_hz: m.frequencies_hz(),
            zero_mode: m.zero_mode.to_vec(),
        }
    }
}
