//! Inverse design: find a filter whose spectrum meets a target.
//!
//! Two stages: [`anneal`] searches topology and stepped dimensions over a
//! primitive catalog, [`refine`] polishes the continuous dimensions with a
//! bounded simplex search. [`optimize`] chains them.

mod anneal;
mod refine;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::{
    find_resonances, transmission_loss_at, FrequencyGrid, Resonance, Spectrum, SpectrumKind,
};
use crate::design::{EvalOptions, FilterDesign, PrimitiveKind, Violation};

pub use anneal::{anneal, anneal_with_progress, iteration_rng};
pub use refine::{refine, refine_with_progress};

/// Objective contribution of a pitch target when the design has no resonance.
pub const UNMATCHED_PENALTY: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("note {0} outside the MIDI range 0..=127")]
    NoteOutOfRange(i64),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid design: {0:?}")]
    InvalidDesign(Vec<Violation>),
}

/// Equal-tempered pitch, A4 (69) = 440 Hz.
pub fn note_to_frequency(midi_note: i64) -> Result<f64, OptimizeError> {
    if !(0..=127).contains(&midi_note) {
        return Err(OptimizeError::NoteOutOfRange(midi_note));
    }
    Ok(440.0 * 2f64.powf((midi_note - 69) as f64 / 12.0))
}

/// Signed distance in cents from `reference` to `f`.
pub fn cents(f: f64, reference: f64) -> f64 {
    1200.0 * (f / reference).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pitch {
    Midi(i64),
    Hz(f64),
}

impl Pitch {
    pub fn frequency(&self) -> Result<f64, OptimizeError> {
        match *self {
            Pitch::Midi(n) => note_to_frequency(n),
            Pitch::Hz(f) if f > 0.0 && f.is_finite() => Ok(f),
            Pitch::Hz(f) => Err(OptimizeError::InvalidTarget(format!("pitch {f} Hz"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitchNote {
    pub pitch: Pitch,
    pub tolerance_cents: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Playing pitches read from open-end input admittance peaks.
    Pitch { notes: Vec<PitchNote> },
    /// Transmission-loss notches of at least `min_depth_db`.
    Notch {
        frequencies_hz: Vec<f64>,
        min_depth_db: f64,
    },
    /// Full TL curve with non-negative per-frequency weights.
    Curve {
        spectrum: Spectrum,
        weights: Vec<f64>,
    },
}

impl TargetSpec {
    pub fn pitches(midi_notes: &[i64], tolerance_cents: f64) -> Self {
        TargetSpec::Pitch {
            notes: midi_notes
                .iter()
                .map(|&n| PitchNote {
                    pitch: Pitch::Midi(n),
                    tolerance_cents,
                })
                .collect(),
        }
    }

    pub fn target_count(&self) -> usize {
        match self {
            TargetSpec::Pitch { notes } => notes.len(),
            TargetSpec::Notch { frequencies_hz, .. } => frequencies_hz.len(),
            TargetSpec::Curve { .. } => 1,
        }
    }

    pub fn check(&self, grid: &FrequencyGrid) -> Result<(), OptimizeError> {
        let bad = |m: String| Err(OptimizeError::InvalidTarget(m));
        match self {
            TargetSpec::Pitch { notes } => {
                if notes.is_empty() {
                    return bad("no pitch targets".into());
                }
                for n in notes {
                    let f = n.pitch.frequency()?;
                    if !(n.tolerance_cents > 0.0) {
                        return bad(format!(
                            "tolerance {} cents must be positive",
                            n.tolerance_cents
                        ));
                    }
                    if !grid.contains(f) {
                        return bad(format!("pitch {f:.3} Hz outside the evaluation grid"));
                    }
                }
            }
            TargetSpec::Notch {
                frequencies_hz,
                min_depth_db,
            } => {
                if frequencies_hz.is_empty() {
                    return bad("no notch targets".into());
                }
                if !(*min_depth_db > 0.0) {
                    return bad("min_depth_db must be positive".into());
                }
                if let Some(f) = frequencies_hz.iter().find(|f| !grid.contains(**f)) {
                    return bad(format!("notch {f} Hz outside the evaluation grid"));
                }
            }
            TargetSpec::Curve { spectrum, weights } => {
                if spectrum.kind != SpectrumKind::TransmissionLossDb {
                    return bad("curve target must be a transmission-loss spectrum".into());
                }
                if weights.len() != spectrum.values.len() {
                    return bad("one weight per curve sample required".into());
                }
                if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    return bad("weights must be non-negative with a positive sum".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionBound {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl DimensionBound {
    pub const fn new(min: f64, max: f64, step: f64) -> Self {
        Self { min, max, step }
    }

    pub const fn fixed(value: f64) -> Self {
        Self {
            min: value,
            max: value,
            step: value,
        }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    pub fn is_free(&self) -> bool {
        self.max > self.min
    }

    /// Number of stepped values in `[min, max]`.
    pub fn levels(&self) -> u64 {
        ((self.max - self.min) / self.step + 1e-9).floor() as u64 + 1
    }
}

/// A primitive variant the search may use, with bounds per dimension in
/// [`PrimitiveKind::dimension_names`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub kind: PrimitiveKind,
    pub bounds: Vec<DimensionBound>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineConfig {
    pub enabled: bool,
    pub max_evals: usize,
    /// Initial simplex edge as a fraction of each dimension's bound range.
    pub simplex_scale: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            max_evals: 400,
            simplex_scale: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub seed: u64,
    pub max_iterations: usize,
    pub initial_temperature: f64,
    pub cooling_ratio: f64,
    pub catalog: Vec<CatalogEntry>,
    pub max_branches: usize,
    /// Proposals pre-evaluated together; affects speed only, never results.
    pub batch_size: usize,
    pub grid: FrequencyGrid,
    pub refine: RefineConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iterations: 2000,
            initial_temperature: 1.0,
            cooling_ratio: 0.95,
            catalog: default_catalog(),
            max_branches: 4,
            batch_size: if crate::par::is_parallel() { 8 } else { 1 },
            grid: FrequencyGrid::linear(100.0, 4000.0, 512).expect("static grid"),
            refine: RefineConfig::default(),
        }
    }
}

/// Desk-scale bounds for every primitive variant.
pub fn default_catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            kind: PrimitiveKind::Tube,
            bounds: vec![
                DimensionBound::new(0.01, 0.5, 0.005),
                DimensionBound::new(0.005, 0.03, 0.0025),
            ],
        },
        CatalogEntry {
            kind: PrimitiveKind::Chamber,
            bounds: vec![
                DimensionBound::new(0.01, 0.3, 0.005),
                DimensionBound::new(0.01, 0.06, 0.0025),
            ],
        },
        CatalogEntry {
            kind: PrimitiveKind::QuarterWaveBranch,
            bounds: vec![
                DimensionBound::new(0.02, 0.4, 0.001),
                DimensionBound::new(0.003, 0.02, 0.001),
            ],
        },
        CatalogEntry {
            kind: PrimitiveKind::HelmholtzBranch,
            bounds: vec![
                DimensionBound::new(0.003, 0.05, 0.001),
                DimensionBound::new(0.003, 0.015, 0.001),
                DimensionBound::new(1e-6, 5e-4, 1e-6),
            ],
        },
    ]
}

impl SearchConfig {
    pub fn entry(&self, kind: PrimitiveKind) -> Option<&CatalogEntry> {
        self.catalog.iter().find(|e| e.kind == kind)
    }

    pub fn check(&self) -> Result<(), OptimizeError> {
        let bad = |m: String| Err(OptimizeError::InvalidConfig(m));
        if self.catalog.is_empty() {
            return bad("catalog is empty".into());
        }
        if !(self.cooling_ratio > 0.0 && self.cooling_ratio < 1.0) {
            return bad(format!(
                "cooling_ratio {} outside (0, 1)",
                self.cooling_ratio
            ));
        }
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return bad("initial_temperature must be positive".into());
        }
        if self.grid.check().is_err() {
            return bad("invalid evaluation grid".into());
        }
        if self.refine.enabled && !(self.refine.simplex_scale > 0.0) {
            return bad("simplex_scale must be positive".into());
        }
        for e in &self.catalog {
            let names = e.kind.dimension_names();
            if e.bounds.len() != names.len() {
                return bad(format!(
                    "{:?} needs {} bounds, got {}",
                    e.kind,
                    names.len(),
                    e.bounds.len()
                ));
            }
            for (b, name) in e.bounds.iter().zip(names) {
                let finite = b.min.is_finite() && b.max.is_finite() && b.step.is_finite();
                if !finite || b.min <= 0.0 || b.max < b.min || b.step <= 0.0 {
                    return bad(format!("{:?}.{name}: infeasible bounds {b:?}", e.kind));
                }
            }
            if self.catalog.iter().filter(|o| o.kind == e.kind).count() > 1 {
                return bad(format!("{:?} listed twice", e.kind));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub design: FilterDesign,
    pub objective_value: f64,
    /// Cents for pitch targets, dB shortfall for notches, RMS dB for a curve.
    /// `None` when a pitch target found no resonance.
    pub residuals: Vec<Option<f64>>,
    /// Best objective after each iteration; entry 0 is the starting point.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub wall_time_s: f64,
}

/// Precomputed evaluation context for one target on one grid.
pub struct Evaluator<'a> {
    target: &'a TargetSpec,
    grid: FrequencyGrid,
    freqs: Vec<f64>,
    pitch_hz: Vec<f64>,
    opts: EvalOptions,
}

impl<'a> Evaluator<'a> {
    pub fn new(target: &'a TargetSpec, grid: &FrequencyGrid) -> Result<Self, OptimizeError> {
        target.check(grid)?;
        let pitch_hz = match target {
            TargetSpec::Pitch { notes } => notes
                .iter()
                .map(|n| n.pitch.frequency())
                .collect::<Result<_, _>>()?,
            _ => Vec::new(),
        };
        Ok(Self {
            target,
            grid: *grid,
            freqs: grid.values(),
            pitch_hz,
            opts: EvalOptions::default(),
        })
    }

    /// Admittance-peak resonances under an open-end termination at the port radius.
    pub fn resonances(&self, design: &FilterDesign) -> Vec<Resonance> {
        let values = self
            .freqs
            .iter()
            .map(|&f| design.open_end_admittance_at(f, &self.opts))
            .collect();
        let spec = Spectrum {
            grid: self.grid,
            kind: SpectrumKind::AdmittanceMagnitude,
            values,
        };
        find_resonances(&spec, usize::MAX)
    }

    /// Objective and per-target residuals. Invalid designs score +∞.
    pub fn evaluate(&self, design: &FilterDesign) -> (f64, Vec<Option<f64>>) {
        if !design.validate().is_empty() {
            return (f64::INFINITY, vec![None; self.target.target_count()]);
        }
        let z0 = design.medium.duct_impedance(design.port_radius_m);
        match self.target {
            TargetSpec::Pitch { notes } => {
                let res = self.resonances(design);
                let mut total = 0.0;
                let mut residuals = Vec::with_capacity(notes.len());
                for (note, &ft) in notes.iter().zip(&self.pitch_hz) {
                    match nearest_cents(&res, ft) {
                        Some(c) => {
                            total += (c / note.tolerance_cents).powi(2);
                            residuals.push(Some(c));
                        }
                        None => {
                            total += UNMATCHED_PENALTY;
                            residuals.push(None);
                        }
                    }
                }
                (total, residuals)
            }
            TargetSpec::Notch {
                frequencies_hz,
                min_depth_db,
            } => {
                let mut total = 0.0;
                let residuals = frequencies_hz
                    .iter()
                    .map(|&f| {
                        let tl = transmission_loss_at(&design.matrix_at(f, &self.opts), z0);
                        let short = (min_depth_db - tl).max(0.0);
                        total += short * short;
                        Some(short)
                    })
                    .collect();
                (total, residuals)
            }
            TargetSpec::Curve { spectrum, weights } => {
                let tl = design.transmission_loss_at(&spectrum.frequencies(), &self.opts);
                let wsum: f64 = weights.iter().sum();
                let mse = tl
                    .iter()
                    .zip(&spectrum.values)
                    .zip(weights)
                    .map(|((a, b), w)| w * (a - b) * (a - b))
                    .sum::<f64>()
                    / wsum;
                (mse, vec![Some(mse.sqrt())])
            }
        }
    }
}

/// Cents from `target` to the nearest resonance; ties (within 1e-9 cents)
/// go to the lower one. `res` is sorted by frequency.
fn nearest_cents(res: &[Resonance], target: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for r in res {
        let c = cents(r.frequency_hz, target);
        match best {
            Some(b) if c.abs() >= b.abs() - 1e-9 => {}
            _ => best = Some(c),
        }
    }
    best
}

/// Scalar objective, zero iff every target is met exactly.
pub fn objective(
    design: &FilterDesign,
    target: &TargetSpec,
    grid: &FrequencyGrid,
) -> Result<f64, OptimizeError> {
    let v = design.validate();
    if !v.is_empty() {
        return Err(OptimizeError::InvalidDesign(v));
    }
    Ok(Evaluator::new(target, grid)?.evaluate(design).0)
}

/// Discrete annealing followed, when enabled, by simplex refinement.
pub fn optimize(
    initial: &FilterDesign,
    target: &TargetSpec,
    config: &SearchConfig,
    progress: &mut dyn FnMut(f64),
) -> Result<OptimizationResult, OptimizeError> {
    let start = Instant::now();
    let refine_on = config.refine.enabled;
    let split = if refine_on { 0.8 } else { 1.0 };
    let coarse = anneal_with_progress(initial, target, config, &mut |p| progress(p * split))?;
    if !refine_on {
        progress(1.0);
        return Ok(coarse);
    }
    let fine = refine_with_progress(&coarse.design, target, config, &mut |p| {
        progress(split + p * (1.0 - split))
    })?;
    let mut trace = coarse.trace;
    let last = *trace.last().expect("trace has the initial entry");
    trace.extend(fine.trace.into_iter().skip(1).map(|v| v.min(last)));
    progress(1.0);
    Ok(OptimizationResult {
        design: fine.design,
        objective_value: fine.objective_value,
        residuals: fine.residuals,
        trace,
        evaluations: coarse.evaluations + fine.evaluations,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
