//! Acoustic tags: bits stored as the presence of transmission-loss notches.
//!
//! Bit `j` owns the band `f_j = base + j·step`. A set bit adds a quarter-wave
//! branch of length `c/(4·f_j)`; decoding looks for TL above a threshold
//! within `±step/4` of each band. [`simulate_response`] and
//! [`estimate_spectrum`] close the loop through sampled audio.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::{FrequencyGrid, Medium, Spectrum, SpectrumKind, TL_MAX_DB};
use crate::design::{EvalOptions, FilterDesign, Primitive, Violation};
use crate::io::Waveform;

pub const DEFAULT_THRESHOLD_DB: f64 = 10.0;
pub const MAX_BITS: usize = 16;
/// Welch analysis frame length in samples.
pub const ANALYSIS_FRAME: usize = 8192;

const META_BITS: &str = "tag.bit_count";
const META_BASE: &str = "tag.base_hz";
const META_STEP: &str = "tag.step_hz";
const META_THRESHOLD: &str = "tag.threshold_db";

/// (10^0.3 − 1)^½: TL of a lossless side branch is 3 dB where
/// (ρ/2)·|tan kL| equals this.
fn half_power_tan() -> f64 {
    (10f64.powf(0.3) - 1.0).sqrt()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodingError {
    #[error("invalid band plan: {0}")]
    InvalidBandPlan(String),
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
    #[error("band {frequency_hz} Hz outside the spectrum grid")]
    BandOutOfRange { frequency_hz: f64 },
    #[error("sample rate {sample_rate_hz} Hz aliases {f_max_hz} Hz")]
    Aliasing { sample_rate_hz: u32, f_max_hz: f64 },
    #[error("reference waveform has no energy near {frequency_hz} Hz")]
    ReferenceTooQuiet { frequency_hz: f64 },
    #[error("waveforms differ: {0}")]
    WaveformMismatch(String),
    #[error("invalid probe: {0}")]
    InvalidProbe(String),
    #[error("expected a transmission-loss spectrum")]
    WrongSpectrumKind,
    #[error("design is not a tag: {0}")]
    NotATag(String),
    #[error("invalid design: {0:?}")]
    InvalidDesign(Vec<Violation>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandPlan {
    pub base_hz: f64,
    pub step_hz: f64,
}

impl BandPlan {
    /// 800 + 400·j Hz up to 4 bits. Longer payloads start at 200·n Hz so that
    /// every third harmonic lands at least one step above the top band.
    pub fn default_for(n_bits: usize) -> Self {
        Self {
            base_hz: (200.0 * n_bits as f64).max(800.0),
            step_hz: 400.0,
        }
    }

    pub fn band(&self, j: usize) -> f64 {
        self.base_hz + j as f64 * self.step_hz
    }

    pub fn window(&self) -> f64 {
        self.step_hz / 4.0
    }

    /// Grid spanning every decode window at roughly 1 Hz spacing.
    pub fn analysis_grid(&self, n_bits: usize) -> FrequencyGrid {
        let lo = self.band(0) - self.window();
        let hi = self.band(n_bits.max(1) - 1) + self.window();
        let count = ((hi - lo).ceil() as usize + 1).max(2);
        FrequencyGrid::linear(lo, hi, count).expect("checked band plan gives a valid grid")
    }

    fn check_basic(&self, n_bits: usize) -> Result<(), CodingError> {
        let bad = |m: String| Err(CodingError::InvalidBandPlan(m));
        if !(self.base_hz.is_finite() && self.step_hz.is_finite() && self.step_hz > 0.0) {
            return bad(format!(
                "base {} Hz, step {} Hz",
                self.base_hz, self.step_hz
            ));
        }
        if self.base_hz - self.window() <= 0.0 {
            return bad("first decode window reaches 0 Hz".into());
        }
        if n_bits == 0 || n_bits > MAX_BITS {
            return Err(CodingError::InvalidPayload(format!(
                "{n_bits} bits, expected 1..={MAX_BITS}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagPayload {
    pub bits: Vec<bool>,
    pub band_plan: BandPlan,
    pub threshold_db: f64,
}

impl TagPayload {
    /// Payload with the default band plan and threshold.
    pub fn new(bits: Vec<bool>) -> Self {
        let band_plan = BandPlan::default_for(bits.len());
        Self {
            bits,
            band_plan,
            threshold_db: DEFAULT_THRESHOLD_DB,
        }
    }

    /// Parses a string of `0`/`1`, first character = bit 0.
    pub fn parse_bits(s: &str) -> Result<Vec<bool>, CodingError> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CodingError::InvalidPayload(format!(
                    "unexpected character {c:?} in {s:?}"
                ))),
            })
            .collect()
    }

    pub fn bit_string(&self) -> String {
        format_bits(&self.bits)
    }
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Every payload of `n_bits` bits, in counting order with bit 0 as the LSB.
pub fn all_payloads(n_bits: usize) -> Vec<Vec<bool>> {
    (0..1u32 << n_bits)
        .map(|v| (0..n_bits).map(|j| v >> j & 1 == 1).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodeConfig {
    pub port_radius_m: f64,
    /// Main-tube length before, between and after the branch sites.
    pub segment_length_m: f64,
    /// −3 dB half-width each notch is sized for; `None` means step/8.
    pub notch_half_width_hz: Option<f64>,
    pub medium: Medium,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            port_radius_m: 0.01,
            segment_length_m: 0.02,
            notch_half_width_hz: None,
            medium: Medium::default(),
        }
    }
}

/// Area ratio S_branch/S_port giving a −3 dB half-width `w` around `f`.
fn branch_area_ratio(f: f64, w: f64) -> f64 {
    2.0 * half_power_tan() * (PI * w / (2.0 * f)).tan()
}

/// −3 dB half-width of a quarter-wave notch at `f` with area ratio `rho`.
fn notch_half_width(f: f64, rho: f64) -> f64 {
    f * (2.0 / PI) * (rho / (2.0 * half_power_tan())).atan()
}

fn check_plan(
    plan: &BandPlan,
    n_bits: usize,
    config: &EncodeConfig,
) -> Result<Vec<(f64, f64)>, CodingError> {
    plan.check_basic(n_bits)?;
    let bad = |m: String| Err(CodingError::InvalidBandPlan(m));
    let cutoff = config.medium.plane_wave_cutoff(config.port_radius_m);
    let top = plan.band(n_bits - 1);
    if top + plan.window() >= cutoff {
        return bad(format!(
            "top band {top} Hz reaches the plane-wave cutoff {cutoff:.1} Hz"
        ));
    }
    let w = config.notch_half_width_hz.unwrap_or(plan.step_hz / 8.0);
    if !(w > 0.0) {
        return bad(format!("notch half-width {w} Hz"));
    }
    let bands: Vec<(f64, f64)> = (0..n_bits)
        .map(|j| {
            let f = plan.band(j);
            let rho = branch_area_ratio(f, w);
            (f, rho)
        })
        .collect();
    for (j, &(f, rho)) in bands.iter().enumerate() {
        if !(rho > 0.0 && rho <= 1.0) {
            return bad(format!("band {f} Hz needs a branch wider than the port"));
        }
        if let Some(&(g, rho_g)) = bands.get(j + 1) {
            if f + notch_half_width(f, rho) >= g - notch_half_width(g, rho_g) {
                return bad(format!("notches at {f} Hz and {g} Hz overlap at −3 dB"));
            }
        }
        // odd harmonics of a quarter-wave branch notch as well
        let mut h = 3.0;
        while h * f - w <= top + plan.window() {
            for &(g, _) in &bands {
                if (h * f - g).abs() < plan.window() + w {
                    return bad(format!(
                        "harmonic {} Hz of band {f} Hz falls in band {g} Hz",
                        h * f
                    ));
                }
            }
            h += 2.0;
        }
    }
    Ok(bands)
}

/// One quarter-wave branch per set bit along a matched main tube.
pub fn encode(payload: &TagPayload, config: &EncodeConfig) -> Result<FilterDesign, CodingError> {
    let n = payload.bits.len();
    if !payload.threshold_db.is_finite() {
        return Err(CodingError::InvalidPayload(
            "threshold must be finite".into(),
        ));
    }
    let bands = check_plan(&payload.band_plan, n, config)?;
    let r = config.port_radius_m;
    let chain = vec![
        Primitive::Tube {
            length_m: config.segment_length_m,
            radius_m: r
        };
        n + 1
    ];
    let mut design = FilterDesign::new(format!("tag-{}", payload.bit_string()), r, chain);
    design.medium = config.medium;
    for (j, &(f, rho)) in bands.iter().enumerate() {
        if payload.bits[j] {
            design.branches.push(Primitive::QuarterWaveBranch {
                length_m: config.medium.c() / (4.0 * f),
                radius_m: r * rho.sqrt(),
                attach_after: j + 1,
            });
        }
    }
    let meta = &mut design.metadata;
    meta.insert(META_BITS.into(), n.to_string());
    meta.insert(META_BASE.into(), payload.band_plan.base_hz.to_string());
    meta.insert(META_STEP.into(), payload.band_plan.step_hz.to_string());
    meta.insert(META_THRESHOLD.into(), payload.threshold_db.to_string());
    let v = design.validate();
    if !v.is_empty() {
        return Err(CodingError::InvalidDesign(v));
    }
    Ok(design)
}

/// Band plan, bit count and threshold recorded by [`encode`].
pub fn tag_layout(design: &FilterDesign) -> Result<(BandPlan, usize, f64), CodingError> {
    let get = |k: &str| -> Result<f64, CodingError> {
        design
            .metadata
            .get(k)
            .ok_or_else(|| CodingError::NotATag(format!("missing metadata {k}")))?
            .parse::<f64>()
            .map_err(|e| CodingError::NotATag(format!("{k}: {e}")))
    };
    let n = get(META_BITS)?;
    if n.fract() != 0.0 || n < 1.0 || n > MAX_BITS as f64 {
        return Err(CodingError::NotATag(format!("{META_BITS} = {n}")));
    }
    let plan = BandPlan {
        base_hz: get(META_BASE)?,
        step_hz: get(META_STEP)?,
    };
    plan.check_basic(n as usize)?;
    Ok((plan, n as usize, get(META_THRESHOLD)?))
}

/// Bit j = (max TL within ±step/4 of f_j) ≥ threshold.
pub fn decode(
    spectrum: &Spectrum,
    plan: &BandPlan,
    n_bits: usize,
    threshold_db: f64,
) -> Result<Vec<bool>, CodingError> {
    if spectrum.kind != SpectrumKind::TransmissionLossDb {
        return Err(CodingError::WrongSpectrumKind);
    }
    plan.check_basic(n_bits)?;
    let freqs = spectrum.frequencies();
    let (lo, hi) = (spectrum.grid.f_min_hz, spectrum.grid.f_max_hz);
    (0..n_bits)
        .map(|j| {
            let f = plan.band(j);
            let (a, b) = (f - plan.window(), f + plan.window());
            if a < lo || b > hi {
                return Err(CodingError::BandOutOfRange { frequency_hz: f });
            }
            let inside = freqs
                .iter()
                .zip(&spectrum.values)
                .filter(|(x, _)| (a..=b).contains(*x))
                .map(|(_, v)| *v);
            let peak = inside
                .chain([spectrum.value_at(a), spectrum.value_at(b)])
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(peak >= threshold_db)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub seed: u64,
}

impl Default for Probe {
    fn default() -> Self {
        Self {
            duration_s: 0.5,
            sample_rate_hz: crate::io::DEFAULT_SAMPLE_RATE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedResponse {
    /// Hann-windowed noise burst followed by a silent tail.
    pub reference: Waveform,
    pub response: Waveform,
}

fn hann(n: usize) -> impl Iterator<Item = f64> {
    let m = (n.max(2) - 1) as f64;
    (0..n).map(move |i| 0.5 - 0.5 * (2.0 * PI * i as f64 / m).cos())
}

/// Filters a seeded white burst by `10^(−TL/20)` in the frequency domain.
/// Bins outside `grid` pass unchanged.
pub fn simulate_response(
    design: &FilterDesign,
    probe: &Probe,
    grid: &FrequencyGrid,
) -> Result<SimulatedResponse, CodingError> {
    let v = design.validate();
    if !v.is_empty() {
        return Err(CodingError::InvalidDesign(v));
    }
    let fs = probe.sample_rate_hz;
    if (fs as f64) < 2.0 * grid.f_max_hz {
        return Err(CodingError::Aliasing {
            sample_rate_hz: fs,
            f_max_hz: grid.f_max_hz,
        });
    }
    let burst = (probe.duration_s * fs as f64).round();
    if !(16.0..=1e8).contains(&burst) {
        return Err(CodingError::InvalidProbe(format!(
            "{} s at {fs} Hz",
            probe.duration_s
        )));
    }
    let burst = burst as usize;
    // at least a quarter of silent tail, rounded up to a fast FFT size
    let total = (burst + burst / 4).next_power_of_two();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(probe.seed);
    let mut reference: Vec<f64> = hann(burst)
        .map(|w| w * rng.random_range(-1.0..=1.0))
        .collect();
    reference.resize(total, 0.0);

    let df = fs as f64 / total as f64;
    let first = (grid.f_min_hz / df).ceil() as usize;
    let last = ((grid.f_max_hz / df).floor() as usize).min(total / 2);
    let bins: Vec<f64> = (first..=last).map(|k| k as f64 * df).collect();
    let tl = design.transmission_loss_at(&bins, &EvalOptions::default());

    let mut planner = FftPlanner::new();
    let mut spec: Vec<Complex64> = reference.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(total).process(&mut spec);
    for (k, t) in (first..=last).zip(&tl) {
        let h = 10f64.powf(-t / 20.0);
        spec[k] *= h;
        if k != 0 && k != total - k {
            spec[total - k] *= h;
        }
    }
    planner.plan_fft_inverse(total).process(&mut spec);
    let response = spec.iter().map(|c| c.re / total as f64).collect();
    Ok(SimulatedResponse {
        reference: Waveform::new(fs, reference),
        response: Waveform::new(fs, response),
    })
}

/// Adds seeded uniform white noise at `snr_db` below the signal power.
pub fn add_noise(w: &Waveform, snr_db: f64, seed: u64) -> Waveform {
    let power = w.rms().powi(2);
    // uniform on [-a, a] has variance a²/3
    let a = (3.0 * power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let samples = w
        .samples
        .iter()
        .map(|s| s + a * rng.random_range(-1.0..=1.0))
        .collect();
    Waveform::new(w.sample_rate_hz, samples)
}

/// Hann-windowed Welch power spectrum (frame `n`, hop `n/2`), bins 0..=n/2.
fn welch(x: &[f64], n: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let fft = planner.plan_fft_forward(n);
    let window: Vec<f64> = hann(n).collect();
    let hop = (n / 2).max(1);
    let mut acc = vec![0.0; n / 2 + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut start = 0;
    loop {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(x[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        start += hop;
        if start + n > x.len() {
            break;
        }
    }
    acc
}

/// TL estimate 10·log₁₀(P_ref/P_out) from Welch power spectra, linearly
/// resampled onto `grid` and clamped to [0, 120] dB.
pub fn estimate_spectrum(
    response: &Waveform,
    reference: &Waveform,
    grid: &FrequencyGrid,
) -> Result<Spectrum, CodingError> {
    if response.sample_rate_hz != reference.sample_rate_hz {
        return Err(CodingError::WaveformMismatch(format!(
            "sample rates {} and {} Hz",
            response.sample_rate_hz, reference.sample_rate_hz
        )));
    }
    if response.len() != reference.len() {
        return Err(CodingError::WaveformMismatch(format!(
            "lengths {} and {}",
            response.len(),
            reference.len()
        )));
    }
    let fs = reference.sample_rate_hz as f64;
    if fs < 2.0 * grid.f_max_hz {
        return Err(CodingError::Aliasing {
            sample_rate_hz: reference.sample_rate_hz,
            f_max_hz: grid.f_max_hz,
        });
    }
    let n = ANALYSIS_FRAME.min(reference.len());
    if n < 16 {
        return Err(CodingError::InvalidProbe(format!("{n} samples")));
    }
    let mut planner = FftPlanner::new();
    let pr = welch(&reference.samples, n, &mut planner);
    let py = welch(&response.samples, n, &mut planner);
    let floor = pr.iter().fold(0.0f64, |m, &p| m.max(p)) * 1e-20;
    let df = fs / n as f64;
    let tl_bin = |k: usize| -> Result<f64, CodingError> {
        if !(pr[k] > floor) {
            return Err(CodingError::ReferenceTooQuiet {
                frequency_hz: k as f64 * df,
            });
        }
        Ok(if py[k] > 0.0 {
            10.0 * (pr[k] / py[k]).log10()
        } else {
            TL_MAX_DB
        })
    };
    let values = grid
        .values()
        .into_iter()
        .map(|f| {
            let x = f / df;
            let k = (x.floor() as usize).min(n / 2 - 1);
            let t = x - k as f64;
            let v = (1.0 - t) * tl_bin(k)? + t * tl_bin(k + 1)?;
            Ok(v.clamp(0.0, TL_MAX_DB))
        })
        .collect::<Result<Vec<f64>, CodingError>>()?;
    Ok(Spectrum {
        grid: *grid,
        kind: SpectrumKind::TransmissionLossDb,
        values,
    })
}

/// encode → simulate → estimate → decode for a design produced by [`encode`].
pub fn decode_simulated(
    design: &FilterDesign,
    probe: &Probe,
    snr_db: Option<f64>,
) -> Result<Vec<bool>, CodingError> {
    let (plan, n, threshold) = tag_layout(design)?;
    let grid = plan.analysis_grid(n);
    let sim = simulate_response(design, probe, &grid)?;
    let response = match snr_db {
        Some(snr) => add_noise(&sim.response, snr, probe.seed ^ 0x5EED),
        None => sim.response,
    };
    let est = estimate_spectrum(&response, &sim.reference, &grid)?;
    decode(&est, &plan, n, threshold)
}
