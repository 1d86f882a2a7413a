//! Impact synthesis as a sum of damped sinusoids, plus spline envelopes.

use serde::{Deserialize, Serialize};

use super::{Material, ModalError, ModalModel};
use crate::io::Waveform;
use crate::par;

/// Peak level after normalization.
pub const NORMALIZED_PEAK: f64 = 0.9;
/// Lowest audible mode retained [Hz].
pub const MIN_AUDIBLE_HZ: f64 = 20.0;
/// Modes above this fraction of the sample rate are dropped.
pub const MAX_RATE_FRACTION: f64 = 0.45;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impact {
    pub node: usize,
    pub impulse_n_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub waveform: Waveform,
    /// Factor applied to reach the normalized peak (1 for a silent result).
    pub gain: f64,
    pub peak_before_normalization: f64,
    pub retained_modes: usize,
    /// Every mode was dropped or had no amplitude at the impact node.
    pub silent: bool,
}

/// One retained mode: amplitude, decay rate, damped angular frequency.
struct Partial {
    a: f64,
    d: f64,
    wd: f64,
}

/// s(t) = Σ aᵢ·e^(−dᵢt)·sin(ω_d,i·t) with aᵢ = φᵢ[node]·J/(ω_d,i·r),
/// retuned to `material` and peak-normalized.
pub fn synthesize(
    model: &ModalModel,
    material: &Material,
    impact: &Impact,
    listener_distance_m: f64,
    duration_s: f64,
    sample_rate_hz: u32,
) -> Result<Synthesis, ModalError> {
    if impact.node >= model.node_count() {
        return Err(ModalError::InvalidImpact(format!(
            "node {} outside 0..{}",
            impact.node,
            model.node_count()
        )));
    }
    if !impact.impulse_n_s.is_finite() {
        return Err(ModalError::InvalidImpact("impulse must be finite".into()));
    }
    if !(listener_distance_m > 0.0 && listener_distance_m.is_finite()) {
        return Err(ModalError::InvalidRequest(format!(
            "listener distance {listener_distance_m} m"
        )));
    }
    let len = duration_s * sample_rate_hz as f64;
    if sample_rate_hz == 0 || !(1.0..=1e8).contains(&len) {
        return Err(ModalError::InvalidRequest(format!(
            "{duration_s} s at {sample_rate_hz} Hz"
        )));
    }
    let len = len.round() as usize;
    let fs = sample_rate_hz as f64;
    let tuned = model.retune(material)?;

    let band = MIN_AUDIBLE_HZ * 2.0 * std::f64::consts::PI
        ..=MAX_RATE_FRACTION * fs * 2.0 * std::f64::consts::PI;
    let partials: Vec<Partial> = (0..tuned.mode_count())
        .filter(|&i| !tuned.zero_mode[i])
        .filter_map(|i| {
            let w = tuned.frequencies_rad_s[i];
            let d = material.decay_rate(w);
            if d >= w || !band.contains(&w) {
                return None;
            }
            let wd = (w * w - d * d).sqrt();
            let a = tuned.shape(i, impact.node) * impact.impulse_n_s / (wd * listener_distance_m);
            Some(Partial { a, d, wd })
        })
        .collect();

    let chunks = len.div_ceil(CHUNK);
    let pieces = par::map_range(chunks, 1, |c| {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(len);
        let mut out = vec![0.0; end - start];
        for p in &partials {
            // phasor e^((−d + iω_d)t) advanced by one sample per step
            let t0 = start as f64 / fs;
            let mag0 = p.a * (-p.d * t0).exp();
            let (mut re, mut im) = ((p.wd * t0).cos() * mag0, (p.wd * t0).sin() * mag0);
            let decay = (-p.d / fs).exp();
            let (cr, ci) = ((p.wd / fs).cos() * decay, (p.wd / fs).sin() * decay);
            for s in out.iter_mut() {
                *s += im;
                let nr = re * cr - im * ci;
                im = re * ci + im * cr;
                re = nr;
            }
        }
        out
    });
    let mut samples: Vec<f64> = pieces.concat();
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let silent = !(peak > 0.0);
    let gain = if silent { 1.0 } else { NORMALIZED_PEAK / peak };
    if silent {
        log::warn!(
            "all modes dropped or silent at node {}: returning a zero waveform",
            impact.node
        );
        samples.iter_mut().for_each(|s| *s = 0.0);
    } else {
        samples.iter_mut().for_each(|s| *s *= gain);
    }
    Ok(Synthesis {
        waveform: Waveform::new(sample_rate_hz, samples),
        gain,
        peak_before_normalization: peak,
        retained_modes: partials.len(),
        silent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlPoint {
    pub time_s: f64,
    pub value: f64,
}

/// Time-varying gain and playback-rate curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpline {
    pub gain: Vec<ControlPoint>,
    pub pitch_ratio: Vec<ControlPoint>,
}

impl EnvelopeSpline {
    pub fn constant(gain: f64, pitch_ratio: f64) -> Self {
        let pts = |v| {
            vec![
                ControlPoint {
                    time_s: 0.0,
                    value: v,
                },
                ControlPoint {
                    time_s: 1.0,
                    value: v,
                },
            ]
        };
        Self {
            gain: pts(gain),
            pitch_ratio: pts(pitch_ratio),
        }
    }

    pub fn check(&self) -> Result<(), ModalError> {
        for (name, pts, positive) in [
            ("gain", &self.gain, false),
            ("pitch_ratio", &self.pitch_ratio, true),
        ] {
            if pts.len() < 2 {
                return Err(ModalError::InvalidEnvelope(format!(
                    "{name} needs at least 2 points"
                )));
            }
            if pts
                .iter()
                .any(|p| !p.time_s.is_finite() || !p.value.is_finite())
            {
                return Err(ModalError::InvalidEnvelope(format!(
                    "{name} has non-finite points"
                )));
            }
            if pts.windows(2).any(|w| w[1].time_s <= w[0].time_s) {
                return Err(ModalError::InvalidEnvelope(format!(
                    "{name} times must strictly increase"
                )));
            }
            if pts.iter().any(|p| {
                if positive {
                    p.value <= 0.0
                } else {
                    p.value < 0.0
                }
            }) {
                return Err(ModalError::InvalidEnvelope(format!(
                    "{name} value out of range"
                )));
            }
        }
        Ok(())
    }
}

/// Catmull-Rom (finite-difference tangents) through `pts`, held constant
/// outside the first and last control times.
pub fn catmull_rom(pts: &[ControlPoint], t: f64) -> f64 {
    let n = pts.len();
    if t <= pts[0].time_s {
        return pts[0].value;
    }
    if t >= pts[n - 1].time_s {
        return pts[n - 1].value;
    }
    let i = pts.partition_point(|p| p.time_s <= t) - 1;
    let (p0, p1) = (pts[i], pts[i + 1]);
    let tangent = |k: usize| {
        let (a, b) = (pts[k.saturating_sub(1)], pts[(k + 1).min(n - 1)]);
        (b.value - a.value) / (b.time_s - a.time_s)
    };
    let h = p1.time_s - p0.time_s;
    let s = (t - p0.time_s) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0.value
        + (s3 - 2.0 * s2 + s) * h * tangent(i)
        + (-2.0 * s3 + 3.0 * s2) * p1.value
        + (s3 - s2) * h * tangent(i + 1)
}

/// Gain scales each output sample; pitch remaps playback position by
/// accumulating the ratio per sample and reading the source linearly.
pub fn apply_envelope(w: &Waveform, spline: &EnvelopeSpline) -> Result<Waveform, ModalError> {
    spline.check()?;
    let fs = w.sample_rate_hz as f64;
    let src = &w.samples;
    let mut pos = 0.0f64;
    let mut out = Vec::with_capacity(src.len());
    for n in 0..src.len() {
        let t = n as f64 / fs;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        let x = match (src.get(i), src.get(i + 1)) {
            (Some(a), Some(b)) => a + frac * (b - a),
            (Some(a), None) if frac == 0.0 => *a,
            _ => 0.0,
        };
        let g = catmull_rom(&spline.gain, t).max(0.0);
        out.push(g * x);
        pos += catmull_rom(&spline.pitch_ratio, t).max(0.0);
    }
    Ok(Waveform::new(w.sample_rate_hz, out))
}
