use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::spectrum::{Spectrum, SpectrumKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub frequency_hz: f64,
    /// Topographic prominence in the log domain (dB for TL, natural log otherwise).
    pub prominence: f64,
}

fn log_values(spec: &Spectrum) -> Vec<f64> {
    match spec.kind {
        SpectrumKind::TransmissionLossDb => spec.values.clone(),
        SpectrumKind::ImpedanceMagnitude | SpectrumKind::AdmittanceMagnitude => spec
            .values
            .iter()
            .map(|v| v.max(f64::MIN_POSITIVE).ln())
            .collect(),
    }
}

fn prominence(y: &[f64], i: usize) -> f64 {
    let peak = y[i];
    let mut left_min = peak;
    for &v in y[..i].iter().rev() {
        if v > peak {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = peak;
    for &v in &y[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Local maxima of `spec`, refined by a parabola through the log-magnitude at
/// the peak and its two neighbours. Keeps the `max_count` most prominent
/// (ties favour the lower frequency) and returns them in frequency order.
pub fn find_resonances(spec: &Spectrum, max_count: usize) -> Vec<Resonance> {
    let y = log_values(spec);
    let n = y.len();
    if n < 3 || max_count == 0 {
        return Vec::new();
    }
    let freqs = spec.frequencies();
    let mut found = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
        let offset = if denom < 0.0 {
            (0.5 * (y[i - 1] - y[i + 1]) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let frequency_hz = if offset >= 0.0 {
            freqs[i] + offset * (freqs[i + 1] - freqs[i])
        } else {
            freqs[i] + offset * (freqs[i] - freqs[i - 1])
        };
        found.push(Resonance {
            frequency_hz,
            prominence: prominence(&y, i),
        });
    }
    found.sort_by(|a, b| {
        b.prominence
            .partial_cmp(&a.prominence)
            .unwrap_or(Ordering::Equal)
            .then(a.frequency_hz.total_cmp(&b.frequency_hz))
    });
    found.truncate(max_count);
    found.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::FrequencyGrid;

    fn lorentz(grid: &FrequencyGrid, centers: &[(f64, f64)]) -> Spectrum {
        let values = grid
            .values()
            .iter()
            .map(|f| {
                centers
                    .iter()
                    .map(|(c, h)| h / (1.0 + ((f - c) / 40.0).powi(2)))
                    .sum::<f64>()
                    + 1e-3
            })
            .collect();
        Spectrum::new(*grid, SpectrumKind::AdmittanceMagnitude, values).unwrap()
    }

    #[test]
    fn monotone_has_no_peaks() {
        let g = FrequencyGrid::linear(100.0, 1000.0, 91).unwrap();
        let s = Spectrum::new(g, SpectrumKind::TransmissionLossDb, g.values()).unwrap();
        assert!(find_resonances(&s, 10).is_empty());
        let flat = Spectrum::new(g, SpectrumKind::TransmissionLossDb, vec![0.0; 91]).unwrap();
        assert!(find_resonances(&flat, 10).is_empty());
    }

    #[test]
    fn single_lorentzian_recovered() {
        let g = FrequencyGrid::linear(500.0, 1500.0, 101).unwrap();
        for center in [1000.0, 1003.7, 996.1] {
            let r = find_resonances(&lorentz(&g, &[(center, 1.0)]), 5);
            assert_eq!(r.len(), 1);
            assert!(
                (r[0].frequency_hz - center).abs() < 1.0,
                "{center} -> {:?}",
                r
            );
        }
    }

    #[test]
    fn tie_prefers_lower_frequency() {
        let g = FrequencyGrid::linear(500.0, 1500.0, 101).unwrap();
        let mut s = lorentz(&g, &[(700.0, 1.0), (1300.0, 1.0)]);
        // exact mirror image so the two prominences tie bit-for-bit
        let n = s.values.len();
        for i in n / 2 + 1..n {
            s.values[i] = s.values[n - 1 - i];
        }
        let r = find_resonances(&s, 1);
        assert_eq!(r.len(), 1);
        assert!((r[0].frequency_hz - 700.0).abs() < 1.0);
        let r = find_resonances(&lorentz(&g, &[(700.0, 1.0), (1300.0, 3.0)]), 1);
        assert!((r[0].frequency_hz - 1300.0).abs() < 1.0);
        let both = find_resonances(&s, 5);
        assert!(both[0].frequency_hz < both[1].frequency_hz);
    }
}
