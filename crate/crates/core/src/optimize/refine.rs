//! Bounded Nelder–Mead over the continuous dimensions of a fixed topology.

use std::cell::Cell;
use std::time::Instant;

use super::{
    DimensionBound, Evaluator, OptimizationResult, OptimizeError, SearchConfig, TargetSpec,
};
use crate::design::FilterDesign;

/// Simplex diameter below which the search has converged.
const CONVERGED_DIAMETER: f64 = 1e-6;

/// Free parameters: (is_branch, index, dimension, bound).
fn parameters(
    d: &FilterDesign,
    config: &SearchConfig,
) -> Vec<(bool, usize, usize, DimensionBound)> {
    let mut out = Vec::new();
    for (is_branch, list) in [(false, &d.chain), (true, &d.branches)] {
        for (i, p) in list.iter().enumerate() {
            if let Some(e) = config.entry(p.kind()) {
                for (k, b) in e.bounds.iter().enumerate() {
                    if b.is_free() {
                        out.push((is_branch, i, k, *b));
                    }
                }
            }
        }
    }
    out
}

pub fn refine(
    initial: &FilterDesign,
    target: &TargetSpec,
    config: &SearchConfig,
) -> Result<OptimizationResult, OptimizeError> {
    refine_with_progress(initial, target, config, &mut |_| {})
}

pub fn refine_with_progress(
    initial: &FilterDesign,
    target: &TargetSpec,
    config: &SearchConfig,
    progress: &mut dyn FnMut(f64),
) -> Result<OptimizationResult, OptimizeError> {
    let start = Instant::now();
    config.check()?;
    let violations = initial.validate();
    if !violations.is_empty() {
        return Err(OptimizeError::InvalidDesign(violations));
    }
    let eval = Evaluator::new(target, &config.grid)?;
    let params = parameters(initial, config);
    let build = |x: &[f64]| {
        let mut d = initial.clone();
        for (&(is_branch, i, k, b), &v) in params.iter().zip(x) {
            let p = if is_branch {
                &mut d.branches[i]
            } else {
                &mut d.chain[i]
            };
            p.set_dimension(k, b.clamp(v));
        }
        d
    };
    let clamp =
        |x: Vec<f64>| -> Vec<f64> { x.iter().zip(&params).map(|(v, p)| p.3.clamp(*v)).collect() };

    let x0: Vec<f64> = params
        .iter()
        .map(|&(is_branch, i, k, b)| {
            let p = if is_branch {
                &initial.branches[i]
            } else {
                &initial.chain[i]
            };
            b.clamp(p.dimensions()[k])
        })
        .collect();
    let evaluations = Cell::new(0usize);
    let f = |x: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        eval.evaluate(&build(x)).0
    };

    let n = params.len();
    let max_evals = config.refine.max_evals.max(1);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = f(&x0);
    simplex.push((x0.clone(), f0));
    let mut trace = vec![f0];
    if n > 0 && f0 > 0.0 {
        for j in 0..n {
            let b = params[j].3;
            let delta = config.refine.simplex_scale * (b.max - b.min);
            let mut x = x0.clone();
            x[j] = if x0[j] + delta <= b.max {
                x0[j] + delta
            } else {
                x0[j] - delta
            };
            let fx = f(&x);
            simplex.push((x, fx));
        }
    }

    let by_value = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);
    while n > 0 && evaluations.get() < max_evals {
        simplex.sort_by(by_value);
        if simplex[0].1 <= 0.0 || diameter(&simplex) < CONVERGED_DIAMETER {
            break;
        }
        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| {
            clamp(
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };

        let xr = along(1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> =
                        v.0.iter()
                            .zip(&best)
                            .map(|(xi, bi)| bi + 0.5 * (xi - bi))
                            .collect();
                    let fx = f(&x);
                    *v = (x, fx);
                }
            }
        }
        let best_now = simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        trace.push(best_now.min(*trace.last().unwrap()));
        progress((evaluations.get() as f64 / max_evals as f64).min(1.0));
    }
    simplex.sort_by(by_value);
    let design = build(&simplex[0].0);
    let (objective_value, residuals) = eval.evaluate(&design);
    progress(1.0);
    Ok(OptimizationResult {
        design,
        objective_value,
        residuals,
        trace,
        evaluations: evaluations.get(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(x, _)| {
            x.iter()
                .zip(best)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::FrequencyGrid;
    use crate::design::{Primitive, PrimitiveKind};
    use crate::optimize::{CatalogEntry, RefineConfig};

    #[test]
    fn chamber_length_converges_to_quarter_wave() {
        // TL at 857.5 Hz peaks when the chamber is a quarter wavelength (0.1 m)
        let mut d = FilterDesign::demo();
        d.chain[1] = Primitive::Chamber {
            length_m: 0.09,
            radius_m: 0.04,
        };
        let t = TargetSpec::Notch {
            frequencies_hz: vec![857.5],
            min_depth_db: 7.0,
        };
        let cfg = SearchConfig {
            catalog: vec![CatalogEntry {
                kind: PrimitiveKind::Chamber,
                bounds: vec![
                    DimensionBound::new(0.05, 0.15, 0.005),
                    DimensionBound::fixed(0.04),
                ],
            }],
            grid: FrequencyGrid::linear(100.0, 2000.0, 64).unwrap(),
            refine: RefineConfig {
                enabled: true,
                max_evals: 200,
                simplex_scale: 0.1,
            },
            ..SearchConfig::default()
        };
        let r = refine(&d, &t, &cfg).unwrap();
        let Primitive::Chamber { length_m, .. } = r.design.chain[1] else {
            panic!()
        };
        assert!((length_m - 0.1).abs() < 0.001, "{length_m}");
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.evaluations <= 200 + 2);
    }

    #[test]
    fn stays_inside_bounds() {
        let d = FilterDesign::demo();
        let t = TargetSpec::Notch {
            frequencies_hz: vec![1500.0],
            min_depth_db: 30.0,
        };
        let cfg = SearchConfig {
            catalog: vec![CatalogEntry {
                kind: PrimitiveKind::Chamber,
                bounds: vec![
                    DimensionBound::new(0.08, 0.12, 0.005),
                    DimensionBound::new(0.03, 0.05, 0.001),
                ],
            }],
            grid: FrequencyGrid::linear(100.0, 2000.0, 64).unwrap(),
            ..SearchConfig::default()
        };
        let r = refine(&d, &t, &cfg).unwrap();
        let Primitive::Chamber { length_m, radius_m } = r.design.chain[1] else {
            panic!()
        };
        assert!((0.08..=0.12).contains(&length_m) && (0.03..=0.05).contains(&radius_m));
    }
}
