//! Simulated annealing over topology and stepped dimensions.
//!
//! Iteration `t` draws every random number from its own generator seeded by
//! `(seed, t)`, and proposals are made from the current design. A batch of
//! upcoming proposals can therefore be evaluated concurrently and replayed in
//! order: the first accepted proposal ends the batch and the rest are
//! discarded. Results depend on the seed only, never on thread count or
//! batch size.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::{
    CatalogEntry, DimensionBound, Evaluator, OptimizationResult, OptimizeError, SearchConfig,
    TargetSpec,
};
use crate::design::{FilterDesign, Primitive, PrimitiveKind};
use crate::par;

/// Generator for iteration `t` of a run seeded with `seed`.
pub fn iteration_rng(seed: u64, t: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ t.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// A slot the search may edit: chain element or branch, by index.
#[derive(Clone, Copy)]
enum Slot {
    Chain(usize),
    Branch(usize),
}

fn get(d: &FilterDesign, s: Slot) -> &Primitive {
    match s {
        Slot::Chain(i) => &d.chain[i],
        Slot::Branch(i) => &d.branches[i],
    }
}

fn get_mut(d: &mut FilterDesign, s: Slot) -> &mut Primitive {
    match s {
        Slot::Chain(i) => &mut d.chain[i],
        Slot::Branch(i) => &mut d.branches[i],
    }
}

fn slots(d: &FilterDesign) -> impl Iterator<Item = Slot> {
    (0..d.chain.len())
        .map(Slot::Chain)
        .chain((0..d.branches.len()).map(Slot::Branch))
}

fn alternative(kind: PrimitiveKind) -> PrimitiveKind {
    match kind {
        PrimitiveKind::Tube => PrimitiveKind::Chamber,
        PrimitiveKind::Chamber => PrimitiveKind::Tube,
        PrimitiveKind::QuarterWaveBranch => PrimitiveKind::HelmholtzBranch,
        PrimitiveKind::HelmholtzBranch => PrimitiveKind::QuarterWaveBranch,
    }
}

fn random_level<R: Rng>(b: &DimensionBound, rng: &mut R) -> f64 {
    b.clamp(b.min + b.step * rng.random_range(0..b.levels()) as f64)
}

fn random_primitive<R: Rng>(e: &CatalogEntry, attach_after: usize, rng: &mut R) -> Primitive {
    let dims: Vec<f64> = e.bounds.iter().map(|b| random_level(b, rng)).collect();
    let mut p = match e.kind {
        PrimitiveKind::Tube => Primitive::Tube {
            length_m: 0.0,
            radius_m: 0.0,
        },
        PrimitiveKind::Chamber => Primitive::Chamber {
            length_m: 0.0,
            radius_m: 0.0,
        },
        PrimitiveKind::QuarterWaveBranch => Primitive::QuarterWaveBranch {
            length_m: 0.0,
            radius_m: 0.0,
            attach_after,
        },
        PrimitiveKind::HelmholtzBranch => Primitive::HelmholtzBranch {
            neck_length_m: 0.0,
            neck_radius_m: 0.0,
            cavity_volume_m3: 0.0,
            attach_after,
        },
    };
    for (i, v) in dims.into_iter().enumerate() {
        p.set_dimension(i, v);
    }
    p
}

/// One random neighbour of `d`, or `None` when no move applies.
fn propose<R: Rng>(d: &FilterDesign, config: &SearchConfig, rng: &mut R) -> Option<FilterDesign> {
    let perturbable: Vec<(Slot, usize)> = slots(d)
        .filter_map(|s| config.entry(get(d, s).kind()).map(|e| (s, e)))
        .flat_map(|(s, e)| {
            e.bounds
                .iter()
                .enumerate()
                .filter(|(_, b)| b.is_free())
                .map(move |(i, _)| (s, i))
        })
        .collect();
    let swappable: Vec<Slot> = slots(d)
        .filter(|&s| {
            let k = get(d, s).kind();
            config.entry(k).is_some() && config.entry(alternative(k)).is_some()
        })
        .collect();
    let branch_kinds: Vec<&CatalogEntry> = config
        .catalog
        .iter()
        .filter(|e| e.kind.is_branch())
        .collect();
    let can_add = d.branches.len() < config.max_branches && !branch_kinds.is_empty();
    let removable: Vec<usize> = (0..d.branches.len())
        .filter(|&i| config.entry(d.branches[i].kind()).is_some())
        .collect();

    let mut moves = Vec::with_capacity(3);
    if !perturbable.is_empty() {
        moves.push(0);
    }
    if !swappable.is_empty() {
        moves.push(1);
    }
    if can_add || !removable.is_empty() {
        moves.push(2);
    }
    if moves.is_empty() {
        return None;
    }

    let mut next = d.clone();
    match moves[rng.random_range(0..moves.len())] {
        0 => {
            let (slot, i) = perturbable[rng.random_range(0..perturbable.len())];
            let p = get_mut(&mut next, slot);
            let b = config
                .entry(p.kind())
                .expect("perturbable kinds are catalogued")
                .bounds[i];
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            p.set_dimension(i, b.clamp(p.dimensions()[i] + sign * b.step));
        }
        1 => {
            let slot = swappable[rng.random_range(0..swappable.len())];
            let old = *get(d, slot);
            let entry = config
                .entry(alternative(old.kind()))
                .expect("swappable kinds are catalogued");
            let mut p = random_primitive(entry, old.attach_after().unwrap_or(0), rng);
            if !old.is_branch() {
                // chain variants share (length, radius): keep them where the bounds allow
                for (i, v) in old.dimensions().into_iter().enumerate() {
                    p.set_dimension(i, entry.bounds[i].clamp(v));
                }
            }
            *get_mut(&mut next, slot) = p;
        }
        _ => {
            let add = match (can_add, removable.is_empty()) {
                (true, false) => rng.random::<bool>(),
                (add, _) => add,
            };
            if add {
                let entry = branch_kinds[rng.random_range(0..branch_kinds.len())];
                let at = rng.random_range(0..=d.chain.len());
                next.branches.push(random_primitive(entry, at, rng));
            } else {
                next.branches
                    .remove(removable[rng.random_range(0..removable.len())]);
            }
        }
    }
    Some(next)
}

/// Stepped-topology annealing. Returns the best design seen.
pub fn anneal(
    initial: &FilterDesign,
    target: &TargetSpec,
    config: &SearchConfig,
) -> Result<OptimizationResult, OptimizeError> {
    anneal_with_progress(initial, target, config, &mut |_| {})
}

pub fn anneal_with_progress(
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

    let mut current = initial.clone();
    let (mut current_obj, _) = eval.evaluate(&current);
    let mut best = current.clone();
    let mut best_obj = current_obj;
    let mut trace = vec![best_obj];
    let mut evaluations = 1;
    let mut temperature = config.initial_temperature;
    let n = config.max_iterations;
    let batch = config.batch_size.max(1);

    let mut t = 0;
    while t < n && best_obj > 0.0 {
        let count = batch.min(n - t);
        let mut rngs: Vec<_> = (t..t + count)
            .map(|i| iteration_rng(config.seed, i as u64))
            .collect();
        let proposals: Vec<Option<FilterDesign>> = rngs
            .iter_mut()
            .map(|rng| propose(&current, config, rng))
            .collect();
        let scores: Vec<f64> = par::map_slice(&proposals, 1, |p| match p {
            Some(d) => eval.evaluate(d).0,
            None => f64::INFINITY,
        });

        for (i, (prop, score)) in proposals.into_iter().zip(scores).enumerate() {
            evaluations += 1;
            t += 1;
            let u: f64 = rngs[i].random();
            let accept = match prop {
                Some(_) if score <= current_obj => true,
                Some(_) if score.is_finite() => u < ((current_obj - score) / temperature).exp(),
                _ => false,
            };
            temperature *= config.cooling_ratio;
            if accept {
                current = prop.expect("accepted proposals exist");
                current_obj = score;
                if current_obj < best_obj {
                    best_obj = current_obj;
                    best = current.clone();
                }
            }
            trace.push(best_obj);
            if accept {
                break;
            }
        }
        progress(t as f64 / n as f64);
    }
    progress(1.0);

    let (objective_value, residuals) = eval.evaluate(&best);
    Ok(OptimizationResult {
        design: best,
        objective_value,
        residuals,
        trace,
        evaluations,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::FrequencyGrid;
    use crate::optimize::{DimensionBound, RefineConfig};

    fn notch_setup() -> (FilterDesign, TargetSpec, SearchConfig) {
        let d = FilterDesign::new(
            "notch",
            0.02,
            vec![Primitive::Tube {
                length_m: 0.3,
                radius_m: 0.02,
            }],
        );
        let t = TargetSpec::Notch {
            frequencies_hz: vec![857.5],
            min_depth_db: 20.0,
        };
        let cfg = SearchConfig {
            seed: 42,
            max_iterations: 3000,
            catalog: vec![CatalogEntry {
                kind: PrimitiveKind::QuarterWaveBranch,
                bounds: vec![
                    DimensionBound::new(0.05, 0.2, 0.0001),
                    DimensionBound::fixed(0.005),
                ],
            }],
            max_branches: 1,
            grid: FrequencyGrid::linear(100.0, 2000.0, 256).unwrap(),
            refine: RefineConfig {
                enabled: false,
                ..RefineConfig::default()
            },
            ..SearchConfig::default()
        };
        (d, t, cfg)
    }

    #[test]
    fn finds_quarter_wave_notch() {
        let (d, t, cfg) = notch_setup();
        let r = anneal(&d, &t, &cfg).unwrap();
        assert_eq!(r.objective_value, 0.0);
        let Primitive::QuarterWaveBranch { length_m, .. } = r.design.branches[0] else {
            panic!()
        };
        assert!((length_m / 0.1 - 1.0).abs() < 0.005, "{length_m}");
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn batch_size_does_not_change_results() {
        let (d, t, cfg) = notch_setup();
        let a = anneal(
            &d,
            &t,
            &SearchConfig {
                batch_size: 1,
                ..cfg.clone()
            },
        )
        .unwrap();
        let b = anneal(
            &d,
            &t,
            &SearchConfig {
                batch_size: 13,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(a.design, b.design);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn met_target_returns_initial() {
        let (d, t, cfg) = notch_setup();
        let d = d.with_branch(Primitive::QuarterWaveBranch {
            length_m: 0.1,
            radius_m: 0.005,
            attach_after: 1,
        });
        let r = anneal(&d, &t, &cfg).unwrap();
        assert_eq!(r.design, d);
        assert_eq!(r.objective_value, 0.0);
        assert_eq!(r.trace, vec![0.0]);
    }

    #[test]
    fn proposals_respect_bounds() {
        let (d, _, cfg) = notch_setup();
        let mut cur = d;
        for t in 0..500 {
            if let Some(next) = propose(&cur, &cfg, &mut iteration_rng(7, t)) {
                for b in &next.branches {
                    let Primitive::QuarterWaveBranch {
                        length_m,
                        radius_m,
                        attach_after,
                    } = *b
                    else {
                        panic!()
                    };
                    assert!((0.05..=0.2).contains(&length_m));
                    assert_eq!(radius_m, 0.005);
                    assert!(attach_after <= 1);
                }
                assert!(next.branches.len() <= 1);
                cur = next;
            }
        }
    }
}
