use acouforge_core::optimize::{
    anneal, objective, optimize, RefineConfig, SearchConfig, TargetSpec,
};
use acouforge_core::{FilterDesign, FrequencyGrid, Primitive};
use proptest::prelude::*;

fn start() -> FilterDesign {
    FilterDesign::new(
        "start",
        0.01,
        vec![
            Primitive::Tube {
                length_m: 0.4,
                radius_m: 0.01
            };
            2
        ],
    )
}

fn config(seed: u64, iterations: usize) -> SearchConfig {
    SearchConfig {
        seed,
        max_iterations: iterations,
        initial_temperature: 10.0,
        cooling_ratio: 0.99,
        grid: FrequencyGrid::linear(200.0, 1200.0, 512).unwrap(),
        refine: RefineConfig {
            max_evals: 60,
            ..RefineConfig::default()
        },
        ..SearchConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trace_never_rises_and_result_never_worse(seed in any::<u64>()) {
        let target = TargetSpec::pitches(&[72, 76, 79], 10.0);
        let cfg = config(seed, 150);
        let before = objective(&start(), &target, &cfg.grid).unwrap();
        let r = optimize(&start(), &target, &cfg, &mut |_| {}).unwrap();
        prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.objective_value <= before);
        prop_assert_eq!(r.trace[0], before);
        prop_assert_eq!(r.residuals.len(), 3);
        prop_assert!(r.design.validate().is_empty());
        let rescored = objective(&r.design, &target, &cfg.grid).unwrap();
        prop_assert_eq!(rescored, r.objective_value);
    }
}

#[test]
fn fixed_seed_is_bitwise_reproducible() {
    let target = TargetSpec::pitches(&[72, 76, 79], 10.0);
    let cfg = config(99, 300);
    let a = optimize(&start(), &target, &cfg, &mut |_| {}).unwrap();
    let b = optimize(&start(), &target, &cfg, &mut |_| {}).unwrap();
    assert_eq!(a.design, b.design);
    assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.evaluations, b.evaluations);
}

#[cfg(feature = "parallel")]
#[test]
fn thread_count_does_not_change_results() {
    let target = TargetSpec::pitches(&[72, 76], 10.0);
    let cfg = SearchConfig {
        batch_size: 8,
        ..config(5, 200)
    };
    let pooled = anneal(&start(), &target, &cfg).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| anneal(&start(), &target, &cfg).unwrap());
    assert_eq!(pooled.design, single.design);
    assert_eq!(pooled.trace, single.trace);
}
