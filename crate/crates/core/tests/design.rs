mod common;

use acouforge_core::design::{
    analytic_volume, export_stl, from_document, stl_signed_volume, stl_triangle_count, to_document,
    voxelize,
};
use acouforge_core::{FilterDesign, Primitive};
use proptest::prelude::*;
use rand::Rng;

/// Small random design that voxelizes quickly at r_min/4.
fn printable_design(seed: u64) -> FilterDesign {
    let mut r = common::rng(seed);
    let chain: Vec<Primitive> = (0..r.random_range(1..=3))
        .map(|_| {
            let length_m = r.random_range(0.02..0.12);
            let radius_m = r.random_range(0.008..0.03);
            if r.random_bool(0.5) {
                Primitive::Tube { length_m, radius_m }
            } else {
                Primitive::Chamber { length_m, radius_m }
            }
        })
        .collect();
    let n = chain.len();
    FilterDesign::new("printable", 0.01, chain).with_branch(Primitive::QuarterWaveBranch {
        length_m: r.random_range(0.05..0.12),
        radius_m: r.random_range(0.006..0.012),
        attach_after: r.random_range(1..n + 1),
    })
}

#[test]
fn voxel_volume_within_ten_percent_at_quarter_radius() {
    for seed in 0..20 {
        let d = printable_design(seed);
        let r_min = d
            .chain
            .iter()
            .chain(&d.branches)
            .map(Primitive::radius)
            .fold(f64::INFINITY, f64::min);
        let g = voxelize(&d, r_min / 4.0).unwrap();
        let exact = analytic_volume(&d);
        let err = (g.occupied_volume() - exact).abs() / exact;
        assert!(err <= 0.10, "seed {seed}: volume error {err}");
        assert!(g.is_six_connected(), "seed {seed}");
    }
}

#[test]
fn stl_size_formula_and_orientation() {
    for seed in 0..5 {
        let d = printable_design(seed);
        let g = voxelize(&d, 0.002).unwrap();
        let bytes = export_stl(&g, 0.004).unwrap();
        let n = stl_triangle_count(&bytes).unwrap();
        assert_eq!(bytes.len(), 84 + 50 * n);
        assert!(stl_signed_volume(&bytes).unwrap() > 0.0, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn documents_round_trip(seed in any::<u64>()) {
        let d = common::random_design(seed);
        let text = to_document(&d);
        let back: FilterDesign = from_document(&text).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(to_document(&back), text);
    }

    #[test]
    fn validation_accepts_generated_designs_and_flags_bad_attachment(seed in any::<u64>()) {
        let mut d = common::random_design(seed);
        prop_assert!(d.validate().is_empty());
        d.branches.push(Primitive::QuarterWaveBranch { length_m: 0.1, radius_m: 0.01, attach_after: d.chain.len() + 1 });
        prop_assert!(!d.validate().is_empty());
    }
}
