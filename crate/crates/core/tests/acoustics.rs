mod common;

use acouforge_core::acoustics::{
    cascade, helmholtz_resonance, quarter_wave_notch, transmission_loss, tube_matrix, Matrix2,
    TL_MAX_DB,
};
use acouforge_core::{FilterDesign, FrequencyGrid, Medium, Primitive};
use proptest::prelude::*;

fn grid() -> FrequencyGrid {
    FrequencyGrid::linear(50.0, 4000.0, 512).unwrap()
}

fn chamber_oracle(m: f64, length: f64, f: f64, c: f64) -> f64 {
    let kl = 2.0 * std::f64::consts::PI * f / c * length;
    10.0 * (1.0 + 0.25 * (m - 1.0 / m).powi(2) * kl.sin().powi(2)).log10()
}

#[test]
fn expansion_chamber_matches_closed_form() {
    let g = FrequencyGrid::linear(10.0, 3000.0, 512).unwrap();
    let r = 0.02;
    for m in [2.0, 4.0, 9.0] {
        let d = FilterDesign::new(
            "chamber",
            r,
            vec![Primitive::Chamber {
                length_m: 0.1,
                radius_m: r * f64::sqrt(m),
            }],
        );
        let tl = d.transmission_loss(&g).unwrap();
        for (f, v) in g.values().into_iter().zip(&tl.values) {
            let expect = chamber_oracle(m, 0.1, f, d.medium.c());
            assert!((v - expect).abs() <= 0.01, "m={m} f={f}: {v} vs {expect}");
        }
    }
}

#[test]
fn quarter_wave_and_helmholtz_notches_land_on_formulas() {
    let mut r = common::rng(7);
    let medium = Medium::default();
    for _ in 0..20 {
        use rand::Rng;
        let length = r.random_range(0.03..0.4);
        let d = FilterDesign::new(
            "qw",
            0.015,
            vec![
                Primitive::Tube {
                    length_m: 0.1,
                    radius_m: 0.015
                };
                2
            ],
        )
        .with_branch(Primitive::QuarterWaveBranch {
            length_m: length,
            radius_m: 0.008,
            attach_after: 1,
        });
        let expect = quarter_wave_notch(length, &medium, 1);
        let found = notch_near(&d, expect);
        assert!(
            (found / expect - 1.0).abs() <= 0.005,
            "L={length}: {found} vs {expect}"
        );

        let (neck, nr, vol) = (
            r.random_range(0.005..0.04),
            r.random_range(0.003..0.012),
            r.random_range(1e-5..4e-4),
        );
        let d = FilterDesign::new(
            "hh",
            0.015,
            vec![
                Primitive::Tube {
                    length_m: 0.1,
                    radius_m: 0.015
                };
                2
            ],
        )
        .with_branch(Primitive::HelmholtzBranch {
            neck_length_m: neck,
            neck_radius_m: nr,
            cavity_volume_m3: vol,
            attach_after: 1,
        });
        let expect = helmholtz_resonance(neck, nr, vol, &medium);
        let found = notch_near(&d, expect);
        assert!(
            (found / expect - 1.0).abs() <= 0.01,
            "helmholtz: {found} vs {expect}"
        );
    }
}

/// Frequency of maximum TL near `guess`, on a grid that does not contain `guess` itself.
fn notch_near(d: &FilterDesign, guess: f64) -> f64 {
    let g = FrequencyGrid::linear(0.91 * guess, 1.087 * guess, 3001).unwrap();
    let tl = d.transmission_loss(&g).unwrap();
    let i = (0..tl.values.len())
        .max_by(|&a, &b| tl.values[a].total_cmp(&tl.values[b]))
        .unwrap();
    g.value(i)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // Rounding the entries alone moves det by ~ε·(|AD| + |BC|), which near a
    // lossless branch resonance exceeds 1e-9 in absolute terms.
    #[test]
    fn lossless_designs_are_reciprocal(seed in any::<u64>()) {
        let d = common::random_design(seed);
        let t = d.to_transfer_matrix(&grid()).unwrap();
        for m in &t.entries {
            let scale = (m.a * m.d).norm() + (m.b * m.c).norm();
            let err = (m.det() - 1.0).norm();
            prop_assert!(err <= f64::max(1e-9, 1e-11 * scale), "det error {} at scale {}", err, scale);
        }
    }

    #[test]
    fn transmission_loss_is_clamped(seed in any::<u64>()) {
        let tl = common::random_design(seed).transmission_loss(&grid()).unwrap();
        prop_assert!(tl.values.iter().all(|v| (0.0..=TL_MAX_DB).contains(v)));
    }

    #[test]
    fn equal_designs_give_identical_spectra(seed in any::<u64>()) {
        let a = common::random_design(seed);
        let b: FilterDesign = acouforge_core::design::from_document(&acouforge_core::design::to_document(&a)).unwrap();
        prop_assert_eq!(a.transmission_loss(&grid()).unwrap(), b.transmission_loss(&grid()).unwrap());
    }

    #[test]
    fn cascade_is_associative(l in prop::array::uniform3(0.01..0.5f64), r in prop::array::uniform3(0.004..0.04f64)) {
        let m = Medium::default();
        let g = grid();
        let t: Vec<_> = (0..3).map(|i| tube_matrix(l[i], r[i], &m, &g, false).unwrap()).collect();
        let left = cascade([&cascade([&t[0], &t[1]]).unwrap(), &t[2]]).unwrap();
        let right = cascade([&t[0], &cascade([&t[1], &t[2]]).unwrap()]).unwrap();
        // compare in dimensionless form, relative to the product of factor norms
        let z = m.duct_impedance(0.01);
        let norm = |x: &Matrix2| x.a.norm() + x.b.norm() / z + x.c.norm() * z + x.d.norm();
        for i in 0..g.len() {
            let (x, y) = (&left.entries[i], &right.entries[i]);
            let bound = 1e-12 * t.iter().map(|s| norm(&s.entries[i])).product::<f64>();
            let diff = [(x.a - y.a).norm(), (x.b - y.b).norm() / z, (x.c - y.c).norm() * z, (x.d - y.d).norm()];
            prop_assert!(diff.iter().all(|&d| d <= bound), "{:?} > {}", diff, bound);
        }
    }

    #[test]
    fn matched_duct_has_no_loss(l in 0.001..2.0f64, r in 0.002..0.05f64) {
        let m = Medium::default();
        let tl = transmission_loss(&tube_matrix(l, r, &m, &grid(), false).unwrap(), r, &m).unwrap();
        prop_assert!(tl.values.iter().all(|v| v.abs() <= 1e-9));
    }

    #[test]
    fn halving_a_tube_changes_nothing(l in 0.01..1.0f64, r in 0.004..0.04f64, port in 0.004..0.04f64) {
        let whole = FilterDesign::new("whole", port, vec![Primitive::Tube { length_m: l, radius_m: r }]);
        let split = FilterDesign::new("split", port, vec![Primitive::Tube { length_m: l / 2.0, radius_m: r }; 2]);
        let a = whole.transmission_loss(&grid()).unwrap();
        let b = split.transmission_loss(&grid()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
        }
    }
}
