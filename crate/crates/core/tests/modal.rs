mod common;

use acouforge_core::design::VoxelGrid;
use acouforge_core::modal::{build_lattice, eigenmodes, synthesize, Impact, Material, ModalModel};
use proptest::prelude::*;

const CLAY: Material = Material::new(1e6, 1000.0);

fn random_model(seed: u64) -> (ModalModel, Vec<f64>) {
    let l = build_lattice(&common::random_lattice(seed, 100, 0.01), &CLAY).unwrap();
    let k = l.stiffness();
    (eigenmodes(&l, None).unwrap(), k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn shapes_are_mass_orthonormal_eigenvectors(seed in any::<u64>()) {
        let (model, k) = random_model(seed);
        let (n, m) = (model.node_count(), model.node_mass());
        prop_assert_eq!(model.mode_count(), n);
        prop_assert!(model.frequencies_rad_s.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(model.zero_mode.iter().filter(|z| **z).count(), 1);
        let lambda_max = model.frequencies_rad_s[n - 1].powi(2);
        let shapes: Vec<Vec<f64>> = (0..n).map(|i| model.mode_shape(i)).collect();
        for i in 0..n {
            let lambda = model.frequencies_rad_s[i].powi(2);
            let (mut res, mut kphi_norm) = (0.0, 0.0);
            for r in 0..n {
                let kphi: f64 = (0..n).map(|c| k[r * n + c] * shapes[i][c]).sum();
                res += (kphi - lambda * m * shapes[i][r]).powi(2);
                kphi_norm += kphi * kphi;
            }
            // ‖Kφ‖ vanishes for the rigid mode; measure it against the spectrum scale instead
            let norm: f64 = shapes[i].iter().map(|p| p * p).sum::<f64>().sqrt();
            let scale = if model.zero_mode[i] { lambda_max * m * norm } else { kphi_norm.sqrt() };
            prop_assert!(res.sqrt() / scale <= 1e-8, "mode {} residual {}", i, res.sqrt() / scale);
            for j in i..n {
                let dot: f64 = shapes[i].iter().zip(&shapes[j]).map(|(a, b)| m * a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - expect).abs() <= 1e-8, "({}, {}) = {}", i, j, dot);
            }
        }
    }

    #[test]
    fn retune_laws_and_round_trip(seed in 0u64..1000, e_scale in 0.1..10.0f64, rho_scale in 0.1..10.0f64) {
        let l = build_lattice(&common::random_lattice(seed, 30, 0.01), &CLAY).unwrap();
        let model = eigenmodes(&l, None).unwrap();
        let other = Material::new(CLAY.youngs_modulus_pa * e_scale, CLAY.density_kg_per_m3 * rho_scale);
        let tuned = model.retune(&other).unwrap();
        let factor = (e_scale / rho_scale).sqrt();
        for (a, b) in model.frequencies_rad_s.iter().zip(&tuned.frequencies_rad_s) {
            prop_assert!((b - a * factor).abs() <= 1e-12 * (a * factor).max(1e-300));
        }
        // retuned shapes stay mass-orthonormal under the new mass
        let m = tuned.node_mass();
        let s = tuned.mode_shape(model.mode_count() - 1);
        prop_assert!((s.iter().map(|p| m * p * p).sum::<f64>() - 1.0).abs() <= 1e-12);
        let back = tuned.retune(&CLAY).unwrap();
        prop_assert_eq!(&back.frequencies_rad_s, &model.frequencies_rad_s);
        prop_assert_eq!(back.mode_shape(1), model.mode_shape(1));
    }
}

#[test]
fn damped_mode_envelope_decays() {
    let mut g = VoxelGrid::empty([2, 1, 1], 0.01, [0.0; 3]);
    g.set([0, 0, 0], true);
    g.set([1, 0, 0], true);
    let damped = CLAY.with_damping(20.0, 1e-6);
    let model = eigenmodes(&build_lattice(&g, &damped).unwrap(), None).unwrap();
    for &w in &model.frequencies_rad_s {
        assert!(damped.decay_rate(w) > 0.0);
    }
    let s = synthesize(
        &model,
        &damped,
        &Impact {
            node: 0,
            impulse_n_s: 1e-3,
        },
        1.0,
        0.5,
        44_100,
    )
    .unwrap();
    assert_eq!(s.retained_modes, 1);
    // peak magnitude per 20 ms window falls strictly
    let peaks: Vec<f64> = s
        .waveform
        .samples
        .chunks(882)
        .map(|c| c.iter().fold(0.0, |a: f64, x| a.max(x.abs())))
        .collect();
    assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
}
