#![allow(dead_code)]

use acouforge_core::design::VoxelGrid;
use acouforge_core::{FilterDesign, Primitive};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Valid lossless design: 1–6 chain elements, 0–3 branches of either kind.
pub fn random_design(seed: u64) -> FilterDesign {
    let mut r = rng(seed);
    let n = r.random_range(1..=6);
    let chain: Vec<Primitive> = (0..n)
        .map(|_| {
            let length_m = r.random_range(0.01..0.3);
            let radius_m = r.random_range(0.005..0.03);
            if r.random_bool(0.5) {
                Primitive::Tube { length_m, radius_m }
            } else {
                Primitive::Chamber { length_m, radius_m }
            }
        })
        .collect();
    let port = r.random_range(0.005..0.03);
    let mut d = FilterDesign::new(format!("random-{seed}"), port, chain);
    for _ in 0..r.random_range(0..=3) {
        let attach_after = r.random_range(0..=n);
        d.branches.push(if r.random_bool(0.5) {
            Primitive::QuarterWaveBranch {
                length_m: r.random_range(0.02..0.4),
                radius_m: r.random_range(0.003..0.02),
                attach_after,
            }
        } else {
            Primitive::HelmholtzBranch {
                neck_length_m: r.random_range(0.003..0.05),
                neck_radius_m: r.random_range(0.003..0.015),
                cavity_volume_m3: r.random_range(1e-6..5e-4),
                attach_after,
            }
        });
    }
    assert!(d.validate().is_empty(), "{:?}", d.validate());
    d
}

/// Random 6-connected set of `n` cells grown from the grid centre.
pub fn random_lattice(seed: u64, n: usize, cell_size_m: f64) -> VoxelGrid {
    let mut r = rng(seed);
    let side = 2 * n + 1;
    let mut g = VoxelGrid::empty([side, side, side], cell_size_m, [0.0; 3]);
    let mut cells = vec![[n, n, n]];
    g.set([n, n, n], true);
    while cells.len() < n {
        let c = cells[r.random_range(0..cells.len())];
        let axis = r.random_range(0..3);
        let mut nb = c;
        if r.random_bool(0.5) {
            nb[axis] += 1;
        } else {
            nb[axis] -= 1;
        }
        if !g.get(nb) {
            g.set(nb, true);
            cells.push(nb);
        }
    }
    g
}
