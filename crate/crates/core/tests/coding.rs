use acouforge_core::coding::{
    add_noise, decode, decode_simulated, encode, estimate_spectrum, simulate_response, tag_layout,
    EncodeConfig, Probe, TagPayload,
};
use acouforge_core::par;
use proptest::prelude::*;

fn bits_of(value: u32, n: usize) -> Vec<bool> {
    (0..n).map(|j| value >> (n - 1 - j) & 1 == 1).collect()
}

#[test]
fn noisy_channel_has_zero_bit_errors_at_20_db() {
    let trials: Vec<u64> = (0..1000).collect();
    let errors: usize = par::map_slice(&trials, 1, |&t| {
        let sent = bits_of((t % 16) as u32, 4);
        let d = encode(&TagPayload::new(sent.clone()), &EncodeConfig::default()).unwrap();
        let got = decode_simulated(
            &d,
            &Probe {
                seed: t,
                ..Probe::default()
            },
            Some(20.0),
        )
        .unwrap();
        sent.iter().zip(&got).filter(|(a, b)| a != b).count()
    })
    .into_iter()
    .sum();
    assert_eq!(errors, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn raising_threshold_never_sets_a_bit(value in 0u32..256, seed in any::<u64>(), lo in 0.0..30.0f64, extra in 0.0..30.0f64) {
        let d = encode(&TagPayload::new(bits_of(value, 8)), &EncodeConfig::default()).unwrap();
        let (plan, n, _) = tag_layout(&d).unwrap();
        let grid = plan.analysis_grid(n);
        let probe = Probe { seed, ..Probe::default() };
        let sim = simulate_response(&d, &probe, &grid).unwrap();
        let noisy = add_noise(&sim.response, 10.0, seed);
        let est = estimate_spectrum(&noisy, &sim.reference, &grid).unwrap();
        let low = decode(&est, &plan, n, lo).unwrap();
        let high = decode(&est, &plan, n, lo + extra).unwrap();
        prop_assert!(low.iter().zip(&high).all(|(l, h)| *l || !*h));
    }

    #[test]
    fn any_payload_length_round_trips(n in 1usize..=16, value in any::<u32>(), seed in any::<u64>()) {
        let sent = bits_of(value & ((1u32 << n) - 1), n);
        let d = encode(&TagPayload::new(sent.clone()), &EncodeConfig::default()).unwrap();
        let got = decode_simulated(&d, &Probe { seed, ..Probe::default() }, None).unwrap();
        prop_assert_eq!(got, sent);
    }
}
