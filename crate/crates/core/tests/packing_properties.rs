mod common;

use codecstream::packer::{allocate_by_mass, allocation_curve};
use codecstream::pipeline::{tokenize, TokenizerConfig};
use codecstream::trace::{synthesize_trace, SynthSpec};
use common::{check_invariants, dominant_frame_trace, random_config, random_trace, seg};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn invariants_on_generated_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let trace = match case % 10 {
            0 => random_trace(&mut rng, true),
            1 => dominant_frame_trace(rng.gen()).0,
            _ => random_trace(&mut rng, false),
        };
        let mut cfg = random_config(&mut rng);
        let groups = {
            let e = codecstream::gop::bin_bitcost(&trace, cfg.partition.bin_duration_s).unwrap();
            let q = codecstream::gop::compute_quota(&e, cfg.partition.target_groups);
            codecstream::gop::partition_gops(&e, &cfg.partition, q).unwrap().len() as u32
        };
        cfg.packing.p_canvases_total = cfg.packing.p_canvases_total.max(groups);
        let out = tokenize(&trace, &cfg).unwrap();
        check_invariants(&trace, &cfg, &out);
    }
}

#[test]
fn two_segment_bitcost_ratio() {
    let t = synthesize_trace(&SynthSpec::new(vec![seg(5.0, 1.0, 1000.0), seg(5.0, 1.0, 100.0)], 10.0, 32, 32, 1)).unwrap();
    let e = codecstream::gop::bin_bitcost(&t, 1.0).unwrap();
    let first: f64 = e.energies[1..5].iter().sum::<u64>() as f64 / 4.0;
    let second: f64 = e.energies[6..10].iter().sum::<u64>() as f64 / 4.0;
    let ratio = first / second;
    assert!((9.0..11.0).contains(&ratio), "ratio {ratio}");
}

proptest! {
    #[test]
    fn curve_identities(w in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1e6], 1..60)) {
        let f = allocation_curve(&w);
        prop_assert_eq!(f.len(), w.len());
        prop_assert!(f.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!((f[f.len() - 1] - 1.0).abs() <= 1e-12);
        if w.iter().all(|&x| x == 0.0) {
            let m = w.len() as f64;
            for (l, v) in f.iter().enumerate() {
                prop_assert_eq!(*v, (l + 1) as f64 / m);
            }
        }
    }

    #[test]
    fn allocation_spends_budget(masses in prop::collection::vec(0u64..1_000_000, 1..20), extra in 0u32..200) {
        let total = masses.len() as u32 + extra;
        let a = allocate_by_mass(&masses, total).unwrap();
        prop_assert_eq!(a.iter().sum::<u32>(), total);
        prop_assert!(a.iter().all(|&x| x >= 1));
        // Heavier groups never get fewer canvases than lighter ones.
        for i in 0..masses.len() {
            for j in 0..masses.len() {
                if masses[i] > masses[j] {
                    prop_assert!(a[i] + 1 >= a[j]);
                }
            }
        }
    }
}

#[test]
fn attenuation_spreads_selection_off_the_dominant_frame() {
    let share = |lambda: f64, seed: u64| {
        let (trace, dominant) = dominant_frame_trace(seed);
        let mut cfg = TokenizerConfig::default();
        cfg.partition.target_groups = 1;
        cfg.partition.max_span_s = 60.0;
        cfg.partition.valley_window_bins = 0;
        cfg.packing.lambda = lambda;
        cfg.packing.canvas_blocks = 8;
        cfg.packing.p_canvases_total = 4;
        let out = tokenize(&trace, &cfg).unwrap();
        let p: Vec<_> = out.tokens.iter().filter(|t| out.anchors[0] != Some(t.source_frame)).collect();
        p.iter().filter(|t| t.source_frame == dominant).count() as f64 / p.len() as f64
    };
    for seed in 0..5 {
        assert!(share(4.0, seed) < share(0.0, seed), "seed {seed}");
    }
}
