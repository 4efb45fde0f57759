mod common;

use codecstream::saliency::{
    block_scores, frame_block_scores, fuse_bitcost_prior, residual_response, saliency_map, BlockScoreGrid, PixelMap,
    SaliencyConfig, SaliencyMap,
};
use codecstream::trace::{synthesize_trace, ResidualPlane, SynthSpec};
use codecstream::PATCH_SIZE;
use common::{block_sum_oracle, seg};
use proptest::prelude::*;

fn map_strategy(max: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(0.0f64..2.0, w * h)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn block_sums_match_naive_loop((w, h, values) in map_strategy(80)) {
        let s = SaliencyMap(PixelMap { width: w as u32, height: h as u32, values: values.clone() });
        let got = block_scores(&s, PATCH_SIZE);
        let (bi, bj, want) = block_sum_oracle(&values, w, h, PATCH_SIZE as usize);
        prop_assert_eq!((got.blocks_i as usize, got.blocks_j as usize), (bi, bj));
        for (g, o) in got.scores.iter().zip(&want) {
            prop_assert!((g - o).abs() <= 1e-9 * o.abs().max(1.0));
        }
    }

    #[test]
    fn residual_mirror_is_symmetric(luma in prop::collection::vec(1u8..=255, 1..200)) {
        let n = luma.len() as u32;
        let a = ResidualPlane { width: n, height: 1, luma: luma.clone() };
        let b = ResidualPlane { width: n, height: 1, luma: luma.iter().map(|&v| (256 - u16::from(v)) as u8).collect() };
        prop_assert_eq!(residual_response(&a, 95.0), residual_response(&b, 95.0));
    }

    #[test]
    fn scores_are_bounded((w, h, values) in map_strategy(64)) {
        let m = PixelMap { width: w as u32, height: h as u32, values: values.iter().map(|v| v / 2.0).collect() };
        let s = saliency_map(&m, &m).unwrap();
        prop_assert!(s.0.values.iter().all(|&v| (0.0..=2.0).contains(&v)));
        let a = block_scores(&s, PATCH_SIZE);
        let cap = 2.0 * f64::from(4 * PATCH_SIZE * PATCH_SIZE);
        prop_assert!(a.scores.iter().all(|&v| (0.0..=cap).contains(&v)));
    }

    #[test]
    fn fuse_zero_weight_is_identity(scores in prop::collection::vec(0.0f64..1000.0, 1..50)) {
        let a = BlockScoreGrid { blocks_i: 1, blocks_j: scores.len() as u32, scores: scores.clone() };
        let prior: Vec<f64> = scores.iter().rev().copied().collect();
        prop_assert_eq!(fuse_bitcost_prior(&a, &prior, 0.0, 95.0).unwrap(), a);
    }
}

#[test]
fn zero_signal_frames_score_zero() {
    let t = synthesize_trace(&SynthSpec::new(vec![seg(2.0, 0.0, 400.0)], 6.0, 100, 70, 9)).unwrap();
    let cfg = SaliencyConfig::default();
    let mut scored = 0;
    for f in t.frames() {
        if let Some(a) = frame_block_scores(f, t.width(), t.height(), &cfg).unwrap() {
            assert!(a.scores.iter().all(|&v| v == 0.0));
            scored += 1;
        }
    }
    assert_eq!(scored, t.len() - 1);
}

#[test]
fn moving_object_wins_the_block_argmax() {
    let t = synthesize_trace(&SynthSpec::new(vec![seg(1.0, 4.0, 400.0)], 8.0, 256, 128, 4)).unwrap();
    let cfg = SaliencyConfig::default();
    let f = &t.frames()[4];
    let a = frame_block_scores(f, t.width(), t.height(), &cfg).unwrap().unwrap();
    let (i, _) = a.argmax();
    // The object spans the vertical middle of the frame.
    assert!((1..=2).contains(&i), "argmax row {i}");
}
