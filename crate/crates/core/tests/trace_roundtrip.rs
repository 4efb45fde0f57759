mod common;

use codecstream::trace::{read_trace, synthesize_trace, write_trace, SynthSpec};
use common::seg;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn write_then_read_is_identity(
        seed in any::<u64>(),
        fps in prop_oneof![Just(24.0), Just(29.97), Just(30.0), 1.0f64..60.0],
        w in 8u32..80,
        h in 8u32..60,
        b_frames in any::<bool>(),
        interval in 1u32..4,
    ) {
        let mut spec = SynthSpec::new(vec![seg(0.5, 2.5, 300.0), seg(0.4, 0.0, 50.0)], fps, w, h, seed);
        spec.b_frames = b_frames;
        spec.map_interval = interval;
        let t = synthesize_trace(&spec).unwrap();
        let (mut text, mut blob) = (Vec::new(), Vec::new());
        write_trace(&t, &mut text, &mut blob).unwrap();
        let back = read_trace(&text[..], Some(&blob)).unwrap();
        prop_assert_eq!(&back, &t);
        let (mut text2, mut blob2) = (Vec::new(), Vec::new());
        write_trace(&back, &mut text2, &mut blob2).unwrap();
        prop_assert_eq!(text, text2);
        prop_assert_eq!(blob, blob2);
    }
}
