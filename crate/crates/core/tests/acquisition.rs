use proptest::prelude::*;
use softarm_core::acquisition::{
    acquire_sample, collect, decode_percent, encode_percent, generate_sample_times, merge, quantize, sample_rng,
    two_bladder_rule, Capture, CollectConfig,
};
use softarm_core::plant::{Plant, PlantConfig};
use softarm_core::vision::StereoRig;

proptest! {
    #[test]
    fn percent_round_trip(t_max in 1f64..=1000.0, frac in 0f64..=1.0) {
        let t = t_max * frac;
        let p = encode_percent(t, t_max).unwrap();
        prop_assert!((0.0..=100.0).contains(&p));
        prop_assert!((decode_percent(p, t_max).unwrap() - t).abs() < 1e-9);
    }

    #[test]
    fn generated_times_are_valid(seed in any::<u64>(), index in any::<u64>(), t_max in 1f64..=1000.0) {
        let t = generate_sample_times(&mut sample_rng(seed, index), t_max).unwrap();
        prop_assert!(t.validate(t_max).is_ok());
        prop_assert!(two_bladder_rule(&t.0));
    }

    #[test]
    fn quantize_is_idempotent(x in -1e6f64..1e6) {
        prop_assert_eq!(quantize(quantize(x)), quantize(x));
    }
}

// Each bladder is active with probability 2/3 and then uniform on
// [0, t_max], so its marginal mean is t_max / 3.
#[test]
fn marginal_mean_of_times() {
    let n = 20_000;
    let mut sum = 0.0;
    for i in 0..n {
        sum += generate_sample_times(&mut sample_rng(77, i), 1000.0)
            .unwrap()
            .0
            .iter()
            .sum::<f64>();
    }
    let mean = sum / (9 * n) as f64;
    assert!(
        (300.0..=366.0).contains(&mean) && (mean - 1000.0 / 3.0).abs() < 6.0,
        "{mean}"
    );
}

#[test]
fn discard_fraction_tracks_failure_prob() {
    let plant = Plant::new(PlantConfig::default().noiseless(), Default::default()).unwrap();
    let rig = StereoRig::default_rig().noiseless();
    let n = 10_000;
    let p = 0.2;
    let d = collect(&plant, &rig, &CollectConfig::new(n, 1000.0, 5, p)).unwrap();
    let discarded = d.metadata.discarded_count as f64;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    assert!((discarded - n as f64 * p).abs() < 4.0 * sd, "{discarded}");
    assert_eq!(d.len() + d.metadata.discarded_count as usize, n);
}

#[test]
fn samples_do_not_depend_on_siblings() {
    let plant = Plant::default();
    let rig = StereoRig::default_rig();
    let short = collect(&plant, &rig, &CollectConfig::new(10, 700.0, 3, 0.1)).unwrap();
    let long = collect(&plant, &rig, &CollectConfig::new(40, 700.0, 3, 0.1)).unwrap();
    assert_eq!(short.samples[..], long.samples[..short.len()]);
    let cfg = CollectConfig::new(40, 700.0, 3, 0.1);
    for i in (0..40).rev() {
        if let Capture::Stored(s) = acquire_sample(&plant, &rig, &cfg, i).unwrap() {
            assert!(long.samples.contains(&s));
        }
    }
}

#[test]
fn campaign_is_reproducible_and_merge_is_order_free() {
    let plant = Plant::default();
    let rig = StereoRig::default_rig();
    let a = collect(&plant, &rig, &CollectConfig::new(30, 1000.0, 1, 0.05)).unwrap();
    assert_eq!(
        a,
        collect(&plant, &rig, &CollectConfig::new(30, 1000.0, 1, 0.05)).unwrap()
    );
    let b = collect(&plant, &rig, &CollectConfig::new(30, 500.0, 2, 0.05)).unwrap();
    let ab = merge(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(ab, merge(&[b, a]).unwrap());
    assert!(ab.validate().is_ok());
}
