use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use softarm_core::acquisition::draw_times;
use softarm_core::acquisition::sample_rng;
use softarm_core::geom;
use softarm_core::plant::{beacon_world_positions, Plant, PlantConfig, N_BLADDERS};
use softarm_core::PlantError;

fn plant() -> Plant {
    Plant::new(PlantConfig::default().noiseless(), Default::default()).unwrap()
}

fn times_strategy() -> impl Strategy<Value = [f64; N_BLADDERS]> {
    (any::<u64>(), 1f64..=1000.0).prop_map(|(seed, t_max)| draw_times(&mut sample_rng(seed, 0), t_max, 3))
}

proptest! {
    #[test]
    fn compensated_deflation_restores_fill(t in 0f64..=1000.0, bladder in 0usize..9) {
        let p = plant();
        let s = p.step_inflate(&p.reset(), bladder, t).unwrap();
        let s = p.step_deflate(&s, bladder, 1.45 * t).unwrap();
        prop_assert!(s.fill[bladder].abs() < 1e-9);
    }

    #[test]
    fn resumed_inflation_pays_hysteresis(first in 1f64..500.0, second in 0f64..500.0) {
        let p = plant();
        let s = p.step_inflate(&p.reset(), 4, first).unwrap();
        let s = p.step_inflate(&s, 4, second).unwrap();
        prop_assert!((s.fill[4] - (first + second / 1.2)).abs() < 1e-9);
    }

    #[test]
    fn beacon_is_rigid(times in times_strategy(), payload in 0f64..200.0) {
        let p = plant();
        let tip = p.tip_pose(&p.drive(&times).unwrap(), payload);
        let [g, r, b] = beacon_world_positions(&tip, &p.beacon);
        let [g0, r0, b0] = p.beacon.offsets;
        prop_assert!((geom::dist(g, r) - geom::dist(g0, r0)).abs() < 1e-9);
        prop_assert!((geom::dist(g, b) - geom::dist(g0, b0)).abs() < 1e-9);
        prop_assert!((geom::dist(r, b) - geom::dist(r0, b0)).abs() < 1e-9);
        prop_assert!(geom::is_rotation(&tip.orientation, 1e-9));
    }

    #[test]
    fn driving_is_deterministic(times in times_strategy(), seed in any::<u64>()) {
        let p = Plant::default();
        let a = p.tip_pose_noisy(&p.drive(&times).unwrap(), 55.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = p.tip_pose_noisy(&p.drive(&times).unwrap(), 55.0, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a, b);
    }
}

#[test]
fn single_bladder_bend_is_monotone_to_saturation() {
    let p = plant();
    let mut last = -1.0;
    for i in 0..=200 {
        let s = p.step_inflate(&p.reset(), 2, 5.0 * i as f64).unwrap();
        let shape = p.shape(&s, 0.0);
        let rel = geom::sub(shape.segment_ends[0].position, shape.segment_bases[0].position);
        let angle = geom::norm([rel[0], rel[1], 0.0]).atan2(rel[2]);
        assert!(angle >= last);
        last = angle;
    }
}

// Independent oracle: a constant-curvature arc of length L and tangent
// angle β ends at (L/β)(1 − cos β) sideways and (L/β) sin β up.
#[test]
fn one_segment_traces_the_arc() {
    let cfg = PlantConfig {
        n_segments: 1,
        ..PlantConfig::default().noiseless()
    };
    let p = Plant::new(cfg, Default::default()).unwrap();
    for i in 1..=100 {
        let fill = 10.0 * i as f64;
        let s = p.step_inflate(&p.reset(), 0, fill).unwrap();
        let shape = p.shape(&s, 0.0);
        let beta = cfg.curvature_gain * fill;
        let r = cfg.segment_length_mm / beta;
        let rel = geom::sub(shape.segment_ends[0].position, shape.segment_bases[0].position);
        let lateral = (rel[0] * rel[0] + rel[1] * rel[1]).sqrt();
        assert!((lateral - r * (1.0 - beta.cos())).abs() < 1e-6);
        assert!((rel[2] - r * beta.sin()).abs() < 1e-6);
        // bends away from the inflated bladder at azimuth 90°
        assert!(rel[1] < 0.0 && rel[0].abs() < 1e-9);
    }
}

#[test]
fn heavier_payload_droops_more() {
    let p = plant();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut d55 = 0.0;
    let mut d155 = 0.0;
    for _ in 0..50 {
        let s = p.drive(&draw_times(&mut rng, 1000.0, 3)).unwrap();
        let free = p.tip_pose(&s, 0.0).position;
        d55 += geom::dist(p.tip_pose(&s, 55.0).position, free);
        d155 += geom::dist(p.tip_pose(&s, 155.0).position, free);
    }
    assert!(d55 > 0.0 && d155 > d55);
}

#[test]
fn inflation_limits() {
    let p = plant();
    let s = p.step_inflate(&p.reset(), 0, 600.0).unwrap();
    let s = p.step_deflate(&s, 0, 2000.0).unwrap();
    assert_eq!(s.fill[0], 0.0);
    // venting does not refund the inflation budget
    assert!(matches!(
        p.step_inflate(&s, 0, 500.0),
        Err(PlantError::Overinflation { .. })
    ));
    assert!(matches!(
        p.step_inflate(&s, 9, 1.0),
        Err(PlantError::BladderOutOfRange(9))
    ));
    assert!(matches!(
        p.step_inflate(&s, 1, -1.0),
        Err(PlantError::NegativeDuration(_))
    ));
    let two = p.drive(&[100.0, 100.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(p.step_inflate(&two, 2, 10.0).is_err());
}
