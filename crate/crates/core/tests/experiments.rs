use proptest::prelude::*;
use softarm_core::experiments::{bending_sweep, ErrorStats, SweepMode};
use softarm_core::plant::PlantConfig;

proptest! {
    #[test]
    fn stats_are_consistent(errors in prop::collection::vec(0f64..100.0, 1..200), bins in 1usize..20) {
        let s = ErrorStats::from_errors(&errors, Some(bins)).unwrap();
        prop_assert_eq!(s.count, errors.len());
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        prop_assert!((s.mean - mean).abs() < 1e-9);
        let h = s.histogram.unwrap();
        prop_assert_eq!(h.counts.len(), bins);
        prop_assert_eq!(h.counts.iter().sum::<u64>(), errors.len() as u64);
    }
}

#[test]
fn sweep_endpoints_agree_across_arm_lengths() {
    let cfg = PlantConfig::default().noiseless();
    let one = bending_sweep(&cfg, 1, 100.0, SweepMode::ZeroReturn).unwrap();
    let three = bending_sweep(&cfg, 3, 100.0, SweepMode::ZeroReturn).unwrap();
    let (a, b) = (one.last().unwrap().angle_deg, three.last().unwrap().angle_deg);
    assert!((a - 40.0).abs() <= 1.0 && (a - b).abs() <= 5.0);
}

// Forward error on the base-segment manifold shrinks as the grid densifies
// (5, 11, 21, 41 levels per bladder).
#[test]
fn fk_error_converges_with_grid_density() {
    use softarm_core::experiments::{fk_validation, structured_table};
    use softarm_core::plant::Plant;

    let plant = Plant::new(PlantConfig::default().noiseless(), Default::default()).unwrap();
    let means: Vec<f64> = [250.0, 100.0, 50.0, 25.0]
        .iter()
        .map(|step| {
            let table = structured_table(&plant, *step, 1000.0, 1).unwrap();
            fk_validation(&plant, &table, 100, 8, 1).unwrap().stats.mean
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}
