//! Property tests for the spec-level invariants.

use proptest::prelude::*;

use flipbench_core::analysis::spearman;
use flipbench_core::datagen::{apply_mantissa_mask, InitSpec, MaskBits, MatrixRole};
use flipbench_core::trace::{read_durations, DurationRecord, DurationWriter};

fn finite_f64() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #[test]
    fn mask_is_idempotent(x in finite_f64(), k in 0u32..=53) {
        let mask = MaskBits::new(k).unwrap();
        let once = apply_mantissa_mask(x, mask);
        let twice = apply_mantissa_mask(once, mask);
        prop_assert_eq!(once.to_bits(), twice.to_bits());
    }

    #[test]
    fn mask_nesting_wider_wins(x in finite_f64(), k1 in 0u32..=52, k2 in 0u32..=52) {
        let (k1, k2) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let wide = apply_mantissa_mask(x, MaskBits::new(k2).unwrap());
        let narrowed = apply_mantissa_mask(wide, MaskBits::new(k1).unwrap());
        prop_assert_eq!(narrowed.to_bits(), wide.to_bits());
    }

    #[test]
    fn generators_are_pure_functions_of_spec(seed in any::<u64>(), order in 2usize..32) {
        for spec in [
            InitSpec::constant(0.987).unwrap(),
            InitSpec::Sequential,
            InitSpec::Random { seed },
            InitSpec::masked(seed, (seed % 54) as u32).unwrap(),
        ] {
            let a = spec.generate(order, MatrixRole::B).unwrap();
            let b = spec.generate(order, MatrixRole::B).unwrap();
            prop_assert_eq!(a.as_slice(), b.as_slice());
        }
    }

    #[test]
    fn random_elements_stay_in_unit_interval(seed in any::<u64>(), order in 1usize..24) {
        let m = InitSpec::Random { seed }.generate(order, MatrixRole::A).unwrap();
        prop_assert!(m.as_slice().iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn duration_rows_round_trip(
        core in 0u32..256,
        call_index in 0u32..1000,
        seed in any::<u64>(),
        order in 2u32..4096,
        start_ns in any::<u64>(),
        duration_ns in 1u64..u64::MAX,
        mask in prop::option::of(0u8..=53),
    ) {
        let record = DurationRecord {
            node: "node-1".into(),
            core,
            call_index,
            scheme: match mask {
                Some(m) => format!("masked:{m}"),
                None => "random".into(),
            },
            mask_bits: mask,
            seed,
            matrix_order: order,
            kernel: "blocked".into(),
            start_ns,
            duration_ns,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("durations.csv");
        let mut writer = DurationWriter::create(&path).unwrap();
        writer.write(&record).unwrap();
        writer.finish().unwrap();
        let back = read_durations(&path).unwrap();
        prop_assert_eq!(back, vec![record]);
    }

    #[test]
    fn spearman_stays_in_unit_range(values in prop::collection::vec(0u8..16, 3..64)) {
        let x: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = values.iter().rev().map(|&v| (v as f64).sin()).collect();
        if let Ok(rho) = spearman(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&rho), "rho = {}", rho);
        }
    }
}
