use proptest::prelude::*;

use macrocoh::channels::{apply_to_state, dephasing_channel};
use macrocoh::io;
use macrocoh::measures::{evaluate, EvalOptions, MeasureId};
use macrocoh::modes::{delta_coherence_profile, gap_set};
use macrocoh::state::{phase_conjugate, random_density, HermitianObservable};

fn integer_observable(values: Vec<i8>) -> HermitianObservable {
    HermitianObservable::diagonal(values.into_iter().map(f64::from).collect())
}

const PHASE_INVARIANT: [MeasureId; 4] = [MeasureId::Qfi, MeasureId::Skew, MeasureId::Il, MeasureId::RelEnt];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn measures_are_phase_invariant(
        values in prop::collection::vec(-3i8..=3, 2..6),
        seed in any::<u64>(),
        x in -3.0f64..3.0,
    ) {
        let a = integer_observable(values);
        let d = a.dim();
        let rho = random_density(d, 1 + (seed as usize % d), seed).unwrap();
        let moved = phase_conjugate(&rho, &a, x).unwrap();
        for id in PHASE_INVARIANT {
            let before = evaluate(id, &rho, &a, &EvalOptions::default()).unwrap().value;
            let after = evaluate(id, &moved, &a, &EvalOptions::default()).unwrap().value;
            prop_assert!((before - after).abs() <= 1e-9 * before.abs().max(1.0), "{id:?}: {before} vs {after}");
        }
        let p0 = delta_coherence_profile(&rho, &a, &gap_set(&a, None).unwrap()).unwrap();
        let p1 = delta_coherence_profile(&moved, &a, &gap_set(&a, None).unwrap()).unwrap();
        for (u, v) in p0.iter().zip(&p1) {
            prop_assert!((u.1 - v.1).abs() < 1e-10);
        }
    }

    #[test]
    fn dephased_states_carry_no_coherence(values in prop::collection::vec(-3i8..=3, 2..6), seed in any::<u64>()) {
        let a = integer_observable(values);
        let d = a.dim();
        let rho = random_density(d, d, seed).unwrap();
        let flat = apply_to_state(&dephasing_channel(&a).unwrap(), &rho).unwrap();
        for id in PHASE_INVARIANT {
            prop_assert!(evaluate(id, &flat, &a, &EvalOptions::default()).unwrap().value.abs() < 1e-10);
        }
        for (delta, norm) in delta_coherence_profile(&flat, &a, &gap_set(&a, None).unwrap()).unwrap() {
            if delta != 0.0 {
                prop_assert!(norm < 1e-12);
            }
        }
    }

    #[test]
    fn profiles_are_symmetric_in_the_gap(values in prop::collection::vec(-3i8..=3, 2..6), seed in any::<u64>()) {
        let a = integer_observable(values);
        let rho = random_density(a.dim(), 2.min(a.dim()), seed).unwrap();
        let profile = delta_coherence_profile(&rho, &a, &gap_set(&a, None).unwrap()).unwrap();
        let n = profile.len();
        for k in 0..n {
            prop_assert_eq!(profile[k].0, -profile[n - 1 - k].0);
            prop_assert!((profile[k].1 - profile[n - 1 - k].1).abs() < 1e-12);
        }
    }

    #[test]
    fn json_roundtrip_is_exact(dim in 1usize..7, seed in any::<u64>()) {
        let rho = random_density(dim, dim, seed).unwrap();
        let back = io::read_state(&io::write_matrix(rho.matrix())).unwrap();
        prop_assert_eq!(back.matrix(), rho.matrix());
    }
}
