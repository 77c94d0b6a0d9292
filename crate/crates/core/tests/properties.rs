use proptest::prelude::*;
use std::path::PathBuf;
use tomoforge_core::estimators::{gps_estimate, mix_pipeline, mix_plus_pipeline, InnerEstimator, MixPlusBackend};
use tomoforge_core::harness::{derive_rng, Command, ExperimentConfig, StateSpec};
use tomoforge_core::perm::Permutation;
use tomoforge_core::purification::random_purification;
use tomoforge_core::schur::SchurDecomposition;
use tomoforge_core::stats::lower_median;
use tomoforge_core::symmetric::symmetric_leakage;
use tomoforge_core::tensor::{
    fidelity, haar_state, kron, partial_trace, permutation_operator, random_density, rel_frobenius, tensor_power,
    trace_distance, Operator, PureState, RegisterShape,
};

fn permutation(max_n: usize) -> impl Strategy<Value = Permutation> {
    (1..=max_n)
        .prop_flat_map(|n| Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
        .prop_map(|v| Permutation::from_images(v).unwrap())
}

fn permutation_pair(max_n: usize) -> impl Strategy<Value = (Permutation, Permutation)> {
    (1..=max_n).prop_flat_map(|n| {
        let base = (0..n).collect::<Vec<usize>>();
        (Just(base.clone()).prop_shuffle(), Just(base).prop_shuffle())
            .prop_map(|(a, b)| (Permutation::from_images(a).unwrap(), Permutation::from_images(b).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_composes_to_identity(p in permutation(7)) {
        prop_assert!(p.compose(&p.inverse()).is_identity());
        prop_assert!(p.inverse().compose(&p).is_identity());
    }

    #[test]
    fn sign_is_multiplicative((p, q) in permutation_pair(7)) {
        prop_assert_eq!(p.compose(&q).sign(), p.sign() * q.sign());
    }

    #[test]
    fn adjacent_decomposition_reconstructs(p in permutation(7)) {
        let n = p.len();
        let rebuilt = p
            .adjacent_decomposition()
            .iter()
            .fold(Permutation::identity(n), |acc, &i| acc.compose(&Permutation::adjacent(n, i)));
        prop_assert_eq!(rebuilt, p);
    }

    #[test]
    fn register_action_is_a_homomorphism((p, q) in permutation_pair(4), d in 1usize..=3) {
        let lhs = permutation_operator(&p, d).unwrap().mul(&permutation_operator(&q, d).unwrap()).unwrap();
        let rhs = permutation_operator(&p.compose(&q), d).unwrap();
        prop_assert!(rel_frobenius(lhs.matrix(), rhs.matrix()) < 1e-14);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), d1 in 1usize..=3, d2 in 1usize..=3) {
        let mut rng = derive_rng(seed, "prop-ptrace", 0);
        let a = random_density(d1, d1, &mut rng).unwrap();
        let b = random_density(d2, d2, &mut rng).unwrap();
        let ab = kron(&a, &b).unwrap();
        prop_assert!(rel_frobenius(partial_trace(&ab, &[0]).unwrap().matrix(), a.matrix()) < 1e-12);
        prop_assert!(rel_frobenius(partial_trace(&ab, &[1]).unwrap().matrix(), b.matrix()) < 1e-12);
    }

    #[test]
    fn distance_measures_are_bounded_and_symmetric(seed in any::<u64>(), d in 2usize..=4) {
        let mut rng = derive_rng(seed, "prop-distance", 0);
        let a = random_density(d, d, &mut rng).unwrap();
        let b = random_density(d, 1, &mut rng).unwrap();
        let (f_ab, f_ba) = (fidelity(&a, &b).unwrap(), fidelity(&b, &a).unwrap());
        let (t_ab, t_ba) = (trace_distance(&a, &b).unwrap(), trace_distance(&b, &a).unwrap());
        // Near rank-deficient inputs the square roots make fidelity only √ε-accurate.
        prop_assert!((0.0..=1.0).contains(&f_ab) && (f_ab - f_ba).abs() < 1e-6);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&t_ab) && (t_ab - t_ba).abs() < 1e-12);
        // Fuchs–van de Graaf.
        prop_assert!(1.0 - f_ab.sqrt() <= t_ab + 1e-9);
        prop_assert!(t_ab <= (1.0 - f_ab).sqrt() + 1e-9);
    }

    #[test]
    fn gps_estimate_has_unit_trace(seed in any::<u64>(), dim in 1usize..=5, n in 1usize..=20) {
        let v = haar_state(dim, &mut derive_rng(seed, "prop-gps", 0)).unwrap();
        let est = gps_estimate(&v, n).unwrap();
        prop_assert!((est.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(est.is_hermitian(1e-12));
    }

    #[test]
    fn product_powers_have_no_symmetric_leakage(seed in any::<u64>(), d in 1usize..=3, n in 1usize..=4) {
        let v = haar_state(d, &mut derive_rng(seed, "prop-leak", 0)).unwrap();
        let power = v.tensor_power(n).unwrap().density();
        prop_assert!(symmetric_leakage(power.matrix(), n, d).unwrap() < 1e-12);
    }

    #[test]
    fn random_purification_reduces_to_the_state(seed in any::<u64>(), d in 1usize..=3, extra in 0usize..=2) {
        let mut rng = derive_rng(seed, "prop-purify", 0);
        let rank = 1 + (seed as usize) % d;
        let rho = random_density(d, rank, &mut rng).unwrap();
        let psi = random_purification(&rho, rank + extra, &mut rng).unwrap();
        let reduced = partial_trace(&psi.density(), &[0]).unwrap();
        prop_assert!(rel_frobenius(reduced.matrix(), rho.matrix()) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weak_schur_law_is_normalized(seed in any::<u64>(), d in 2usize..=3, n in 1usize..=3) {
        let rho = random_density(d, d, &mut derive_rng(seed, "prop-wss", 0)).unwrap();
        let sd = SchurDecomposition::cached(n, d).unwrap();
        let probs = sd.block_probabilities(tensor_power(&rho, n).unwrap().matrix()).unwrap();
        prop_assert!(probs.iter().all(|(_, p)| *p >= -1e-12));
        prop_assert!((probs.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mixed_estimates_have_unit_trace(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = derive_rng(seed, "prop-mix", 0);
        let rho = random_density(2, 2, &mut rng).unwrap();
        let mix = mix_pipeline(&rho, 2, n, InnerEstimator::Gps, &mut rng).unwrap().estimate;
        let plus = mix_plus_pipeline(&rho, n, MixPlusBackend::Auto, &mut rng).unwrap().estimate;
        prop_assert!((mix.trace().re - 1.0).abs() < 1e-10);
        prop_assert!((plus.trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn config_hash_ignores_output_path(seed in any::<u64>(), d in 1usize..=4, out in "[a-z]{1,8}") {
        let mut a = ExperimentConfig::new(Command::Tomography, d, seed);
        let mut b = a.clone();
        a.out = PathBuf::from(format!("{out}.csv"));
        b.out = PathBuf::from("elsewhere/other.csv");
        prop_assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::new(Command::Tomography, d, seed.wrapping_add(1));
        prop_assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn state_spec_round_trips(k in 1usize..=9, path in "[a-z]{1,8}(/[a-z]{1,8}){0,2}\\.json") {
        for spec in [StateSpec::RandomRank(k), StateSpec::MaximallyMixed, StateSpec::File(PathBuf::from(path.clone()))] {
            let parsed: StateSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(parsed, spec);
        }
    }

    #[test]
    fn streams_are_reproducible_and_separated(seed in any::<u64>(), index in any::<u64>()) {
        use rand::Rng;
        let a: [u64; 4] = derive_rng(seed, "t", index).random();
        let b: [u64; 4] = derive_rng(seed, "t", index).random();
        let c: [u64; 4] = derive_rng(seed, "u", index).random();
        let e: [u64; 4] = derive_rng(seed, "t", index.wrapping_add(1)).random();
        prop_assert_eq!(a, b);
        prop_assert_ne!(a, c);
        prop_assert_ne!(a, e);
    }

    #[test]
    fn lower_median_is_an_element(xs in prop::collection::vec(-1e6f64..1e6, 1..50)) {
        let m = lower_median(&xs).unwrap();
        prop_assert!(xs.contains(&m));
        let below = xs.iter().filter(|&&x| x < m).count();
        let at_most = xs.iter().filter(|&&x| x <= m).count();
        prop_assert!(below < xs.len().div_ceil(2) && at_most >= xs.len().div_ceil(2));
    }
}

#[test]
fn pure_state_helpers_agree_with_operators() {
    let mut rng = derive_rng(1, "prop-helpers", 0);
    let v = haar_state(2, &mut rng).unwrap();
    let via_state = v.tensor_power(3).unwrap().density();
    let via_op = tensor_power(&v.density(), 3).unwrap();
    assert!(rel_frobenius(via_state.matrix(), via_op.matrix()) < 1e-13);
    let shape = RegisterShape::uniform(2, 3).unwrap();
    assert_eq!(via_state.shape(), &shape);
    let basis = PureState::basis(shape.clone(), 5);
    assert_eq!(Operator::projector(&basis).trace().re, 1.0);
}
