//! The qubit Mix⁺ sampler against the dense Schur-transform route.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tomoforge_core::estimators::{mix_plus_pipeline, MixPlusBackend};
use tomoforge_core::stats::ks_two_sample;
use tomoforge_core::tensor::random_density;

fn statistics(backend: MixPlusBackend, n: usize, draws: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let rho = random_density(2, 2, &mut rng).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut a, mut b, mut l) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..draws {
        let s = mix_plus_pipeline(&rho, n, backend, &mut rng).unwrap();
        let m = s.estimate.matrix();
        a.push(m[(0, 0)].re);
        b.push(m[(0, 1)].re + 0.5 * m[(0, 1)].im);
        l.push(s.meta.lambda.unwrap().length() as f64);
    }
    (a, b, l, rho.matrix()[(0, 0)].re)
}

#[test]
fn qubit_and_dense_backends_agree_in_law() {
    for n in [2, 3, 4] {
        let (da, db, dl, _) = statistics(MixPlusBackend::Dense, n, 4000, 1);
        let (qa, qb, ql, _) = statistics(MixPlusBackend::Qubit, n, 4000, 2);
        for (x, y) in [(&da, &qa), (&db, &qb), (&dl, &ql)] {
            let ks = ks_two_sample(x, y).unwrap();
            assert!(ks.p_value > 1e-3, "n={n}: {ks:?}");
        }
    }
}
