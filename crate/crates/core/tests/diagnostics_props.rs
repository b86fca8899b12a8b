use bigmac::diagnostics::{ess, frobenius_error, theorem2_check};
use bigmac::rng::stream;
use bigmac::spectral::GeneratorMatrix;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, "ar1");
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            x = phi * x + z;
            x
        })
        .collect()
}

fn matrix(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shuffling_a_correlated_chain_raises_ess(phi in 0.5f64..0.95, seed in any::<u64>()) {
        let xs = ar1(phi, 2000, seed);
        let mut shuffled = xs.clone();
        shuffled.shuffle(&mut stream(seed, "shuffle"));
        prop_assert!(ess(&shuffled).unwrap() > ess(&xs).unwrap());
    }

    #[test]
    fn frobenius_error_is_a_metric(
        a in prop::collection::vec(-10.0f64..10.0, 9),
        b in prop::collection::vec(-10.0f64..10.0, 9),
        c in prop::collection::vec(-10.0f64..10.0, 9),
    ) {
        let (a, b, c) = (matrix(&a), matrix(&b), matrix(&c));
        let ab = frobenius_error(&a, &b).unwrap();
        prop_assert!((ab - frobenius_error(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(ab <= frobenius_error(&a, &c).unwrap() + frobenius_error(&c, &b).unwrap() + 1e-12);
        prop_assert_eq!(frobenius_error(&a, &a).unwrap(), 0.0);
    }
}

#[test]
fn scaled_eigenvalue_deviation_is_centred() {
    let l0 = GeneratorMatrix::from_rows(&[&[-1.0, 1.0], &[2.0, -2.0]]).unwrap();
    let report = theorem2_check(&l0, 1.0, &[100_000], 50, 1, 31).unwrap();
    let cell = &report.cells[0];
    let bound = 3.0 * cell.scaled_spread / (cell.replicates as f64).sqrt();
    assert!(cell.scaled_mean.abs() < bound, "mean {} vs {bound}", cell.scaled_mean);
    assert!(report.mean_zero);
}
