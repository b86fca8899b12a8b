use bigmac::posterior::{run_gibbs, GibbsConfig, Hyperparameters, PosteriorChain, RowUpdateMode};
use bigmac::rng::stream;
use bigmac::sim::{sample_random_generator, simulate_observed, transition_counts, InitialState, TransitionCounts};
use bigmac::spectral::GeneratorMatrix;
use nalgebra::DMatrix;
use proptest::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

fn simulated_counts(m: usize, n: usize, seed: u64) -> TransitionCounts {
    let l = sample_random_generator(m, &mut stream(seed, "generator")).unwrap();
    let obs = simulate_observed(&l, &InitialState::Stationary, n, 1.0, &mut stream(seed, "ctmc")).unwrap();
    transition_counts(&obs)
}

fn counts_from(l: &GeneratorMatrix, n: usize, seed: u64) -> TransitionCounts {
    let obs = simulate_observed(l, &InitialState::Stationary, n, 1.0, &mut stream(seed, "ctmc")).unwrap();
    transition_counts(&obs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stored_states_satisfy_invariants_and_replay(
        m in 2usize..=4,
        n in 50usize..2_000,
        data_seed in any::<u64>(),
        seed in any::<u64>(),
        mh in any::<bool>(),
    ) {
        let c = simulated_counts(m, n, data_seed);
        let mut h = Hyperparameters::paper_defaults(m);
        if mh {
            h.row_update_mode = RowUpdateMode::MhCorrected;
        }
        let cfg = GibbsConfig { iters: 60, burn_in: 20, thin: 2 };
        let chain = run_gibbs(&c, &h, &cfg, seed).unwrap();
        prop_assert_eq!(chain.len(), 20);
        for s in &chain.samples {
            if let Err(e) = s.check_invariants(h.eps_relax) {
                return Err(TestCaseError::fail(format!("iteration {}: {e}", s.iteration)));
            }
        }
        let again = run_gibbs(&c, &h, &cfg, seed).unwrap();
        prop_assert_eq!(chain.samples, again.samples);
    }
}

fn mean_penalty_gap(chain: &PosteriorChain) -> f64 {
    chain
        .samples
        .iter()
        .map(|s| (&s.p - s.reconstruction()).norm())
        .sum::<f64>()
        / chain.len() as f64
}

#[test]
fn stronger_penalty_tightens_the_reconstruction() {
    let cfg = GibbsConfig {
        iters: 1500,
        burn_in: 500,
        thin: 1,
    };
    for g in 0..3u64 {
        let c = simulated_counts(3, 1000, 100 + g);
        let gaps: Vec<f64> = [1e2, 1e4]
            .iter()
            .map(|&nu| {
                let mut h = Hyperparameters::paper_defaults(3);
                h.nu = nu;
                mean_penalty_gap(&run_gibbs(&c, &h, &cfg, 7).unwrap())
            })
            .collect();
        assert!(gaps[1] <= gaps[0], "generator {g}: gaps {gaps:?}");
    }
}

/// Largest gap between the empirical CDF and the Beta CDF over 50 bin edges.
fn binned_ks(xs: &[f64], beta: &Beta) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    (1..50)
        .map(|b| {
            let edge = b as f64 / 50.0;
            let ecdf = sorted.partition_point(|&x| x <= edge) as f64 / sorted.len() as f64;
            (ecdf - beta.cdf(edge)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn vanishing_penalty_recovers_the_dirichlet_marginals() {
    let l = GeneratorMatrix::from_rows(&[&[-1.0, 1.0], &[2.0, -2.0]]).unwrap();
    let c = counts_from(&l, 200, 5);
    let mut h = Hyperparameters::paper_defaults(2);
    h.nu = 1e-6;
    let chain = run_gibbs(
        &c,
        &h,
        &GibbsConfig {
            iters: 11_000,
            burn_in: 1_000,
            thin: 1,
        },
        9,
    )
    .unwrap();
    assert_eq!(chain.len(), 10_000);
    for p in 0..2 {
        let a = h.alpha[0] + c.get(p, 0) as f64;
        let b = h.alpha[1] + c.get(p, 1) as f64;
        let xs: Vec<f64> = chain.samples.iter().map(|s| s.p[(p, 0)]).collect();
        let ks = binned_ks(&xs, &Beta::new(a, b).unwrap());
        assert!(ks < 0.05, "row {p}: binned KS {ks}");
    }
}

#[test]
fn corrected_rows_are_mostly_accepted_at_large_n() {
    let l = GeneratorMatrix::from_rows(&[&[-1.0, 1.0], &[2.0, -2.0]]).unwrap();
    let c = counts_from(&l, 100_000, 6);
    let mut h = Hyperparameters::paper_defaults(2);
    h.row_update_mode = RowUpdateMode::MhCorrected;
    let chain = run_gibbs(
        &c,
        &h,
        &GibbsConfig {
            iters: 3000,
            burn_in: 500,
            thin: 1,
        },
        4,
    )
    .unwrap();
    let rate = chain.stats.row_acceptance_rate();
    assert!(rate >= 0.9, "row acceptance {rate}");
}

#[test]
fn posterior_mean_of_p_tracks_counts() {
    let c = simulated_counts(3, 5000, 12);
    let chain = run_gibbs(&c, &Hyperparameters::paper_defaults(3), &GibbsConfig::default(), 3).unwrap();
    let mean = chain.samples.iter().fold(DMatrix::zeros(3, 3), |a, s| a + &s.p) / chain.len() as f64;
    let emp = c.as_f64();
    for p in 0..3 {
        let row = emp.row(p) / emp.row(p).sum();
        assert!((mean.row(p) - row).abs().max() < 0.03, "row {p}");
    }
}

#[test]
fn large_sample_two_state_fit_is_accurate() {
    let l = sample_random_generator(2, &mut stream(77, "generator")).unwrap();
    let c = counts_from(&l, 100_000, 77);
    let chain = run_gibbs(&c, &Hyperparameters::paper_defaults(2), &GibbsConfig::default(), 77).unwrap();
    let mean = chain.generators().iter().fold(DMatrix::zeros(2, 2), |a, g| a + g) / chain.len() as f64;
    let err = (mean - l.entries()).norm();
    assert!(err < 0.05, "Frobenius error {err}");
}
