use bigmac::diffusion::{coarse_grain, euler_maruyama, grad_potential, simulate_trajectory, DiffusionConfig};
use bigmac::rng::stream;
use bigmac::sim::{empirical_p, transition_counts};
use proptest::prelude::*;

/// Classical RK4 for `dx/dt = −U′(x)/α` over `t`.
fn gradient_flow(x0: f64, alpha: f64, t: f64, substeps: usize) -> f64 {
    let f = |x: f64| -grad_potential(x) / alpha;
    let h = t / substeps as f64;
    let mut x = x0;
    for _ in 0..substeps {
        let k1 = f(x);
        let k2 = f(x + 0.5 * h * k1);
        let k3 = f(x + 0.5 * h * k2);
        let k4 = f(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}

fn noiseless_error(x0: f64, dt: f64) -> f64 {
    let t = 2.0;
    let cfg = DiffusionConfig {
        beta: 0.0,
        dt,
        steps: (t / dt).round() as usize,
        stride: 1,
        ..Default::default()
    };
    let traj = euler_maruyama(&cfg, x0, &mut stream(0, "unused")).unwrap();
    (traj.last().unwrap() - gradient_flow(x0, cfg.alpha, t, 20_000)).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn noiseless_scheme_is_first_order(x0 in -4.0f64..4.0) {
        let coarse = noiseless_error(x0, 0.02);
        let fine = noiseless_error(x0, 0.01);
        prop_assert!(coarse < 0.02, "error {} at dt 0.02", coarse);
        // O(dt): halving the step roughly halves the error
        prop_assert!(fine <= 0.6 * coarse + 1e-12, "{} then {}", coarse, fine);
    }

    #[test]
    fn coarse_path_is_reproducible(seed in any::<u64>()) {
        let cfg = DiffusionConfig { steps: 2_000, seed, ..Default::default() };
        let a = coarse_grain(&simulate_trajectory(&cfg).unwrap(), &cfg).unwrap();
        let b = coarse_grain(&simulate_trajectory(&cfg).unwrap(), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}

fn paper_counts() -> bigmac::sim::TransitionCounts {
    let cfg = DiffusionConfig {
        seed: 2024,
        ..Default::default()
    };
    let traj = simulate_trajectory(&cfg).unwrap();
    transition_counts(&coarse_grain(&traj, &cfg).unwrap().path)
}

#[test]
fn occupancy_concentrates_in_three_wells() {
    let c = paper_counts();
    let occ: Vec<u64> = (0..c.m()).map(|p| c.row_total(p)).collect();
    let mut sorted = occ.clone();
    sorted.sort_unstable();
    let median = (sorted[c.m() / 2 - 1] + sorted[c.m() / 2]) as f64 / 2.0;
    let mut runs = Vec::new();
    let mut current = 0;
    for &o in &occ {
        if o as f64 > median {
            current += o;
        } else if current > 0 {
            runs.push(current);
            current = 0;
        }
    }
    if current > 0 {
        runs.push(current);
    }
    runs.sort_unstable_by(|a, b| b.cmp(a));
    let top3: u64 = runs.iter().take(3).sum();
    let total: u64 = occ.iter().sum();
    assert!(top3 as f64 >= 0.8 * total as f64, "runs {runs:?} of {total}");
}

/// Share of each row's mass beyond three bins of the diagonal.
#[test]
fn empirical_p_is_row_stochastic_and_near_banded() {
    let c = paper_counts();
    let p = empirical_p(&c);
    let m = c.m();
    let mut worst = 0.0f64;
    for i in (0..m).filter(|&i| c.row_total(i) > 0) {
        let row = p.matrix.entries().row(i);
        assert!((row.sum() - 1.0).abs() < 1e-12);
        let far: f64 = (0..m).filter(|&j| i.abs_diff(j) > 3).map(|j| row[j]).sum();
        worst = worst.max(far);
    }
    assert!(worst < 0.05, "largest off-band row mass {worst}");
}
