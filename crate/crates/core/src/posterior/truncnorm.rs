//! Exact draws from a normal distribution restricted to an interval.
//!
//! Mixed rejection sampler on the standardised interval `[a, b]`:
//! normal proposals when the interval is wide and covers the mode, uniform
//! proposals when it is narrow, and translated-exponential proposals for
//! one-sided tails. Every branch accepts with probability bounded away from
//! zero, so draws far in the tail neither hang nor produce NaN.

use rand::Rng;
use rand_distr::StandardNormal;

use super::PosteriorError;

fn exponential_tail<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    // optimal rate for the translated exponential proposal
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        let z = a - u.ln() / rate;
        if z > b {
            continue;
        }
        let accept = (-0.5 * (z - rate) * (z - rate)).exp();
        if rng.random::<f64>() <= accept {
            return z;
        }
    }
}

fn uniform_proposal<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    // log density ceiling on [a, b]
    let peak = if a <= 0.0 && b >= 0.0 { 0.0 } else { a.abs().min(b.abs()) };
    loop {
        let z = a + (b - a) * rng.random::<f64>();
        let accept = (0.5 * (peak * peak - z * z)).exp();
        if rng.random::<f64>() <= accept {
            return z;
        }
    }
}

fn standard_truncated<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a >= 0.0 {
        // right tail; uniform when the interval is short on the tail scale
        if b.is_finite() && (b - a) * (a + b) <= 2.0 {
            uniform_proposal(a, b, rng)
        } else {
            exponential_tail(a, b, rng)
        }
    } else if b <= 0.0 {
        -standard_truncated(-b, -a, rng)
    } else if b - a < 2.5 {
        uniform_proposal(a, b, rng)
    } else {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z >= a && z <= b {
                return z;
            }
        }
    }
}

/// Draw from `N(mu, sigma²)` restricted to `[lo, hi]`.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<f64, PosteriorError> {
    if !(lo < hi) || !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() || lo.is_nan() || hi.is_nan() {
        return Err(PosteriorError::InvalidInterval { lo, hi });
    }
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    let z = standard_truncated(a, b, rng);
    Ok((mu + sigma * z).clamp(lo, hi))
}
