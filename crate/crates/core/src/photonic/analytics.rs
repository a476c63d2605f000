//! Closed-form success-probability analytics for post-selecting at least `N`
//! occupied ports out of `ceil(a N)` independent sources.
//!
//! Binomial terms are evaluated in log space with Loader's saddle-point
//! expansion: `ln C(n, k) p^k q^(n-k)` is assembled from Stirling-series
//! remainders of the log-gamma function and a deviance term computed without
//! cancellation. This keeps every term accurate to a few ulps even when
//! `ln C(n, k)` is in the thousands, where differences of raw log-gamma values
//! would lose about ten digits.

use crate::error::{Result, RnbsError};
use crate::numeric::CompensatedSum;
use std::f64::consts::PI;
use std::ops::RangeInclusive;

/// Products `a * N` this close to an integer are treated as that integer
/// before taking the ceiling.
pub const CEIL_SNAP: f64 = 1e-9;

/// Number of heralded sources, `ceil(a * n_min)`, snapping products within
/// [`CEIL_SNAP`] of an integer onto it.
pub fn source_count(n_min: usize, a: f64) -> Result<usize> {
    if n_min == 0 {
        return Err(RnbsError::InvalidConfig("n_min must be at least 1".into()));
    }
    if !a.is_finite() || a <= 0.0 {
        return Err(RnbsError::InvalidConfig(format!("source factor a = {a} must be positive")));
    }
    let x = a * n_min as f64;
    let nearest = x.round();
    let count = if (x - nearest).abs() <= CEIL_SNAP { nearest } else { x.ceil() };
    if count > u32::MAX as f64 {
        return Err(RnbsError::InvalidConfig(format!("ceil(a N) = {count} is too large")));
    }
    let count = count as usize;
    if count < n_min {
        return Err(RnbsError::InvalidConfig(format!(
            "ceil(a N) = {count} sources cannot supply N = {n_min} occupied ports"
        )));
    }
    Ok(count)
}

pub(crate) fn check_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(RnbsError::Domain(format!("probability {p} outside [0, 1]")))
    }
}

// Stirling series coefficients 1/12, 1/360, 1/1260, 1/1680, 1/1188.
const S0: f64 = 1.0 / 12.0;
const S1: f64 = 1.0 / 360.0;
const S2: f64 = 1.0 / 1260.0;
const S3: f64 = 1.0 / 1680.0;
const S4: f64 = 1.0 / 1188.0;

/// `ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)]` for integer `n >= 1`.
fn stirling_remainder(n: u64) -> f64 {
    let x = n as f64;
    if n <= 15 {
        let ln_fact: f64 = (2..=n).map(|i| i as f64).product::<f64>().ln();
        return ln_fact - (x + 0.5) * x.ln() + x - 0.5 * (2.0 * PI).ln();
    }
    let xx = x * x;
    if n > 500 {
        (S0 - S1 / xx) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// Deviance `x ln(x / m) + m - x`, summed as a series when `x` is near `m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1.. {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
    }
    x * (x / m).ln() + m - x
}

/// `ln [C(n, k) p^k (1-p)^(n-k)]`; `-inf` for impossible outcomes.
pub fn ln_binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if k == 0 {
        return nf * (-p).ln_1p();
    }
    if k == n {
        return nf * p.ln();
    }
    let kf = k as f64;
    let lc = stirling_remainder(n)
        - stirling_remainder(k)
        - stirling_remainder(n - k)
        - deviance(kf, nf * p)
        - deviance(nf - kf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

/// Sum of binomial pmf terms over `ks`, scaled by the largest term.
fn sum_terms(ks: RangeInclusive<u64>, trials: u64, p: f64) -> f64 {
    let logs: Vec<f64> = ks.map(|k| ln_binomial_pmf(k, trials, p)).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return 0.0;
    }
    let scaled: CompensatedSum = logs.iter().map(|&l| (l - peak).exp()).collect();
    scaled.value() * peak.exp()
}

/// `P(K >= k_min)` for `K ~ Binomial(trials, p)`.
///
/// Tails above the mean are summed directly. Otherwise the result is one minus
/// the lower tail, which then holds at most about half the mass, so neither
/// branch cancels and values near one stay monotone in `p`.
pub fn binomial_upper_tail(trials: u64, k_min: u64, p: f64) -> f64 {
    if k_min == 0 {
        return 1.0;
    }
    if k_min > trials {
        return 0.0;
    }
    if k_min as f64 > trials as f64 * p {
        sum_terms(k_min..=trials, trials, p).min(1.0)
    } else {
        (1.0 - sum_terms(0..=k_min - 1, trials, p)).max(0.0)
    }
}

/// Probability that at least `n_min` of `ceil(a n_min)` sources fire, each
/// independently with probability `p`.
pub fn success_probability(n_min: usize, a: f64, p: f64) -> Result<f64> {
    let trials = source_count(n_min, a)?;
    let p = check_probability(p)?;
    Ok(binomial_upper_tail(trials as u64, n_min as u64, p))
}

/// Mean `ceil(aN) p` and standard deviation `sqrt(ceil(aN) p (1-p))` of the
/// number of firing sources.
pub fn binomial_mean_std(n_min: usize, a: f64, p: f64) -> Result<(f64, f64)> {
    let trials = source_count(n_min, a)? as f64;
    let p = check_probability(p)?;
    Ok((trials * p, (trials * p * (1.0 - p)).sqrt()))
}

/// The source factor `1/p` above which the success probability tends to one
/// as `N` grows.
pub fn min_source_factor(p: f64) -> Result<f64> {
    let p = check_probability(p)?;
    if p == 0.0 {
        return Err(RnbsError::Domain("no source factor suffices when p = 0".into()));
    }
    Ok(1.0 / p)
}

/// [`success_probability`] at every `N` in `n_range`.
pub fn success_curve(n_range: RangeInclusive<usize>, a: f64, p: f64) -> Result<Vec<(usize, f64)>> {
    if n_range.is_empty() {
        return Err(RnbsError::InvalidConfig(format!(
            "empty range {}..{}",
            n_range.start(),
            n_range.end()
        )));
    }
    n_range.map(|n| success_probability(n, a, p).map(|prob| (n, prob))).collect()
}
