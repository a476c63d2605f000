//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rnbs::{DistributionTable, UnitaryMatrix};
use std::collections::HashMap;

/// Transition probability by expanding the creation-operator polynomial
/// `prod_s (sum_d U[d, s] b_d^dag)^(n_s)` monomial by monomial. No permanents.
pub fn fock_transition(u: &UnitaryMatrix, input: &[usize], output: &[usize]) -> f64 {
    let m = u.dim();
    let mut poly: HashMap<Vec<usize>, Complex64> = HashMap::new();
    poly.insert(vec![0; m], Complex64::new(1.0, 0.0));
    for (s, &n) in input.iter().enumerate() {
        for _ in 0..n {
            let mut next: HashMap<Vec<usize>, Complex64> = HashMap::new();
            for (mono, coeff) in &poly {
                for d in 0..m {
                    let mut key = mono.clone();
                    key[d] += 1;
                    *next.entry(key).or_insert(Complex64::new(0.0, 0.0)) += coeff * u[(d, s)];
                }
            }
            poly = next;
        }
    }
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let coeff = poly.get(output).copied().unwrap_or(Complex64::new(0.0, 0.0));
    let scale: f64 = output.iter().map(|&k| fact(k)).product::<f64>() / input.iter().map(|&k| fact(k)).product::<f64>();
    coeff.norm_sqr() * scale
}

/// `(mantissa, e)` with `x = mantissa / 2^e` exactly, for `0 <= x <= 1`.
fn dyadic(x: f64) -> (u64, u32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, 1074) } else { (frac | (1u64 << 52), 1075 - exp) };
    let tz = mant.trailing_zeros().min(e as u32);
    (mant >> tz, (e as u32) - tz)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 0 {
        let step = e.min(1000);
        x *= 2f64.powi(step as i32);
        e -= step;
    }
    while e < 0 {
        let step = (-e).min(1000);
        x /= 2f64.powi(step as i32);
        e += step;
    }
    x
}

/// `P(K >= k_min)` for `K ~ Binomial(trials, p)` in exact integer arithmetic,
/// treating `p` as the exact binary rational it stores and `q = 1 - p` exactly.
pub fn exact_upper_tail(trials: u64, k_min: u64, p: f64) -> f64 {
    if k_min == 0 {
        return 1.0;
    }
    if k_min > trials || p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let (pm, e) = dyadic(p);
    let big_p = BigUint::from(pm);
    let big_q = (BigUint::one() << e) - &big_p;
    let mut binom = BigUint::one();
    for i in 0..k_min {
        binom = binom * (trials - i) / (i + 1);
    }
    let mut p_pow = big_p.pow(k_min as u32);
    let mut q_pow = big_q.pow((trials - k_min) as u32);
    let mut total = BigUint::zero();
    let mut k = k_min;
    loop {
        total += &binom * &p_pow * &q_pow;
        if k == trials {
            break;
        }
        binom = binom * (trials - k) / (k + 1);
        p_pow *= &big_p;
        q_pow /= &big_q;
        k += 1;
    }
    let bits = total.bits() as i64;
    let shift = (bits - 64).max(0);
    let top = (&total >> shift as usize).to_u64().unwrap() as f64;
    ldexp(top, shift - e as i64 * trials as i64)
}

/// Pearson chi-square statistic and degrees of freedom, pooling cells with an
/// expected count below five.
pub fn chi_square(expected_probs: &[f64], counts: &[usize], draws: usize) -> (f64, usize) {
    let n = draws as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pool_exp, mut pool_obs) = (0.0, 0.0);
    for (&p, &c) in expected_probs.iter().zip(counts) {
        let e = p * n;
        if e < 5.0 {
            pool_exp += e;
            pool_obs += c as f64;
        } else {
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp.max(1e-300);
        cells += 1;
    }
    (stat, cells.saturating_sub(1))
}

/// Counts table-entry hits for outputs drawn from `table`.
pub fn draw_counts(table: &DistributionTable, draws: usize, seed: u64) -> Vec<usize> {
    let mut rng = rnbs::SeededRng::new(seed);
    let index: HashMap<Vec<usize>, usize> =
        table.entries.iter().enumerate().map(|(i, e)| (e.output.occupations().to_vec(), i)).collect();
    let mut counts = vec![0usize; table.entries.len()];
    for _ in 0..draws {
        let o = rnbs::sample_output(table, &mut rng).unwrap();
        counts[index[o.occupations()]] += 1;
    }
    counts
}
