//! Exact matrix permanents.
//!
//! Three kernels are kept side by side: the defining sum over permutations
//! (an oracle for small orders), Ryser's inclusion–exclusion formula and
//! Glynn's formula, both walked in Gray-code order so consecutive terms differ
//! by one column (Ryser) or one row sign (Glynn).
//!
//! The fast kernels split their subset space into fixed blocks of
//! `2^BLOCK_BITS` consecutive Gray-code indices. Running sums are rebuilt
//! from scratch at the start of each block and at fixed intervals inside it,
//! which bounds rounding drift. The blocks may run on any number of threads,
//! and the block partial sums are combined in block order. The result is
//! therefore bit-identical for every thread count.

use crate::error::{Result, RnbsError};
use crate::linalg::ComplexMatrix;
use crate::numeric::CompensatedComplexSum;
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;

pub const NAIVE_MAX_ORDER: usize = 10;
pub const FAST_MAX_ORDER: usize = 32;
/// Orders up to this value are dispatched to the naive kernel.
pub const DISPATCH_NAIVE_UP_TO: usize = 4;

const BLOCK_BITS: u32 = 14;
/// Running sums are rebuilt from scratch every `REFRESH_MASK + 1` steps.
const REFRESH_MASK: u64 = (1 << 5) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermanentAlgorithm {
    Naive,
    Ryser,
    Glynn,
}

impl fmt::Display for PermanentAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PermanentAlgorithm::Naive => "naive",
            PermanentAlgorithm::Ryser => "ryser",
            PermanentAlgorithm::Glynn => "glynn",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PermanentResult {
    pub value: Complex64,
    pub algorithm: PermanentAlgorithm,
    pub n: usize,
}

fn order(a: &ComplexMatrix, limit: usize) -> Result<usize> {
    if !a.is_square() {
        return Err(RnbsError::InvalidDimension(format!(
            "permanent of a non-square {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > limit {
        return Err(RnbsError::SizeGuard { what: "permanent order", size: n, limit });
    }
    Ok(n)
}

#[inline]
fn gray(k: u64) -> u64 {
    k ^ (k >> 1)
}

/// Sum over all permutations of the products `a[i, sigma(i)]`.
pub fn permanent_naive(a: &ComplexMatrix) -> Result<Complex64> {
    let n = order(a, NAIVE_MAX_ORDER)?;
    // Heap's algorithm, iterative form.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    let product = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| a[(i, j)]).product::<Complex64>();
    let mut acc = CompensatedComplexSum::new();
    acc.add(product(&perm));
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            acc.add(product(&perm));
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(acc.value())
}

fn columns_of(a: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    let t = a.transpose();
    (0..t.rows()).map(|j| t.row(j).to_vec()).collect()
}

fn ryser_sums(cols: &[Vec<Complex64>], base: &[Complex64], subset: u64, sums: &mut [Complex64]) {
    sums.copy_from_slice(base);
    for (j, col) in cols.iter().enumerate() {
        if subset >> j & 1 == 1 {
            for (s, &x) in sums.iter_mut().zip(col) {
                *s += x;
            }
        }
    }
}

fn ryser_block(cols: &[Vec<Complex64>], base: &[Complex64], lo: u64, hi: u64) -> Complex64 {
    let mut sums = vec![Complex64::new(0.0, 0.0); base.len()];
    let mut acc = CompensatedComplexSum::new();
    for k in lo..hi {
        let code = gray(k);
        if k == lo || k & REFRESH_MASK == 0 {
            ryser_sums(cols, base, code, &mut sums);
        } else {
            let j = k.trailing_zeros() as usize;
            if code >> j & 1 == 1 {
                for (s, &x) in sums.iter_mut().zip(&cols[j]) {
                    *s += x;
                }
            } else {
                for (s, &x) in sums.iter_mut().zip(&cols[j]) {
                    *s -= x;
                }
            }
        }
        let prod: Complex64 = sums.iter().product();
        acc.add(if code.count_ones() % 2 == 1 { -prod } else { prod });
    }
    acc.value()
}

// Row 0 always carries sign +1; bit i-1 of the Gray code flips row i.
fn glynn_sums(a: &ComplexMatrix, signs: u64, sums: &mut [Complex64]) {
    sums.copy_from_slice(a.row(0));
    for i in 1..a.rows() {
        let row = a.row(i);
        if signs >> (i - 1) & 1 == 1 {
            for (s, &x) in sums.iter_mut().zip(row) {
                *s -= x;
            }
        } else {
            for (s, &x) in sums.iter_mut().zip(row) {
                *s += x;
            }
        }
    }
}

fn glynn_block(a: &ComplexMatrix, lo: u64, hi: u64) -> Complex64 {
    let n = a.rows();
    let mut sums = vec![Complex64::new(0.0, 0.0); n];
    let mut acc = CompensatedComplexSum::new();
    for k in lo..hi {
        let code = gray(k);
        if k == lo || k & REFRESH_MASK == 0 {
            glynn_sums(a, code, &mut sums);
        } else {
            let bit = k.trailing_zeros() as usize;
            let row = a.row(bit + 1);
            if code >> bit & 1 == 1 {
                for (s, &x) in sums.iter_mut().zip(row) {
                    *s -= 2.0 * x;
                }
            } else {
                for (s, &x) in sums.iter_mut().zip(row) {
                    *s += 2.0 * x;
                }
            }
        }
        let prod: Complex64 = sums.iter().product();
        acc.add(if code.count_ones() % 2 == 1 { -prod } else { prod });
    }
    acc.value()
}

/// Evaluates `block` over `[0, total)` in fixed-size chunks and combines the
/// chunk sums in index order.
fn blocked_sum(total: u64, block: impl Fn(u64, u64) -> Complex64 + Sync) -> Complex64 {
    let size = 1u64 << BLOCK_BITS;
    let count = total.div_ceil(size);
    let partials: Vec<Complex64> = if count == 1 {
        vec![block(0, total)]
    } else {
        (0..count).into_par_iter().map(|b| block(b * size, ((b + 1) * size).min(total))).collect()
    };
    let mut acc = CompensatedComplexSum::new();
    for p in partials {
        acc.add(p);
    }
    acc.value()
}

/// Ryser's formula, `perm A = sum_S (-1)^(n-|S|) prod_i sum_{j in S} a_ij`,
/// in the Nijenhuis–Wilf form: row sums are shifted by `a_i,n-1 - sum_j a_ij / 2`
/// and only subsets of the first `n - 1` columns are visited, giving
/// `perm A = (-1)^(n-1) 2 sum_S (-1)^|S| prod_i (x_i + sum_{j in S} a_ij)`.
/// The centred sums keep the terms near the size of the result.
pub fn permanent_ryser(a: &ComplexMatrix) -> Result<Complex64> {
    let n = order(a, FAST_MAX_ORDER)?;
    let mut cols = columns_of(a);
    let last = cols.pop().expect("order is at least one");
    let base: Vec<Complex64> = (0..n).map(|i| last[i] - 0.5 * a.row(i).iter().sum::<Complex64>()).collect();
    let total = blocked_sum(1u64 << (n - 1), |lo, hi| ryser_block(&cols, &base, lo, hi));
    Ok(if n % 2 == 0 { -2.0 * total } else { 2.0 * total })
}

/// Glynn's formula over the `2^(n-1)` sign vectors with the first sign fixed.
pub fn permanent_glynn(a: &ComplexMatrix) -> Result<Complex64> {
    let n = order(a, FAST_MAX_ORDER)?;
    let total = blocked_sum(1u64 << (n - 1), |lo, hi| glynn_block(a, lo, hi));
    Ok(total / (1u64 << (n - 1)) as f64)
}

/// Naive kernel for orders up to [`DISPATCH_NAIVE_UP_TO`], Ryser above.
pub fn permanent(a: &ComplexMatrix) -> Result<PermanentResult> {
    let n = order(a, FAST_MAX_ORDER)?;
    let (value, algorithm) = if n <= DISPATCH_NAIVE_UP_TO {
        (permanent_naive(a)?, PermanentAlgorithm::Naive)
    } else {
        (permanent_ryser(a)?, PermanentAlgorithm::Ryser)
    };
    Ok(PermanentResult { value, algorithm, n })
}

/// Permanent of the matrix obtained by repeating row `i` of `a` `row_mult[i]`
/// times and column `j` `col_mult[j]` times, without materializing it.
///
/// Ryser's sum is grouped by how many copies `t_j` of each column a subset
/// takes, giving `prod_j (col_mult[j] + 1)` terms instead of `2^n`. The side
/// with fewer groups is iterated.
pub fn permanent_with_multiplicities(a: &ComplexMatrix, row_mult: &[usize], col_mult: &[usize]) -> Result<Complex64> {
    if row_mult.len() != a.rows() || col_mult.len() != a.cols() {
        return Err(RnbsError::InvalidDimension(format!(
            "multiplicities {}x{} for a {}x{} matrix",
            row_mult.len(),
            col_mult.len(),
            a.rows(),
            a.cols()
        )));
    }
    let n: usize = col_mult.iter().sum();
    let n_rows: usize = row_mult.iter().sum();
    if n != n_rows {
        return Err(RnbsError::InvalidDimension(format!("expanded matrix is {n_rows}x{n}")));
    }
    if n == 0 {
        return Err(RnbsError::InvalidDimension("expanded matrix is empty".into()));
    }
    if n > FAST_MAX_ORDER {
        return Err(RnbsError::SizeGuard { what: "permanent order", size: n, limit: FAST_MAX_ORDER });
    }
    let groups = |m: &[usize]| m.iter().map(|&c| (c + 1) as f64).product::<f64>();
    if groups(row_mult) < groups(col_mult) {
        return Ok(grouped_ryser(&a.transpose(), col_mult, row_mult, n));
    }
    Ok(grouped_ryser(a, row_mult, col_mult, n))
}

fn grouped_ryser(a: &ComplexMatrix, row_mult: &[usize], col_mult: &[usize], n: usize) -> Complex64 {
    let rows = a.rows();
    let cols = columns_of(a);
    let binom: Vec<Vec<f64>> = col_mult
        .iter()
        .map(|&c| {
            let mut row = vec![1.0f64; c + 1];
            for t in 1..=c {
                row[t] = row[t - 1] * (c + 1 - t) as f64 / t as f64;
            }
            row
        })
        .collect();
    let mut counts = vec![0usize; col_mult.len()];
    let mut sums = vec![Complex64::new(0.0, 0.0); rows];
    let mut acc = CompensatedComplexSum::new();
    loop {
        let chosen: usize = counts.iter().sum();
        // The all-zero choice contributes zero since n >= 1.
        if chosen > 0 {
            let weight: f64 = counts.iter().zip(&binom).map(|(&t, b)| b[t]).product();
            let prod: Complex64 = sums.iter().zip(row_mult).map(|(s, &r)| s.powu(r as u32)).product();
            let term = prod * weight;
            acc.add(if (n - chosen) % 2 == 1 { -term } else { term });
        }
        // Odometer step over the mixed radix (col_mult[j] + 1).
        let mut j = 0;
        loop {
            if j == counts.len() {
                return acc.value();
            }
            if counts[j] < col_mult[j] {
                counts[j] += 1;
                for (s, &x) in sums.iter_mut().zip(&cols[j]) {
                    *s += x;
                }
                break;
            }
            let back = counts[j] as f64;
            for (s, &x) in sums.iter_mut().zip(&cols[j]) {
                *s -= x * back;
            }
            counts[j] = 0;
            j += 1;
        }
    }
}

/// `|z|^2`.
pub fn abs_squared(z: Complex64) -> f64 {
    z.re * z.re + z.im * z.im
}
