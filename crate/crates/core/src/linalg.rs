//! Dense complex matrices and Haar-random unitaries.

use crate::error::{Result, RnbsError};
use crate::rng::SeededRng;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Index, IndexMut};

/// Maximum entry deviation of `U†U` from the identity accepted as unitary.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Dense row-major complex matrix with at least one row and one column.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(RnbsError::InvalidDimension(format!(
                "matrix shape {rows}x{cols} has an empty side"
            )));
        }
        if entries.len() != rows * cols {
            return Err(RnbsError::InvalidDimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, entries })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut f = f;
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self::from_row_major(rows, cols, entries)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_fn(rows, cols, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |r, c| if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(RnbsError::InvalidDimension("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> ComplexMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self[(r, c)]);
            }
        }
        ComplexMatrix { rows: self.cols, cols: self.rows, entries }
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    fn require_square(&self, op: &str) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(RnbsError::InvalidDimension(format!(
                "{op} needs a square matrix, got {}x{}",
                self.rows, self.cols
            )))
        }
    }

    fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.entries)
    }

    fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        let (rows, cols) = m.shape();
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(m[(r, c)]);
            }
        }
        ComplexMatrix { rows, cols, entries }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.entries[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[r * self.cols + c]
    }
}

/// An `M x M` interferometer matrix; `U[(d, i)]` is the amplitude from input
/// port `i` to output port `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
}

impl UnitaryMatrix {
    /// Wraps `matrix` after checking it is square and unitary within
    /// [`UNITARITY_TOLERANCE`].
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = unitarity_defect(&matrix)?;
        // NaN entries must not slip through the comparison.
        if !(defect <= UNITARITY_TOLERANCE) {
            return Err(RnbsError::NotUnitary { defect, tolerance: UNITARITY_TOLERANCE });
        }
        Ok(UnitaryMatrix { matrix })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Ok(UnitaryMatrix { matrix: ComplexMatrix::identity(dim)? })
    }

    /// The balanced two-port coupler `[[1, 1], [1, -1]] / sqrt(2)`.
    pub fn balanced_coupler() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let matrix = ComplexMatrix::from_row_major(
            2,
            2,
            vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        )
        .expect("2x2 shape");
        UnitaryMatrix { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

impl Index<(usize, usize)> for UnitaryMatrix {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.matrix[idx]
    }
}

/// `m x m` matrix of independent complex entries whose real and imaginary
/// parts are standard normal. Entries are drawn row-major, real part first.
pub fn ginibre_matrix(m: usize, rng: &mut SeededRng) -> Result<ComplexMatrix> {
    if m == 0 {
        return Err(RnbsError::InvalidDimension("Ginibre matrix of order 0".into()));
    }
    ComplexMatrix::from_fn(m, m, |_, _| {
        let (re, im) = rng.normal_pair();
        Complex64::new(re, im)
    })
}

/// Haar-random unitary: QR of a Ginibre matrix, with column `j` of `Q`
/// multiplied by the phase of `R[j, j]` so the factorization is the unique
/// one with a positive real diagonal.
pub fn haar_unitary(m: usize, rng: &mut SeededRng) -> Result<UnitaryMatrix> {
    let z = ginibre_matrix(m, rng)?;
    let qr = z.to_nalgebra().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { Complex64::new(1.0, 0.0) };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::new(ComplexMatrix::from_nalgebra(&q))
}

/// Returns `a† a` for a square matrix.
pub fn mat_mul_adjoint(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square("adjoint product")?;
    ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|k| a[(k, i)].conj() * a[(k, j)]).sum())
}

/// Largest absolute entry of `u† u - I`.
pub fn unitarity_defect(u: &ComplexMatrix) -> Result<f64> {
    let g = mat_mul_adjoint(u)?;
    let n = g.rows();
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = (g[(i, j)] - target).norm();
            if dev.is_nan() {
                return Ok(f64::NAN);
            }
            defect = defect.max(dev);
        }
    }
    Ok(defect)
}
