//! Small dense complex vectors and matrices, plus the solvers the
//! estimators need. Everything here targets pilot-length systems (P <= 16),
//! so direct Cholesky is used throughout; no attempt at large-scale work.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance for the Hermitian-symmetry check in [`solve_hpd`].
pub const HERMITIAN_RTOL: f64 = 1e-12;

/// Fixed-length complex vector. Length is immutable and always >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CVec(Vec<Complex64>);

impl CVec {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParam("vector length must be >= 1".into()));
        }
        Ok(CVec(entries))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> Complex64) -> Result<Self> {
        Self::new((0..n).map(f).collect())
    }

    /// All-zero vector of length `n`.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_fn(n, |_| Complex64::new(0.0, 0.0))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    /// Sum of |x_i|^2 (the pilot energy x^H x, as a real number).
    pub fn energy(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }
}

impl std::ops::Index<usize> for CVec {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// Row-major dense complex matrix. Dimensions are immutable and >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    data: Vec<Complex64>,
    rows: usize,
    cols: usize,
}

impl CMat {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParam(
                "matrix dimensions must be >= 1".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "CMat::new",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(CMat { data, rows, cols })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    /// `A x`, accumulated row by row in column order.
    pub fn matvec(&self, x: &CVec) -> Result<CVec> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.cols,
                got: x.len(),
            });
        }
        CVec::from_fn(self.rows, |r| {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..self.cols {
                acc += self.get(r, c) * x[c];
            }
            acc
        })
    }

    /// True when `A = A^H` within `rtol` relative to the largest entry.
    pub fn is_hermitian(&self, rtol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self
            .data
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for r in 0..self.rows {
            for c in r..self.cols {
                if (self.get(r, c) - self.get(c, r).conj()).norm() > rtol * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// Unconjugated inner product `sum_i a_i b_i` (the transpose product a^T b).
pub fn transpose_inner(a: &CVec, b: &CVec) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "transpose_inner",
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    Ok(acc)
}

/// Conjugated inner product `sum_i conj(a_i) b_i` (the Hermitian product a^H b).
pub fn hermitian_inner(a: &CVec, b: &CVec) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "hermitian_inner",
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.len() {
        acc += a[i].conj() * b[i];
    }
    Ok(acc)
}

/// Solve `A x = y` for Hermitian positive definite `A` via Cholesky,
/// without forming the inverse. Non-Hermitian or non-PD inputs are
/// reported as distinct errors.
pub fn solve_hpd(a: &CMat, y: &CVec) -> Result<CVec> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_hpd (square)",
            expected: n,
            got: a.cols(),
        });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_hpd (rhs)",
            expected: n,
            got: y.len(),
        });
    }
    if !a.is_hermitian(HERMITIAN_RTOL) {
        return Err(Error::NotHermitian { tol: HERMITIAN_RTOL });
    }

    // Lower-triangular factor L with A = L L^H.
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a.get(j, j).re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !d.is_finite() || d <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[j * n + j] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / ljj;
        }
    }

    // Forward substitution: L z = y.
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }

    // Back substitution: L^H x = z.
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[k * n + i].conj() * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    CVec::new(x)
}

/// Relative distance between the two routes of the push-through identity
/// `X^H (s_h X X^H + s I)^{-1} = (s_h X^H X + s I)^{-1} X^H`.
///
/// The left side goes through the full P x P Cholesky solve, the right side
/// through the scalar denominator; the return value is
/// `||LHS - RHS|| / ||RHS||`. Contract: <= 1e-12 for P <= 16.
pub fn push_through_residual(x: &CVec, sigma_h2: f64, sigma2: f64) -> Result<f64> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "noise variance must be a finite positive real, got {sigma2}"
        )));
    }
    if !sigma_h2.is_finite() || sigma_h2 < 0.0 {
        return Err(Error::InvalidParam(format!(
            "channel variance must be a finite nonnegative real, got {sigma_h2}"
        )));
    }
    let p = x.len();

    // Matrix route: X^H A^{-1} = (A^{-1} X)^H with A = s_h X X^H + s I.
    let a = CMat::from_fn(p, p, |r, c| {
        let mut v = x[r] * x[c].conj() * sigma_h2;
        if r == c {
            v += sigma2;
        }
        v
    })?;
    let z = solve_hpd(&a, x)?;

    // Scalar route: conj(x_i) / (s_h x^H x + s).
    let d = sigma_h2 * x.energy() + sigma2;

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..p {
        let lhs = z[i].conj();
        let rhs = x[i].conj() / d;
        num += (lhs - rhs).norm_sqr();
        den += rhs.norm_sqr();
    }
    if den == 0.0 {
        // x = 0: both routes are identically zero.
        return Ok(0.0);
    }
    Ok((num / den).sqrt())
}
