//! Dense row-major complex matrices and vectors.
//!
//! Tensor products follow one convention everywhere: the left factor is the
//! slowest-varying index, so `(A ⊗ B)[i·rB + k, j·cB + l] = A[i,j]·B[k,l]`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{mismatch, Result};
use crate::scalar::{cone, czero, Real};

/// Work (multiply-adds) above which matrix products are split across threads.
const PAR_WORK: usize = 1 << 18;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = cone();
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(mismatch("CMatrix::from_vec", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(mismatch("CMatrix::from_rows (row length)", ncols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols: ncols,
            data,
        })
    }

    /// Real-valued matrix from row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[T]) -> Result<Self> {
        Self::from_vec(
            rows,
            cols,
            entries.iter().map(|&x| Complex::new(x, T::zero())).collect(),
        )
    }

    pub fn from_diag(diag: &[Complex<T>]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> CVector<T> {
        CVector::new((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn set_column(&mut self, j: usize, v: &CVector<T>) {
        assert_eq!(v.dim(), self.rows, "column length");
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .fold(czero(), |a, b| a + b)
    }

    /// Entrywise transpose without conjugation.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self += s·other`, shapes must match.
    pub fn add_scaled(&mut self, s: Complex<T>, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "add_scaled shape");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Kronecker product, left factor slowest.
    pub fn kron(&self, other: &Self) -> Self {
        let (ra, ca) = self.shape();
        let (rb, cb) = other.shape();
        let mut out = Self::zeros(ra * rb, ca * cb);
        let oc = ca * cb;
        for i in 0..ra {
            for j in 0..ca {
                let a = self.data[i * ca + j];
                if a == czero() {
                    continue;
                }
                for k in 0..rb {
                    let dst = (i * rb + k) * oc + j * cb;
                    let src = &other.data[k * cb..(k + 1) * cb];
                    for (o, &b) in out.data[dst..dst + cb].iter_mut().zip(src) {
                        *o = a * b;
                    }
                }
            }
        }
        out
    }

    /// Matrix product. Panics if the inner dimensions differ.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul inner dimension {}x{} · {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![czero::<T>(); m * n];
        if n == 0 || m == 0 {
            return Self { rows: m, cols: n, data: out };
        }
        let kernel = |(i, orow): (usize, &mut [Complex<T>])| {
            let arow = &self.data[i * k..(i + 1) * k];
            for (p, &a) in arow.iter().enumerate() {
                if a == czero() {
                    continue;
                }
                let brow = &other.data[p * n..(p + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        };
        if m * k * n >= PAR_WORK && m > 1 {
            out.par_chunks_mut(n).enumerate().for_each(kernel);
        } else {
            out.chunks_mut(n).enumerate().for_each(kernel);
        }
        Self { rows: m, cols: n, data: out }
    }

    pub fn mul_vec(&self, v: &CVector<T>) -> CVector<T> {
        assert_eq!(self.cols, v.dim(), "mul_vec dimension");
        CVector::new(
            (0..self.rows)
                .map(|i| {
                    self.row(i)
                        .iter()
                        .zip(v.as_slice())
                        .fold(czero(), |acc, (&a, &b)| acc + a * b)
                })
                .collect(),
        )
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.cols, other.rows, "trace_product shape");
        assert_eq!(self.rows, other.cols, "trace_product shape");
        let mut acc = czero();
        for i in 0..self.rows {
            for (p, &a) in self.row(i).iter().enumerate() {
                acc += a * other.data[p * other.cols + i];
            }
        }
        acc
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// `max |M − M†|` entrywise; infinite for non-square input.
    pub fn hermitian_residual(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let n = self.rows;
        let mut r = T::zero();
        for i in 0..n {
            for j in i..n {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermitian_residual() <= tol
    }

    /// Sum of squared entry moduli, `tr(M M†)`.
    pub fn norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Outer product `|v⟩⟨w|`.
    pub fn outer(v: &CVector<T>, w: &CVector<T>) -> Self {
        Self::from_fn(v.dim(), w.dim(), |i, j| v[i] * w[j].conj())
    }

    /// Convert precision, e.g. `f64` to `f32`.
    pub fn cast<U: Real>(&self) -> CMatrix<U> {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| {
                    Complex::new(
                        U::from(z.re).unwrap_or_else(U::nan),
                        U::from(z.im).unwrap_or_else(U::nan),
                    )
                })
                .collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: Self) -> CMatrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: Self) -> CMatrix<T> {
        assert_eq!(self.shape(), rhs.shape(), "add shape");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: Self) -> CMatrix<T> {
        assert_eq!(self.shape(), rhs.shape(), "sub shape");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Real> Neg for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn neg(self) -> CMatrix<T> {
        self.scale_real(-T::one())
    }
}

/// Dense complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector<T> {
    data: Vec<Complex<T>>,
}

impl<T: Real> CVector<T> {
    pub fn new(data: Vec<Complex<T>>) -> Self {
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![czero(); dim],
        }
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = cone();
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Whether `|‖v‖ − 1| ≤ tol`.
    pub fn is_normalized(&self, tol: T) -> bool {
        (self.norm() - T::one()).abs() <= tol
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale_real(T::one() / n)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::new(self.data.iter().map(|&z| z * s).collect())
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self::new(self.data.iter().map(|&z| z * s).collect())
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "inner dimension");
        self.data
            .iter()
            .zip(&other.data)
            .fold(czero(), |acc, (&a, &b)| acc + a.conj() * b)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for &a in &self.data {
            out.extend(other.data.iter().map(|&b| a * b));
        }
        Self::new(out)
    }

    /// `|v⟩⟨v|`.
    pub fn projector(&self) -> CMatrix<T> {
        CMatrix::outer(self, self)
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, m: &CMatrix<T>) -> Complex<T> {
        self.inner(&m.mul_vec(self))
    }

    /// Reshape into a `rows × (dim/rows)` matrix (row-major, left factor = row).
    pub fn reshape(&self, rows: usize) -> Result<CMatrix<T>> {
        if rows == 0 || !self.dim().is_multiple_of(rows) {
            return Err(mismatch("CVector::reshape", format!("multiple of {rows}"), self.dim()));
        }
        CMatrix::from_vec(rows, self.dim() / rows, self.data.clone())
    }
}

impl<T> Index<usize> for CVector<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, i: usize) -> &Complex<T> {
        &self.data[i]
    }
}

impl<T> IndexMut<usize> for CVector<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut Complex<T> {
        &mut self.data[i]
    }
}

/// Pauli matrices `(σ^x, σ^y, σ^z)`.
pub fn paulis<T: Real>() -> [CMatrix<T>; 3] {
    let o = T::one();
    let z = T::zero();
    let c = |re, im| Complex::new(re, im);
    [
        CMatrix::from_vec(2, 2, vec![c(z, z), c(o, z), c(o, z), c(z, z)]).unwrap(),
        CMatrix::from_vec(2, 2, vec![c(z, z), c(z, -o), c(z, o), c(z, z)]).unwrap(),
        CMatrix::from_vec(2, 2, vec![c(o, z), c(z, z), c(z, z), c(-o, z)]).unwrap(),
    ]
}

/// Maximally entangled state `Σᵢ|ii⟩/√d` on a `(d, d)` layout.
pub fn max_entangled_state<T: Real>(d: usize) -> Result<CVector<T>> {
    if d == 0 {
        return Err(crate::error::Error::DimensionTooSmall { min: 1, got: 0 });
    }
    let amp = T::one() / T::from_usize(d).unwrap().sqrt();
    let mut v = CVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = Complex::new(amp, T::zero());
    }
    Ok(v)
}
