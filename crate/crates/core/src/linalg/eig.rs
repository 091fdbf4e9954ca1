//! Hermitian eigendecomposition and the matrix exponential built on it.
//!
//! The solver reduces the matrix to a real symmetric tridiagonal form with
//! complex Householder reflections plus a diagonal phase change, then runs
//! implicit QL with Wilkinson shifts (the EISPACK `tql2` scheme), rotating
//! the accumulated complex basis directly.

use num_complex::Complex;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::scalar::{cone, czero, phase, Real};

/// `M = V·diag(values)·V†` with eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    /// Eigenvectors as columns.
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// `V·diag(f(λ))·V†`.
    pub fn map_spectrum(&self, f: impl Fn(T) -> Complex<T>) -> CMatrix<T> {
        let n = self.values.len();
        let fv: Vec<Complex<T>> = self.values.iter().map(|&l| f(l)).collect();
        let scaled = CMatrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * fv[j]);
        scaled.matmul(&self.vectors.dagger())
    }

    pub fn reconstruct(&self) -> CMatrix<T> {
        self.map_spectrum(|l| Complex::new(l, T::zero()))
    }

    pub fn eigenvector(&self, k: usize) -> CVector<T> {
        self.vectors.column(k)
    }

    /// Number of eigenvalues strictly above `tol`.
    pub fn count_above(&self, tol: T) -> usize {
        self.values.iter().filter(|&&l| l > tol).count()
    }
}

pub(crate) fn check_hermitian<T: Real>(m: &CMatrix<T>, ctx: &'static str) -> Result<()> {
    if !m.is_square() {
        return Err(mismatch(ctx, "square matrix", format!("{}x{}", m.rows(), m.cols())));
    }
    let scale = T::one().max(m.max_abs());
    let r = m.hermitian_residual();
    if r > T::hermitian_tol() * scale {
        return Err(Error::NotHermitian(r.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig<T: Real>(m: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    check_hermitian(m, "hermitian_eig")?;
    let n = m.rows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let half = T::lit(0.5);
    let mut a = CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * half);
    let mut q = CMatrix::<T>::identity(n);

    tridiagonalize(&mut a, &mut q);

    let mut d: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut e = vec![T::zero(); n];
    let mut ph = cone::<T>();
    let mut col_phase = vec![ph; n];
    for i in 0..n - 1 {
        let sub = a[(i + 1, i)];
        e[i] = sub.norm();
        ph *= phase(sub);
        col_phase[i + 1] = ph;
    }
    for i in 0..n {
        for (j, &p) in col_phase.iter().enumerate() {
            q[(i, j)] *= p;
        }
    }

    tql2(&mut d, &mut e, &mut q)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// In-place Householder reduction: on return `a` is tridiagonal (complex
/// off-diagonals) and `q` has accumulated the reflections, `A = Q·T·Q†`.
fn tridiagonalize<T: Real>(a: &mut CMatrix<T>, q: &mut CMatrix<T>) {
    let n = a.rows();
    let two = T::lit(2.0);
    let mut v = vec![czero::<T>(); n];
    let mut w = vec![czero::<T>(); n];
    for k in 0..n.saturating_sub(2) {
        let xnorm: T = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<T>().sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = -phase(x0) * xnorm;
        v.iter_mut().for_each(|z| *z = czero());
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm: T = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in &mut v[k + 1..] {
            *z /= vnorm;
        }

        // A ← H A H with H = I − 2vv†:  A − 2 v w† − 2 w v†,  w = Av − (v†Av) v.
        for i in k..n {
            let row = a.row(i);
            w[i] = (k + 1..n).fold(czero(), |s, j| s + row[j] * v[j]);
        }
        let kappa = (k + 1..n).fold(czero::<T>(), |s, i| s + v[i].conj() * w[i]);
        for i in k + 1..n {
            w[i] -= kappa * v[i];
        }
        for i in k..n {
            let (vi, wi) = (v[i], w[i]);
            for j in k..n {
                let upd = vi * w[j].conj() + wi * v[j].conj();
                if upd != czero() {
                    a[(i, j)] -= upd * two;
                }
            }
        }

        // Q ← Q H
        for i in 0..n {
            let qv = (k + 1..n).fold(czero::<T>(), |s, j| s + q[(i, j)] * v[j]);
            if qv == czero() {
                continue;
            }
            for j in k + 1..n {
                let upd = qv * v[j].conj() * two;
                q[(i, j)] -= upd;
            }
        }
    }
}

/// Implicit QL on the symmetric tridiagonal `(d, e)`, `e[i] = T[i+1, i]`,
/// rotating the columns of `z`.
fn tql2<T: Real>(d: &mut [T], e: &mut [T], z: &mut CMatrix<T>) -> Result<()> {
    let n = d.len();
    let rows = z.rows();
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let max_iter = 60 * n.max(1);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::NoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..rows {
                        let zk1 = z[(k, i + 1)];
                        let zk = z[(k, i)];
                        z[(k, i + 1)] = zk * s + zk1 * c;
                        z[(k, i)] = zk * c - zk1 * s;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Cached eigendecomposition of a Hamiltonian, giving `e^{−iHt}` for any `t`.
#[derive(Clone, Debug)]
pub struct Propagator<T> {
    eig: HermitianEigen<T>,
}

impl<T: Real> Propagator<T> {
    pub fn new(h: &CMatrix<T>) -> Result<Self> {
        Ok(Self { eig: hermitian_eig(h)? })
    }

    pub fn eigen(&self) -> &HermitianEigen<T> {
        &self.eig
    }

    pub fn dim(&self) -> usize {
        self.eig.values.len()
    }

    /// `U(t) = V e^{−iΛt} V†`.
    pub fn unitary(&self, t: T) -> CMatrix<T> {
        self.eig
            .map_spectrum(|l| Complex::new(T::zero(), -l * t).exp())
    }

    /// `U(t)·v` in `O(d²)` without forming `U(t)`.
    pub fn evolve(&self, t: T, v: &CVector<T>) -> CVector<T> {
        let vecs = &self.eig.vectors;
        let n = self.dim();
        assert_eq!(v.dim(), n, "evolve dimension");
        let mut coef = vec![czero(); n];
        for i in 0..n {
            let vi = v[i];
            for (k, ck) in coef.iter_mut().enumerate() {
                *ck += vecs[(i, k)].conj() * vi;
            }
        }
        for (k, ck) in coef.iter_mut().enumerate() {
            *ck *= Complex::new(T::zero(), -self.eig.values[k] * t).exp();
        }
        vecs.mul_vec(&CVector::new(coef))
    }
}

/// `e^{−iHt}` for Hermitian `H`.
pub fn herm_expm<T: Real>(h: &CMatrix<T>, t: T) -> Result<CMatrix<T>> {
    Ok(Propagator::new(h)?.unitary(t))
}
