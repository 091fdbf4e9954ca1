//! Householder QR and orthonormal completion.

use num_complex::Complex;

use crate::linalg::{CMatrix, CVector};
use crate::scalar::{czero, phase, Real};

/// `A = Q·R` for square `A`; `Q` unitary, `R` upper triangular with
/// (generally complex) diagonal.
pub fn householder_qr<T: Real>(a: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
    assert!(a.is_square(), "householder_qr expects a square matrix");
    let n = a.rows();
    let two = T::lit(2.0);
    let mut r = a.clone();
    let mut q = CMatrix::identity(n);
    let mut v = vec![czero::<T>(); n];
    for k in 0..n.saturating_sub(1) {
        let xnorm: T = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<T>().sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let alpha = -phase(r[(k, k)]) * xnorm;
        for i in k..n {
            v[i] = r[(i, k)];
        }
        v[k] -= alpha;
        let vnorm: T = (k..n).map(|i| v[i].norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in &mut v[k..n] {
            *z /= vnorm;
        }
        // R ← H R
        for j in k..n {
            let s = (k..n).fold(czero::<T>(), |s, i| s + v[i].conj() * r[(i, j)]) * two;
            for i in k..n {
                let upd = v[i] * s;
                r[(i, j)] -= upd;
            }
        }
        // Q ← Q H
        for i in 0..n {
            let s = (k..n).fold(czero::<T>(), |s, j| s + q[(i, j)] * v[j]) * two;
            for j in k..n {
                let upd = s * v[j].conj();
                q[(i, j)] -= upd;
            }
        }
        for i in k + 1..n {
            r[(i, k)] = czero();
        }
    }
    (q, r)
}

/// Extends orthonormal `columns` (in place, by appending) to a full basis of
/// dimension `dim` using the supplied candidate vectors in order.
pub fn complete_basis<T: Real>(
    columns: &mut Vec<CVector<T>>,
    dim: usize,
    candidates: impl IntoIterator<Item = CVector<T>>,
) {
    let accept = T::lit(1e-6);
    for cand in candidates {
        if columns.len() >= dim {
            break;
        }
        let mut w = cand;
        // Two Gram–Schmidt passes.
        for _ in 0..2 {
            for c in columns.iter() {
                let proj: Complex<T> = c.inner(&w);
                for (wi, &ci) in w.as_mut_slice().iter_mut().zip(c.as_slice()) {
                    *wi -= proj * ci;
                }
            }
        }
        let nrm = w.norm();
        if nrm > accept {
            columns.push(w.scale_real(T::one() / nrm));
        }
    }
}
