//! Schatten norms and state distances.

use crate::error::{mismatch, Result};
use crate::linalg::{hermitian_eig, CMatrix};
use crate::scalar::Real;

/// Hilbert–Schmidt (Frobenius) norm `√tr(MM†)`.
pub fn hs_norm<T: Real>(m: &CMatrix<T>) -> T {
    m.norm_sqr().sqrt()
}

/// Singular values, descending, from the spectrum of `M†M`.
pub fn singular_values<T: Real>(m: &CMatrix<T>) -> Result<Vec<T>> {
    let gram = m.dagger().matmul(m);
    let mut sv: Vec<T> = hermitian_eig(&gram)?
        .values
        .into_iter()
        .map(|l| l.max(T::zero()).sqrt())
        .collect();
    sv.reverse();
    Ok(sv)
}

/// Trace (nuclear) norm `tr√(M†M)`.
///
/// Hermitian input uses `Σ|λ|` directly; anything else goes through the
/// singular values.
pub fn trace_norm<T: Real>(m: &CMatrix<T>) -> Result<T> {
    let scale = T::one().max(m.max_abs());
    if m.is_square() && m.hermitian_residual() <= T::epsilon() * T::lit(64.0) * scale {
        let herm = CMatrix::from_fn(m.rows(), m.cols(), |i, j| {
            (m[(i, j)] + m[(j, i)].conj()) * T::lit(0.5)
        });
        return Ok(hermitian_eig(&herm)?.values.iter().map(|l| l.abs()).sum());
    }
    Ok(singular_values(m)?.into_iter().sum())
}

fn check_same<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>, ctx: &'static str) -> Result<()> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(mismatch(
            ctx,
            format!("square {}x{}", a.rows(), a.cols()),
            format!("{}x{}", b.rows(), b.cols()),
        ));
    }
    Ok(())
}

/// `‖ρ − σ‖₂`.
pub fn hs_distance<T: Real>(rho: &CMatrix<T>, sigma: &CMatrix<T>) -> Result<T> {
    check_same(rho, sigma, "hs_distance")?;
    Ok(hs_norm(&(rho - sigma)))
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance<T: Real>(rho: &CMatrix<T>, sigma: &CMatrix<T>) -> Result<T> {
    check_same(rho, sigma, "trace_distance")?;
    Ok(trace_norm(&(rho - sigma))? * T::lit(0.5))
}
