//! Subsystem layouts, partial traces, and factor permutations.

use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::scalar::{czero, Real};

/// Ordered tensor-factor dimensions, slowest-varying first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemLayout {
    factor_dims: Vec<usize>,
}

impl SubsystemLayout {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::InvalidSubsystems("layout has no factors".into()));
        }
        if let Some(&0) = factor_dims.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidSubsystems("zero-dimensional factor".into()));
        }
        Ok(Self { factor_dims })
    }

    /// `n` qubits.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.factor_dims.len()];
        for f in (0..self.factor_dims.len().saturating_sub(1)).rev() {
            s[f] = s[f + 1] * self.factor_dims[f + 1];
        }
        s
    }

    /// Full-space offsets of every multi-index over `factors`, enumerated
    /// in the order-preserving induced layout.
    fn offsets(&self, factors: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(out.len() * self.factor_dims[f]);
            for &base in &out {
                for k in 0..self.factor_dims[f] {
                    next.push(base + k * strides[f]);
                }
            }
            out = next;
        }
        out
    }

    fn check_selection(&self, keep: &[usize]) -> Result<Vec<usize>> {
        if keep.is_empty() {
            return Err(Error::InvalidSubsystems("empty keep set".into()));
        }
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != keep.len() {
            return Err(Error::InvalidSubsystems(format!("duplicate factors in {keep:?}")));
        }
        if let Some(&bad) = sorted.iter().find(|&&f| f >= self.num_factors()) {
            return Err(Error::InvalidSubsystems(format!(
                "factor {bad} out of range for {} factors",
                self.num_factors()
            )));
        }
        Ok(sorted)
    }

    fn check_matrix<T: Real>(&self, m: &CMatrix<T>, ctx: &'static str) -> Result<()> {
        if !m.is_square() || m.rows() != self.total_dim() {
            return Err(mismatch(
                ctx,
                format!("{0}x{0}", self.total_dim()),
                format!("{}x{}", m.rows(), m.cols()),
            ));
        }
        Ok(())
    }

    /// Sub-layout over the given factor indices (order preserved).
    pub fn restrict(&self, factors: &[usize]) -> Result<Self> {
        let sorted = self.check_selection(factors)?;
        Self::new(sorted.iter().map(|&f| self.factor_dims[f]).collect())
    }
}

/// Reduced operator on the `keep` factors; the result uses the induced
/// layout with the kept factors in their original order.
pub fn partial_trace<T: Real>(
    m: &CMatrix<T>,
    layout: &SubsystemLayout,
    keep: &[usize],
) -> Result<CMatrix<T>> {
    layout.check_matrix(m, "partial_trace")?;
    let keep = layout.check_selection(keep)?;
    let traced: Vec<usize> = (0..layout.num_factors()).filter(|f| !keep.contains(f)).collect();
    let kept_off = layout.offsets(&keep);
    let traced_off = layout.offsets(&traced);
    let dk = kept_off.len();
    let mut out = CMatrix::zeros(dk, dk);
    for (a, &ka) in kept_off.iter().enumerate() {
        for (b, &kb) in kept_off.iter().enumerate() {
            let mut s = czero();
            for &t in &traced_off {
                s += m[(ka + t, kb + t)];
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}

/// Flat-index map for reordering factors: new factor `k` is old factor `order[k]`.
fn permutation_map(layout: &SubsystemLayout, order: &[usize]) -> Result<(Vec<usize>, SubsystemLayout)> {
    let n = layout.num_factors();
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidSubsystems(format!("order {order:?} is not a permutation of {n} factors")));
    }
    for &f in order {
        if f >= n || seen[f] {
            return Err(Error::InvalidSubsystems(format!("order {order:?} is not a permutation of {n} factors")));
        }
        seen[f] = true;
    }
    let new_layout = SubsystemLayout::new(order.iter().map(|&f| layout.factor_dims[f]).collect())?;
    Ok((layout.offsets(order), new_layout))
}

/// Reorders tensor factors of a square operator.
pub fn permute_subsystems<T: Real>(
    m: &CMatrix<T>,
    layout: &SubsystemLayout,
    order: &[usize],
) -> Result<(CMatrix<T>, SubsystemLayout)> {
    layout.check_matrix(m, "permute_subsystems")?;
    let (map, new_layout) = permutation_map(layout, order)?;
    let d = map.len();
    Ok((CMatrix::from_fn(d, d, |a, b| m[(map[a], map[b])]), new_layout))
}

/// Reorders tensor factors of a vector.
pub fn permute_vector<T: Real>(
    v: &CVector<T>,
    layout: &SubsystemLayout,
    order: &[usize],
) -> Result<(CVector<T>, SubsystemLayout)> {
    if v.dim() != layout.total_dim() {
        return Err(mismatch("permute_vector", layout.total_dim(), v.dim()));
    }
    let (map, new_layout) = permutation_map(layout, order)?;
    Ok((CVector::new(map.iter().map(|&i| v[i]).collect()), new_layout))
}
