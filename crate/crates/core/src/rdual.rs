//! Randomized dual states, exact duals, rank-N estimators and variance bounds.
//!
//! States live on `H_b' ⊗ H_a` with the ancilla copy of the output space
//! first. In that layout the duality reads
//! `tr[X(A)B] = d_a·tr[ρ_X (Bᵗ ⊗ A)]`, and each sample contributes
//! `d_a·⟨Ψ|(Bᵗ ⊗ A)|Ψ⟩`. Moving `Bᵗ` off the ancilla through `|φ⁺⟩` puts
//! `B` (not `Bᵗ`) on the system, which is why the variance formulas below
//! use `UAU†·(B ⊗ I_c)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{stinespring_dilate, ChoiMatrix, QuantumChannel};
use crate::error::{mismatch, Error, Result};
use crate::linalg::{
    check_hermitian, hermitian_eig, hs_distance, hs_norm, partial_trace, permute_subsystems,
    trace_distance, SubsystemLayout,
};
use crate::randsrc::{haar_state, SeedSpec};
use crate::stats;
use crate::{ComplexMatrix, StateVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    UnitaryInduced,
    /// Post-selected on the ancilla reference state; unit norm only on average.
    GeneralPostselected,
}

/// `N` dual states on `H_b' ⊗ H_a` and the seed that produced them.
#[derive(Clone, Debug)]
pub struct DualStateEnsemble {
    states: Vec<StateVector>,
    kind: EnsembleKind,
    master_seed: u64,
    d_in: usize,
    d_out: usize,
}

impl DualStateEnsemble {
    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn dim(&self) -> usize {
        self.d_in * self.d_out
    }

    /// `(d_b, d_a)`.
    pub fn layout(&self) -> SubsystemLayout {
        SubsystemLayout::new(vec![self.d_out, self.d_in]).expect("nonzero dims")
    }
}

/// Precomputed linear map `|ψ⟩_env ↦ |Ψ⟩` for one channel.
///
/// For a unitary on `H_b ⊗ H_env` with input `H_a` embedded at ancilla
/// index 0, `Ψ[(b', x)] = s·Σ_e conj(U[b'·d_env + e, x·d_anc])·ψ_e` with
/// `s = √(d_anc/d_b)`; `d_anc = 1` gives the plain unitary-induced case.
#[derive(Clone, Debug)]
pub struct DualSampler {
    map: ComplexMatrix,
    kind: EnsembleKind,
    d_in: usize,
    d_out: usize,
    d_env: usize,
}

impl DualSampler {
    pub fn new(ch: &QuantumChannel) -> Result<Self> {
        match ch {
            QuantumChannel::UnitaryInduced { unitary, d_out, d_env } => Ok(Self::build(
                unitary,
                unitary.rows(),
                1,
                *d_out,
                *d_env,
                EnsembleKind::UnitaryInduced,
            )),
            QuantumChannel::Dilated {
                unitary,
                d_in,
                d_anc,
                d_out,
                d_env,
            } => Ok(Self::build(
                unitary,
                *d_in,
                *d_anc,
                *d_out,
                *d_env,
                EnsembleKind::GeneralPostselected,
            )),
            QuantumChannel::Kraus { .. } => Self::new(&stinespring_dilate(ch)?),
        }
    }

    fn build(u: &ComplexMatrix, d_in: usize, d_anc: usize, d_out: usize, d_env: usize, kind: EnsembleKind) -> Self {
        let s = (d_anc as f64 / d_out as f64).sqrt();
        let map = ComplexMatrix::from_fn(d_out * d_in, d_env, |row, e| {
            let (b, x) = (row / d_in, row % d_in);
            u[(b * d_env + e, x * d_anc)].conj() * s
        });
        Self {
            map,
            kind,
            d_in,
            d_out,
            d_env,
        }
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn d_env(&self) -> usize {
        self.d_env
    }

    pub fn sample(&self, seed: SeedSpec) -> StateVector {
        let psi = haar_state::<f64>(self.d_env, seed).expect("d_env >= 1");
        self.map.mul_vec(&psi)
    }

    /// Samples `0..n` of `master_seed`, generated in parallel and stored in index order.
    pub fn ensemble(&self, n: usize, master_seed: u64) -> Result<DualStateEnsemble> {
        if n == 0 {
            return Err(Error::InsufficientSamples { needed: 1, have: 0 });
        }
        let states = (0..n as u64)
            .into_par_iter()
            .map(|k| self.sample(SeedSpec::new(master_seed, k)))
            .collect();
        Ok(DualStateEnsemble {
            states,
            kind: self.kind,
            master_seed,
            d_in: self.d_in,
            d_out: self.d_out,
        })
    }

    /// Exact first moment `E|Ψ⟩⟨Ψ| = K·K†/d_env`.
    pub fn first_moment(&self) -> ComplexMatrix {
        self.map.matmul(&self.map.dagger()).scale_real(1.0 / self.d_env as f64)
    }

    /// Per-sample values `d_a·⟨Ψ|(Bᵗ ⊗ |a⟩⟨a|)|Ψ⟩` for a pure `A = |a⟩⟨a|`,
    /// without materializing the states (`O(d_b·d_env)` per sample).
    pub fn pure_observable_values(
        &self,
        a: &StateVector,
        b: &ComplexMatrix,
        n: usize,
        master_seed: u64,
    ) -> Result<Vec<f64>> {
        if a.dim() != self.d_in {
            return Err(mismatch("pure observable state", self.d_in, a.dim()));
        }
        check_observable(b, self.d_out, "observable B")?;
        // L[b', e] = Σ_x K[(b', x), e]·conj(a_x)
        let l = ComplexMatrix::from_fn(self.d_out, self.d_env, |bp, e| {
            (0..self.d_in)
                .map(|x| self.map[(bp * self.d_in + x, e)] * a[x].conj())
                .sum()
        });
        Ok(reduced_values(&l, b, self.d_in, n, master_seed))
    }
}

/// Same values as [`DualSampler::pure_observable_values`] for a unitary-induced
/// channel, computed from the evolved state `φ = U|a⟩` alone.
pub fn evolved_state_values(
    phi: &StateVector,
    d_out: usize,
    b: &ComplexMatrix,
    n: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    let d = phi.dim();
    if d_out == 0 || !d.is_multiple_of(d_out) {
        return Err(mismatch("evolved state", format!("a multiple of {d_out}"), d));
    }
    check_observable(b, d_out, "observable B")?;
    let d_env = d / d_out;
    let s = (1.0 / d_out as f64).sqrt();
    let l = ComplexMatrix::from_fn(d_out, d_env, |bp, e| phi[bp * d_env + e].conj() * s);
    Ok(reduced_values(&l, b, d, n, master_seed))
}

fn reduced_values(l: &ComplexMatrix, b: &ComplexMatrix, d_in: usize, n: usize, master_seed: u64) -> Vec<f64> {
    let bt = b.transpose();
    let da = d_in as f64;
    (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let psi = haar_state::<f64>(l.cols(), SeedSpec::new(master_seed, k)).expect("d_env >= 1");
            let w = l.mul_vec(&psi);
            da * w.expectation(&bt).re
        })
        .collect()
}

fn unitary_parts(ch: &QuantumChannel) -> Result<(&ComplexMatrix, usize, usize)> {
    match ch {
        QuantumChannel::UnitaryInduced { unitary, d_out, d_env } => Ok((unitary, *d_out, *d_env)),
        other => Err(Error::WrongVariant {
            expected: "unitary_induced",
            found: other.variant_name(),
        }),
    }
}

fn check_observable(m: &ComplexMatrix, d: usize, ctx: &'static str) -> Result<()> {
    if m.shape() != (d, d) {
        return Err(mismatch(ctx, format!("{d}x{d}"), format!("{}x{}", m.rows(), m.cols())));
    }
    check_hermitian(m, ctx)
}

/// One dual state `(I ⊗ U†)(|φ⁺⟩ ⊗ |ψ⟩)` of a unitary-induced channel.
pub fn sample_dual_state(ch: &QuantumChannel, seed: SeedSpec) -> Result<StateVector> {
    unitary_parts(ch)?;
    Ok(DualSampler::new(ch)?.sample(seed))
}

pub fn unitary_dual_ensemble(ch: &QuantumChannel, n: usize, master_seed: u64) -> Result<DualStateEnsemble> {
    unitary_parts(ch)?;
    DualSampler::new(ch)?.ensemble(n, master_seed)
}

/// Dual ensemble of any channel. Kraus channels are dilated first;
/// unitary-induced channels yield their ordinary unit-norm ensemble.
pub fn general_dual_ensemble(ch: &QuantumChannel, n: usize, master_seed: u64) -> Result<DualStateEnsemble> {
    DualSampler::new(ch)?.ensemble(n, master_seed)
}

/// `(1/d_c)·(I ⊗ U†)(|φ⁺⟩⟨φ⁺| ⊗ I_c)(I ⊗ U)`.
pub fn exact_dual_state(ch: &QuantumChannel) -> Result<ComplexMatrix> {
    unitary_parts(ch)?;
    Ok(DualSampler::new(ch)?.first_moment())
}

/// Exact dual as the global transpose of the Choi matrix, reordered from
/// `(a, b)` to `(b', a)`.
pub fn exact_dual_from_choi(choi: &ChoiMatrix) -> ComplexMatrix {
    let (m, _) = permute_subsystems(&choi.matrix().transpose(), &choi.layout(), &[1, 0])
        .expect("Choi layout matches its matrix");
    m
}

/// Exact dual of any channel.
pub fn exact_dual(ch: &QuantumChannel) -> Result<ComplexMatrix> {
    match ch {
        QuantumChannel::UnitaryInduced { .. } => exact_dual_state(ch),
        _ => {
            let choi = ChoiMatrix::new_unchecked(ch.choi_raw(), ch.d_in(), ch.d_out())?;
            Ok(exact_dual_from_choi(&choi))
        }
    }
}

/// Rank-`N` estimator `(1/N)·Σ|Ψ_k⟩⟨Ψ_k|`.
pub fn estimator(ens: &DualStateEnsemble) -> Result<ComplexMatrix> {
    if ens.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, have: 0 });
    }
    let n = ens.len();
    let s = ComplexMatrix::from_fn(ens.dim(), n, |i, k| ens.states[k][i]);
    Ok(s.matmul(&s.dagger()).scale_real(1.0 / n as f64))
}

/// `d_a·tr[ρ (Bᵗ ⊗ A)]` for `ρ` on `(b', a)`.
pub fn duality_pairing(rho: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let (da, db) = (a.rows(), b.rows());
    if !a.is_square() || !b.is_square() {
        return Err(mismatch("duality_pairing", "square observables", "non-square observable"));
    }
    if rho.shape() != (da * db, da * db) {
        return Err(mismatch(
            "duality_pairing",
            format!("{0}x{0}", da * db),
            format!("{}x{}", rho.rows(), rho.cols()),
        ));
    }
    // Σ ρ[(b,x),(b',x')]·B[b,b']·A[x',x]
    let mut acc = C64::new(0.0, 0.0);
    for bi in 0..db {
        for bj in 0..db {
            let bij = b[(bi, bj)];
            if bij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut inner = C64::new(0.0, 0.0);
            for x in 0..da {
                let row = rho.row(bi * da + x);
                for xp in 0..da {
                    inner += row[bj * da + xp] * a[(xp, x)];
                }
            }
            acc += bij * inner;
        }
    }
    Ok(da as f64 * acc.re)
}

/// Result of a Monte-Carlo estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub estimate: f64,
    /// Unbiased (N−1) sample standard deviation of the per-sample values.
    pub empirical_sigma: f64,
    pub analytic_sigma_bound: Option<f64>,
    /// `empirical_sigma/√N`.
    pub sigma_n: f64,
    pub n: usize,
    /// `3·sigma_n`.
    pub confidence_radius: f64,
}

impl EstimatorReport {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, have: 0 });
        }
        let n = values.len();
        let sigma = stats::sample_std(values);
        let sigma_n = sigma / (n as f64).sqrt();
        Ok(Self {
            estimate: stats::mean(values),
            empirical_sigma: sigma,
            analytic_sigma_bound: None,
            sigma_n,
            n,
            confidence_radius: 3.0 * sigma_n,
        })
    }

    pub fn with_bound(mut self, sigma_bound: f64) -> Self {
        self.analytic_sigma_bound = Some(sigma_bound);
        self
    }
}

/// Per-sample values `d_a·⟨Ψ_k|(Bᵗ ⊗ A)|Ψ_k⟩` in sample order.
pub fn observable_values(ens: &DualStateEnsemble, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<f64>> {
    check_observable(a, ens.d_in, "observable A")?;
    check_observable(b, ens.d_out, "observable B")?;
    let (da, db) = (ens.d_in, ens.d_out);
    let at = a.transpose();
    let bt = b.transpose();
    Ok(ens
        .states
        .par_iter()
        .map(|psi| {
            let m = ComplexMatrix::from_vec(db, da, psi.as_slice().to_vec()).expect("state dimension");
            let y = bt.matmul(&m).matmul(&at);
            let v: C64 = m.as_slice().iter().zip(y.as_slice()).map(|(p, q)| p.conj() * q).sum();
            da as f64 * v.re
        })
        .collect())
}

pub fn estimate_observable(ens: &DualStateEnsemble, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<EstimatorReport> {
    if ens.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, have: 0 });
    }
    EstimatorReport::from_values(&observable_values(ens, a, b)?)
}

/// `Var[X] = tr(XX†)/d − |tr X|²/d²`, variance in the maximally mixed state.
pub fn intrinsic_variance(x: &ComplexMatrix) -> f64 {
    let d = x.rows() as f64;
    x.norm_sqr() / d - x.trace().norm_sqr() / (d * d)
}

/// `E[X] = tr X / d`.
pub fn intrinsic_expectation(x: &ComplexMatrix) -> C64 {
    x.trace() / x.rows() as f64
}

/// `UAU†·(B ⊗ I_c)` on `H_a`.
pub fn lifted_product(ch: &QuantumChannel, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (u, db, dc) = unitary_parts(ch)?;
    check_observable(a, u.rows(), "observable A")?;
    check_observable(b, db, "observable B")?;
    let w = u.matmul(a).matmul(&u.dagger());
    Ok(w.matmul(&b.kron(&ComplexMatrix::identity(dc))))
}

/// `σ² ≤ d_a²·Var[UAU†(B ⊗ I_c)]/(d_c + 1)` for the `d_a`-scaled per-sample value.
pub fn variance_bound(ch: &QuantumChannel, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let x = lifted_product(ch, a, b)?;
    let (_, _, dc) = unitary_parts(ch)?;
    let da = x.rows() as f64;
    Ok(da * da * intrinsic_variance(&x) / (dc as f64 + 1.0))
}

/// Exact per-sample variance `[d_c·tr Y² − (tr Y)²]/(d_c + 1)` with
/// `Y = tr_b[(B ⊗ I_c)UAU†]`.
pub fn exact_sample_variance(ch: &QuantumChannel, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let (_, db, dc) = unitary_parts(ch)?;
    let x = lifted_product(ch, a, b)?;
    let y = partial_trace(&x, &SubsystemLayout::new(vec![db, dc])?, &[1])?;
    let dcf = dc as f64;
    let tr = y.trace().re;
    Ok((dcf * y.trace_product(&y).re - tr * tr) / (dcf + 1.0))
}

/// `μ₁²` with `μ₁ = tr[X(A)B]`; bounds the per-sample variance when `A`
/// is a rank-1 projector and `B ≥ 0`.
pub fn rank1_variance_bound(ch: &QuantumChannel, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    check_rank1_projector(a, ch.d_in())?;
    check_observable(b, ch.d_out(), "observable B")?;
    let min = hermitian_eig(b)?.values[0];
    if min < -1e-10 {
        return Err(Error::NotPositive(min));
    }
    let mu1 = ch.apply(a)?.trace_product(b).re;
    Ok(mu1 * mu1)
}

pub(crate) fn check_rank1_projector(a: &ComplexMatrix, d: usize) -> Result<()> {
    check_observable(a, d, "rank-1 projector")?;
    let idem = hs_norm(&(&a.matmul(a) - a));
    let tr = (a.trace() - C64::new(1.0, 0.0)).norm();
    if idem > 1e-10 || tr > 1e-10 {
        return Err(Error::NotRankOneProjector(format!(
            "‖A² − A‖ = {idem:e}, |tr A − 1| = {tr:e}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistanceReport {
    pub hs_distance: f64,
    pub trace_distance: f64,
    /// `1/√N`.
    pub bound: f64,
}

/// Distances between the ensemble estimator and an exact dual.
pub fn distance_report(ens: &DualStateEnsemble, exact: &ComplexMatrix) -> Result<DistanceReport> {
    let est = estimator(ens)?;
    Ok(DistanceReport {
        hs_distance: hs_distance(&est, exact)?,
        trace_distance: trace_distance(&est, exact)?,
        bound: 1.0 / (ens.len() as f64).sqrt(),
    })
}
