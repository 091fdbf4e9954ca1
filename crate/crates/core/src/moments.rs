//! Out-of-time-order correlators from second moments of dual states.
//!
//! For a unitary-induced channel and `X = UAU†·(B ⊗ I_c)`, the averaged OTOC is
//! `F = Σ_{ij} tr[X (|i⟩⟨j| ⊗ I_c) X (|j⟩⟨i| ⊗ I_c)] = tr Y²` with
//! `Y = tr_b X`. Two independent dual states give the unbiased estimate
//! `d_a²·|⟨Ψ|(Bᵗ ⊗ A)|Ψ'⟩|²`.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::QuantumChannel;
use crate::error::{mismatch, Error, Result};
use crate::linalg::{check_hermitian, partial_trace, SubsystemLayout};
use crate::rdual::{lifted_product, DualStateEnsemble, EstimatorReport};
use crate::{ComplexMatrix, StateVector, C64};

const PROJECTOR_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct OtocSpec {
    a: ComplexMatrix,
    b: ComplexMatrix,
    channel: QuantumChannel,
    projector: bool,
}

impl OtocSpec {
    /// `projector` asserts that `B` is a rank-1 computational-basis projector.
    pub fn new(channel: QuantumChannel, a: ComplexMatrix, b: ComplexMatrix, projector: bool) -> Result<Self> {
        let QuantumChannel::UnitaryInduced { unitary, d_out, .. } = &channel else {
            return Err(Error::WrongVariant {
                expected: "unitary_induced",
                found: channel.variant_name(),
            });
        };
        let (da, db) = (unitary.rows(), *d_out);
        if a.shape() != (da, da) {
            return Err(mismatch("OTOC observable A", format!("{da}x{da}"), format!("{}x{}", a.rows(), a.cols())));
        }
        if b.shape() != (db, db) {
            return Err(mismatch("OTOC observable B", format!("{db}x{db}"), format!("{}x{}", b.rows(), b.cols())));
        }
        check_hermitian(&a, "OTOC observable A")?;
        check_hermitian(&b, "OTOC observable B")?;
        if projector {
            check_diagonal_projector(&b)?;
        }
        Ok(Self { a, b, channel, projector })
    }

    /// Like [`OtocSpec::new`], setting the projector flag when `B` qualifies.
    pub fn detect(channel: QuantumChannel, a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        let projector = check_diagonal_projector(&b).is_ok();
        Self::new(channel, a, b, projector)
    }

    pub fn is_projector(&self) -> bool {
        self.projector
    }

    pub fn channel(&self) -> &QuantumChannel {
        &self.channel
    }

    /// Per-pair value `d_a²·|⟨Ψ|(Bᵗ ⊗ A)|Ψ'⟩|²`.
    fn pair_value(&self, at: &ComplexMatrix, bt: &ComplexMatrix, psi: &StateVector, phi: &StateVector) -> f64 {
        let (da, db) = (self.a.rows(), self.b.rows());
        let m = ComplexMatrix::from_vec(db, da, phi.as_slice().to_vec()).expect("state dimension");
        let y = bt.matmul(&m).matmul(at);
        let v: C64 = psi.as_slice().iter().zip(y.as_slice()).map(|(p, q)| p.conj() * q).sum();
        (da * da) as f64 * v.norm_sqr()
    }

    fn check_ensemble(&self, ens: &DualStateEnsemble) -> Result<()> {
        if (ens.d_in(), ens.d_out()) != (self.a.rows(), self.b.rows()) {
            return Err(mismatch(
                "OTOC ensemble",
                format!("d_a={}, d_b={}", self.a.rows(), self.b.rows()),
                format!("d_a={}, d_b={}", ens.d_in(), ens.d_out()),
            ));
        }
        if ens.len() < 2 {
            return Err(Error::InsufficientSamples { needed: 2, have: ens.len() });
        }
        Ok(())
    }
}

fn check_diagonal_projector(b: &ComplexMatrix) -> Result<()> {
    let d = b.rows();
    let off = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|ij| b[ij].norm())
        .fold(0.0, f64::max);
    let idem = (0..d).map(|i| (b[(i, i)] * b[(i, i)] - b[(i, i)]).norm()).fold(0.0, f64::max);
    let tr = (b.trace() - C64::new(1.0, 0.0)).norm();
    if off > PROJECTOR_TOL || idem > PROJECTOR_TOL || tr > PROJECTOR_TOL {
        return Err(Error::NotRankOneProjector(format!(
            "B must be a diagonal rank-1 projector (off-diagonal {off:e}, idempotency {idem:e}, trace error {tr:e})"
        )));
    }
    Ok(())
}

/// Estimate from disjoint consecutive pairs `(2k, 2k+1)`; `n` in the report
/// counts pairs.
pub fn otoc_estimate(spec: &OtocSpec, ens: &DualStateEnsemble) -> Result<EstimatorReport> {
    if !spec.projector {
        return Err(Error::NotRankOneProjector("the pair estimator requires the projector flag".into()));
    }
    spec.check_ensemble(ens)?;
    let (at, bt) = (spec.a.transpose(), spec.b.transpose());
    let states = ens.states();
    let values: Vec<f64> = (0..states.len() / 2)
        .into_par_iter()
        .map(|k| spec.pair_value(&at, &bt, &states[2 * k], &states[2 * k + 1]))
        .collect();
    EstimatorReport::from_values(&values)
}

/// Mean over all `N(N−1)/2` distinct pairs; unbiased but the pairs are not
/// independent, so no spread is reported.
pub fn otoc_all_pairs(spec: &OtocSpec, ens: &DualStateEnsemble) -> Result<f64> {
    spec.check_ensemble(ens)?;
    let (at, bt) = (spec.a.transpose(), spec.b.transpose());
    let states = ens.states();
    let n = states.len();
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            (k + 1..n)
                .map(|l| spec.pair_value(&at, &bt, &states[k], &states[l]))
                .sum()
        })
        .collect();
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(row_sums.iter().sum::<f64>() / pairs)
}

/// Exact `F = tr Y²`, `Y = tr_b[UAU†(B ⊗ I_c)]`. In the projector case this
/// equals `tr[(UAU†·(Π_B ⊗ I_c))²]`, which is evaluated directly.
pub fn otoc_exact(spec: &OtocSpec) -> Result<f64> {
    let x = lifted_product(&spec.channel, &spec.a, &spec.b)?;
    if spec.projector {
        return Ok(x.trace_product(&x).re);
    }
    let (db, dc) = (spec.b.rows(), x.rows() / spec.b.rows());
    let y = partial_trace(&x, &SubsystemLayout::new(vec![db, dc])?, &[1])?;
    Ok(y.trace_product(&y).re)
}

#[derive(Clone, Debug, Serialize)]
pub struct OtocReport {
    pub estimate: f64,
    pub exact: Option<f64>,
    pub sigma: f64,
    pub sigma_n: f64,
    pub pairs: usize,
}

impl OtocReport {
    pub fn new(report: &EstimatorReport, exact: Option<f64>) -> Self {
        Self {
            estimate: report.estimate,
            exact,
            sigma: report.empirical_sigma,
            sigma_n: report.sigma_n,
            pairs: report.n,
        }
    }
}
