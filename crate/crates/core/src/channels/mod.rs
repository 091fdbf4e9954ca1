//! Quantum channels: Kraus, unitary-induced and dilated representations,
//! Choi matrices, CPTP diagnostics and Stinespring dilation.
//!
//! Layout conventions (left factor slowest):
//! - unitary-induced output space `H_a = H_b ⊗ H_c`, output `H_b` leading;
//! - dilated input `H_a ⊗ H_anc` with the ancilla reference `|0⟩` the first
//!   basis vector of the trailing factor, output `H_b ⊗ H_env`;
//! - Choi matrix on `(input copy, output)`.

pub mod json;

use serde::Serialize;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{
    complete_basis, hermitian_eig, hs_norm, partial_trace, CVector, SubsystemLayout,
};
use crate::randsrc::{haar_state, SeedSpec};
use crate::{ComplexMatrix, StateVector, C64};

/// Trace-preservation and unitarity tolerance (HS norm).
pub const CPTP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum QuantumChannel {
    /// `ρ ↦ Σ M_k ρ M_k†`, each `M_k` is `d_out × d_in`.
    Kraus {
        operators: Vec<ComplexMatrix>,
        d_in: usize,
        d_out: usize,
    },
    /// `ρ ↦ tr_c[UρU†]` with `H_a = H_b ⊗ H_c`.
    UnitaryInduced {
        unitary: ComplexMatrix,
        d_out: usize,
        d_env: usize,
    },
    /// `ρ ↦ tr_env[U(ρ ⊗ |0⟩⟨0|)U†]`, `d_in·d_anc = d_out·d_env = dim U`.
    Dilated {
        unitary: ComplexMatrix,
        d_in: usize,
        d_anc: usize,
        d_out: usize,
        d_env: usize,
    },
}

fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    hs_norm(&(&u.dagger().matmul(u) - &ComplexMatrix::identity(u.rows())))
}

fn tp_residual(ops: &[ComplexMatrix], d_in: usize) -> f64 {
    let mut acc = ComplexMatrix::zeros(d_in, d_in);
    for m in ops {
        acc = &acc + &m.dagger().matmul(m);
    }
    hs_norm(&(&acc - &ComplexMatrix::identity(d_in)))
}

impl QuantumChannel {
    /// Kraus channel, validated for trace preservation.
    pub fn kraus(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let ch = Self::kraus_unchecked(operators)?;
        if let Self::Kraus { operators, d_in, .. } = &ch {
            let r = tp_residual(operators, *d_in);
            if r > CPTP_TOL {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operators are not trace preserving (residual {r:e})"
                )));
            }
        }
        Ok(ch)
    }

    /// Kraus channel with shape checks only; use [`validate`] to inspect it.
    pub fn kraus_unchecked(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let (d_out, d_in) = first.shape();
        if d_in == 0 || d_out == 0 {
            return Err(Error::InvalidChannel("empty Kraus operator".into()));
        }
        if let Some(bad) = operators.iter().find(|m| m.shape() != (d_out, d_in)) {
            return Err(mismatch(
                "Kraus operator shape",
                format!("{d_out}x{d_in}"),
                format!("{}x{}", bad.rows(), bad.cols()),
            ));
        }
        Ok(Self::Kraus {
            operators,
            d_in,
            d_out,
        })
    }

    /// Channel of a unitary on `H_b ⊗ H_c` followed by tracing out `H_c`.
    pub fn unitary_induced(unitary: ComplexMatrix, d_out: usize) -> Result<Self> {
        let ch = Self::unitary_induced_unchecked(unitary, d_out)?;
        let r = unitarity_residual(ch.unitary().unwrap());
        if r > CPTP_TOL {
            return Err(Error::InvalidChannel(format!("matrix is not unitary (residual {r:e})")));
        }
        Ok(ch)
    }

    pub fn unitary_induced_unchecked(unitary: ComplexMatrix, d_out: usize) -> Result<Self> {
        let d = unitary.rows();
        if !unitary.is_square() || d == 0 {
            return Err(mismatch("unitary", "non-empty square matrix", format!("{}x{}", d, unitary.cols())));
        }
        if d_out == 0 || !d.is_multiple_of(d_out) {
            return Err(Error::InvalidChannel(format!(
                "output dimension {d_out} does not divide unitary dimension {d}"
            )));
        }
        Ok(Self::UnitaryInduced {
            unitary,
            d_out,
            d_env: d / d_out,
        })
    }

    /// Plain unitary channel `ρ ↦ UρU†`.
    pub fn unitary_channel(unitary: ComplexMatrix) -> Result<Self> {
        let d = unitary.rows();
        Self::unitary_induced(unitary, d)
    }

    /// Dilated channel with input `H_a` (first factor of the unitary's input
    /// space) and output `H_b` (first factor of its output space).
    pub fn dilated(unitary: ComplexMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        let ch = Self::dilated_unchecked(unitary, d_in, d_out)?;
        let r = unitarity_residual(ch.unitary().unwrap());
        if r > CPTP_TOL {
            return Err(Error::InvalidChannel(format!("matrix is not unitary (residual {r:e})")));
        }
        Ok(ch)
    }

    pub fn dilated_unchecked(unitary: ComplexMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        let d = unitary.rows();
        if !unitary.is_square() || d == 0 {
            return Err(mismatch("unitary", "non-empty square matrix", format!("{}x{}", d, unitary.cols())));
        }
        if d_in == 0 || d_out == 0 || !d.is_multiple_of(d_in) || !d.is_multiple_of(d_out) {
            return Err(Error::InvalidChannel(format!(
                "input {d_in} and output {d_out} must both divide unitary dimension {d}"
            )));
        }
        Ok(Self::Dilated {
            unitary,
            d_in,
            d_anc: d / d_in,
            d_out,
            d_env: d / d_out,
        })
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::kraus(vec![ComplexMatrix::identity(d)])
    }

    /// Qubit depolarizing channel `ρ ↦ (1−p)ρ + p·I/2`; `p = 1` is fully depolarizing.
    pub fn depolarizing_qubit(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidChannel(format!("depolarizing probability {p} outside [0, 1]")));
        }
        let [x, y, z] = crate::linalg::paulis::<f64>();
        let mut ops = vec![ComplexMatrix::identity(2).scale_real((1.0 - 0.75 * p).sqrt())];
        for s in [x, y, z] {
            ops.push(s.scale_real((p / 4.0).sqrt()));
        }
        Self::kraus(ops)
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidChannel(format!("damping rate {gamma} outside [0, 1]")));
        }
        let k0 = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()])?;
        let k1 = ComplexMatrix::from_real(2, 2, &[0.0, gamma.sqrt(), 0.0, 0.0])?;
        Self::kraus(vec![k0, k1])
    }

    pub fn d_in(&self) -> usize {
        match self {
            Self::Kraus { d_in, .. } | Self::Dilated { d_in, .. } => *d_in,
            Self::UnitaryInduced { unitary, .. } => unitary.rows(),
        }
    }

    pub fn d_out(&self) -> usize {
        match self {
            Self::Kraus { d_out, .. }
            | Self::UnitaryInduced { d_out, .. }
            | Self::Dilated { d_out, .. } => *d_out,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Kraus { .. } => "kraus",
            Self::UnitaryInduced { .. } => "unitary_induced",
            Self::Dilated { .. } => "dilated",
        }
    }

    pub fn unitary(&self) -> Option<&ComplexMatrix> {
        match self {
            Self::Kraus { .. } => None,
            Self::UnitaryInduced { unitary, .. } | Self::Dilated { unitary, .. } => Some(unitary),
        }
    }

    /// Kraus operators of any representation. Unitary-induced:
    /// `M_k = (I_b ⊗ ⟨k|_c)U`; dilated: `M_k = (I_b ⊗ ⟨k|_env)U(I_a ⊗ |0⟩)`.
    pub fn to_kraus(&self) -> Vec<ComplexMatrix> {
        match self {
            Self::Kraus { operators, .. } => operators.clone(),
            Self::UnitaryInduced { unitary, d_out, d_env } => (0..*d_env)
                .map(|k| {
                    ComplexMatrix::from_fn(*d_out, unitary.cols(), |r, x| unitary[(r * d_env + k, x)])
                })
                .collect(),
            Self::Dilated {
                unitary,
                d_in,
                d_anc,
                d_out,
                d_env,
            } => (0..*d_env)
                .map(|k| ComplexMatrix::from_fn(*d_out, *d_in, |r, x| unitary[(r * d_env + k, x * d_anc)]))
                .collect(),
        }
    }

    /// Channel output for a `d_in × d_in` operator.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d_in = self.d_in();
        if rho.shape() != (d_in, d_in) {
            return Err(mismatch("apply", format!("{d_in}x{d_in}"), format!("{}x{}", rho.rows(), rho.cols())));
        }
        match self {
            Self::Kraus { operators, d_out, .. } => {
                let mut out = ComplexMatrix::zeros(*d_out, *d_out);
                for m in operators {
                    out = &out + &m.matmul(rho).matmul(&m.dagger());
                }
                Ok(out)
            }
            Self::UnitaryInduced { unitary, d_out, d_env } => {
                let full = unitary.matmul(rho).matmul(&unitary.dagger());
                partial_trace(&full, &SubsystemLayout::new(vec![*d_out, *d_env])?, &[0])
            }
            Self::Dilated {
                unitary,
                d_anc,
                d_out,
                d_env,
                ..
            } => {
                let anc0 = StateVector::basis(*d_anc, 0).projector();
                let full = unitary.matmul(&rho.kron(&anc0)).matmul(&unitary.dagger());
                partial_trace(&full, &SubsystemLayout::new(vec![*d_out, *d_env])?, &[0])
            }
        }
    }

    /// Choi matrix `(1/d_a)·Σ_k |m_k⟩⟨m_k|`, `|m_k⟩ = Σ_i |i⟩ ⊗ M_k|i⟩`, without validation.
    pub fn choi_raw(&self) -> ComplexMatrix {
        let (d_in, d_out) = (self.d_in(), self.d_out());
        let ops = self.to_kraus();
        let w = ComplexMatrix::from_fn(d_in * d_out, ops.len(), |row, k| {
            let (i, r) = (row / d_out, row % d_out);
            ops[k][(r, i)]
        });
        w.matmul(&w.dagger()).scale_real(1.0 / d_in as f64)
    }

    /// Validated Choi matrix `σ_X = (I ⊗ X)(|φ⁺⟩⟨φ⁺|)`.
    pub fn choi_matrix(&self) -> Result<ChoiMatrix> {
        ChoiMatrix::new(self.choi_raw(), self.d_in(), self.d_out())
    }

    /// Number of Choi eigenvalues above `tol`.
    pub fn kraus_rank(&self, tol: f64) -> Result<usize> {
        Ok(hermitian_eig(&self.choi_raw())?.count_above(tol))
    }
}

/// Choi matrix on the `(input copy, output)` layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    matrix: ComplexMatrix,
    d_in: usize,
    d_out: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChoiDiagnostics {
    pub hermitian_residual: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    /// `‖tr_out σ − I/d_a‖₂`.
    pub marginal_residual: f64,
    pub spectrum: Vec<f64>,
}

impl ChoiDiagnostics {
    pub fn passed(&self) -> bool {
        self.hermitian_residual <= 1e-10
            && self.trace_error <= CPTP_TOL
            && self.min_eigenvalue >= -CPTP_TOL
            && self.marginal_residual <= CPTP_TOL
    }
}

impl ChoiMatrix {
    /// Checks Hermiticity, PSD, unit trace and the input marginal `I/d_a`.
    pub fn new(matrix: ComplexMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        let choi = Self::new_unchecked(matrix, d_in, d_out)?;
        let diag = choi.diagnostics()?;
        if diag.hermitian_residual > 1e-10 {
            return Err(Error::NotHermitian(diag.hermitian_residual));
        }
        if diag.min_eigenvalue < -CPTP_TOL {
            return Err(Error::NotPositive(diag.min_eigenvalue));
        }
        if diag.trace_error > CPTP_TOL || diag.marginal_residual > CPTP_TOL {
            return Err(Error::InvalidChannel(format!(
                "Choi matrix is not trace preserving (trace error {:e}, marginal residual {:e})",
                diag.trace_error, diag.marginal_residual
            )));
        }
        Ok(choi)
    }

    pub fn new_unchecked(matrix: ComplexMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        let d = d_in * d_out;
        if d == 0 || matrix.shape() != (d, d) {
            return Err(mismatch("ChoiMatrix", format!("{d}x{d}"), format!("{}x{}", matrix.rows(), matrix.cols())));
        }
        Ok(Self { matrix, d_in, d_out })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn layout(&self) -> SubsystemLayout {
        SubsystemLayout::new(vec![self.d_in, self.d_out]).expect("nonzero dims")
    }

    pub fn diagnostics(&self) -> Result<ChoiDiagnostics> {
        let m = &self.matrix;
        let hermitian_residual = m.hermitian_residual();
        let sym = ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        let spectrum = hermitian_eig(&sym)?.values;
        let marginal = partial_trace(m, &self.layout(), &[0])?;
        let target = ComplexMatrix::identity(self.d_in).scale_real(1.0 / self.d_in as f64);
        Ok(ChoiDiagnostics {
            hermitian_residual,
            trace_error: (m.trace() - C64::new(1.0, 0.0)).norm(),
            min_eigenvalue: spectrum.first().copied().unwrap_or(0.0),
            marginal_residual: hs_norm(&(&marginal - &target)),
            spectrum,
        })
    }
}

fn check_square(m: &ComplexMatrix, d: usize, ctx: &'static str) -> Result<()> {
    if m.shape() != (d, d) {
        return Err(mismatch(ctx, format!("{d}x{d}"), format!("{}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

/// `d_a·tr[σ (Aᵗ ⊗ B)]`, which equals `tr[X(A)B]`.
pub fn choi_pairing(choi: &ChoiMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let (da, db) = (choi.d_in, choi.d_out);
    check_square(a, da, "choi_pairing (A)")?;
    check_square(b, db, "choi_pairing (B)")?;
    let s = &choi.matrix;
    // Σ σ[(i,r),(j,s)] · Aᵗ[j,i] · B[s,r]
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..da {
        for j in 0..da {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut inner = C64::new(0.0, 0.0);
            for r in 0..db {
                for sidx in 0..db {
                    inner += s[(i * db + r, j * db + sidx)] * b[(sidx, r)];
                }
            }
            acc += aij * inner;
        }
    }
    Ok(da as f64 * acc.re)
}

/// Default eigenvalue cut for [`kraus_from_choi`]: `1e-10·d_a`.
pub fn default_kraus_tol(d_in: usize) -> f64 {
    1e-10 * d_in as f64
}

/// Kraus form from the spectrum of `d_a·σ`: each eigenpair `(λ, v)` above
/// `tol` gives `M[r, i] = √λ·v[i·d_b + r]`.
pub fn kraus_from_choi(choi: &ChoiMatrix, tol: f64) -> Result<QuantumChannel> {
    let (da, db) = (choi.d_in, choi.d_out);
    let eig = hermitian_eig(&choi.matrix.scale_real(da as f64))?;
    if let Some(&min) = eig.values.first() {
        if min < -tol {
            return Err(Error::NotPositive(min));
        }
    }
    let ops: Vec<ComplexMatrix> = eig
        .values
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &l)| l > tol)
        .map(|(k, &l)| {
            let s = l.sqrt();
            ComplexMatrix::from_fn(db, da, |r, i| eig.vectors[(i * db + r, k)] * s)
        })
        .collect();
    QuantumChannel::kraus(ops)
}

/// How the unused columns of a Stinespring unitary are filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Completion {
    /// Gram–Schmidt against the computational basis (deterministic).
    Basis,
    /// Gram–Schmidt against Haar-random vectors from the given seed.
    Random(u64),
}

/// Smallest ancilla that fits: `d_a·m` divisible by `d_b` with an
/// environment of at least `r` levels (equals `r` when `d_a = d_b`).
fn ancilla_dim(d_in: usize, d_out: usize, rank: usize) -> usize {
    (1..)
        .find(|&m| (d_in * m).is_multiple_of(d_out) && (d_in * m) / d_out >= rank)
        .expect("an ancilla dimension always exists")
}

/// Stinespring dilation with deterministic completion.
pub fn stinespring_dilate(ch: &QuantumChannel) -> Result<QuantumChannel> {
    stinespring_dilate_with(ch, Completion::Basis)
}

pub fn stinespring_dilate_with(ch: &QuantumChannel, completion: Completion) -> Result<QuantumChannel> {
    let (operators, d_in, d_out) = match ch {
        QuantumChannel::Dilated { .. } => return Ok(ch.clone()),
        QuantumChannel::UnitaryInduced { unitary, d_out, .. } => {
            let d = unitary.rows();
            return QuantumChannel::dilated(unitary.clone(), d, *d_out);
        }
        QuantumChannel::Kraus { operators, d_in, d_out } => (operators, *d_in, *d_out),
    };
    let r = operators.len();
    let d_anc = ancilla_dim(d_in, d_out, r);
    let d_u = d_in * d_anc;
    let d_env = d_u / d_out;

    // Isometry columns V|x⟩ = Σ_k M_k|x⟩ ⊗ |k⟩_env.
    let mut columns: Vec<StateVector> = (0..d_in)
        .map(|x| {
            let mut v = StateVector::zeros(d_u);
            for (k, m) in operators.iter().enumerate() {
                for row in 0..d_out {
                    v[row * d_env + k] = m[(row, x)];
                }
            }
            v
        })
        .collect();
    let gram_defect = (0..d_in)
        .flat_map(|x| (0..d_in).map(move |y| (x, y)))
        .map(|(x, y)| {
            let want = if x == y { 1.0 } else { 0.0 };
            (columns[x].inner(&columns[y]) - C64::new(want, 0.0)).norm()
        })
        .fold(0.0, f64::max);
    if gram_defect > CPTP_TOL {
        return Err(Error::InvalidChannel(format!(
            "Kraus operators do not form an isometry (defect {gram_defect:e})"
        )));
    }

    match completion {
        Completion::Basis => complete_basis(&mut columns, d_u, (0..d_u).map(|i| CVector::basis(d_u, i))),
        Completion::Random(seed) => complete_basis(
            &mut columns,
            d_u,
            (0u64..).map(|i| haar_state::<f64>(d_u, SeedSpec::new(seed, i)).expect("d_u > 0")),
        ),
    }
    let (isometry, rest) = columns.split_at(d_in);
    let mut u = ComplexMatrix::zeros(d_u, d_u);
    let mut rest = rest.iter();
    for x in 0..d_in {
        for a in 0..d_anc {
            let col = if a == 0 { &isometry[x] } else { rest.next().expect("complete basis") };
            u.set_column(x * d_anc + a, col);
        }
    }
    QuantumChannel::dilated(u, d_in, d_out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ChannelDiagnostics {
    pub variant: &'static str,
    pub d_in: usize,
    pub d_out: usize,
    /// `‖Σ M_k†M_k − I‖₂`.
    pub trace_preservation_residual: f64,
    /// `‖U†U − I‖₂` for unitary-backed variants.
    pub unitarity_residual: Option<f64>,
    pub choi_min_eigenvalue: f64,
    pub choi_spectrum: Vec<f64>,
    pub kraus_rank: usize,
    pub passed: bool,
}

/// CPTP diagnostics for any channel, valid or not.
pub fn validate(ch: &QuantumChannel) -> Result<ChannelDiagnostics> {
    let ops = ch.to_kraus();
    let tp = tp_residual(&ops, ch.d_in());
    let unitarity = ch.unitary().map(unitarity_residual);
    let raw = ch.choi_raw();
    let sym = ComplexMatrix::from_fn(raw.rows(), raw.cols(), |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5);
    let spectrum = hermitian_eig(&sym)?.values;
    let min_eig = spectrum.first().copied().unwrap_or(0.0);
    let rank_tol = default_kraus_tol(ch.d_in()) / ch.d_in() as f64;
    let passed = tp <= CPTP_TOL && unitarity.is_none_or(|u| u <= CPTP_TOL) && min_eig >= -CPTP_TOL;
    Ok(ChannelDiagnostics {
        variant: ch.variant_name(),
        d_in: ch.d_in(),
        d_out: ch.d_out(),
        trace_preservation_residual: tp,
        unitarity_residual: unitarity,
        choi_min_eigenvalue: min_eig,
        kraus_rank: spectrum.iter().filter(|&&l| l > rank_tol).count(),
        choi_spectrum: spectrum,
        passed,
    })
}

/// Diagnostics for a raw Choi matrix (e.g. loaded from disk).
pub fn validate_choi(matrix: &ComplexMatrix, d_in: usize, d_out: usize) -> Result<ChoiDiagnostics> {
    ChoiMatrix::new_unchecked(matrix.clone(), d_in, d_out)?.diagnostics()
}
