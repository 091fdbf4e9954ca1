//! JSON schema for channels and observables.
//!
//! Matrices are lists of rows; each entry is either a real number or an
//! `[re, im]` pair.
//!
//! ```json
//! { "kind": "kraus", "d_a": 2, "d_b": 2,
//!   "matrices": [ [[[1,0],[0,0]], [[0,0],[1,0]]] ] }
//! ```
//!
//! Kinds `unitary_induced` and `dilated` take a single matrix in `matrices`.
//! Built-in kinds: `identity {d}`, `depolarizing {p}`, `amplitude_damping {gamma}`,
//! `haar_unitary {d_a, d_b, seed}` and `ising {n, g, h, t, n_a?, n_b}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::QuantumChannel;
use crate::error::{mismatch, Error, Result};
use crate::randsrc::{haar_unitary, SeedSpec};
use crate::spinchain::{ising_channel, IsingConfig, DEFAULT_SPIN_CAP};
use crate::{ComplexMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Entry> for C64 {
    fn from(e: Entry) -> C64 {
        match e {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

/// Row-major matrix in JSON form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<Entry>>);

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let rows: Vec<Vec<C64>> = self.0.iter().map(|r| r.iter().map(|&e| e.into()).collect()).collect();
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Config("empty matrix".into()));
        }
        ComplexMatrix::from_rows(&rows)
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self(
            (0..m.rows())
                .map(|i| m.row(i).iter().map(|z| Entry::Complex([z.re, z.im])).collect())
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    Kraus {
        d_a: usize,
        d_b: usize,
        matrices: Vec<MatrixJson>,
    },
    UnitaryInduced {
        d_a: usize,
        d_b: usize,
        matrices: Vec<MatrixJson>,
    },
    Dilated {
        d_a: usize,
        d_b: usize,
        matrices: Vec<MatrixJson>,
    },
    Identity {
        d: usize,
    },
    Depolarizing {
        p: f64,
    },
    AmplitudeDamping {
        gamma: f64,
    },
    HaarUnitary {
        d_a: usize,
        d_b: usize,
        seed: u64,
    },
    Ising {
        n: usize,
        g: f64,
        h: f64,
        t: f64,
        #[serde(default)]
        n_a: Option<usize>,
        n_b: usize,
    },
}

fn single(matrices: &[MatrixJson], kind: &str) -> Result<ComplexMatrix> {
    match matrices {
        [m] => m.to_matrix(),
        _ => Err(Error::Config(format!("{kind} expects exactly one matrix, got {}", matrices.len()))),
    }
}

impl ChannelSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad channel JSON: {e}")))
    }

    /// Largest Hilbert-space dimension the channel will allocate.
    pub fn working_dim(&self) -> usize {
        match self {
            Self::Kraus { d_a, d_b, .. } => d_a * d_b,
            Self::UnitaryInduced { d_a, .. } | Self::HaarUnitary { d_a, .. } => *d_a,
            Self::Dilated { matrices, .. } => matrices.first().map_or(0, |m| m.0.len()),
            Self::Identity { d } => *d,
            Self::Depolarizing { .. } | Self::AmplitudeDamping { .. } => 4,
            Self::Ising { n, .. } => 1usize.checked_shl(*n as u32).unwrap_or(usize::MAX),
        }
    }

    /// Builds and validates the channel.
    pub fn build(&self) -> Result<QuantumChannel> {
        self.build_inner(true, DEFAULT_SPIN_CAP)
    }

    /// Builds without CPTP checks (shape checks still apply).
    pub fn build_unchecked(&self) -> Result<QuantumChannel> {
        self.build_inner(false, DEFAULT_SPIN_CAP)
    }

    /// `build` or `build_unchecked` with a custom spin-chain size cap.
    pub fn build_with(&self, checked: bool, spin_cap: usize) -> Result<QuantumChannel> {
        self.build_inner(checked, spin_cap)
    }

    fn build_inner(&self, checked: bool, spin_cap: usize) -> Result<QuantumChannel> {
        let ch = match self {
            Self::Kraus { d_a, d_b, matrices } => {
                let ops = matrices.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
                let ch = if checked {
                    QuantumChannel::kraus(ops)?
                } else {
                    QuantumChannel::kraus_unchecked(ops)?
                };
                check_dims(&ch, *d_a, *d_b)?;
                ch
            }
            Self::UnitaryInduced { d_a, d_b, matrices } => {
                let u = single(matrices, "unitary_induced")?;
                let ch = if checked {
                    QuantumChannel::unitary_induced(u, *d_b)?
                } else {
                    QuantumChannel::unitary_induced_unchecked(u, *d_b)?
                };
                check_dims(&ch, *d_a, *d_b)?;
                ch
            }
            Self::Dilated { d_a, d_b, matrices } => {
                let u = single(matrices, "dilated")?;
                if checked {
                    QuantumChannel::dilated(u, *d_a, *d_b)?
                } else {
                    QuantumChannel::dilated_unchecked(u, *d_a, *d_b)?
                }
            }
            Self::Identity { d } => QuantumChannel::identity(*d)?,
            Self::Depolarizing { p } => QuantumChannel::depolarizing_qubit(*p)?,
            Self::AmplitudeDamping { gamma } => QuantumChannel::amplitude_damping(*gamma)?,
            Self::HaarUnitary { d_a, d_b, seed } => {
                QuantumChannel::unitary_induced(haar_unitary(*d_a, SeedSpec::new(*seed, 0))?, *d_b)?
            }
            Self::Ising { n, g, h, t, n_a, n_b } => {
                let cfg = IsingConfig::new(*n, *g, *h)?.with_spin_cap(spin_cap);
                ising_channel(&cfg, *t, n_a.unwrap_or(*n), *n_b)?
            }
        };
        Ok(ch)
    }
}

fn check_dims(ch: &QuantumChannel, d_a: usize, d_b: usize) -> Result<()> {
    if (ch.d_in(), ch.d_out()) != (d_a, d_b) {
        return Err(mismatch(
            "channel JSON dimensions",
            format!("d_a={d_a}, d_b={d_b}"),
            format!("d_a={}, d_b={}", ch.d_in(), ch.d_out()),
        ));
    }
    Ok(())
}

/// Observable in JSON: an explicit matrix, a Pauli on one site of an
/// `n`-qubit register, or a computational-basis projector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Matrix(MatrixJson),
    Pauli { pauli: String, site: usize, n: usize },
    Projector { projector: usize, dim: usize },
}

impl ObservableSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad observable JSON: {e}")))
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        match self {
            Self::Matrix(m) => m.to_matrix(),
            Self::Pauli { pauli, site, n } => {
                let axis = crate::spinchain::PauliAxis::parse(pauli)?;
                crate::spinchain::site_operator(*n, *site, axis)
            }
            Self::Projector { projector, dim } => {
                if projector >= dim {
                    return Err(Error::Config(format!("projector index {projector} outside dimension {dim}")));
                }
                Ok(crate::StateVector::basis(*dim, *projector).projector())
            }
        }
    }
}
