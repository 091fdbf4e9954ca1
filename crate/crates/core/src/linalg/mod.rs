//! Dense complex linear algebra shared by every other module.

mod eig;
mod layout;
mod matrix;
mod norms;
mod qr;

pub use eig::{herm_expm, hermitian_eig, HermitianEigen, Propagator};
pub(crate) use eig::check_hermitian;
pub use layout::{partial_trace, permute_subsystems, permute_vector, SubsystemLayout};
pub use matrix::{max_entangled_state, paulis, CMatrix, CVector};
pub use norms::{hs_distance, hs_norm, singular_values, trace_distance, trace_norm};
pub use qr::{complete_basis, householder_qr};
