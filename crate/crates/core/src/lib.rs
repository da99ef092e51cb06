//! Kinematic assessment of flexure hinges and compliant mechanisms from the
//! eigen-decomposition of their stiffness matrix.
//!
//! The first eigenvector(s) of `k φ = λ W φ` define the *natural kinematics*;
//! the selectivity `λ_{p+1}/λ_p` measures precision and the (extended) cosine
//! similarity to a reference motion measures accuracy.

pub mod dof;
pub mod eig;
pub mod error;
pub mod fem;
pub mod io;
pub mod metrics;

pub use dof::{
    build_metric, strain_energy, Direction, DofEntry, DofKind, DofMap, DofMetric, NodeId, ReferenceKinematics,
    StiffnessMatrix,
};
pub use eig::{eig_sym, min_rayleigh_certificate, rayleigh_quotient, ModalBasis, RayleighCertificate};
pub use error::{Error, Result};
pub use metrics::{
    accuracy_index, assess, dominance_share, extended_accuracy_index, fit_rigid_motion, modal_forces, modal_response,
    path_deviation, selectivity, AssessmentReport, NodalReadout,
};
