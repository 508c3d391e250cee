//! Diffuse and sharp-interface energies for phase separation in a fractured,
//! linearly elastic material.
//!
//! The crate evaluates a Cahn–Hilliard type phase energy whose interfacial
//! density is degraded by an Ambrosio–Tortorelli damage field, together with
//! its sharp-interface limit in which phase boundaries lying on a crack carry
//! no interfacial energy. On top of the two energies it provides
//!
//! - near-optimal one-dimensional transition profiles and the recovery-field
//!   construction mapping a sharp configuration to a diffuse state
//!   ([`recovery`]),
//! - an alternating-minimization solver for the diffuse energy ([`solver`]),
//! - Γ-convergence sweeps and diagnostics with CSV output ([`harness`]).
//!
//! Everything works on uniform cell-centered grids in one or two dimensions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod fields;
pub mod geometry;
pub mod harness;
pub mod potentials;
pub mod quadrature;
pub mod recovery;
pub mod sharp;
pub mod solver;

mod error;

pub use error::{Error, Result};

pub use energy::{
    diffuse_energy, mass, project_mass, Degradation, DiffuseFunctional, DiffuseState,
    ElasticModel, EnergyBreakdown, EtaRule,
};
pub use fields::{Grid, ScalarField, SymTensorField, VectorField};
pub use potentials::{
    check_admissibility, make_default_potentials, AdmissibilityReport, CDeltaRule, DoubleWell,
    Phi, PotentialSet, SingleWell, Well,
};
pub use recovery::{build_recovery, OptimalProfile, ProfileParams, RecoveryParams, WidthPolicy};
pub use sharp::{Displacement, SharpGeometry, SharpGeometry1D, SharpGeometry2D};
pub use solver::{alternate, SolverPlan, Trajectory};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
