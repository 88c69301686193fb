//! Heat flow, generalized eigenfunctions and Liouville-type audits on
//! weighted graphs with bounded geometry.
//!
//! The crate is `no_std` and needs only `alloc`. File formats and the
//! command-line driver live in the `heatlab` crate.

#![cfg_attr(not(test), no_std)]

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dense;
pub mod eigenfunction;
pub mod error;
pub mod graph;
pub mod harnack;
pub mod heat;
pub mod laplacian;
pub mod liouville;
pub mod mmatrix;
pub mod spectrum;

pub use eigenfunction::{
    check_growth_bounds, check_one_step_harnack, construct_positive_eigenfunction, growth_profile,
    verify_zero_propagation, Eigenfunction, GrowthBoundReport, GrowthProfile, Positivity,
};
pub use error::{Error, Result};
pub use graph::{
    certify_bounded_geometry, decompose_balls, generate_family, BallDecomposition, Family,
    GeometryCertificate, WeightedGraph,
};
pub use harnack::{audit_harnack, HarnackAudit, SampleSpec};
pub use heat::{
    heat_residual, solve_heat_spectral, step_heat_implicit, synthesize_ancient, synthesize_from_eigenvalues,
    AncientSolution,
    Atom, HeatState, MeasureSupport, SpectralMeasure,
};
pub use laplacian::{apply_laplacian, assemble_dirichlet, DirichletOperator, VertexFunction};
pub use liouville::{classify_growth, dichotomy_sweep, render_verdict, LiouvilleVerdict, SweepSpec};
pub use spectrum::{dirichlet_bottom_eigenvalue, estimate_lambda1_exhaustion, SpectrumEstimate};
