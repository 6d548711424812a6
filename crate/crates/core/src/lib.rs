//! Bearing-based localization of sensor networks in arbitrary dimension.
//!
//! A network is a set of nodes in `R^d`, some of them anchors with known
//! positions, connected by edges along which the unit bearing is measured.
//! The crate decides whether the followers' positions are uniquely
//! determined ([`localizability`]), recovers them by a direct solve or a
//! distributed gradient flow ([`solver`]) and quantifies how bearing errors
//! bias the result ([`sensitivity`]).

pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod localizability;
pub mod network;
pub mod rigidity;
pub mod sensitivity;
pub mod solver;

pub use geometry::{angle_between, bearing, projector, GeometryError};
pub use linalg::{RankTolerance, SpectralSummary};
pub use localizability::{classify, LocalizabilityError, LocalizabilityReport, Tolerances, Verdict};
pub use network::{
    measured_network, validate, MeasuredNetwork, Network, NetworkSpec, NodeSpec, StackedPosition, ValidationErrors,
    Violation,
};
pub use rigidity::{bearing_laplacian, is_ibr, rigidity_matrix, BearingLaplacian, RigidityError};
pub use sensitivity::{build_scenario, ErrorBound, ErrorSpec, PerturbationScenario, SensitivityError};
pub use solver::{simulate_flow, solve_direct, FlowConfig, FlowTrajectory, SolverError, StepSize};

pub use nalgebra;
