//! Beam-switching plans for mm-wave vehicle-to-infrastructure links.
//!
//! An RSU covers a road stretch with `N_b` directional beams and switches
//! between them on a schedule computed from one speed report. This crate
//! builds such plans ([`geometry`]), evaluates them analytically under Gaussian
//! speed error ([`linkbudget`], [`metrics`]), scores designs with the beam
//! design efficiency ([`bde`]) and cross-checks everything with a trace-level
//! Monte Carlo replay ([`montecarlo`]).

pub mod bde;
pub mod error;
pub mod gaussian;
pub mod geometry;
pub mod linkbudget;
pub mod metrics;
pub mod montecarlo;
pub mod quadrature;

pub use bde::{calibrate, efficiency, run_sweep, BdeEntry, BdeSurface, BdeWeights, SweepGrid};
pub use error::{Error, Result};
pub use gaussian::{gaussian_pdf, q_function};
pub use geometry::{
    azimuth_of, build_plan, theta_rsu, BeamPlan, BeamSector, DesignSpec, ScenarioParams, Strategy,
};
pub use linkbudget::LinkBudget;
pub use metrics::{evaluate, Analysis, BeamPerformance, OutageForm, PerformanceResult};
pub use montecarlo::{simulate, Agreement, McConfig, McResult};
pub use quadrature::QuadratureConfig;
