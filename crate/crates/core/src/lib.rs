//! Discrete L¹ metric geometry of potentials on the circle.
//!
//! The circle `ℝ/ℤ` carries `N` nodes and a signed form `θ` of unit mass.
//! Potentials are θ-subharmonic grid functions (`θ + L(u) ≥ 0`) that may
//! carry log-type poles at marked nodes. On top of this the crate computes
//! envelopes, the Monge–Ampère energy, the `d₁` metric, weak geodesic
//! segments and geodesic rays built from test curves.

pub mod cli_io;
pub mod corpus;
pub mod energy;
pub mod envelopes;
pub mod error;
pub mod geodesics;
pub mod grid;
pub mod oracle;
pub mod rays;
pub mod rng;

pub use energy::{
    d1, domination_check, energy, energy_difference, energy_gap_quadrature, i1, rooftop_derivative, DominationReport,
    EnergyValue,
};
pub use envelopes::{
    envelope_below, envelope_below_with, envelope_singularity, multi_rooftop, rooftop, v_theta, EnvelopeMethod,
    EnvelopeOptions, EnvelopeResult,
};
pub use error::{Error, Result};
pub use geodesics::{segment_solve, speed_constants, verify_geodesic, GeodesicReport, SpacetimeField, SpeedConstants};
pub use grid::{
    green_function, laplacian, ma_measure, max_pot, min_obstacle, poisson_solve, sup_potential, theta_sh_check,
    truncate, CircleGrid, Form, Measure, Obstacle, Pole, Potential, ShReport,
};
pub use rays::{
    construct_ray, hat_transform, inverse_legendre, maximize_curve, preset_pole_curve, usc_regularize, Ray, TestCurve,
};
