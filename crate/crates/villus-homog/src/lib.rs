//! Multiscale simulation toolkit for transport and absorption in the small
//! intestine.
//!
//! Two scale-separation phenomena are covered:
//!
//! * high-frequency peristaltic pulses driving a bolus-transport ODE system,
//!   together with the averaged system they converge to as the pulse period
//!   goes to zero, and
//! * a 3-d transport-diffusion-absorption problem posed on a tube with a
//!   periodically villous wall, together with the effective 1-d
//!   transport-reaction system obtained in the fine-structure limit.
//!
//! The crate is organised along the pipeline:
//!
//! * [`model`] — coefficient functions and physical parameters shared by the
//!   ODE and PDE pipelines (pulse forcing, kinetics, absorption laws,
//!   velocity fields),
//! * [`geometry`] — one period of the villous domain: profiles, measures,
//!   surface/volume quadrature,
//! * [`ode`] — pulsed and averaged bolus transport, period averaging, and
//!   the vanishing-period convergence study,
//! * [`homog`] — homogenized coefficients, the cell problem on the period
//!   cell, and its solvability (compatibility) identity,
//! * [`macro1d`] — upwind solver for the effective 1-d system with mass
//!   budgets,
//! * [`micro`] — fine-scale axisymmetric solver and the micro/macro
//!   comparison study,
//! * [`config`], [`runner`] — experiment configuration and orchestration.

pub mod cell;
pub mod config;
pub mod csvio;
pub mod geometry;
pub mod grid;
pub mod homog;
pub mod macro1d;
pub mod micro;
pub mod model;
pub mod ode;
pub mod runner;
pub mod sparse;
pub mod util;

pub use cell::{solve_cell_problem, CellSolveOptions, CorrectorField};
pub use geometry::{cell_measures, PeriodCellMeasures, VillusProfile};
pub use homog::{
    check_solvability, homogenized_coefficients, lambda_from_compatibility, CellProblemData,
    HomogenizedCoefficients,
};
pub use model::{AbsorptionModel, KineticsModel, PulseModel, VelocityField};
