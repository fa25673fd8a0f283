//! Coefficient functions and physical parameters shared by the ODE and PDE
//! pipelines.
//!
//! All types are immutable after construction and evaluation is pure, so
//! models can be shared freely between concurrent workers. Coefficients are
//! either built-in parametric families (selected by name in the config file)
//! or tabulated samples with linear interpolation; there is no code
//! injection path.
//!
//! Internally everything is nondimensional. The config file carries the unit
//! scales (`length_scale`, `time_scale`, `concentration_scale`) used to map
//! between physical and nondimensional quantities; see [`UnitScales`].

pub mod absorption;
pub mod kinetics;
pub mod pulse;
pub mod velocity;

pub use absorption::{michaelis_menten, AbsorptionModel, Saturating, SurfaceCoeff, VolCoeff};
pub use kinetics::{KineticsLaw, KineticsModel};
pub use pulse::{AmplitudeLaw, FrictionLaw, PeriodicShape, PulseForcing, PulseModel};
pub use velocity::{VelocityCheck, VelocityField, VelocityKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("assumption ({name}) violated: {detail}")]
    AssumptionViolation { name: &'static str, detail: String },
}

/// Diffusivity of a spherical molecule,
/// `d = kT/(3 mu) * (rho / (6 pi M))^(1/3)`,
/// taking the two grouped factors directly.
pub fn diffusion_coefficient(kt_over_3mu: f64, rho_over_6pim: f64) -> Result<f64, ModelError> {
    if !(kt_over_3mu > 0.0) || !(rho_over_6pim > 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "diffusion coefficient needs positive inputs, got ({kt_over_3mu}, {rho_over_6pim})"
        )));
    }
    Ok(kt_over_3mu * rho_over_6pim.cbrt())
}

/// Unit scales mapping nondimensional internal quantities to physical ones.
///
/// A nondimensional length `x` corresponds to `x * length` physical units,
/// and likewise for time and concentration. Velocities scale by
/// `length / time`. With the default scales of 1 everything is already
/// physical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScales {
    pub length: f64,
    pub time: f64,
    pub concentration: f64,
}

impl Default for UnitScales {
    fn default() -> Self {
        Self { length: 1.0, time: 1.0, concentration: 1.0 }
    }
}

impl UnitScales {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.length > 0.0 && self.time > 0.0 && self.concentration > 0.0 {
            Ok(())
        } else {
            Err(ModelError::InvalidParameter("unit scales must be positive".into()))
        }
    }

    pub fn velocity(&self) -> f64 {
        self.length / self.time
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diffusion_coefficient_formula() {
        assert!((diffusion_coefficient(3.0, 8.0).unwrap() - 6.0).abs() < 1e-15);
        assert!((diffusion_coefficient(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((diffusion_coefficient(2.0, 0.001).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn diffusion_coefficient_rejects_nonpositive() {
        assert!(diffusion_coefficient(0.0, 1.0).is_err());
        assert!(diffusion_coefficient(1.0, -2.0).is_err());
    }
}
