//! Homogenized coefficients of the effective 1-d system and the
//! solvability identity of the cell problem.
//!
//! Surface rates average over the villous wall of one period cell, the
//! velocity averages over the cell volume:
//!
//! ```text
//! etabar_p(x1)    = <eta_p(x1, .)>_wall
//! etabar_a(x1, t) = <eta_a(x1, ., t)>_wall
//! rhobar(x1)      = <rho(x1, .)>_wall
//! cbar(x1, t)     = <c(x1, ., t)>_cell
//! ```
//!
//! The combined wall exchange is
//!
//! ```text
//! Theta(x1, X, t, u, v)  = eta_p u + eta_a g_a(u) - (alpha/omega) rho v
//! Thetabar(x1, t, u, v)  = etabar_p u + etabar_a g_a(u) - (alpha/omega) rhobar v
//! ```
//!
//! (the surfacic degradation of `v` feeds `u`, so it lowers the wall loss),
//! and the cell problem with data `(p, mu, nu, delta, x1, t)` admits a
//! periodic corrector exactly when
//!
//! ```text
//! lambda = R(P) Thetabar(x1, t, mu, nu) + cbar . e1 p - delta.
//! ```

use crate::geometry::{self, GeometryError, PeriodCellMeasures, VillusProfile};
use crate::model::{AbsorptionModel, ModelError, VelocityField};
use crate::util::Vec3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HomogError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Parameters of one cell problem: axial gradient `p`, macroscopic values
/// `mu` (nutrient) and `nu` (feedstuff), volumic source `delta`, and the
/// slow variables `(x1, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProblemData {
    pub p: f64,
    pub mu: f64,
    pub nu: f64,
    pub delta: f64,
    pub x1: f64,
    pub t: f64,
}

/// Effective coefficients tabulated on sample grids with linear
/// interpolation (clamped outside).
#[derive(Debug, Clone)]
pub struct HomogenizedCoefficients {
    pub x1_samples: Vec<f64>,
    pub t_samples: Vec<f64>,
    /// Wall mean of the passive rate, per `x1` sample.
    pub etabar_p: Vec<f64>,
    /// Wall mean of the active rate, row-major `[x1][t]`.
    pub etabar_a: Vec<f64>,
    /// Wall mean of the surfacic degradation rate, per `x1` sample.
    pub rhobar: Vec<f64>,
    /// Full cell-average velocity vector, row-major `[x1][t]`; the limit
    /// equations consume only its axial component.
    pub cbar: Vec<Vec3>,
    pub measures: PeriodCellMeasures,
}

fn interp1(xs: &[f64], vals: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), vals.len());
    if xs.len() == 1 || x <= xs[0] {
        return vals[0];
    }
    if x >= xs[xs.len() - 1] {
        return vals[vals.len() - 1];
    }
    let k = xs.partition_point(|&v| v <= x).min(xs.len() - 1).max(1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let a = (x - x0) / (x1 - x0);
    (1.0 - a) * vals[k - 1] + a * vals[k]
}

impl HomogenizedCoefficients {
    pub fn ratio_rp(&self) -> f64 {
        self.measures.ratio_rp
    }

    fn nx(&self) -> usize {
        self.x1_samples.len()
    }

    fn nt(&self) -> usize {
        self.t_samples.len()
    }

    fn interp_xt(&self, table: &[f64], x1: f64, t: f64) -> f64 {
        let nt = self.nt();
        if nt == 1 {
            let col: Vec<f64> = (0..self.nx()).map(|i| table[i * nt]).collect();
            return interp1(&self.x1_samples, &col, x1);
        }
        let per_x: Vec<f64> = (0..self.nx())
            .map(|i| interp1(&self.t_samples, &table[i * nt..(i + 1) * nt], t))
            .collect();
        interp1(&self.x1_samples, &per_x, x1)
    }

    pub fn etabar_p_at(&self, x1: f64) -> f64 {
        interp1(&self.x1_samples, &self.etabar_p, x1)
    }

    pub fn etabar_a_at(&self, x1: f64, t: f64) -> f64 {
        self.interp_xt(&self.etabar_a, x1, t)
    }

    pub fn rhobar_at(&self, x1: f64) -> f64 {
        interp1(&self.x1_samples, &self.rhobar, x1)
    }

    pub fn cbar_e1_at(&self, x1: f64, t: f64) -> f64 {
        let axial: Vec<f64> = self.cbar.iter().map(|c| c[0]).collect();
        self.interp_xt(&axial, x1, t)
    }
}

/// Resolution of the averaging quadratures.
#[derive(Debug, Clone, Copy)]
pub struct AveragingOptions {
    pub n_z: usize,
    pub n_theta: usize,
    pub n_rho: usize,
}

impl Default for AveragingOptions {
    fn default() -> Self {
        Self { n_z: 256, n_theta: 16, n_rho: 17 }
    }
}

/// Wall exchange density `Theta` at a microscopic wall point.
pub fn theta_surface(
    absorption: &AbsorptionModel,
    x1: f64,
    x_fast: Vec3,
    t: f64,
    u: f64,
    v: f64,
) -> f64 {
    absorption.eta_p_at(x1, x_fast) * u + absorption.eta_a_at(x1, x_fast, t) * absorption.g_a.eval(u)
        - absorption.alpha / absorption.omega * absorption.rho_at(x1, x_fast) * v
}

/// Wall exchange density with homogenized rates.
pub fn theta_bar(
    coeffs: &HomogenizedCoefficients,
    absorption: &AbsorptionModel,
    x1: f64,
    t: f64,
    u: f64,
    v: f64,
) -> f64 {
    coeffs.etabar_p_at(x1) * u + coeffs.etabar_a_at(x1, t) * absorption.g_a.eval(u)
        - absorption.alpha / absorption.omega * coeffs.rhobar_at(x1) * v
}

/// Tabulate the homogenized coefficients on the given slow-variable grids.
///
/// Fails with an assumption-violation error naming (C1) when the cell
/// average of the axial velocity is not positive at some sample.
pub fn homogenized_coefficients(
    profile: &VillusProfile,
    velocity: &VelocityField,
    absorption: &AbsorptionModel,
    x1_samples: &[f64],
    t_samples: &[f64],
    opts: AveragingOptions,
) -> Result<HomogenizedCoefficients, HomogError> {
    if x1_samples.is_empty() || t_samples.is_empty() {
        return Err(HomogError::InvalidParameter("need at least one x1 and one t sample".into()));
    }
    if x1_samples.windows(2).any(|w| w[1] <= w[0]) || t_samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HomogError::InvalidParameter("sample grids must be strictly increasing".into()));
    }
    let measures = geometry::cell_measures(profile, opts.n_z, opts.n_theta)?;
    let (nx, nt) = (x1_samples.len(), t_samples.len());
    let mut etabar_p = Vec::with_capacity(nx);
    let mut rhobar = Vec::with_capacity(nx);
    let mut etabar_a = Vec::with_capacity(nx * nt);
    let mut cbar = Vec::with_capacity(nx * nt);
    for &x1 in x1_samples {
        etabar_p.push(geometry::surface_average(
            profile,
            |x| absorption.eta_p_at(x1, x),
            opts.n_z,
            opts.n_theta,
        )?);
        rhobar.push(geometry::surface_average(
            profile,
            |x| absorption.rho_at(x1, x),
            opts.n_z,
            opts.n_theta,
        )?);
        for &t in t_samples {
            etabar_a.push(geometry::surface_average(
                profile,
                |x| absorption.eta_a_at(x1, x, t),
                opts.n_z,
                opts.n_theta,
            )?);
            let mean: Vec3 = geometry::volume_average(
                profile,
                |x| velocity.eval(x1, x, t),
                opts.n_z,
                opts.n_theta,
                opts.n_rho,
            )?;
            if !(mean[0] > 0.0) {
                return Err(HomogError::Model(ModelError::AssumptionViolation {
                    name: "C1",
                    detail: format!(
                        "cell average of the axial velocity is {} at (x1, t) = ({x1}, {t})",
                        mean[0]
                    ),
                }));
            }
            cbar.push(mean);
        }
    }
    Ok(HomogenizedCoefficients {
        x1_samples: x1_samples.to_vec(),
        t_samples: t_samples.to_vec(),
        etabar_p,
        etabar_a,
        rhobar,
        cbar,
        measures,
    })
}

/// The compatibility value
/// `lambda = R(P) Thetabar(x1, t, mu, nu) + cbar . e1 p - delta`.
pub fn lambda_from_compatibility(
    data: &CellProblemData,
    coeffs: &HomogenizedCoefficients,
    absorption: &AbsorptionModel,
) -> f64 {
    coeffs.ratio_rp() * theta_bar(coeffs, absorption, data.x1, data.t, data.mu, data.nu)
        + coeffs.cbar_e1_at(data.x1, data.t) * data.p
        - data.delta
}

/// Outcome of a solvability check.
#[derive(Debug, Clone, Copy)]
pub struct SolvabilityCheck {
    pub solvable: bool,
    /// `|lambda - lambda_compatibility|`.
    pub residual: f64,
}

/// The cell problem with the given `lambda` is solvable iff `lambda` matches
/// the compatibility value within `tolerance`.
pub fn check_solvability(
    data: &CellProblemData,
    lambda: f64,
    coeffs: &HomogenizedCoefficients,
    absorption: &AbsorptionModel,
    tolerance: f64,
) -> SolvabilityCheck {
    let residual = (lambda - lambda_from_compatibility(data, coeffs, absorption)).abs();
    SolvabilityCheck { solvable: residual <= tolerance, residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ProfileShape;
    use crate::model::absorption::{FastMod, SurfaceCoeff, TimeMod, VolCoeff};
    use crate::model::{Saturating, VelocityKind};
    use std::sync::Arc;

    fn absorption_with(
        eta_p: SurfaceCoeff,
        eta_a: SurfaceCoeff,
        rho: SurfaceCoeff,
        alpha: f64,
        omega: f64,
        g_a: Saturating,
    ) -> AbsorptionModel {
        AbsorptionModel::new(
            eta_p,
            eta_a,
            g_a,
            rho,
            alpha,
            omega,
            omega.max(1.0),
            VolCoeff::constant(0.0),
            Saturating::Zero,
            1e-9,
        )
        .unwrap()
    }

    #[test]
    fn theta_surface_examples() {
        let m = absorption_with(
            SurfaceCoeff::constant(2.0),
            SurfaceCoeff::constant(0.0),
            SurfaceCoeff::constant(0.0),
            0.5,
            1.0,
            Saturating::Zero,
        );
        assert_eq!(theta_surface(&m, 0.0, [0.0, 0.0, 0.0], 0.0, 0.0, 0.0), 0.0);
        assert!((theta_surface(&m, 0.0, [0.0, 0.0, 0.0], 0.0, 1.0, 0.0) - 2.0).abs() < 1e-15);
        let m2 = absorption_with(
            SurfaceCoeff::constant(1.0),
            SurfaceCoeff::constant(0.0),
            SurfaceCoeff::constant(3.0),
            0.5,
            1.0,
            Saturating::Zero,
        );
        assert!((theta_surface(&m2, 0.0, [0.0, 0.0, 0.0], 0.0, 0.0, 1.0) + 1.5).abs() < 1e-15);
    }

    #[test]
    fn theta_is_strictly_increasing_in_u_with_slope_eta_lower() {
        use rand::{Rng, SeedableRng};
        let m = absorption_with(
            SurfaceCoeff::Product {
                base: 1.0,
                axial: crate::model::absorption::AxialMod::Const,
                fast: FastMod::TipWeighted { amp: 0.8, freq: 1 },
                time: TimeMod::Const,
            },
            SurfaceCoeff::constant(0.7),
            SurfaceCoeff::constant(2.0),
            0.9,
            0.5,
            Saturating::MichaelisMenten { v_max: 1.0, k_m: 1.0 },
        );
        let eta_lower = 1.0; // base * tip factor >= base
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let u1 = rng.gen::<f64>() * 4.0 - 1.0;
            let u2 = u1 + rng.gen::<f64>() * 2.0 + 1e-6;
            let x = [rng.gen::<f64>(), 0.3, 0.1];
            let v = rng.gen::<f64>() * 2.0;
            let d = theta_surface(&m, 0.5, x, 0.2, u2, v) - theta_surface(&m, 0.5, x, 0.2, u1, v);
            assert!(d >= eta_lower * (u2 - u1) - 1e-12);
        }
    }

    fn cylinder_setup(eta_p: SurfaceCoeff) -> (VillusProfile, VelocityField, AbsorptionModel) {
        let profile = VillusProfile::cylinder(1.0);
        let velocity =
            VelocityField::new(VelocityKind::AxialPlug { mean_speed: 1.0 }, profile.clone())
                .unwrap();
        let absorption = absorption_with(
            eta_p,
            SurfaceCoeff::constant(0.5),
            SurfaceCoeff::constant(0.8),
            0.5,
            0.5,
            Saturating::MichaelisMenten { v_max: 1.0, k_m: 1.0 },
        );
        (profile, velocity, absorption)
    }

    #[test]
    fn constant_coefficients_collapse_to_themselves() {
        let (profile, velocity, absorption) = cylinder_setup(SurfaceCoeff::constant(1.7));
        let coeffs = homogenized_coefficients(
            &profile,
            &velocity,
            &absorption,
            &[0.0, 1.0],
            &[0.0],
            AveragingOptions::default(),
        )
        .unwrap();
        assert!((coeffs.etabar_p_at(0.5) - 1.7).abs() < 1e-10);
        assert!((coeffs.etabar_a_at(0.5, 0.0) - 0.5).abs() < 1e-10);
        assert!((coeffs.rhobar_at(0.5) - 0.8).abs() < 1e-10);
        assert!((coeffs.cbar_e1_at(0.5, 0.0) - 1.0).abs() < 1e-10);
        assert!((coeffs.ratio_rp() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn zero_mean_harmonic_averages_out() {
        let eta0 = 1.3;
        let (profile, velocity, absorption) = cylinder_setup(SurfaceCoeff::Product {
            base: eta0,
            axial: crate::model::absorption::AxialMod::Const,
            fast: FastMod::Harmonic { amp: 1.0, freq: 1 },
            time: TimeMod::Const,
        });
        let coeffs = homogenized_coefficients(
            &profile,
            &velocity,
            &absorption,
            &[0.0],
            &[0.0],
            AveragingOptions::default(),
        )
        .unwrap();
        assert!((coeffs.etabar_p_at(0.0) - eta0).abs() < 1e-10);
    }

    #[test]
    fn lambda_examples() {
        let (profile, _, absorption) = cylinder_setup(SurfaceCoeff::constant(2.0));
        let velocity = VelocityField::new(
            VelocityKind::Custom {
                c_fn: Arc::new(|_, _, _| [1e-9, 0.0, 0.0]), // effectively zero, keeps (C1) strict
                cbar_fn: None,
            },
            profile.clone(),
        )
        .unwrap();
        let coeffs = homogenized_coefficients(
            &profile,
            &velocity,
            &absorption,
            &[0.0],
            &[0.0],
            AveragingOptions::default(),
        )
        .unwrap();
        let zero = CellProblemData { p: 0.0, mu: 0.0, nu: 0.0, delta: 0.0, x1: 0.0, t: 0.0 };
        assert_eq!(lambda_from_compatibility(&zero, &coeffs, &absorption), 0.0);
        // Plain cylinder r = 1 has R(P) = 2, so lambda = 2 Theta0.
        let data = CellProblemData { p: 0.0, mu: 1.0, nu: 0.5, delta: 0.0, x1: 0.0, t: 0.0 };
        let theta0 = theta_bar(&coeffs, &absorption, 0.0, 0.0, 1.0, 0.5);
        let lambda = lambda_from_compatibility(&data, &coeffs, &absorption);
        assert!((lambda - 2.0 * theta0).abs() < 1e-9);
    }

    #[test]
    fn solvability_dichotomy() {
        let (profile, velocity, absorption) = cylinder_setup(SurfaceCoeff::constant(1.0));
        let coeffs = homogenized_coefficients(
            &profile,
            &velocity,
            &absorption,
            &[0.0],
            &[0.0],
            AveragingOptions::default(),
        )
        .unwrap();
        let data = CellProblemData { p: 0.4, mu: 0.8, nu: 0.2, delta: 0.1, x1: 0.0, t: 0.0 };
        let lambda = lambda_from_compatibility(&data, &coeffs, &absorption);
        let ok = check_solvability(&data, lambda, &coeffs, &absorption, 1e-14);
        assert!(ok.solvable);
        assert!(ok.residual <= 1e-14);
        let bad = check_solvability(&data, lambda + 1.0, &coeffs, &absorption, 1e-14);
        assert!(!bad.solvable);
        assert!((bad.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn villous_etabar_matches_fine_quadrature_oracle() {
        // Tip-weighted passive rate on the folded wall; reference by a much
        // finer surface quadrature.
        let profile =
            VillusProfile::new(1.0, ProfileShape::RaisedCosine { amp: 0.1, freq: 1 }).unwrap();
        let velocity =
            VelocityField::new(VelocityKind::AxialPlug { mean_speed: 1.0 }, profile.clone())
                .unwrap();
        let absorption = absorption_with(
            SurfaceCoeff::Product {
                base: 1.0,
                axial: crate::model::absorption::AxialMod::Const,
                fast: FastMod::TipWeighted { amp: 1.0, freq: 1 },
                time: TimeMod::Const,
            },
            SurfaceCoeff::constant(0.5),
            SurfaceCoeff::constant(0.8),
            0.5,
            0.5,
            Saturating::Zero,
        );
        let coeffs = homogenized_coefficients(
            &profile,
            &velocity,
            &absorption,
            &[0.0],
            &[0.0],
            AveragingOptions { n_z: 192, n_theta: 8, n_rho: 17 },
        )
        .unwrap();
        let oracle: f64 = geometry::surface_average(
            &profile,
            |x| absorption.eta_p_at(0.0, x),
            4096,
            8,
        )
        .unwrap();
        let rel = (coeffs.etabar_p_at(0.0) - oracle).abs() / oracle.abs();
        assert!(rel < 1e-6, "relative deviation {rel}");
    }

    #[test]
    fn c1_violation_is_named() {
        let profile = VillusProfile::cylinder(1.0);
        let backwards = VelocityField::new(
            VelocityKind::Custom { c_fn: Arc::new(|_, _, _| [-0.2, 0.0, 0.0]), cbar_fn: None },
            profile.clone(),
        )
        .unwrap();
        let absorption = absorption_with(
            SurfaceCoeff::constant(1.0),
            SurfaceCoeff::constant(0.0),
            SurfaceCoeff::constant(0.0),
            1.0,
            1.0,
            Saturating::Zero,
        );
        let err = homogenized_coefficients(
            &profile,
            &backwards,
            &absorption,
            &[0.0],
            &[0.0],
            AveragingOptions::default(),
        )
        .unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("C1"), "error should name the assumption: {msg}");
    }
}
