//! Microscopic velocity fields `c(x1, X, t)` on the period cell.
//!
//! The standing assumptions are
//!
//! ```text
//! (C1)  c . e1 >= 0 and the cell average of c . e1 is positive,
//! (C2)  div_X c = 0,
//! (C3)  c . N = 0 on the villous wall.
//! ```
//!
//! The built-in axisymmetric families are generated from a Stokes
//! streamfunction `Psi = f(rhat)` of the mapped radius `rhat = rho / R(z)`:
//!
//! ```text
//! c_z   = f'(rhat) / (rhat R^2),        c_rho = c_z * rhat * R'(z),
//! ```
//!
//! which satisfies (C2) and (C3) exactly (the wall `rhat = 1` is a
//! streamline) and makes the volume flux through any cross-section equal to
//! `2 pi f(1)` independently of `z`. `AxialPlug` uses `f = q rhat^2`
//! (slug-like axial speed `2q / R^2`), `Poiseuille` uses
//! `f = q (2 rhat^2 - rhat^4)` (parabolic profile vanishing at the wall).

use super::ModelError;
use crate::geometry::{self, VillusProfile};
use crate::util::{dot, Vec3};
use std::sync::Arc;

/// Velocity family selector.
#[derive(Clone)]
pub enum VelocityKind {
    /// `c = 0`; degenerate but useful for pure-diffusion checks. Violates
    /// the strict part of (C1).
    Zero,
    /// Cross-section-uniform axial speed, wall-following radial component.
    AxialPlug { mean_speed: f64 },
    /// Parabolic axial profile vanishing at the wall.
    Poiseuille { mean_speed: f64 },
    /// Arbitrary field `c(x1, X, t)` with an optional precomputed cell
    /// average `(x1, t) -> cbar`.
    Custom {
        c_fn: Arc<dyn Fn(f64, Vec3, f64) -> Vec3 + Send + Sync>,
        cbar_fn: Option<Arc<dyn Fn(f64, f64) -> Vec3 + Send + Sync>>,
    },
}

impl std::fmt::Debug for VelocityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VelocityKind::Zero => f.write_str("Zero"),
            VelocityKind::AxialPlug { mean_speed } => write!(f, "AxialPlug({mean_speed})"),
            VelocityKind::Poiseuille { mean_speed } => write!(f, "Poiseuille({mean_speed})"),
            VelocityKind::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

/// A velocity field bound to the period-cell geometry it flows in.
#[derive(Debug, Clone)]
pub struct VelocityField {
    kind: VelocityKind,
    profile: VillusProfile,
    /// Volume flux per radian through a cross-section (streamfunction value
    /// at the wall); zero for `Zero`, unused for `Custom`.
    flux_per_radian: f64,
}

/// Residuals of the sampled (C1)-(C3) checks.
#[derive(Debug, Clone, Copy)]
pub struct VelocityCheck {
    pub min_axial: f64,
    pub cell_avg_axial: f64,
    pub max_divergence: f64,
    pub max_wall_normal_flow: f64,
}

fn axisym_cell_volume(profile: &VillusProfile) -> f64 {
    // |P| = 2 pi int rho^2/2 dz, spectrally accurate for periodic rho.
    let n = 4096;
    let mut acc = 0.0;
    for i in 0..n {
        let z = (i as f64 + 0.5) / n as f64;
        let rho = profile.rho(z, 0.0);
        acc += 0.5 * rho * rho;
    }
    2.0 * std::f64::consts::PI * acc / n as f64
}

impl VelocityField {
    pub fn new(kind: VelocityKind, profile: VillusProfile) -> Result<Self, ModelError> {
        let flux_per_radian = match &kind {
            VelocityKind::Zero | VelocityKind::Custom { .. } => 0.0,
            VelocityKind::AxialPlug { mean_speed } | VelocityKind::Poiseuille { mean_speed } => {
                if !profile.is_axisymmetric() {
                    return Err(ModelError::InvalidParameter(
                        "built-in velocity families need an axisymmetric profile".into(),
                    ));
                }
                if !(*mean_speed > 0.0) {
                    return Err(ModelError::InvalidParameter(
                        "mean speed must be positive to move the bolus ahead (C1)".into(),
                    ));
                }
                mean_speed * axisym_cell_volume(&profile) / (2.0 * std::f64::consts::PI)
            }
        };
        Ok(Self { kind, profile, flux_per_radian })
    }

    pub fn zero(profile: VillusProfile) -> Self {
        Self::new(VelocityKind::Zero, profile).unwrap()
    }

    pub fn kind(&self) -> &VelocityKind {
        &self.kind
    }

    pub fn profile(&self) -> &VillusProfile {
        &self.profile
    }

    /// Streamfunction `f(rhat)` per radian for the built-in families.
    /// Face fluxes built from differences of this function have exactly
    /// vanishing discrete divergence.
    pub fn stream_psi(&self, rhat: f64) -> Option<f64> {
        let q = self.flux_per_radian;
        match &self.kind {
            VelocityKind::Zero => Some(0.0),
            VelocityKind::AxialPlug { .. } => Some(q * rhat * rhat),
            VelocityKind::Poiseuille { .. } => {
                Some(q * (2.0 * rhat * rhat - rhat * rhat * rhat * rhat))
            }
            VelocityKind::Custom { .. } => None,
        }
    }

    /// Microscopic velocity at the fast point `X` of the period cell.
    pub fn eval(&self, x1: f64, x_fast: Vec3, t: f64) -> Vec3 {
        match &self.kind {
            VelocityKind::Zero => [0.0; 3],
            VelocityKind::Custom { c_fn, .. } => c_fn(x1, x_fast, t),
            VelocityKind::AxialPlug { .. } | VelocityKind::Poiseuille { .. } => {
                let z = x_fast[0];
                let rho = x_fast[1].hypot(x_fast[2]);
                let big_r = self.profile.rho(z, 0.0);
                let slope = self.profile.rho_dz(z, 0.0);
                let rhat = rho / big_r;
                let q = self.flux_per_radian;
                let c_z = match &self.kind {
                    VelocityKind::AxialPlug { .. } => 2.0 * q / (big_r * big_r),
                    VelocityKind::Poiseuille { .. } => {
                        4.0 * q * (1.0 - rhat * rhat) / (big_r * big_r)
                    }
                    _ => unreachable!(),
                };
                let c_rho = c_z * rhat * slope;
                if rho > 1e-300 {
                    let (ct, st) = (x_fast[1] / rho, x_fast[2] / rho);
                    [c_z, c_rho * ct, c_rho * st]
                } else {
                    [c_z, 0.0, 0.0]
                }
            }
        }
    }

    /// Cell average `cbar(x1, t)` when available without quadrature:
    /// exactly `mean_speed * e1` for the built-in families.
    pub fn cbar_hint(&self, x1: f64, t: f64) -> Option<Vec3> {
        match &self.kind {
            VelocityKind::Zero => Some([0.0; 3]),
            VelocityKind::AxialPlug { mean_speed } | VelocityKind::Poiseuille { mean_speed } => {
                Some([*mean_speed, 0.0, 0.0])
            }
            VelocityKind::Custom { cbar_fn, .. } => cbar_fn.as_ref().map(|f| f(x1, t)),
        }
    }

    /// Sampled verification of (C1)-(C3); errors name the violated
    /// assumption.
    pub fn check_assumptions(
        &self,
        x1: f64,
        t: f64,
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> Result<VelocityCheck, ModelError> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut min_axial = f64::INFINITY;
        let mut max_div: f64 = 0.0;
        let mut max_tan: f64 = 0.0;
        let h = 1e-5;
        for _ in 0..samples {
            let z = rng.gen::<f64>();
            let th = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
            let rhat = rng.gen::<f64>() * 0.98;
            let rho = rhat * self.profile.rho(z, th);
            let x = [z, rho * th.cos(), rho * th.sin()];
            let c = self.eval(x1, x, t);
            min_axial = min_axial.min(c[0]);
            // Periodicity in X1.
            let cp = self.eval(x1, [x[0] + 1.0, x[1], x[2]], t);
            if (c[0] - cp[0]).abs().max((c[1] - cp[1]).abs()).max((c[2] - cp[2]).abs())
                > 1e-9 * (1.0 + c[0].abs())
            {
                return Err(ModelError::AssumptionViolation {
                    name: "C1",
                    detail: format!("velocity not 1-periodic in X1 at X = {x:?}"),
                });
            }
            // Central-difference divergence.
            let mut div = 0.0;
            for k in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                div += (self.eval(x1, xp, t)[k] - self.eval(x1, xm, t)[k]) / (2.0 * h);
            }
            max_div = max_div.max(div.abs());
            // Wall tangency.
            let n = geometry::outward_normal(&self.profile, z, th).map_err(|e| {
                ModelError::InvalidParameter(format!("cannot evaluate wall normal: {e}"))
            })?;
            let xs = self.profile.surface_point(z, th);
            max_tan = max_tan.max(dot(self.eval(x1, xs, t), n).abs());
        }
        let cbar = match self.cbar_hint(x1, t) {
            Some(c) => c[0],
            None => {
                geometry::volume_average(&self.profile, |x| self.eval(x1, x, t)[0], 32, 16, 9)
                    .map_err(|e| ModelError::InvalidParameter(format!("cell average failed: {e}")))?
            }
        };
        let check = VelocityCheck {
            min_axial,
            cell_avg_axial: cbar,
            max_divergence: max_div,
            max_wall_normal_flow: max_tan,
        };
        if min_axial < -tol {
            return Err(ModelError::AssumptionViolation {
                name: "C1",
                detail: format!("axial velocity dips to {min_axial}"),
            });
        }
        if !(cbar > 0.0) {
            return Err(ModelError::AssumptionViolation {
                name: "C1",
                detail: format!("cell average of c.e1 = {cbar} is not positive"),
            });
        }
        if max_div > tol {
            return Err(ModelError::AssumptionViolation {
                name: "C2",
                detail: format!("discrete divergence reaches {max_div}"),
            });
        }
        if max_tan > tol {
            return Err(ModelError::AssumptionViolation {
                name: "C3",
                detail: format!("wall-normal velocity reaches {max_tan}"),
            });
        }
        Ok(check)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ProfileShape;

    fn villous_profile() -> VillusProfile {
        VillusProfile::new(1.0, ProfileShape::RaisedCosine { amp: 0.1, freq: 1 }).unwrap()
    }

    #[test]
    fn plug_flow_satisfies_assumptions_on_villous_cell() {
        let v = VelocityField::new(VelocityKind::AxialPlug { mean_speed: 1.0 }, villous_profile())
            .unwrap();
        let check = v.check_assumptions(0.0, 0.0, 400, 23, 1e-6).unwrap();
        assert!(check.min_axial > 0.0);
        assert!((check.cell_avg_axial - 1.0).abs() < 1e-12);
        assert!(check.max_divergence < 1e-6, "div residual {}", check.max_divergence);
        assert!(check.max_wall_normal_flow < 1e-12);
    }

    #[test]
    fn poiseuille_satisfies_assumptions_and_averages_to_mean_speed() {
        let v = VelocityField::new(VelocityKind::Poiseuille { mean_speed: 0.7 }, villous_profile())
            .unwrap();
        v.check_assumptions(0.0, 0.0, 400, 29, 1e-6).unwrap();
        // Cross-check the analytic cell average against quadrature.
        let quad: f64 =
            geometry::volume_average(&v.profile().clone(), |x| v.eval(0.0, x, 0.0)[0], 64, 8, 33)
                .unwrap();
        assert!((quad - 0.7).abs() < 1e-6, "quadrature average {quad}");
    }

    #[test]
    fn plug_flow_on_cylinder_is_uniform() {
        let v = VelocityField::new(
            VelocityKind::AxialPlug { mean_speed: 2.0 },
            VillusProfile::cylinder(1.0),
        )
        .unwrap();
        let c = v.eval(0.0, [0.3, 0.2, -0.1], 0.0);
        assert!((c[0] - 2.0).abs() < 1e-12);
        assert!(c[1].abs() < 1e-15 && c[2].abs() < 1e-15);
    }

    #[test]
    fn tilted_custom_field_fails_tangency() {
        let v = VelocityField::new(
            VelocityKind::Custom {
                c_fn: Arc::new(|_, _, _| [0.0, 1.0, 0.0]),
                cbar_fn: Some(Arc::new(|_, _| [0.1, 0.0, 0.0])),
            },
            villous_profile(),
        )
        .unwrap();
        let err = v.check_assumptions(0.0, 0.0, 100, 31, 1e-6).unwrap_err();
        assert!(matches!(err, ModelError::AssumptionViolation { name: "C3", .. }));
    }
}
