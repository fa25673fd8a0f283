//! One period of the rescaled villous domain.
//!
//! The tube wall is a radial graph around the axis `e1`,
//!
//! ```text
//! rho(z, theta) = r * (1 + psi(z, theta)),   psi >= 0,
//! ```
//!
//! with `psi` 1-periodic in the axial coordinate `z` and 2*pi-periodic in
//! `theta`. One period cell is
//!
//! ```text
//! P = { (z, x2, x3) : 0 <= z <= 1, sqrt(x2^2 + x3^2) <= rho(z, theta) }.
//! ```
//!
//! This module computes the cell measures
//!
//! ```text
//! |P|            = int_0^1 int_0^2pi rho^2 / 2 dtheta dz
//! |dP \cap dOm|  = int_0^1 int_0^2pi sqrt(rho^2 (1 + rho_z^2) + rho_theta^2) dtheta dz
//! R(P)           = |dP \cap dOm| / |P|
//! ```
//!
//! together with surface and volume averages of coefficient functions over
//! the cell. Quadrature is the periodic midpoint rule in (z, theta) and composite Simpson in the mapped radial
//! direction, so smooth periodic integrands converge spectrally and the
//! radial rule is order 4.

use crate::util::Vec3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid quadrature grid: {0}")]
    InvalidGrid(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("singular geometry at (z, theta) = ({z}, {theta}): radius too small")]
    SingularGeometry { z: f64, theta: f64 },
}

/// Villus height profile on the period cell, `psi(z, theta) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileShape {
    /// Plain cylinder, `psi = 0`.
    Flat,
    /// Axisymmetric folds, `psi = amp * (1 - cos(2 pi freq z))`.
    RaisedCosine { amp: f64, freq: u32 },
    /// Folds with azimuthal modulation,
    /// `psi = amp * (1 - cos(2 pi freq_z z)) * (1 + beta cos(freq_theta theta))`.
    Bumpy { amp: f64, freq_z: u32, freq_theta: u32, beta: f64 },
    /// Tabulated samples on a uniform (z, theta) grid, bilinear interpolation.
    Table(ProfileTable),
}

/// Uniform tensor grid of `psi` samples on `[0,1) x [0, 2 pi)`.
///
/// The right endpoints are excluded; interpolation wraps periodically.
/// Derivatives are centered differences of the interpolant at the table
/// spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    n_z: usize,
    n_theta: usize,
    values: Vec<f64>, // row-major, index i_z * n_theta + i_theta
}

impl ProfileTable {
    pub fn new(n_z: usize, n_theta: usize, values: Vec<f64>) -> Result<Self, GeometryError> {
        if n_z < 2 || n_theta < 1 {
            return Err(GeometryError::InvalidProfile(
                "profile table needs at least 2 z-samples and 1 theta-sample".into(),
            ));
        }
        if values.len() != n_z * n_theta {
            return Err(GeometryError::InvalidProfile(format!(
                "profile table has {} values, expected {} ({} x {})",
                values.len(),
                n_z * n_theta,
                n_z,
                n_theta
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(GeometryError::InvalidProfile(
                "profile table values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { n_z, n_theta, values })
    }

    /// Parse a CSV table with header `z,theta,psi`; samples must fill a
    /// uniform tensor grid on `[0,1) x [0, 2 pi)`.
    pub fn from_csv(text: &str) -> Result<Self, GeometryError> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if lineno == 0 && line.starts_with(|c: char| c.is_alphabetic()) {
                continue; // header
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(GeometryError::InvalidProfile(format!(
                    "line {}: expected 3 columns z,theta,psi",
                    lineno + 1
                )));
            }
            let parse = |s: &str| -> Result<f64, GeometryError> {
                s.parse().map_err(|_| {
                    GeometryError::InvalidProfile(format!("line {}: bad number '{}'", lineno + 1, s))
                })
            };
            rows.push((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?));
        }
        let mut zs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        zs.sort_by(f64::total_cmp);
        zs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut ths: Vec<f64> = rows.iter().map(|r| r.1).collect();
        ths.sort_by(f64::total_cmp);
        ths.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let (n_z, n_theta) = (zs.len(), ths.len());
        if rows.len() != n_z * n_theta {
            return Err(GeometryError::InvalidProfile(format!(
                "table is not a full tensor grid: {} rows for {} x {} coordinates",
                rows.len(),
                n_z,
                n_theta
            )));
        }
        let check_uniform = |xs: &[f64], period: f64, name: &str| -> Result<(), GeometryError> {
            let n = xs.len();
            let h = period / n as f64;
            for (k, x) in xs.iter().enumerate() {
                if (x - k as f64 * h).abs() > 1e-9 * period.max(1.0) {
                    return Err(GeometryError::InvalidProfile(format!(
                        "{name} samples must lie on the uniform grid k*{period}/{n}, right endpoint excluded (period wraps)",
                    )));
                }
            }
            Ok(())
        };
        check_uniform(&zs, 1.0, "z")?;
        check_uniform(&ths, 2.0 * std::f64::consts::PI, "theta")?;
        let mut values = vec![f64::NAN; n_z * n_theta];
        for (z, th, psi) in rows {
            let iz = zs.iter().position(|x| (x - z).abs() < 1e-9).unwrap();
            let it = ths.iter().position(|x| (x - th).abs() < 1e-9).unwrap();
            values[iz * n_theta + it] = psi;
        }
        Self::new(n_z, n_theta, values)
    }

    fn eval(&self, z: f64, theta: f64) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let zf = (z.rem_euclid(1.0)) * self.n_z as f64;
        let tf = (theta.rem_euclid(two_pi)) / two_pi * self.n_theta as f64;
        let iz = zf.floor() as usize % self.n_z;
        let it = tf.floor() as usize % self.n_theta;
        let (az, at) = (zf - zf.floor(), tf - tf.floor());
        let izp = (iz + 1) % self.n_z;
        let itp = (it + 1) % self.n_theta;
        let v = |i: usize, j: usize| self.values[i * self.n_theta + j];
        (1.0 - az) * ((1.0 - at) * v(iz, it) + at * v(iz, itp))
            + az * ((1.0 - at) * v(izp, it) + at * v(izp, itp))
    }

    fn dz(&self) -> f64 {
        1.0 / self.n_z as f64
    }

    fn dtheta(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_theta as f64
    }
}

/// One period of the rescaled domain: a radial-graph tube around `e1`.
#[derive(Debug, Clone, PartialEq)]
pub struct VillusProfile {
    base_radius: f64,
    shape: ProfileShape,
}

impl VillusProfile {
    pub fn new(base_radius: f64, shape: ProfileShape) -> Result<Self, GeometryError> {
        if !(base_radius > 0.0) || !base_radius.is_finite() {
            return Err(GeometryError::InvalidProfile(
                "base radius must be positive and finite".into(),
            ));
        }
        match &shape {
            ProfileShape::RaisedCosine { amp, .. } if *amp < 0.0 => {
                return Err(GeometryError::InvalidProfile("amplitude must be nonnegative".into()))
            }
            ProfileShape::Bumpy { amp, beta, .. } if *amp < 0.0 || beta.abs() > 1.0 => {
                return Err(GeometryError::InvalidProfile(
                    "need amp >= 0 and |beta| <= 1 to keep psi nonnegative".into(),
                ))
            }
            _ => {}
        }
        Ok(Self { base_radius, shape })
    }

    /// Plain cylinder of the given radius.
    pub fn cylinder(base_radius: f64) -> Self {
        Self::new(base_radius, ProfileShape::Flat).unwrap()
    }

    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    /// Villus height `psi(z, theta)`.
    pub fn psi(&self, z: f64, theta: f64) -> f64 {
        use std::f64::consts::PI;
        match &self.shape {
            ProfileShape::Flat => 0.0,
            ProfileShape::RaisedCosine { amp, freq } => {
                amp * (1.0 - (2.0 * PI * *freq as f64 * z).cos())
            }
            ProfileShape::Bumpy { amp, freq_z, freq_theta, beta } => {
                amp * (1.0 - (2.0 * PI * *freq_z as f64 * z).cos())
                    * (1.0 + beta * (*freq_theta as f64 * theta).cos())
            }
            ProfileShape::Table(t) => t.eval(z, theta),
        }
    }

    /// d psi / dz; analytic for built-ins, centered difference at the table
    /// spacing for tabulated profiles.
    pub fn psi_dz(&self, z: f64, theta: f64) -> f64 {
        use std::f64::consts::PI;
        match &self.shape {
            ProfileShape::Flat => 0.0,
            ProfileShape::RaisedCosine { amp, freq } => {
                let w = 2.0 * PI * *freq as f64;
                amp * w * (w * z).sin()
            }
            ProfileShape::Bumpy { amp, freq_z, freq_theta, beta } => {
                let w = 2.0 * PI * *freq_z as f64;
                amp * w * (w * z).sin() * (1.0 + beta * (*freq_theta as f64 * theta).cos())
            }
            ProfileShape::Table(t) => {
                let h = t.dz();
                (t.eval(z + h, theta) - t.eval(z - h, theta)) / (2.0 * h)
            }
        }
    }

    /// d psi / dtheta.
    pub fn psi_dtheta(&self, z: f64, theta: f64) -> f64 {
        use std::f64::consts::PI;
        match &self.shape {
            ProfileShape::Flat | ProfileShape::RaisedCosine { .. } => 0.0,
            ProfileShape::Bumpy { amp, freq_z, freq_theta, beta } => {
                let m = *freq_theta as f64;
                -amp * (1.0 - (2.0 * PI * *freq_z as f64 * z).cos()) * beta * m * (m * theta).sin()
            }
            ProfileShape::Table(t) => {
                let h = t.dtheta();
                (t.eval(z, theta + h) - t.eval(z, theta - h)) / (2.0 * h)
            }
        }
    }

    /// Wall radius `rho(z, theta) = r (1 + psi)`.
    pub fn rho(&self, z: f64, theta: f64) -> f64 {
        self.base_radius * (1.0 + self.psi(z, theta))
    }

    pub fn rho_dz(&self, z: f64, theta: f64) -> f64 {
        self.base_radius * self.psi_dz(z, theta)
    }

    pub fn rho_dtheta(&self, z: f64, theta: f64) -> f64 {
        self.base_radius * self.psi_dtheta(z, theta)
    }

    /// True if the profile does not depend on theta.
    pub fn is_axisymmetric(&self) -> bool {
        match &self.shape {
            ProfileShape::Flat | ProfileShape::RaisedCosine { .. } => true,
            ProfileShape::Bumpy { beta, .. } => *beta == 0.0,
            ProfileShape::Table(t) => t.n_theta == 1,
        }
    }

    /// Sampled periodicity check: `psi(z+1) = psi(z)` and
    /// `psi(theta + 2 pi) = psi(theta)` to the given tolerance.
    pub fn check_periodicity(&self, samples: usize, tol: f64, seed: u64) -> Result<(), GeometryError> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let z = rng.gen::<f64>();
            let th = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
            let a = self.psi(z, th);
            if (a - self.psi(z + 1.0, th)).abs() > tol {
                return Err(GeometryError::InvalidProfile(format!(
                    "psi not 1-periodic in z at z = {z}"
                )));
            }
            if (a - self.psi(z, th + 2.0 * std::f64::consts::PI)).abs() > tol {
                return Err(GeometryError::InvalidProfile(format!(
                    "psi not 2 pi-periodic in theta at theta = {th}"
                )));
            }
        }
        Ok(())
    }

    /// Surface point `(z, rho cos theta, rho sin theta)`.
    pub fn surface_point(&self, z: f64, theta: f64) -> Vec3 {
        let rho = self.rho(z, theta);
        [z, rho * theta.cos(), rho * theta.sin()]
    }
}

/// Measures of one period cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodCellMeasures {
    /// |P|, the 3-d measure of one period.
    pub volume: f64,
    /// |dP ∩ dOmega|, the villous surface area over one period.
    pub lateral_area: f64,
    /// R(P) = lateral_area / volume.
    pub ratio_rp: f64,
}

fn check_grid(n_z: usize, n_theta: usize) -> Result<(), GeometryError> {
    if n_z < 8 || n_theta < 8 {
        return Err(GeometryError::InvalidGrid(format!(
            "need n_z >= 8 and n_theta >= 8, got {n_z} x {n_theta}"
        )));
    }
    Ok(())
}

/// Surface area element `sqrt(rho^2 (1 + rho_z^2) + rho_theta^2)`.
fn area_element(p: &VillusProfile, z: f64, theta: f64) -> f64 {
    let rho = p.rho(z, theta);
    let rz = p.rho_dz(z, theta);
    let rt = p.rho_dtheta(z, theta);
    (rho * rho * (1.0 + rz * rz) + rt * rt).sqrt()
}

/// Volume, lateral area and their ratio R(P) for one period cell,
/// by the periodic trapezoid rule on an `n_z x n_theta` grid.
pub fn cell_measures(
    p: &VillusProfile,
    n_z: usize,
    n_theta: usize,
) -> Result<PeriodCellMeasures, GeometryError> {
    check_grid(n_z, n_theta)?;
    p.check_periodicity(32, 1e-12, 0x9e3779b9)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = two_pi / (n_z * n_theta) as f64;
    let mut volume = 0.0;
    let mut area = 0.0;
    for i in 0..n_z {
        let z = (i as f64 + 0.5) / n_z as f64;
        for j in 0..n_theta {
            let th = two_pi * (j as f64 + 0.5) / n_theta as f64;
            let rho = p.rho(z, th);
            volume += w * 0.5 * rho * rho;
            area += w * area_element(p, z, th);
        }
    }
    Ok(PeriodCellMeasures { volume, lateral_area: area, ratio_rp: area / volume })
}

/// Values that can be averaged: scalars and 3-vectors.
pub trait Averageable: Copy {
    fn zero() -> Self;
    fn add_scaled(&mut self, other: Self, w: f64);
    fn scale(self, s: f64) -> Self;
}

impl Averageable for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: Self, w: f64) {
        *self += other * w;
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Averageable for Vec3 {
    fn zero() -> Self {
        [0.0; 3]
    }
    fn add_scaled(&mut self, other: Self, w: f64) {
        for k in 0..3 {
            self[k] += other[k] * w;
        }
    }
    fn scale(self, s: f64) -> Self {
        [self[0] * s, self[1] * s, self[2] * s]
    }
}

/// Mean of `f` over the villous surface of one period,
/// `(1/|dP ∩ dOm|) int f dsigma`.
pub fn surface_average<T, F>(
    p: &VillusProfile,
    f: F,
    n_z: usize,
    n_theta: usize,
) -> Result<T, GeometryError>
where
    T: Averageable,
    F: Fn(Vec3) -> T,
{
    check_grid(n_z, n_theta)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = two_pi / (n_z * n_theta) as f64;
    let mut acc = T::zero();
    let mut area = 0.0;
    for i in 0..n_z {
        let z = (i as f64 + 0.5) / n_z as f64;
        for j in 0..n_theta {
            let th = two_pi * (j as f64 + 0.5) / n_theta as f64;
            let dsigma = w * area_element(p, z, th);
            acc.add_scaled(f(p.surface_point(z, th)), dsigma);
            area += dsigma;
        }
    }
    Ok(acc.scale(1.0 / area))
}

/// Mean of `f` over the cell interior, `(1/|P|) int_P f dX`, by the
/// trapezoid rule in (z, theta) and Simpson in the mapped radius.
/// `n_rho` is the Simpson node count (odd, >= 3).
pub fn volume_average<T, F>(
    p: &VillusProfile,
    f: F,
    n_z: usize,
    n_theta: usize,
    n_rho: usize,
) -> Result<T, GeometryError>
where
    T: Averageable,
    F: Fn(Vec3) -> T,
{
    check_grid(n_z, n_theta)?;
    if n_rho < 3 || n_rho % 2 == 0 {
        return Err(GeometryError::InvalidGrid(format!(
            "radial Simpson rule needs an odd node count >= 3, got {n_rho}"
        )));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let w_zt = two_pi / (n_z * n_theta) as f64;
    let w_rho = crate::util::simpson_weights(n_rho);
    let mut acc = T::zero();
    let mut vol = 0.0;
    for i in 0..n_z {
        let z = (i as f64 + 0.5) / n_z as f64;
        for j in 0..n_theta {
            let th = two_pi * (j as f64 + 0.5) / n_theta as f64;
            let rho_max = p.rho(z, th);
            let (ct, st) = (th.cos(), th.sin());
            // int_0^rho_max f rho' drho' = rho_max^2 int_0^1 f(rhat rho_max) rhat drhat
            for (k, wk) in w_rho.iter().enumerate() {
                let rhat = k as f64 / (n_rho - 1) as f64;
                let r = rhat * rho_max;
                let weight = w_zt * rho_max * rho_max * wk * rhat;
                acc.add_scaled(f([z, r * ct, r * st]), weight);
                vol += weight;
            }
        }
    }
    Ok(acc.scale(1.0 / vol))
}

/// Outward unit normal of the villous surface at `(z, theta)`.
pub fn outward_normal(p: &VillusProfile, z: f64, theta: f64) -> Result<Vec3, GeometryError> {
    let rho = p.rho(z, theta);
    let rz = p.rho_dz(z, theta);
    let rt = p.rho_dtheta(z, theta);
    let (ct, st) = (theta.cos(), theta.sin());
    // Cross product of the surface tangents, oriented outward (positive
    // radial component on a flat wall).
    let n = [-rz * rho, rt * st + rho * ct, -rt * ct + rho * st];
    let len = crate::util::norm(n);
    if !(len > 1e-14) {
        return Err(GeometryError::SingularGeometry { z, theta });
    }
    Ok(crate::util::scale(n, 1.0 / len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn plain_cylinder_measures_are_analytic() {
        for r in [0.5, 1.0, 2.0] {
            let p = VillusProfile::cylinder(r);
            let m = cell_measures(&p, 16, 16).unwrap();
            assert!((m.volume - PI * r * r).abs() < 1e-10, "volume {}", m.volume);
            assert!((m.lateral_area - 2.0 * PI * r).abs() < 1e-10);
            assert!((m.ratio_rp - 2.0 / r).abs() < 1e-10);
        }
    }

    #[test]
    fn grid_too_coarse_is_rejected() {
        let p = VillusProfile::cylinder(1.0);
        assert!(matches!(cell_measures(&p, 4, 16), Err(GeometryError::InvalidGrid(_))));
    }

    #[test]
    fn surface_average_of_constant_is_constant() {
        let p = VillusProfile::new(1.0, ProfileShape::RaisedCosine { amp: 0.1, freq: 1 }).unwrap();
        let avg: f64 = surface_average(&p, |_| 3.25, 32, 16).unwrap();
        assert!((avg - 3.25).abs() < 1e-12);
    }

    #[test]
    fn surface_average_of_axial_harmonic_vanishes() {
        let p = VillusProfile::cylinder(1.0);
        let avg: f64 = surface_average(&p, |x| (2.0 * PI * x[0]).cos(), 64, 8).unwrap();
        assert!(avg.abs() < 1e-10);
    }

    #[test]
    fn surface_average_of_z_is_one_half() {
        let p = VillusProfile::cylinder(1.0);
        let avg: f64 = surface_average(&p, |x| x[0], 64, 8).unwrap();
        assert!((avg - 0.5).abs() < 1e-10);
    }

    #[test]
    fn volume_average_of_transverse_coordinate_vanishes() {
        let p = VillusProfile::new(1.0, ProfileShape::RaisedCosine { amp: 0.1, freq: 1 }).unwrap();
        let avg: f64 = volume_average(&p, |x| x[1], 32, 16, 9).unwrap();
        assert!(avg.abs() < 1e-10);
    }

    #[test]
    fn normals_on_cylinder_are_radial() {
        let p = VillusProfile::cylinder(1.0);
        for th in [0.0, 0.7, 2.2, 5.1] {
            let n = outward_normal(&p, 0.3, th).unwrap();
            assert!((n[0]).abs() < 1e-14);
            assert!((n[1] - th.cos()).abs() < 1e-14);
            assert!((n[2] - th.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn normal_is_radial_at_profile_critical_point() {
        // psi'(z) = 0 at z = 1/2 for the raised cosine.
        let p = VillusProfile::new(1.0, ProfileShape::RaisedCosine { amp: 0.1, freq: 1 }).unwrap();
        let n = outward_normal(&p, 0.5, 1.0).unwrap();
        assert!(n[0].abs() < 1e-12);
    }

    #[test]
    fn normal_orthogonal_to_finite_difference_tangents() {
        use rand::{Rng, SeedableRng};
        let p = VillusProfile::new(
            1.0,
            ProfileShape::Bumpy { amp: 0.1, freq_z: 2, freq_theta: 3, beta: 0.4 },
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let h = 1e-6;
        for _ in 0..1000 {
            let z = rng.gen::<f64>();
            let th = rng.gen::<f64>() * 2.0 * PI;
            let n = outward_normal(&p, z, th).unwrap();
            let s = |z: f64, th: f64| p.surface_point(z, th);
            let tz = [
                (s(z + h, th)[0] - s(z - h, th)[0]) / (2.0 * h),
                (s(z + h, th)[1] - s(z - h, th)[1]) / (2.0 * h),
                (s(z + h, th)[2] - s(z - h, th)[2]) / (2.0 * h),
            ];
            let tt = [
                (s(z, th + h)[0] - s(z, th - h)[0]) / (2.0 * h),
                (s(z, th + h)[1] - s(z, th - h)[1]) / (2.0 * h),
                (s(z, th + h)[2] - s(z, th - h)[2]) / (2.0 * h),
            ];
            assert!(crate::util::dot(n, tz).abs() < 1e-8);
            assert!(crate::util::dot(n, tt).abs() < 1e-8);
            assert!((crate::util::norm(n) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn averages_are_linear_and_preserve_constants() {
        let p = VillusProfile::new(1.0, ProfileShape::RaisedCosine { amp: 0.2, freq: 2 }).unwrap();
        let f = |x: Vec3| x[0] * x[0] + 0.3 * x[1];
        let g = |x: Vec3| (2.0 * PI * x[0]).sin() - x[2];
        let sa = |f: &dyn Fn(Vec3) -> f64| surface_average(&p, f, 24, 12).unwrap();
        let lhs: f64 = sa(&|x| 2.0 * f(x) - 0.5 * g(x));
        let rhs = 2.0 * sa(&f) - 0.5 * sa(&g);
        assert!((lhs - rhs).abs() < 1e-12);
        let va = |f: &dyn Fn(Vec3) -> f64| volume_average(&p, f, 24, 12, 9).unwrap();
        let lhs: f64 = va(&|x| 2.0 * f(x) - 0.5 * g(x));
        let rhs = 2.0 * va(&f) - 0.5 * va(&g);
        assert!((lhs - rhs).abs() < 1e-12);
        let c: f64 = va(&|_| -2.5);
        assert!((c + 2.5).abs() < 1e-12);
    }

    #[test]
    fn table_profile_roundtrip_and_periodicity() {
        let n_z = 32;
        let n_t = 8;
        let mut values = Vec::new();
        for i in 0..n_z {
            let z = i as f64 / n_z as f64;
            for _ in 0..n_t {
                values.push(0.1 * (1.0 - (2.0 * PI * z).cos()));
            }
        }
        let table = ProfileTable::new(n_z, n_t, values).unwrap();
        let p = VillusProfile::new(1.0, ProfileShape::Table(table)).unwrap();
        p.check_periodicity(100, 1e-12, 3).unwrap();
        // Interpolant reproduces the nodes.
        assert!((p.psi(3.0 / n_z as f64, 0.1) - 0.1 * (1.0 - (2.0 * PI * 3.0 / n_z as f64).cos())).abs() < 1e-12);
    }

    #[test]
    fn villous_folding_grows_area_and_fine_folding_grows_ratio() {
        // Gentle folds grow the wall area but the volume grows faster, so
        // R(P) can drop below the cylinder value; finger-like folds win.
        let cyl = cell_measures(&VillusProfile::cylinder(1.0), 64, 8).unwrap();
        let gentle = VillusProfile::new(1.0, ProfileShape::RaisedCosine { amp: 0.1, freq: 1 }).unwrap();
        let mg = cell_measures(&gentle, 128, 8).unwrap();
        assert!(mg.lateral_area >= cyl.lateral_area);
        let fingers = VillusProfile::new(1.0, ProfileShape::RaisedCosine { amp: 0.1, freq: 4 }).unwrap();
        let mf = cell_measures(&fingers, 256, 8).unwrap();
        assert!(mf.lateral_area >= cyl.lateral_area);
        assert!(
            cyl.ratio_rp <= mf.ratio_rp,
            "fine folding should amplify the surface ratio: {} vs {}",
            cyl.ratio_rp,
            mf.ratio_rp
        );
    }

    #[test]
    fn quadrature_order_on_tabulated_profile() {
        // A piecewise-linear wall has genuine O(h^2) quadrature error; the
        // measured order documents the composite rule. Smooth profiles
        // converge spectrally (see below) and sit at rounding level long
        // before the order could be measured.
        let n_t = 16;
        let table_of = |n: usize| {
            let mut values = Vec::new();
            for i in 0..n {
                let z = i as f64 / n as f64;
                values.push(0.1 * (1.0 - (2.0 * PI * z).cos()));
            }
            let mut grid = Vec::new();
            for v in values {
                for _ in 0..1 {
                    grid.push(v);
                }
            }
            ProfileTable::new(n, 1, grid).unwrap()
        };
        let p = VillusProfile::new(1.0, ProfileShape::Table(table_of(n_t))).unwrap();
        let reference = cell_measures(&p, 4096, 8).unwrap();
        let err = |n: usize| {
            let m = cell_measures(&p, n, 8).unwrap();
            (m.lateral_area - reference.lateral_area).abs()
        };
        // Grid counts chosen so the table kinks fall strictly inside
        // quadrature cells on both grids.
        let (e1, e2) = (err(48), err(96));
        let order = (e1 / e2).log2();
        assert!(order > 1.9, "measured quadrature order {order} ({e1:.3e} -> {e2:.3e})");
    }

    #[test]
    fn smooth_profile_measures_hit_rounding_fast() {
        let p = VillusProfile::new(1.0, ProfileShape::RaisedCosine { amp: 0.1, freq: 1 }).unwrap();
        let coarse = cell_measures(&p, 32, 8).unwrap();
        let fine = cell_measures(&p, 4096, 8).unwrap();
        assert!((coarse.lateral_area - fine.lateral_area).abs() < 1e-12);
        assert!((coarse.volume - fine.volume).abs() < 1e-12);
    }

    #[test]
    fn csv_table_parses() {
        let mut text = String::from("z,theta,psi\n");
        for i in 0..8 {
            let z = i as f64 / 8.0;
            text.push_str(&format!("{z},0.0,{}\n", 0.05 * i as f64));
        }
        let t = ProfileTable::from_csv(&text).unwrap();
        assert_eq!(t.n_z, 8);
        assert_eq!(t.n_theta, 1);
    }
}
