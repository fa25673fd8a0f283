//! Finite-volume solver for the cell problem on one period of the villous
//! domain.
//!
//! For parameters `(p, mu, nu, delta, x1, t)` the corrector `u1` solves
//!
//! ```text
//! -chi Lap u1 + c . (p e1 + D u1) = lambda + delta        in the cell,
//! (p e1 + D u1) . N = -Theta(x1, X, t, mu, nu) / chi      on the wall,
//! ```
//!
//! with `u1` 1-periodic in the axial direction and the axis regular. The
//! problem is singular (constants solve the homogeneous problem); it is
//! solvable only for one value of `lambda`.
//!
//! Discretely the same structure is reproduced exactly: every interior flux
//! is shared with opposite sign by two cells, so summing all cell balances
//! leaves only data, and
//!
//! ```text
//! lambda_h = [ sum_wall (Theta + chi p.N) dsigma + p sum_cells (c.e1) dV ]
//!            / total volume  -  delta
//! ```
//!
//! is the unique value making the discrete system consistent (the discrete
//! Fredholm projection). The pinned system is then solved iteratively and
//! the corrector is normalized to volume-weighted mean zero.
//!
//! The solver is restricted to axisymmetric profiles; diffusion uses the
//! monotone mapped-grid conductances of [`crate::grid`], advection is
//! first-order upwind on face volume fluxes. For the built-in velocity
//! families the face fluxes are streamfunction differences, which makes the
//! discrete divergence vanish exactly.

use crate::geometry::VillusProfile;
use crate::grid::MappedAnnulusGrid;
use crate::homog::CellProblemData;
use crate::model::{AbsorptionModel, ModelError, VelocityField};
use crate::sparse::{bicgstab, CooBuilder, SparseError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CellError {
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cell solver failed: {0}")]
    SolverFailure(#[from] SparseError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct CellSolveOptions {
    pub n_z: usize,
    pub n_rho: usize,
    pub rtol: f64,
    pub max_iter: usize,
    /// Solve with this `lambda` instead of the compatibility projection;
    /// an incompatible value makes the solve fail, which is the point.
    pub lambda_override: Option<f64>,
    /// Initial iterate for the linear solver (zeros when absent).
    pub initial_guess: Option<Vec<f64>>,
}

impl Default for CellSolveOptions {
    fn default() -> Self {
        Self {
            n_z: 64,
            n_rho: 64,
            rtol: 1e-12,
            max_iter: 200_000,
            lambda_override: None,
            initial_guess: None,
        }
    }
}

/// Corrector values at the cell centers of the mapped grid.
#[derive(Debug, Clone)]
pub struct CorrectorField {
    pub n_z: usize,
    pub n_rho: usize,
    pub z_centers: Vec<f64>,
    pub rhat_centers: Vec<f64>,
    /// Row-major `[i_z][j_rho]`.
    pub values: Vec<f64>,
    /// Volume-weighted mean after normalization (zero to rounding).
    pub mean: f64,
}

impl CorrectorField {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_rho + j]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CellSolveReport {
    pub lambda_discrete: f64,
    /// Relative Euclidean residual of the discrete system.
    pub residual: f64,
    pub iterations: usize,
    /// Conductances clamped to keep the operator monotone (zero on
    /// balanced meshes).
    pub clamped_edges: usize,
}

/// Advective volume fluxes (per radian) through the grid faces.
struct FaceFluxes {
    /// `q_z[k][j]` through z-face `k` between columns `k-1` and `k`.
    q_z: Vec<f64>,
    /// `q_r[i][jf]` through the rhat-face `jf` of column `i` (jf in 1..n_rho).
    q_r: Vec<f64>,
    /// Axial volume-flux integral `int_cell c.e1 dV` per cell.
    axial_cell: Vec<f64>,
}

fn face_fluxes(
    grid: &MappedAnnulusGrid,
    velocity: &VelocityField,
    x1: f64,
    t: f64,
) -> FaceFluxes {
    let (n_z, n_rho) = (grid.n_z, grid.n_rho);
    let mut q_z = vec![0.0; n_z * n_rho];
    let mut q_r = vec![0.0; n_z * (n_rho + 1)];
    let mut axial_cell = vec![0.0; n_z * n_rho];
    if velocity.stream_psi(0.0).is_some() {
        // Streamfunction families: flux through a face is the difference of
        // the streamfunction at its radial ends; constant-rhat faces are
        // streamlines and carry none.
        for j in 0..n_rho {
            let dq = velocity.stream_psi(grid.rhat_face(j + 1)).unwrap()
                - velocity.stream_psi(grid.rhat_face(j)).unwrap();
            for k in 0..n_z {
                q_z[k * n_rho + j] = dq;
            }
            for i in 0..n_z {
                axial_cell[i * n_rho + j] = dq * grid.dz;
            }
        }
    } else {
        for k in 0..n_z {
            let z = grid.z0 + k as f64 * grid.dz;
            for j in 0..n_rho {
                let rho = grid.rhat_center(j) * grid.r_face[k];
                let c = velocity.eval(x1, [z, rho, 0.0], t);
                q_z[k * n_rho + j] = c[0] * grid.zface_area(k, j);
            }
        }
        for i in 0..n_z {
            let z = grid.z_center(i);
            for jf in 1..n_rho {
                let rho = grid.rhat_face(jf) * grid.r_center[i];
                let c = velocity.eval(x1, [z, rho, 0.0], t);
                let (nds_z, nds_r) = grid.rhoface_nds(i, jf);
                q_r[i * (n_rho + 1) + jf] = c[0] * nds_z + c[1] * nds_r;
            }
            for j in 0..n_rho {
                let rho = grid.rhat_center(j) * grid.r_center[i];
                let c = velocity.eval(x1, [z, rho, 0.0], t);
                axial_cell[i * n_rho + j] = c[0] * grid.cell_volume(i, j);
            }
        }
    }
    FaceFluxes { q_z, q_r, axial_cell }
}

/// Solve the cell problem; returns the mean-zero corrector and the discrete
/// compatibility value.
pub fn solve_cell_problem(
    profile: &VillusProfile,
    velocity: &VelocityField,
    absorption: &AbsorptionModel,
    data: &CellProblemData,
    opts: &CellSolveOptions,
) -> Result<(CorrectorField, CellSolveReport), CellError> {
    if !profile.is_axisymmetric() {
        return Err(CellError::UnsupportedGeometry(
            "the cell solver handles theta-independent profiles only".into(),
        ));
    }
    if opts.n_z < 16 || opts.n_rho < 16 {
        return Err(CellError::InvalidParameter(format!(
            "need grid sizes >= 16, got {} x {}",
            opts.n_z, opts.n_rho
        )));
    }
    let chi = absorption.chi;
    let grid = MappedAnnulusGrid::new(
        opts.n_z,
        opts.n_rho,
        0.0,
        1.0,
        true,
        |z| profile.rho(z, 0.0),
        |z| profile.rho_dz(z, 0.0),
    );
    let (n_z, n_rho) = (grid.n_z, grid.n_rho);
    let n = grid.n_cells();
    let (edges, clamped_edges) = grid.diffusion_edges();
    let fluxes = face_fluxes(&grid, velocity, data.x1, data.t);

    let mut builder = CooBuilder::new(n);
    for e in &edges {
        let k = chi * e.kappa;
        builder.add(e.a, e.a, k);
        builder.add(e.b, e.b, k);
        builder.add(e.a, e.b, -k);
        builder.add(e.b, e.a, -k);
    }
    // Upwind advection: flux q from cell `a` to cell `b` moves a's value
    // forward when positive, b's value backward when negative.
    let upwind = |builder: &mut CooBuilder, a: usize, b: usize, q: f64| {
        let qp = q.max(0.0);
        let qm = (-q).max(0.0);
        builder.add(a, a, qp);
        builder.add(a, b, -qm);
        builder.add(b, b, qm);
        builder.add(b, a, -qp);
    };
    for k in 0..n_z {
        let left = (k + n_z - 1) % n_z;
        let right = k;
        for j in 0..n_rho {
            upwind(&mut builder, grid.idx(left, j), grid.idx(right, j), fluxes.q_z[k * n_rho + j]);
        }
    }
    for i in 0..n_z {
        for jf in 1..n_rho {
            let q = fluxes.q_r[i * (n_rho + 1) + jf];
            if q != 0.0 {
                upwind(&mut builder, grid.idx(i, jf - 1), grid.idx(i, jf), q);
            }
        }
    }
    let a = builder.build();

    // Right-hand side without lambda: volumic source, axial drive, wall data.
    let mut b0 = vec![0.0; n];
    let mut volumes = vec![0.0; n];
    for i in 0..n_z {
        for j in 0..n_rho {
            let id = grid.idx(i, j);
            volumes[id] = grid.cell_volume(i, j);
            b0[id] = volumes[id] * data.delta - data.p * fluxes.axial_cell[id];
        }
    }
    for i in 0..n_z {
        let z = grid.z_center(i);
        let x_wall = [z, grid.r_center[i], 0.0];
        let theta = crate::homog::theta_surface(absorption, data.x1, x_wall, data.t, data.mu, data.nu);
        let (normal_z, _) = grid.wall_unit_normal(i);
        let flux_data = (theta + chi * data.p * normal_z) * grid.wall_area(i);
        b0[grid.idx(i, n_rho - 1)] -= flux_data;
    }
    let total_volume: f64 = volumes.iter().sum();
    let lambda_discrete = -b0.iter().sum::<f64>() / total_volume;
    let lambda = opts.lambda_override.unwrap_or(lambda_discrete);
    let b: Vec<f64> = (0..n).map(|i| b0[i] + lambda * volumes[i]).collect();

    let x0 = match &opts.initial_guess {
        Some(g) if g.len() == n => g.clone(),
        Some(_) => {
            return Err(CellError::InvalidParameter("initial guess has the wrong length".into()))
        }
        None => vec![0.0; n],
    };
    let b_scale = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (mut u, stats) = bicgstab(&a, &b, &x0, opts.rtol, 1e-14 * b_scale.max(1e-30), opts.max_iter)?;

    // Remove the kernel component: volume-weighted mean zero.
    let mean: f64 =
        u.iter().zip(&volumes).map(|(ui, vi)| ui * vi).sum::<f64>() / total_volume;
    for ui in u.iter_mut() {
        *ui -= mean;
    }
    let mean_after: f64 =
        u.iter().zip(&volumes).map(|(ui, vi)| ui * vi).sum::<f64>() / total_volume;

    let field = CorrectorField {
        n_z,
        n_rho,
        z_centers: (0..n_z).map(|i| grid.z_center(i)).collect(),
        rhat_centers: (0..n_rho).map(|j| grid.rhat_center(j)).collect(),
        values: u,
        mean: mean_after,
    };
    let report = CellSolveReport {
        lambda_discrete,
        residual: if b_scale > 0.0 { stats.residual / b_scale } else { 0.0 },
        iterations: stats.iterations,
        clamped_edges,
    };
    Ok((field, report))
}
