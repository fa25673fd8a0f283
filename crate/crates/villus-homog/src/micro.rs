//! Fine-scale initial-boundary value solver on the villous tube, and the
//! micro/macro comparison study.
//!
//! The tube of spacing parameter `eps` is `rho <= eps r (1 + psi(x/eps))`
//! over `x in [0, L]` with an integer number of wall periods. The fields
//! evolve by
//!
//! ```text
//! v_t = eps omega Lap v - c . Dv - zeta phi(v)
//! u_t = eps chi   Lap u - c . Du + zeta phi(v)
//! ```
//!
//! with wall fluxes (outward normal `n`)
//!
//! ```text
//! omega dv/dn = -rho_surf v        chi du/dn = -Theta(x1, x/eps, t, u, v)
//! ```
//!
//! Dirichlet inflow `(u0(t), v0(t))` on the whole cross-section at `x = 0`,
//! free outflow at `x = L`, and empty initial state. The `eps`-scaled
//! diffusivities are the regime in which wall effects survive the limit.
//!
//! Discretization: the mapped-rectangle finite volumes of [`crate::grid`]
//! (monotone diffusion graph, upwind advection on face volume fluxes,
//! explicit Euler in time). Wall fluxes enter through the true boundary
//! area and values of the wall-adjacent cells, so losses stay losses and
//! the update is a convex combination: `0 <= v <= sup v0` and `u >= 0`
//! hold discretely to rounding.
//!
//! `compare_micro_macro` runs the same scenario at several `eps`, averages
//! each micro solution over cross-sections, and measures the sup distance
//! to the effective 1-d solution driven by the homogenized coefficients of
//! the same models.

use crate::geometry::VillusProfile;
use crate::grid::MappedAnnulusGrid;
use crate::homog::{self, AveragingOptions, HomogError};
use crate::macro1d::{self, AxialGrid, InflowSignals, MacroError};
use crate::model::{AbsorptionModel, ModelError, VelocityField};
use crate::util::Vec3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MicroError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("step size violation: {0}")]
    StepSize(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Macro(#[from] MacroError),
    #[error(transparent)]
    Homog(#[from] HomogError),
}

/// Fine-scale grid: `n_periods` wall periods of spacing `eps`, each resolved
/// by `n_z_per_period` axial cells, `n_rho` mapped radial cells.
#[derive(Debug, Clone)]
pub struct MicroGrid {
    pub eps: f64,
    pub n_periods: usize,
    pub profile: VillusProfile,
    pub n_z_per_period: usize,
    pub n_rho: usize,
}

impl MicroGrid {
    pub fn new(
        eps: f64,
        n_periods: usize,
        profile: VillusProfile,
        n_z_per_period: usize,
        n_rho: usize,
    ) -> Result<Self, MicroError> {
        if !(eps > 0.0) || n_periods == 0 {
            return Err(MicroError::InvalidGrid("need eps > 0 and at least one period".into()));
        }
        if n_z_per_period < 16 {
            return Err(MicroError::InvalidGrid(format!(
                "each period needs >= 16 axial cells, got {n_z_per_period}"
            )));
        }
        if n_rho < 4 {
            return Err(MicroError::InvalidGrid("need >= 4 radial cells".into()));
        }
        if !profile.is_axisymmetric() {
            return Err(MicroError::InvalidGrid(
                "the fine-scale solver handles theta-independent profiles only".into(),
            ));
        }
        Ok(Self { eps, n_periods, profile, n_z_per_period, n_rho })
    }

    /// Build from a target length; fails unless an integer number of
    /// periods fits exactly.
    pub fn from_length(
        eps: f64,
        length: f64,
        profile: VillusProfile,
        n_z_per_period: usize,
        n_rho: usize,
    ) -> Result<Self, MicroError> {
        let periods = length / eps;
        if (periods - periods.round()).abs() > 1e-9 || periods.round() < 1.0 {
            return Err(MicroError::InvalidGrid(format!(
                "length {length} is not an integer number of periods of size {eps}"
            )));
        }
        Self::new(eps, periods.round() as usize, profile, n_z_per_period, n_rho)
    }

    pub fn length(&self) -> f64 {
        self.eps * self.n_periods as f64
    }

    pub fn n_z(&self) -> usize {
        self.n_periods * self.n_z_per_period
    }

    fn mapped(&self) -> MappedAnnulusGrid {
        let eps = self.eps;
        let p = self.profile.clone();
        let p2 = self.profile.clone();
        MappedAnnulusGrid::new(
            self.n_z(),
            self.n_rho,
            0.0,
            self.length(),
            false,
            move |x| eps * p.rho(x / eps, 0.0),
            move |x| p2.rho_dz(x / eps, 0.0),
        )
    }
}

/// Nodal (cell-center) fields on the mapped grid.
#[derive(Debug, Clone)]
pub struct MicroFields {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub time: f64,
}

/// Result of a fine-scale run.
#[derive(Debug, Clone)]
pub struct MicroSeries {
    pub times: Vec<f64>,
    pub snapshots: Vec<MicroFields>,
    pub x_centers: Vec<f64>,
    pub rhat_centers: Vec<f64>,
    pub n_rho: usize,
    pub dt: f64,
    pub steps: usize,
    pub v_max_seen: f64,
    pub v_min_seen: f64,
    pub u_min_seen: f64,
    /// Sampled wall-normal velocity residual for custom fields (the
    /// built-ins are wall-tangent by construction).
    pub c3_residual: f64,
}

struct InteriorFace {
    a: u32,
    b: u32,
    q: f64,
}

struct Assembled {
    edges_a: Vec<u32>,
    edges_b: Vec<u32>,
    edges_k: Vec<f64>,
    faces: Vec<InteriorFace>,
    /// (cell, advective inflow flux, diffusive inflow conductance).
    inflow: Vec<(u32, f64, f64)>,
    /// (cell, advective outflow flux).
    outflow: Vec<(u32, f64)>,
    /// (cell, wall area, slow coordinate, fast wall point).
    wall: Vec<(u32, f64, f64, Vec3)>,
    volumes: Vec<f64>,
}

fn assemble(grid: &MicroGrid, mapped: &MappedAnnulusGrid, velocity: &VelocityField, t: f64) -> Assembled {
    let (n_z, n_rho) = (mapped.n_z, mapped.n_rho);
    let eps = grid.eps;
    let (edges, _clamped) = mapped.diffusion_edges();
    let edges_a: Vec<u32> = edges.iter().map(|e| e.a as u32).collect();
    let edges_b: Vec<u32> = edges.iter().map(|e| e.b as u32).collect();
    let edges_k: Vec<f64> = edges.iter().map(|e| e.kappa).collect();

    let stream = velocity.stream_psi(0.0).is_some();
    let mut faces = Vec::new();
    let mut inflow = Vec::new();
    let mut outflow = Vec::new();
    // Face volume fluxes per radian. For streamfunction families the flux
    // through a z-face slice is eps^2 * dPsi and constant-rhat faces carry
    // none (exact discrete incompressibility).
    let zface_flux = |k: usize, j: usize| -> f64 {
        if stream {
            eps * eps
                * (velocity.stream_psi(mapped.rhat_face(j + 1)).unwrap()
                    - velocity.stream_psi(mapped.rhat_face(j)).unwrap())
        } else {
            let x = mapped.z0 + k as f64 * mapped.dz;
            let rho_phys = mapped.rhat_center(j) * mapped.r_face[k];
            let x_fast = [x / eps, rho_phys / eps, 0.0];
            velocity.eval(x, x_fast, t)[0] * mapped.zface_area(k, j)
        }
    };
    for k in 1..n_z {
        for j in 0..n_rho {
            faces.push(InteriorFace {
                a: mapped.idx(k - 1, j) as u32,
                b: mapped.idx(k, j) as u32,
                q: zface_flux(k, j),
            });
        }
    }
    if !stream {
        for i in 0..n_z {
            let x = mapped.z_center(i);
            for jf in 1..n_rho {
                let rho_phys = mapped.rhat_face(jf) * mapped.r_center[i];
                let x_fast = [x / eps, rho_phys / eps, 0.0];
                let c = velocity.eval(x, x_fast, t);
                let (nds_z, nds_r) = mapped.rhoface_nds(i, jf);
                let q = c[0] * nds_z + c[1] * nds_r;
                if q != 0.0 {
                    faces.push(InteriorFace {
                        a: mapped.idx(i, jf - 1) as u32,
                        b: mapped.idx(i, jf) as u32,
                        q,
                    });
                }
            }
        }
    }
    for j in 0..n_rho {
        // Inflow: advective carry-in plus a one-sided Dirichlet conductance
        // (cross terms drop at the open ends).
        let q_in = zface_flux(0, j);
        let rh = mapped.rhat_center(j);
        let r0 = mapped.r_face[0];
        let kappa_in = rh * r0 * r0 * mapped.drho / (0.5 * mapped.dz);
        inflow.push((mapped.idx(0, j) as u32, q_in, kappa_in));
        outflow.push((mapped.idx(n_z - 1, j) as u32, zface_flux(n_z, j)));
    }
    let mut wall = Vec::new();
    for i in 0..n_z {
        let x = mapped.z_center(i);
        let z_fast = x / eps;
        let wall_fast = [z_fast, grid.profile.rho(z_fast, 0.0), 0.0];
        wall.push((mapped.idx(i, n_rho - 1) as u32, mapped.wall_area(i), x, wall_fast));
    }
    let mut volumes = vec![0.0; mapped.n_cells()];
    for i in 0..n_z {
        for j in 0..n_rho {
            volumes[mapped.idx(i, j)] = mapped.cell_volume(i, j);
        }
    }
    Assembled { edges_a, edges_b, edges_k, faces, inflow, outflow, wall, volumes }
}

/// Area-weighted cross-section averages `(ubar(x), vbar(x))`; the weight is
/// `rho drho`, so the local tube radius cancels slice by slice.
pub fn cross_section_average(fields: &MicroFields, n_z: usize, n_rho: usize) -> (Vec<f64>, Vec<f64>) {
    let drho = 1.0 / n_rho as f64;
    let weights: Vec<f64> = (0..n_rho).map(|j| (j as f64 + 0.5) * drho * drho).collect();
    let total: f64 = weights.iter().sum();
    let mut ubar = vec![0.0; n_z];
    let mut vbar = vec![0.0; n_z];
    for i in 0..n_z {
        let mut au = 0.0;
        let mut av = 0.0;
        for j in 0..n_rho {
            au += weights[j] * fields.u[i * n_rho + j];
            av += weights[j] * fields.v[i * n_rho + j];
        }
        ubar[i] = au / total;
        vbar[i] = av / total;
    }
    (ubar, vbar)
}

/// Evolve the fine-scale fields to `t_final`, recording `n_snapshots`
/// states (plus the initial one). A requested `dt` larger than the
/// stability bound is rejected.
pub fn solve_micro(
    grid: &MicroGrid,
    velocity: &VelocityField,
    absorption: &AbsorptionModel,
    inflow: &InflowSignals,
    t_final: f64,
    n_snapshots: usize,
    dt_request: Option<f64>,
) -> Result<MicroSeries, MicroError> {
    if !(t_final > 0.0) || n_snapshots == 0 {
        return Err(MicroError::InvalidParameter("need T > 0 and at least one snapshot".into()));
    }
    let mapped = grid.mapped();
    let n = mapped.n_cells();
    let (n_z, n_rho) = (mapped.n_z, mapped.n_rho);
    let eps = grid.eps;
    let steady_velocity = velocity.stream_psi(0.0).is_some();
    let mut asm = assemble(grid, &mapped, velocity, 0.0);

    let d_u = eps * absorption.chi;
    let d_v = eps * absorption.omega;

    // Stability: the update must stay a convex combination for both fields.
    let mut rate_u = vec![0.0; n];
    let mut rate_v = vec![0.0; n];
    let bump = |rates: &mut Vec<f64>, cell: u32, coeff: f64| {
        rates[cell as usize] += coeff;
    };
    for e in 0..asm.edges_k.len() {
        bump(&mut rate_u, asm.edges_a[e], d_u * asm.edges_k[e]);
        bump(&mut rate_u, asm.edges_b[e], d_u * asm.edges_k[e]);
        bump(&mut rate_v, asm.edges_a[e], d_v * asm.edges_k[e]);
        bump(&mut rate_v, asm.edges_b[e], d_v * asm.edges_k[e]);
    }
    for f in &asm.faces {
        bump(&mut rate_u, f.a, f.q.max(0.0));
        bump(&mut rate_u, f.b, (-f.q).max(0.0));
        bump(&mut rate_v, f.a, f.q.max(0.0));
        bump(&mut rate_v, f.b, (-f.q).max(0.0));
    }
    for &(cell, _q, kap) in &asm.inflow {
        bump(&mut rate_u, cell, d_u * kap);
        bump(&mut rate_v, cell, d_v * kap);
    }
    for &(cell, q) in &asm.outflow {
        bump(&mut rate_u, cell, q.max(0.0));
        bump(&mut rate_v, cell, q.max(0.0));
    }
    // Wall and reaction slopes, bounded over a sampled time range.
    let t_samples: Vec<f64> = (0..=32).map(|k| t_final * k as f64 / 32.0).collect();
    let mut zeta_sup: f64 = 0.0;
    for i in 0..n_z {
        let x = mapped.z_center(i);
        for &ts in &t_samples {
            zeta_sup = zeta_sup.max(absorption.zeta_at(x, ts));
        }
    }
    for &(cell, sigma, x1, xw) in &asm.wall {
        let mut eta_sup: f64 = 0.0;
        let mut rho_sup: f64 = 0.0;
        for &ts in &t_samples {
            eta_sup = eta_sup.max(
                absorption.eta_p_at(x1, xw)
                    + absorption.eta_a_at(x1, xw, ts) * absorption.g_a.max_slope(),
            );
            rho_sup = rho_sup.max(absorption.rho_at(x1, xw));
        }
        bump(&mut rate_u, cell, eps * eta_sup * sigma);
        bump(&mut rate_v, cell, eps * rho_sup * sigma);
    }
    let mut max_rate: f64 = 0.0;
    for i in 0..n {
        let vol = asm.volumes[i];
        max_rate = max_rate.max(rate_u[i] / vol);
        max_rate = max_rate.max(rate_v[i] / vol + zeta_sup * absorption.phi.max_slope());
    }
    let dt_stable = 0.4 / max_rate.max(1e-300);
    if let Some(dt_r) = dt_request {
        if dt_r > dt_stable {
            return Err(MicroError::StepSize(format!(
                "requested dt = {dt_r} exceeds the stability bound {dt_stable}"
            )));
        }
    }
    let interval = t_final / n_snapshots as f64;
    let dt_target = dt_request.unwrap_or(dt_stable);
    let sub = (interval / dt_target).ceil().max(1.0) as usize;
    let dt = interval / sub as f64;

    let mut fields = MicroFields { u: vec![0.0; n], v: vec![0.0; n], time: 0.0 };
    let mut series = MicroSeries {
        times: vec![0.0],
        snapshots: vec![fields.clone()],
        x_centers: (0..n_z).map(|i| mapped.z_center(i)).collect(),
        rhat_centers: (0..n_rho).map(|j| mapped.rhat_center(j)).collect(),
        n_rho,
        dt,
        steps: 0,
        v_max_seen: 0.0,
        v_min_seen: 0.0,
        u_min_seen: 0.0,
        c3_residual: 0.0,
    };
    if !steady_velocity {
        // Report how tangent the supplied field actually is on the wall.
        let mut worst: f64 = 0.0;
        for i in (0..n_z).step_by((n_z / 64).max(1)) {
            let x = mapped.z_center(i);
            let z_fast = x / eps;
            let xw = [z_fast, grid.profile.rho(z_fast, 0.0), 0.0];
            let c = velocity.eval(x, xw, 0.0);
            let n3 = crate::geometry::outward_normal(&grid.profile, z_fast, 0.0)
                .map_err(|e| MicroError::InvalidParameter(format!("wall normal failed: {e}")))?;
            worst = worst.max(crate::util::dot(c, n3).abs());
        }
        series.c3_residual = worst;
    }

    let mut du = vec![0.0; n];
    let mut dv = vec![0.0; n];
    for snap in 0..n_snapshots {
        for step in 0..sub {
            let t = (snap as f64 * sub as f64 + step as f64) * dt;
            if !steady_velocity && (step + snap) > 0 {
                asm = assemble(grid, &mapped, velocity, t);
            }
            du.iter_mut().for_each(|x| *x = 0.0);
            dv.iter_mut().for_each(|x| *x = 0.0);
            // Diffusive edge fluxes.
            for e in 0..asm.edges_k.len() {
                let (a, b) = (asm.edges_a[e] as usize, asm.edges_b[e] as usize);
                let k = asm.edges_k[e];
                let fu = d_u * k * (fields.u[b] - fields.u[a]);
                du[a] += fu;
                du[b] -= fu;
                let fv = d_v * k * (fields.v[b] - fields.v[a]);
                dv[a] += fv;
                dv[b] -= fv;
            }
            // Upwind advection through interior faces.
            for f in &asm.faces {
                let (a, b) = (f.a as usize, f.b as usize);
                let carried_u = if f.q >= 0.0 { fields.u[a] } else { fields.u[b] };
                let carried_v = if f.q >= 0.0 { fields.v[a] } else { fields.v[b] };
                du[a] -= f.q * carried_u;
                du[b] += f.q * carried_u;
                dv[a] -= f.q * carried_v;
                dv[b] += f.q * carried_v;
            }
            let (u0t, v0t) = (inflow.u0.eval(t), inflow.v0.eval(t));
            for &(cell, q, kap) in &asm.inflow {
                let c = cell as usize;
                du[c] += q.max(0.0) * u0t - (-q).max(0.0) * fields.u[c]
                    + d_u * kap * (u0t - fields.u[c]);
                dv[c] += q.max(0.0) * v0t - (-q).max(0.0) * fields.v[c]
                    + d_v * kap * (v0t - fields.v[c]);
            }
            for &(cell, q) in &asm.outflow {
                let c = cell as usize;
                du[c] -= q.max(0.0) * fields.u[c];
                dv[c] -= q.max(0.0) * fields.v[c];
            }
            for &(cell, sigma, x1, xw) in &asm.wall {
                let c = cell as usize;
                let theta =
                    homog::theta_surface(absorption, x1, xw, t, fields.u[c], fields.v[c]);
                du[c] -= eps * theta * sigma;
                dv[c] -= eps * absorption.rho_at(x1, xw) * fields.v[c] * sigma;
            }
            // Volumic exchange and time update.
            for i in 0..n_z {
                let x = mapped.z_center(i);
                let zeta = absorption.zeta_at(x, t);
                for j in 0..n_rho {
                    let id = mapped.idx(i, j);
                    let exch = zeta * absorption.phi.eval(fields.v[id]);
                    let vol = asm.volumes[id];
                    fields.u[id] += dt * (du[id] / vol + exch);
                    fields.v[id] += dt * (dv[id] / vol - exch);
                }
            }
            fields.time = t + dt;
            series.steps += 1;
        }
        for &v in &fields.v {
            series.v_max_seen = series.v_max_seen.max(v);
            series.v_min_seen = series.v_min_seen.min(v);
        }
        for &u in &fields.u {
            series.u_min_seen = series.u_min_seen.min(u);
        }
        series.times.push(t_final * (snap + 1) as f64 / n_snapshots as f64);
        series.snapshots.push(fields.clone());
    }
    Ok(series)
}

/// One row of the micro/macro comparison.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonRow {
    pub eps: f64,
    pub sup_err_u: f64,
    pub sup_err_v: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub monotone: bool,
    /// Non-monotone errors across the two smallest eps; signals
    /// under-resolution rather than failure.
    pub flagged: bool,
}

/// Shared scenario for the comparison study.
#[derive(Debug, Clone)]
pub struct MicroMacroScenario {
    pub profile: VillusProfile,
    pub velocity: VelocityField,
    pub absorption: AbsorptionModel,
    pub inflow: InflowSignals,
    pub length: f64,
    pub t_final: f64,
    pub n_z_per_period: usize,
    pub n_rho: usize,
    pub n_snapshots: usize,
    pub macro_cells: usize,
}

fn interp_at(xs_centers: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= xs_centers[0] {
        return values[0];
    }
    if x >= *xs_centers.last().unwrap() {
        return *values.last().unwrap();
    }
    let k = xs_centers.partition_point(|&c| c <= x).max(1);
    let (x0, x1) = (xs_centers[k - 1], xs_centers[k]);
    let a = (x - x0) / (x1 - x0);
    (1.0 - a) * values[k - 1] + a * values[k]
}

/// Run the scenario at each `eps` and compare cross-sectional averages to
/// the homogenized 1-d solution on the same coefficient models.
pub fn compare_micro_macro(
    scenario: &MicroMacroScenario,
    eps_list: &[f64],
) -> Result<ComparisonTable, MicroError> {
    if eps_list.len() < 3 {
        return Err(MicroError::InvalidParameter("need at least 3 eps values".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(MicroError::InvalidParameter("eps values must be strictly decreasing".into()));
    }
    let x1_samples: Vec<f64> = (0..=8).map(|k| scenario.length * k as f64 / 8.0).collect();
    let t_samples: Vec<f64> = (0..=4).map(|k| scenario.t_final * k as f64 / 4.0).collect();
    let coeffs = homog::homogenized_coefficients(
        &scenario.profile,
        &scenario.velocity,
        &scenario.absorption,
        &x1_samples,
        &t_samples,
        AveragingOptions::default(),
    )?;
    let grid = AxialGrid::new(scenario.length, scenario.macro_cells, scenario.t_final, 0.9)?;
    let macro_series = macro1d::solve_macro(
        &grid,
        &coeffs,
        &scenario.absorption,
        &scenario.inflow,
        scenario.n_snapshots,
    )?;
    let macro_x: Vec<f64> = (0..grid.n_cells).map(|i| grid.x_center(i)).collect();

    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let micro_grid = MicroGrid::from_length(
            eps,
            scenario.length,
            scenario.profile.clone(),
            scenario.n_z_per_period,
            scenario.n_rho,
        )?;
        let series = solve_micro(
            &micro_grid,
            &scenario.velocity,
            &scenario.absorption,
            &scenario.inflow,
            scenario.t_final,
            scenario.n_snapshots,
            None,
        )?;
        let mut err_u: f64 = 0.0;
        let mut err_v: f64 = 0.0;
        for (m, snap) in series.snapshots.iter().enumerate().skip(1) {
            let (ubar, vbar) = cross_section_average(snap, micro_grid.n_z(), micro_grid.n_rho);
            let mu = &macro_series.snapshots[m];
            for (i, &x) in series.x_centers.iter().enumerate() {
                err_u = err_u.max((ubar[i] - interp_at(&macro_x, &mu.u, x)).abs());
                err_v = err_v.max((vbar[i] - interp_at(&macro_x, &mu.v, x)).abs());
            }
        }
        rows.push(ComparisonRow { eps, sup_err_u: err_u, sup_err_v: err_v });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].sup_err_u <= w[0].sup_err_u && w[1].sup_err_v <= w[0].sup_err_v);
    let k = rows.len();
    let flagged = rows[k - 1].sup_err_u > rows[k - 2].sup_err_u
        || rows[k - 1].sup_err_v > rows[k - 2].sup_err_v;
    Ok(ComparisonTable { rows, monotone, flagged })
}
