//! Experiment orchestration: build models from a configuration, run the
//! selected pipeline, and emit CSV artifacts, plot-data series and a run
//! manifest.
//!
//! Artifact rules: CSV files follow the deterministic formatting of
//! [`crate::csvio`]; plot-data files are two-column text series; the
//! manifest records the tool version, wall time, artifact list and the
//! canonical form of the resolved configuration (every consumed parameter
//! with its value). On a pipeline failure a machine-readable `error.txt`
//! (key = value lines) is left in the output directory.

use crate::config::{
    emit_config, ConfigError, ExperimentConfig, ModuleKind, ProfileSection, VelocitySpec,
};
use crate::geometry::VillusProfile;
use crate::homog::AveragingOptions;
use crate::macro1d::{AxialGrid, InflowSignals};
use crate::micro::{MicroGrid, MicroMacroScenario};
use crate::model::{KineticsLaw, KineticsModel, PulseModel, VelocityField, VelocityKind};
use crate::{cell, csvio, homog, macro1d, micro, ode};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error")]
    Config(Vec<ConfigError>),
    #[error("pipeline failed: {0}")]
    Pipeline(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
}

struct Emitter {
    out: PathBuf,
    artifacts: Vec<String>,
    notes: Vec<String>,
}

impl Emitter {
    fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl Iterator<Item = Vec<f64>>,
    ) -> Result<(), RunError> {
        csvio::write_csv(self.out.join(name), header, rows)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Two-column plot series.
    fn plot(&mut self, name: &str, series: impl Iterator<Item = (f64, f64)>) -> Result<(), RunError> {
        let mut text = String::new();
        for (x, y) in series {
            text.push_str(&format!("{} {}\n", csvio::fmt_g17(x), csvio::fmt_g17(y)));
        }
        csvio::write_atomic(self.out.join(name), text.as_bytes())?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }
}

fn build_profile(p: &ProfileSection, base_dir: &Path) -> Result<VillusProfile, RunError> {
    let shape = p.shape.build(base_dir).map_err(RunError::Pipeline)?;
    VillusProfile::new(p.base_radius, shape).map_err(|e| RunError::Pipeline(e.to_string()))
}

fn build_velocity(spec: &VelocitySpec, profile: &VillusProfile) -> Result<VelocityField, RunError> {
    let kind = match spec {
        VelocitySpec::Zero => VelocityKind::Zero,
        VelocitySpec::Plug { mean_speed } => VelocityKind::AxialPlug { mean_speed: *mean_speed },
        VelocitySpec::Poiseuille { mean_speed } => {
            VelocityKind::Poiseuille { mean_speed: *mean_speed }
        }
    };
    VelocityField::new(kind, profile.clone()).map_err(|e| RunError::Pipeline(e.to_string()))
}

fn build_pulse(cfg: &ExperimentConfig) -> Result<PulseModel, RunError> {
    let p = cfg.pulse.as_ref().expect("validated");
    PulseModel::new(p.wave_speed, p.pulse_period, p.shape.clone(), p.friction.clone(), p.amplitude)
        .map_err(|e| RunError::Pipeline(e.to_string()))
}

fn build_kinetics(cfg: &ExperimentConfig) -> Result<KineticsModel, RunError> {
    let k = cfg.kinetics.as_ref().expect("validated");
    let law = match &k.law {
        crate::config::KineticsSpec::Zero => KineticsLaw::Zero,
        crate::config::KineticsSpec::LinearDecay(r) => KineticsLaw::LinearDecay(r.clone()),
    };
    KineticsModel::new(k.species, law, k.lipschitz_bound)
        .map_err(|e| RunError::Pipeline(e.to_string()))
}

fn trajectory_rows(run: &ode::BolusTrajectory) -> impl Iterator<Item = Vec<f64>> + '_ {
    (0..run.times.len()).map(move |i| {
        let mut row = vec![run.times[i], run.x[i], run.xdot[i]];
        row.extend_from_slice(run.y_at(i));
        row
    })
}

fn pipe(e: impl std::fmt::Display) -> RunError {
    RunError::Pipeline(e.to_string())
}

/// Run the configured experiment, writing all artifacts under `out_dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    config_dir: &Path,
) -> Result<RunSummary, RunError> {
    let started = std::time::Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut em =
        Emitter { out: out_dir.to_path_buf(), artifacts: Vec::new(), notes: Vec::new() };
    let result = dispatch(cfg, &mut em, config_dir);
    match result {
        Ok(()) => {
            write_manifest(cfg, &em, started.elapsed().as_secs_f64())?;
            Ok(RunSummary { out_dir: em.out, artifacts: em.artifacts, notes: em.notes })
        }
        Err(err) => {
            let record = match &err {
                RunError::Pipeline(msg) => {
                    format!("code = numeric-failure\nmodule = {}\nmessage = {}\n", cfg.module.as_str(), msg)
                }
                RunError::Io(e) => {
                    format!("code = io-failure\nmodule = {}\nmessage = {}\n", cfg.module.as_str(), e)
                }
                RunError::Config(_) => unreachable!("config errors precede dispatch"),
            };
            let _ = csvio::write_atomic(out_dir.join("error.txt"), record.as_bytes());
            Err(err)
        }
    }
}

fn dispatch(cfg: &ExperimentConfig, em: &mut Emitter, config_dir: &Path) -> Result<(), RunError> {
    match cfg.module {
        ModuleKind::OdeSim => run_ode_sim(cfg, em),
        ModuleKind::OdeConverge => run_ode_converge(cfg, em),
        ModuleKind::Geometry => run_geometry(cfg, em, config_dir),
        ModuleKind::Homogenize => run_homogenize(cfg, em, config_dir),
        ModuleKind::CellSolve => run_cell_solve(cfg, em, config_dir),
        ModuleKind::MacroSolve => run_macro_solve(cfg, em, config_dir),
        ModuleKind::MicroVerify => run_micro_verify(cfg, em, config_dir),
        ModuleKind::Compare => run_compare(cfg, em, config_dir),
    }
}

fn run_ode_sim(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(), RunError> {
    let model = build_pulse(cfg)?;
    let kin = build_kinetics(cfg)?;
    let o = cfg.ode.as_ref().expect("validated");
    let run = ode::integrate_pulsed_with(
        &model,
        model.wave_speed_c,
        model.pulse_period_eps,
        &model.friction,
        &kin,
        o.v0,
        &o.y0,
        o.t_final,
        o.dt,
        o.record_points,
    )
    .map_err(pipe)?;
    run.check_transport_bounds(model.wave_speed_c, 1e-10).map_err(pipe)?;
    let fbar = ode::AveragedForce::of_model(&model, o.quadrature_nodes).map_err(pipe)?;
    let avg = ode::integrate_averaged_with(
        &fbar,
        model.wave_speed_c,
        &model.friction,
        &kin,
        o.v0,
        &o.y0,
        o.t_final,
        (o.t_final / 1e4).min(o.dt),
        o.record_points,
    )
    .map_err(pipe)?;
    let mut header = vec!["t".to_string(), "x".to_string(), "xdot".to_string()];
    for k in 0..kin.dim {
        header.push(format!("y{}", k + 1));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    em.csv("trajectory.csv", &header_refs, trajectory_rows(&run))?;
    em.csv("trajectory_averaged.csv", &header_refs, trajectory_rows(&avg))?;
    em.plot("plot_x.dat", run.times.iter().cloned().zip(run.x.iter().cloned()))?;
    em.plot("plot_xdot.dat", run.times.iter().cloned().zip(run.xdot.iter().cloned()))?;
    em.note(format!(
        "sup distance to the averaged run: x {:.3e}, xdot {:.3e}",
        crate::util::sup_norm_diff(&run.x, &avg.x),
        crate::util::sup_norm_diff(&run.xdot, &avg.xdot)
    ));
    Ok(())
}

fn run_ode_converge(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(), RunError> {
    let model = build_pulse(cfg)?;
    let kin = build_kinetics(cfg)?;
    let o = cfg.ode.as_ref().expect("validated");
    let table = ode::convergence_study(
        &model,
        &kin,
        o.v0,
        &o.y0,
        o.t_final,
        &o.eps_list,
        o.quadrature_nodes,
        o.record_points,
    )
    .map_err(pipe)?;
    em.csv(
        "convergence.csv",
        &["eps", "err_x", "err_xdot", "order_x", "order_xdot"],
        table.rows.iter().map(|r| vec![r.eps, r.err_x, r.err_xdot, r.order_x, r.order_xdot]),
    )?;
    em.plot("plot_errors.dat", table.rows.iter().map(|r| (r.eps, r.err_xdot)))?;
    em.note(format!("errors monotone: {}, flagged: {}", table.monotone, table.flagged));
    if table.flagged {
        em.note("non-monotone errors at the smallest periods; increase resolution".into());
    }
    Ok(())
}

fn run_geometry(cfg: &ExperimentConfig, em: &mut Emitter, dir: &Path) -> Result<(), RunError> {
    let p = cfg.profile.as_ref().expect("validated");
    let profile = build_profile(p, dir)?;
    let m = crate::geometry::cell_measures(&profile, p.n_z, p.n_theta).map_err(pipe)?;
    let cylinder_area = 2.0 * std::f64::consts::PI * p.base_radius;
    let text = format!(
        "quantity,value\nvolume,{}\nlateral_area,{}\nratio_rp,{}\nsurface_amplification,{}\n",
        csvio::fmt_g17(m.volume),
        csvio::fmt_g17(m.lateral_area),
        csvio::fmt_g17(m.ratio_rp),
        csvio::fmt_g17(m.lateral_area / cylinder_area),
    );
    csvio::write_atomic(em.out.join("measures.csv"), text.as_bytes())?;
    em.artifacts.push("measures.csv".into());
    em.plot("plot_radius.dat", (0..=256).map(|i| {
        let z = i as f64 / 256.0;
        (z, profile.rho(z, 0.0))
    }))?;
    em.note(format!("R(P) = {:.12}", m.ratio_rp));
    Ok(())
}

fn coeffs_from_cfg(
    cfg: &ExperimentConfig,
    dir: &Path,
    x1_samples: &[f64],
    t_samples: &[f64],
) -> Result<
    (VillusProfile, VelocityField, crate::model::AbsorptionModel, homog::HomogenizedCoefficients),
    RunError,
> {
    let p = cfg.profile.as_ref().expect("validated");
    let profile = build_profile(p, dir)?;
    let velocity = build_velocity(cfg.velocity.as_ref().expect("validated"), &profile)?;
    let absorption = cfg.absorption.as_ref().expect("validated").build().map_err(pipe)?;
    let opts = AveragingOptions { n_z: p.n_z, n_theta: p.n_theta, n_rho: p.n_rho };
    let coeffs =
        homog::homogenized_coefficients(&profile, &velocity, &absorption, x1_samples, t_samples, opts)
            .map_err(pipe)?;
    Ok((profile, velocity, absorption, coeffs))
}

fn run_homogenize(cfg: &ExperimentConfig, em: &mut Emitter, dir: &Path) -> Result<(), RunError> {
    let h = cfg.homogenize.as_ref().expect("validated");
    let (_, _, absorption, coeffs) = coeffs_from_cfg(cfg, dir, &h.x1_samples, &h.t_samples)?;
    let _ = &absorption;
    let mut rows = Vec::new();
    for (ix, &x1) in coeffs.x1_samples.iter().enumerate() {
        for (it, &t) in coeffs.t_samples.iter().enumerate() {
            rows.push(vec![
                x1,
                t,
                coeffs.cbar[ix * coeffs.t_samples.len() + it][0],
                coeffs.etabar_p[ix],
                coeffs.etabar_a[ix * coeffs.t_samples.len() + it],
                coeffs.rhobar[ix],
            ]);
        }
    }
    em.csv("coefficients.csv", &["x1", "t", "cbar_e1", "etabar_p", "etabar_a", "rhobar"], rows.into_iter())?;
    em.plot(
        "plot_etabar_p.dat",
        coeffs.x1_samples.iter().cloned().zip(coeffs.etabar_p.iter().cloned()),
    )?;
    em.note(format!(
        "R(P) = {:.12}, |P| = {:.12}, wall area = {:.12}",
        coeffs.ratio_rp(),
        coeffs.measures.volume,
        coeffs.measures.lateral_area
    ));
    Ok(())
}

fn run_cell_solve(cfg: &ExperimentConfig, em: &mut Emitter, dir: &Path) -> Result<(), RunError> {
    let c = cfg.cell.as_ref().expect("validated");
    let p = cfg.profile.as_ref().expect("validated");
    let profile = build_profile(p, dir)?;
    let velocity = build_velocity(cfg.velocity.as_ref().expect("validated"), &profile)?;
    let absorption = cfg.absorption.as_ref().expect("validated").build().map_err(pipe)?;
    let data = homog::CellProblemData { p: c.p, mu: c.mu, nu: c.nu, delta: c.delta, x1: c.x1, t: c.t };
    let opts = cell::CellSolveOptions {
        n_z: c.n_z,
        n_rho: c.n_rho,
        rtol: c.rtol,
        ..Default::default()
    };
    let (field, report) =
        cell::solve_cell_problem(&profile, &velocity, &absorption, &data, &opts).map_err(pipe)?;
    // Independent compatibility value through the averaged coefficients.
    let avg_opts = AveragingOptions { n_z: p.n_z, n_theta: p.n_theta, n_rho: p.n_rho };
    let coeffs = homog::homogenized_coefficients(
        &profile,
        &velocity,
        &absorption,
        &[c.x1],
        &[c.t],
        avg_opts,
    )
    .map_err(pipe)?;
    let lambda_compat = homog::lambda_from_compatibility(&data, &coeffs, &absorption);
    let check = homog::check_solvability(&data, report.lambda_discrete, &coeffs, &absorption, 5e-3);

    let (n_z, n_rho) = (field.n_z, field.n_rho);
    em.csv(
        "corrector.csv",
        &["z", "rho_hat", "u1"],
        (0..n_z).flat_map(move |i| {
            let field = field.clone();
            (0..n_rho).map(move |j| {
                vec![field.z_centers[i], field.rhat_centers[j], field.value(i, j)]
            })
        }),
    )?;
    em.csv(
        "cell_summary.csv",
        &["lambda_discrete", "lambda_compatibility", "abs_gap", "solver_residual", "iterations"],
        std::iter::once(vec![
            report.lambda_discrete,
            lambda_compat,
            check.residual,
            report.residual,
            report.iterations as f64,
        ]),
    )?;
    em.note(format!(
        "lambda: discrete {:.10e}, compatibility {:.10e}, gap {:.3e} (solvable: {})",
        report.lambda_discrete, lambda_compat, check.residual, check.solvable
    ));
    if report.clamped_edges > 0 {
        em.note(format!(
            "{} conductances clamped; refine the grid toward a balanced aspect",
            report.clamped_edges
        ));
    }
    Ok(())
}

fn macro_setup(
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<
    (AxialGrid, homog::HomogenizedCoefficients, crate::model::AbsorptionModel, InflowSignals),
    RunError,
> {
    let t = cfg.transport.as_ref().expect("validated");
    let x1: Vec<f64> = (0..=8).map(|k| t.length * k as f64 / 8.0).collect();
    let ts: Vec<f64> = (0..=4).map(|k| t.t_final * k as f64 / 4.0).collect();
    let (_, _, absorption, coeffs) = coeffs_from_cfg(cfg, dir, &x1, &ts)?;
    let grid = AxialGrid::new(t.length, t.n_cells, t.t_final, t.cfl).map_err(pipe)?;
    let i = cfg.inflow.as_ref().expect("validated");
    let inflow = InflowSignals::new(i.u0.clone(), i.v0.clone()).map_err(pipe)?;
    Ok((grid, coeffs, absorption, inflow))
}

fn run_macro_solve(cfg: &ExperimentConfig, em: &mut Emitter, dir: &Path) -> Result<(), RunError> {
    let t = cfg.transport.as_ref().expect("validated");
    let (grid, coeffs, absorption, inflow) = macro_setup(cfg, dir)?;
    let series =
        macro1d::solve_macro(&grid, &coeffs, &absorption, &inflow, t.snapshots).map_err(pipe)?;
    em.csv(
        "snapshots.csv",
        &["t", "x1", "u", "v"],
        series.times.iter().enumerate().flat_map(|(m, &tm)| {
            let snap = series.snapshots[m].clone();
            (0..grid.n_cells)
                .map(move |i| vec![tm, grid.x_center(i), snap.u[i], snap.v[i]])
                .collect::<Vec<_>>()
        }),
    )?;
    em.csv(
        "budget.csv",
        &["t", "inflow", "outflow", "absorbed", "transformed", "compression", "stored", "residual"],
        macro1d::mass_budget(&series).iter().map(|r| {
            vec![
                r.time,
                r.inflow,
                r.outflow,
                r.absorbed,
                r.transformed,
                r.compression,
                r.stored,
                r.residual(),
            ]
        }),
    )?;
    let last = series.snapshots.last().unwrap().clone();
    em.plot(
        "plot_u_final.dat",
        (0..grid.n_cells).map(|i| (grid.x_center(i), last.u[i])),
    )?;
    em.plot(
        "plot_v_final.dat",
        (0..grid.n_cells).map(|i| (grid.x_center(i), last.v[i])),
    )?;
    em.note(format!(
        "max relative budget defect per step: {:.3e}; v stayed in [{:.3e}, {:.3e}]",
        series.max_step_residual, series.v_min_seen, series.v_max_seen
    ));
    Ok(())
}

fn run_micro_verify(cfg: &ExperimentConfig, em: &mut Emitter, dir: &Path) -> Result<(), RunError> {
    let t = cfg.transport.as_ref().expect("validated");
    let m = cfg.micro.as_ref().expect("validated");
    let p = cfg.profile.as_ref().expect("validated");
    let profile = build_profile(p, dir)?;
    let velocity = build_velocity(cfg.velocity.as_ref().expect("validated"), &profile)?;
    let absorption = cfg.absorption.as_ref().expect("validated").build().map_err(pipe)?;
    let i = cfg.inflow.as_ref().expect("validated");
    let inflow = InflowSignals::new(i.u0.clone(), i.v0.clone()).map_err(pipe)?;
    for (k, &eps) in m.eps_list.iter().enumerate() {
        let grid = MicroGrid::from_length(eps, t.length, profile.clone(), m.n_z_per_period, m.n_rho)
            .map_err(pipe)?;
        let series =
            micro::solve_micro(&grid, &velocity, &absorption, &inflow, t.t_final, t.snapshots, None)
                .map_err(pipe)?;
        let n_z = grid.n_z();
        let mut avg_rows = Vec::new();
        for (s, snap) in series.snapshots.iter().enumerate() {
            let (ubar, vbar) = micro::cross_section_average(snap, n_z, grid.n_rho);
            for (ix, &x) in series.x_centers.iter().enumerate() {
                avg_rows.push(vec![series.times[s], x, ubar[ix], vbar[ix]]);
            }
        }
        em.csv(&format!("micro_avg_{k}.csv"), &["t", "x1", "ubar", "vbar"], avg_rows.into_iter())?;
        let last = series.snapshots.last().unwrap();
        let mut field_rows = Vec::new();
        for (ix, &x) in series.x_centers.iter().enumerate() {
            for (jr, &rh) in series.rhat_centers.iter().enumerate() {
                field_rows.push(vec![
                    *series.times.last().unwrap(),
                    x,
                    rh,
                    last.u[ix * grid.n_rho + jr],
                    last.v[ix * grid.n_rho + jr],
                ]);
            }
        }
        em.csv(
            &format!("micro_final_{k}.csv"),
            &["t", "x1", "rho_hat", "u", "v"],
            field_rows.into_iter(),
        )?;
        em.note(format!(
            "eps = {eps}: {} steps at dt = {:.3e}; v in [{:.3e}, {:.3e}], min u {:.3e}",
            series.steps, series.dt, series.v_min_seen, series.v_max_seen, series.u_min_seen
        ));
    }
    Ok(())
}

fn run_compare(cfg: &ExperimentConfig, em: &mut Emitter, dir: &Path) -> Result<(), RunError> {
    let t = cfg.transport.as_ref().expect("validated");
    let m = cfg.micro.as_ref().expect("validated");
    let p = cfg.profile.as_ref().expect("validated");
    let profile = build_profile(p, dir)?;
    let velocity = build_velocity(cfg.velocity.as_ref().expect("validated"), &profile)?;
    let absorption = cfg.absorption.as_ref().expect("validated").build().map_err(pipe)?;
    let i = cfg.inflow.as_ref().expect("validated");
    let inflow = InflowSignals::new(i.u0.clone(), i.v0.clone()).map_err(pipe)?;
    let scenario = MicroMacroScenario {
        profile,
        velocity,
        absorption,
        inflow,
        length: t.length,
        t_final: t.t_final,
        n_z_per_period: m.n_z_per_period,
        n_rho: m.n_rho,
        n_snapshots: t.snapshots,
        macro_cells: t.n_cells,
    };
    let table = micro::compare_micro_macro(&scenario, &m.eps_list).map_err(pipe)?;
    em.csv(
        "comparison.csv",
        &["eps", "sup_err_u", "sup_err_v"],
        table.rows.iter().map(|r| vec![r.eps, r.sup_err_u, r.sup_err_v]),
    )?;
    em.plot("plot_comparison.dat", table.rows.iter().map(|r| (r.eps, r.sup_err_v)))?;
    em.note(format!("errors monotone: {}, flagged: {}", table.monotone, table.flagged));
    Ok(())
}

fn write_manifest(cfg: &ExperimentConfig, em: &Emitter, wall: f64) -> Result<(), RunError> {
    let mut text = String::new();
    text.push_str("# run manifest: resolved parameters follow after [run]\n");
    text.push_str("[run]\n");
    text.push_str(&format!("tool = villus-homog {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&format!("module = {}\n", cfg.module.as_str()));
    text.push_str(&format!("wall_seconds = {wall:.3}\n"));
    text.push_str(&format!("artifacts = {}\n", em.artifacts.join(",")));
    for n in &em.notes {
        text.push_str(&format!("note = {n}\n"));
    }
    text.push('\n');
    text.push_str(&emit_config(cfg));
    csvio::write_atomic(em.out.join("manifest.txt"), text.as_bytes())?;
    Ok(())
}
