//! Pulsed bolus transport and its high-frequency average.
//!
//! The pulsed system for position `x`, velocity `xdot` and composition `y`:
//!
//! ```text
//! xddot = (1 - xdot/c) gtilde((t - x/c)/eps, 1 - xdot/c, x, y) - k(t) xdot
//! ydot  = d(x, y)
//! x(0) = 0,  xdot(0) = v0 in [0, c),  y(0) = y0
//! ```
//!
//! As the pulse period `eps` goes to zero the forcing acts like its period
//! mean
//!
//! ```text
//! Fbar(V, X, Y) = int_0^1 gtilde(s, V, X, Y) ds,
//! ```
//!
//! and the trajectory converges in C1 to the averaged system with
//! `gtilde` replaced by `Fbar`.  Every trajectory of either system obeys the
//! transport bounds `0 <= xdot <= c` and `0 <= x <= c t`.
//!
//! Integration is the classical fixed-step fourth-order Runge-Kutta scheme;
//! oscillatory runs must resolve the fast phase (`dt <= eps/20`), averaged
//! runs use `dt <= T/1e4`.  Output is recorded on a uniform grid that the
//! stepper hits exactly, so runs with different step sizes compare on
//! identical time grids.

use crate::model::pulse::{FrictionLaw, PulseForcing, PulseModel};
use crate::model::KineticsModel;
use crate::util::simpson_weights;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),
    #[error("step size too large: {0}")]
    StepSize(String),
    #[error("transport bound violated: {0}")]
    BoundViolation(String),
}

/// Time series of one bolus run. `eps = 0` marks an averaged-system run.
#[derive(Debug, Clone)]
pub struct BolusTrajectory {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    /// Composition samples, row-major `[step][species]`.
    pub y: Vec<f64>,
    pub dim: usize,
    pub eps: f64,
}

impl BolusTrajectory {
    pub fn y_at(&self, step: usize) -> &[f64] {
        &self.y[step * self.dim..(step + 1) * self.dim]
    }

    /// Verify the transport bounds `0 <= xdot <= c`, `0 <= x <= c t` and
    /// monotone `x` within `tol * max(1, c)`.
    pub fn check_transport_bounds(&self, c: f64, tol: f64) -> Result<(), OdeError> {
        let slack = tol * c.max(1.0);
        for i in 0..self.times.len() {
            let (t, x, w) = (self.times[i], self.x[i], self.xdot[i]);
            if w < -slack || w > c + slack {
                return Err(OdeError::BoundViolation(format!(
                    "xdot = {w} outside [0, {c}] at t = {t}"
                )));
            }
            if x < -slack || x > c * t + slack {
                return Err(OdeError::BoundViolation(format!(
                    "x = {x} outside [0, c t] at t = {t}"
                )));
            }
            if i > 0 && x < self.x[i - 1] - slack {
                return Err(OdeError::BoundViolation(format!("x decreases at t = {t}")));
            }
        }
        Ok(())
    }
}

/// Period mean of the forcing, by composite Simpson quadrature over one
/// period; `nodes` must be odd and >= 3.
pub fn average_force(
    forcing: &dyn PulseForcing,
    nodes: usize,
    v: f64,
    x: f64,
    y: &[f64],
) -> Result<f64, OdeError> {
    if nodes < 3 {
        return Err(OdeError::InvalidParameter(format!(
            "quadrature needs >= 3 nodes, got {nodes}"
        )));
    }
    let nodes = if nodes % 2 == 0 { nodes + 1 } else { nodes };
    if v <= 0.0 {
        return Ok(0.0);
    }
    let w = simpson_weights(nodes);
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let s = k as f64 / (nodes - 1) as f64;
        acc += wk * forcing.gtilde(s, v, x, y);
    }
    Ok(acc)
}

/// Precomposed period mean `Fbar(V, X, Y)` of a forcing.
#[derive(Clone)]
pub struct AveragedForce {
    forcing: Arc<dyn PulseForcing>,
    pub quadrature_nodes: usize,
}

impl AveragedForce {
    pub fn new(forcing: Arc<dyn PulseForcing>, quadrature_nodes: usize) -> Result<Self, OdeError> {
        if quadrature_nodes < 3 {
            return Err(OdeError::InvalidParameter(format!(
                "quadrature needs >= 3 nodes, got {quadrature_nodes}"
            )));
        }
        Ok(Self { forcing, quadrature_nodes })
    }

    pub fn of_model(model: &PulseModel, quadrature_nodes: usize) -> Result<Self, OdeError> {
        Self::new(Arc::new(model.clone()), quadrature_nodes)
    }

    pub fn eval(&self, v: f64, x: f64, y: &[f64]) -> f64 {
        average_force(self.forcing.as_ref(), self.quadrature_nodes, v, x, y)
            .expect("node count validated at construction")
    }
}

impl std::fmt::Debug for AveragedForce {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AveragedForce(nodes = {})", self.quadrature_nodes)
    }
}

enum Rhs<'a> {
    Pulsed { forcing: &'a dyn PulseForcing, eps: f64 },
    Averaged(&'a AveragedForce),
}

struct System<'a> {
    c: f64,
    friction: &'a FrictionLaw,
    kinetics: &'a KineticsModel,
    rhs: Rhs<'a>,
}

impl System<'_> {
    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]) {
        let (x, w) = (state[0], state[1]);
        let y = &state[2..];
        let v = 1.0 - w / self.c;
        let pulse = if v > 0.0 {
            let strength = match &self.rhs {
                Rhs::Pulsed { forcing, eps } => {
                    forcing.gtilde((t - x / self.c) / eps, v, x, y)
                }
                Rhs::Averaged(fbar) => fbar.eval(v, x, y),
            };
            strength * v
        } else {
            0.0
        };
        out[0] = w;
        out[1] = pulse - self.friction.eval(t) * w;
        self.kinetics.rate(x, y, &mut out[2..]);
    }
}

fn rk4_run(
    sys: &System,
    v0: f64,
    y0: &[f64],
    t_final: f64,
    dt: f64,
    record_points: usize,
    eps_label: f64,
) -> BolusTrajectory {
    let dim = y0.len();
    let n = 2 + dim;
    let mut state = vec![0.0; n];
    state[1] = v0;
    state[2..].copy_from_slice(y0);
    let n_rec = record_points.max(1);
    let rec_dt = t_final / n_rec as f64;
    let sub = (rec_dt / dt).ceil().max(1.0) as usize;
    let h = rec_dt / sub as f64;

    let mut traj = BolusTrajectory {
        times: Vec::with_capacity(n_rec + 1),
        x: Vec::with_capacity(n_rec + 1),
        xdot: Vec::with_capacity(n_rec + 1),
        y: Vec::with_capacity((n_rec + 1) * dim),
        dim,
        eps: eps_label,
    };
    let record = |t: f64, s: &[f64], traj: &mut BolusTrajectory| {
        traj.times.push(t);
        traj.x.push(s[0]);
        traj.xdot.push(s[1]);
        traj.y.extend_from_slice(&s[2..]);
    };
    record(0.0, &state, &mut traj);

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    for m in 0..n_rec {
        let t0 = m as f64 * rec_dt;
        for j in 0..sub {
            let t = t0 + j as f64 * h;
            sys.eval(t, &state, &mut k1);
            for i in 0..n {
                tmp[i] = state[i] + 0.5 * h * k1[i];
            }
            sys.eval(t + 0.5 * h, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = state[i] + 0.5 * h * k2[i];
            }
            sys.eval(t + 0.5 * h, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = state[i] + h * k3[i];
            }
            sys.eval(t + h, &tmp, &mut k4);
            for i in 0..n {
                state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        record((m + 1) as f64 * rec_dt, &state, &mut traj);
    }
    traj
}

fn check_common(
    c: f64,
    v0: f64,
    y0: &[f64],
    kin: &KineticsModel,
    t_final: f64,
    dt: f64,
) -> Result<(), OdeError> {
    if !(v0 >= 0.0 && v0 < c) {
        return Err(OdeError::InvalidInitialCondition(format!(
            "need 0 <= v0 < c, got v0 = {v0}, c = {c}"
        )));
    }
    if y0.len() != kin.dim {
        return Err(OdeError::InvalidParameter(format!(
            "y0 has {} entries for {} species",
            y0.len(),
            kin.dim
        )));
    }
    if !(t_final > 0.0) || !(dt > 0.0) {
        return Err(OdeError::InvalidParameter("need T > 0 and dt > 0".into()));
    }
    Ok(())
}

/// Default number of recorded output points.
pub const DEFAULT_RECORD_POINTS: usize = 2000;

/// Integrate the pulsed system with an explicit forcing (the model only
/// supplies wave speed, period and friction).
#[allow(clippy::too_many_arguments)]
pub fn integrate_pulsed_with(
    forcing: &dyn PulseForcing,
    c: f64,
    eps: f64,
    friction: &FrictionLaw,
    kin: &KineticsModel,
    v0: f64,
    y0: &[f64],
    t_final: f64,
    dt: f64,
    record_points: usize,
) -> Result<BolusTrajectory, OdeError> {
    check_common(c, v0, y0, kin, t_final, dt)?;
    if dt > eps / 20.0 {
        return Err(OdeError::StepSize(format!(
            "dt = {dt} does not resolve the pulse: need dt <= eps/20 = {}",
            eps / 20.0
        )));
    }
    let sys = System { c, friction, kinetics: kin, rhs: Rhs::Pulsed { forcing, eps } };
    Ok(rk4_run(&sys, v0, y0, t_final, dt, record_points, eps))
}

/// Integrate the pulsed system of a model.
pub fn integrate_oscillatory(
    model: &PulseModel,
    kin: &KineticsModel,
    v0: f64,
    y0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<BolusTrajectory, OdeError> {
    integrate_pulsed_with(
        model,
        model.wave_speed_c,
        model.pulse_period_eps,
        &model.friction,
        kin,
        v0,
        y0,
        t_final,
        dt,
        DEFAULT_RECORD_POINTS,
    )
}

/// Integrate the averaged system with the given period mean.
#[allow(clippy::too_many_arguments)]
pub fn integrate_averaged_with(
    fbar: &AveragedForce,
    c: f64,
    friction: &FrictionLaw,
    kin: &KineticsModel,
    v0: f64,
    y0: &[f64],
    t_final: f64,
    dt: f64,
    record_points: usize,
) -> Result<BolusTrajectory, OdeError> {
    check_common(c, v0, y0, kin, t_final, dt)?;
    if dt > t_final / 1e4 * (1.0 + 1e-12) {
        return Err(OdeError::StepSize(format!(
            "averaged runs use dt <= T/1e4 = {}, got {dt}",
            t_final / 1e4
        )));
    }
    let sys = System { c, friction, kinetics: kin, rhs: Rhs::Averaged(fbar) };
    Ok(rk4_run(&sys, v0, y0, t_final, dt, record_points, 0.0))
}

/// Integrate the averaged system of a model.
pub fn integrate_averaged(
    model: &PulseModel,
    kin: &KineticsModel,
    fbar: &AveragedForce,
    v0: f64,
    y0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<BolusTrajectory, OdeError> {
    integrate_averaged_with(
        fbar,
        model.wave_speed_c,
        &model.friction,
        kin,
        v0,
        y0,
        t_final,
        dt,
        DEFAULT_RECORD_POINTS,
    )
}

/// One row of the vanishing-period study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub err_x: f64,
    pub err_xdot: f64,
    /// Empirical order vs the previous row, NaN on the first row.
    pub order_x: f64,
    pub order_xdot: f64,
}

/// Result of [`convergence_study`].
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// True when errors decrease monotonically in eps.
    pub monotone: bool,
    /// Set when the two smallest eps show non-monotone errors; signals an
    /// under-resolved fast phase rather than a failure.
    pub flagged: bool,
}

/// Compare pulsed runs against the averaged limit for a decreasing list of
/// pulse periods; errors are sup norms over the shared record grid.
pub fn convergence_study(
    model: &PulseModel,
    kin: &KineticsModel,
    v0: f64,
    y0: &[f64],
    t_final: f64,
    eps_list: &[f64],
    quadrature_nodes: usize,
    record_points: usize,
) -> Result<ConvergenceTable, OdeError> {
    if eps_list.len() < 3 {
        return Err(OdeError::InvalidParameter("need at least 3 pulse periods".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) || eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(OdeError::InvalidParameter(
            "pulse periods must be strictly decreasing and in (0, 1)".into(),
        ));
    }
    let fbar = AveragedForce::of_model(model, quadrature_nodes)?;
    let reference = integrate_averaged_with(
        &fbar,
        model.wave_speed_c,
        &model.friction,
        kin,
        v0,
        y0,
        t_final,
        t_final / 1e4,
        record_points,
    )?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let dt = eps / 40.0;
        let run = integrate_pulsed_with(
            model,
            model.wave_speed_c,
            eps,
            &model.friction,
            kin,
            v0,
            y0,
            t_final,
            dt,
            record_points,
        )?;
        run.check_transport_bounds(model.wave_speed_c, 1e-10)?;
        let err_x = crate::util::sup_norm_diff(&run.x, &reference.x);
        let err_xdot = crate::util::sup_norm_diff(&run.xdot, &reference.xdot);
        let (order_x, order_xdot) = match rows.last() {
            Some(prev) => {
                let scale = (prev.eps / eps).ln();
                (
                    (prev.err_x / err_x).ln() / scale,
                    (prev.err_xdot / err_xdot).ln() / scale,
                )
            }
            None => (f64::NAN, f64::NAN),
        };
        rows.push(ConvergenceRow { eps, err_x, err_xdot, order_x, order_xdot });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].err_x <= w[0].err_x && w[1].err_xdot <= w[0].err_xdot);
    let n = rows.len();
    let flagged = rows[n - 1].err_x > rows[n - 2].err_x
        || rows[n - 1].err_xdot > rows[n - 2].err_xdot;
    Ok(ConvergenceTable { rows, monotone, flagged })
}

/// Pinned fixture shared by the averaging studies: `c = 1`, `k = 1`,
/// `v0 = 0.3`, one species decaying at rate 0.1 from `y0 = 1`, pulse shape
/// `2 sin^2(pi s)`, amplitude law `(1 + y) / (1 + 0.1 x)`, horizon `T = 5`.
pub fn standard_fixture() -> (PulseModel, KineticsModel, f64, Vec<f64>, f64) {
    use crate::model::pulse::{AmplitudeLaw, PeriodicShape};
    let model = PulseModel::new(
        1.0,
        1e-2,
        PeriodicShape::RaisedSine,
        FrictionLaw::Constant { k: 1.0 },
        AmplitudeLaw { c0: 1.0, c1: 1.0, a: 1.0, b: 0.1 },
    )
    .unwrap();
    let kin = KineticsModel::linear_decay(0.1);
    (model, kin, 0.3, vec![1.0], 5.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::pulse::{AmplitudeLaw, CustomForcing, PeriodicShape};
    use std::sync::Arc;

    fn friction_free_model(eps: f64) -> PulseModel {
        PulseModel::new(
            1.0,
            eps,
            PeriodicShape::Constant { value: 0.0 },
            FrictionLaw::Constant { k: 1.0 },
            AmplitudeLaw { c0: 1.0, c1: 0.0, a: 1.0, b: 0.0 },
        )
        .unwrap()
    }

    #[test]
    fn unforced_run_matches_exponential_decay() {
        // gtilde = 0, k constant: xdot = v0 e^{-kt}, x = v0 (1 - e^{-kt})/k.
        let model = friction_free_model(0.01);
        let kin = KineticsModel::linear_decay(0.1);
        let run = integrate_oscillatory(&model, &kin, 0.5, &[1.0], 1.0, 1e-4).unwrap();
        for i in 0..run.times.len() {
            let t = run.times[i];
            let w_exact = 0.5 * (-t).exp();
            let x_exact = 0.5 * (1.0 - (-t).exp());
            assert!((run.xdot[i] - w_exact).abs() < 1e-8);
            assert!((run.x[i] - x_exact).abs() < 1e-8);
        }
    }

    #[test]
    fn averaged_constant_force_matches_linear_ode() {
        // Fbar = F0 constant: wdot = (1 - w/c) F0 - k w, linear with rate
        // gamma = k + F0/c and equilibrium F0/gamma.
        let f0 = 0.8;
        let (k, c, v0, t_end) = (1.2, 1.0, 0.2, 2.0);
        let model = PulseModel::new(
            c,
            0.01,
            PeriodicShape::Constant { value: f0 },
            FrictionLaw::Constant { k },
            AmplitudeLaw { c0: 1.0, c1: 0.0, a: 1.0, b: 0.0 },
        )
        .unwrap();
        let kin = KineticsModel::new(1, crate::model::KineticsLaw::Zero, 1e-9).unwrap();
        let fbar = AveragedForce::of_model(&model, 65).unwrap();
        let run = integrate_averaged(&model, &kin, &fbar, v0, &[0.0], t_end, 1e-4).unwrap();
        let gamma = k + f0 / c;
        let weq = f0 / gamma;
        for i in 0..run.times.len() {
            let t = run.times[i];
            let w_exact = weq + (v0 - weq) * (-gamma * t).exp();
            let x_exact = weq * t + (v0 - weq) * (1.0 - (-gamma * t).exp()) / gamma;
            assert!((run.xdot[i] - w_exact).abs() < 1e-8, "t = {t}");
            assert!((run.x[i] - x_exact).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn average_force_of_raised_sine_is_identity_in_v() {
        // gtilde = 2 sin^2(pi s) V integrates to V over one period.
        let forcing = CustomForcing(Arc::new(|s: f64, v: f64, _x, _y: &[f64]| {
            if v <= 0.0 {
                0.0
            } else {
                2.0 * (std::f64::consts::PI * s).sin().powi(2) * v
            }
        }));
        let f1 = average_force(&forcing, 65, 1.0, 0.0, &[]).unwrap();
        assert!((f1 - 1.0).abs() < 1e-12);
        let f_neg = average_force(&forcing, 65, -1.0, 0.0, &[]).unwrap();
        assert_eq!(f_neg, 0.0);
    }

    #[test]
    fn average_force_matches_fine_trapezoid_oracle() {
        // Built-in family at (V, x, sum y) = (0.5, 1, 2) with
        // (c0, c1, a, b) = (1, 1, 1, 1): amplitude 3/2, so Fbar = 1.5.
        let model = PulseModel::new(
            1.0,
            0.1,
            PeriodicShape::RaisedSine,
            FrictionLaw::Constant { k: 1.0 },
            AmplitudeLaw { c0: 1.0, c1: 1.0, a: 1.0, b: 1.0 },
        )
        .unwrap();
        let y = [2.0];
        // Brute-force periodic trapezoid with 1e6 nodes.
        let n = 1_000_000;
        let mut oracle = 0.0;
        for k in 0..n {
            let s = k as f64 / n as f64;
            oracle += model.gtilde(s, 0.5, 1.0, &y);
        }
        oracle /= n as f64;
        assert!((oracle - 1.5).abs() < 1e-10);
        let simpson = average_force(&model, 65, 0.5, 1.0, &y).unwrap();
        assert!((simpson - oracle).abs() < 1e-8, "simpson {simpson} vs oracle {oracle}");
    }

    #[test]
    fn average_force_rejects_too_few_nodes() {
        let model = friction_free_model(0.1);
        assert!(matches!(
            average_force(&model, 2, 1.0, 0.0, &[]),
            Err(OdeError::InvalidParameter(_))
        ));
    }

    #[test]
    fn oscillatory_requires_resolved_phase() {
        let (model, kin, v0, y0, _) = standard_fixture();
        let err = integrate_oscillatory(&model, &kin, v0, &y0, 1.0, 1e-2).unwrap_err();
        assert!(matches!(err, OdeError::StepSize(_)));
    }

    #[test]
    fn initial_velocity_at_or_above_wave_speed_is_rejected() {
        let (model, kin, _, y0, _) = standard_fixture();
        let err = integrate_oscillatory(&model, &kin, 1.0, &y0, 1.0, 1e-4).unwrap_err();
        assert!(matches!(err, OdeError::InvalidInitialCondition(_)));
    }

    #[test]
    fn step_halving_self_convergence() {
        let (mut model, kin, v0, y0, t_end) = standard_fixture();
        model.pulse_period_eps = 1e-2;
        let run = integrate_pulsed_with(
            &model, 1.0, 1e-2, &model.friction, &kin, v0, &y0, t_end, 5e-4, 1000,
        )
        .unwrap();
        let fine = integrate_pulsed_with(
            &model, 1.0, 1e-2, &model.friction, &kin, v0, &y0, t_end, 5e-5, 1000,
        )
        .unwrap();
        let err = crate::util::sup_norm_diff(&run.x, &fine.x)
            .max(crate::util::sup_norm_diff(&run.xdot, &fine.xdot));
        assert!(err < 1e-6, "self-convergence error {err}");
    }

    #[test]
    fn transport_bounds_hold_under_strong_forcing() {
        let model = PulseModel::new(
            1.0,
            0.05,
            PeriodicShape::VonMises { kappa: 8.0, center: 0.4 },
            FrictionLaw::Cosine { base: 1.0, amp: 0.5, period: 2.0 },
            AmplitudeLaw { c0: 5.0, c1: 2.0, a: 1.0, b: 0.0 },
        )
        .unwrap();
        let kin = KineticsModel::linear_decay(0.2);
        let run = integrate_oscillatory(&model, &kin, 0.85, &[2.0], 3.0, 0.05 / 40.0).unwrap();
        run.check_transport_bounds(1.0, 1e-10).unwrap();
        // The strong pulse should actually push the bolus near the wave speed.
        assert!(run.xdot.iter().cloned().fold(0.0, f64::max) > 0.8);
    }

    #[test]
    fn phase_independent_forcing_makes_pulsed_and_averaged_agree() {
        // gtilde constant in s: the pulsed system is already averaged.
        let model = PulseModel::new(
            1.0,
            0.1,
            PeriodicShape::Constant { value: 1.3 },
            FrictionLaw::Constant { k: 0.8 },
            AmplitudeLaw { c0: 1.0, c1: 0.5, a: 1.0, b: 0.2 },
        )
        .unwrap();
        let kin = KineticsModel::linear_decay(0.1);
        let fbar = AveragedForce::of_model(&model, 65).unwrap();
        for eps in [0.1, 0.01] {
            let osc = integrate_pulsed_with(
                &model, 1.0, eps, &model.friction, &kin, 0.3, &[1.0], 2.0, eps / 40.0, 500,
            )
            .unwrap();
            let avg = integrate_averaged_with(
                &fbar, 1.0, &model.friction, &kin, 0.3, &[1.0], 2.0, 2e-4, 500,
            )
            .unwrap();
            let err = crate::util::sup_norm_diff(&osc.x, &avg.x)
                .max(crate::util::sup_norm_diff(&osc.xdot, &avg.xdot));
            assert!(err < 1e-8, "eps = {eps}: {err}");
        }
    }

    #[test]
    fn convergence_study_flags_nothing_on_standard_fixture() {
        let (model, kin, v0, y0, _) = standard_fixture();
        let table = convergence_study(
            &model,
            &kin,
            v0,
            &y0,
            2.0,
            &[0.1, 0.05, 0.025],
            65,
            1000,
        )
        .unwrap();
        assert!(table.monotone, "errors should decrease: {:?}", table.rows);
        assert!(!table.flagged);
    }

    #[test]
    fn convergence_study_requires_three_periods() {
        let (model, kin, v0, y0, _) = standard_fixture();
        assert!(convergence_study(&model, &kin, v0, &y0, 1.0, &[0.1, 0.05], 65, 100).is_err());
    }
}
