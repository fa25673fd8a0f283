//! Absorption and degradation laws on the villous wall and in the lumen.
//!
//! Boundary (surfacic) effects, per unit wall area:
//!
//! ```text
//! passive absorption   eta_p(x1, X) * u
//! active absorption    eta_a(x1, X, t) * g_a(u)
//! surfacic degradation rho(x1, X) * v   (fraction alpha re-enters as u)
//! ```
//!
//! Volumic degradation inside the lumen: `zeta(x1, t) * phi(v)` converts
//! feedstuff `v` into nutrient `u`.
//!
//! The saturating laws `g_a` and `phi` are bounded, nondecreasing and vanish
//! on `s <= 0`; the default is Michaelis-Menten. All surface rates are
//! 1-periodic in the fast axial coordinate `X1` and `eta_p` is bounded below
//! by `eta_lower_bound > 0`.

use super::ModelError;
use crate::util::Vec3;
use std::sync::Arc;

/// Michaelis-Menten rate `V_max s / (K_m + s)` for `s > 0`, zero otherwise.
pub fn michaelis_menten(s: f64, v_max: f64, k_m: f64) -> Result<f64, ModelError> {
    if !(k_m > 0.0) {
        return Err(ModelError::InvalidParameter(format!("K_m must be positive, got {k_m}")));
    }
    if v_max < 0.0 {
        return Err(ModelError::InvalidParameter(format!("V_max must be >= 0, got {v_max}")));
    }
    Ok(if s > 0.0 { v_max * s / (k_m + s) } else { 0.0 })
}

/// Bounded nondecreasing saturation law with `f(s) = 0` for `s <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Saturating {
    Zero,
    MichaelisMenten { v_max: f64, k_m: f64 },
    /// `min(slope * s, cap)` for `s > 0`; piecewise linear.
    SatLinear { slope: f64, cap: f64 },
}

impl Saturating {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Saturating::Zero => Ok(()),
            Saturating::MichaelisMenten { v_max, k_m } => {
                michaelis_menten(1.0, *v_max, *k_m).map(|_| ())
            }
            Saturating::SatLinear { slope, cap } => {
                if *slope >= 0.0 && *cap >= 0.0 {
                    Ok(())
                } else {
                    Err(ModelError::InvalidParameter("saturated law needs slope, cap >= 0".into()))
                }
            }
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Saturating::Zero => 0.0,
            Saturating::MichaelisMenten { v_max, k_m } => v_max * s / (k_m + s),
            Saturating::SatLinear { slope, cap } => (slope * s).min(*cap),
        }
    }

    /// Lipschitz constant (the slope at the origin).
    pub fn max_slope(&self) -> f64 {
        match self {
            Saturating::Zero => 0.0,
            Saturating::MichaelisMenten { v_max, k_m } => v_max / k_m,
            Saturating::SatLinear { slope, .. } => *slope,
        }
    }

    pub fn upper_bound(&self) -> f64 {
        match self {
            Saturating::Zero => 0.0,
            Saturating::MichaelisMenten { v_max, .. } => *v_max,
            Saturating::SatLinear { cap, .. } => *cap,
        }
    }
}

/// Multiplicative slow-scale modulation in `x1`; positive and bounded.
#[derive(Debug, Clone, PartialEq)]
pub enum AxialMod {
    Const,
    /// `exp(-rate * x1)`.
    Decay { rate: f64 },
    /// Samples at `x = k * dx`; linear interpolation, clamped outside.
    Table { dx: f64, values: Vec<f64> },
}

impl AxialMod {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            AxialMod::Const => Ok(()),
            AxialMod::Decay { rate } if *rate >= 0.0 => Ok(()),
            AxialMod::Decay { .. } => {
                Err(ModelError::InvalidParameter("axial decay rate must be >= 0".into()))
            }
            AxialMod::Table { dx, values } => {
                if *dx > 0.0 && values.len() >= 2 && values.iter().all(|v| *v > 0.0) {
                    Ok(())
                } else {
                    Err(ModelError::InvalidParameter(
                        "axial table needs dx > 0 and >= 2 positive samples".into(),
                    ))
                }
            }
        }
    }

    pub fn eval(&self, x1: f64) -> f64 {
        match self {
            AxialMod::Const => 1.0,
            AxialMod::Decay { rate } => (-rate * x1).exp(),
            AxialMod::Table { dx, values } => {
                let n = values.len();
                let pos = (x1 / dx).clamp(0.0, (n - 1) as f64);
                let i = (pos.floor() as usize).min(n - 2);
                let a = pos - i as f64;
                (1.0 - a) * values[i] + a * values[i + 1]
            }
        }
    }
}

/// Multiplicative 1-periodic modulation in the fast coordinate `X1`.
#[derive(Debug, Clone, PartialEq)]
pub enum FastMod {
    Const,
    /// `1 + amp * cos(2 pi freq X1)`; zero mean perturbation.
    Harmonic { amp: f64, freq: u32 },
    /// `1 + amp * (1 - cos(2 pi freq X1)) / 2`; weights the villus tips.
    TipWeighted { amp: f64, freq: u32 },
    /// Uniform samples on [0, 1), periodic linear interpolation.
    Table(Vec<f64>),
}

impl FastMod {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            FastMod::Const => Ok(()),
            FastMod::Harmonic { amp, freq } => {
                if amp.abs() <= 1.0 && *freq >= 1 {
                    Ok(())
                } else {
                    Err(ModelError::InvalidParameter(
                        "harmonic modulation needs |amp| <= 1 and freq >= 1".into(),
                    ))
                }
            }
            FastMod::TipWeighted { amp, freq } => {
                if *amp >= -1.0 && *freq >= 1 {
                    Ok(())
                } else {
                    Err(ModelError::InvalidParameter(
                        "tip weighting needs amp >= -1 and freq >= 1".into(),
                    ))
                }
            }
            FastMod::Table(v) => {
                if v.len() >= 2 && v.iter().all(|x| *x > 0.0) {
                    Ok(())
                } else {
                    Err(ModelError::InvalidParameter(
                        "fast-scale table needs >= 2 positive samples".into(),
                    ))
                }
            }
        }
    }

    pub fn eval(&self, x1_fast: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            FastMod::Const => 1.0,
            FastMod::Harmonic { amp, freq } => 1.0 + amp * (2.0 * PI * *freq as f64 * x1_fast).cos(),
            FastMod::TipWeighted { amp, freq } => {
                1.0 + amp * (1.0 - (2.0 * PI * *freq as f64 * x1_fast).cos()) / 2.0
            }
            FastMod::Table(v) => {
                let n = v.len();
                let sf = x1_fast.rem_euclid(1.0) * n as f64;
                let i = sf.floor() as usize % n;
                let a = sf - sf.floor();
                (1.0 - a) * v[i] + a * v[(i + 1) % n]
            }
        }
    }
}

/// Multiplicative time modulation; positive and bounded on [0, T].
#[derive(Debug, Clone, PartialEq)]
pub enum TimeMod {
    Const,
    /// `1 + amp * sin^2(pi t / period)`.
    Sin2 { amp: f64, period: f64 },
}

impl TimeMod {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            TimeMod::Const => Ok(()),
            TimeMod::Sin2 { amp, period } => {
                if *amp > -1.0 && *period > 0.0 {
                    Ok(())
                } else {
                    Err(ModelError::InvalidParameter(
                        "time modulation needs amp > -1 and period > 0".into(),
                    ))
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeMod::Const => 1.0,
            TimeMod::Sin2 { amp, period } => {
                let s = (std::f64::consts::PI * t / period).sin();
                1.0 + amp * s * s
            }
        }
    }
}

/// Surface rate `base * axial(x1) * fast(X1) * time(t)`, or a custom closure.
#[derive(Clone)]
pub enum SurfaceCoeff {
    Product { base: f64, axial: AxialMod, fast: FastMod, time: TimeMod },
    Custom(Arc<dyn Fn(f64, Vec3, f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for SurfaceCoeff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SurfaceCoeff::Product { base, axial, fast, time } => f
                .debug_struct("Product")
                .field("base", base)
                .field("axial", axial)
                .field("fast", fast)
                .field("time", time)
                .finish(),
            SurfaceCoeff::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl SurfaceCoeff {
    pub fn constant(base: f64) -> Self {
        SurfaceCoeff::Product { base, axial: AxialMod::Const, fast: FastMod::Const, time: TimeMod::Const }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            SurfaceCoeff::Product { base, axial, fast, time } => {
                if !(*base >= 0.0) {
                    return Err(ModelError::InvalidParameter("surface rate base must be >= 0".into()));
                }
                axial.validate()?;
                fast.validate()?;
                time.validate()
            }
            SurfaceCoeff::Custom(_) => Ok(()),
        }
    }

    pub fn eval(&self, x1: f64, x_fast: Vec3, t: f64) -> f64 {
        match self {
            SurfaceCoeff::Product { base, axial, fast, time } => {
                base * axial.eval(x1) * fast.eval(x_fast[0]) * time.eval(t)
            }
            SurfaceCoeff::Custom(f) => f(x1, x_fast, t),
        }
    }
}

/// Volumic enzyme activity `zeta(x1, t) = base * axial(x1) * time(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolCoeff {
    pub base: f64,
    pub axial: AxialMod,
    pub time: TimeMod,
}

impl VolCoeff {
    pub fn constant(base: f64) -> Self {
        Self { base, axial: AxialMod::Const, time: TimeMod::Const }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.base >= 0.0) {
            return Err(ModelError::InvalidParameter("zeta must be >= 0".into()));
        }
        self.axial.validate()?;
        self.time.validate()
    }

    pub fn eval(&self, x1: f64, t: f64) -> f64 {
        self.base * self.axial.eval(x1) * self.time.eval(t)
    }
}

/// Boundary and volume reaction laws for the absorption pipeline.
#[derive(Debug, Clone)]
pub struct AbsorptionModel {
    /// Passive absorption rate `eta_p(x1, X)`.
    pub eta_p: SurfaceCoeff,
    /// Active absorption rate `eta_a(x1, X, t)`.
    pub eta_a: SurfaceCoeff,
    /// Active absorption law `g_a`.
    pub g_a: Saturating,
    /// Surfacic degradation rate `rho(x1, X)`.
    pub rho_surf: SurfaceCoeff,
    /// Non-instantly-absorbed fraction of surfacic production, in (0, 1].
    pub alpha: f64,
    /// Feedstuff diffusion scale `omega`.
    pub omega: f64,
    /// Nutrient diffusion scale `chi >= omega`.
    pub chi: f64,
    /// Volumic enzyme activity `zeta(x1, t)`.
    pub zeta: VolCoeff,
    /// Volumic degradation law `phi`.
    pub phi: Saturating,
    /// Declared lower bound `eta_p >= eta_lower_bound > 0`.
    pub eta_lower_bound: f64,
}

impl AbsorptionModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        eta_p: SurfaceCoeff,
        eta_a: SurfaceCoeff,
        g_a: Saturating,
        rho_surf: SurfaceCoeff,
        alpha: f64,
        omega: f64,
        chi: f64,
        zeta: VolCoeff,
        phi: Saturating,
        eta_lower_bound: f64,
    ) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ModelError::InvalidParameter(format!("alpha must be in (0, 1], got {alpha}")));
        }
        if !(omega > 0.0) {
            return Err(ModelError::InvalidParameter("omega must be positive".into()));
        }
        if !(chi >= omega) {
            return Err(ModelError::InvalidParameter(format!(
                "need chi >= omega (nutrients diffuse faster), got chi = {chi}, omega = {omega}"
            )));
        }
        if !(eta_lower_bound > 0.0) {
            return Err(ModelError::InvalidParameter("eta lower bound must be positive".into()));
        }
        eta_p.validate()?;
        eta_a.validate()?;
        g_a.validate()?;
        rho_surf.validate()?;
        zeta.validate()?;
        phi.validate()?;
        Ok(Self { eta_p, eta_a, g_a, rho_surf, alpha, omega, chi, zeta, phi, eta_lower_bound })
    }

    pub fn eta_p_at(&self, x1: f64, x_fast: Vec3) -> f64 {
        self.eta_p.eval(x1, x_fast, 0.0)
    }

    pub fn eta_a_at(&self, x1: f64, x_fast: Vec3, t: f64) -> f64 {
        self.eta_a.eval(x1, x_fast, t)
    }

    pub fn rho_at(&self, x1: f64, x_fast: Vec3) -> f64 {
        self.rho_surf.eval(x1, x_fast, 0.0)
    }

    pub fn zeta_at(&self, x1: f64, t: f64) -> f64 {
        self.zeta.eval(x1, t)
    }

    /// Sampled checks of the standing assumptions: periodicity of the
    /// surface rates in `X1`, the lower bound on `eta_p`, and monotone
    /// bounded saturation laws vanishing on the negative axis.
    pub fn check_assumptions(&self, samples: usize, seed: u64) -> Result<(), ModelError> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x1 = rng.gen::<f64>() * 10.0;
            let t = rng.gen::<f64>() * 5.0;
            let x = [rng.gen::<f64>(), rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5];
            let xp = [x[0] + 1.0, x[1], x[2]];
            for (name, a, b) in [
                ("eta_p", self.eta_p.eval(x1, x, t), self.eta_p.eval(x1, xp, t)),
                ("eta_a", self.eta_a.eval(x1, x, t), self.eta_a.eval(x1, xp, t)),
                ("rho", self.rho_surf.eval(x1, x, t), self.rho_surf.eval(x1, xp, t)),
            ] {
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(ModelError::AssumptionViolation {
                        name: "T2",
                        detail: format!("{name} is not 1-periodic in X1 at X1 = {}", x[0]),
                    });
                }
            }
            if self.eta_p.eval(x1, x, t) < self.eta_lower_bound {
                return Err(ModelError::AssumptionViolation {
                    name: "T2",
                    detail: format!(
                        "eta_p = {} below the declared lower bound {}",
                        self.eta_p.eval(x1, x, t),
                        self.eta_lower_bound
                    ),
                });
            }
            let (s1, s2) = {
                let a = rng.gen::<f64>() * 20.0 - 5.0;
                let b = rng.gen::<f64>() * 20.0 - 5.0;
                (a.min(b), a.max(b))
            };
            for (name, law) in [("g_a", &self.g_a), ("phi", &self.phi)] {
                if law.eval(s1) > law.eval(s2) + 1e-14 {
                    return Err(ModelError::AssumptionViolation {
                        name: "T1",
                        detail: format!("{name} is decreasing between {s1} and {s2}"),
                    });
                }
                if s1 <= 0.0 && law.eval(s1) != 0.0 {
                    return Err(ModelError::AssumptionViolation {
                        name: "T1",
                        detail: format!("{name}({s1}) != 0 on the negative axis"),
                    });
                }
                if law.eval(s2) > law.upper_bound() + 1e-14 {
                    return Err(ModelError::AssumptionViolation {
                        name: "T1",
                        detail: format!("{name} exceeds its declared bound"),
                    });
                }
            }
        }
        Ok(())
    }
}
