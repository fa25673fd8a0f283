//! Peristaltic pulse forcing for the bolus transport system.
//!
//! A pulse travelling at wave speed `c` with period `eps` reaches the bolus
//! at phase `s = (t - x/c) / eps` and accelerates it by
//!
//! ```text
//! g(s, v, x, y) = gtilde(s, v, x, y) * v,      v = 1 - xdot/c,
//! ```
//!
//! where `gtilde >= 0` for `v >= 0` and `gtilde = 0` for `v <= 0`: a pulse
//! can only push a bolus that is slower than the wave. The built-in family is
//!
//! ```text
//! gtilde(s, v, x, y) = w(s) * (c0 + c1 * sum(y)) / (a + b * x)
//! ```
//!
//! with a nonnegative 1-periodic pulse shape `w`. Pulse efficiency grows
//! with the bolus size `sum(y)` and decays with the distance `x` from the
//! pylorus.

use super::ModelError;
use std::sync::Arc;

/// Nonnegative 1-periodic pulse shape `w(s)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PeriodicShape {
    /// `w(s) = 2 sin^2(pi s)`; unit mean.
    RaisedSine,
    /// `w(s) = value`.
    Constant { value: f64 },
    /// `w(s) = exp(kappa (cos(2 pi (s - center)) - 1))`; a smooth bump that
    /// sharpens with `kappa`.
    VonMises { kappa: f64, center: f64 },
    /// Uniform samples on [0, 1), right endpoint excluded; linear
    /// interpolation, periodic wrap.
    Table(Vec<f64>),
}

impl PeriodicShape {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            PeriodicShape::Constant { value } if *value < 0.0 => Err(ModelError::InvalidParameter(
                "pulse shape must be nonnegative".into(),
            )),
            PeriodicShape::VonMises { kappa, .. } if *kappa < 0.0 => Err(
                ModelError::InvalidParameter("von Mises pulse shape needs kappa >= 0".into()),
            ),
            PeriodicShape::Table(v) if v.len() < 2 || v.iter().any(|x| *x < 0.0 || !x.is_finite()) => {
                Err(ModelError::InvalidParameter(
                    "tabulated pulse shape needs >= 2 finite nonnegative samples".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            PeriodicShape::RaisedSine => {
                let q = (PI * s).sin();
                2.0 * q * q
            }
            PeriodicShape::Constant { value } => *value,
            PeriodicShape::VonMises { kappa, center } => {
                (kappa * ((2.0 * PI * (s - center)).cos() - 1.0)).exp()
            }
            PeriodicShape::Table(v) => {
                let n = v.len();
                let sf = s.rem_euclid(1.0) * n as f64;
                let i = sf.floor() as usize % n;
                let a = sf - sf.floor();
                (1.0 - a) * v[i] + a * v[(i + 1) % n]
            }
        }
    }
}

/// Positive friction coefficient `k(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FrictionLaw {
    Constant { k: f64 },
    /// `k(t) = base + amp * cos(2 pi t / period)`, requires `base > |amp|`.
    Cosine { base: f64, amp: f64, period: f64 },
}

impl FrictionLaw {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            FrictionLaw::Constant { k } if !(*k > 0.0) => {
                Err(ModelError::InvalidParameter("friction must be positive".into()))
            }
            FrictionLaw::Cosine { base, amp, period } if !(*base > amp.abs()) || !(*period > 0.0) => {
                Err(ModelError::InvalidParameter(
                    "cosine friction needs base > |amp| and period > 0".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            FrictionLaw::Constant { k } => *k,
            FrictionLaw::Cosine { base, amp, period } => {
                base + amp * (2.0 * std::f64::consts::PI * t / period).cos()
            }
        }
    }
}

/// Amplitude law `(c0 + c1 * sum(y)) / (a + b * x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeLaw {
    pub c0: f64,
    pub c1: f64,
    pub a: f64,
    pub b: f64,
}

impl AmplitudeLaw {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.c0 < 0.0 || self.c1 < 0.0 || self.b < 0.0 || !(self.a > 0.0) {
            // a > 0 and b >= 0 keep the denominator positive for all x >= 0.
            return Err(ModelError::InvalidParameter(
                "amplitude law needs c0, c1, b >= 0 and a > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y_sum: f64) -> f64 {
        (self.c0 + self.c1 * y_sum) / (self.a + self.b * x)
    }
}

/// Peristaltic forcing model: wave speed, pulse period, pulse shape,
/// friction and the amplitude law.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseModel {
    pub wave_speed_c: f64,
    pub pulse_period_eps: f64,
    pub shape: PeriodicShape,
    pub friction: FrictionLaw,
    pub amplitude: AmplitudeLaw,
}

impl PulseModel {
    pub fn new(
        wave_speed_c: f64,
        pulse_period_eps: f64,
        shape: PeriodicShape,
        friction: FrictionLaw,
        amplitude: AmplitudeLaw,
    ) -> Result<Self, ModelError> {
        if !(wave_speed_c > 0.0) {
            return Err(ModelError::InvalidParameter("wave speed must be positive".into()));
        }
        if !(pulse_period_eps > 0.0) {
            return Err(ModelError::InvalidParameter("pulse period must be positive".into()));
        }
        shape.validate()?;
        friction.validate()?;
        amplitude.validate()?;
        Ok(Self { wave_speed_c, pulse_period_eps, shape, friction, amplitude })
    }

    pub fn friction_at(&self, t: f64) -> f64 {
        self.friction.eval(t)
    }
}

/// Per-unit-relative-velocity pulse strength `gtilde(s, v, x, y)`.
///
/// Implementations must vanish for `v <= 0` and be nonnegative for
/// `v >= 0, y >= 0`; the built-in family guarantees both.
pub trait PulseForcing: Send + Sync {
    fn gtilde(&self, s: f64, v: f64, x: f64, y: &[f64]) -> f64;
}

impl PulseForcing for PulseModel {
    fn gtilde(&self, s: f64, v: f64, x: f64, y: &[f64]) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let y_sum: f64 = y.iter().sum();
        self.shape.eval(s) * self.amplitude.eval(x, y_sum)
    }
}

/// Closure-backed forcing, mostly for tests and custom studies.
#[derive(Clone)]
pub struct CustomForcing(pub Arc<dyn Fn(f64, f64, f64, &[f64]) -> f64 + Send + Sync>);

impl PulseForcing for CustomForcing {
    fn gtilde(&self, s: f64, v: f64, x: f64, y: &[f64]) -> f64 {
        (self.0)(s, v, x, y)
    }
}

impl std::fmt::Debug for CustomForcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("CustomForcing(..)")
    }
}

/// Pulse acceleration `g = gtilde * v`, zero for non-positive relative
/// velocity.
pub fn eval_pulse_force(model: &PulseModel, s: f64, v_rel: f64, x: f64, y: &[f64]) -> f64 {
    if v_rel <= 0.0 {
        0.0
    } else {
        model.gtilde(s, v_rel, x, y) * v_rel
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn example_model() -> PulseModel {
        PulseModel::new(
            1.0,
            0.1,
            PeriodicShape::RaisedSine,
            FrictionLaw::Constant { k: 1.0 },
            AmplitudeLaw { c0: 0.0, c1: 1.0, a: 1.0, b: 0.0 },
        )
        .unwrap()
    }

    #[test]
    fn pulse_force_vanishes_for_nonpositive_relative_velocity() {
        let m = example_model();
        assert_eq!(eval_pulse_force(&m, 0.3, 0.0, 1.0, &[1.0]), 0.0);
        assert_eq!(eval_pulse_force(&m, 0.3, -0.5, 1.0, &[1.0]), 0.0);
    }

    #[test]
    fn pulse_force_matches_direct_formula() {
        // w(1/4) = 2 sin^2(pi/4) = 1, amplitude (0 + 1*1)/(1 + 0) = 1,
        // force = 0.5 * 1 * 1.
        let m = example_model();
        let f = eval_pulse_force(&m, 0.25, 0.5, 0.0, &[1.0]);
        assert!((f - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pulse_force_sign_structure() {
        let m = PulseModel::new(
            2.0,
            0.05,
            PeriodicShape::VonMises { kappa: 3.0, center: 0.3 },
            FrictionLaw::Constant { k: 0.7 },
            AmplitudeLaw { c0: 0.5, c1: 2.0, a: 1.0, b: 0.2 },
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let s = rng.gen::<f64>() * 10.0 - 5.0;
            let v = rng.gen::<f64>() * 4.0 - 2.0;
            let x = rng.gen::<f64>() * 10.0;
            let y = [rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0];
            let g = eval_pulse_force(&m, s, v, x, &y);
            if v <= 0.0 {
                assert_eq!(g, 0.0);
            } else {
                assert!(g >= 0.0, "force {g} negative at v {v}");
            }
        }
    }

    #[test]
    fn shapes_are_periodic_and_nonnegative() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let shapes = [
            PeriodicShape::RaisedSine,
            PeriodicShape::VonMises { kappa: 5.0, center: 0.2 },
            PeriodicShape::Table(vec![0.0, 1.0, 3.0, 1.0]),
        ];
        for shape in &shapes {
            for _ in 0..100 {
                let s = rng.gen::<f64>() * 6.0 - 3.0;
                let w = shape.eval(s);
                assert!(w >= 0.0);
                assert!((w - shape.eval(s + 1.0)).abs() < 1e-12, "{shape:?} not periodic");
            }
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(PulseModel::new(
            0.0,
            0.1,
            PeriodicShape::RaisedSine,
            FrictionLaw::Constant { k: 1.0 },
            AmplitudeLaw { c0: 1.0, c1: 0.0, a: 1.0, b: 0.0 },
        )
        .is_err());
        assert!(AmplitudeLaw { c0: 1.0, c1: 0.0, a: 0.0, b: 0.0 }.validate().is_err());
        assert!(FrictionLaw::Cosine { base: 1.0, amp: 1.5, period: 1.0 }.validate().is_err());
    }
}
