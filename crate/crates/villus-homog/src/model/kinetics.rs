//! Bolus composition kinetics `ydot = d(x, y)` for `K` nutrient species.

use super::ModelError;
use std::sync::Arc;

/// Production/degradation law for the composition vector.
#[derive(Clone)]
pub enum KineticsLaw {
    /// `d = 0`.
    Zero,
    /// `d_i = -rate_i * y_i`.
    LinearDecay(Vec<f64>),
    /// Closure `(x, y, out)` for custom studies.
    Custom(Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>),
}

impl std::fmt::Debug for KineticsLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KineticsLaw::Zero => f.write_str("Zero"),
            KineticsLaw::LinearDecay(r) => write!(f, "LinearDecay({r:?})"),
            KineticsLaw::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Kinetics model with its species count and a declared Lipschitz bound
/// used by step-size control.
#[derive(Debug, Clone)]
pub struct KineticsModel {
    pub dim: usize,
    pub law: KineticsLaw,
    pub lipschitz_bound: f64,
}

impl KineticsModel {
    pub fn new(dim: usize, law: KineticsLaw, lipschitz_bound: f64) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::InvalidParameter("kinetics needs >= 1 species".into()));
        }
        if !(lipschitz_bound > 0.0) {
            return Err(ModelError::InvalidParameter("Lipschitz bound must be positive".into()));
        }
        if let KineticsLaw::LinearDecay(r) = &law {
            if r.len() != dim {
                return Err(ModelError::InvalidParameter(format!(
                    "linear decay needs {dim} rates, got {}",
                    r.len()
                )));
            }
        }
        Ok(Self { dim, law, lipschitz_bound })
    }

    /// Convenience single-species decay `ydot = -rate * y`.
    pub fn linear_decay(rate: f64) -> Self {
        Self::new(1, KineticsLaw::LinearDecay(vec![rate]), rate.abs().max(1e-12)).unwrap()
    }

    pub fn rate(&self, x: f64, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        match &self.law {
            KineticsLaw::Zero => out.fill(0.0),
            KineticsLaw::LinearDecay(r) => {
                for i in 0..self.dim {
                    out[i] = -r[i] * y[i];
                }
            }
            KineticsLaw::Custom(f) => f(x, y, out),
        }
    }

    /// Sampled finite-difference check that `d` honours the declared
    /// Lipschitz bound on the box `x in [0, x_max]`, `|y_i| <= y_max`.
    /// Returns the largest observed difference quotient.
    pub fn check_lipschitz(
        &self,
        x_max: f64,
        y_max: f64,
        samples: usize,
        seed: u64,
    ) -> Result<f64, ModelError> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut d1 = vec![0.0; self.dim];
        let mut d2 = vec![0.0; self.dim];
        for _ in 0..samples {
            let x1 = rng.gen::<f64>() * x_max;
            let y1: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>() * y_max).collect();
            let dx = (rng.gen::<f64>() - 0.5) * 1e-3 * x_max.max(1.0);
            let x2 = (x1 + dx).clamp(0.0, x_max);
            let y2: Vec<f64> = y1
                .iter()
                .map(|v| (v + (rng.gen::<f64>() - 0.5) * 1e-3 * y_max.max(1.0)).clamp(0.0, y_max))
                .collect();
            self.rate(x1, &y1, &mut d1);
            self.rate(x2, &y2, &mut d2);
            let num: f64 = d1.iter().zip(&d2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let den = ((x1 - x2) * (x1 - x2)
                + y1.iter().zip(&y2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sqrt();
            if den > 1e-12 {
                worst = worst.max(num / den);
            }
        }
        if worst > self.lipschitz_bound * (1.0 + 1e-9) {
            return Err(ModelError::InvalidParameter(format!(
                "sampled Lipschitz quotient {worst} exceeds the declared bound {}",
                self.lipschitz_bound
            )));
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay_rate() {
        let m = KineticsModel::linear_decay(0.1);
        let mut out = [0.0];
        m.rate(2.0, &[3.0], &mut out);
        assert!((out[0] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_check_accepts_honest_bound_and_rejects_lies() {
        let ok = KineticsModel::new(1, KineticsLaw::LinearDecay(vec![0.1]), 0.1).unwrap();
        ok.check_lipschitz(10.0, 5.0, 200, 1).unwrap();
        let lying = KineticsModel::new(1, KineticsLaw::LinearDecay(vec![2.0]), 0.1).unwrap();
        assert!(lying.check_lipschitz(10.0, 5.0, 200, 1).is_err());
    }
}
