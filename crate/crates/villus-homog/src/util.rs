//! Small numeric helpers shared across the crate.

/// 3-vector alias used for positions, velocities and normals.
pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Composite Simpson weights on `n` nodes over [0, 1]; `n` must be odd and >= 3.
pub fn simpson_weights(n: usize) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson rule needs an odd node count >= 3");
    let h = 1.0 / (n - 1) as f64;
    let mut w = vec![0.0; n];
    for (k, wk) in w.iter_mut().enumerate() {
        *wk = if k == 0 || k == n - 1 {
            h / 3.0
        } else if k % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    w
}

/// Discrete sup-norm distance between two equally long slices.
pub fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// log2 of the ratio of successive errors; the empirical convergence order
/// for a halved resolution parameter.
pub fn empirical_order(err_coarse: f64, err_fine: f64) -> f64 {
    (err_coarse / err_fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        // x^3 on [0,1] has integral 1/4.
        let w = simpson_weights(5);
        let s: f64 = w
            .iter()
            .enumerate()
            .map(|(k, wk)| {
                let x = k as f64 / 4.0;
                wk * x * x * x
            })
            .sum();
        assert!((s - 0.25).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn simpson_rejects_even_node_count() {
        simpson_weights(4);
    }
}
