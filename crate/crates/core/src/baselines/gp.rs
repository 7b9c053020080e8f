//! Gaussian-process regression with an isotropic squared-exponential
//! kernel; hyperparameters picked by log-marginal likelihood over a
//! 16x16 log grid. The classical Kriging response surface.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, DenseMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct GpModel<T> {
    pub inputs: Vec<Vec<T>>,
    pub targets: Vec<T>,
    pub length_scale: T,
    pub signal_var: T,
    pub noise_var: T,
    chol: DenseMatrix<T>,
    alpha: Vec<T>,
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn kernel_matrix<T: Scalar>(
    inputs: &[Vec<T>],
    length_scale: T,
    signal_var: T,
    diag_add: T,
) -> DenseMatrix<T> {
    let n = inputs.len();
    let mut k = DenseMatrix::zeros(n, n);
    let denom = T::two() * length_scale * length_scale;
    for i in 0..n {
        for j in 0..=i {
            let v = signal_var * (-sq_dist(&inputs[i], &inputs[j]) / denom).exp();
            k.set(i, j, v);
            k.set(j, i, v);
        }
        k.add_at(i, i, diag_add);
    }
    k
}

/// Cholesky with jitter escalation up to 1e-6 on the diagonal.
fn chol_with_jitter<T: Scalar>(
    inputs: &[Vec<T>],
    length_scale: T,
    signal_var: T,
    noise_var: T,
) -> Result<DenseMatrix<T>> {
    for jitter in [0.0, 1e-12, 1e-10, 1e-8, 1e-6] {
        let k = kernel_matrix(inputs, length_scale, signal_var, noise_var + T::from_f64(jitter));
        if let Ok(l) = cholesky(&k) {
            return Ok(l);
        }
    }
    Err(Error::Conditioning(
        "kernel matrix not positive definite after jitter escalation to 1e-6".into(),
    ))
}

fn log_marginal_likelihood<T: Scalar>(l: &DenseMatrix<T>, targets: &[T], alpha: &[T]) -> T {
    let n = T::from_usize(targets.len());
    let data_fit: T = targets.iter().zip(alpha).map(|(&y, &a)| y * a).sum();
    let mut log_det = T::zero();
    for i in 0..l.rows() {
        log_det += l.get(i, i).ln();
    }
    -T::half() * data_fit - log_det - n * T::half() * T::from_f64((2.0 * std::f64::consts::PI).ln())
}

/// Fits the zero-mean GP: grid-search over (length scale, signal
/// variance), Cholesky cached for prediction.
pub fn gp_fit<T: Scalar>(inputs: Vec<Vec<T>>, targets: Vec<T>, noise_var: T) -> Result<GpModel<T>> {
    if inputs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "GP fit needs at least 2 points, got {}",
            inputs.len()
        )));
    }
    if inputs.len() != targets.len() {
        return Err(Error::Shape("inputs and targets length mismatch".into()));
    }
    let d = inputs[0].len();
    if inputs.iter().any(|z| z.len() != d) {
        return Err(Error::Shape("ragged GP inputs".into()));
    }
    // Data scales anchor the grids.
    let mut max_dist = T::zero();
    for i in 0..inputs.len() {
        for j in 0..i {
            max_dist = max_dist.max(sq_dist(&inputs[i], &inputs[j]).sqrt());
        }
    }
    if max_dist <= T::zero() {
        max_dist = T::one();
    }
    let mean = targets.iter().copied().sum::<T>() / T::from_usize(targets.len());
    let mut var = targets.iter().map(|&y| (y - mean) * (y - mean)).sum::<T>()
        / T::from_usize(targets.len());
    if var <= T::zero() {
        var = T::one();
    }

    let grid = |lo: T, hi: T| -> Vec<T> {
        let (llo, lhi) = (lo.ln(), hi.ln());
        (0..16)
            .map(|i| (llo + (lhi - llo) * T::from_usize(i) / T::from_f64(15.0)).exp())
            .collect()
    };
    let ell_grid = grid(max_dist * T::from_f64(0.05), max_dist * T::two());
    let s2_grid = grid(var * T::from_f64(1e-2), var * T::from_f64(1e2));

    let mut best: Option<(T, T, T)> = None;
    for &ell in &ell_grid {
        for &s2 in &s2_grid {
            let Ok(l) = chol_with_jitter(&inputs, ell, s2, noise_var) else {
                continue;
            };
            let alpha = cholesky_solve(&l, &targets);
            let lml = log_marginal_likelihood(&l, &targets, &alpha);
            if lml.is_finite() && best.map(|(b, _, _)| lml > b).unwrap_or(true) {
                best = Some((lml, ell, s2));
            }
        }
    }
    let (_, length_scale, signal_var) =
        best.ok_or_else(|| Error::Conditioning("no admissible GP hyperparameters".into()))?;
    let chol = chol_with_jitter(&inputs, length_scale, signal_var, noise_var)?;
    let alpha = cholesky_solve(&chol, &targets);
    Ok(GpModel { inputs, targets, length_scale, signal_var, noise_var, chol, alpha })
}

impl<T: Scalar> GpModel<T> {
    /// Posterior mean and latent variance at `z` (variance clamped at 0
    /// after roundoff).
    pub fn predict(&self, z: &[T]) -> (T, T) {
        let denom = T::two() * self.length_scale * self.length_scale;
        let kstar: Vec<T> = self
            .inputs
            .iter()
            .map(|x| self.signal_var * (-sq_dist(x, z) / denom).exp())
            .collect();
        let mu = kstar.iter().zip(&self.alpha).map(|(&k, &a)| k * a).sum();
        let v = cholesky_solve(&self.chol, &kstar);
        let reduction: T = kstar.iter().zip(&v).map(|(&k, &w)| k * w).sum();
        let var = (self.signal_var - reduction).max(T::zero());
        (mu, var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lu_solve;
    use approx::assert_relative_eq;

    #[test]
    fn interpolates_training_points_with_tiny_noise() {
        let model = gp_fit::<f64>(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0], 1e-10).unwrap();
        let (mu0, var0) = model.predict(&[0.0]);
        assert!(mu0.abs() < 1e-6, "mean at training point {mu0}");
        assert!(var0 <= 1e-10 + 1e-9, "variance at training point {var0}");
        let (mu1, _) = model.predict(&[1.0]);
        assert!((mu1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reverts_to_prior_far_from_data() {
        let inputs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.1]).collect();
        let targets: Vec<f64> = inputs.iter().map(|z| (z[0] * 6.0).sin()).collect();
        let model = gp_fit(inputs, targets, 1e-8).unwrap();
        let (mu, var) = model.predict(&[1e6]);
        assert!(mu.abs() < 1e-2 * model.signal_var.max(1.0), "mu {mu}");
        assert_relative_eq!(var, model.signal_var, max_relative = 0.01);
    }

    #[test]
    fn prediction_is_continuous() {
        let model = gp_fit::<f64>(
            vec![vec![0.0], vec![0.5], vec![1.0]],
            vec![0.3, -0.2, 0.8],
            1e-6,
        )
        .unwrap();
        let (m1, _) = model.predict(&[0.25]);
        let (m2, _) = model.predict(&[0.25 + 1e-9]);
        assert!((m1 - m2).abs() < 1e-6);
    }

    #[test]
    fn recovers_a_sine_from_12_points() {
        // Dense-grid oracle: held-out RMSE of sin(2 pi z) under 0.05.
        let n = 12;
        let inputs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        let targets: Vec<f64> =
            inputs.iter().map(|z| (2.0 * std::f64::consts::PI * z[0]).sin()).collect();
        let model = gp_fit(inputs, targets, 1e-8).unwrap();
        let mut sq = 0.0;
        let grid = 200;
        for g in 0..=grid {
            let z = g as f64 / grid as f64;
            let (mu, _) = model.predict(&[z]);
            let err = mu - (2.0 * std::f64::consts::PI * z).sin();
            sq += err * err;
        }
        let rmse = (sq / (grid + 1) as f64).sqrt();
        assert!(rmse < 0.05, "RMSE {rmse}");
    }

    #[test]
    fn matches_direct_linear_solve() {
        // Naive-solve oracle: mu and var via LU on the full kernel
        // matrix, no Cholesky.
        let inputs: Vec<Vec<f64>> =
            vec![vec![0.1, 0.2], vec![0.7, -0.3], vec![-0.4, 0.5], vec![0.9, 0.9]];
        let targets = vec![1.0, -0.5, 0.25, 2.0];
        let noise = 1e-6;
        let model = gp_fit(inputs.clone(), targets.clone(), noise).unwrap();
        let z = vec![0.33, 0.41];
        let (mu, var) = model.predict(&z);

        let k = kernel_matrix(&inputs, model.length_scale, model.signal_var, noise);
        let alpha = lu_solve(k.clone(), targets).unwrap();
        let denom = 2.0 * model.length_scale * model.length_scale;
        let kstar: Vec<f64> = inputs
            .iter()
            .map(|x| model.signal_var * (-sq_dist(x, &z) / denom).exp())
            .collect();
        let mu_direct: f64 = kstar.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        let kinv_kstar = lu_solve(k, kstar.clone()).unwrap();
        let var_direct =
            model.signal_var - kstar.iter().zip(&kinv_kstar).map(|(a, b)| a * b).sum::<f64>();
        assert_relative_eq!(mu, mu_direct, epsilon = 1e-8);
        assert_relative_eq!(var, var_direct.max(0.0), epsilon = 1e-8);
    }

    #[test]
    fn too_few_points_is_rejected() {
        assert!(matches!(
            gp_fit(vec![vec![0.0]], vec![1.0], 1e-6),
            Err(Error::InsufficientData(_))
        ));
    }
}
