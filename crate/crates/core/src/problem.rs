use crate::error::{Error, Result};
use crate::grid::{norm2, Grid, Signal};
use crate::operators::ConvOperator;
use crate::rng::RngHandle;

/// The linear model `y = A(g + h) + e` with `e ~ N(0, noise_sigma^2 I)`.
#[derive(Debug, Clone)]
pub struct DecompProblem {
    forward: ConvOperator,
    noise_sigma: f64,
    data: Vec<f64>,
    truth: Option<Signal>,
}

impl DecompProblem {
    pub fn new(forward: ConvOperator, noise_sigma: f64, data: Vec<f64>) -> Result<Self> {
        if !(noise_sigma > 0.0) || !noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be positive, got {noise_sigma}"
            )));
        }
        let m = forward.grid().len();
        if data.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("data"));
        }
        Ok(Self {
            forward,
            noise_sigma,
            data,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: Signal) -> Result<Self> {
        truth.ensure_grid(self.grid())?;
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn grid(&self) -> Grid {
        self.forward.grid()
    }

    pub fn forward(&self) -> &ConvOperator {
        &self.forward
    }

    pub fn kernel_sigma(&self) -> f64 {
        self.forward.sigma()
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn truth(&self) -> Option<&Signal> {
        self.truth.as_ref()
    }
}

/// Adds white Gaussian noise with `sigma = level * ||clean|| / sqrt(m)`, so the
/// expected squared noise-to-signal norm ratio is `level^2`. Returns the noisy
/// vector together with `sigma`.
pub fn add_noise(clean: &[f64], level: f64, rng: &mut RngHandle) -> Result<(Vec<f64>, f64)> {
    if !(level > 0.0) || !level.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise level must be positive, got {level}"
        )));
    }
    let norm = norm2(clean);
    if norm == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let sigma = level * norm / (clean.len() as f64).sqrt();
    let noisy = clean
        .iter()
        .map(|&c| c + sigma * rng.standard_normal())
        .collect();
    Ok((noisy, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_is_level_times_rms() {
        let mut clean = vec![0.0; 100];
        clean[0] = 10.0;
        let mut rng = RngHandle::new(1, 0);
        let (_, sigma) = add_noise(&clean, 0.1, &mut rng).unwrap();
        assert!((sigma - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_level_and_zero_data() {
        let mut rng = RngHandle::new(1, 0);
        assert!(add_noise(&[1.0, 2.0], 0.0, &mut rng).is_err());
        assert_eq!(
            add_noise(&[0.0, 0.0], 0.1, &mut rng).unwrap_err(),
            Error::ZeroSignal
        );
    }

    #[test]
    fn noise_norm_ratio_concentrates() {
        let clean: Vec<f64> = (0..512).map(|i| (i as f64 * 0.1).sin() + 1.0).collect();
        let cn = norm2(&clean);
        let mut mean_sq = 0.0;
        for seed in 0..100 {
            let mut rng = RngHandle::new(seed, 3);
            let (noisy, sigma) = add_noise(&clean, 0.1, &mut rng).unwrap();
            let eps: Vec<f64> = noisy.iter().zip(&clean).map(|(a, b)| a - b).collect();
            let ratio = norm2(&eps) / cn;
            assert!((0.08..=0.12).contains(&ratio), "seed {seed}: ratio {ratio}");
            mean_sq += norm2(&eps).powi(2) / (512.0 * sigma * sigma);
        }
        mean_sq /= 100.0;
        assert!((mean_sq - 1.0).abs() < 0.05, "{mean_sq}");
    }

    #[test]
    fn same_seed_same_noise() {
        let clean = vec![1.0; 64];
        let a = add_noise(&clean, 0.05, &mut RngHandle::new(9, 1)).unwrap();
        let b = add_noise(&clean, 0.05, &mut RngHandle::new(9, 1)).unwrap();
        let c = add_noise(&clean, 0.05, &mut RngHandle::new(9, 2)).unwrap();
        assert_eq!(a.0, b.0);
        assert_ne!(a.0, c.0);
    }
}
