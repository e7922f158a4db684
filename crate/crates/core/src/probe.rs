//! Empirical Lipschitz estimation and black-box derivative probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::image::Image;
use crate::ops::{BlackBoxOperator, OpError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("probe image shapes differ")]
    ShapeMismatch,
    #[error("epsilon must be > 0, got {0}")]
    BadEpsilon(f64),
    #[error("n_samples must be >= 1")]
    NoSamples,
    #[error("operator changed dimensions during probing")]
    DimensionChange,
    #[error(transparent)]
    Op(#[from] OpError),
}

/// Sampling plan for [`estimate_lipschitz`].
///
/// Probe pairs are `x` and `x + epsilon*d` with `x, d ~ U[0,1]^N`.
/// `epsilon` sets the perturbation scale: 1.0 reproduces the raw
/// two-point sampler; the 0.5 default probes the operator at half-range
/// steps, which tracks the local constant the convergence analysis
/// actually uses while staying well clear of rounding noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub epsilon: f64,
    pub n_samples: usize,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            n_samples: 100,
            width: 64,
            height: 64,
            channels: 1,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_shape(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }
}

/// Empirical local Lipschitz constant with its sampling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimate {
    pub m_hat: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Sample index that attained the maximum ratio.
    pub argmax_ratio_seed_index: usize,
}

/// Uniform `U[0,1]` image from a dedicated per-sample stream, so the
/// draw for sample `i` never depends on how many samples run before it.
fn uniform_image<T: Scalar>(
    w: usize,
    h: usize,
    c: usize,
    seed: u64,
    stream: u64,
) -> Image<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let data = (0..w * h * c).map(|_| T::of_f64(rng.gen::<f64>())).collect();
    Image::new(w, h, c, data).expect("probe shape is valid")
}

/// Estimates `max ||f(x + eps*d) - f(x)|| / ||eps*d||` over `n_samples`
/// independent draws. Exactly `2 * n_samples` activations of `f`.
pub fn estimate_lipschitz<T: Scalar>(
    f: &dyn BlackBoxOperator<T>,
    cfg: &ProbeConfig,
) -> Result<LipschitzEstimate, ProbeError> {
    if cfg.n_samples == 0 {
        return Err(ProbeError::NoSamples);
    }
    if !(cfg.epsilon > 0.0) {
        return Err(ProbeError::BadEpsilon(cfg.epsilon));
    }
    let eps = T::of_f64(cfg.epsilon);
    let mut best = T::neg_infinity();
    let mut best_index = 0;
    for i in 0..cfg.n_samples {
        let x: Image<T> = uniform_image(cfg.width, cfg.height, cfg.channels, cfg.seed, 2 * i as u64);
        let d: Image<T> =
            uniform_image(cfg.width, cfg.height, cfg.channels, cfg.seed, 2 * i as u64 + 1);
        let step = x.with_data(
            x.data()
                .iter()
                .zip(d.data().iter())
                .map(|(&xv, &dv)| xv + eps * dv)
                .collect(),
        );
        let fx = f.evaluate(&x)?;
        let fstep = f.evaluate(&step)?;
        if !fx.same_shape(&x) || !fstep.same_shape(&x) {
            return Err(ProbeError::DimensionChange);
        }
        let ratio = fstep.l2_distance(&fx) / (eps * d.l2_norm());
        if ratio > best {
            best = ratio;
            best_index = i;
        }
    }
    Ok(LipschitzEstimate {
        m_hat: best.to_f64_lossy(),
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        width: cfg.width,
        height: cfg.height,
        channels: cfg.channels,
        argmax_ratio_seed_index: best_index,
    })
}

/// Finite-difference directional derivative `(f(x + eps*d) - f(x)) / eps`.
/// Exactly two activations.
pub fn directional_derivative<T: Scalar>(
    f: &dyn BlackBoxOperator<T>,
    x: &Image<T>,
    d: &Image<T>,
    epsilon: f64,
) -> Result<Image<T>, ProbeError> {
    if !(epsilon > 0.0) {
        return Err(ProbeError::BadEpsilon(epsilon));
    }
    if !x.same_shape(d) {
        return Err(ProbeError::ShapeMismatch);
    }
    let eps = T::of_f64(epsilon);
    let shifted = x.with_data(
        x.data()
            .iter()
            .zip(d.data().iter())
            .map(|(&xv, &dv)| xv + eps * dv)
            .collect(),
    );
    let fx = f.evaluate(x)?;
    let fs = f.evaluate(&shifted)?;
    Ok(fx.with_data(
        fs.data()
            .iter()
            .zip(fx.data().iter())
            .map(|(&a, &b)| (a - b) / eps)
            .collect(),
    ))
}

/// The `d = x` special case, `(f((1+eps)x) - f(x)) / eps`. Delegates to
/// [`directional_derivative`] so the two agree bitwise.
pub fn radial_derivative<T: Scalar>(
    f: &dyn BlackBoxOperator<T>,
    x: &Image<T>,
    epsilon: f64,
) -> Result<Image<T>, ProbeError> {
    directional_derivative(f, x, x, epsilon)
}

/// Max-abs response of the operator to the zero image of the given shape.
pub fn check_null_preservation<T: Scalar>(
    f: &dyn BlackBoxOperator<T>,
    width: usize,
    height: usize,
    channels: usize,
) -> Result<f64, ProbeError> {
    let zero = Image::<T>::zeros(width, height, channels);
    let out = f.evaluate(&zero)?;
    Ok(out.linf_norm().to_f64_lossy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{GaussianBlur, Identity, Scale, SigmoidTone};

    fn small_cfg() -> ProbeConfig {
        ProbeConfig::default().with_samples(25).with_shape(16, 16).with_seed(7)
    }

    #[test]
    fn identity_estimates_one() {
        let est = estimate_lipschitz::<f64>(&Identity::new(), &small_cfg()).unwrap();
        assert!((est.m_hat - 1.0).abs() < 1e-12, "m_hat = {}", est.m_hat);
    }

    #[test]
    fn scaling_homogeneity_is_exact_for_powers_of_two() {
        let cfg = small_cfg();
        let half = estimate_lipschitz::<f64>(&Scale::new(0.5).unwrap(), &cfg).unwrap();
        let ident = estimate_lipschitz::<f64>(&Identity::new(), &cfg).unwrap();
        assert_eq!(half.m_hat, 0.5 * ident.m_hat);
    }

    #[test]
    fn estimator_is_deterministic() {
        let cfg = small_cfg();
        let op = GaussianBlur::new(3, 1.0).unwrap();
        let a = estimate_lipschitz::<f64>(&op, &cfg).unwrap();
        let b = estimate_lipschitz::<f64>(&op, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn estimator_counts_two_activations_per_sample() {
        let cfg = small_cfg();
        let op = GaussianBlur::new(3, 1.0).unwrap();
        let _ = estimate_lipschitz::<f64>(&op, &cfg).unwrap();
        assert_eq!(
            BlackBoxOperator::<f64>::activations(&op),
            2 * cfg.n_samples as u64
        );
    }

    #[test]
    fn directional_derivative_exact_for_identity() {
        let x = Image::<f64>::filled(8, 8, 1, 0.4);
        let d = Image::<f64>::filled(8, 8, 1, 0.3);
        let out = directional_derivative::<f64>(&Identity::new(), &x, &d, 1e-2).unwrap();
        for &v in out.data() {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_matches_directional_bitwise() {
        let op = SigmoidTone::new(0.2).unwrap();
        let data: Vec<f64> = (0..64).map(|i| (i as f64) / 64.0).collect();
        let x = Image::gray(8, 8, data).unwrap();
        let a = radial_derivative::<f64>(&op, &x, 1e-2).unwrap();
        let b = directional_derivative::<f64>(&op, &x, &x, 1e-2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn radial_derivative_of_identity_returns_x() {
        let data: Vec<f64> = (0..64).map(|i| (i as f64) / 63.0).collect();
        let x = Image::gray(8, 8, data).unwrap();
        let out = radial_derivative::<f64>(&Identity::new(), &x, 1e-3).unwrap();
        for (&v, &xv) in out.data().iter().zip(x.data().iter()) {
            assert!((v - xv).abs() < 1e-9);
        }
    }

    #[test]
    fn null_preservation_probe() {
        let blur = GaussianBlur::new(3, 1.0).unwrap();
        assert_eq!(
            check_null_preservation::<f64>(&blur, 8, 8, 1).unwrap(),
            0.0
        );
        let sig = SigmoidTone::new(0.2).unwrap();
        assert!(check_null_preservation::<f64>(&sig, 8, 8, 1).unwrap() < 1e-15);

        // synthetic violator x -> x + 0.1
        struct Shift;
        impl BlackBoxOperator<f64> for Shift {
            fn evaluate(&self, img: &Image<f64>) -> Result<Image<f64>, OpError> {
                Ok(img.map(|v| v + 0.1))
            }
            fn label(&self) -> String {
                "shift".into()
            }
            fn activations(&self) -> u64 {
                0
            }
            fn reset_activations(&self) {}
        }
        let dev = check_null_preservation::<f64>(&Shift, 8, 8, 1).unwrap();
        assert!((dev - 0.1).abs() < 1e-15);
    }

    #[test]
    fn pointwise_square_derivative_first_order() {
        // f(x) = x^2 pointwise; analytic directional derivative 2*x*d
        struct Square;
        impl BlackBoxOperator<f64> for Square {
            fn evaluate(&self, img: &Image<f64>) -> Result<Image<f64>, OpError> {
                Ok(img.map(|v| v * v))
            }
            fn label(&self) -> String {
                "square".into()
            }
            fn activations(&self) -> u64 {
                0
            }
            fn reset_activations(&self) {}
        }
        let x = Image::<f64>::filled(4, 4, 1, 0.5);
        let d = Image::<f64>::filled(4, 4, 1, 1.0);
        // (x+eps)^2 - x^2 = 2x*eps + eps^2 -> derivative 2x + eps = 1 + eps
        let out = directional_derivative::<f64>(&Square, &x, &d, 1e-4).unwrap();
        for &v in out.data() {
            assert!((v - 1.0001).abs() < 1e-10, "{v}");
        }
        // halving eps halves the error against the analytic derivative
        let mut errs = Vec::new();
        for eps in [1e-2, 5e-3, 2.5e-3] {
            let out = directional_derivative::<f64>(&Square, &x, &d, eps).unwrap();
            errs.push((out.data()[0] - 1.0).abs());
        }
        assert!((errs[0] / errs[1] - 2.0).abs() < 0.01);
        assert!((errs[1] / errs[2] - 2.0).abs() < 0.01);
    }
}
