//! Image container, quality metrics, and noise injection.
//!
//! Samples are real-valued, row-major, channel-interleaved, with nominal
//! range `[0, 1]`. Solver iterates may leave that range; only file export
//! and the final rendition estimate clamp.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;

/// PSNR returned when the images compare equal (zero MSE).
pub const PSNR_SENTINEL_DB: f64 = 200.0;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("data length {got} does not match {width}x{height}x{channels}")]
    DataLength {
        width: usize,
        height: usize,
        channels: usize,
        got: usize,
    },
    #[error("channel count {0} is not supported (expected 1 or 3)")]
    BadChannels(usize),
    #[error("image dimensions differ: {0}x{1}x{2} vs {3}x{4}x{5}")]
    DimensionMismatch(usize, usize, usize, usize, usize, usize),
    #[error("image has zero pixels")]
    Empty,
}

/// A real-valued image; the universe every operator acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Scalar> Image<T> {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<T>,
    ) -> Result<Self, ImageError> {
        if channels != 1 && channels != 3 {
            return Err(ImageError::BadChannels(channels));
        }
        if width == 0 || height == 0 {
            return Err(ImageError::Empty);
        }
        if data.len() != width * height * channels {
            return Err(ImageError::DataLength {
                width,
                height,
                channels,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Grayscale image from row-major samples.
    pub fn gray(width: usize, height: usize, data: Vec<T>) -> Result<Self, ImageError> {
        Self::new(width, height, 1, data)
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, T::zero())
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        assert!(width > 0 && height > 0, "image must be non-empty");
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// (width, height, channels)
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: T) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// New image with the same shape and the given samples.
    pub fn with_data(&self, data: Vec<T>) -> Self {
        assert_eq!(data.len(), self.data.len());
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data,
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    /// Samples clamped to `[0, 1]`.
    pub fn clamp01(&self) -> Self {
        self.map(|v| v.max(T::zero()).min(T::one()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn l2_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn linf_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn l2_distance(&self, other: &Self) -> T {
        debug_assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| a * b)
            .sum()
    }

    /// Per-channel plane as a contiguous vector (used by per-channel filters).
    pub fn plane(&self, c: usize) -> Vec<T> {
        assert!(c < self.channels);
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    pub fn set_plane(&mut self, c: usize, plane: &[T]) {
        assert!(c < self.channels);
        assert_eq!(plane.len(), self.width * self.height);
        for (dst, &src) in self
            .data
            .iter_mut()
            .skip(c)
            .step_by(self.channels)
            .zip(plane.iter())
        {
            *dst = src;
        }
    }
}

/// Mean squared error over all samples (channels averaged together).
pub fn mse<T: Scalar>(a: &Image<T>, b: &Image<T>) -> Result<f64, ImageError> {
    if !a.same_shape(b) {
        return Err(ImageError::DimensionMismatch(
            a.width, a.height, a.channels, b.width, b.height, b.channels,
        ));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(&x, &y)| {
            let d = (x - y).to_f64_lossy();
            d * d
        })
        .sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio in dB with peak fixed at 1.0.
///
/// Identical images return [`PSNR_SENTINEL_DB`] instead of infinity.
pub fn psnr<T: Scalar>(a: &Image<T>, b: &Image<T>) -> Result<f64, ImageError> {
    let m = mse(a, b)?;
    if m == 0.0 {
        Ok(PSNR_SENTINEL_DB)
    } else {
        Ok(10.0 * (1.0 / m).log10())
    }
}

/// Additive Gaussian noise: sigma in sample units, deterministic per seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Self {
        assert!(sigma >= 0.0, "sigma must be non-negative");
        Self { sigma, seed }
    }
}

/// Adds i.i.d. zero-mean Gaussian noise. The result is NOT clamped;
/// clamping is the caller's choice (file export clamps anyway).
pub fn add_noise<T: Scalar>(img: &Image<T>, spec: &NoiseSpec) -> Image<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let n: f64 = standard_normal(&mut rng);
            v + T::of_f64(spec.sigma * n)
        })
        .collect();
    img.with_data(data)
}

// Box-Muller on the ChaCha stream: keeps the noise field identical across
// rand_distr versions and scalar types.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        if u1 > 0.0 {
            let u2: f64 = rng.gen();
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn px(v: f64) -> Image<f64> {
        Image::gray(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn mse_identity_is_zero() {
        let a = Image::<f64>::filled(4, 3, 1, 0.25);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mse_constant_difference() {
        let a = Image::<f64>::zeros(8, 8, 1);
        let b = Image::<f64>::filled(8, 8, 1, 0.5);
        assert_abs_diff_eq!(mse(&a, &b).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn mse_single_pixel() {
        assert_abs_diff_eq!(mse(&px(0.1), &px(0.4)).unwrap(), 0.09, epsilon = 1e-15);
    }

    #[test]
    fn mse_rejects_dimension_mismatch() {
        let a = Image::<f64>::zeros(4, 4, 1);
        let b = Image::<f64>::zeros(4, 5, 1);
        assert!(matches!(
            mse(&a, &b),
            Err(ImageError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn psnr_sentinel_and_values() {
        let a = Image::<f64>::filled(2, 2, 1, 0.7);
        assert_eq!(psnr(&a, &a).unwrap(), 200.0);

        // mse = 0.25 -> 10*log10(4) dB
        let b = Image::<f64>::zeros(8, 8, 1);
        let c = Image::<f64>::filled(8, 8, 1, 0.5);
        assert_abs_diff_eq!(psnr(&b, &c).unwrap(), 6.020599913279624, epsilon = 1e-9);

        // mse = 0.01 -> 20 dB
        let d = Image::<f64>::filled(8, 8, 1, 0.1);
        let e = Image::<f64>::zeros(8, 8, 1);
        assert_abs_diff_eq!(psnr(&d, &e).unwrap(), 20.0, epsilon = 1e-9);
    }

    #[test]
    fn psnr_symmetric_and_monotone() {
        let a = Image::<f64>::filled(4, 4, 1, 0.2);
        let b = Image::<f64>::filled(4, 4, 1, 0.5);
        let c = Image::<f64>::filled(4, 4, 1, 0.9);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        // larger difference => larger mse => smaller psnr
        assert!(psnr(&a, &c).unwrap() < psnr(&a, &b).unwrap());
    }

    #[test]
    fn noise_zero_sigma_is_identity() {
        let img = Image::<f64>::filled(16, 16, 1, 0.3);
        let out = add_noise(&img, &NoiseSpec::new(0.0, 7));
        assert_eq!(img, out);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let img = Image::<f64>::zeros(32, 32, 1);
        let a = add_noise(&img, &NoiseSpec::new(0.05, 42));
        let b = add_noise(&img, &NoiseSpec::new(0.05, 42));
        assert_eq!(a, b);
        let c = add_noise(&img, &NoiseSpec::new(0.05, 43));
        assert_ne!(a, c);
    }

    #[test]
    fn noise_empirical_std_at_512() {
        let img = Image::<f64>::zeros(512, 512, 1);
        let noisy = add_noise(&img, &NoiseSpec::new(0.05, 1));
        let n = noisy.len() as f64;
        let mean: f64 = noisy.data().iter().sum::<f64>() / n;
        let var: f64 = noisy.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        assert!((0.049..=0.051).contains(&std), "std = {std}");
    }

    #[test]
    fn noise_fields_decorrelated_across_seeds() {
        let img = Image::<f64>::zeros(512, 512, 1);
        let a = add_noise(&img, &NoiseSpec::new(1.0, 11));
        let b = add_noise(&img, &NoiseSpec::new(1.0, 12));
        let n = a.len() as f64;
        let ma: f64 = a.data().iter().sum::<f64>() / n;
        let mb: f64 = b.data().iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (&x, &y) in a.data().iter().zip(b.data().iter()) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        let rho = cov / (va.sqrt() * vb.sqrt());
        assert!(rho.abs() < 0.01, "rho = {rho}");
    }
}
