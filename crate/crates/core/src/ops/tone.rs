//! Pointwise tone operators: gamma curves, the sigmoid brightness
//! rescaler, and a posterizing quantizer.
//!
//! Negative samples are clamped to 0 before mapping (real powers need a
//! non-negative domain). Samples above 1 follow the analytic curve, so
//! the maps stay smooth and invertible on the `[0, 2]` probe range the
//! Lipschitz estimator feeds them.

use crate::image::Image;
use crate::scalar::Scalar;

use super::{BlackBoxOperator, OpCore, OpError};

/// Pointwise power map `x -> x^g`.
pub struct GammaMap {
    g: f64,
    core: OpCore,
}

impl GammaMap {
    pub fn new(g: f64) -> Result<Self, OpError> {
        if !(g > 0.0) {
            return Err(OpError::BadParameter(format!(
                "gamma exponent must be > 0, got {g}"
            )));
        }
        Ok(Self {
            g,
            core: OpCore::new(format!("gamma:g={g}")),
        })
    }
}

impl<T: Scalar> BlackBoxOperator<T> for GammaMap {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        let g = T::of_f64(self.g);
        Ok(img.map(|v| v.max(T::zero()).powf(g)))
    }

    fn label(&self) -> String {
        self.core.label()
    }

    fn activations(&self) -> u64 {
        self.core.activations()
    }

    fn reset_activations(&self) {
        self.core.reset()
    }
}

/// S-shaped brightness rescaler that fixes 0, 0.5, and 1:
/// `f(x) = [atan(1/(2a)) + atan((x - 0.5)/a)] / (2 atan(1/(2a)))`.
pub struct SigmoidTone {
    a: f64,
    core: OpCore,
}

impl SigmoidTone {
    pub fn new(a: f64) -> Result<Self, OpError> {
        if !(a > 0.0) {
            return Err(OpError::BadParameter(format!(
                "sigmoid slope parameter must be > 0, got {a}"
            )));
        }
        Ok(Self {
            a,
            core: OpCore::new(format!("sigmoid:a={a}")),
        })
    }
}

impl<T: Scalar> BlackBoxOperator<T> for SigmoidTone {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        let a = T::of_f64(self.a);
        let half = T::of_f64(0.5);
        let edge = (T::one() / (a + a)).atan();
        let scale = T::one() / (edge + edge);
        Ok(img.map(|v| {
            let x = v.max(T::zero());
            (edge + ((x - half) / a).atan()) * scale
        }))
    }

    fn label(&self) -> String {
        self.core.label()
    }

    fn activations(&self) -> u64 {
        self.core.activations()
    }

    fn reset_activations(&self) {
        self.core.reset()
    }
}

/// Quantizes to `levels` uniform brightness levels; the cartoon-style
/// tone map used by the failure-case experiments.
pub struct Posterize {
    levels: u32,
    core: OpCore,
}

impl Posterize {
    pub fn new(levels: u32) -> Result<Self, OpError> {
        if levels < 2 {
            return Err(OpError::BadParameter(format!(
                "posterize needs at least 2 levels, got {levels}"
            )));
        }
        Ok(Self {
            levels,
            core: OpCore::new(format!("posterize:levels={levels}")),
        })
    }
}

impl<T: Scalar> BlackBoxOperator<T> for Posterize {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        let steps = T::of_f64((self.levels - 1) as f64);
        Ok(img.map(|v| {
            let x = v.max(T::zero()).min(T::one());
            (x * steps).round() / steps
        }))
    }

    fn label(&self) -> String {
        self.core.label()
    }

    fn activations(&self) -> u64 {
        self.core.activations()
    }

    fn reset_activations(&self) {
        self.core.reset()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray1(v: f64) -> Image<f64> {
        Image::gray(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn gamma_one_is_identity() {
        let op = GammaMap::new(1.0).unwrap();
        let img = Image::gray(2, 1, vec![0.2_f64, 0.9]).unwrap();
        let out = op.evaluate(&img).unwrap();
        for (&a, &b) in img.data().iter().zip(out.data().iter()) {
            assert!((a - b).abs() < 1e-15_f64);
        }
    }

    #[test]
    fn gamma_fixes_endpoints() {
        for g in [0.3, 0.65, 1.0, 2.2] {
            let op = GammaMap::new(g).unwrap();
            assert_eq!(op.evaluate(&gray1(0.0)).unwrap().data()[0], 0.0);
            assert_eq!(op.evaluate(&gray1(1.0)).unwrap().data()[0], 1.0);
        }
    }

    #[test]
    fn gamma_clamps_negative_samples() {
        let op = GammaMap::new(0.65).unwrap();
        assert_eq!(op.evaluate(&gray1(-0.5)).unwrap().data()[0], 0.0);
    }

    #[test]
    fn sigmoid_fixes_midpoint_and_endpoints() {
        for a in [0.1, 0.2, 0.25, 0.5] {
            let op = SigmoidTone::new(a).unwrap();
            assert!((op.evaluate(&gray1(0.5)).unwrap().data()[0] - 0.5).abs() < 1e-15);
            assert!(op.evaluate(&gray1(0.0)).unwrap().data()[0].abs() < 1e-15);
            assert!((op.evaluate(&gray1(1.0)).unwrap().data()[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_expands_midtones() {
        let op = SigmoidTone::new(0.2).unwrap();
        // steep at the center: 0.25 maps well below itself
        let v = op.evaluate(&gray1(0.25)).unwrap().data()[0];
        assert!(v < 0.25 - 0.05, "got {v}");
    }

    #[test]
    fn posterize_quantizes_and_fixes_endpoints() {
        let op = Posterize::new(5).unwrap();
        assert_eq!(op.evaluate(&gray1(0.0)).unwrap().data()[0], 0.0);
        assert_eq!(op.evaluate(&gray1(1.0)).unwrap().data()[0], 1.0);
        assert_eq!(op.evaluate(&gray1(0.3)).unwrap().data()[0], 0.25);
        assert_eq!(op.evaluate(&gray1(0.35)).unwrap().data()[0], 0.25);
    }
}
