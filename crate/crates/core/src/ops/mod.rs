//! The operator zoo: every distortion family behind one evaluation-only
//! interface.
//!
//! Operators are immutable after construction and safe to evaluate from
//! multiple threads; the activation counter is the only mutable state.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::image::Image;
use crate::scalar::Scalar;

mod bilateral;
mod dctq;
mod kernel;
mod median;
mod resample;
mod spec;
mod tone;

pub use bilateral::Bilateral;
pub use dctq::DctQuantize;
pub use kernel::{DiskBlur, GaussianBlur};
pub use median::MedianFilter;
pub use resample::{ResampleCycle, ResampleMethod};
pub use spec::{OperatorSpec, SpecParseError};
pub use tone::{GammaMap, Posterize, SigmoidTone};

#[derive(Debug, Error)]
pub enum OpError {
    #[error("kernel size {size} exceeds image dimension {dim}")]
    KernelExceedsImage { size: usize, dim: usize },
    #[error("image dimensions {width}x{height} not divisible by {q}")]
    NotDivisible {
        width: usize,
        height: usize,
        q: usize,
    },
    #[error("operator expects {expected} samples, image has {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("composition must contain at least one operator")]
    EmptyComposition,
}

/// Evaluation-only contract for a deterministic image-to-image map.
///
/// `evaluate` preserves dimensions and counts one activation on the
/// operator it is called on. Inputs may lie outside `[0, 1]` (Lipschitz
/// probes use `[0, 2]`); pointwise tone maps clamp per their own
/// contracts.
pub trait BlackBoxOperator<T: Scalar>: Send + Sync {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError>;

    fn label(&self) -> String;

    /// Monotone count of evaluations performed (composites report the
    /// sum over their children).
    fn activations(&self) -> u64;

    fn reset_activations(&self);
}

/// Label + activation counter shared by the leaf operators.
#[derive(Debug)]
pub struct OpCore {
    label: String,
    activations: AtomicU64,
}

impl OpCore {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            activations: AtomicU64::new(0),
        }
    }

    #[inline]
    pub fn count(&self) {
        self.activations.fetch_add(1, Ordering::Relaxed);
    }

    pub fn label(&self) -> String {
        self.label.clone()
    }

    pub fn activations(&self) -> u64 {
        self.activations.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.activations.store(0, Ordering::Relaxed);
    }
}

/// The do-nothing operator; useful as a baseline and in tests.
pub struct Identity {
    core: OpCore,
}

impl Identity {
    pub fn new() -> Self {
        Self {
            core: OpCore::new("ident"),
        }
    }
}

impl Default for Identity {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> BlackBoxOperator<T> for Identity {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        Ok(img.clone())
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

/// Pointwise scaling `x -> c*x`; exact homogeneity makes it a probe oracle.
pub struct Scale {
    c: f64,
    core: OpCore,
}

impl Scale {
    pub fn new(c: f64) -> Result<Self, OpError> {
        if !c.is_finite() {
            return Err(OpError::BadParameter(format!("scale c={c} not finite")));
        }
        Ok(Self {
            c,
            core: OpCore::new(format!("scale:c={c}")),
        })
    }
}

impl<T: Scalar> BlackBoxOperator<T> for Scale {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        let c = T::of_f64(self.c);
        Ok(img.map(|v| c * v))
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

/// Adaptive sharpening `x + alpha * (x - base(x))`.
pub struct UnsharpMask<T: Scalar> {
    base: Box<dyn BlackBoxOperator<T>>,
    alpha: f64,
    core: OpCore,
}

impl<T: Scalar> UnsharpMask<T> {
    pub fn new(base: Box<dyn BlackBoxOperator<T>>, alpha: f64) -> Result<Self, OpError> {
        if !alpha.is_finite() {
            return Err(OpError::BadParameter(format!("alpha={alpha} not finite")));
        }
        let label = format!("unsharp:base=({}),alpha={}", base.label(), alpha);
        Ok(Self {
            base,
            alpha,
            core: OpCore::new(label),
        })
    }
}

impl<T: Scalar> BlackBoxOperator<T> for UnsharpMask<T> {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        let smoothed = self.base.evaluate(img)?;
        let a = T::of_f64(self.alpha);
        let data = img
            .data()
            .iter()
            .zip(smoothed.data().iter())
            .map(|(&x, &s)| x + a * (x - s))
            .collect();
        Ok(img.with_data(data))
    }

    fn label(&self) -> String {
        self.core.label()
    }

    fn activations(&self) -> u64 {
        self.core.activations()
    }

    fn reset_activations(&self) {
        self.core.reset();
        self.base.reset_activations();
    }
}

/// Left-to-right composition of child operators. Its activation count
/// is the sum of the children's counts.
pub struct Compose<T: Scalar> {
    children: Vec<Box<dyn BlackBoxOperator<T>>>,
}

impl<T: Scalar> Compose<T> {
    pub fn new(children: Vec<Box<dyn BlackBoxOperator<T>>>) -> Result<Self, OpError> {
        if children.is_empty() {
            return Err(OpError::EmptyComposition);
        }
        Ok(Self { children })
    }
}

impl<T: Scalar> BlackBoxOperator<T> for Compose<T> {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        let mut out = self.children[0].evaluate(img)?;
        for child in &self.children[1..] {
            out = child.evaluate(&out)?;
        }
        Ok(out)
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self.children.iter().map(|c| c.label()).collect();
        format!("compose:[{}]", parts.join(";"))
    }

    fn activations(&self) -> u64 {
        self.children.iter().map(|c| c.activations()).sum()
    }

    fn reset_activations(&self) {
        for c in &self.children {
            c.reset_activations();
        }
    }
}
