//! Median filtering with rectangular footprints.

use crate::image::Image;
use crate::scalar::Scalar;

use super::kernel::{clamp_index, tap_positions};
use super::{BlackBoxOperator, OpCore, OpError};

/// Order-statistic filter over a `wh x ww` replicate-padded window.
/// Even window extents anchor top-left of center; even tap counts take
/// the mean of the two middle order statistics.
pub struct MedianFilter {
    wh: usize,
    ww: usize,
    core: OpCore,
}

impl MedianFilter {
    pub fn new(wh: usize, ww: usize) -> Result<Self, OpError> {
        if wh == 0 || ww == 0 {
            return Err(OpError::BadParameter(
                "median footprint must be >= 1 in both dimensions".into(),
            ));
        }
        Ok(Self {
            wh,
            ww,
            core: OpCore::new(format!("median:h={wh},w={ww}")),
        })
    }
}

impl<T: Scalar> BlackBoxOperator<T> for MedianFilter {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        let (w, h, ch) = img.shape();
        if self.wh > h || self.ww > w {
            return Err(OpError::KernelExceedsImage {
                size: self.wh.max(self.ww),
                dim: h.min(w),
            });
        }
        let oy = tap_positions(self.wh);
        let ox = tap_positions(self.ww);
        let n = self.wh * self.ww;
        let half = T::of_f64(0.5);
        let src = img.data();
        let mut window = vec![T::zero(); n];
        let mut out = vec![T::zero(); src.len()];
        for y in 0..h {
            for x in 0..w {
                for c in 0..ch {
                    let mut i = 0;
                    for &dy in &oy {
                        let yy = clamp_index(y, dy, h);
                        for &dx in &ox {
                            let xx = clamp_index(x, dx, w);
                            window[i] = src[(yy * w + xx) * ch + c];
                            i += 1;
                        }
                    }
                    window.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite samples"));
                    let m = if n % 2 == 1 {
                        window[n / 2]
                    } else {
                        half * (window[n / 2 - 1] + window[n / 2])
                    };
                    out[(y * w + x) * ch + c] = m;
                }
            }
        }
        Ok(img.with_data(out))
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
