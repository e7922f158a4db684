//! Classical bilateral filter.

use crate::image::Image;
use crate::scalar::Scalar;

use super::{BlackBoxOperator, OpCore, OpError};

/// Edge-preserving smoother: each output sample is a normalized sum of
/// neighbors weighted by spatial distance (`sigma_s`) and per-channel
/// range distance (`sigma_r`). The spatial window is truncated at radius
/// `ceil(3 * sigma_s)`; edges replicate.
pub struct Bilateral {
    sigma_s: f64,
    sigma_r: f64,
    core: OpCore,
}

impl Bilateral {
    pub fn new(sigma_s: f64, sigma_r: f64) -> Result<Self, OpError> {
        if !(sigma_s > 0.0) || !(sigma_r > 0.0) {
            return Err(OpError::BadParameter(format!(
                "bilateral sigmas must be > 0, got ss={sigma_s}, sr={sigma_r}"
            )));
        }
        Ok(Self {
            sigma_s,
            sigma_r,
            core: OpCore::new(format!("bilat:ss={sigma_s},sr={sigma_r}")),
        })
    }

    pub fn radius(&self) -> usize {
        (3.0 * self.sigma_s).ceil() as usize
    }
}

impl<T: Scalar> BlackBoxOperator<T> for Bilateral {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        let (w, h, ch) = img.shape();
        let r = self.radius() as isize;
        // spatial weights are data-independent; hoist them out of the pixel loop
        let inv2sr = T::of_f64(1.0 / (2.0 * self.sigma_r * self.sigma_r));
        let inv2ss = 1.0 / (2.0 * self.sigma_s * self.sigma_s);
        let side = (2 * r + 1) as usize;
        let mut spatial = Vec::with_capacity(side * side);
        for dy in -r..=r {
            for dx in -r..=r {
                spatial.push(T::of_f64((-((dy * dy + dx * dx) as f64) * inv2ss).exp()));
            }
        }
        let src = img.data();
        let mut out = vec![T::zero(); src.len()];
        for y in 0..h as isize {
            for x in 0..w as isize {
                for c in 0..ch {
                    let center = src[((y as usize) * w + x as usize) * ch + c];
                    let mut num = T::zero();
                    let mut den = T::zero();
                    let mut si = 0;
                    for dy in -r..=r {
                        let yy = (y + dy).clamp(0, h as isize - 1) as usize;
                        let row = &src[yy * w * ch..(yy + 1) * w * ch];
                        for dx in -r..=r {
                            let xx = (x + dx).clamp(0, w as isize - 1) as usize;
                            let v = row[xx * ch + c];
                            let diff = v - center;
                            let wt = spatial[si] * (-(diff * diff) * inv2sr).exp();
                            num += wt * v;
                            den += wt;
                            si += 1;
                        }
                    }
                    out[((y as usize) * w + x as usize) * ch + c] = num / den;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::GaussianBlur;

    #[test]
    fn preserves_constants() {
        let img = Image::<f64>::filled(16, 16, 1, 0.37);
        let op = Bilateral::new(2.0, 1.5).unwrap();
        let out = op.evaluate(&img).unwrap();
        for &v in out.data() {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_range_sigma_degenerates_to_gaussian() {
        // range kernel -> 1, so the filter becomes the pure spatial
        // gaussian over the same truncated window
        let data: Vec<f64> = (0..256).map(|i| ((i * 37) % 91) as f64 / 91.0).collect();
        let img = Image::gray(16, 16, data).unwrap();
        let bil = Bilateral::new(2.0, 1e6).unwrap();
        let r = bil.radius();
        let gauss = GaussianBlur::new(2 * r + 1, 2.0).unwrap();
        let a = bil.evaluate(&img).unwrap();
        let b = gauss.evaluate(&img).unwrap();
        for (&x, &y) in a.data().iter().zip(b.data().iter()) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Bilateral::new(0.0, 1.0).is_err());
        assert!(Bilateral::new(1.0, -2.0).is_err());
    }

    #[test]
    fn smooths_an_edge() {
        let mut img = Image::<f64>::zeros(16, 16, 1);
        for y in 0..16 {
            for x in 8..16 {
                img.set(x, y, 0, 1.0);
            }
        }
        let op = Bilateral::new(2.0, 1.5).unwrap();
        let out = op.evaluate(&img).unwrap();
        // large sigma_r smooths across the edge
        assert!(out.get(7, 8, 0) > 0.05);
        assert!(out.get(8, 8, 0) < 0.95);
    }
}
