//! Linear convolution kernels (Gaussian and disk PSFs) with replicate
//! edge padding.
//!
//! Tap positions are integers; kernel weights are sampled at offsets
//! measured from the kernel centroid, so even sizes use half-integer
//! offsets and anchor the extra tap on the bottom/right.

use crate::image::Image;
use crate::scalar::Scalar;

use super::{BlackBoxOperator, OpCore, OpError};

/// Integer tap positions for a window of `size` taps: `j - floor((size-1)/2)`.
/// Odd sizes are symmetric; even sizes anchor top-left of center.
pub(crate) fn tap_positions(size: usize) -> Vec<isize> {
    let lo = (size as isize - 1) / 2;
    (0..size as isize).map(|j| j - lo).collect()
}

/// Centroid-relative offsets (half-integers for even sizes).
fn centroid_offsets(size: usize) -> Vec<f64> {
    (0..size).map(|j| j as f64 - (size as f64 - 1.0) / 2.0).collect()
}

/// A dense 2-D stencil: weight plus integer (dy, dx) position.
pub(crate) struct Stencil<T> {
    pub taps: Vec<(T, isize, isize)>,
    pub radius_y: usize,
    pub radius_x: usize,
}

impl<T: Scalar> Stencil<T> {
    fn from_weights(weights: Vec<(f64, isize, isize)>) -> Self {
        let sum: f64 = weights.iter().map(|w| w.0).sum();
        let taps: Vec<(T, isize, isize)> = weights
            .into_iter()
            .map(|(w, dy, dx)| (T::of_f64(w / sum), dy, dx))
            .collect();
        let radius_y = taps.iter().map(|t| t.1.unsigned_abs()).max().unwrap_or(0);
        let radius_x = taps.iter().map(|t| t.2.unsigned_abs()).max().unwrap_or(0);
        Self {
            taps,
            radius_y,
            radius_x,
        }
    }

    pub fn gaussian(size: usize, sigma: f64) -> Self {
        let offs = centroid_offsets(size);
        let pos = tap_positions(size);
        let inv = 1.0 / (2.0 * sigma * sigma);
        let mut weights = Vec::with_capacity(size * size);
        for (iy, &oy) in offs.iter().enumerate() {
            for (ix, &ox) in offs.iter().enumerate() {
                weights.push(((-(oy * oy + ox * ox) * inv).exp(), pos[iy], pos[ix]));
            }
        }
        Self::from_weights(weights)
    }

    /// Normalized indicator of a disk: a cell belongs iff its center lies
    /// within radius `diameter / 2`.
    pub fn disk(diameter: usize) -> Self {
        let offs = centroid_offsets(diameter);
        let pos = tap_positions(diameter);
        let r2 = (diameter as f64 / 2.0).powi(2);
        let mut weights = Vec::new();
        for (iy, &oy) in offs.iter().enumerate() {
            for (ix, &ox) in offs.iter().enumerate() {
                if oy * oy + ox * ox <= r2 {
                    weights.push((1.0, pos[iy], pos[ix]));
                }
            }
        }
        Self::from_weights(weights)
    }
}

/// Replicate-padded index: clamps `i + d` to `[0, n)`.
#[inline]
pub(crate) fn clamp_index(i: usize, d: isize, n: usize) -> usize {
    let j = i as isize + d;
    j.clamp(0, n as isize - 1) as usize
}

/// Dense 2-D correlation with replicate padding, applied per channel.
pub(crate) fn apply_stencil<T: Scalar>(img: &Image<T>, st: &Stencil<T>) -> Image<T> {
    let (w, h, ch) = img.shape();
    let src = img.data();
    let mut out = vec![T::zero(); src.len()];
    let interior_x0 = st.radius_x;
    let interior_x1 = w.saturating_sub(st.radius_x);
    for y in 0..h {
        let border_row = y < st.radius_y || y + st.radius_y >= h;
        for c in 0..ch {
            // interior: no clamping needed
            if !border_row && interior_x0 < interior_x1 {
                for x in interior_x0..interior_x1 {
                    let mut acc = T::zero();
                    for &(wt, dy, dx) in &st.taps {
                        let yy = (y as isize + dy) as usize;
                        let xx = (x as isize + dx) as usize;
                        acc += wt * src[(yy * w + xx) * ch + c];
                    }
                    out[(y * w + x) * ch + c] = acc;
                }
            }
            // border columns (and whole border rows)
            let cols: Box<dyn Iterator<Item = usize>> = if border_row {
                Box::new(0..w)
            } else {
                Box::new((0..interior_x0).chain(interior_x1..w))
            };
            for x in cols {
                let mut acc = T::zero();
                for &(wt, dy, dx) in &st.taps {
                    let yy = clamp_index(y, dy, h);
                    let xx = clamp_index(x, dx, w);
                    acc += wt * src[(yy * w + xx) * ch + c];
                }
                out[(y * w + x) * ch + c] = acc;
            }
        }
    }
    img.with_data(out)
}

fn check_fits(size: usize, img_w: usize, img_h: usize) -> Result<(), OpError> {
    let dim = img_w.min(img_h);
    if size > dim {
        Err(OpError::KernelExceedsImage { size, dim })
    } else {
        Ok(())
    }
}

/// Gaussian blur with a `size x size` sampled kernel, sum normalized to 1.
pub struct GaussianBlur {
    size: usize,
    sigma: f64,
    core: OpCore,
}

impl GaussianBlur {
    pub fn new(size: usize, sigma: f64) -> Result<Self, OpError> {
        if size == 0 {
            return Err(OpError::BadParameter("gaussian size must be >= 1".into()));
        }
        if !(sigma > 0.0) {
            return Err(OpError::BadParameter(format!(
                "gaussian sigma must be > 0, got {sigma}"
            )));
        }
        Ok(Self {
            size,
            sigma,
            core: OpCore::new(format!("gauss:size={size},sigma={sigma}")),
        })
    }
}

impl<T: Scalar> BlackBoxOperator<T> for GaussianBlur {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        check_fits(self.size, img.width(), img.height())?;
        Ok(apply_stencil(img, &Stencil::gaussian(self.size, self.sigma)))
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

/// Bokeh-style blur: normalized disk indicator PSF.
pub struct DiskBlur {
    diameter: usize,
    core: OpCore,
}

impl DiskBlur {
    pub fn new(diameter: usize) -> Result<Self, OpError> {
        if diameter == 0 {
            return Err(OpError::BadParameter("disk diameter must be >= 1".into()));
        }
        Ok(Self {
            diameter,
            core: OpCore::new(format!("disk:d={diameter}")),
        })
    }
}

impl<T: Scalar> BlackBoxOperator<T> for DiskBlur {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        check_fits(self.diameter, img.width(), img.height())?;
        Ok(apply_stencil(img, &Stencil::disk(self.diameter)))
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

    #[test]
    fn gaussian_preserves_constants() {
        let img = Image::<f64>::filled(16, 16, 1, 0.42);
        let op = GaussianBlur::new(5, 1.0).unwrap();
        let out = op.evaluate(&img).unwrap();
        for &v in out.data() {
            assert!((v - 0.42).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_impulse_matches_kernel_formula() {
        // centered unit impulse through a 3x3 sigma=1 kernel reproduces the
        // normalized stencil, computed independently from the formula
        let mut img = Image::<f64>::zeros(9, 9, 1);
        img.set(4, 4, 0, 1.0);
        let op = GaussianBlur::new(3, 1.0).unwrap();
        let out = op.evaluate(&img).unwrap();

        let mut expected = [[0.0f64; 3]; 3];
        let mut sum = 0.0;
        for (iy, oy) in (-1..=1).enumerate() {
            for (ix, ox) in (-1..=1).enumerate() {
                let w = (-((oy * oy + ox * ox) as f64) / 2.0).exp();
                expected[iy][ix] = w;
                sum += w;
            }
        }
        for (dy, row) in expected.iter().enumerate() {
            for (dx, &w) in row.iter().enumerate() {
                let got = out.get(3 + dx, 3 + dy, 0);
                assert!((got - w / sum).abs() < 1e-14, "at {dx},{dy}");
            }
        }
    }

    #[test]
    fn even_kernel_size_two_is_a_box() {
        // size-2 centroid sampling puts all four taps at distance
        // sqrt(0.5), so the normalized kernel is exactly a 2x2 box
        let st = Stencil::<f64>::gaussian(2, 1.0);
        assert_eq!(st.taps.len(), 4);
        for &(w, dy, dx) in &st.taps {
            assert!((w - 0.25).abs() < 1e-15);
            assert!(dy == 0 || dy == 1);
            assert!(dx == 0 || dx == 1);
        }
    }

    #[test]
    fn disk_diameter_one_is_identity() {
        let data: Vec<f64> = (0..64).map(|i| (i % 7) as f64 / 7.0).collect();
        let img = Image::gray(8, 8, data).unwrap();
        let op = DiskBlur::new(1).unwrap();
        let out = op.evaluate(&img).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn disk_preserves_constants() {
        let img = Image::<f64>::filled(16, 16, 1, 0.31);
        let op = DiskBlur::new(5).unwrap();
        let out = op.evaluate(&img).unwrap();
        for &v in out.data() {
            assert!((v - 0.31).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_5_has_21_taps() {
        // diameter-5 raster: every center except the four corners lies
        // within radius 2.5 (corner distance sqrt(8) > 2.5)
        let st = Stencil::<f64>::disk(5);
        assert_eq!(st.taps.len(), 21);
    }

    #[test]
    fn kernel_larger_than_image_errors() {
        let img = Image::<f64>::zeros(4, 4, 1);
        let op = GaussianBlur::new(5, 1.0).unwrap();
        assert!(matches!(
            op.evaluate(&img),
            Err(OpError::KernelExceedsImage { .. })
        ));
    }

    #[test]
    fn color_channels_filter_independently() {
        let mut img = Image::<f64>::zeros(8, 8, 3);
        img.set(4, 4, 1, 1.0); // impulse only in channel 1
        let op = GaussianBlur::new(3, 1.0).unwrap();
        let out = op.evaluate(&img).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(out.get(x, y, 0), 0.0);
                assert_eq!(out.get(x, y, 2), 0.0);
            }
        }
        assert!(out.get(4, 4, 1) > 0.0);
    }
}
