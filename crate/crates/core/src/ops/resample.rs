//! Resampling round trip: downscale by 1/q, then upscale back by q.

use crate::image::Image;
use crate::scalar::Scalar;

use super::{BlackBoxOperator, OpCore, OpError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMethod {
    Bilinear,
    Bicubic,
}

impl ResampleMethod {
    pub fn name(self) -> &'static str {
        match self {
            ResampleMethod::Bilinear => "bilinear",
            ResampleMethod::Bicubic => "bicubic",
        }
    }

    fn support(self) -> f64 {
        match self {
            ResampleMethod::Bilinear => 1.0,
            ResampleMethod::Bicubic => 2.0,
        }
    }

    fn kernel(self, t: f64) -> f64 {
        match self {
            ResampleMethod::Bilinear => (1.0 - t.abs()).max(0.0),
            ResampleMethod::Bicubic => cubic_keys(t),
        }
    }
}

// Keys cubic with a = -0.5 (the MATLAB/Catmull-Rom convention).
fn cubic_keys(t: f64) -> f64 {
    let a = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (a + 2.0) * t.powi(3) - (a + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        a * t.powi(3) - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a
    } else {
        0.0
    }
}

/// Precomputed 1-D resampling row: source indices and normalized weights
/// for one output coordinate. The kernel widens by the scale ratio when
/// downscaling (antialiasing); boundaries replicate.
fn resample_rows(n_in: usize, n_out: usize, method: ResampleMethod) -> Vec<(Vec<usize>, Vec<f64>)> {
    let ratio = n_in as f64 / n_out as f64;
    let scale = ratio.max(1.0);
    let support = method.support() * scale;
    (0..n_out)
        .map(|i| {
            let center = (i as f64 + 0.5) * ratio - 0.5;
            let lo = (center - support).ceil() as isize;
            let hi = (center + support).floor() as isize;
            let mut idx = Vec::new();
            let mut wts = Vec::new();
            for j in lo..=hi {
                let wv = method.kernel((j as f64 - center) / scale);
                if wv != 0.0 {
                    idx.push(j.clamp(0, n_in as isize - 1) as usize);
                    wts.push(wv);
                }
            }
            let sum: f64 = wts.iter().sum();
            for w in &mut wts {
                *w /= sum;
            }
            (idx, wts)
        })
        .collect()
}

fn resample_axis<T: Scalar>(
    src: &[T],
    n_in: usize,
    n_other: usize,
    n_out: usize,
    method: ResampleMethod,
    along_rows: bool,
) -> Vec<T> {
    let rows = resample_rows(n_in, n_out, method);
    let mut out = vec![T::zero(); n_out * n_other];
    for (i, (idx, wts)) in rows.iter().enumerate() {
        for k in 0..n_other {
            let mut acc = T::zero();
            for (&j, &wv) in idx.iter().zip(wts.iter()) {
                let v = if along_rows {
                    src[k * n_in + j]
                } else {
                    src[j * n_other + k]
                };
                acc += T::of_f64(wv) * v;
            }
            if along_rows {
                out[k * n_out + i] = acc;
            } else {
                out[i * n_other + k] = acc;
            }
        }
    }
    out
}

/// `resize(resize(x, 1/q), q)`: loses high frequencies, dimensions kept.
pub struct ResampleCycle {
    q: usize,
    method: ResampleMethod,
    core: OpCore,
}

impl ResampleCycle {
    pub fn new(q: usize, method: ResampleMethod) -> Result<Self, OpError> {
        if q < 2 {
            return Err(OpError::BadParameter(format!(
                "resample factor must be >= 2, got {q}"
            )));
        }
        Ok(Self {
            q,
            method,
            core: OpCore::new(format!("resample:q={q},method={}", method.name())),
        })
    }

    fn resize_plane<T: Scalar>(
        &self,
        plane: &[T],
        w: usize,
        h: usize,
        w2: usize,
        h2: usize,
    ) -> Vec<T> {
        let cols = resample_axis(plane, w, h, w2, self.method, true);
        resample_axis(&cols, h, w2, h2, self.method, false)
    }
}

impl<T: Scalar> BlackBoxOperator<T> for ResampleCycle {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        let (w, h, ch) = img.shape();
        if w % self.q != 0 || h % self.q != 0 {
            return Err(OpError::NotDivisible {
                width: w,
                height: h,
                q: self.q,
            });
        }
        let (sw, sh) = (w / self.q, h / self.q);
        let mut out = img.clone();
        for c in 0..ch {
            let plane = img.plane(c);
            let small = self.resize_plane(&plane, w, h, sw, sh);
            let back = self.resize_plane(&small, sw, sh, w, h);
            out.set_plane(c, &back);
        }
        Ok(out)
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
