//! Block-DCT coefficient quantization, the transform-coding stand-in.

use crate::image::Image;
use crate::scalar::Scalar;

use super::{BlackBoxOperator, OpCore, OpError};

const BLOCK: usize = 8;

/// Per 8x8 block: orthonormal 2-D DCT, uniform quantization of the
/// coefficients with step `1/q`, inverse DCT.
pub struct DctQuantize {
    q: f64,
    core: OpCore,
}

impl DctQuantize {
    pub fn new(q: f64) -> Result<Self, OpError> {
        if !(q > 0.0) {
            return Err(OpError::BadParameter(format!(
                "dct quantizer q must be > 0, got {q}"
            )));
        }
        Ok(Self {
            q,
            core: OpCore::new(format!("dctq:q={q}")),
        })
    }
}

/// Orthonormal DCT-II basis matrix for the 8-point transform.
fn dct_basis<T: Scalar>() -> [[T; BLOCK]; BLOCK] {
    let mut m = [[T::zero(); BLOCK]; BLOCK];
    let n = BLOCK as f64;
    for (k, row) in m.iter_mut().enumerate() {
        let scale = if k == 0 {
            (1.0 / n).sqrt()
        } else {
            (2.0 / n).sqrt()
        };
        for (i, cell) in row.iter_mut().enumerate() {
            let angle = std::f64::consts::PI * (i as f64 + 0.5) * k as f64 / n;
            *cell = T::of_f64(scale * angle.cos());
        }
    }
    m
}

impl<T: Scalar> BlackBoxOperator<T> for DctQuantize {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        let (w, h, ch) = img.shape();
        if w % BLOCK != 0 || h % BLOCK != 0 {
            return Err(OpError::NotDivisible {
                width: w,
                height: h,
                q: BLOCK,
            });
        }
        let basis = dct_basis::<T>();
        let step = T::of_f64(1.0 / self.q);
        let src = img.data();
        let mut out = vec![T::zero(); src.len()];
        let mut block = [[T::zero(); BLOCK]; BLOCK];
        let mut tmp = [[T::zero(); BLOCK]; BLOCK];
        for c in 0..ch {
            for by in (0..h).step_by(BLOCK) {
                for bx in (0..w).step_by(BLOCK) {
                    for (r, row) in block.iter_mut().enumerate() {
                        for (s, cell) in row.iter_mut().enumerate() {
                            *cell = src[((by + r) * w + bx + s) * ch + c];
                        }
                    }
                    // C * B * C^T, quantize, then C^T * B * C
                    mat_bct(&basis, &block, &mut tmp, false);
                    mat_abt(&basis, &tmp, &mut block, false);
                    for row in block.iter_mut() {
                        for cell in row.iter_mut() {
                            *cell = (*cell / step).round() * step;
                        }
                    }
                    mat_bct(&basis, &block, &mut tmp, true);
                    mat_abt(&basis, &tmp, &mut block, true);
                    for (r, row) in block.iter().enumerate() {
                        for (s, cell) in row.iter().enumerate() {
                            out[((by + r) * w + bx + s) * ch + c] = *cell;
                        }
                    }
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

// tmp = B * C^T (or B * C when transposed)
fn mat_bct<T: Scalar>(
    basis: &[[T; BLOCK]; BLOCK],
    b: &[[T; BLOCK]; BLOCK],
    tmp: &mut [[T; BLOCK]; BLOCK],
    transposed: bool,
) {
    for r in 0..BLOCK {
        for s in 0..BLOCK {
            let mut acc = T::zero();
            for k in 0..BLOCK {
                let c = if transposed { basis[k][s] } else { basis[s][k] };
                acc += b[r][k] * c;
            }
            tmp[r][s] = acc;
        }
    }
}

// out = C * B (or C^T * B when transposed)
fn mat_abt<T: Scalar>(
    basis: &[[T; BLOCK]; BLOCK],
    b: &[[T; BLOCK]; BLOCK],
    out: &mut [[T; BLOCK]; BLOCK],
    transposed: bool,
) {
    for r in 0..BLOCK {
        for s in 0..BLOCK {
            let mut acc = T::zero();
            for k in 0..BLOCK {
                let c = if transposed { basis[k][r] } else { basis[r][k] };
                acc += c * b[k][s];
            }
            out[r][s] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_image_maps_to_zero() {
        let img = Image::<f64>::zeros(16, 16, 1);
        let op = DctQuantize::new(4.0).unwrap();
        let out = op.evaluate(&img).unwrap();
        for &v in out.data() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn huge_q_is_identity_within_step() {
        let data: Vec<f64> = (0..64).map(|i| (i as f64 * 0.71).fract()).collect();
        let img = Image::gray(8, 8, data).unwrap();
        let op = DctQuantize::new(1e6).unwrap();
        let out = op.evaluate(&img).unwrap();
        for (&a, &b) in img.data().iter().zip(out.data().iter()) {
            assert!((a - b).abs() < 8.0 * 1e-6); // 8 = block dim, step = 1e-6
        }
    }

    #[test]
    fn transform_is_orthonormal() {
        // quantization off (q huge): energy preserved through the cycle
        let data: Vec<f64> = (0..64).map(|i| ((i * 31 % 17) as f64) / 17.0).collect();
        let img = Image::gray(8, 8, data).unwrap();
        let op = DctQuantize::new(1e12).unwrap();
        let out = op.evaluate(&img).unwrap();
        let e_in: f64 = img.data().iter().map(|v| v * v).sum();
        let e_out: f64 = out.data().iter().map(|v| v * v).sum();
        assert!((e_in - e_out).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_multiple_of_eight() {
        let img = Image::<f64>::zeros(12, 16, 1);
        let op = DctQuantize::new(4.0).unwrap();
        assert!(matches!(
            op.evaluate(&img),
            Err(OpError::NotDivisible { .. })
        ));
    }
}
