//! Dense linear operators and the closed-form linear iterate, the
//! algebra oracle for the solver.

use crate::image::Image;
use crate::ops::{BlackBoxOperator, OpCore, OpError};
use crate::scalar::Scalar;

/// An explicit `N x N` matrix acting on flattened images of length `N`.
pub struct DenseLinearOperator<T> {
    n: usize,
    /// Row-major `N x N` entries.
    matrix: Vec<T>,
    core: OpCore,
}

impl<T: Scalar> DenseLinearOperator<T> {
    pub fn new(n: usize, matrix: Vec<T>) -> Result<Self, OpError> {
        if matrix.len() != n * n {
            return Err(OpError::ShapeMismatch {
                expected: n * n,
                got: matrix.len(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(OpError::BadParameter(
                "linear operator entries must be finite".into(),
            ));
        }
        Ok(Self {
            n,
            matrix,
            core: OpCore::new(format!("linear:n={n}")),
        })
    }

    /// Materializes any dimension-preserving operator as a dense matrix
    /// by pushing basis images through it (N activations of `op`).
    pub fn from_operator(
        op: &dyn BlackBoxOperator<T>,
        width: usize,
        height: usize,
    ) -> Result<Self, OpError> {
        let n = width * height;
        let mut matrix = vec![T::zero(); n * n];
        for j in 0..n {
            let mut basis = Image::<T>::zeros(width, height, 1);
            basis.data_mut()[j] = T::one();
            let col = op.evaluate(&basis)?;
            if col.len() != n {
                return Err(OpError::ShapeMismatch {
                    expected: n,
                    got: col.len(),
                });
            }
            for (i, &v) in col.data().iter().enumerate() {
                matrix[i * n + j] = v;
            }
        }
        Self::new(n, matrix)
    }

    pub fn from_diagonal(diag: &[T]) -> Result<Self, OpError> {
        let n = diag.len();
        let mut matrix = vec![T::zero(); n * n];
        for (i, &v) in diag.iter().enumerate() {
            matrix[i * n + i] = v;
        }
        Self::new(n, matrix)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[T] {
        &self.matrix
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>, OpError> {
        if v.len() != self.n {
            return Err(OpError::ShapeMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        Ok(self
            .matrix
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v.iter()).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    /// Spectral norm estimate via power iteration on `W^T W`.
    pub fn spectral_norm(&self, iterations: usize) -> f64 {
        let n = self.n;
        let mut v: Vec<T> = (0..n)
            .map(|i| T::of_f64(1.0 + ((i * 37 + 11) % 101) as f64 / 101.0))
            .collect();
        let mut norm = 1.0;
        for _ in 0..iterations {
            let wv = self.matvec(&v).expect("sized");
            // w^T (w v)
            let mut wtv = vec![T::zero(); n];
            for (i, row) in self.matrix.chunks_exact(n).enumerate() {
                let wi = wv[i];
                for (j, &a) in row.iter().enumerate() {
                    wtv[j] += a * wi;
                }
            }
            let len = wtv.iter().map(|&x| x * x).sum::<T>().sqrt();
            if len == T::zero() {
                return 0.0;
            }
            for (dst, &src) in v.iter_mut().zip(wtv.iter()) {
                *dst = src / len;
            }
            norm = len.to_f64_lossy();
        }
        norm.sqrt()
    }
}

impl<T: Scalar> BlackBoxOperator<T> for DenseLinearOperator<T> {
    fn evaluate(&self, img: &Image<T>) -> Result<Image<T>, OpError> {
        self.core.count();
        if img.len() != self.n {
            return Err(OpError::ShapeMismatch {
                expected: self.n,
                got: img.len(),
            });
        }
        Ok(img.with_data(self.matvec(img.data())?))
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

/// Exact k-th iterate of the linear rendition recursion
/// `z_{j+1} = (1 - gamma*mu) z_j - gamma (W z_j - x0)` with `z_0 = x0`
/// (the solver initializes at the observation, so the observation is
/// also the forcing term). Dense matrix-vector products, no matrix powers.
pub fn closed_form_linear_iterate<T: Scalar>(
    w: &DenseLinearOperator<T>,
    x0: &[T],
    gamma: f64,
    mu: f64,
    k: usize,
) -> Result<Vec<T>, OpError> {
    if x0.len() != w.n() {
        return Err(OpError::ShapeMismatch {
            expected: w.n(),
            got: x0.len(),
        });
    }
    let g = T::of_f64(gamma);
    let decay = T::one() - g * T::of_f64(mu);
    let mut z = x0.to_vec();
    for _ in 0..k {
        let wz = w.matvec(&z)?;
        for ((zv, &wv), &x0v) in z.iter_mut().zip(wz.iter()).zip(x0.iter()) {
            *zv = decay * *zv - g * (wv - x0v);
        }
    }
    Ok(z)
}
