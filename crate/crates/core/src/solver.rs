//! The rendition engine: damped residual iteration, its exact-gradient
//! variant, and the denoiser-regularized variant.
//!
//! The core update is `x_{k+1} = (1 - gamma*mu) * x_k - gamma * (f(x_k) - y)`
//! started from `x_0 = y`. One fresh activation of `f` per iteration: the
//! `f(x_k)` computed for the stopping residual is reused in the update.

use thiserror::Error;

use crate::image::{psnr, Image};
use crate::ops::{BlackBoxOperator, OpError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver config: {0}")]
    BadConfig(String),
    #[error("step size {gamma} violates the stability bound 2/(mu + m_hat) = {bound}")]
    UnstableStep { gamma: f64, bound: f64 },
    #[error("observed image has zero norm; relative residual undefined")]
    ZeroObservation,
    #[error("observed image shape does not match operator output")]
    ShapeMismatch,
    #[error("mu + m_hat must be positive")]
    DegenerateConstants,
    #[error("operator failed at iteration {iteration}: {source}")]
    OperatorFailed {
        iteration: usize,
        source: OpError,
    },
}

/// Damping scalar policy: `mu = max(|m_hat - 1|, 0.01)`, the smallest
/// value in the bracket `[|M-1|, M+1]` with a floor that avoids a
/// zero-damping degenerate config.
pub fn derive_mu(m_hat: f64) -> f64 {
    (m_hat - 1.0).abs().max(MU_FLOOR)
}

/// Floor used by [`derive_mu`].
pub const MU_FLOOR: f64 = 0.01;

/// Stability ceiling `2 / (mu + m_hat)`; callers must stay strictly below.
pub fn max_stable_step(mu: f64, m_hat: f64) -> Result<f64, SolverError> {
    if mu + m_hat <= 0.0 {
        return Err(SolverError::DegenerateConstants);
    }
    Ok(2.0 / (mu + m_hat))
}

/// Advisory iteration count `ceil(1 / (gamma * m_hat))`.
pub fn suggested_iterations(gamma: f64, m_hat: f64) -> Result<usize, SolverError> {
    if !(gamma > 0.0) || !(m_hat > 0.0) {
        return Err(SolverError::DegenerateConstants);
    }
    Ok((1.0 / (gamma * m_hat)).ceil() as usize)
}

/// Worst-case amplification `exp((1 + M)/M)` of an initial-measurement
/// perturbation over a full solve.
pub fn noise_amplification_bound(m_hat: f64) -> Result<f64, SolverError> {
    if !(m_hat > 0.0) {
        return Err(SolverError::DegenerateConstants);
    }
    Ok(((1.0 + m_hat) / m_hat).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Approximate,
    ExactGradient,
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
    Diverged,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIters => "max_iters",
            StopReason::Diverged => "diverged",
        }
    }
}

/// Iteration parameters. Defaults follow the experiment setup used
/// throughout: `gamma = 0.15`, `mu = 0.01`, `tau = 1e-2`, 200 iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub mu: f64,
    pub tau: f64,
    pub max_iters: usize,
    pub mode: SolverMode,
    /// Denoiser strength; only meaningful in `Red` mode.
    pub lambda: f64,
    /// Radial finite-difference scale; only used in `ExactGradient` mode.
    pub epsilon: f64,
    pub record_trajectory: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 0.15,
            mu: MU_FLOOR,
            tau: 1e-2,
            max_iters: 200,
            mode: SolverMode::Approximate,
            lambda: 0.0,
            epsilon: 1e-2,
            record_trajectory: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.gamma > 0.0) {
            return Err(SolverError::BadConfig(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if !(self.mu >= 0.0) {
            return Err(SolverError::BadConfig(format!(
                "mu must be >= 0, got {}",
                self.mu
            )));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(SolverError::BadConfig(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if self.max_iters == 0 {
            return Err(SolverError::BadConfig("max_iters must be >= 1".into()));
        }
        if self.lambda < 0.0 {
            return Err(SolverError::BadConfig(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.lambda != 0.0 && self.mode != SolverMode::Red {
            return Err(SolverError::BadConfig(
                "lambda is only meaningful in red mode".into(),
            ));
        }
        if self.mode == SolverMode::ExactGradient && !(self.epsilon > 0.0) {
            return Err(SolverError::BadConfig(format!(
                "epsilon must be > 0 in exact-gradient mode, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Enforces the convergence guard `gamma < 2 / (mu + m_hat)`.
    pub fn guarded(self, m_hat: f64) -> Result<Self, SolverError> {
        self.validate()?;
        let bound = max_stable_step(self.mu, m_hat)?;
        if self.gamma >= bound {
            return Err(SolverError::UnstableStep {
                gamma: self.gamma,
                bound,
            });
        }
        Ok(self)
    }
}

/// Outcome of a rendition run.
#[derive(Debug, Clone)]
pub struct RenditionResult<T> {
    /// Best-residual iterate, clamped to `[0, 1]`.
    pub estimate: Image<T>,
    /// Last iterate, unclamped (oracle comparisons need the raw values).
    pub final_iterate: Image<T>,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
    /// Relative residual after each update (length = iterations_run).
    pub residual_trajectory: Vec<f64>,
    /// PSNR of each clamped iterate vs ground truth, starting at x_0
    /// (length = iterations_run + 1 when truth was supplied).
    pub psnr_trajectory: Option<Vec<f64>>,
    /// Rendition loss `x'(f(x) - y) - x'x/2` per iterate, starting at x_0.
    pub loss_trajectory: Option<Vec<f64>>,
    /// Activations of `f` performed by the run.
    pub activations_used: u64,
    pub best_residual: f64,
    pub best_iteration: usize,
}

impl<T: Scalar> RenditionResult<T> {
    pub fn best_psnr(&self) -> Option<f64> {
        self.psnr_trajectory
            .as_ref()
            .map(|t| t.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn final_psnr(&self) -> Option<f64> {
        self.psnr_trajectory.as_ref().and_then(|t| t.last().copied())
    }
}

/// One relative-residual measurement `||f(x) - y|| / ||y||`; one activation.
pub fn relative_residual<T: Scalar>(
    f: &dyn BlackBoxOperator<T>,
    x: &Image<T>,
    y: &Image<T>,
) -> Result<f64, SolverError> {
    let y_norm = y.l2_norm();
    if y_norm == T::zero() {
        return Err(SolverError::ZeroObservation);
    }
    let fx = f
        .evaluate(x)
        .map_err(|source| SolverError::OperatorFailed {
            iteration: 0,
            source,
        })?;
    if !fx.same_shape(y) {
        return Err(SolverError::ShapeMismatch);
    }
    Ok((fx.l2_distance(y) / y_norm).to_f64_lossy())
}

/// Approximate-gradient rendition (the default mode).
pub fn render<T: Scalar>(
    f: &dyn BlackBoxOperator<T>,
    y: &Image<T>,
    cfg: &SolverConfig,
    ground_truth: Option<&Image<T>>,
) -> Result<RenditionResult<T>, SolverError> {
    let cfg = SolverConfig {
        mode: SolverMode::Approximate,
        lambda: 0.0,
        ..cfg.clone()
    };
    run_engine(f, y, &cfg, ground_truth, None)
}

/// Exact-gradient variant: the damping term is replaced by the radial
/// finite difference, at one extra activation per iteration.
pub fn render_exact<T: Scalar>(
    f: &dyn BlackBoxOperator<T>,
    y: &Image<T>,
    cfg: &SolverConfig,
    ground_truth: Option<&Image<T>>,
) -> Result<RenditionResult<T>, SolverError> {
    let cfg = SolverConfig {
        mode: SolverMode::ExactGradient,
        lambda: 0.0,
        ..cfg.clone()
    };
    run_engine(f, y, &cfg, ground_truth, None)
}

/// Denoiser-regularized variant. With `lambda = 0` the trajectory is
/// bitwise identical to [`render`] and the denoiser is never evaluated.
pub fn render_red<T: Scalar>(
    f: &dyn BlackBoxOperator<T>,
    y: &Image<T>,
    denoiser: &dyn BlackBoxOperator<T>,
    cfg: &SolverConfig,
    ground_truth: Option<&Image<T>>,
) -> Result<RenditionResult<T>, SolverError> {
    let cfg = SolverConfig {
        mode: SolverMode::Red,
        ..cfg.clone()
    };
    run_engine(f, y, &cfg, ground_truth, Some(denoiser))
}

fn run_engine<T: Scalar>(
    f: &dyn BlackBoxOperator<T>,
    y: &Image<T>,
    cfg: &SolverConfig,
    truth: Option<&Image<T>>,
    denoiser: Option<&dyn BlackBoxOperator<T>>,
) -> Result<RenditionResult<T>, SolverError> {
    cfg.validate()?;
    let y_norm = y.l2_norm();
    if y_norm == T::zero() {
        return Err(SolverError::ZeroObservation);
    }
    if let Some(t) = truth {
        if !t.same_shape(y) {
            return Err(SolverError::ShapeMismatch);
        }
    }

    let gamma = T::of_f64(cfg.gamma);
    let decay = T::one() - gamma * T::of_f64(cfg.mu);
    let lambda = T::of_f64(cfg.lambda);
    let eps = T::of_f64(cfg.epsilon);

    let mut x = y.clone();
    let mut activations: u64 = 0;
    let evaluate = |img: &Image<T>, iteration: usize, activations: &mut u64| {
        let out = f
            .evaluate(img)
            .map_err(|source| SolverError::OperatorFailed { iteration, source })?;
        if !out.same_shape(y) {
            return Err(SolverError::ShapeMismatch);
        }
        *activations += 1;
        Ok(out)
    };
    let mut fx = evaluate(&x, 0, &mut activations)?;

    let residual = |fx: &Image<T>| (fx.l2_distance(y) / y_norm).to_f64_lossy();
    let loss = |x: &Image<T>, fx: &Image<T>| {
        let cross: T = x
            .data()
            .iter()
            .zip(fx.data().iter().zip(y.data().iter()))
            .map(|(&xv, (&fv, &yv))| xv * (fv - yv))
            .sum();
        (cross - T::of_f64(0.5) * x.dot(x)).to_f64_lossy()
    };

    let mut r = residual(&fx);
    let r_init = r;
    let mut best_r = r;
    let mut best_x = x.clone();
    let mut best_iteration = 0;

    let mut residuals = Vec::new();
    let mut psnrs = truth.map(|t| vec![psnr(&x.clamp01(), t).expect("shapes checked")]);
    let mut losses = cfg.record_trajectory.then(|| vec![loss(&x, &fx)]);

    let mut iterations_run = 0;
    let mut stop = None;

    if r <= cfg.tau {
        stop = Some(StopReason::Converged);
    } else {
        for k in 1..=cfg.max_iters {
            // one damped residual step, reusing the cached f(x_{k-1})
            let mut next: Vec<T> = x
                .data()
                .iter()
                .zip(fx.data().iter().zip(y.data().iter()))
                .map(|(&xv, (&fv, &yv))| decay * xv - gamma * (fv - yv))
                .collect();
            match cfg.mode {
                SolverMode::Approximate => {}
                SolverMode::Red => {
                    if cfg.lambda != 0.0 {
                        let s = denoiser
                            .expect("red mode requires a denoiser")
                            .evaluate(&x)
                            .map_err(|source| SolverError::OperatorFailed {
                                iteration: k,
                                source,
                            })?;
                        if !s.same_shape(y) {
                            return Err(SolverError::ShapeMismatch);
                        }
                        for ((nv, &xv), &sv) in
                            next.iter_mut().zip(x.data().iter()).zip(s.data().iter())
                        {
                            *nv += gamma * lambda * (sv - xv);
                        }
                    }
                }
                SolverMode::ExactGradient => {
                    // replace the mu*x surrogate with the radial finite
                    // difference: x - gamma*(f(x) + rad - y - x)
                    let scaled = x.map(|v| (T::one() + eps) * v);
                    let fs = evaluate(&scaled, k, &mut activations)?;
                    for (i, nv) in next.iter_mut().enumerate() {
                        let xv = x.data()[i];
                        let fv = fx.data()[i];
                        let rad = (fs.data()[i] - fv) / eps;
                        let yv = y.data()[i];
                        *nv = xv - gamma * (fv + rad - yv - xv);
                    }
                }
            }
            x = y.with_data(next);
            fx = evaluate(&x, k, &mut activations)?;
            r = residual(&fx);
            iterations_run = k;
            if cfg.record_trajectory {
                residuals.push(r);
            }
            if let Some(p) = psnrs.as_mut() {
                p.push(psnr(&x.clamp01(), truth.unwrap()).expect("shapes checked"));
            }
            if let Some(l) = losses.as_mut() {
                l.push(loss(&x, &fx));
            }
            if r < best_r {
                best_r = r;
                best_x = x.clone();
                best_iteration = k;
            }
            if r <= cfg.tau {
                stop = Some(StopReason::Converged);
                break;
            }
            if r > 10.0 * r_init {
                stop = Some(StopReason::Diverged);
                break;
            }
        }
    }

    Ok(RenditionResult {
        estimate: best_x.clamp01(),
        final_iterate: x,
        iterations_run,
        stop_reason: stop.unwrap_or(StopReason::MaxIters),
        residual_trajectory: residuals,
        psnr_trajectory: psnrs,
        loss_trajectory: losses,
        activations_used: activations,
        best_residual: best_r,
        best_iteration,
    })
}
