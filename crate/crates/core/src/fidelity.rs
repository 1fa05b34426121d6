//! Data-consistency step: `argmin_x ‖Ax − y‖² + λ‖x − (z − u)‖²`, solved by
//! plain conjugate gradients on `(AᴴA + λI) x = Aᴴy + λ(z − u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Sample, SeededRng};
use crate::operators::{LinearOperator, RandomSample};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgConfig {
    pub max_iters: usize,
    /// Relative residual `‖b − Mx‖ / ‖b‖` at which CG stops.
    pub tol: f64,
    /// Proximal penalty λ.
    pub lambda: f64,
}

impl CgConfig {
    pub fn new(max_iters: usize, tol: f64, lambda: f64) -> Result<Self> {
        let cfg = Self { max_iters, tol, lambda };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("CG needs at least one iteration"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!(
                "CG tolerance must be positive, got {}",
                self.tol
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!(
                "penalty must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome<T> {
    pub x: Grid<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Relative residual before the first step and after every step.
    pub residual_history: Vec<f64>,
}

impl<T> CgOutcome<T> {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }
}

/// Conjugate gradients for a Hermitian positive (semi-)definite `apply`.
///
/// The recursively updated residual is re-verified against `b − Mx`
/// before declaring convergence; if it has drifted the iteration restarts
/// from the true residual.
pub fn conjugate_gradient<T, F>(apply: F, b: &Grid<T>, x0: Grid<T>, max_iters: usize, tol: f64) -> Result<CgOutcome<T>>
where
    T: Sample,
    F: Fn(&Grid<T>) -> Result<Grid<T>>,
{
    x0.ensure_shape(b.shape(), "conjugate_gradient")?;
    let b_norm = b.norm();
    let target = tol * b_norm.max(f64::MIN_POSITIVE);
    let mut x = x0;
    let mut r = b.sub(&apply(&x)?)?;
    let mut p = r.clone();
    let mut rr = r.norm_sqr();
    let rel = |rr: f64| rr.sqrt() / b_norm.max(f64::MIN_POSITIVE);
    let mut history = vec![rel(rr)];
    let mut converged = rr.sqrt() <= target;
    let mut iterations = 0;

    while !converged && iterations < max_iters {
        let mp = apply(&p)?;
        let pmp = p.dot(&mp)?;
        if !(pmp > 0.0) {
            // Search direction in the null space: nothing more to gain.
            break;
        }
        let alpha = rr / pmp;
        x.axpy(alpha, &p)?;
        r.axpy(-alpha, &mp)?;
        let rr_new = r.norm_sqr();
        iterations += 1;

        if rr_new.sqrt() <= target {
            let true_r = b.sub(&apply(&x)?)?;
            let true_rr = true_r.norm_sqr();
            history.push(rel(true_rr));
            if true_rr.sqrt() <= target {
                converged = true;
                break;
            }
            r = true_r;
            rr = true_rr;
            p = r.clone();
            continue;
        }
        history.push(rel(rr_new));
        let beta = rr_new / rr;
        rr = rr_new;
        let mut next = r.clone();
        next.axpy(beta, &p)?;
        p = next;
    }

    Ok(CgOutcome {
        x,
        iterations,
        converged,
        residual_history: history,
    })
}

/// Proximal data-consistency update, warm-started from `z − u`.
pub fn prox_data_consistency<T, O>(
    op: &O,
    y: &Grid<T>,
    z: &Grid<T>,
    u: &Grid<T>,
    cfg: &CgConfig,
) -> Result<CgOutcome<T>>
where
    T: Sample,
    O: LinearOperator<T> + ?Sized,
{
    cfg.validate()?;
    y.ensure_shape(op.range_shape(), "prox_data_consistency: y")?;
    z.ensure_shape(op.domain_shape(), "prox_data_consistency: z")?;
    u.ensure_shape(op.domain_shape(), "prox_data_consistency: u")?;
    y.ensure_finite("prox_data_consistency: y")?;
    z.ensure_finite("prox_data_consistency: z")?;
    u.ensure_finite("prox_data_consistency: u")?;

    let anchor = z.sub(u)?;
    let mut b = op.adjoint(y)?;
    b.axpy(cfg.lambda, &anchor)?;
    let lambda = cfg.lambda;
    let apply = |v: &Grid<T>| -> Result<Grid<T>> {
        let mut out = op.normal(v)?;
        out.axpy(lambda, v)?;
        Ok(out)
    };
    conjugate_gradient(apply, &b, anchor, cfg.max_iters, cfg.tol)
}

/// Gradient of `½‖Ax − y‖² + (λ/2)‖x − (z − u)‖²`, i.e. the normal-equation
/// residual `(AᴴA + λI)x − Aᴴy − λ(z − u)`.
pub fn prox_gradient<T, O>(op: &O, y: &Grid<T>, z: &Grid<T>, u: &Grid<T>, lambda: f64, x: &Grid<T>) -> Result<Grid<T>>
where
    T: Sample,
    O: LinearOperator<T> + ?Sized,
{
    let anchor = z.sub(u)?;
    let mut g = op.adjoint(&op.apply(x)?.sub(y)?)?;
    g.axpy(lambda, &x.sub(&anchor)?)?;
    Ok(g)
}

/// Relative symmetry defect `|⟨Ma, b⟩ − ⟨a, Mb⟩| / (‖Ma‖‖b‖)` of
/// `M = AᴴA + λI` for random `a`, `b`.
pub fn normal_symmetry_defect<T, O>(op: &O, lambda: f64, rng: &mut SeededRng) -> Result<f64>
where
    T: RandomSample,
    O: LinearOperator<T> + ?Sized,
{
    let a = T::random_grid(rng, op.domain_shape());
    let b = T::random_grid(rng, op.domain_shape());
    let m = |v: &Grid<T>| -> Result<Grid<T>> {
        let mut out = op.normal(v)?;
        out.axpy(lambda, v)?;
        Ok(out)
    };
    let ma = m(&a)?;
    let mb = m(&b)?;
    let lhs = ma.dot_complex(&b)?;
    let rhs = a.dot_complex(&mb)?;
    Ok((lhs - rhs).norm() / (ma.norm() * b.norm() + f64::MIN_POSITIVE))
}
