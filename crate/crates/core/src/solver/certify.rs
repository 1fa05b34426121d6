//! Fixed-point certificates on convex instances with an exact-prox denoiser.
//!
//! With `f(x) = ½‖Ax − y‖²`, the data step is the ADMM x-update at penalty
//! `ρ = λ`. The Gaussian-prior denoiser at level σ is `prox_{σ²φ}` with
//! `φ(x) = ‖x − μ₀‖²/(2τ²)`, so the z-update is `prox_{g/λ}` for
//! `g = λσ²φ`. Dual-coupled fixed points therefore minimize
//! `f(x) + (λ_eff/2)‖x − μ₀‖²` with `λ_eff = λσ²/τ²`.
//!
//! Without the dual, the fixed point `x̃ = argmin f + (λ/2)‖x − D(x̃)‖²`
//! satisfies `∇f(x̃) + λ(x̃ − D(x̃)) = 0`; since
//! `x − D(x) = σ²/(τ²+σ²)·(x − μ₀)`, it minimizes the same objective with
//! the smaller weight `λσ²/(τ²+σ²)`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fidelity::{prox_data_consistency, CgConfig};
use crate::grid::RealGrid;
use crate::operators::{grid_to_vector, vector_to_grid, DenseOperator, LinearOperator};
use crate::priors::{Denoiser, GaussianPriorDenoiser};

#[derive(Clone, Debug)]
pub struct Certificate {
    pub dual_coupling: bool,
    pub iterations: usize,
    /// False when the iterates were still moving at `max_iters`; the
    /// certificate is then inconclusive.
    pub converged: bool,
    pub lambda: f64,
    pub lambda_eff: f64,
    /// `‖x − z‖`
    pub consensus: f64,
    /// `‖Aᵀ(Ax − y) + λ_eff (x − μ₀)‖`
    pub stationarity: f64,
    /// `‖∇f(x) + λu‖`
    pub dual_balance: f64,
    /// `‖∇f(x⁰)‖`, the scale for `dual_balance`.
    pub initial_gradient: f64,
    /// `‖x − x*‖` against the dual-coupled minimizer.
    pub error_to_minimizer: f64,
    /// `‖x − x̃‖` against the closed-form loosely coupled fixed point.
    pub error_to_hqs_prediction: f64,
    pub x: RealGrid,
    pub z: RealGrid,
}

/// `(AᵀA + λI)⁻¹(Aᵀy + λμ)`.
pub fn regularized_minimizer(op: &DenseOperator, y: &RealGrid, mean: &RealGrid, lambda: f64) -> Result<RealGrid> {
    let a = op.matrix();
    let n = a.ncols();
    let m = a.transpose() * a + nalgebra::DMatrix::identity(n, n) * lambda;
    let rhs: DVector<f64> = a.transpose() * grid_to_vector(y) + grid_to_vector(mean) * lambda;
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::invalid("regularized normal matrix is not positive definite"))?;
    Ok(vector_to_grid(&chol.solve(&rhs)))
}

/// Closed-form fixed point of the dual-free iteration.
pub fn hqs_fixed_point(
    op: &DenseOperator,
    y: &RealGrid,
    denoiser: &GaussianPriorDenoiser<f64>,
    lambda: f64,
    sigma: f64,
) -> Result<RealGrid> {
    let t2 = denoiser.tau().powi(2);
    let s2 = sigma * sigma;
    regularized_minimizer(op, y, denoiser.mean(), lambda * s2 / (t2 + s2))
}

/// Runs the stationary-σ iteration to a fixed point and checks it against
/// the closed-form minimizers.
#[allow(clippy::too_many_arguments)]
pub fn certify_fixed_point(
    op: &DenseOperator,
    y: &RealGrid,
    denoiser: &GaussianPriorDenoiser<f64>,
    lambda: f64,
    sigma: f64,
    dual_coupling: bool,
    tol: f64,
    max_iters: usize,
) -> Result<Certificate> {
    if !(lambda > 0.0) || !(sigma > 0.0) {
        return Err(Error::invalid("certification needs positive λ and σ"));
    }
    if !(tol > 0.0) || max_iters == 0 {
        return Err(Error::invalid(
            "certification needs a positive tolerance and iteration budget",
        ));
    }
    let n = op.domain_shape().0;
    let mu = denoiser.mean();
    let lambda_eff = lambda * sigma * sigma / denoiser.tau().powi(2);
    let cg = CgConfig::new(4 * n + 20, 1e-14, lambda)?;

    let grad_f = |x: &RealGrid| -> Result<RealGrid> { op.adjoint(&op.apply(x)?.sub(y)?) };

    let mut x = op.adjoint(y)?;
    let initial_gradient = grad_f(&x)?.norm();
    let mut z = x.clone();
    let mut u = RealGrid::zeros(n, 1);
    let mut converged = false;
    let mut iterations = 0;
    // iterates are considered stationary once they move by less than this
    let still = 1e-3 * tol;

    while iterations < max_iters {
        let x_new = prox_data_consistency(op, y, &z, &u, &cg)?.x;
        let v = if dual_coupling { x_new.add(&u)? } else { x_new.clone() };
        let z_new = denoiser.denoise(&v, sigma, 0)?;
        if dual_coupling {
            u.axpy(1.0, &x_new.sub(&z_new)?)?;
        }
        let moved = x_new.distance(&x)?.max(z_new.distance(&z)?);
        x = x_new;
        z = z_new;
        iterations += 1;
        if moved <= still * (1.0 + x.norm()) {
            converged = true;
            break;
        }
    }

    let mut stationary = grad_f(&x)?;
    stationary.axpy(lambda_eff, &x.sub(mu)?)?;
    let mut balance = grad_f(&x)?;
    balance.axpy(lambda, &u)?;
    let x_star = regularized_minimizer(op, y, mu, lambda_eff)?;
    let x_tilde = hqs_fixed_point(op, y, denoiser, lambda, sigma)?;

    Ok(Certificate {
        dual_coupling,
        iterations,
        converged,
        lambda,
        lambda_eff,
        consensus: x.distance(&z)?,
        stationarity: stationary.norm(),
        dual_balance: balance.norm(),
        initial_gradient,
        error_to_minimizer: x.distance(&x_star)?,
        error_to_hqs_prediction: x.distance(&x_tilde)?,
        x,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SeededRng;

    #[test]
    fn identity_with_agreeing_prior_has_no_bias() {
        let mu = SeededRng::new(1).white_gaussian(16, 1, 1.0).unwrap();
        let op = DenseOperator::identity(16);
        let d = GaussianPriorDenoiser::new(mu.clone(), 1.0).unwrap();
        for dual in [true, false] {
            let c = certify_fixed_point(&op, &mu, &d, 1.0, 0.5, dual, 1e-8, 500).unwrap();
            assert!(c.converged);
            assert!(c.error_to_minimizer < 1e-8);
            assert!(x_close(&c.x, &mu));
        }
    }

    fn x_close(a: &RealGrid, b: &RealGrid) -> bool {
        a.distance(b).unwrap() < 1e-8
    }

    #[test]
    fn dual_on_reaches_the_minimizer_dual_off_does_not() {
        let mut rng = SeededRng::new(2);
        let op = DenseOperator::random_gaussian(16, 16, &mut rng);
        let y = rng.white_gaussian(16, 1, 1.0).unwrap();
        let mu = rng.white_gaussian(16, 1, 1.0).unwrap();
        let d = GaussianPriorDenoiser::new(mu, 1.0).unwrap();
        let on = certify_fixed_point(&op, &y, &d, 1.0, 0.5, true, 1e-8, 500).unwrap();
        let off = certify_fixed_point(&op, &y, &d, 1.0, 0.5, false, 1e-8, 500).unwrap();
        assert!(on.converged && off.converged);
        assert!(on.consensus < 1e-6 && on.stationarity < 1e-6);
        assert!(on.dual_balance <= 1e-6 * on.initial_gradient);
        assert!(off.error_to_hqs_prediction < 1e-6);
        assert!(off.error_to_minimizer > 10.0 * on.error_to_minimizer);
    }

    #[test]
    fn invalid_parameters() {
        let op = DenseOperator::identity(4);
        let d = GaussianPriorDenoiser::new(RealGrid::zeros(4, 1), 1.0).unwrap();
        let y = RealGrid::zeros(4, 1);
        assert!(certify_fixed_point(&op, &y, &d, 0.0, 0.5, true, 1e-8, 10).is_err());
        assert!(certify_fixed_point(&op, &y, &d, 1.0, 0.5, true, 1e-8, 0).is_err());
    }
}
