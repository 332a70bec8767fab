use nalgebra::{DMatrix, DVector};

use super::{check_inputs, solve_spd, weighted_gram, xt_vec, FitOptions, FitResult};
use crate::error::{Error, Result};
use crate::family::{clamp_eta, Family};

/// Relative ridge keeping the IRLS system positive definite.
const NEWTON_RIDGE: f64 = 1e-10;

/// Weighted negative log-likelihood `sum_i w_i (A(eta_i) - y_i eta_i)`.
pub fn glm_objective(x: &DMatrix<f64>, y: &DVector<f64>, w: &[f64], family: Family, theta: &DVector<f64>) -> f64 {
    let eta = x * theta;
    w.iter()
        .zip(y.iter().zip(eta.iter()))
        .map(|(wi, (&yi, &e))| if *wi == 0.0 { 0.0 } else { wi * family.loss(yi, e) })
        .sum()
}

/// Weighted score `X^T (w o (y - yhat))`, the gradient of the log-likelihood.
pub fn glm_gradient(x: &DMatrix<f64>, y: &DVector<f64>, w: &[f64], family: Family, theta: &DVector<f64>) -> DVector<f64> {
    let eta = x * theta;
    let r: Vec<f64> = (0..y.len()).map(|i| w[i] * (y[i] - family.mean(eta[i]))).collect();
    xt_vec(x, &r)
}

/// Weighted maximum likelihood for logistic and Poisson regression by damped
/// Newton (IRLS).
///
/// Each step solves `(X^T diag(w v) X + ridge I) h = X^T (w o (y - yhat))` and
/// is halved while the log-likelihood decreases. The fit is converged once the
/// score satisfies `||.||_inf <= tol * max(1, ||X^T (w o y)||_inf)` and the
/// Newton step has become negligible; under complete separation the step never
/// shrinks, so the best iterate is returned with `converged = false`.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn fit_glm_weighted(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    w: &[f64],
    family: Family,
    opts: &FitOptions,
) -> Result<FitResult> {
    if !family.is_glm() {
        return Err(Error::InvalidArgument(format!("{family} is not a GLM family")));
    }
    check_inputs(x, y, w)?;
    family.validate_response(y.as_slice())?;

    let wy: Vec<f64> = w.iter().zip(y.iter()).map(|(a, b)| a * b).collect();
    let grad_tol = opts.glm_tol * xt_vec(x, &wy).amax().max(1.0);

    let d = x.ncols();
    let mut theta = DVector::zeros(d);
    let mut objective = glm_objective(x, y, w, family, &theta);
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = glm_gradient(x, y, w, family, &theta);

    while iterations < opts.glm_max_iter {
        let eta = x * &theta;
        let curvature: Vec<f64> = (0..y.len())
            .map(|i| w[i] * family.variance(family.mean(clamp_eta(eta[i]))))
            .collect();
        let info = weighted_gram(x, &curvature);
        let ridge = NEWTON_RIDGE * (info.trace() / d as f64).max(f64::MIN_POSITIVE);
        let step = solve_spd(&info, &grad, ridge);

        let step_small = step.amax() <= 1e-6 * (1.0 + theta.amax());
        if grad.amax() <= grad_tol && step_small {
            converged = true;
            break;
        }

        let mut t = 1.0;
        let mut candidate = &theta + &step;
        let mut cand_obj = glm_objective(x, y, w, family, &candidate);
        let mut halvings = 0;
        // negated so that a NaN objective also counts as no descent
        while !(cand_obj <= objective) && halvings < opts.max_step_halvings {
            t *= 0.5;
            candidate = &theta + &step * t;
            cand_obj = glm_objective(x, y, w, family, &candidate);
            halvings += 1;
        }
        iterations += 1;
        if !(cand_obj <= objective) {
            // no descent along the Newton direction: stuck at the numerical optimum
            converged = grad.amax() <= grad_tol;
            break;
        }
        theta = candidate;
        objective = cand_obj;
        grad = glm_gradient(x, y, w, family, &theta);
    }

    Ok(FitResult {
        theta,
        family,
        converged,
        iterations,
        final_gradient_norm: grad.amax(),
        objective,
    })
}
