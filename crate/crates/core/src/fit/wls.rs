use nalgebra::{DMatrix, DVector};

use super::{check_inputs, solve_spd, weighted_gram, xt_vec, FitResult};
use crate::error::Result;
use crate::family::Family;
use crate::linalg::{regularization_lambda, SpdMatrix, RANK_TOLERANCE};

/// Weighted least squares, `argmin sum_i w_i (y_i - x_i^T theta)^2`.
///
/// Exact mode returns the minimum-norm solution from an SVD of `W^{1/2} X`;
/// otherwise the normal equations are ridged by `trace(X^T W X) / (10 d)`.
pub fn fit_wls(x: &DMatrix<f64>, y: &DVector<f64>, w: &[f64], exact: bool) -> Result<FitResult> {
    check_inputs(x, y, w)?;
    let theta = if exact {
        let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        let mut b = x.select_rows(&support);
        let mut rhs = DVector::from_iterator(support.len(), support.iter().map(|&i| y[i]));
        for (k, &i) in support.iter().enumerate() {
            let s = w[i].sqrt();
            b.row_mut(k).scale_mut(s);
            rhs[k] *= s;
        }
        let svd = b.svd(true, true);
        let eps = RANK_TOLERANCE * svd.singular_values.max();
        svd.solve(&rhs, eps).expect("u and v_t were computed")
    } else {
        let gram = weighted_gram(x, w);
        let wy: Vec<f64> = w.iter().zip(y.iter()).map(|(a, b)| a * b).collect();
        let lambda = regularization_lambda(&SpdMatrix::from_matrix(gram.clone())?);
        solve_spd(&gram, &xt_vec(x, &wy), lambda)
    };
    let resid = y - x * &theta;
    let objective = w.iter().zip(resid.iter()).map(|(wi, r)| wi * r * r).sum();
    let wr: Vec<f64> = w.iter().zip(resid.iter()).map(|(a, b)| a * b).collect();
    let final_gradient_norm = xt_vec(x, &wr).amax();
    Ok(FitResult {
        theta,
        family: Family::Ols,
        converged: true,
        iterations: 1,
        final_gradient_norm,
        objective,
    })
}
