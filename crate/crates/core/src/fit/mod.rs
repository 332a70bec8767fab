//! Weighted model fitting on a reweighted sample.

mod glm;
mod quantile;
mod wls;

pub use glm::{fit_glm_weighted, glm_gradient, glm_objective};
pub use quantile::{fit_quantile_weighted, quantile_subgradient_violation};
pub use wls::fit_wls;

use nalgebra::{DMatrix, DVector};

use crate::design::{SampleDraw, SamplingDesign};
use crate::error::{Error, Result};
use crate::family::Family;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta: DVector<f64>,
    pub family: Family,
    pub converged: bool,
    pub iterations: usize,
    /// GLM: sup-norm of the weighted score. Quantile: largest violation of the
    /// coordinate subgradient condition. WLS: sup-norm of the normal-equation residual.
    pub final_gradient_norm: f64,
    /// Weighted loss being minimized (squared error, negative log-likelihood or check loss).
    pub objective: f64,
}

/// Solver settings. Defaults follow the documented tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Least squares via minimum-norm pseudo-inverse (true) or the
    /// `trace / (10 d)` ridge (false).
    pub exact: bool,
    pub glm_max_iter: usize,
    /// Relative sup-norm tolerance on the weighted score.
    pub glm_tol: f64,
    pub max_step_halvings: usize,
    /// Number of smoothing stages: `eps = scale * 10^-k`, `k = 0..stages`.
    pub quantile_stages: usize,
    pub quantile_newton_iter: usize,
    /// Relative tolerance of the quantile subgradient check.
    pub subgradient_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            exact: true,
            glm_max_iter: 100,
            glm_tol: 1e-8,
            max_step_halvings: 30,
            quantile_stages: 7,
            quantile_newton_iter: 100,
            subgradient_tol: 1e-6,
        }
    }
}

/// Dispatch on `family`.
///
/// Weights are divided by their maximum first. Every estimator is invariant to
/// a common weight scale, and this makes equal weights of any size exactly 1.
pub fn fit_weighted(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    w: &[f64],
    family: Family,
    opts: &FitOptions,
) -> Result<FitResult> {
    check_inputs(x, y, w)?;
    let wmax = w.iter().copied().fold(0.0, f64::max);
    let scaled: Vec<f64> = w.iter().map(|v| v / wmax).collect();
    let w = scaled.as_slice();
    match family {
        Family::Ols => fit_wls(x, y, w, opts.exact),
        Family::Logistic | Family::Poisson => fit_glm_weighted(x, y, w, family, opts),
        Family::Quantile { tau } => fit_quantile_weighted(x, y, w, tau, opts),
    }
}

/// Hajek weights: `(1/pi_i) / sum_{j sampled} (1/pi_j)`.
pub fn hajek_normalize(draw: &SampleDraw) -> Result<Vec<f64>> {
    if draw.realized_size == 0 || draw.weights.is_empty() {
        return Err(Error::EmptySample);
    }
    let total: f64 = draw.weights.iter().sum();
    Ok(draw.weights.iter().map(|w| w / total).collect())
}

/// The literal normalizer `(1/pi_i) / sum_{all j} (1/pi_j)`, summing over
/// unsampled points too. Kept for comparison with [`hajek_normalize`].
pub fn literal_normalize(draw: &SampleDraw, design: &SamplingDesign) -> Result<Vec<f64>> {
    if draw.realized_size == 0 {
        return Err(Error::EmptySample);
    }
    if design.pi.iter().any(|&p| p <= 0.0) {
        return Err(Error::InvalidArgument("design has a zero probability".into()));
    }
    let total: f64 = design.pi.iter().map(|p| 1.0 / p).sum();
    Ok(draw.weights.iter().map(|w| w / total).collect())
}

pub(crate) fn check_inputs(x: &DMatrix<f64>, y: &DVector<f64>, w: &[f64]) -> Result<()> {
    let n = x.nrows();
    if n == 0 || x.ncols() == 0 {
        return Err(Error::EmptyData);
    }
    if y.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "X has {n} rows, y {} entries, w {} entries",
            y.len(),
            w.len()
        )));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidArgument("weights sum to zero".into()));
    }
    Ok(())
}

/// `X^T diag(w) X` accumulated over rows.
pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let d = x.ncols();
    let mut g = DMatrix::zeros(d, d);
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        for a in 0..d {
            let xa = wi * x[(i, a)];
            for b in a..d {
                g[(a, b)] += xa * x[(i, b)];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
    g
}

/// `X^T v`.
pub(crate) fn xt_vec(x: &DMatrix<f64>, v: &[f64]) -> DVector<f64> {
    x.tr_mul(&DVector::from_column_slice(v))
}

/// Solve `(A + ridge I) h = b` by Cholesky, falling back to the pseudo-inverse.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>, ridge: f64) -> DVector<f64> {
    let d = a.nrows();
    let shifted = a + DMatrix::identity(d, d) * ridge;
    match shifted.clone().cholesky() {
        Some(chol) => chol.solve(b),
        None => crate::linalg::pseudo_inverse(&shifted) * b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(weights: Vec<f64>) -> SampleDraw {
        SampleDraw {
            indices: (0..weights.len()).collect(),
            realized_size: weights.len(),
            weights,
            seed: 0,
        }
    }

    #[test]
    fn hajek_examples() {
        let w = hajek_normalize(&draw(vec![1.0; 4])).unwrap();
        assert_eq!(w, vec![0.25; 4]);
        let w = hajek_normalize(&draw(vec![2.0, 1.0])).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(hajek_normalize(&draw(vec![4.0])).unwrap(), vec![1.0]);
        assert!(matches!(hajek_normalize(&draw(vec![])), Err(Error::EmptySample)));
    }

    #[test]
    fn literal_normalizer_sums_over_population() {
        let design = SamplingDesign {
            pi: vec![0.5, 1.0, 0.5],
            m: 2.0,
            alpha: 0.5,
            scale: 1.0,
        };
        let d = SampleDraw {
            indices: vec![0],
            weights: vec![2.0],
            seed: 0,
            realized_size: 1,
        };
        let w = literal_normalize(&d, &design).unwrap();
        assert!((w[0] - 2.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn input_checks() {
        let x = DMatrix::from_element(2, 1, 1.0);
        let y = DVector::from_element(2, 1.0);
        assert!(check_inputs(&x, &y, &[1.0]).is_err());
        assert!(check_inputs(&x, &y, &[0.0, 0.0]).is_err());
        assert!(check_inputs(&x, &y, &[-1.0, 2.0]).is_err());
        assert!(check_inputs(&x, &y, &[0.0, 2.0]).is_ok());
    }
}
