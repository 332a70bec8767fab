//! Per-point influence vectors and the importance scores built from them.
//!
//! All second-moment inverses here are inverses of *mean* matrices such as
//! `X^T X / n` or `X^T W X / n`. Where the influence formula calls for the
//! unnormalized `(X^T W X)^{-1}`, the mean inverse is divided by the number of
//! rows being scored, which lets a pilot-sample estimate stand in for the
//! full-data matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{rho, Family};
use crate::linalg::{self, hat_diagonal, mul_row, quad_form_row, second_moment, InverseMode, SecondMoment};

/// What the influence is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    Coefficients,
    Predictions,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Coefficients => "coefficients",
            Target::Predictions => "predictions",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coefficients" | "coef" => Ok(Target::Coefficients),
            "predictions" | "pred" => Ok(Target::Predictions),
            other => Err(Error::InvalidArgument(format!("unknown target `{other}`"))),
        }
    }
}

/// Per-point influence. `vectors` is present for the coefficient target only.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceSet {
    pub vectors: Option<DMatrix<f64>>,
    pub norms: Vec<f64>,
    pub target: Target,
}

impl InfluenceSet {
    fn from_vectors(vectors: DMatrix<f64>) -> Self {
        let norms = (0..vectors.nrows()).map(|i| vectors.row(i).norm()).collect();
        Self {
            vectors: Some(vectors),
            norms,
            target: Target::Coefficients,
        }
    }

    fn from_norms(norms: Vec<f64>) -> Self {
        Self {
            vectors: None,
            norms,
            target: Target::Predictions,
        }
    }

    /// `(1/n) sum_i psi_i`, when vectors are present.
    pub fn mean_vector(&self) -> Option<DVector<f64>> {
        self.vectors.as_ref().map(|v| v.row_sum().transpose() / v.nrows() as f64)
    }
}

fn check_theta(ds: &Dataset, theta: &DVector<f64>) -> Result<()> {
    if theta.len() != ds.d() {
        return Err(Error::DimensionMismatch(format!(
            "theta has {} entries for {} predictors",
            theta.len(),
            ds.d()
        )));
    }
    Ok(())
}

fn check_square(m: &DMatrix<f64>, d: usize, what: &str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {d}x{d}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Residuals `y - mean(x^T theta)`, plus the variance function at each point.
fn residuals_and_variances(ds: &Dataset, theta: &DVector<f64>, family: Family) -> (Vec<f64>, Vec<f64>) {
    let eta = ds.x() * theta;
    eta.iter()
        .zip(ds.y().iter())
        .map(|(&e, &y)| {
            let mu = family.mean(e);
            (y - mu, family.variance(mu))
        })
        .unzip()
}

/// Rows `factor_i * S x_i`.
fn scaled_rows(x: &DMatrix<f64>, s: &DMatrix<f64>, factors: &[f64]) -> DMatrix<f64> {
    let mut out = x * s;
    for (i, &f) in factors.iter().enumerate() {
        out.row_mut(i).scale_mut(f);
    }
    out
}

/// `|factor_i| sqrt(x_i^T S x_i / n)`: the prediction-influence norm when the
/// hat matrix is symmetric, with `S / n` standing in for `(X^T X)^{-1}`.
fn symmetric_prediction_norms(x: &DMatrix<f64>, s: &DMatrix<f64>, factors: &[f64]) -> Vec<f64> {
    let n = x.nrows() as f64;
    factors
        .iter()
        .enumerate()
        .map(|(i, f)| f.abs() * (quad_form_row(s, x, i).max(0.0) / n).sqrt())
        .collect()
}

/// Influence for least squares: `psi_i = r_i S x_i` with `S` the inverse mean
/// second moment; the prediction target uses `|r_i| sqrt(H_ii)`.
pub fn influence_ols(
    ds: &Dataset,
    theta: &DVector<f64>,
    sigma_inv: &DMatrix<f64>,
    target: Target,
) -> Result<InfluenceSet> {
    check_theta(ds, theta)?;
    check_square(sigma_inv, ds.d(), "sigma_inv")?;
    let (r, _) = residuals_and_variances(ds, theta, Family::Ols);
    Ok(match target {
        Target::Coefficients => InfluenceSet::from_vectors(scaled_rows(ds.x(), sigma_inv, &r)),
        Target::Predictions => InfluenceSet::from_norms(symmetric_prediction_norms(ds.x(), sigma_inv, &r)),
    })
}

/// Influence for quantile regression: the least-squares form with the residual
/// replaced by `rho(r_i) / (tau (1 - tau))`.
pub fn influence_quantile(
    ds: &Dataset,
    theta: &DVector<f64>,
    tau: f64,
    sigma_inv: &DMatrix<f64>,
    target: Target,
) -> Result<InfluenceSet> {
    Family::quantile(tau)?;
    check_theta(ds, theta)?;
    check_square(sigma_inv, ds.d(), "sigma_inv")?;
    let (r, _) = residuals_and_variances(ds, theta, Family::Ols);
    let scale = 1.0 / (tau * (1.0 - tau));
    let factors: Vec<f64> = r.iter().map(|&ri| scale * rho(ri, tau)).collect();
    Ok(match target {
        Target::Coefficients => InfluenceSet::from_vectors(scaled_rows(ds.x(), sigma_inv, &factors)),
        Target::Predictions => {
            InfluenceSet::from_norms(symmetric_prediction_norms(ds.x(), sigma_inv, &factors))
        }
    })
}

/// Inverse of the mean curvature matrix for `family` at `theta` over `src`:
/// `(X^T X / n)^{-1}` for OLS and quantile, `(X^T W X / n)^{-1}` with
/// `W = diag(Var(y_i))` for GLMs.
pub fn curvature_inverse(
    src: &Dataset,
    family: Family,
    theta: &DVector<f64>,
    mode: InverseMode,
) -> Result<DMatrix<f64>> {
    check_theta(src, theta)?;
    let m = if family.is_glm() {
        let (_, v) = residuals_and_variances(src, theta, family);
        second_moment(src.x(), Some(&v))?
    } else {
        second_moment(src.x(), None)?
    };
    Ok(mode.invert(&m))
}

/// Influence for logistic and Poisson regression.
///
/// Coefficients: `psi_i = (y_i - yhat_i) (X^T W X)^{-1} x_i`. Predictions: the
/// norm of `r_i H_{i.}` with `H = X (X^T W X)^{-1} X^T W`. Since `H` is not
/// symmetric, the norm is computed as `|r_i| sqrt(a_i^T G a_i)` with
/// `a_i = (X^T W X)^{-1} x_i` and `G = sum_j W_jj^2 x_j x_j^T`, so `H` is never
/// formed.
///
/// `fisher_inv` is an inverse mean information matrix (see
/// [`curvature_inverse`]); when absent it is computed from `ds` with `mode`.
pub fn influence_glm(
    ds: &Dataset,
    theta: &DVector<f64>,
    family: Family,
    target: Target,
    fisher_inv: Option<&DMatrix<f64>>,
    mode: InverseMode,
) -> Result<InfluenceSet> {
    if !family.is_glm() {
        return Err(Error::InvalidArgument(format!("{family} is not a GLM family")));
    }
    check_theta(ds, theta)?;
    family.validate_response(ds.y().as_slice())?;
    let computed;
    let fisher_inv = match fisher_inv {
        Some(f) => {
            check_square(f, ds.d(), "fisher_inv")?;
            f
        }
        None => {
            computed = curvature_inverse(ds, family, theta, mode)?;
            &computed
        }
    };
    let (r, v) = residuals_and_variances(ds, theta, family);
    let n = ds.n() as f64;
    let a = fisher_inv / n;
    Ok(match target {
        Target::Coefficients => InfluenceSet::from_vectors(scaled_rows(ds.x(), &a, &r)),
        Target::Predictions => {
            let v2: Vec<f64> = v.iter().map(|vi| vi * vi).collect();
            let g = second_moment(ds.x(), Some(&v2))?.into_inner() * n;
            let norms = r
                .iter()
                .enumerate()
                .map(|(i, ri)| {
                    let ai = mul_row(&a, ds.x(), i);
                    ri.abs() * (ai.dot(&(&g * &ai))).max(0.0).sqrt()
                })
                .collect();
            InfluenceSet::from_norms(norms)
        }
    })
}

/// Rescaled score: `V^{-1} s_i` with `s_i = (y_i - yhat_i) x_i` and `V` the
/// streamed second moment of the scores at the pilot estimate.
pub fn influence_from_score(
    ds: &Dataset,
    family: Family,
    pilot_theta: &DVector<f64>,
    mode: InverseMode,
) -> Result<InfluenceSet> {
    if let Family::Quantile { .. } = family {
        return Err(Error::IncompatibleScheme {
            scheme: SchemeKind::ScoreRescaled.to_string(),
            family: family.to_string(),
        });
    }
    check_theta(ds, pilot_theta)?;
    family.validate_response(ds.y().as_slice())?;
    let (r, _) = residuals_and_variances(ds, pilot_theta, family);
    let d = ds.d();
    let mut scores = ds.x().clone();
    for (i, &ri) in r.iter().enumerate() {
        scores.row_mut(i).scale_mut(ri);
    }
    let mut acc = SecondMoment::new(d);
    let mut buf = vec![0.0; d];
    for i in 0..ds.n() {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = scores[(i, j)];
        }
        acc.push(&buf, 1.0)?;
    }
    let v_inv = mode.invert(&acc.finish()?);
    Ok(InfluenceSet::from_vectors(scores * v_inv))
}

/// Importance measure used as the PPS size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    InfluenceCoef,
    InfluencePred,
    ScoreRescaled,
    Residual,
    SquaredResidual,
    Gradient,
    Leverage,
    RootLeverage,
    LocalCaseControl,
    Uniform,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 10] = [
        SchemeKind::InfluenceCoef,
        SchemeKind::InfluencePred,
        SchemeKind::ScoreRescaled,
        SchemeKind::Residual,
        SchemeKind::SquaredResidual,
        SchemeKind::Gradient,
        SchemeKind::Leverage,
        SchemeKind::RootLeverage,
        SchemeKind::LocalCaseControl,
        SchemeKind::Uniform,
    ];

    /// Stable CLI name.
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::InfluenceCoef => "influence-coef",
            SchemeKind::InfluencePred => "influence-pred",
            SchemeKind::ScoreRescaled => "score-rescaled",
            SchemeKind::Residual => "residual",
            SchemeKind::SquaredResidual => "squared-residual",
            SchemeKind::Gradient => "gradient",
            SchemeKind::Leverage => "leverage",
            SchemeKind::RootLeverage => "root-leverage",
            SchemeKind::LocalCaseControl => "lcc",
            SchemeKind::Uniform => "uniform",
        }
    }

    fn check_family(&self, family: Family) -> Result<()> {
        let ok = match self {
            SchemeKind::LocalCaseControl => family == Family::Logistic,
            SchemeKind::ScoreRescaled => !matches!(family, Family::Quantile { .. }),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatibleScheme {
                scheme: self.name().to_string(),
                family: family.to_string(),
            })
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme `{s}`")))
    }
}

impl Serialize for SchemeKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for SchemeKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Where the curvature matrix behind influence and leverage comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    /// Pilot sample only (single pass over the data being scored).
    #[default]
    Pilot,
    /// The data being scored.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeOptions {
    /// Jacobi approximation of the inverse.
    pub diagonal_only: bool,
    pub sigma_source: SigmaSource,
    /// Exact inverses and leverages on the scored data (overrides the other two).
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportanceScheme {
    pub kind: SchemeKind,
    #[serde(flatten)]
    pub options: SchemeOptions,
}

impl ImportanceScheme {
    pub fn new(kind: SchemeKind) -> Self {
        Self {
            kind,
            options: SchemeOptions::default(),
        }
    }

    pub fn inverse_mode(&self) -> InverseMode {
        if self.options.exact {
            InverseMode::Exact
        } else if self.options.diagonal_only {
            InverseMode::Jacobi
        } else {
            InverseMode::Regularized
        }
    }

    /// Report label: the scheme name plus any non-default options.
    pub fn label(&self) -> String {
        let mut s = self.kind.name().to_string();
        if self.options.exact {
            s.push_str("+exact");
        } else {
            if self.options.diagonal_only {
                s.push_str("+jacobi");
            }
            if self.options.sigma_source == SigmaSource::Full {
                s.push_str("+full-sigma");
            }
        }
        s
    }
}

impl From<SchemeKind> for ImportanceScheme {
    fn from(kind: SchemeKind) -> Self {
        Self::new(kind)
    }
}

/// Nonnegative PPS sizes for every row of `ds` under `scheme`.
///
/// `theta` is the pilot estimate. When the scheme asks for a pilot-sourced
/// curvature and `pilot` is given, inverses come from the pilot rows;
/// otherwise they are computed on `ds`.
pub fn importance_scores(
    ds: &Dataset,
    scheme: &ImportanceScheme,
    family: Family,
    theta: &DVector<f64>,
    pilot: Option<&Dataset>,
) -> Result<Vec<f64>> {
    scheme.kind.check_family(family)?;
    check_theta(ds, theta)?;
    family.validate_response(ds.y().as_slice())?;
    let mode = scheme.inverse_mode();
    let curvature_src = match (scheme.options.sigma_source, pilot, scheme.options.exact) {
        (SigmaSource::Pilot, Some(p), false) => p,
        _ => ds,
    };
    let curvature = || curvature_inverse(curvature_src, family, theta, mode);
    let (r, v) = residuals_and_variances(ds, theta, family);

    let sizes = match scheme.kind {
        SchemeKind::Uniform => vec![1.0; ds.n()],
        SchemeKind::Residual | SchemeKind::LocalCaseControl => match family {
            Family::Quantile { tau } => r.iter().map(|&ri| rho(ri, tau)).collect(),
            _ => r.iter().map(|ri| ri.abs()).collect(),
        },
        SchemeKind::SquaredResidual => r.iter().map(|ri| ri * ri).collect(),
        SchemeKind::Gradient => {
            let factors: Vec<f64> = match family {
                Family::Quantile { tau } => r.iter().map(|&ri| rho(ri, tau)).collect(),
                _ => r.iter().map(|ri| ri.abs()).collect(),
            };
            factors
                .iter()
                .enumerate()
                .map(|(i, f)| f * ds.x().row(i).norm())
                .collect()
        }
        SchemeKind::Leverage | SchemeKind::RootLeverage => {
            let weights = family.is_glm().then_some(v.as_slice());
            let h = if scheme.options.exact {
                hat_diagonal(ds.x(), weights, true)?
            } else {
                let a = curvature()? / ds.n() as f64;
                (0..ds.n())
                    .map(|i| weights.map_or(1.0, |w| w[i]) * quad_form_row(&a, ds.x(), i).max(0.0))
                    .collect()
            };
            if scheme.kind == SchemeKind::RootLeverage {
                h.into_iter().map(f64::sqrt).collect()
            } else {
                h
            }
        }
        SchemeKind::InfluenceCoef | SchemeKind::InfluencePred => {
            let target = if scheme.kind == SchemeKind::InfluenceCoef {
                Target::Coefficients
            } else {
                Target::Predictions
            };
            let inv = curvature()?;
            let set = match family {
                Family::Ols => influence_ols(ds, theta, &inv, target)?,
                Family::Quantile { tau } => influence_quantile(ds, theta, tau, &inv, target)?,
                Family::Logistic | Family::Poisson => influence_glm(ds, theta, family, target, Some(&inv), mode)?,
            };
            set.norms
        }
        SchemeKind::ScoreRescaled => influence_from_score(ds, family, theta, mode)?.norms,
    };
    debug_assert_eq!(sizes.len(), ds.n());
    if let Some(bad) = sizes.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "scheme {} produced an invalid size {} at row {bad}",
            scheme.kind, sizes[bad]
        )));
    }
    Ok(sizes)
}

/// Exact inverse of `X^T X / n`, convenient for exact-mode OLS influence.
pub fn exact_sigma_inverse(ds: &Dataset) -> Result<DMatrix<f64>> {
    Ok(linalg::exact_inverse(&second_moment(ds.x(), None)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ds(rows: &[Vec<f64>], y: &[f64]) -> Dataset {
        Dataset::from_rows(rows, y).unwrap()
    }

    fn m1(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn ols_coefficient_example() {
        let d = ds(&[vec![1.0], vec![1.0]], &[0.0, 2.0]);
        let set = influence_ols(&d, &DVector::from_element(1, 1.0), &m1(1.0), Target::Coefficients).unwrap();
        let v = set.vectors.unwrap();
        assert_eq!(v[(0, 0)], -1.0);
        assert_eq!(v[(1, 0)], 1.0);
        assert_eq!(set.norms, vec![1.0, 1.0]);
    }

    #[test]
    fn ols_zero_residuals_give_zero_influence() {
        let d = ds(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]], &[5.0, 1.0, 1.5]);
        let theta = DVector::from_column_slice(&[1.0, 2.0]);
        let s = exact_sigma_inverse(&d).unwrap();
        for target in [Target::Coefficients, Target::Predictions] {
            let set = influence_ols(&d, &theta, &s, target).unwrap();
            assert!(set.norms.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn ols_prediction_example() {
        let d = ds(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[2.0, 0.0]);
        let s = exact_sigma_inverse(&d).unwrap();
        let set = influence_ols(&d, &DVector::zeros(2), &s, Target::Predictions).unwrap();
        assert!(set.vectors.is_none());
        assert_relative_eq!(set.norms[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(set.norms[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ols_dimension_errors() {
        let d = ds(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[2.0, 0.0]);
        assert!(influence_ols(&d, &DVector::zeros(1), &DMatrix::identity(2, 2), Target::Coefficients).is_err());
        assert!(influence_ols(&d, &DVector::zeros(2), &DMatrix::identity(3, 3), Target::Coefficients).is_err());
    }

    #[test]
    fn glm_logistic_intercept_example() {
        let d = ds(&[vec![1.0], vec![1.0]], &[1.0, 0.0]);
        let set = influence_glm(
            &d,
            &DVector::zeros(1),
            Family::Logistic,
            Target::Coefficients,
            None,
            InverseMode::Exact,
        )
        .unwrap();
        let v = set.vectors.unwrap();
        assert_relative_eq!(v[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(v[(1, 0)], -1.0, epsilon = 1e-12);
        assert_relative_eq!(set.norms[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn glm_poisson_zero_residual() {
        let d = ds(&[vec![1.0]], &[1.0]);
        let set = influence_glm(
            &d,
            &DVector::zeros(1),
            Family::Poisson,
            Target::Coefficients,
            None,
            InverseMode::Regularized,
        )
        .unwrap();
        assert_eq!(set.norms, vec![0.0]);
    }

    #[test]
    fn glm_rejects_bad_inputs() {
        let d = ds(&[vec![1.0], vec![1.0]], &[2.0, 0.0]);
        let theta = DVector::zeros(1);
        assert!(matches!(
            influence_glm(&d, &theta, Family::Logistic, Target::Coefficients, None, InverseMode::Exact),
            Err(Error::InvalidResponse(_))
        ));
        assert!(influence_glm(&d, &theta, Family::Ols, Target::Coefficients, None, InverseMode::Exact).is_err());
    }

    #[test]
    fn glm_prediction_norms_match_explicit_hat_matrix() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64 / 11.0;
                vec![1.0, 2.0 * t - 1.0, (3.0 * t).sin()]
            })
            .collect();
        let y: Vec<f64> = (0..12).map(|i| f64::from(i % 3 == 0)).collect();
        let d = ds(&rows, &y);
        let theta = DVector::from_column_slice(&[0.2, -0.5, 0.3]);
        let set = influence_glm(&d, &theta, Family::Logistic, Target::Predictions, None, InverseMode::Exact).unwrap();

        // H = X (X^T W X)^{-1} X^T W, formed densely
        let x = d.x();
        let eta = x * &theta;
        let mu: Vec<f64> = eta.iter().map(|&e| Family::Logistic.mean(e)).collect();
        let w = DMatrix::from_diagonal(&DVector::from_iterator(12, mu.iter().map(|m| m * (1.0 - m))));
        let info = x.transpose() * &w * x;
        let h = x * info.try_inverse().unwrap() * x.transpose() * &w;
        for i in 0..12 {
            let expected = (y[i] - mu[i]).abs() * h.row(i).norm();
            assert_relative_eq!(set.norms[i], expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn quantile_examples() {
        let d = ds(&[vec![1.0], vec![1.0]], &[-1.0, 1.0]);
        let set = influence_quantile(&d, &DVector::zeros(1), 0.5, &m1(1.0), Target::Coefficients).unwrap();
        // 1 / (0.5 * 0.5) * rho = 4 * 0.5
        assert_relative_eq!(set.norms[0], 2.0, epsilon = 1e-15);
        assert_relative_eq!(set.norms[1], 2.0, epsilon = 1e-15);

        // median: sizes depend only on ||S x||, scaled by 2
        let d = ds(&[vec![1.0], vec![3.0]], &[-2.0, 3.0]);
        let set = influence_quantile(&d, &DVector::zeros(1), 0.5, &m1(1.0), Target::Coefficients).unwrap();
        assert_relative_eq!(set.norms[0], 2.0 * 1.0, epsilon = 1e-15);
        assert_relative_eq!(set.norms[1], 2.0 * 3.0, epsilon = 1e-15);

        // tau = 0.9: ratio of positive to negative residual sizes is 9
        let d = ds(&[vec![1.0], vec![1.0]], &[-1.0, 1.0]);
        let set = influence_quantile(&d, &DVector::zeros(1), 0.9, &m1(1.0), Target::Coefficients).unwrap();
        assert_relative_eq!(set.norms[1] / set.norms[0], 9.0, max_relative = 1e-12);

        assert!(influence_quantile(&d, &DVector::zeros(1), 1.5, &m1(1.0), Target::Coefficients).is_err());
    }

    #[test]
    fn score_rescaled_example() {
        let d = ds(&[vec![1.0], vec![1.0]], &[0.0, 2.0]);
        let set = influence_from_score(&d, Family::Ols, &DVector::from_element(1, 1.0), InverseMode::Exact).unwrap();
        let v = set.vectors.unwrap();
        assert_relative_eq!(v[(0, 0)], -1.0, epsilon = 1e-12);
        assert_relative_eq!(v[(1, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn score_rescaled_zero_scores() {
        let d = ds(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![1.0, 1.0]], &[5.0, 4.0, 3.0]);
        let theta = DVector::from_column_slice(&[1.0, 2.0]);
        for mode in [InverseMode::Regularized, InverseMode::Exact] {
            let set = influence_from_score(&d, Family::Ols, &theta, mode).unwrap();
            assert!(set.norms.iter().all(|&x| x == 0.0));
        }
        assert!(matches!(
            influence_from_score(&d, Family::Quantile { tau: 0.5 }, &theta, InverseMode::Exact),
            Err(Error::IncompatibleScheme { .. })
        ));
    }

    #[test]
    fn scheme_names_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.name().parse::<SchemeKind>().unwrap(), k);
        }
        assert!("bogus".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn local_case_control_example() {
        // p-hat = 0.9 at eta = logit(0.9)
        let eta = (0.9f64 / 0.1).ln();
        let d = ds(&[vec![1.0], vec![1.0]], &[1.0, 0.0]);
        let theta = DVector::from_element(1, eta);
        let lcc = importance_scores(&d, &SchemeKind::LocalCaseControl.into(), Family::Logistic, &theta, None).unwrap();
        assert_relative_eq!(lcc[0], 0.1, epsilon = 1e-12);
        assert_relative_eq!(lcc[1], 0.9, epsilon = 1e-12);
        // surprise y (1 - p) + (1 - y) p
        for (i, &y) in [1.0, 0.0].iter().enumerate() {
            let p = 0.9;
            assert_relative_eq!(lcc[i], y * (1.0 - p) + (1.0 - y) * p, epsilon = 1e-12);
        }
    }

    #[test]
    fn incompatible_schemes() {
        let d = ds(&[vec![1.0], vec![1.0]], &[1.0, 0.0]);
        let theta = DVector::zeros(1);
        assert!(matches!(
            importance_scores(&d, &SchemeKind::LocalCaseControl.into(), Family::Ols, &theta, None),
            Err(Error::IncompatibleScheme { .. })
        ));
        assert!(matches!(
            importance_scores(
                &d,
                &SchemeKind::ScoreRescaled.into(),
                Family::Quantile { tau: 0.3 },
                &theta,
                None
            ),
            Err(Error::IncompatibleScheme { .. })
        ));
    }

    #[test]
    fn simple_schemes() {
        let d = ds(&[vec![3.0, 4.0], vec![1.0, 0.0]], &[2.0, -3.0]);
        let theta = DVector::zeros(2);
        let get = |k: SchemeKind| importance_scores(&d, &k.into(), Family::Ols, &theta, None).unwrap();
        assert_eq!(get(SchemeKind::Uniform), vec![1.0, 1.0]);
        assert_eq!(get(SchemeKind::Residual), vec![2.0, 3.0]);
        assert_eq!(get(SchemeKind::SquaredResidual), vec![4.0, 9.0]);
        assert_eq!(get(SchemeKind::Gradient), vec![10.0, 3.0]);
        let exact = ImportanceScheme {
            kind: SchemeKind::Leverage,
            options: SchemeOptions { exact: true, ..Default::default() },
        };
        let h = importance_scores(&d, &exact, Family::Ols, &theta, None).unwrap();
        assert_relative_eq!(h[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(h[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn labels() {
        let mut s = ImportanceScheme::new(SchemeKind::InfluenceCoef);
        assert_eq!(s.label(), "influence-coef");
        s.options.diagonal_only = true;
        assert_eq!(s.label(), "influence-coef+jacobi");
        s.options.exact = true;
        assert_eq!(s.label(), "influence-coef+exact");
    }
}
