use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{Report, ReportRow};
use crate::data::{self, Dataset, SplitSpec};
use crate::design::{allocate, floor_alpha, poisson_draw};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::fit::{fit_weighted, hajek_normalize, FitOptions, FitResult};
use crate::influence::{importance_scores, ImportanceScheme};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub coef_err_sq: f64,
    pub loss: f64,
}

/// Squared coefficient error against `reference`, and the mean per-row loss of
/// `fit` on `eval`.
pub fn evaluate(fit: &FitResult, reference: &FitResult, eval: &Dataset, family: Family) -> Result<Metrics> {
    if fit.theta.len() != reference.theta.len() || fit.theta.len() != eval.d() {
        return Err(Error::DimensionMismatch(format!(
            "fit has {} coefficients, reference {}, data {} columns",
            fit.theta.len(),
            reference.theta.len(),
            eval.d()
        )));
    }
    Ok(Metrics {
        coef_err_sq: (&fit.theta - &reference.theta).norm_squared(),
        loss: mean_loss(&fit.theta, eval, family),
    })
}

/// Mean family loss of `theta` over the rows of `ds`.
pub fn mean_loss(theta: &DVector<f64>, ds: &Dataset, family: Family) -> f64 {
    let eta = ds.x() * theta;
    eta.iter()
        .zip(ds.y().iter())
        .map(|(&e, &y)| family.loss(y, e))
        .sum::<f64>()
        / ds.n() as f64
}

/// Everything one replication needs, shared read-only across schemes and sizes.
struct Replication {
    index: usize,
    seed: u64,
    draw_seed: u64,
    pilot: Dataset,
    remainder: Dataset,
    holdout: Option<Dataset>,
    pilot_theta: DVector<f64>,
    reference: FitResult,
}

fn prepare(cfg: &ExperimentConfig, data: &Dataset, family: Family, opts: &FitOptions, index: usize) -> Result<Replication> {
    let seed = rng::derive_seed(cfg.seed, rng::TAG_REPLICATION, index as u64);
    let (work, holdout) = if cfg.holdout_fraction > 0.0 {
        let (rest, held) = data::split_holdout(data, cfg.holdout_fraction, seed)?;
        (rest, Some(held))
    } else {
        (data.clone(), None)
    };
    let (pilot, remainder) = data::split_pilot(
        &work,
        SplitSpec {
            pilot_fraction: cfg.pilot_fraction,
            seed,
        },
    )?;
    let pilot_fit = fit_weighted(pilot.x(), pilot.y(), &vec![1.0; pilot.n()], family, opts)?;
    let reference = fit_weighted(remainder.x(), remainder.y(), &vec![1.0; remainder.n()], family, opts)?;
    Ok(Replication {
        index,
        seed,
        draw_seed: rng::derive_seed(seed, rng::TAG_DRAW, 0),
        pilot,
        remainder,
        holdout,
        pilot_theta: pilot_fit.theta,
        reference,
    })
}

fn failed_row(base: &ReportRow) -> ReportRow {
    ReportRow {
        coef_err_sq: f64::NAN,
        loss: f64::NAN,
        fit_converged: false,
        ..base.clone()
    }
}

fn run_cell(
    rep: &Replication,
    scores: &[f64],
    m: f64,
    cfg: &ExperimentConfig,
    family: Family,
    opts: &FitOptions,
    base: ReportRow,
) -> ReportRow {
    let n = rep.remainder.n();
    let design = match allocate(scores, m, floor_alpha(cfg.floor_frac, m, n)) {
        Ok(d) => d,
        Err(_) => return failed_row(&base),
    };
    let draw = poisson_draw(&design, rep.draw_seed);
    let base = ReportRow {
        m_realized: draw.realized_size,
        ..base
    };
    let Ok(weights) = hajek_normalize(&draw) else {
        return failed_row(&base);
    };
    let Ok(sample) = rep.remainder.select_rows(&draw.indices) else {
        return failed_row(&base);
    };
    let fit = match fit_weighted(sample.x(), sample.y(), &weights, family, opts) {
        Ok(f) => f,
        Err(_) => return failed_row(&base),
    };
    let eval = rep.holdout.as_ref().unwrap_or(&rep.remainder);
    match evaluate(&fit, &rep.reference, eval, family) {
        Ok(metrics) => ReportRow {
            coef_err_sq: metrics.coef_err_sq,
            loss: metrics.loss,
            fit_converged: fit.converged,
            ..base
        },
        Err(_) => failed_row(&base),
    }
}

fn run_replication(
    rep: &Replication,
    schemes: &[ImportanceScheme],
    cfg: &ExperimentConfig,
    family: Family,
    opts: &FitOptions,
) -> Vec<(usize, usize, ReportRow)> {
    let mut rows = Vec::with_capacity(schemes.len() * cfg.sizes.len());
    for (si, scheme) in schemes.iter().enumerate() {
        let scores = importance_scores(&rep.remainder, scheme, family, &rep.pilot_theta, Some(&rep.pilot));
        for (mi, &m) in cfg.sizes.iter().enumerate() {
            let base = ReportRow {
                scheme: scheme.label(),
                model: family.to_string(),
                target: cfg.target.to_string(),
                m_expected: m,
                m_realized: 0,
                replication: rep.index,
                seed: rep.seed,
                coef_err_sq: f64::NAN,
                loss: f64::NAN,
                fit_converged: false,
            };
            let row = match &scores {
                Ok(s) => run_cell(rep, s, m, cfg, family, opts, base),
                Err(_) => failed_row(&base),
            };
            rows.push((si, mi, row));
        }
    }
    rows
}

/// Run the full sweep on an already loaded dataset.
///
/// Replications run in parallel; rows are ordered by (scheme, size,
/// replication). Within a replication every scheme and size draws from the
/// same per-row uniforms.
pub fn run_on(cfg: &ExperimentConfig, data: &Dataset) -> Result<Report> {
    cfg.validate()?;
    let family = cfg.family()?;
    family.validate_response(data.y().as_slice())?;
    let opts = FitOptions {
        exact: cfg.exact_fit,
        ..FitOptions::default()
    };
    let schemes = cfg.schemes();

    let reps: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| prepare(cfg, data, family, &opts, r))
        .collect::<Result<_>>()?;
    let mut rows: Vec<(usize, usize, ReportRow)> = reps
        .par_iter()
        .flat_map_iter(|rep| run_replication(rep, &schemes, cfg, family, &opts))
        .collect();
    rows.sort_by_key(|(si, mi, row)| (*si, *mi, row.replication));
    Ok(Report {
        rows: rows.into_iter().map(|(_, _, r)| r).collect(),
    })
}

/// Load the configured data source and run the sweep. Relative CSV paths are
/// resolved against `base_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Report> {
    cfg.validate()?;
    let data = cfg.data_source.load(base_dir)?;
    run_on(cfg, &data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::FitResult;
    use approx::assert_relative_eq;

    fn fit(theta: &[f64], family: Family) -> FitResult {
        FitResult {
            theta: DVector::from_column_slice(theta),
            family,
            converged: true,
            iterations: 1,
            final_gradient_norm: 0.0,
            objective: 0.0,
        }
    }

    #[test]
    fn evaluate_examples() {
        let eval = Dataset::from_rows(&[vec![1.0], vec![1.0]], &[2.0, 0.0]).unwrap();
        let reference = fit(&[1.0], Family::Ols);
        let m = evaluate(&reference, &reference, &eval, Family::Ols).unwrap();
        assert_eq!(m.coef_err_sq, 0.0);
        // residuals (1, -1)
        assert_relative_eq!(m.loss, 1.0, epsilon = 1e-15);

        let q = Family::Quantile { tau: 0.5 };
        let eval = Dataset::from_rows(&[vec![1.0], vec![1.0]], &[3.0, -1.0]).unwrap();
        let m = evaluate(&fit(&[1.0], q), &fit(&[0.0], q), &eval, q).unwrap();
        assert_relative_eq!(m.loss, 1.0, epsilon = 1e-15);
        assert_eq!(m.coef_err_sq, 1.0);

        assert!(evaluate(&fit(&[1.0, 2.0], Family::Ols), &reference, &eval, Family::Ols).is_err());
    }
}
