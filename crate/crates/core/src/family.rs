//! Model families and their per-observation quantities.

use std::fmt;

use crate::error::{Error, Result};

/// Linear predictors are clamped to this range before exponentiation.
pub const ETA_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Ols,
    Logistic,
    Poisson,
    Quantile { tau: f64 },
}

impl Family {
    pub fn quantile(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(Family::Quantile { tau })
        } else {
            Err(Error::InvalidArgument(format!("quantile level {tau} not in (0, 1)")))
        }
    }

    /// Parse a CLI model name; `quantile` requires `tau`.
    pub fn parse(name: &str, tau: Option<f64>) -> Result<Self> {
        match name {
            "ols" => Ok(Family::Ols),
            "logistic" => Ok(Family::Logistic),
            "poisson" => Ok(Family::Poisson),
            "quantile" => Family::quantile(
                tau.ok_or_else(|| Error::InvalidArgument("quantile model needs --tau".into()))?,
            ),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Ols => "ols",
            Family::Logistic => "logistic",
            Family::Poisson => "poisson",
            Family::Quantile { .. } => "quantile",
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match self {
            Family::Quantile { tau } => Some(*tau),
            _ => None,
        }
    }

    pub fn is_glm(&self) -> bool {
        matches!(self, Family::Logistic | Family::Poisson)
    }

    /// Conditional mean `A'(eta)`; identity for OLS and quantile.
    pub fn mean(&self, eta: f64) -> f64 {
        match self {
            Family::Logistic => sigmoid(clamp_eta(eta)),
            Family::Poisson => clamp_eta(eta).exp(),
            Family::Ols | Family::Quantile { .. } => eta,
        }
    }

    /// Variance function `A''(eta)` evaluated at the mean.
    pub fn variance(&self, mu: f64) -> f64 {
        match self {
            Family::Logistic => mu * (1.0 - mu),
            Family::Poisson => mu,
            Family::Ols | Family::Quantile { .. } => 1.0,
        }
    }

    /// Per-observation loss at linear predictor `eta`.
    ///
    /// OLS: squared residual. GLMs: negative log-likelihood `A(eta) - y eta`
    /// (without the `log y!` constant for Poisson). Quantile: check loss.
    pub fn loss(&self, y: f64, eta: f64) -> f64 {
        match self {
            Family::Ols => (y - eta).powi(2),
            Family::Logistic => {
                let e = clamp_eta(eta);
                softplus(e) - y * e
            }
            Family::Poisson => {
                let e = clamp_eta(eta);
                e.exp() - y * e
            }
            Family::Quantile { tau } => check_loss(y - eta, *tau),
        }
    }

    pub fn validate_response(&self, y: &[f64]) -> Result<()> {
        match self {
            Family::Logistic => {
                if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
                    return Err(Error::InvalidResponse(format!("logistic response {v} not in {{0, 1}}")));
                }
            }
            Family::Poisson => {
                if let Some(v) = y.iter().find(|&&v| v < 0.0) {
                    return Err(Error::InvalidResponse(format!("poisson response {v} is negative")));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Quantile { tau } => write!(f, "quantile({tau})"),
            other => f.write_str(other.name()),
        }
    }
}

#[inline]
pub fn clamp_eta(eta: f64) -> f64 {
    eta.clamp(-ETA_CLAMP, ETA_CLAMP)
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
#[inline]
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Nonnegative check loss: `(1 - tau)(-r)` for `r < 0`, `tau r` otherwise.
#[inline]
pub fn check_loss(r: f64, tau: f64) -> f64 {
    if r < 0.0 {
        (tau - 1.0) * r
    } else {
        tau * r
    }
}

/// Subgradient magnitude of the check loss: `1 - tau` below zero, `tau` at or above.
#[inline]
pub fn rho(r: f64, tau: f64) -> f64 {
    if r < 0.0 {
        1.0 - tau
    } else {
        tau
    }
}
