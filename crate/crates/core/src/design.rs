//! Regularized PPS inclusion probabilities and Poisson sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Tolerance on `sum(pi) - m` targeted by the bisection.
pub const SUM_TOLERANCE: f64 = 1e-12;
pub const MAX_BISECTION_STEPS: usize = 200;

/// Inclusion probabilities `pi_i = min(1, max(alpha, scale * size_i))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingDesign {
    pub pi: Vec<f64>,
    /// Expected sample size.
    pub m: f64,
    pub alpha: f64,
    /// The proportionality constant `c`.
    pub scale: f64,
}

impl SamplingDesign {
    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn expected_size(&self) -> f64 {
        self.pi.iter().sum()
    }
}

/// Floor probability tied to the average inclusion rate: `floor_frac * m / n`.
pub fn floor_alpha(floor_frac: f64, m: f64, n: usize) -> f64 {
    floor_frac * m / n as f64
}

fn probabilities(sizes: &[f64], scale: f64, alpha: f64) -> impl Iterator<Item = f64> + '_ {
    sizes.iter().map(move |&s| (scale * s).max(alpha).min(1.0))
}

fn total(sizes: &[f64], scale: f64, alpha: f64) -> f64 {
    probabilities(sizes, scale, alpha).sum()
}

/// Regularized PPS allocation with budget `m` and floor `alpha`.
///
/// The scale is found by bisection on `[0, n / min positive size]`, then
/// snapped to the closed form implied by the final capped/floored/free
/// partition when that partition is self-consistent.
pub fn allocate(sizes: &[f64], m: f64, alpha: f64) -> Result<SamplingDesign> {
    let n = sizes.len();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if let Some(bad) = sizes.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidArgument(format!("size {} at index {bad} is invalid", sizes[bad])));
    }
    if !(0.0..=1.0).contains(&alpha) || !m.is_finite() {
        return Err(Error::InfeasibleBudget { m, n, alpha });
    }
    let nf = n as f64;
    let slack = 1e-12 * nf;
    if m < nf * alpha - slack || m > nf + slack {
        return Err(Error::InfeasibleBudget { m, n, alpha });
    }

    let n_pos = sizes.iter().filter(|&&s| s > 0.0).count();
    if n_pos == 0 {
        return if alpha > 0.0 && (m - nf * alpha).abs() <= slack {
            Ok(SamplingDesign {
                pi: vec![alpha; n],
                m,
                alpha,
                scale: 0.0,
            })
        } else {
            Err(Error::DegenerateSizes)
        };
    }
    // zero sizes are pinned at alpha, so they cap what the budget can reach
    let reachable = n_pos as f64 + (n - n_pos) as f64 * alpha;
    if m > reachable + slack {
        return Err(Error::InfeasibleBudget { m, n, alpha });
    }

    let scale = if m <= nf * alpha {
        0.0
    } else {
        let min_pos = sizes.iter().copied().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
        let (mut lo, mut hi) = (0.0, nf / min_pos);
        let mut c = 0.5 * (lo + hi);
        for _ in 0..MAX_BISECTION_STEPS {
            c = 0.5 * (lo + hi);
            let s = total(sizes, c, alpha);
            if (s - m).abs() <= SUM_TOLERANCE {
                break;
            }
            if s < m {
                lo = c;
            } else {
                hi = c;
            }
        }
        refine_scale(sizes, m, alpha, c)
    };
    Ok(SamplingDesign {
        pi: probabilities(sizes, scale, alpha).collect(),
        m,
        alpha,
        scale,
    })
}

/// Solve the linear equation on the partition induced by `c`, if it stays valid.
fn refine_scale(sizes: &[f64], m: f64, alpha: f64, c: f64) -> f64 {
    let (mut capped, mut floored, mut free_mass) = (0usize, 0usize, 0.0);
    for &s in sizes {
        let p = c * s;
        if p >= 1.0 {
            capped += 1;
        } else if p <= alpha {
            floored += 1;
        } else {
            free_mass += s;
        }
    }
    if free_mass <= 0.0 {
        return c;
    }
    let exact = (m - capped as f64 - alpha * floored as f64) / free_mass;
    let consistent = sizes.iter().all(|&s| {
        let (p, q) = (c * s, exact * s);
        if p >= 1.0 {
            q >= 1.0 - 1e-12
        } else if p <= alpha {
            q <= alpha + 1e-12
        } else {
            q >= alpha - 1e-12 && q <= 1.0 + 1e-12
        }
    });
    let better = (total(sizes, exact, alpha) - m).abs() <= (total(sizes, c, alpha) - m).abs();
    if exact.is_finite() && exact >= 0.0 && consistent && better {
        exact
    } else {
        c
    }
}

/// Poisson sample: sampled row ids and their inverse-probability weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDraw {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub realized_size: usize,
}

/// Include row `i` iff `U_i < pi_i`, with `U_i` from the per-index stream of `seed`.
///
/// Since `U_i` depends only on `(seed, i)`, two designs drawn with the same seed
/// share their uniforms (common random numbers).
pub fn poisson_draw(design: &SamplingDesign, seed: u64) -> SampleDraw {
    let mut indices = Vec::new();
    let mut weights = Vec::new();
    for (i, &p) in design.pi.iter().enumerate() {
        if rng::uniform_at(seed, rng::TAG_POISSON, i as u64) < p {
            indices.push(i);
            weights.push(1.0 / p);
        }
    }
    let realized_size = indices.len();
    SampleDraw {
        indices,
        weights,
        seed,
        realized_size,
    }
}

/// `n^{-2} sum_i size_i^2 (1 - pi_i) / pi_i`: the variance of the
/// Horvitz-Thompson mean of `sizes` under the design.
pub fn design_variance(sizes: &[f64], design: &SamplingDesign) -> Result<f64> {
    variance_for(sizes, &design.pi)
}

/// [`design_variance`] for raw probabilities.
pub fn variance_for(sizes: &[f64], pi: &[f64]) -> Result<f64> {
    if sizes.len() != pi.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} sizes for {} probabilities",
            sizes.len(),
            pi.len()
        )));
    }
    let n = sizes.len() as f64;
    let mut acc = 0.0;
    for (i, (&s, &p)) in sizes.iter().zip(pi).enumerate() {
        if s == 0.0 {
            continue;
        }
        if p <= 0.0 {
            return Err(Error::ZeroProbabilityWithMass(i));
        }
        acc += s * s * (1.0 - p) / p;
    }
    Ok(acc / (n * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equal_sizes_split_budget() {
        let d = allocate(&[1.0; 4], 2.0, 0.1).unwrap();
        for p in &d.pi {
            assert_relative_eq!(*p, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn capped_and_floored() {
        let d = allocate(&[3.0, 1.0, 0.0], 2.0, 0.2).unwrap();
        assert_relative_eq!(d.pi[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(d.pi[1], 0.8, epsilon = 1e-12);
        assert_eq!(d.pi[2], 0.2);
        assert_relative_eq!(d.scale, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn budget_equals_population() {
        let d = allocate(&[5.0], 1.0, 0.1).unwrap();
        assert_eq!(d.pi, vec![1.0]);
    }

    #[test]
    fn budget_errors() {
        assert!(matches!(allocate(&[1.0, 1.0], 3.0, 0.1), Err(Error::InfeasibleBudget { .. })));
        assert!(matches!(allocate(&[1.0, 1.0], 0.1, 0.1), Err(Error::InfeasibleBudget { .. })));
        assert!(matches!(allocate(&[0.0, 0.0], 1.0, 0.1), Err(Error::DegenerateSizes)));
        assert!(matches!(allocate(&[0.0, 0.0], 0.0, 0.0), Err(Error::DegenerateSizes)));
        // zero-size points are held at alpha, so the full budget is unreachable
        assert!(matches!(allocate(&[1.0, 0.0], 2.0, 0.1), Err(Error::InfeasibleBudget { .. })));
        assert!(allocate(&[1.0, -1.0], 1.0, 0.1).is_err());
    }

    #[test]
    fn all_zero_at_floor_budget() {
        let d = allocate(&[0.0; 4], 0.4, 0.1).unwrap();
        assert_eq!(d.pi, vec![0.1; 4]);
    }

    #[test]
    fn floor_budget_gives_alpha_everywhere() {
        let d = allocate(&[1.0, 2.0, 3.0], 0.3, 0.1).unwrap();
        assert_eq!(d.pi, vec![0.1; 3]);
    }

    #[test]
    fn certain_inclusion() {
        let design = SamplingDesign {
            pi: vec![1.0; 3],
            m: 3.0,
            alpha: 0.1,
            scale: 1.0,
        };
        let draw = poisson_draw(&design, 99);
        assert_eq!(draw.indices, vec![0, 1, 2]);
        assert_eq!(draw.weights, vec![1.0; 3]);
        assert_eq!(draw.realized_size, 3);
    }

    #[test]
    fn near_zero_inclusion() {
        let design = SamplingDesign {
            pi: vec![1.0, 1e-9],
            m: 1.0,
            alpha: 1e-9,
            scale: 1.0,
        };
        for seed in 0..50 {
            if rng::uniform_at(seed, rng::TAG_POISSON, 1) >= 1e-9 {
                assert_eq!(poisson_draw(&design, seed).indices, vec![0]);
            }
        }
    }

    #[test]
    fn realized_size_concentrates() {
        let design = SamplingDesign {
            pi: vec![0.5; 10_000],
            m: 5000.0,
            alpha: 0.5,
            scale: 0.5,
        };
        for seed in 0..20 {
            let k = poisson_draw(&design, seed).realized_size as f64;
            assert!((k - 5000.0).abs() <= 200.0, "seed {seed}: {k}");
        }
    }

    #[test]
    fn design_variance_examples() {
        let census = SamplingDesign {
            pi: vec![1.0; 3],
            m: 3.0,
            alpha: 0.1,
            scale: 1.0,
        };
        assert_eq!(design_variance(&[1.0, 5.0, 2.0], &census).unwrap(), 0.0);
        assert_relative_eq!(variance_for(&[1.0, 2.0], &[0.5, 1.0]).unwrap(), 0.25, epsilon = 1e-15);
        let base = variance_for(&[1.0, 2.0, 3.0], &[0.3, 0.6, 0.9]).unwrap();
        let doubled = variance_for(&[2.0, 4.0, 6.0], &[0.3, 0.6, 0.9]).unwrap();
        assert_relative_eq!(doubled, 4.0 * base, max_relative = 1e-14);
        assert!(matches!(
            variance_for(&[1.0, 2.0], &[0.0, 1.0]),
            Err(Error::ZeroProbabilityWithMass(0))
        ));
        assert_eq!(variance_for(&[0.0, 2.0], &[0.0, 1.0]).unwrap(), 0.0);
    }
}
