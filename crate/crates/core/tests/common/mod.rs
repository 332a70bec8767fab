//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use infsample::rng;

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact allocation by sorting breakpoints and solving the piecewise-linear
/// budget equation on the segment that contains `m`.
pub fn waterfill_oracle(sizes: &[f64], m: f64, alpha: f64) -> Vec<f64> {
    let total = |c: f64| -> f64 {
        sizes
            .iter()
            .map(|&s| if s > 0.0 { (c * s).clamp(alpha, 1.0) } else { alpha })
            .sum()
    };
    let mut breaks: Vec<f64> = sizes
        .iter()
        .filter(|&&s| s > 0.0)
        .flat_map(|&s| [alpha / s, 1.0 / s])
        .collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut c = *breaks.last().unwrap();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (flo, fhi) = (total(lo), total(hi));
        if fhi >= m {
            if m <= flo {
                c = lo;
            } else {
                // classify at the midpoint; no breakpoint lies strictly inside
                let mid = 0.5 * (lo + hi);
                let mut fixed = 0.0;
                let mut slope = 0.0;
                for &s in sizes {
                    if s <= 0.0 || s * mid <= alpha {
                        fixed += alpha;
                    } else if s * mid >= 1.0 {
                        fixed += 1.0;
                    } else {
                        slope += s;
                    }
                }
                c = (m - fixed) / slope;
            }
            break;
        }
    }
    sizes
        .iter()
        .map(|&s| if s > 0.0 { (c * s).clamp(alpha, 1.0) } else { alpha })
        .collect()
}

/// A random allocation instance: sizes with ties and zeros, a feasible budget
/// and `alpha = beta * m / n`.
pub struct Instance {
    pub sizes: Vec<f64>,
    pub m: f64,
    pub alpha: f64,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> Instance {
    let n = rng.random_range(1..=max_n);
    let mut sizes: Vec<f64> = (0..n)
        .map(|_| match rng.random_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            2..=4 => rng.random::<f64>(),
            _ => (rng.random::<f64>() * 6.0 - 3.0).exp(),
        })
        .collect();
    if sizes.iter().all(|&s| s == 0.0) {
        sizes[0] = 1.0;
    }
    let n_pos = sizes.iter().filter(|&&s| s > 0.0).count() as f64;
    let n0 = n as f64 - n_pos;
    let beta = rng.random::<f64>() * 0.5;
    // m (1 - n0 beta / n) <= n_pos keeps the budget reachable
    let m_max = n_pos / (1.0 - n0 * beta / n as f64);
    let m = (0.01 + 0.98 * rng.random::<f64>()) * m_max.min(n as f64);
    Instance {
        sizes,
        m,
        alpha: beta * m / n as f64,
    }
}

/// A random design in the box `[alpha, 1]^n` with `sum = m`: a random point
/// shifted along the diagonal until the clipped sum hits `m`.
pub fn random_feasible(rng: &mut ChaCha8Rng, n: usize, m: f64, alpha: f64) -> Vec<f64> {
    let spread = rng.random::<f64>();
    let base: Vec<f64> = (0..n).map(|_| alpha + (1.0 - alpha) * spread * rng.random::<f64>()).collect();
    let total = |t: f64| base.iter().map(|b| (b + t).clamp(alpha, 1.0)).sum::<f64>();
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut pi: Vec<f64> = base.iter().map(|b| (b + hi).clamp(alpha, 1.0)).collect();
    // push the rounding residue onto an interior coordinate
    let err = m - pi.iter().sum::<f64>();
    if let Some(k) = pi.iter().position(|&p| p + err > alpha && p + err < 1.0 && p > alpha && p < 1.0) {
        pi[k] += err;
    }
    pi
}

/// Move mass `delta` from coordinate `j` to `i`, staying inside the box.
pub fn perturbed(pi: &[f64], i: usize, j: usize, delta: f64, alpha: f64) -> Option<Vec<f64>> {
    let mut q = pi.to_vec();
    q[i] += delta;
    q[j] -= delta;
    (q[i] <= 1.0 && q[j] >= alpha && i != j).then_some(q)
}

/// Monte Carlo mean and variance of the HT total `sum_i v_i Z_i / pi_i`
/// (vector-valued `v` rows; the variance is the trace of the covariance).
pub fn ht_moments(values: &DMatrix<f64>, pi: &[f64], draws: usize, seed: u64) -> (DVector<f64>, f64) {
    let d = values.ncols();
    let n = values.nrows();
    let chunks = 64;
    let per = draws.div_ceil(chunks);
    let partial: Vec<(DVector<f64>, DVector<f64>, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = DVector::zeros(d);
            let mut sq = DVector::zeros(d);
            let mut count = 0;
            let mut t = DVector::zeros(d);
            for k in (c * per)..((c + 1) * per).min(draws) {
                let s = rng::derive_seed(seed, "mc", k as u64);
                t.fill(0.0);
                for i in 0..n {
                    if rng::uniform_at(s, rng::TAG_POISSON, i as u64) < pi[i] {
                        for j in 0..d {
                            t[j] += values[(i, j)] / pi[i];
                        }
                    }
                }
                sum += &t;
                sq += t.component_mul(&t);
                count += 1;
            }
            (sum, sq, count)
        })
        .collect();
    let mut sum = DVector::zeros(d);
    let mut sq = DVector::zeros(d);
    let mut count = 0;
    for (a, b, c) in partial {
        sum += a;
        sq += b;
        count += c;
    }
    let k = count as f64;
    let mean = &sum / k;
    let var = (0..d).map(|j| (sq[j] - k * mean[j] * mean[j]) / (k - 1.0)).sum();
    (mean, var)
}

/// Weighted check loss of a constant fit.
pub fn check_objective(y: &[f64], w: &[f64], tau: f64, t: f64) -> f64 {
    y.iter()
        .zip(w)
        .map(|(&yi, &wi)| {
            let r = yi - t;
            wi * if r < 0.0 { (tau - 1.0) * r } else { tau * r }
        })
        .sum()
}

/// Grid search over `[min y, max y]`, refined by factors of 10 down to 1e-6.
pub fn brute_force_quantile(y: &[f64], w: &[f64], tau: f64) -> f64 {
    let lo0 = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi0 = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (lo0, hi0);
    let mut best = lo;
    for _ in 0..12 {
        let steps = 200;
        let h = (hi - lo) / steps as f64;
        let mut best_val = f64::INFINITY;
        for k in 0..=steps {
            let t = lo + h * k as f64;
            let v = check_objective(y, w, tau, t);
            if v < best_val {
                best_val = v;
                best = t;
            }
        }
        if h < 1e-7 {
            break;
        }
        lo = (best - 2.0 * h).max(lo0);
        hi = (best + 2.0 * h).min(hi0);
    }
    best
}

/// Interval of exact minimizers of the intercept-only check loss (always
/// spanned by data points).
pub fn quantile_argmin_interval(y: &[f64], w: &[f64], tau: f64) -> (f64, f64) {
    let vals: Vec<f64> = y.iter().map(|&t| check_objective(y, w, tau, t)).collect();
    let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + best.abs());
    let opt: Vec<f64> = y
        .iter()
        .zip(&vals)
        .filter(|(_, &v)| v <= best + tol)
        .map(|(&t, _)| t)
        .collect();
    (
        opt.iter().copied().fold(f64::INFINITY, f64::min),
        opt.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// Gaussian design with full column rank (almost surely).
pub fn random_design(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    use rand_distr::{Distribution, StandardNormal};
    DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(rng))
}

/// Mann-Whitney one-sided test that `a` tends to be larger than `b`; returns
/// the normal-approximation p-value with tie correction.
pub fn mann_whitney_greater(a: &[f64], b: &[f64]) -> f64 {
    let mut all: Vec<(f64, usize)> = a.iter().map(|&v| (v, 0)).chain(b.iter().map(|&v| (v, 1))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for rank in ranks.iter_mut().take(j + 1).skip(i) {
            *rank = r;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ra: f64 = all.iter().zip(&ranks).filter(|(x, _)| x.1 == 0).map(|(_, r)| r).sum();
    let u = ra - na * (na + 1.0) / 2.0;
    let mean = na * nb / 2.0;
    let nn = na + nb;
    let var = na * nb / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    let z = (u - mean) / var.sqrt();
    use statrs::distribution::{ContinuousCDF, Normal};
    1.0 - Normal::standard().cdf(z)
}
