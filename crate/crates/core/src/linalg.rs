//! Dense kernels: streamed second moments, regularized inverses and hat diagonals.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Floor on the ridge added by [`regularized_inverse`].
pub const LAMBDA_FLOOR: f64 = 1e-10;

/// Singular values below this fraction of the largest one are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Symmetric positive semidefinite d x d matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    /// Wrap a square matrix that is symmetric to 1e-12 relative tolerance.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let d = m.nrows();
        for i in 0..d {
            for j in (i + 1)..d {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// One-pass accumulator for `(1/n) sum_i w_i x_i x_i^T`.
///
/// Entries of the upper triangle are summed with Neumaier compensation.
#[derive(Debug, Clone)]
pub struct SecondMoment {
    d: usize,
    count: usize,
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl SecondMoment {
    pub fn new(d: usize) -> Self {
        let len = d * (d + 1) / 2;
        Self {
            d,
            count: 0,
            sum: vec![0.0; len],
            comp: vec![0.0; len],
        }
    }

    pub fn push(&mut self, row: &[f64], weight: f64) -> Result<()> {
        if row.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "row of length {} for a {}-dimensional accumulator",
                row.len(),
                self.d
            )));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidArgument(format!("weight {weight} is not finite and nonnegative")));
        }
        let mut k = 0;
        for i in 0..self.d {
            let wi = weight * row[i];
            for &xj in &row[i..] {
                let term = wi * xj;
                let s = self.sum[k];
                let t = s + term;
                if s.abs() >= term.abs() {
                    self.comp[k] += (s - t) + term;
                } else {
                    self.comp[k] += (term - t) + s;
                }
                self.sum[k] = t;
                k += 1;
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self) -> Result<SpdMatrix> {
        if self.count == 0 {
            return Err(Error::EmptyData);
        }
        let n = self.count as f64;
        let mut m = DMatrix::zeros(self.d, self.d);
        let mut k = 0;
        for i in 0..self.d {
            for j in i..self.d {
                let v = (self.sum[k] + self.comp[k]) / n;
                m[(i, j)] = v;
                m[(j, i)] = v;
                k += 1;
            }
        }
        Ok(SpdMatrix(m))
    }
}

/// `(1/n) sum_i w_i x_i x_i^T` over a stream of rows, in a single pass.
pub fn second_moment_stream<I, R>(rows: I, weights: Option<&[f64]>) -> Result<SpdMatrix>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut acc: Option<SecondMoment> = None;
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.as_ref();
        let acc = acc.get_or_insert_with(|| SecondMoment::new(row.len()));
        let w = match weights {
            Some(w) => *w.get(i).ok_or_else(|| {
                Error::DimensionMismatch(format!("{} weights for more rows", w.len()))
            })?,
            None => 1.0,
        };
        acc.push(row, w)?;
    }
    let acc = acc.ok_or(Error::EmptyData)?;
    if let Some(w) = weights {
        if w.len() != acc.count() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} rows",
                w.len(),
                acc.count()
            )));
        }
    }
    acc.finish()
}

/// [`second_moment_stream`] over the rows of a matrix.
pub fn second_moment(x: &DMatrix<f64>, weights: Option<&[f64]>) -> Result<SpdMatrix> {
    let mut buf = vec![0.0; x.ncols()];
    let mut acc = SecondMoment::new(x.ncols());
    if let Some(w) = weights {
        if w.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} rows",
                w.len(),
                x.nrows()
            )));
        }
    }
    for i in 0..x.nrows() {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = x[(i, j)];
        }
        acc.push(&buf, weights.map_or(1.0, |w| w[i]))?;
    }
    acc.finish()
}

/// `max(trace(V) / (10 d), LAMBDA_FLOOR)`.
pub fn regularization_lambda(v: &SpdMatrix) -> f64 {
    (v.trace() / (10.0 * v.dim() as f64)).max(LAMBDA_FLOOR)
}

/// `(V + lambda I)^{-1}` with `lambda` from [`regularization_lambda`], via Cholesky.
pub fn regularized_inverse(v: &SpdMatrix) -> DMatrix<f64> {
    let d = v.dim();
    let lambda = regularization_lambda(v);
    let shifted = v.as_matrix() + DMatrix::identity(d, d) * lambda;
    let inv = match Cholesky::new(shifted.clone()) {
        Some(chol) => chol.inverse(),
        // only reachable when the input was not actually PSD
        None => pseudo_inverse(&shifted),
    };
    symmetrize(inv)
}

/// Jacobi approximation: inverse of the diagonal of `V + lambda I`.
pub fn jacobi_inverse(v: &SpdMatrix) -> DMatrix<f64> {
    let lambda = regularization_lambda(v);
    DMatrix::from_diagonal(&v.as_matrix().diagonal().map(|x| 1.0 / (x + lambda)))
}

/// Moore-Penrose inverse with singular values below `RANK_TOLERANCE * sigma_max` dropped.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let cut = RANK_TOLERANCE * smax;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            out += (vt.row(k).transpose() / s) * u.column(k).transpose();
        }
    }
    out
}

/// Exact (lambda = 0) inverse of a PSD matrix: the pseudo-inverse, from a
/// symmetric eigendecomposition with eigenvalues below
/// `RANK_TOLERANCE * lambda_max` dropped.
pub fn exact_inverse(v: &SpdMatrix) -> DMatrix<f64> {
    let d = v.dim();
    let eig = v.as_matrix().clone().symmetric_eigen();
    let lmax = eig.eigenvalues.amax();
    let mut out = DMatrix::zeros(d, d);
    if lmax == 0.0 {
        return out;
    }
    let cut = RANK_TOLERANCE * lmax;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > cut {
            let q = eig.eigenvectors.column(k);
            out += (q / l) * q.transpose();
        }
    }
    symmetrize(out)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// How a second-moment matrix is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InverseMode {
    /// `(V + lambda I)^{-1}`, `lambda = trace(V) / (10 d)`.
    #[default]
    Regularized,
    /// Inverse of the diagonal of `V + lambda I`.
    Jacobi,
    /// Pseudo-inverse, no ridge.
    Exact,
}

impl InverseMode {
    pub fn invert(self, v: &SpdMatrix) -> DMatrix<f64> {
        match self {
            InverseMode::Regularized => regularized_inverse(v),
            InverseMode::Jacobi => jacobi_inverse(v),
            InverseMode::Exact => exact_inverse(v),
        }
    }
}

/// Diagonal of `H = X (X^T W X + lambda I)^{-1} X^T W`.
///
/// In exact mode lambda is zero and the diagonal is computed from the left
/// singular vectors of `W^{1/2} X`, dropping directions below the rank
/// tolerance; otherwise the ridge follows [`regularization_lambda`] applied to
/// `X^T W X`.
pub fn hat_diagonal(x: &DMatrix<f64>, w: Option<&[f64]>, exact: bool) -> Result<Vec<f64>> {
    let n = x.nrows();
    if let Some(w) = w {
        if w.len() != n {
            return Err(Error::DimensionMismatch(format!("{} weights for {n} rows", w.len())));
        }
        if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("hat matrix weights must be positive".into()));
        }
    }
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if exact {
        let mut b = x.clone();
        if let Some(w) = w {
            for (i, wi) in w.iter().enumerate() {
                b.row_mut(i).scale_mut(wi.sqrt());
            }
        }
        let svd = b.svd(true, false);
        let u = svd.u.as_ref().expect("u requested");
        let cut = RANK_TOLERANCE * svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > cut && svd.singular_values[k] > 0.0)
            .collect();
        Ok((0..n)
            .map(|i| keep.iter().map(|&k| u[(i, k)] * u[(i, k)]).sum())
            .collect())
    } else {
        let m = second_moment(x, w)?;
        let a = regularized_inverse(&m) / n as f64;
        Ok((0..n)
            .map(|i| {
                let xi = x.row(i).transpose();
                let q = (xi.transpose() * &a * &xi)[(0, 0)];
                w.map_or(1.0, |w| w[i]) * q
            })
            .collect())
    }
}

/// `x^T A x` for a row of a matrix.
pub(crate) fn quad_form_row(a: &DMatrix<f64>, x: &DMatrix<f64>, i: usize) -> f64 {
    let d = x.ncols();
    let mut total = 0.0;
    for j in 0..d {
        let mut inner = 0.0;
        for k in 0..d {
            inner += a[(j, k)] * x[(i, k)];
        }
        total += x[(i, j)] * inner;
    }
    total
}

/// `A x_i` for row `i` of `x`.
pub(crate) fn mul_row(a: &DMatrix<f64>, x: &DMatrix<f64>, i: usize) -> DVector<f64> {
    let d = x.ncols();
    DVector::from_fn(a.nrows(), |j, _| (0..d).map(|k| a[(j, k)] * x[(i, k)]).sum())
}
