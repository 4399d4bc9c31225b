//! Means, population covariances and symmetric eigendecomposition.
//!
//! Matrices are dense, row-major `Vec<f64>` of length `d * d`. Eigenvectors
//! are returned as rows so that `eigenvectors[i * d..(i + 1) * d]` pairs with
//! `eigenvalues[i]`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::linalg::{dot, lex_cmp, mean_of, norm_sq};

const MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

/// Mean, covariance and eigen-decomposition of a set of points.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSummary {
    pub mean: Vec<f64>,
    /// Row-major `d x d`, population (1/n) normalization.
    pub covariance: Vec<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Row `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Vec<f64>,
}

impl SpectralSummary {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn eigenvector(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.eigenvectors[i * d..(i + 1) * d]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Mean and covariance of all points of `y`, with eigen-decomposition.
pub fn summarize(y: &PointSet) -> Result<SpectralSummary> {
    let d = y.dim();
    let (mean, covariance) = mean_cov(y.rows(), d).ok_or(Error::EmptySet)?;
    let (eigenvalues, eigenvectors) = sym_eig(&covariance, d)?;
    Ok(SpectralSummary {
        mean,
        covariance,
        eigenvalues,
        eigenvectors,
    })
}

/// Population mean and covariance of the given rows; `None` when empty.
pub fn mean_cov<'a, I>(rows: I, d: usize) -> Option<(Vec<f64>, Vec<f64>)>
where
    I: IntoIterator<Item = &'a [f64]> + Clone,
{
    let mean = mean_of(rows.clone(), d)?;
    let mut cov = vec![0.0; d * d];
    let mut w = vec![0.0; d];
    let mut count = 0usize;
    for row in rows {
        for ((wi, x), m) in w.iter_mut().zip(row).zip(&mean) {
            *wi = x - m;
        }
        for i in 0..d {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            let out = &mut cov[i * d + i..(i + 1) * d];
            for (c, wj) in out.iter_mut().zip(&w[i..]) {
                *c += wi * wj;
            }
        }
        count += 1;
    }
    let inv = 1.0 / count as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] * inv;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    Some((mean, cov))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back in descending order; equal eigenvalues are ordered
/// by their eigenvectors lexicographically. Each eigenvector is normalized so
/// that its largest-magnitude entry is positive.
pub fn sym_eig(m: &[f64], d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if m.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: m.len(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("matrix has non-finite entries"));
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut asym = 0.0f64;
    for i in 0..d {
        for j in i + 1..d {
            asym = asym.max((m[i * d + j] - m[j * d + i]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }

    let mut a = m.to_vec();
    for i in 0..d {
        for j in i + 1..d {
            let v = 0.5 * (a[i * d + j] + a[j * d + i]);
            a[i * d + j] = v;
            a[j * d + i] = v;
        }
    }
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }

    let frob = norm_sq(&a).sqrt();
    let target = JACOBI_TOL * frob;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                off += a[i * d + j] * a[i * d + j];
            }
        }
        if (2.0 * off).sqrt() <= target {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * d + p] = app - t * apq;
                a[q * d + q] = aqq + t * apq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for r in 0..d {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * d + p];
                    let arq = a[r * d + q];
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    a[r * d + p] = np;
                    a[p * d + r] = np;
                    a[r * d + q] = nq;
                    a[q * d + r] = nq;
                }
                let (head, tail) = v.split_at_mut(q * d);
                let vp = &mut head[p * d..(p + 1) * d];
                let vq = &mut tail[..d];
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..d)
        .map(|i| {
            let mut vec = v[i * d..(i + 1) * d].to_vec();
            normalize_sign(&mut vec);
            (a[i * d + i], vec)
        })
        .collect();
    pairs.sort_by(|x, y| match y.0.total_cmp(&x.0) {
        Ordering::Equal => lex_cmp(&x.1, &y.1),
        other => other,
    });
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = pairs.into_iter().flat_map(|p| p.1).collect();
    Ok((values, vectors))
}

fn normalize_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Number of eigenvalues strictly above `threshold`.
pub fn count_eigs_above(s: &SpectralSummary, threshold: f64) -> usize {
    s.eigenvalues.iter().filter(|l| **l > threshold).count()
}

/// Cheap upper bound on the largest eigenvalue of a symmetric matrix: the
/// smaller of the Gershgorin bound and the Frobenius norm.
pub fn lambda_max_upper_bound(m: &[f64], d: usize) -> f64 {
    let mut gersh = f64::NEG_INFINITY;
    let mut frob = 0.0;
    for i in 0..d {
        let row = &m[i * d..(i + 1) * d];
        let mut r = 0.0;
        for (j, x) in row.iter().enumerate() {
            frob += x * x;
            if j != i {
                r += x.abs();
            }
        }
        gersh = gersh.max(row[i] + r);
    }
    gersh.min(frob.sqrt())
}

/// Leading eigenpair of a positive semidefinite matrix by power iteration.
/// The start vector is the column of largest norm, so the result is
/// deterministic.
pub fn top_eigenpair(m: &[f64], d: usize) -> (f64, Vec<f64>) {
    let mut start = 0;
    let mut best = -1.0;
    for j in 0..d {
        let n: f64 = (0..d).map(|i| m[i * d + j] * m[i * d + j]).sum();
        if n > best {
            best = n;
            start = j;
        }
    }
    if best <= 0.0 {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        return (0.0, e);
    }
    let mut x: Vec<f64> = (0..d).map(|i| m[i * d + start]).collect();
    let n = norm_sq(&x).sqrt();
    x.iter_mut().for_each(|v| *v /= n);
    let mut lambda = 0.0;
    let mut y = vec![0.0; d];
    for _ in 0..1000 {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(&m[i * d..(i + 1) * d], &x);
        }
        let new_lambda = dot(&x, &y);
        let n = norm_sq(&y).sqrt();
        if n == 0.0 {
            return (0.0, x);
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / n;
        }
        if (new_lambda - lambda).abs() <= 1e-12 * new_lambda.abs() {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    normalize_sign(&mut x);
    (lambda, x)
}
