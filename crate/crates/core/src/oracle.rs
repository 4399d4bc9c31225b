//! Brute-force ground truth for small instances.
//!
//! These routines are exponential or sampling-based and exist to check the
//! learners, not to replace them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, PointSet};
use crate::linalg::{dist_sq, dot, lex_cmp};

/// Largest dimension accepted by [`min_enclosing_ball`].
pub const MAX_ORACLE_DIM: usize = 16;
/// Largest point count accepted by [`opt_k_ball`].
pub const MAX_ORACLE_POINTS: usize = 16;

const PIVOT_TOL: f64 = 1e-12;

/// Exact smallest enclosing ball (Welzl's algorithm with move-to-front).
pub fn min_enclosing_ball(p: &PointSet) -> Result<Ellipsoid> {
    let d = p.dim();
    if d > MAX_ORACLE_DIM {
        return Err(Error::CapExceeded(format!(
            "enclosing-ball oracle supports d <= {MAX_ORACLE_DIM}, got {d}"
        )));
    }
    let rows: Vec<&[f64]> = p.rows().collect();
    let (center, radius) = meb_of(&rows, d);
    Ellipsoid::ball(center, radius)
}

fn meb_of(rows: &[&[f64]], d: usize) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(0));
    let mut support = Vec::with_capacity(d + 1);
    let (center, _) = mtf(rows, &mut order, rows.len(), &mut support, d);
    // Round-off can leave a point a hair outside; grow to cover everything.
    let r2 = rows
        .iter()
        .map(|y| dist_sq(y, &center))
        .fold(0.0, f64::max);
    (center, r2.sqrt())
}

fn mtf(
    rows: &[&[f64]],
    order: &mut Vec<usize>,
    end: usize,
    support: &mut Vec<usize>,
    d: usize,
) -> (Vec<f64>, f64) {
    let mut ball = circumsphere(rows, support, d);
    if support.len() == d + 1 {
        return ball;
    }
    let mut i = 0;
    while i < end {
        let idx = order[i];
        if !inside(&ball, rows[idx]) {
            support.push(idx);
            ball = mtf(rows, order, i, support, d);
            support.pop();
            order.remove(i);
            order.insert(0, idx);
        }
        i += 1;
    }
    ball
}

fn inside(ball: &(Vec<f64>, f64), y: &[f64]) -> bool {
    let (c, r2) = ball;
    if r2.is_nan() {
        return false;
    }
    dist_sq(y, c) <= r2 * (1.0 + 1e-12) + 1e-300
}

/// Smallest sphere through the support points, centered in their affine
/// hull. Returns `(center, radius^2)`; an empty support gives radius NaN so
/// that every point is outside.
fn circumsphere(rows: &[&[f64]], support: &[usize], d: usize) -> (Vec<f64>, f64) {
    let Some(&first) = support.first() else {
        return (vec![0.0; d], f64::NAN);
    };
    let p0 = rows[first];
    let k = support.len() - 1;
    let q: Vec<Vec<f64>> = support[1..]
        .iter()
        .map(|&i| rows[i].iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let mut g = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            g[i * k + j] = dot(&q[i], &q[j]);
        }
        b[i] = 0.5 * g[i * k + i];
    }
    let lambda = solve_pivoted(&mut g, &mut b, k);
    let mut c = p0.to_vec();
    for (l, qi) in lambda.iter().zip(&q) {
        for (cj, qj) in c.iter_mut().zip(qi) {
            *cj += l * qj;
        }
    }
    let r2 = support
        .iter()
        .map(|&i| dist_sq(rows[i], &c))
        .fold(0.0, f64::max);
    (c, r2)
}

/// Gaussian elimination with full pivoting; dependent unknowns are set to 0.
fn solve_pivoted(a: &mut [f64], b: &mut [f64], k: usize) -> Vec<f64> {
    let scale = (0..k).map(|i| a[i * k + i].abs()).fold(0.0, f64::max);
    let mut col_of: Vec<usize> = (0..k).collect();
    let mut rank = 0;
    for step in 0..k {
        let (mut pr, mut pc, mut best) = (step, step, 0.0);
        for r in step..k {
            for c in step..k {
                if a[r * k + c].abs() > best {
                    best = a[r * k + c].abs();
                    pr = r;
                    pc = c;
                }
            }
        }
        if best <= PIVOT_TOL * scale || best == 0.0 {
            break;
        }
        for c in 0..k {
            a.swap(step * k + c, pr * k + c);
        }
        b.swap(step, pr);
        for r in 0..k {
            a.swap(r * k + step, r * k + pc);
        }
        col_of.swap(step, pc);
        for r in step + 1..k {
            let f = a[r * k + step] / a[step * k + step];
            if f != 0.0 {
                for c in step..k {
                    a[r * k + c] -= f * a[step * k + c];
                }
                b[r] -= f * b[step];
            }
        }
        rank += 1;
    }
    let mut y = vec![0.0; k];
    for r in (0..rank).rev() {
        let mut s = b[r];
        for c in r + 1..rank {
            s -= a[r * k + c] * y[c];
        }
        y[r] = s / a[r * k + r];
    }
    let mut x = vec![0.0; k];
    for (pos, &col) in col_of.iter().enumerate() {
        x[col] = y[pos];
    }
    x
}

/// Exact smallest ball containing at least `m` points of `y`, by enumerating
/// all `m`-subsets. Ties go to the lexicographically smallest center.
pub fn opt_k_ball(y: &PointSet, m: usize) -> Result<Ellipsoid> {
    let n = y.len();
    if n > MAX_ORACLE_POINTS {
        return Err(Error::CapExceeded(format!(
            "k-ball oracle supports n <= {MAX_ORACLE_POINTS}, got {n}"
        )));
    }
    if m == 0 {
        return Err(Error::param("m must be at least 1"));
    }
    if m > n {
        return Err(Error::Infeasible(format!("cannot cover {m} of {n} points")));
    }
    if y.dim() > MAX_ORACLE_DIM {
        return Err(Error::CapExceeded(format!(
            "enclosing-ball oracle supports d <= {MAX_ORACLE_DIM}, got {}",
            y.dim()
        )));
    }
    let d = y.dim();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        let rows: Vec<&[f64]> = subset.iter().map(|&i| y.row(i)).collect();
        let (c, r) = meb_of(&rows, d);
        let better = match &best {
            None => true,
            Some((bc, br)) => r < *br || (r == *br && lex_cmp(&c, bc).is_lt()),
        };
        if better {
            best = Some((c, r));
        }
        if !next_combination(&mut subset, n) {
            break;
        }
    }
    let (c, r) = best.expect("at least one subset");
    Ellipsoid::ball(c, r)
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let m = idx.len();
    let mut i = m;
    while i > 0 {
        i -= 1;
        if idx[i] < n - m + i {
            idx[i] += 1;
            for j in i + 1..m {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Monte-Carlo volume of `e` by uniform sampling in its bounding box.
/// Returns `(estimate, standard error)`. Only precise for small `d`.
pub fn monte_carlo_volume(e: &Ellipsoid, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::param("sample count must be positive"));
    }
    let d = e.dim();
    let half: Vec<f64> = (0..d)
        .map(|j| {
            (0..d)
                .map(|i| {
                    let t = e.semi_axes()[i] * e.axis(i)[j];
                    t * t
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let box_vol: f64 = half.iter().map(|h| 2.0 * h).product();
    if box_vol == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..samples {
        for ((yj, c), h) in y.iter_mut().zip(e.center()).zip(&half) {
            *yj = c + h * rng.random_range(-1.0..1.0);
        }
        if e.norm_sq(&y) <= 1.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok((box_vol * p, box_vol * (p * (1.0 - p) / samples as f64).sqrt()))
}
