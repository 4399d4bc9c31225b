//! Proper ball learning: coarse pair balls refined by a grid search over the
//! few high-variance directions of the points they contain.
//!
//! For each coarse ball `B'` of radius `R'` the points `Y' = Y ∩ B'` have
//! trace of covariance at most `R'^2`, so at most `q` eigenvalues exceed
//! `R'^2 / q`. Along those directions the inlier mean is searched on a
//! `tau`-net; along the remaining ones the mean of `Y'` is already accurate.
//! Every candidate center then gets the smallest radius that reaches the
//! target coverage, and the smallest ball overall wins. The coarse balls are
//! kept as candidates too, so the answer is never worse than a 2-approximation.

use log::warn;
use rayon::prelude::*;

use crate::coarse::{coarse_candidates, group_members, CoarseBall, CoarseStage, DEFAULT_MAX_COARSE_BALLS};
use crate::error::{Error, Result};
use crate::geometry::{ceil_count, Ellipsoid, PointSet, MEMBERSHIP_SLACK};
use crate::linalg::{dist_sq, dot, kth_smallest, lex_cmp};
use crate::spectral::{mean_cov, sym_eig};
use crate::subsets::SubsetStats;

/// Default budget of candidate centers per coarse ball.
pub const DEFAULT_CANDIDATE_CAP: usize = 200_000;

/// Knobs of [`dense_ball`].
#[derive(Clone, Debug, PartialEq)]
pub struct BallSearchParams {
    /// Coverage fraction of the competitor ball, in `(0, 1]`.
    pub delta: f64,
    /// Allowed coverage slack, in `(0, 1)`.
    pub gamma: f64,
    /// Grid dimension; `None` picks [`default_q`].
    pub q: Option<usize>,
    /// Net tolerance; `None` picks [`default_tau`].
    pub tau: Option<f64>,
    /// Maximum grid size per coarse ball. Larger grids are skipped.
    pub candidate_cap: usize,
    /// Maximum number of coarse balls refined (see the coarse module).
    pub max_coarse_balls: usize,
    /// Turn a skipped coarse ball into an error instead of a warning.
    pub fail_on_budget: bool,
}

impl BallSearchParams {
    pub fn new(delta: f64, gamma: f64) -> Self {
        BallSearchParams {
            delta,
            gamma,
            q: None,
            tau: None,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            max_coarse_balls: DEFAULT_MAX_COARSE_BALLS,
            fail_on_budget: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_fractions(self.delta, self.gamma)?;
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::param(format!("tau must be positive, got {t}")));
            }
        }
        if self.candidate_cap == 0 || self.max_coarse_balls == 0 {
            return Err(Error::param("budgets must be positive"));
        }
        Ok(())
    }
}

pub(crate) fn check_fractions(delta: f64, gamma: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

/// `round(ln d / ln ln d)` clamped to `[0, min(d, 6)]`; zero below `d = 8`.
pub fn default_q(d: usize) -> usize {
    if d < 8 {
        return 0;
    }
    let l = (d as f64).ln();
    let q = (l / l.ln()).round().max(0.0) as usize;
    q.min(d.min(6))
}

/// `R_min / ln d` for `d >= 3`, else `R_min`.
pub fn default_tau(r_min: f64, d: usize) -> f64 {
    if d >= 3 {
        r_min / (d as f64).ln()
    } else {
        r_min
    }
}

/// Every coarse ball `B(y_i, |y_i - y_j|)` covering at least
/// `ceil(delta * n)` points, deduplicated and in canonical order.
pub fn coarse_balls(y: &PointSet, delta: f64) -> Result<Vec<Ellipsoid>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1], got {delta}")));
    }
    let stage = CoarseStage::compute(y, ceil_count(delta, y.len()))?;
    let balls = coarse_candidates(y, &stage, None, usize::MAX);
    let mut out = balls
        .into_iter()
        .map(|b| Ellipsoid::ball(y.row(b.center).to_vec(), b.radius))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(crate::geometry::canonical_cmp);
    Ok(out)
}

/// `R_min` and the balls of radius at most `2 R_min`.
pub fn filter_by_rmin(balls: &[Ellipsoid]) -> Result<(f64, Vec<Ellipsoid>)> {
    let radius = |b: &Ellipsoid| b.radius().unwrap_or_else(|| b.semi_axes()[0]);
    let r_min = balls.iter().map(radius).reduce(f64::min).ok_or(Error::EmptySet)?;
    let limit = 2.0 * r_min * (1.0 + 1e-12);
    Ok((r_min, balls.iter().filter(|b| radius(b) <= limit).cloned().collect()))
}

/// Upper bound `(1 + 2 ceil(R sqrt(q) / tau))^q` on the size of [`grid_net`].
pub fn grid_net_size_bound(r: f64, q: usize, tau: f64) -> f64 {
    let per_axis = 1.0 + 2.0 * (r * (q as f64).sqrt() / tau).ceil();
    per_axis.powi(q as i32)
}

/// A `tau`-net of the `q`-ball `B(0, R)`: the lattice of spacing
/// `tau / sqrt(q)` restricted to `B(0, R + tau)`.
pub fn grid_net(r: f64, q: usize, tau: f64, cap: usize) -> Result<Vec<Vec<f64>>> {
    if q == 0 {
        return Err(Error::param("grid dimension must be at least 1"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::param(format!("tau must be positive, got {tau}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::param(format!("radius must be non-negative, got {r}")));
    }
    let bound = grid_net_size_bound(r, q, tau);
    if bound > cap as f64 {
        return Err(Error::BudgetExceeded(format!(
            "grid net of up to {bound} points exceeds the cap of {cap}"
        )));
    }
    let h = tau / (q as f64).sqrt();
    let k = (r * (q as f64).sqrt() / tau).ceil() as i64;
    let keep = (r + tau) * (r + tau) * (1.0 + MEMBERSHIP_SLACK);
    let mut out = Vec::new();
    let mut idx = vec![-k; q];
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
        if p.iter().map(|x| x * x).sum::<f64>() <= keep {
            out.push(p);
        }
        let mut axis = 0;
        loop {
            if axis == q {
                return Ok(out);
            }
            if idx[axis] < k {
                idx[axis] += 1;
                break;
            }
            idx[axis] = -k;
            axis += 1;
        }
    }
}

/// Up to `q` unit eigenvectors of `cov` whose eigenvalues exceed `threshold`.
fn high_directions(stats: &SubsetStats, threshold: f64, q: usize) -> Result<Vec<Vec<f64>>> {
    if q == 0 || stats.lambda_upper <= threshold {
        return Ok(Vec::new());
    }
    let d = stats.mean.len();
    let (vals, vecs) = stats.eig()?;
    Ok(vals
        .iter()
        .take(q)
        .enumerate()
        .filter(|(_, l)| **l > threshold)
        .map(|(i, _)| vecs[i * d..(i + 1) * d].to_vec())
        .collect())
}

/// `mean` with its components along `dirs` removed.
fn low_part(mean: &[f64], dirs: &[Vec<f64>]) -> Vec<f64> {
    let mut b = mean.to_vec();
    for u in dirs {
        let p = dot(&b, u);
        b.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
    }
    b
}

/// Candidate centers for one coarse ball: the mean of `y_in` along the
/// low-variance directions, combined with every point of a `tau`-net of the
/// coarse ball's shadow on the (at most `q`) high-variance directions.
pub fn candidate_centers(
    coarse: &Ellipsoid,
    y_in: &PointSet,
    q: usize,
    tau: f64,
    cap: usize,
) -> Result<Vec<Vec<f64>>> {
    let r_prime = coarse
        .radius()
        .ok_or_else(|| Error::param("coarse set must be a ball"))?;
    if y_in.dim() != coarse.dim() {
        return Err(Error::DimensionMismatch {
            expected: coarse.dim(),
            found: y_in.dim(),
        });
    }
    if q > y_in.dim() {
        return Err(Error::param(format!("q = {q} exceeds the dimension {}", y_in.dim())));
    }
    let all: Vec<usize> = (0..y_in.len()).collect();
    let stats = SubsetStats::new(y_in, &all);
    let dirs = if q == 0 || tau <= 0.0 || r_prime == 0.0 {
        Vec::new()
    } else {
        high_directions(&stats, r_prime * r_prime / q as f64, q)?
    };
    let base = low_part(&stats.mean, &dirs);
    if dirs.is_empty() {
        return Ok(vec![base]);
    }
    let offset: Vec<f64> = dirs.iter().map(|u| dot(coarse.center(), u)).collect();
    let net = grid_net(r_prime, dirs.len(), tau, cap)?;
    Ok(net
        .into_iter()
        .map(|g| {
            let mut c = base.clone();
            for ((u, gk), ok) in dirs.iter().zip(&g).zip(&offset) {
                c.iter_mut().zip(u).for_each(|(x, y)| *x += (gk + ok) * y);
            }
            c
        })
        .collect())
}

/// A refined ball found inside one coarse ball.
#[derive(Clone, Debug)]
struct Found {
    radius: f64,
    center: Vec<f64>,
}

fn better(a: &Found, b: &Found) -> bool {
    match a.radius.total_cmp(&b.radius) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => lex_cmp(&a.center, &b.center).is_lt(),
    }
}

/// `k`-th smallest (1-based) distance from `c` to the points of `y`.
pub(crate) fn kth_distance(y: &PointSet, c: &[f64], k: usize, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(y.rows().map(|r| dist_sq(r, c)));
    kth_smallest(buf, k - 1).sqrt()
}

/// Grow `radius` until the ball covers `need` points under [`Ellipsoid::contains`].
pub(crate) fn ensure_ball_coverage(y: &PointSet, center: Vec<f64>, mut radius: f64, need: usize) -> Result<Ellipsoid> {
    loop {
        let ball = Ellipsoid::ball(center.clone(), radius)?;
        let covered = crate::geometry::coverage_count(&ball, y)?;
        if covered >= need {
            return Ok(ball);
        }
        radius = if radius == 0.0 {
            f64::MIN_POSITIVE
        } else {
            radius * (1.0 + 4.0 * f64::EPSILON)
        };
    }
}

/// Diagnostics of a [`dense_ball`] run.
#[derive(Clone, Debug)]
pub struct BallReport {
    pub ball: Ellipsoid,
    /// Coverage reached on the input.
    pub coverage: usize,
    pub r_min: f64,
    /// Ball of radius `R_min` (the naive 2-approximation).
    pub coarse_baseline: Ellipsoid,
    pub coarse_balls_refined: usize,
    /// Coarse balls whose grid exceeded the candidate cap.
    pub skipped: Vec<Ellipsoid>,
}

/// Smallest ball covering at least `ceil(delta (1 - gamma) n)` points found
/// by the coarse-to-fine grid search.
pub fn dense_ball(y: &PointSet, params: &BallSearchParams) -> Result<Ellipsoid> {
    Ok(dense_ball_report(y, params)?.ball)
}

pub fn dense_ball_report(y: &PointSet, params: &BallSearchParams) -> Result<BallReport> {
    params.validate()?;
    let n = y.len();
    let d = y.dim();
    if n < 2 {
        return Err(Error::InvalidPointSet(format!("need at least 2 points, got {n}")));
    }
    let m = ceil_count(params.delta, n);
    let m_prime = ceil_count(params.delta * (1.0 - params.gamma), n);
    if m_prime == 0 {
        return Err(Error::Infeasible("target coverage rounds to zero points".into()));
    }
    let stage = CoarseStage::compute(y, m)?;
    let q = params.q.unwrap_or_else(|| default_q(d));
    if q > d {
        return Err(Error::param(format!("q = {q} exceeds the dimension {d}")));
    }
    let tau = params.tau.unwrap_or_else(|| default_tau(stage.r_min, d));

    let balls = coarse_candidates(y, &stage, Some(stage.filter_limit()), params.max_coarse_balls);
    let (sets, which) = group_members(y, &balls);
    let stats = SubsetStats::build_all(y, &sets);

    let results: Vec<Result<Option<Found>>> = balls
        .par_iter()
        .zip(which.par_iter())
        .map(|(ball, &set)| refine(y, *ball, &stats[set], q, tau, m_prime, params.candidate_cap))
        .collect();

    let mut best: Option<Found> = None;
    let mut skipped = Vec::new();
    for (ball, res) in balls.iter().zip(results) {
        let injected = Found {
            radius: ball.radius,
            center: y.row(ball.center).to_vec(),
        };
        let refined = match res {
            Ok(f) => f,
            Err(Error::BudgetExceeded(msg)) => {
                let coarse = Ellipsoid::ball(injected.center.clone(), ball.radius)?;
                if params.fail_on_budget {
                    return Err(Error::BudgetExceeded(format!(
                        "coarse ball centered at point {} with radius {}: {msg}",
                        ball.center, ball.radius
                    )));
                }
                warn!(
                    "skipping refinement of coarse ball at point {} (radius {}): {msg}",
                    ball.center, ball.radius
                );
                skipped.push(coarse);
                None
            }
            Err(e) => return Err(e),
        };
        for cand in std::iter::once(injected).chain(refined) {
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
    }
    let best = best.expect("the R_min ball is always a candidate");
    let ball = ensure_ball_coverage(y, best.center, best.radius, m_prime)?;
    let coverage = crate::geometry::coverage_count(&ball, y)?;
    Ok(BallReport {
        ball,
        coverage,
        r_min: stage.r_min,
        coarse_baseline: Ellipsoid::ball(y.row(stage.best_center).to_vec(), stage.r_min)?,
        coarse_balls_refined: balls.len(),
        skipped,
    })
}

/// Best refined ball for one coarse ball, or `None` when it has no usable
/// candidates.
fn refine(
    y: &PointSet,
    ball: CoarseBall,
    stats: &SubsetStats,
    q: usize,
    tau: f64,
    m_prime: usize,
    cap: usize,
) -> Result<Option<Found>> {
    let r_prime = ball.radius;
    let dirs = if q == 0 || tau <= 0.0 || r_prime == 0.0 {
        Vec::new()
    } else {
        high_directions(stats, r_prime * r_prime / q as f64, q)?
    };
    let base = low_part(&stats.mean, &dirs);
    let mut buf = Vec::with_capacity(y.len());
    if dirs.is_empty() {
        let radius = kth_distance(y, &base, m_prime, &mut buf);
        return Ok(Some(Found { radius, center: base }));
    }

    let qe = dirs.len();
    let offset: Vec<f64> = dirs.iter().map(|u| dot(y.row(ball.center), u)).collect();
    let net = grid_net(r_prime, qe, tau, cap)?;
    // |y - (b + sum g_k u_k)|^2 = |y - b|^2 - 2 sum g_k <y, u_k> + |g|^2
    // because b is orthogonal to every u_k.
    let base_sq: Vec<f64> = y.rows().map(|r| dist_sq(r, &base)).collect();
    let proj: Vec<f64> = y
        .rows()
        .flat_map(|r| dirs.iter().map(move |u| dot(r, u)))
        .collect();
    let mut best: Option<(f64, usize)> = None;
    let mut g = vec![0.0; qe];
    for (ci, eta) in net.iter().enumerate() {
        for k in 0..qe {
            g[k] = eta[k] + offset[k];
        }
        let g2: f64 = g.iter().map(|x| x * x).sum();
        buf.clear();
        buf.extend(base_sq.iter().zip(proj.chunks_exact(qe)).map(|(s, p)| {
            let cross: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
            (s - 2.0 * cross + g2).max(0.0)
        }));
        let r2 = kth_smallest(&mut buf, m_prime - 1);
        if best.is_none_or(|(b, _)| r2 < b) {
            best = Some((r2, ci));
        }
    }
    let (_, ci) = best.expect("net is non-empty");
    let mut center = base;
    for ((u, eta), ok) in dirs.iter().zip(&net[ci]).zip(&offset) {
        center.iter_mut().zip(u).for_each(|(x, y)| *x += (eta + ok) * y);
    }
    let radius = kth_distance(y, &center, m_prime, &mut buf);
    Ok(Some(Found { radius, center }))
}

/// Mean and top eigenvalue of a subset, for tests and diagnostics.
pub fn subset_spectrum(y: &PointSet, members: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mean, cov) =
        mean_cov(members.iter().map(|&i| y.row(i)), y.dim()).ok_or(Error::EmptySet)?;
    let (vals, _) = sym_eig(&cov, y.dim())?;
    Ok((mean, vals))
}
