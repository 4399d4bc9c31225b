//! Pair-defined "coarse" balls shared by the ball and ellipsoid learners.
//!
//! A coarse ball is `B(y_i, |y_i - y_j|)` for a pair of input points. Any
//! ball that covers `m` points can be replaced by a coarse ball of at most
//! twice its radius, so the smallest coarse ball covering `m` points, of
//! radius `R_min`, is a 2-approximation on its own.
//!
//! Enumerating every coarse ball is quadratic in `n`, and the per-ball work
//! downstream is at least linear in `n`, so large inputs get a thinned list:
//! the best-ranked centers each contribute a geometric ladder of radii.

use std::collections::HashMap;

use log::debug;

use crate::error::{Error, Result};
use crate::geometry::{PointSet, MEMBERSHIP_SLACK};
use crate::linalg::{dist_sq, kth_smallest, lex_cmp};

/// Default cap on the number of coarse balls refined per run.
pub const DEFAULT_MAX_COARSE_BALLS: usize = 64;

/// Ratio between consecutive radii of a thinned ladder.
const LADDER_RATIO: f64 = 1.25;

/// One coarse ball: center `points.row(center)` and radius `radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoarseBall {
    pub center: usize,
    pub radius: f64,
}

/// Outcome of the coarse stage.
#[derive(Clone, Debug)]
pub struct CoarseStage {
    /// Required coverage `m`.
    pub m: usize,
    /// Radius of the smallest coarse ball covering `m` points.
    pub r_min: f64,
    /// Center index of that ball (ties: lexicographically smallest point).
    pub best_center: usize,
    /// Per-center smallest covering radius `r_i`.
    pub per_center: Vec<f64>,
}

impl CoarseStage {
    /// `r_i` for every point and the resulting `R_min`.
    pub fn compute(y: &PointSet, m: usize) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::InvalidPointSet(format!("need at least 2 points, got {n}")));
        }
        if m == 0 || m > n {
            return Err(Error::Infeasible(format!("cannot cover {m} of {n} points")));
        }
        let mut buf = vec![0.0; n];
        let per_center: Vec<f64> = (0..n)
            .map(|i| {
                distances_sq_from(y, i, &mut buf);
                kth_smallest(&mut buf, m - 1).sqrt()
            })
            .collect();
        let best_center = ranked_centers(y, &per_center)[0];
        Ok(CoarseStage {
            m,
            r_min: per_center[best_center],
            best_center,
            per_center,
        })
    }

    /// Radius limit `2 R_min` with the relative slack used by the filter.
    pub fn filter_limit(&self) -> f64 {
        2.0 * self.r_min * (1.0 + 1e-12)
    }
}

pub(crate) fn distances_sq_from(y: &PointSet, i: usize, out: &mut [f64]) {
    let yi = y.row(i);
    for (o, yj) in out.iter_mut().zip(y.rows()) {
        *o = dist_sq(yi, yj);
    }
}

/// Centers ordered by `(r_i, point, index)`.
fn ranked_centers(y: &PointSet, per_center: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| {
        per_center[a]
            .total_cmp(&per_center[b])
            .then_with(|| lex_cmp(y.row(a), y.row(b)))
            .then(a.cmp(&b))
    });
    order
}

/// Sorted distinct distances from `y_i` that lie in `[lo, hi]`.
fn radii_in_range(dist_sq_row: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut radii: Vec<f64> = dist_sq_row
        .iter()
        .map(|d| d.sqrt())
        .filter(|r| *r >= lo && *r <= hi)
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    radii
}

/// Geometric ladder through `radii` (sorted, non-empty): the first radius,
/// then for each target `r0 * LADDER_RATIO^k` the largest radius not above
/// it, and finally the largest radius.
fn ladder(radii: &[f64]) -> Vec<f64> {
    let mut out = vec![radii[0]];
    let mut start = radii[0];
    if start == 0.0 {
        match radii.get(1) {
            Some(&r) => {
                out.push(r);
                start = r;
            }
            None => return out,
        }
    }
    let last = *radii.last().expect("non-empty");
    let mut target = start * LADDER_RATIO;
    while target < last {
        let idx = radii.partition_point(|r| *r <= target);
        let r = radii[idx - 1];
        if r > *out.last().expect("non-empty") {
            out.push(r);
        }
        target *= LADDER_RATIO;
    }
    if last > *out.last().expect("non-empty") {
        out.push(last);
    }
    out
}

/// Coarse balls to refine, each covering at least `m` points.
///
/// With `limit = Some(r)` only radii up to `r` are considered. When the full
/// list exceeds `cap`, centers are visited in `(r_i, point)` order and each
/// contributes a ladder of radii up to `2 R_min`; the `R_min` ball always
/// comes first.
pub fn coarse_candidates(
    y: &PointSet,
    stage: &CoarseStage,
    limit: Option<f64>,
    cap: usize,
) -> Vec<CoarseBall> {
    let cap = cap.max(1);
    let order = ranked_centers(y, &stage.per_center);
    let hi = limit.unwrap_or(f64::INFINITY);
    let mut buf = vec![0.0; y.len()];

    let mut full: Vec<CoarseBall> = Vec::new();
    let mut overflow = false;
    for &i in &order {
        let lo = stage.per_center[i];
        if lo > hi {
            break;
        }
        distances_sq_from(y, i, &mut buf);
        for r in radii_in_range(&buf, lo, hi) {
            full.push(CoarseBall { center: i, radius: r });
        }
        if full.len() > cap {
            overflow = true;
            break;
        }
    }
    if !overflow {
        return dedup_balls(y, full);
    }

    let thin_hi = hi.min(stage.filter_limit());
    let mut thin: Vec<CoarseBall> = Vec::with_capacity(cap);
    for &i in &order {
        let lo = stage.per_center[i];
        if lo > thin_hi || thin.len() >= cap {
            break;
        }
        distances_sq_from(y, i, &mut buf);
        let radii = radii_in_range(&buf, lo, thin_hi);
        if radii.is_empty() {
            continue;
        }
        for r in ladder(&radii) {
            if thin.len() >= cap {
                break;
            }
            thin.push(CoarseBall { center: i, radius: r });
        }
    }
    debug!(
        "coarse stage thinned to {} balls (R_min = {})",
        thin.len(),
        stage.r_min
    );
    dedup_balls(y, thin)
}

/// Drop balls whose center point and radius repeat an earlier ball (this
/// happens with duplicate input points).
fn dedup_balls(y: &PointSet, balls: Vec<CoarseBall>) -> Vec<CoarseBall> {
    let mut seen: HashMap<(Vec<u64>, u64), ()> = HashMap::new();
    balls
        .into_iter()
        .filter(|b| {
            let key = (
                y.row(b.center).iter().map(|v| v.to_bits()).collect(),
                b.radius.to_bits(),
            );
            seen.insert(key, ()).is_none()
        })
        .collect()
}

/// Indices of the points inside `B(y_center, radius)`, using the shared
/// membership slack.
pub(crate) fn members(radius: f64, dist_sq_row: &[f64]) -> Vec<usize> {
    let r2 = radius * radius * (1.0 + MEMBERSHIP_SLACK);
    dist_sq_row
        .iter()
        .enumerate()
        .filter(|(_, d)| **d <= r2)
        .map(|(j, _)| j)
        .collect()
}

/// The distinct point subsets `Y' = Y ∩ B'` for a list of coarse balls,
/// and for each ball the index of its subset.
pub(crate) fn group_members(y: &PointSet, balls: &[CoarseBall]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut which = Vec::with_capacity(balls.len());
    let mut buf = vec![0.0; y.len()];
    let mut last_center = usize::MAX;
    for &b in balls {
        if b.center != last_center {
            distances_sq_from(y, b.center, &mut buf);
            last_center = b.center;
        }
        let set = members(b.radius, &buf);
        let next = sets.len();
        let id = *index.entry(set.clone()).or_insert(next);
        if id == next {
            sets.push(set);
        }
        which.push(id);
    }
    (sets, which)
}
