//! Proper ball learning when the inliers are close to isotropic.
//!
//! If the inlier covariance is dominated by `(beta / d) R^2 I`, a
//! list-decodable mean estimate lands within `O(sqrt(beta / d)) R` of the
//! inlier mean, which is enough to get a radius of
//! `R* sqrt(1 + O(beta / (gamma delta d)))` instead of a constant factor.

use crate::coarse::CoarseStage;
use crate::dense_ball::{check_fractions, ensure_ball_coverage, kth_distance};
use crate::error::{Error, Result};
use crate::geometry::{ceil_count, Ellipsoid, PointSet};
use crate::linalg::lex_cmp;
use crate::robust_mean::list_decodable_means;

/// Smallest ball covering `ceil((1 - gamma) delta n)` points whose center is
/// a candidate mean for variance `beta * R_min^2 / d`, or the best coarse
/// ball if that is smaller.
pub fn dense_ball_isotropic(y: &PointSet, delta: f64, gamma: f64, beta: f64, seed: u64) -> Result<Ellipsoid> {
    check_fractions(delta, gamma)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::InvalidPointSet(format!("need at least 2 points, got {n}")));
    }
    let d = y.dim();
    let m_prime = ceil_count(delta * (1.0 - gamma), n);
    let stage = CoarseStage::compute(y, ceil_count(delta, n))?;
    let sigma2 = beta * stage.r_min * stage.r_min / d as f64;

    let mut best_center = y.row(stage.best_center).to_vec();
    let mut best_radius = stage.r_min;
    if delta * n as f64 >= 2.0 {
        let list = list_decodable_means(y, delta, sigma2, seed)?;
        let mut buf = Vec::with_capacity(n);
        for c in list.candidates {
            let r = kth_distance(y, &c, m_prime, &mut buf);
            if r < best_radius || (r == best_radius && lex_cmp(&c, &best_center).is_lt()) {
                best_radius = r;
                best_center = c;
            }
        }
    }
    ensure_ball_coverage(y, best_center, best_radius, m_prime)
}
