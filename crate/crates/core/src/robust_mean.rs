//! List-decodable mean estimation by a simplified multifilter.
//!
//! When only a `delta` fraction of the points are inliers, no single estimate
//! of their mean can be trusted, but a short list can contain a good one.
//! Each restart draws `ceil(1/delta)` seed points, grows the `ceil(delta n)`
//! nearest neighbours of each, and trims the points that stick out furthest
//! along the top principal direction until the spread is compatible with the
//! variance bound. Surviving means are ranked by their remaining spread,
//! merged when close, and truncated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ceil_count, PointSet};
use crate::linalg::{dist_sq, dot, lex_cmp};
use crate::spectral::{mean_cov, top_eigenpair};

/// Tuning constants of [`list_decodable_means_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct MultifilterConfig {
    /// Stop trimming once `lambda_max <= spread_factor * sigma2 / delta`.
    pub spread_factor: f64,
    /// Fraction of the current set removed per trimming step.
    pub trim_fraction: f64,
    /// The list holds at most `ceil(list_constant / delta)` candidates.
    pub list_constant: f64,
    /// Restarts are `ceil(4 / delta) * restart_factor`.
    pub restart_factor: usize,
}

impl Default for MultifilterConfig {
    fn default() -> Self {
        MultifilterConfig {
            spread_factor: 16.0,
            trim_fraction: 0.05,
            list_constant: 8.0,
            restart_factor: 8,
        }
    }
}

/// Candidate means for an unknown `delta` fraction of inliers.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanCandidateList {
    pub candidates: Vec<Vec<f64>>,
    pub seed: u64,
    pub sigma2: f64,
    pub delta: f64,
}

/// [`list_decodable_means_with`] under the default configuration.
pub fn list_decodable_means(y: &PointSet, delta: f64, sigma2: f64, seed: u64) -> Result<MeanCandidateList> {
    list_decodable_means_with(y, delta, sigma2, seed, &MultifilterConfig::default())
}

pub fn list_decodable_means_with(
    y: &PointSet,
    delta: f64,
    sigma2: f64,
    seed: u64,
    cfg: &MultifilterConfig,
) -> Result<MeanCandidateList> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::param(format!("sigma2 must be non-negative, got {sigma2}")));
    }
    let n = y.len();
    let inliers = delta * n as f64;
    if inliers < 2.0 {
        return Err(Error::TooFewInliers(inliers));
    }
    if delta >= 1.0 {
        return Ok(MeanCandidateList {
            candidates: vec![y.mean()],
            seed,
            sigma2,
            delta,
        });
    }

    let k = ceil_count(delta, n);
    let floor = ceil_count(delta / 2.0, n).max(1);
    let seeds_per_restart = (1.0 / delta).ceil() as usize;
    let restarts = (4.0 / delta).ceil() as usize * cfg.restart_factor;
    let threshold = cfg.spread_factor * sigma2 / delta;

    let runs: Vec<Vec<(f64, Vec<f64>)>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            (0..seeds_per_restart)
                .map(|_| {
                    let s = rng.random_range(0..n);
                    filter_from(y, s, k, floor, threshold, cfg.trim_fraction)
                })
                .collect()
        })
        .collect();

    let mut found: Vec<(f64, Vec<f64>)> = runs.into_iter().flatten().collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex_cmp(&a.1, &b.1)));
    let merge_sq = sigma2 / 16.0;
    let max_len = (cfg.list_constant / delta).ceil() as usize;
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for (_, mu) in found {
        if candidates.len() >= max_len {
            break;
        }
        if candidates.iter().all(|c| dist_sq(c, &mu) > merge_sq) {
            candidates.push(mu);
        }
    }
    Ok(MeanCandidateList {
        candidates,
        seed,
        sigma2,
        delta,
    })
}

/// Grow the `k` nearest neighbours of point `s` and trim along the top
/// eigenvector until the spread drops to `threshold` or only `floor` points
/// remain. Returns the final spread and mean.
fn filter_from(y: &PointSet, s: usize, k: usize, floor: usize, threshold: f64, trim: f64) -> (f64, Vec<f64>) {
    let d = y.dim();
    let ys = y.row(s);
    let mut order: Vec<(f64, usize)> = y.rows().enumerate().map(|(j, r)| (dist_sq(r, ys), j)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut set: Vec<usize> = order.into_iter().take(k).map(|(_, j)| j).collect();
    loop {
        let (mean, cov) = mean_cov(set.iter().map(|&j| y.row(j)), d).expect("set is non-empty");
        let (lambda, v) = top_eigenpair(&cov, d);
        if lambda <= threshold || set.len() <= floor {
            return (lambda, mean);
        }
        let remove = ((trim * set.len() as f64).ceil() as usize).clamp(1, set.len() - floor);
        let shift = dot(&mean, &v);
        let mut scored: Vec<(f64, usize)> = set
            .iter()
            .map(|&j| {
                let p = dot(y.row(j), &v) - shift;
                (p * p, j)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        set = scored.into_iter().skip(remove).map(|(_, j)| j).collect();
        set.sort_unstable();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::sample_in_ball;

    #[test]
    fn full_coverage_returns_the_mean() {
        let y = PointSet::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, -1.0]]).unwrap();
        let l = list_decodable_means(&y, 1.0, 1.0, 0).unwrap();
        assert_eq!(l.candidates, vec![y.mean()]);
    }

    #[test]
    fn exact_cluster_is_recovered() {
        let star = vec![0.25, -1.5, 3.0];
        let mut rows = vec![star.clone(); 6];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..14 {
            rows.push((0..3).map(|_| rng.random_range(-100.0..100.0)).collect());
        }
        let y = PointSet::from_rows(&rows).unwrap();
        for sigma2 in [0.0, 0.5] {
            let l = list_decodable_means(&y, 0.3, sigma2, 7).unwrap();
            assert!(l.candidates.contains(&star), "sigma2 = {sigma2}");
        }
    }

    #[test]
    fn too_few_inliers() {
        let y = PointSet::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(list_decodable_means(&y, 0.5, 1.0, 0), Err(Error::TooFewInliers(_))));
    }

    #[test]
    fn list_length_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..120).map(|_| sample_in_ball(&mut rng, &[0.0; 4], 10.0)).collect();
        let y = PointSet::from_rows(&rows).unwrap();
        let a = list_decodable_means(&y, 0.25, 0.01, 3).unwrap();
        let b = list_decodable_means(&y, 0.25, 0.01, 3).unwrap();
        assert_eq!(a, b);
        assert!(!a.candidates.is_empty() && a.candidates.len() <= 32);
    }
}
