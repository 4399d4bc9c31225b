//! Unions of `k` sets from any single-set learner, by greedy density.
//!
//! Each round asks the base learner for sets at coverage levels `2^i` on the
//! points not yet covered, keeps those that cover enough new points, and adds
//! the one with the highest ratio of newly covered points to volume.

use log::debug;
use rayon::prelude::*;

use crate::dense_ball::{dense_ball, BallSearchParams};
use crate::dense_ball_isotropic::dense_ball_isotropic;
use crate::dense_ellipsoid::dense_ellipsoid;
use crate::error::{Error, Result};
use crate::geometry::{canonical_cmp, ceil_count, CoverageSet, Ellipsoid, PointSet};

/// A learner that returns one set covering about a `delta` fraction of `y`.
pub trait BaseLearner: Sync {
    fn fit(&self, y: &PointSet, delta: f64, gamma: f64) -> Result<Ellipsoid>;
}

impl<F> BaseLearner for F
where
    F: Fn(&PointSet, f64, f64) -> Result<Ellipsoid> + Sync,
{
    fn fit(&self, y: &PointSet, delta: f64, gamma: f64) -> Result<Ellipsoid> {
        self(y, delta, gamma)
    }
}

/// [`dense_ball`] as a base learner; `template` supplies `q`, `tau` and budgets.
pub struct BallLearner {
    pub template: BallSearchParams,
}

impl BaseLearner for BallLearner {
    fn fit(&self, y: &PointSet, delta: f64, gamma: f64) -> Result<Ellipsoid> {
        let mut p = self.template.clone();
        p.delta = delta;
        p.gamma = gamma;
        dense_ball(y, &p)
    }
}

/// [`dense_ball_isotropic`] as a base learner.
pub struct IsotropicBallLearner {
    pub beta: f64,
    pub seed: u64,
}

impl BaseLearner for IsotropicBallLearner {
    fn fit(&self, y: &PointSet, delta: f64, gamma: f64) -> Result<Ellipsoid> {
        dense_ball_isotropic(y, delta, gamma, self.beta, self.seed)
    }
}

/// [`dense_ellipsoid`] as a base learner.
pub struct EllipsoidLearner {
    pub tau_hat: Option<f64>,
}

impl BaseLearner for EllipsoidLearner {
    fn fit(&self, y: &PointSet, delta: f64, gamma: f64) -> Result<Ellipsoid> {
        dense_ellipsoid(y, delta, gamma, self.tau_hat)
    }
}

/// Knobs of [`greedy_union`].
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyParams {
    pub delta: f64,
    pub gamma: f64,
    pub k: usize,
    /// Slack handed to the base learner.
    pub gamma_prime: f64,
    /// `None` means `ceil(8 delta k / gamma) + 1`.
    pub max_rounds: Option<usize>,
}

impl GreedyParams {
    pub fn new(delta: f64, gamma: f64, k: usize) -> Self {
        GreedyParams {
            delta,
            gamma,
            k,
            gamma_prime: 0.5,
            max_rounds: None,
        }
    }

    pub fn round_cap(&self) -> usize {
        self.max_rounds
            .unwrap_or_else(|| (8.0 * self.delta * self.k as f64 / self.gamma).ceil() as usize + 1)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.gamma > 0.0 && self.delta + self.gamma <= 1.0 + 1e-12) {
            return Err(Error::param(format!(
                "need delta, gamma > 0 and delta + gamma <= 1, got {} and {}",
                self.delta, self.gamma
            )));
        }
        if self.k == 0 {
            return Err(Error::param("k must be at least 1"));
        }
        if !(self.gamma_prime > 0.0 && self.gamma_prime < 1.0) {
            return Err(Error::param(format!("gamma_prime must lie in (0, 1), got {}", self.gamma_prime)));
        }
        Ok(())
    }
}

/// One round of the greedy loop.
#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    /// Coverage level `2^i` requested from the base learner.
    pub level: usize,
    /// Points newly covered by the chosen set.
    pub marginal: usize,
}

/// The union and its round history.
#[derive(Clone, Debug)]
pub struct GreedyOutcome {
    pub union: CoverageSet,
    pub rounds: Vec<Round>,
    /// Points of the input inside the union.
    pub coverage: usize,
}

/// Grow a union until it covers more than `delta n` points.
pub fn greedy_union(y: &PointSet, params: &GreedyParams, base: &dyn BaseLearner) -> Result<GreedyOutcome> {
    params.validate()?;
    let n = y.len();
    let target = params.delta * n as f64;
    let need = ceil_count((1.0 - params.gamma_prime) * params.gamma / (4.0 * params.k as f64), n).max(1);
    let cap = params.round_cap();
    let levels = (n as f64).log2().ceil() as u32;

    let mut residual: Vec<usize> = (0..n).collect();
    let mut union = CoverageSet::empty(y.dim());
    let mut rounds = Vec::new();
    let mut covered = 0usize;
    while covered as f64 <= target {
        if rounds.len() >= cap {
            return Err(Error::RoundCapExceeded { cap });
        }
        if residual.is_empty() {
            return Err(Error::NoQualifyingSet { round: rounds.len() });
        }
        let y_t = y.subset(&residual)?;
        let size = residual.len();
        let tried: Vec<(usize, Result<Ellipsoid>)> = (0..=levels)
            .map(|i| 1usize << i)
            .filter(|&c| c <= size)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|c| (c, base.fit(&y_t, c as f64 / size as f64, params.gamma_prime)))
            .collect();

        let mut best: Option<(f64, Ellipsoid, usize, usize)> = None;
        for (level, res) in tried {
            let set = match res {
                Ok(s) => s,
                Err(e) => {
                    debug!("round {}: level {level} produced no set: {e}", rounds.len());
                    continue;
                }
            };
            let marginal = y_t.rows().filter(|r| set.contains(r).unwrap_or(false)).count();
            if marginal < need {
                continue;
            }
            let density = if set.log_volume() == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                (marginal as f64).ln() - set.log_volume()
            };
            let wins = match &best {
                None => true,
                Some((bd, bs, _, _)) => density > *bd || (density == *bd && canonical_cmp(&set, bs).is_lt()),
            };
            if wins {
                best = Some((density, set, level, marginal));
            }
        }
        let Some((_, set, level, marginal)) = best else {
            return Err(Error::NoQualifyingSet { round: rounds.len() });
        };
        residual.retain(|&i| !set.contains(y.row(i)).unwrap_or(false));
        covered += marginal;
        union.push(set)?;
        rounds.push(Round { level, marginal });
    }
    Ok(GreedyOutcome {
        union,
        rounds,
        coverage: covered,
    })
}

/// Given `a_i, b_i >= 0` with `sum a >= beta` and `sum a / sum b >= gamma`,
/// an index with `a_i >= beta / (2k)` and `a_i / b_i >= gamma / 2`, if any.
pub fn check_averaging(a: &[f64], b: &[f64], beta: f64, gamma: f64, k: usize) -> Option<usize> {
    let k = k.max(1) as f64;
    a.iter().zip(b).position(|(&ai, &bi)| {
        ai >= beta / (2.0 * k) && (if bi > 0.0 { ai / bi >= gamma / 2.0 } else { ai > 0.0 || gamma <= 0.0 })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gen_clusters;
    use crate::geometry::coverage_count;

    #[test]
    fn single_cluster_one_round() {
        let mut rows = vec![vec![0.0, 0.0]; 10];
        for i in 0..10 {
            rows.push(vec![100.0 * (i + 1) as f64, -50.0 * i as f64]);
        }
        let y = PointSet::from_rows(&rows).unwrap();
        let params = GreedyParams::new(0.45, 0.2, 1);
        let out = greedy_union(&y, &params, &EllipsoidLearner { tau_hat: None }).unwrap();
        assert_eq!(out.rounds.len(), 1);
        assert_eq!(out.coverage, 10);
        assert_eq!(coverage_count(&out.union, &y).unwrap(), 10);
    }

    #[test]
    fn two_clusters() {
        let inst = gen_clusters(120, 3, 2, 0.6, 6.0, 1).unwrap();
        let params = GreedyParams::new(0.6, 0.2, 2);
        let out = greedy_union(&inst.points, &params, &EllipsoidLearner { tau_hat: None }).unwrap();
        assert!(out.rounds.len() <= params.round_cap());
        assert!(out.coverage as f64 > 0.6 * 120.0);
        assert_eq!(coverage_count(&out.union, &inst.points).unwrap(), out.coverage);
        let total: usize = out.rounds.iter().map(|r| r.marginal).sum();
        assert_eq!(total, out.coverage);
    }

    #[test]
    fn closure_learner_and_errors() {
        let y = PointSet::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let never = |_: &PointSet, _: f64, _: f64| -> Result<Ellipsoid> { Err(Error::Infeasible("no".into())) };
        let r = greedy_union(&y, &GreedyParams::new(0.5, 0.2, 1), &never);
        assert!(matches!(r, Err(Error::NoQualifyingSet { round: 0 })));
        assert!(greedy_union(&y, &GreedyParams::new(0.9, 0.2, 1), &never).is_err());
    }

    #[test]
    fn averaging_witness() {
        assert_eq!(check_averaging(&[1.0, 3.0], &[10.0, 2.0], 4.0, 0.3, 2), Some(1));
        assert_eq!(check_averaging(&[0.0], &[1.0], 1.0, 1.0, 1), None);
    }
}
