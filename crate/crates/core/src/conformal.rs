//! Split-conformal prediction sets built from scalings of a fitted ellipsoid.
//!
//! The first half of a shuffled sample fits a base ellipsoid `C`. The second
//! half calibrates: the nested family `lambda C` is indexed by a grid of
//! scalings, and the smallest member holding at least
//! `ceil((1 - alpha)(n_cal + 1))` calibration points is the prediction set.
//! Under exchangeability it contains a fresh point with probability at least
//! `1 - alpha`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense_ellipsoid::dense_ellipsoid;
use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, PointSet, SetRecord};

/// Default number of coverage levels in the scaling grid.
pub const DEFAULT_GRID_SIZE: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct ConformalPredictor {
    pub base: Ellipsoid,
    /// Strictly ascending scalings of `base`; always contains 1.
    pub grid: Vec<f64>,
    pub chosen_index: usize,
    pub alpha: f64,
    pub n_cal: usize,
    /// The rank rule asked for more points than the calibration half holds;
    /// the largest grid member was used instead.
    pub infeasible: bool,
}

#[derive(Serialize, Deserialize)]
struct PredictorRecord {
    base: SetRecord,
    grid: Vec<f64>,
    chosen_index: usize,
    alpha: f64,
    n_cal: usize,
    infeasible: bool,
}

/// Fit on `y` after a seeded shuffle. Odd `n` drops the last shuffled point.
pub fn fit_conformal(y: &PointSet, alpha: f64, gamma: f64, grid_size: usize, seed: u64) -> Result<ConformalPredictor> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if grid_size < 2 {
        return Err(Error::param("grid size must be at least 2"));
    }
    if y.len() < 4 {
        return Err(Error::InvalidPointSet(format!("need at least 4 points, got {}", y.len())));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let half = y.len() / 2;
    let fit = y.subset(&order[..half])?;
    let cal = y.subset(&order[half..2 * half])?;

    let delta_fit = (1.0 - alpha + gamma).min(1.0);
    let base = dense_ellipsoid(&fit, delta_fit, gamma / 2.0, None)?;
    calibrate(base, &cal, alpha, grid_size)
}

/// Build the scaling grid and pick the calibrated member for a fixed base set.
pub fn calibrate(base: Ellipsoid, cal: &PointSet, alpha: f64, grid_size: usize) -> Result<ConformalPredictor> {
    if cal.dim() != base.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            found: cal.dim(),
        });
    }
    let n_cal = cal.len();
    let mut scales: Vec<f64> = cal.rows().map(|r| base.norm_sq(r).sqrt()).filter(|s| s.is_finite()).collect();
    scales.sort_by(f64::total_cmp);

    let mut grid = vec![1.0];
    if let Some(&top) = scales.last() {
        for j in 0..grid_size {
            let tau = j as f64 / (grid_size - 1) as f64;
            let k = ((tau * n_cal as f64 - 1e-9).ceil() as usize).clamp(1, scales.len());
            grid.push(scales[k - 1]);
        }
        grid.push(top);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let need = ((1.0 - alpha) * (n_cal as f64 + 1.0) - 1e-9).ceil() as usize;
    let mut chosen = None;
    for (j, &lambda) in grid.iter().enumerate() {
        let set = base.scale(lambda)?;
        let covered = cal.rows().filter(|r| set.contains_unchecked(r)).count();
        if covered >= need {
            chosen = Some(j);
            break;
        }
    }
    let infeasible = chosen.is_none();
    Ok(ConformalPredictor {
        base,
        chosen_index: chosen.unwrap_or(grid.len() - 1),
        grid,
        alpha,
        n_cal,
        infeasible,
    })
}

impl ConformalPredictor {
    pub fn lambda(&self) -> f64 {
        self.grid[self.chosen_index]
    }

    /// The calibrated prediction set.
    pub fn prediction_set(&self) -> Ellipsoid {
        self.base.scale(self.lambda()).expect("grid values are finite and non-negative")
    }

    pub fn predict_contains(&self, y: &[f64]) -> Result<bool> {
        if y.len() != self.base.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.base.dim(),
                found: y.len(),
            });
        }
        Ok(self.prediction_set().contains_unchecked(y))
    }

    pub fn to_json(&self) -> Result<String> {
        let rec = PredictorRecord {
            base: self.base.to_record(None),
            grid: self.grid.clone(),
            chosen_index: self.chosen_index,
            alpha: self.alpha,
            n_cal: self.n_cal,
            infeasible: self.infeasible,
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: PredictorRecord = serde_json::from_str(text)?;
        let base = rec.base.to_ellipsoid()?;
        if rec.grid.is_empty() || rec.chosen_index >= rec.grid.len() {
            return Err(Error::param("chosen index outside the grid"));
        }
        if rec.grid.windows(2).any(|w| w[0] >= w[1]) || rec.grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::param("grid must be finite, non-negative and strictly ascending"));
        }
        Ok(ConformalPredictor {
            base,
            grid: rec.grid,
            chosen_index: rec.chosen_index,
            alpha: rec.alpha,
            n_cal: rec.n_cal,
            infeasible: rec.infeasible,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::sample_in_ball;

    fn cloud(n: usize, d: usize, seed: u64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| sample_in_ball(&mut rng, &vec![0.0; d], 1.0)).collect();
        PointSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn grid_is_ascending_and_nested() {
        let y = cloud(200, 3, 1);
        let p = fit_conformal(&y, 0.1, 0.05, 16, 2).unwrap();
        assert!(p.grid.windows(2).all(|w| w[0] < w[1]));
        assert!(p.grid.contains(&1.0));
        let cal = cloud(100, 3, 3);
        let mut last = 0;
        for &g in &p.grid {
            let c = cal.rows().filter(|r| p.base.scale(g).unwrap().contains(r).unwrap()).count();
            assert!(c >= last);
            last = c;
        }
        assert!(!p.infeasible);
    }

    #[test]
    fn loosest_alpha_picks_first_covering_member() {
        let base = Ellipsoid::ball(vec![0.0], 1.0).unwrap();
        let cal = PointSet::from_rows(&(1..=10).map(|i| vec![i as f64 * 0.3]).collect::<Vec<_>>()).unwrap();
        let p = calibrate(base, &cal, 0.95, 8).unwrap();
        // ceil(0.05 * 11) = 1: smallest member covering one point is 0.3
        assert!((p.lambda() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn infeasible_alpha_is_flagged() {
        let base = Ellipsoid::ball(vec![0.0], 1.0).unwrap();
        let cal = PointSet::from_rows(&[vec![0.5], vec![2.0]]).unwrap();
        let p = calibrate(base, &cal, 0.01, 8).unwrap();
        assert!(p.infeasible);
        assert_eq!(p.chosen_index, p.grid.len() - 1);
    }

    #[test]
    fn center_is_always_predicted() {
        let y = cloud(60, 2, 4);
        let p = fit_conformal(&y, 0.2, 0.1, 8, 0).unwrap();
        assert!(p.lambda() > 0.0);
        assert!(p.predict_contains(p.base.center()).unwrap());
        assert!(p.predict_contains(&[0.0]).is_err());
    }

    #[test]
    fn degenerate_base_uses_finite_scalings() {
        let base = Ellipsoid::ball(vec![0.0, 0.0], 0.0).unwrap();
        let cal = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let p = calibrate(base, &cal, 0.5, 4).unwrap();
        assert!(p.grid.iter().all(|g| g.is_finite()));
        assert!(p.predict_contains(&[0.0, 0.0]).unwrap());
        assert!(!p.predict_contains(&[1.0, 0.0]).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let y = cloud(80, 3, 5);
        let p = fit_conformal(&y, 0.1, 0.05, 16, 9).unwrap();
        let q = ConformalPredictor::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, q);
    }
}
