//! Cached statistics of the point subsets `Y ∩ B'` cut out by coarse balls.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::PointSet;
use crate::spectral::{lambda_max_upper_bound, mean_cov, sym_eig};

pub(crate) struct SubsetStats {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
    /// Cheap upper bound on the top eigenvalue of `cov`.
    pub lambda_upper: f64,
    eig: OnceLock<(Vec<f64>, Vec<f64>)>,
}

impl SubsetStats {
    pub fn new(y: &PointSet, members: &[usize]) -> Self {
        let d = y.dim();
        let (mean, cov) =
            mean_cov(members.iter().map(|&i| y.row(i)), d).expect("coarse balls contain their center");
        let lambda_upper = lambda_max_upper_bound(&cov, d);
        SubsetStats {
            mean,
            cov,
            lambda_upper,
            eig: OnceLock::new(),
        }
    }

    pub fn build_all(y: &PointSet, sets: &[Vec<usize>]) -> Vec<SubsetStats> {
        sets.par_iter().map(|s| SubsetStats::new(y, s)).collect()
    }

    /// Eigenvalues (descending) and eigenvectors (rows), computed once.
    pub fn eig(&self) -> Result<&(Vec<f64>, Vec<f64>)> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = sym_eig(&self.cov, self.mean.len())?;
        Ok(self.eig.get_or_init(|| e))
    }
}
