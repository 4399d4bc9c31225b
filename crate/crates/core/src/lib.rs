//! Small-volume covering sets for point clouds.
//!
//! Given `n` points in `R^d` and a coverage fraction `delta`, the learners in
//! this crate look for a ball, an ellipsoid or a union of ellipsoids that
//! contains at least (about) `delta * n` of the points while having as small
//! a volume as they can certify. Exact brute-force oracles, instance
//! generators and a split-conformal wrapper round out the toolkit.

pub mod coarse;
pub mod conformal;
pub mod datagen;
pub mod dense_ball;
pub mod dense_ball_isotropic;
pub mod dense_ellipsoid;
pub mod error;
pub mod geometry;
pub mod greedy_union;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod robust_mean;
pub mod spectral;
mod subsets;

pub use error::{Error, Result};
pub use geometry::{
    canonical_cmp, coverage_count, unit_ball_log_volume, volume_ratio_per_dim, CoverageSet,
    Ellipsoid, PointSet, Region, SetRecord,
};
pub use spectral::{count_eigs_above, summarize, sym_eig, SpectralSummary};
pub use conformal::{fit_conformal, ConformalPredictor};
pub use datagen::{gen_clusters, gen_incidence_hard, gen_pancake, gen_planted, GenSpec};
pub use dense_ball::{dense_ball, dense_ball_report, BallSearchParams};
pub use dense_ball_isotropic::dense_ball_isotropic;
pub use dense_ellipsoid::{dense_ellipsoid, dense_ellipsoid_with, EllipsoidParams};
pub use greedy_union::{greedy_union, BaseLearner, GreedyParams};
pub use oracle::{min_enclosing_ball, monte_carlo_volume, opt_k_ball};
pub use robust_mean::list_decodable_means;
