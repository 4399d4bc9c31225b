//! Synthetic instances with known ground truth.
//!
//! Every generator is a pure function of its arguments: the same parameters
//! and seed always produce the same bytes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ceil_count, Ellipsoid, PointSet};
use crate::linalg::{dist, dot, norm_sq};

/// Parameters a generator was called with, kept alongside its output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum GenSpec {
    Planted {
        n: usize,
        d: usize,
        delta: f64,
        r_star: f64,
        outlier_scale: f64,
        seed: u64,
    },
    Pancake {
        n: usize,
        d: usize,
        k_high: usize,
        delta: f64,
        seed: u64,
    },
    Clusters {
        n: usize,
        d: usize,
        k: usize,
        delta: f64,
        separation: f64,
        seed: u64,
    },
}

/// Points with one planted ball holding the inliers.
#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub points: PointSet,
    pub planted: Ellipsoid,
    /// Sorted row indices of the inliers.
    pub inlier_indices: Vec<usize>,
    pub spec: GenSpec,
}

/// Points with `k` planted unit balls.
#[derive(Clone, Debug)]
pub struct ClusterInstance {
    pub points: PointSet,
    pub planted: Vec<Ellipsoid>,
    /// `clusters[j]` lists the sorted row indices drawn inside ball `j`.
    pub clusters: Vec<Vec<usize>>,
    pub spec: GenSpec,
}

/// Shell radius multiplier used for the outliers of pancake instances.
pub const PANCAKE_OUTLIER_SCALE: f64 = 3.0;

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

fn check_shape(n: usize, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if n == 0 {
        return Err(Error::EmptySet);
    }
    Ok(())
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit_direction(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let g = gaussian(rng, d);
        let n = norm_sq(&g).sqrt();
        if n > 0.0 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform sample from the ball `B(center, radius)`.
pub fn sample_in_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    let d = center.len();
    let dir = unit_direction(rng, d);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    center.iter().zip(&dir).map(|(c, u)| c + r * u).collect()
}

/// Uniform sample from the shell `inner <= |x - center| <= 2 * inner`.
/// The radius is drawn in log space so that large `d` does not overflow.
fn sample_in_shell(rng: &mut ChaCha8Rng, center: &[f64], inner: f64) -> Vec<f64> {
    let d = center.len() as f64;
    let dir = unit_direction(rng, center.len());
    let u: f64 = rng.random();
    let tail = (-d * std::f64::consts::LN_2).exp();
    let log_r = inner.ln() + std::f64::consts::LN_2 + (u + (1.0 - u) * tail).ln() / d;
    let r = log_r.exp().clamp(inner, 2.0 * inner);
    center.iter().zip(&dir).map(|(c, x)| c + r * x).collect()
}

/// Shuffle `rows` and return them together with the new positions of the
/// rows whose original index satisfies `is_inlier`.
fn shuffle_rows(
    rng: &mut ChaCha8Rng,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(rng);
    let mut out_rows = Vec::with_capacity(rows.len());
    let mut out_labels = Vec::with_capacity(rows.len());
    for &i in &order {
        out_rows.push(rows[i].clone());
        out_labels.push(labels[i]);
    }
    (out_rows, out_labels)
}

fn outliers_clear(points: &PointSet, center: &[f64], inliers: &[usize], min_dist: f64) -> Result<()> {
    let mut is_inlier = vec![false; points.len()];
    inliers.iter().for_each(|&i| is_inlier[i] = true);
    for (i, y) in points.rows().enumerate() {
        if !is_inlier[i] && dist(y, center) < min_dist * (1.0 - 1e-12) {
            return Err(Error::InvalidPointSet(format!(
                "outlier {i} fell inside the exclusion radius"
            )));
        }
    }
    Ok(())
}

/// `ceil(delta * n)` inliers uniform in `B(c*, r_star)` with `c*` uniform in
/// `[-1, 1]^d`; the rest uniform in the shell between `outlier_scale * r_star`
/// and twice that.
pub fn gen_planted(
    n: usize,
    d: usize,
    delta: f64,
    r_star: f64,
    outlier_scale: f64,
    seed: u64,
) -> Result<PlantedInstance> {
    check_shape(n, d)?;
    check_delta(delta)?;
    if !(r_star > 0.0 && r_star.is_finite()) {
        return Err(Error::param(format!("r_star must be positive, got {r_star}")));
    }
    if !(outlier_scale >= 2.0 && outlier_scale.is_finite()) {
        return Err(Error::param(format!("outlier_scale must be >= 2, got {outlier_scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let m = ceil_count(delta, n);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..m {
        rows.push(sample_in_ball(&mut rng, &center, r_star));
    }
    for _ in m..n {
        rows.push(sample_in_shell(&mut rng, &center, outlier_scale * r_star));
    }
    let labels = (0..n).map(|i| usize::from(i < m)).collect();
    let (rows, labels) = shuffle_rows(&mut rng, rows, labels);
    let inliers: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
    let points = PointSet::from_rows(&rows)?;
    outliers_clear(&points, &center, &inliers, 2.0 * r_star)?;
    let planted = Ellipsoid::ball(center, r_star)?;
    Ok(PlantedInstance {
        points,
        planted,
        inlier_indices: inliers,
        spec: GenSpec::Planted {
            n,
            d,
            delta,
            r_star,
            outlier_scale,
            seed,
        },
    })
}

/// Random orthonormal `k`-frame by Gram-Schmidt on Gaussian vectors.
fn random_frame(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(k);
    while frame.len() < k {
        let mut v = gaussian(rng, d);
        for u in &frame {
            let p = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
        }
        let n = norm_sq(&v).sqrt();
        if n > 1e-8 {
            frame.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    frame
}

/// Flat "pancake" inliers: variance about `1/k_high` along `k_high` random
/// orthogonal directions and `1e-4/d` elsewhere, truncated to the unit ball
/// `B(c*, 1)`. Outliers as in [`gen_planted`] with
/// [`PANCAKE_OUTLIER_SCALE`].
pub fn gen_pancake(n: usize, d: usize, k_high: usize, delta: f64, seed: u64) -> Result<PlantedInstance> {
    check_shape(n, d)?;
    check_delta(delta)?;
    if k_high == 0 || k_high >= d {
        return Err(Error::param(format!("need 1 <= k_high < d, got k_high = {k_high}, d = {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let frame = random_frame(&mut rng, d, k_high);
    let high_sd = (1.0 / k_high as f64).sqrt();
    let low_sd = (1e-4 / d as f64).sqrt();
    let m = ceil_count(delta, n);
    let mut rows = Vec::with_capacity(n);
    while rows.len() < m {
        let mut offset: Vec<f64> = gaussian(&mut rng, d).into_iter().map(|g| g * low_sd).collect();
        for u in &frame {
            let g: f64 = rng.sample::<f64, _>(StandardNormal) * high_sd;
            offset.iter_mut().zip(u).for_each(|(x, y)| *x += g * y);
        }
        if norm_sq(&offset) <= 1.0 {
            rows.push(center.iter().zip(&offset).map(|(c, o)| c + o).collect());
        }
    }
    for _ in m..n {
        rows.push(sample_in_shell(&mut rng, &center, PANCAKE_OUTLIER_SCALE));
    }
    let labels = (0..n).map(|i| usize::from(i < m)).collect();
    let (rows, labels) = shuffle_rows(&mut rng, rows, labels);
    let inliers: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
    let points = PointSet::from_rows(&rows)?;
    outliers_clear(&points, &center, &inliers, 2.0)?;
    Ok(PlantedInstance {
        points,
        planted: Ellipsoid::ball(center, 1.0)?,
        inlier_indices: inliers,
        spec: GenSpec::Pancake {
            n,
            d,
            k_high,
            delta,
            seed,
        },
    })
}

/// `ceil(delta * n)` inliers split as evenly as possible across `k` unit
/// balls whose centers are pairwise at least `separation` apart; the other
/// points are scattered uniformly over the bounding box of the balls.
pub fn gen_clusters(
    n: usize,
    d: usize,
    k: usize,
    delta: f64,
    separation: f64,
    seed: u64,
) -> Result<ClusterInstance> {
    check_shape(n, d)?;
    check_delta(delta)?;
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    if !(separation >= 4.0 && separation.is_finite()) {
        return Err(Error::param(format!("separation must be >= 4, got {separation}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = separation * k as f64;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut attempts = 0usize;
    while centers.len() < k {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::param("could not place separated cluster centers"));
        }
        let c: Vec<f64> = (0..d).map(|_| rng.random_range(-half..=half)).collect();
        if centers.iter().all(|o| dist(o, &c) >= separation) {
            centers.push(c);
        }
    }
    let m = ceil_count(delta, n);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..m {
        let j = i % k;
        rows.push(sample_in_ball(&mut rng, &centers[j], 1.0));
        labels.push(j + 1);
    }
    let lo = -half - 1.0;
    let hi = half + 1.0;
    for _ in m..n {
        rows.push((0..d).map(|_| rng.random_range(lo..=hi)).collect());
        labels.push(0);
    }
    let (rows, labels) = shuffle_rows(&mut rng, rows, labels);
    let clusters = (1..=k)
        .map(|j| (0..n).filter(|&i| labels[i] == j).collect())
        .collect();
    let planted = centers
        .into_iter()
        .map(|c| Ellipsoid::ball(c, 1.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterInstance {
        points: PointSet::from_rows(&rows)?,
        planted,
        clusters,
        spec: GenSpec::Clusters {
            n,
            d,
            k,
            delta,
            separation,
            seed,
        },
    })
}

const GRAPH_ATTEMPTS: usize = 1000;

/// Incidence rows of a random simple `degree`-regular graph on `n_vertices`
/// vertices (configuration model), each padded with zeros to `pad_dim`.
///
/// Two rows are at distance `sqrt(2 * degree - 2)` when their vertices are
/// adjacent and `sqrt(2 * degree)` otherwise.
pub fn gen_incidence_hard(n_vertices: usize, degree: usize, pad_dim: usize, seed: u64) -> Result<PointSet> {
    let edges = random_regular_graph(n_vertices, degree, seed)?;
    incidence_points(n_vertices, &edges, pad_dim)
}

/// Edge list of a random simple regular graph, sorted.
pub fn random_regular_graph(n_vertices: usize, degree: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n_vertices == 0 || degree == 0 {
        return Err(Error::param("need at least one vertex and degree >= 1"));
    }
    if degree >= n_vertices {
        return Err(Error::param(format!(
            "degree {degree} must be below the vertex count {n_vertices}"
        )));
    }
    if !(degree * n_vertices).is_multiple_of(2) {
        return Err(Error::param("degree * n_vertices must be even"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n_vertices).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    for _ in 0..GRAPH_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = stubs
            .chunks_exact(2)
            .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
            .collect();
        edges.sort_unstable();
        let simple = edges.iter().all(|(a, b)| a != b) && edges.windows(2).all(|w| w[0] != w[1]);
        if simple {
            return Ok(edges);
        }
    }
    Err(Error::GraphGeneration(format!(
        "no simple {degree}-regular graph on {n_vertices} vertices in {GRAPH_ATTEMPTS} attempts"
    )))
}

/// One 0/1 row per vertex with a 1 in the column of every incident edge.
pub fn incidence_points(n_vertices: usize, edges: &[(usize, usize)], pad_dim: usize) -> Result<PointSet> {
    if pad_dim < edges.len() {
        return Err(Error::param(format!(
            "pad_dim {pad_dim} is smaller than the edge count {}",
            edges.len()
        )));
    }
    let mut data = vec![0.0; n_vertices * pad_dim];
    for (e, &(a, b)) in edges.iter().enumerate() {
        if a >= n_vertices || b >= n_vertices {
            return Err(Error::param(format!("edge ({a}, {b}) names a missing vertex")));
        }
        data[a * pad_dim + e] = 1.0;
        data[b * pad_dim + e] = 1.0;
    }
    PointSet::new(data, pad_dim)
}
