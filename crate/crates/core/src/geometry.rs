//! Point sets, balls, ellipsoids and unions of ellipsoids.
//!
//! Ellipsoids are kept in their eigen-frame: a center, `d` orthonormal axis
//! directions and `d` semi-axis lengths. Volumes are only ever handled as
//! logarithms, since raw volumes under- or overflow once `d` reaches a few
//! hundred. A zero semi-axis is legal and gives a log-volume of `-inf`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, lex_cmp, mean_of};

/// Relative slack used by every membership test. Points sitting exactly on a
/// boundary (e.g. the point that defined a radius) count as covered.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

const ORTHONORMAL_TOL: f64 = 1e-9;
const LOG_VOLUME_TOL: f64 = 1e-9;

/// An immutable `n x d` table of finite coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl PointSet {
    /// Build from a row-major buffer of `n * d` values.
    pub fn new(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if data.is_empty() {
            return Err(Error::EmptySet);
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::InvalidPointSet(format!(
                "buffer of length {} is not a multiple of dimension {d}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPointSet(format!(
                "non-finite coordinate in row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        let n = data.len() / d;
        Ok(PointSet { data, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptySet)?;
        let d = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        PointSet::new(data, d)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false; a point set holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// The rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<PointSet> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        PointSet::new(data, self.d)
    }

    pub fn mean(&self) -> Vec<f64> {
        mean_of(self.rows(), self.d).expect("point set is non-empty")
    }
}

/// `ceil(frac * n)`, robust to round-off in the product (so `0.3 * 10`
/// counts as 3, not 4).
pub fn ceil_count(frac: f64, n: usize) -> usize {
    let x = frac * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

/// `log` of the volume of the unit ball in `d` dimensions,
/// `(d/2) log(pi) - log Gamma(d/2 + 1)`.
pub fn unit_ball_log_volume(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok(0.5 * d as f64 * std::f64::consts::PI.ln() - ln_gamma_half_integer(d + 2))
}

/// `log Gamma(k / 2)` for integer `k >= 1`, by the recurrence down to
/// `Gamma(1) = 1` or `Gamma(1/2) = sqrt(pi)`.
fn ln_gamma_half_integer(k: usize) -> f64 {
    let mut acc = if k.is_multiple_of(2) {
        0.0
    } else {
        0.5 * std::f64::consts::PI.ln()
    };
    let mut x = k as f64 / 2.0 - 1.0;
    while x > 0.25 {
        acc += x.ln();
        x -= 1.0;
    }
    acc
}

/// An ellipsoid `{x : sum_i (<x - c, v_i> / s_i)^2 <= 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    center: Vec<f64>,
    /// Row-major `d x d`; row `i` is axis `v_i`.
    axes: Vec<f64>,
    semi_axes: Vec<f64>,
    log_volume: f64,
    ball: bool,
}

impl Ellipsoid {
    /// Euclidean ball `B(center, radius)`; `radius = 0` is allowed.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let d = center.len();
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        check_finite(&center, "center")?;
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidEllipsoid(format!("radius {radius}")));
        }
        let mut axes = vec![0.0; d * d];
        for i in 0..d {
            axes[i * d + i] = 1.0;
        }
        let semi_axes = vec![radius; d];
        let log_volume = log_volume_of(&semi_axes);
        Ok(Ellipsoid {
            center,
            axes,
            semi_axes,
            log_volume,
            ball: true,
        })
    }

    /// General ellipsoid; `axes[i]` is the direction of semi-axis `i`.
    pub fn new(center: Vec<f64>, axes: Vec<Vec<f64>>, semi_axes: Vec<f64>) -> Result<Self> {
        let d = center.len();
        if axes.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: axes.len(),
            });
        }
        let mut flat = Vec::with_capacity(d * d);
        for a in &axes {
            if a.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: a.len(),
                });
            }
            flat.extend_from_slice(a);
        }
        Ellipsoid::from_flat(center, flat, semi_axes)
    }

    pub(crate) fn from_flat(center: Vec<f64>, axes: Vec<f64>, semi_axes: Vec<f64>) -> Result<Self> {
        let d = center.len();
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if semi_axes.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: semi_axes.len(),
            });
        }
        if axes.len() != d * d {
            return Err(Error::InvalidEllipsoid("axis matrix is not d x d".into()));
        }
        check_finite(&center, "center")?;
        check_finite(&axes, "axes")?;
        if semi_axes.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidEllipsoid(
                "semi-axes must be finite and non-negative".into(),
            ));
        }
        for i in 0..d {
            let ai = &axes[i * d..(i + 1) * d];
            for j in i..d {
                let g = dot(ai, &axes[j * d..(j + 1) * d]);
                let target = if i == j { 1.0 } else { 0.0 };
                if (g - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidEllipsoid(format!(
                        "axes {i} and {j} are not orthonormal (inner product {g})"
                    )));
                }
            }
        }
        let log_volume = log_volume_of(&semi_axes);
        Ok(Ellipsoid {
            center,
            axes,
            semi_axes,
            log_volume,
            ball: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn axis(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.axes[i * d..(i + 1) * d]
    }

    pub fn axes(&self) -> Vec<Vec<f64>> {
        self.axes.chunks_exact(self.dim()).map(|a| a.to_vec()).collect()
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub fn log_volume(&self) -> f64 {
        self.log_volume
    }

    pub fn is_ball(&self) -> bool {
        self.ball
    }

    /// Radius of a ball; `None` for a general ellipsoid.
    pub fn radius(&self) -> Option<f64> {
        self.ball.then(|| self.semi_axes[0])
    }

    /// Squared ellipsoidal norm of `y - center`: the smallest `t` with
    /// `y` inside the ellipsoid scaled by `sqrt(t)`. Infinite when `y`
    /// leaves the center along a zero-length semi-axis.
    pub fn norm_sq(&self, y: &[f64]) -> f64 {
        if self.ball {
            let r = self.semi_axes[0];
            let dsq = crate::linalg::dist_sq(y, &self.center);
            return ratio_sq(dsq, r * r);
        }
        let d = self.dim();
        let w: Vec<f64> = y.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let mut acc = 0.0;
        for i in 0..d {
            let p = dot(&w, &self.axes[i * d..(i + 1) * d]);
            let s = self.semi_axes[i];
            acc += ratio_sq(p * p, s * s);
        }
        acc
    }

    /// Membership with the shared relative boundary slack.
    pub fn contains(&self, y: &[f64]) -> Result<bool> {
        self.check_dim(y.len())?;
        Ok(self.contains_unchecked(y))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, y: &[f64]) -> bool {
        self.norm_sq(y) <= 1.0 + MEMBERSHIP_SLACK
    }

    /// Scale about the center: same axes, semi-axes multiplied by `factor`.
    pub fn scale(&self, factor: f64) -> Result<Ellipsoid> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::param(format!("scale factor must be >= 0, got {factor}")));
        }
        let semi_axes: Vec<f64> = self.semi_axes.iter().map(|s| s * factor).collect();
        let log_volume = log_volume_of(&semi_axes);
        Ok(Ellipsoid {
            center: self.center.clone(),
            axes: self.axes.clone(),
            semi_axes,
            log_volume,
            ball: self.ball,
        })
    }

    /// Recompute the log-volume from the semi-axes.
    pub fn recomputed_log_volume(&self) -> f64 {
        log_volume_of(&self.semi_axes)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }

    pub fn to_record(&self, coverage_count: Option<usize>) -> SetRecord {
        let body = EllipsoidRecord {
            center: self.center.clone(),
            axes: self.axes(),
            semi_axes: self.semi_axes.clone(),
            log_volume: self.log_volume,
            coverage_count,
        };
        if self.ball {
            SetRecord::Ball(body)
        } else {
            SetRecord::Ellipsoid(body)
        }
    }
}

/// Deterministic tie-break order: smaller log-volume first, then
/// lexicographically smaller center, then smaller semi-axes.
pub fn canonical_cmp(a: &Ellipsoid, b: &Ellipsoid) -> Ordering {
    a.log_volume
        .total_cmp(&b.log_volume)
        .then_with(|| lex_cmp(&a.center, &b.center))
        .then_with(|| lex_cmp(&a.semi_axes, &b.semi_axes))
}

fn ratio_sq(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn log_volume_of(semi_axes: &[f64]) -> f64 {
    let d = semi_axes.len();
    let base = unit_ball_log_volume(d).expect("d >= 1");
    base + semi_axes.iter().map(|s| s.ln()).sum::<f64>()
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidEllipsoid(format!("non-finite {what}")))
    }
}

/// `exp((logvol(a) - logvol(b)) / d)`: the ratio of "average radii".
pub fn volume_ratio_per_dim(a: &Ellipsoid, b: &Ellipsoid) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            found: a.dim(),
        });
    }
    let (la, lb) = (a.log_volume, b.log_volume);
    if la == f64::NEG_INFINITY && lb == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    Ok(((la - lb) / a.dim() as f64).exp())
}

/// Anything that can answer point-membership queries.
pub trait Region {
    fn dim(&self) -> usize;
    fn contains_point(&self, y: &[f64]) -> bool;
}

impl Region for Ellipsoid {
    fn dim(&self) -> usize {
        Ellipsoid::dim(self)
    }
    fn contains_point(&self, y: &[f64]) -> bool {
        self.contains_unchecked(y)
    }
}

/// Number of points of `points` inside `set`.
pub fn coverage_count<R: Region + ?Sized>(set: &R, points: &PointSet) -> Result<usize> {
    if set.dim() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: points.dim(),
        });
    }
    Ok(points.rows().filter(|y| set.contains_point(y)).count())
}

/// A union of ellipsoids. Volume is tracked only as the sum-of-volumes bound.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageSet {
    d: usize,
    members: Vec<Ellipsoid>,
    log_volume_upper: f64,
}

impl CoverageSet {
    pub fn empty(d: usize) -> Self {
        CoverageSet {
            d,
            members: Vec::new(),
            log_volume_upper: f64::NEG_INFINITY,
        }
    }

    pub fn from_members(members: Vec<Ellipsoid>) -> Result<Self> {
        let d = members.first().ok_or(Error::EmptySet)?.dim();
        let mut set = CoverageSet::empty(d);
        for m in members {
            set.push(m)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, member: Ellipsoid) -> Result<()> {
        if member.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: member.dim(),
            });
        }
        self.members.push(member);
        self.log_volume_upper = log_sum_exp(self.members.iter().map(|m| m.log_volume));
        Ok(())
    }

    pub fn members(&self) -> &[Ellipsoid] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn log_volume_upper(&self) -> f64 {
        self.log_volume_upper
    }

    pub fn contains(&self, y: &[f64]) -> Result<bool> {
        if y.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: y.len(),
            });
        }
        Ok(self.contains_point(y))
    }

    pub fn to_record(&self, coverage_count: Option<usize>) -> SetRecord {
        SetRecord::Union(UnionRecord {
            members: self.members.iter().map(|m| m.to_record(None)).collect(),
            log_volume: self.log_volume_upper,
            coverage_count,
        })
    }
}

impl Region for CoverageSet {
    fn dim(&self) -> usize {
        self.d
    }
    fn contains_point(&self, y: &[f64]) -> bool {
        self.members.iter().any(|m| m.contains_unchecked(y))
    }
}

pub(crate) fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// JSON form shared by the CLI and the instance sidecars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SetRecord {
    Ball(EllipsoidRecord),
    Ellipsoid(EllipsoidRecord),
    Union(UnionRecord),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidRecord {
    pub center: Vec<f64>,
    pub axes: Vec<Vec<f64>>,
    pub semi_axes: Vec<f64>,
    #[serde(with = "log_volume_serde")]
    pub log_volume: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionRecord {
    pub members: Vec<SetRecord>,
    #[serde(with = "log_volume_serde")]
    pub log_volume: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_count: Option<usize>,
}

impl SetRecord {
    pub fn coverage_count(&self) -> Option<usize> {
        match self {
            SetRecord::Ball(r) | SetRecord::Ellipsoid(r) => r.coverage_count,
            SetRecord::Union(u) => u.coverage_count,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Rebuild the ellipsoid, keeping the stored log-volume bit-for-bit.
    pub fn to_ellipsoid(&self) -> Result<Ellipsoid> {
        let (body, ball) = match self {
            SetRecord::Ball(r) => (r, true),
            SetRecord::Ellipsoid(r) => (r, false),
            SetRecord::Union(_) => {
                return Err(Error::InvalidEllipsoid("record is a union".into()));
            }
        };
        let mut e = Ellipsoid::new(body.center.clone(), body.axes.clone(), body.semi_axes.clone())?;
        if ball {
            let r = e.semi_axes[0];
            if e.semi_axes.iter().any(|s| *s != r) {
                return Err(Error::InvalidEllipsoid("ball with unequal semi-axes".into()));
            }
            e.ball = true;
        }
        e.log_volume = checked_log_volume(body.log_volume, e.log_volume)?;
        Ok(e)
    }

    pub fn to_union(&self) -> Result<CoverageSet> {
        match self {
            SetRecord::Union(u) => {
                let members = u
                    .members
                    .iter()
                    .map(SetRecord::to_ellipsoid)
                    .collect::<Result<Vec<_>>>()?;
                let mut set = CoverageSet::from_members(members)?;
                set.log_volume_upper = checked_log_volume(u.log_volume, set.log_volume_upper)?;
                Ok(set)
            }
            other => CoverageSet::from_members(vec![other.to_ellipsoid()?]),
        }
    }
}

fn checked_log_volume(stored: f64, recomputed: f64) -> Result<f64> {
    let same = (stored == recomputed)
        || (stored.is_finite() && recomputed.is_finite() && (stored - recomputed).abs() <= LOG_VOLUME_TOL * (1.0 + recomputed.abs()));
    if same {
        Ok(stored)
    } else {
        Err(Error::InvalidEllipsoid(format!(
            "stored log_volume {stored} disagrees with semi-axes ({recomputed})"
        )))
    }
}

/// `-inf` log-volumes (degenerate sets) are written as `null`.
mod log_volume_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_ball_volumes_in_low_dimensions() {
        assert!(close(unit_ball_log_volume(1).unwrap(), 2f64.ln(), 1e-14));
        assert!(close(unit_ball_log_volume(2).unwrap(), PI.ln(), 1e-14));
        assert!(close(unit_ball_log_volume(3).unwrap(), (4.0 * PI / 3.0).ln(), 1e-14));
        // V_4 = pi^2 / 2, V_5 = 8 pi^2 / 15
        assert!(close(unit_ball_log_volume(4).unwrap(), (PI * PI / 2.0).ln(), 1e-13));
        assert!(close(unit_ball_log_volume(5).unwrap(), (8.0 * PI * PI / 15.0).ln(), 1e-13));
        assert!(matches!(unit_ball_log_volume(0), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn unit_ball_volume_large_d_is_finite() {
        let v = unit_ball_log_volume(1000).unwrap();
        assert!(v.is_finite() && v < -1000.0);
    }

    #[test]
    fn contains_basic_cases() {
        let unit = Ellipsoid::ball(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        assert!(unit.contains(&[0.0, 0.0, 0.0]).unwrap());
        assert!(!unit.contains(&[2.0, 0.0, 0.0]).unwrap());
        assert!(unit.contains(&[1.0, 0.0, 0.0]).unwrap());
        assert!(unit.contains(&[0.0, 0.0]).is_err());

        let e = Ellipsoid::new(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 1.0])
            .unwrap();
        assert!(e.contains(&[2.0, 0.0]).unwrap());
        assert!(!e.contains(&[0.0, 2.0]).unwrap());
    }

    #[test]
    fn zero_radius_ball_covers_only_duplicates() {
        let b = Ellipsoid::ball(vec![1.0, 2.0], 0.0).unwrap();
        assert_eq!(b.log_volume(), f64::NEG_INFINITY);
        assert!(b.contains(&[1.0, 2.0]).unwrap());
        assert!(!b.contains(&[1.0, 2.0 + 1e-9]).unwrap());
    }

    #[test]
    fn rejects_non_orthonormal_axes() {
        let r = Ellipsoid::new(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![1.0, 1.0]], vec![1.0, 1.0]);
        assert!(matches!(r, Err(Error::InvalidEllipsoid(_))));
    }

    #[test]
    fn scaling() {
        let e = Ellipsoid::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(e.scale(1.0).unwrap(), e);
        let s = e.scale(2.0).unwrap();
        assert!(close(s.log_volume(), PI.ln() + 2.0 * 2f64.ln(), 1e-14));
        assert_eq!(e.scale(0.0).unwrap().log_volume(), f64::NEG_INFINITY);
        assert!(e.scale(-1.0).is_err());
    }

    #[test]
    fn per_dim_ratio() {
        let b = Ellipsoid::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(close(volume_ratio_per_dim(&b, &b).unwrap(), 1.0, 1e-15));
        assert!(close(volume_ratio_per_dim(&b.scale(1.5).unwrap(), &b).unwrap(), 1.5, 1e-14));
        let e = Ellipsoid::new(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 1.0])
            .unwrap();
        assert!(close(volume_ratio_per_dim(&e, &b).unwrap(), 2f64.sqrt(), 1e-14));
        let b3 = Ellipsoid::ball(vec![0.0; 3], 1.0).unwrap();
        assert!(volume_ratio_per_dim(&b3, &b).is_err());
    }

    #[test]
    fn coverage_counts() {
        let pts = PointSet::from_rows(&vec![vec![0.0, 0.0]; 5]).unwrap();
        let b = Ellipsoid::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(coverage_count(&b, &pts).unwrap(), 5);

        let far = Ellipsoid::ball(vec![5.0, 5.0], 0.5).unwrap();
        let u = CoverageSet::from_members(vec![b.clone(), far]).unwrap();
        assert_eq!(coverage_count(&u, &pts).unwrap(), 5);
        let expected = log_sum_exp([b.log_volume(), u.members()[1].log_volume()]);
        assert!(close(u.log_volume_upper(), expected, 1e-15));
    }

    #[test]
    fn point_set_validation() {
        assert!(matches!(PointSet::new(vec![], 2), Err(Error::EmptySet)));
        assert!(PointSet::new(vec![1.0, f64::NAN], 2).is_err());
        assert!(PointSet::new(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(PointSet::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let p = PointSet::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(p.mean(), vec![1.0, 0.0]);
    }

    #[test]
    fn record_round_trip_is_bit_exact() {
        let axes = vec![
            vec![0.6, 0.8, 0.0],
            vec![-0.8, 0.6, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let e = Ellipsoid::new(vec![0.1, -3.7, 1e-7], axes, vec![1.3, 0.2, 7.0 / 3.0]).unwrap();
        let json = e.to_record(Some(4)).to_json().unwrap();
        let back = SetRecord::from_json(&json).unwrap();
        assert_eq!(back.coverage_count(), Some(4));
        let e2 = back.to_ellipsoid().unwrap();
        assert_eq!(e2, e);
        assert_eq!(e2.log_volume().to_bits(), e.log_volume().to_bits());

        let degenerate = Ellipsoid::ball(vec![1.0], 0.0).unwrap();
        let json = degenerate.to_record(None).to_json().unwrap();
        assert!(json.contains("\"log_volume\": null"));
        assert_eq!(SetRecord::from_json(&json).unwrap().to_ellipsoid().unwrap(), degenerate);

        let u = CoverageSet::from_members(vec![e.clone(), e.scale(2.0).unwrap()]).unwrap();
        let json = u.to_record(None).to_json().unwrap();
        assert!(json.contains("\"kind\": \"union\""));
        assert_eq!(SetRecord::from_json(&json).unwrap().to_union().unwrap(), u);
    }
}
