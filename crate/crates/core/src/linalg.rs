//! Small dense-vector helpers shared by the algorithm modules.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lexicographic comparison under `f64::total_cmp`.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Mean of the selected rows, accumulated relative to the first selected row
/// so that a set of identical rows yields that row exactly.
pub fn mean_of<'a, I>(rows: I, d: usize) -> Option<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = rows.into_iter();
    let first = iter.next()?;
    let mut acc = vec![0.0; d];
    let mut count = 1usize;
    for row in iter {
        for ((a, x), x0) in acc.iter_mut().zip(row).zip(first) {
            *a += x - x0;
        }
        count += 1;
    }
    let inv = 1.0 / count as f64;
    Some(first.iter().zip(&acc).map(|(x0, a)| x0 + a * inv).collect())
}

/// k-th smallest value (0-based) of a scratch buffer; the buffer is reordered.
pub fn kth_smallest(values: &mut [f64], k: usize) -> f64 {
    let (_, v, _) = values.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
    *v
}
