//! Behavior-space distances, kernel bandwidth selection and novelty scores.

use crate::error::{contract, Result};

/// Lower bound on the kernel width returned by [`silverman_bandwidth`].
pub const MIN_BANDWIDTH: f64 = 0.01;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Pairs further apart than this many bandwidths are left out of bulk sums;
/// each one would add less than `Φ(5) ≈ 1.5e-6` to an unscaled kernel sum.
const KERNEL_CUTOFF: f64 = 5.0;

/// Gaussian kernel `exp(-x²/2) / √(2π)`.
#[inline]
pub fn gaussian_kernel(x: f64) -> f64 {
    (-0.5 * x * x).exp() * INV_SQRT_2PI
}

/// Per-dimension min-max normalization of behavior vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    lo: Vec<f64>,
    inv_width: Vec<f64>,
}

impl Normalizer {
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self> {
        let mut lo = Vec::with_capacity(bounds.len());
        let mut inv_width = Vec::with_capacity(bounds.len());
        for (i, &(a, b)) in bounds.iter().enumerate() {
            let w = b - a;
            if !(w.is_finite() && w > 0.0) {
                return Err(contract(format!(
                    "behavior bound {i} has non-positive width ({a}, {b})"
                )));
            }
            lo.push(a);
            inv_width.push(1.0 / w);
        }
        Ok(Self { lo, inv_width })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Restricts the normalizer to a subset of dimensions, in the given order.
    pub fn select(&self, dims: &[usize]) -> Self {
        Self {
            lo: dims.iter().map(|&d| self.lo[d]).collect(),
            inv_width: dims.iter().map(|&d| self.inv_width[d]).collect(),
        }
    }

    pub fn normalize(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.lo.iter().zip(&self.inv_width))
            .map(|(v, (lo, iw))| (v - lo) * iw)
            .collect()
    }

    /// Normalized value of a single coordinate.
    #[inline]
    pub fn normalize_dim(&self, dim: usize, value: f64) -> f64 {
        (value - self.lo[dim]) * self.inv_width[dim]
    }

    /// Converts a normalized difference back to physical units.
    #[inline]
    pub fn scale_delta(&self, dim: usize, delta: f64) -> f64 {
        delta / self.inv_width[dim]
    }

    /// Squared normalized distance without bounds checking.
    #[inline]
    pub fn distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.inv_width.len() {
            let d = (a[i] - b[i]) * self.inv_width[i];
            acc += d * d;
        }
        acc
    }

    /// Like [`Normalizer::distance_sq`], but may stop early and return any
    /// value above `bound` once the partial sum exceeds it.
    #[inline]
    pub fn distance_sq_bounded(&self, a: &[f64], b: &[f64], bound: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.inv_width.len() {
            let d = (a[i] - b[i]) * self.inv_width[i];
            acc += d * d;
            if acc > bound {
                return acc;
            }
        }
        acc
    }
}

/// Euclidean distance between two behaviors after per-dimension min-max
/// normalization by `bounds`.
pub fn behavior_distance(a: &[f64], b: &[f64], bounds: &[(f64, f64)]) -> Result<f64> {
    if a.len() != b.len() || a.len() != bounds.len() {
        return Err(contract(format!(
            "behavior_distance dimension mismatch: {} vs {} with {} bounds",
            a.len(),
            b.len(),
            bounds.len()
        )));
    }
    let norm = Normalizer::new(bounds)?;
    Ok(norm.distance_sq(a, b).sqrt())
}

/// Scalar Gaussian rule-of-thumb bandwidth for already-normalized points.
///
/// `h = σ̄ · (4 / ((d + 2) N))^(1 / (d + 4))` with `σ̄` the mean of the
/// per-dimension sample standard deviations; floored at [`MIN_BANDWIDTH`].
pub fn silverman_bandwidth<P: AsRef<[f64]>>(points: &[P]) -> Result<f64> {
    let n = points.len();
    if n == 0 {
        return Err(contract("silverman_bandwidth on an empty set"));
    }
    if n == 1 {
        return Ok(MIN_BANDWIDTH);
    }
    let d = points[0].as_ref().len();
    if d == 0 || points.iter().any(|p| p.as_ref().len() != d) {
        return Err(contract(
            "silverman_bandwidth needs points of equal, non-zero dimension",
        ));
    }
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.as_ref()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; d];
    for p in points {
        for ((s, v), m) in var.iter_mut().zip(p.as_ref()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let sigma_bar = var.iter().map(|s| (s / (n - 1) as f64).sqrt()).sum::<f64>() / d as f64;
    Ok(bandwidth_from_sigma(sigma_bar, d, n))
}

pub(crate) fn bandwidth_from_sigma(sigma_bar: f64, d: usize, n: usize) -> f64 {
    if n <= 1 || !(sigma_bar > 0.0) {
        return MIN_BANDWIDTH;
    }
    let d = d as f64;
    let h = sigma_bar * (4.0 / ((d + 2.0) * n as f64)).powf(1.0 / (d + 4.0));
    h.max(MIN_BANDWIDTH)
}

/// Kernel-density novelty of `candidate` against `pool`.
///
/// `1 − (1/(N·h)) · Σ Φ(‖b_i − candidate‖ / h)`. Points are compared with a
/// plain Euclidean norm, so callers pass normalized vectors.
pub fn novelty<P: AsRef<[f64]>>(candidate: &[f64], pool: &[P], h: f64) -> Result<f64> {
    if pool.is_empty() {
        return Err(contract("novelty against an empty pool"));
    }
    if !(h > 0.0) {
        return Err(contract(format!("novelty bandwidth must be positive, got {h}")));
    }
    let mut sum = 0.0;
    for p in pool {
        let p = p.as_ref();
        if p.len() != candidate.len() {
            return Err(contract("novelty dimension mismatch"));
        }
        let d2: f64 = p.iter().zip(candidate).map(|(a, b)| (a - b) * (a - b)).sum();
        sum += gaussian_kernel(d2.sqrt() / h);
    }
    Ok(1.0 - sum / (pool.len() as f64 * h))
}

/// Novelty of the first `members` points of `pool` against the whole pool.
///
/// Equivalent to calling [`novelty`] once per member, but exploits kernel
/// symmetry and skips pairs further apart than `KERNEL_CUTOFF · h`. Pairs of
/// boxes from a kd-tree over the pool are pruned on their minimum distance.
pub fn novelty_scores(pool: &[Vec<f64>], members: usize, h: f64) -> Vec<f64> {
    let n = pool.len();
    assert!(members <= n && h > 0.0);
    if n == 0 {
        return Vec::new();
    }
    let tree = KdTree::build(pool);
    let d = tree.dim;
    let inv_h2 = 1.0 / (h * h);
    let cutoff = KERNEL_CUTOFF * h;
    let cutoff_sq = cutoff * cutoff;
    // Self term: distance zero.
    let mut sums = vec![INV_SQRT_2PI; n];
    let flat = &tree.points;
    let mut stack = vec![(0usize, 0usize)];
    while let Some((a, b)) = stack.pop() {
        if tree.box_distance_sq(a, b) > cutoff_sq {
            continue;
        }
        let (na, nb) = (&tree.nodes[a], &tree.nodes[b]);
        match (na.children, nb.children) {
            (None, None) => {
                for i in na.start..na.end {
                    let p = &flat[i * d..(i + 1) * d];
                    let first = if a == b { i + 1 } else { nb.start };
                    let mut acc = 0.0;
                    for j in first..nb.end {
                        let q = &flat[j * d..(j + 1) * d];
                        let d2: f64 = p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum();
                        if d2 > cutoff_sq {
                            continue;
                        }
                        let k = (-0.5 * d2 * inv_h2).exp() * INV_SQRT_2PI;
                        acc += k;
                        sums[j] += k;
                    }
                    sums[i] += acc;
                }
            }
            _ if a == b => {
                let (l, r) = na.children.expect("inner node");
                stack.extend([(l, l), (l, r), (r, r)]);
            }
            (Some((l, r)), None) => stack.extend([(l, b), (r, b)]),
            (None, Some((l, r))) => stack.extend([(a, l), (a, r)]),
            (Some((l, r)), Some(_)) if na.end - na.start >= nb.end - nb.start => stack.extend([(l, b), (r, b)]),
            (Some(_), Some((l, r))) => stack.extend([(a, l), (a, r)]),
        }
    }
    let scale = 1.0 / (n as f64 * h);
    let mut out = vec![0.0; members];
    for (k, &i) in tree.order.iter().enumerate() {
        if i < members {
            out[i] = 1.0 - sums[k] * scale;
        }
    }
    out
}

const LEAF_SIZE: usize = 24;

struct KdNode {
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Static kd-tree; points are stored contiguously in tree order and every
/// node keeps its bounding box.
struct KdTree {
    dim: usize,
    points: Vec<f64>,
    order: Vec<usize>,
    nodes: Vec<KdNode>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl KdTree {
    fn build(pool: &[Vec<f64>]) -> Self {
        let dim = pool[0].len();
        let mut tree = Self {
            dim,
            points: Vec::with_capacity(pool.len() * dim),
            order: (0..pool.len()).collect(),
            nodes: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
        };
        tree.split(pool, 0, pool.len());
        for &i in &tree.order {
            tree.points.extend_from_slice(&pool[i]);
        }
        tree
    }

    fn split(&mut self, pool: &[Vec<f64>], start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for &i in &self.order[start..end] {
            for (k, v) in pool[i].iter().enumerate() {
                lo[k] = lo[k].min(*v);
                hi[k] = hi[k].max(*v);
            }
        }
        let axis = (0..self.dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap_or(0);
        self.lo.extend_from_slice(&lo);
        self.hi.extend_from_slice(&hi);
        self.nodes.push(KdNode {
            start,
            end,
            children: None,
        });
        if end - start > LEAF_SIZE && hi[axis] > lo[axis] {
            let mid = (start + end) / 2;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                pool[a][axis].total_cmp(&pool[b][axis]).then(a.cmp(&b))
            });
            let l = self.split(pool, start, mid);
            let r = self.split(pool, mid, end);
            self.nodes[id].children = Some((l, r));
        }
        id
    }

    fn box_distance_sq(&self, a: usize, b: usize) -> f64 {
        let d = self.dim;
        let (alo, ahi) = (&self.lo[a * d..(a + 1) * d], &self.hi[a * d..(a + 1) * d]);
        let (blo, bhi) = (&self.lo[b * d..(b + 1) * d], &self.hi[b * d..(b + 1) * d]);
        (0..d)
            .map(|k| {
                let gap = (blo[k] - ahi[k]).max(alo[k] - bhi[k]).max(0.0);
                gap * gap
            })
            .sum()
    }
}
