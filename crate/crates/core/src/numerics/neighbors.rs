//! Exact nearest-neighbor distances and range counts.
//!
//! Low-dimensional indexes use a k-d tree with bounding-box pruning. Because
//! floating-point subtraction is monotone, the box lower bound never exceeds the
//! computed point distance, so pruning preserves bit-exact answers. For `d > 20` or
//! `N < 64` queries fall back to an exhaustive scan.

use crate::error::{Error, Result};

const LEAF_SIZE: usize = 16;
const MAX_TREE_DIM: usize = 20;
const MIN_TREE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    MaxNorm,
    Euclidean,
}

impl Metric {
    #[inline]
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::MaxNorm => a
                .iter()
                .zip(b)
                .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs())),
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Lower and upper bounds on the distance from `q` to any point in the box.
    fn box_bounds(self, q: &[f64], lo: &[f64], hi: &[f64]) -> (f64, f64) {
        let mut near = 0.0f64;
        let mut far = 0.0f64;
        for d in 0..q.len() {
            let below = if q[d] < lo[d] {
                lo[d] - q[d]
            } else if q[d] > hi[d] {
                q[d] - hi[d]
            } else {
                0.0
            };
            let above = (q[d] - lo[d]).abs().max((hi[d] - q[d]).abs());
            match self {
                Metric::MaxNorm => {
                    near = near.max(below);
                    far = far.max(above);
                }
                Metric::Euclidean => {
                    near += below * below;
                    far += above * above;
                }
            }
        }
        match self {
            Metric::MaxNorm => (near, far),
            Metric::Euclidean => (near.sqrt(), far.sqrt()),
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    children: Option<(usize, usize)>,
}

/// Immutable point set supporting exact k-th neighbor and range-count queries.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Vec<f64>,
    n: usize,
    dim: usize,
    metric: Metric,
    order: Vec<usize>,
    position: Vec<usize>,
    nodes: Vec<Node>,
}

impl NeighborIndex {
    /// Builds an index over `n` rows of width `dim` stored row-major in `points`.
    pub fn new(points: Vec<f64>, dim: usize, metric: Metric) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("neighbor index needs dim >= 1".into()));
        }
        if points.len() % dim != 0 {
            return Err(Error::Argument(format!(
                "{} values do not split into rows of width {dim}",
                points.len()
            )));
        }
        let n = points.len() / dim;
        let mut index = NeighborIndex {
            points,
            n,
            dim,
            metric,
            order: (0..n).collect(),
            position: Vec::new(),
            nodes: Vec::new(),
        };
        if index.uses_tree() {
            index.build(0, n);
        }
        index.position = vec![0; n];
        for (pos, &row) in index.order.iter().enumerate() {
            index.position[row] = pos;
        }
        Ok(index)
    }

    /// Builds an index from a column subset of a row-major matrix.
    pub fn from_columns(
        values: &[f64],
        row_width: usize,
        columns: std::ops::Range<usize>,
        metric: Metric,
    ) -> Result<Self> {
        let dim = columns.len();
        let mut points = Vec::with_capacity(values.len() / row_width.max(1) * dim);
        for row in values.chunks_exact(row_width) {
            points.extend_from_slice(&row[columns.clone()]);
        }
        Self::new(points, dim, metric)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn uses_tree(&self) -> bool {
        self.dim <= MAX_TREE_DIM && self.n >= MIN_TREE_POINTS
    }

    #[inline]
    pub fn point(&self, row: usize) -> &[f64] {
        &self.points[row * self.dim..(row + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let dim = self.dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &row in &self.order[start..end] {
            let p = &self.points[row * dim..(row + 1) * dim];
            for d in 0..dim {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            lo: lo.clone(),
            hi: hi.clone(),
            children: None,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let split_dim = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[split_dim] <= lo[split_dim] {
            // all points coincide
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + split_dim].total_cmp(&points[b * dim + split_dim])
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    fn check_row(&self, row: usize) -> Result<()> {
        if row >= self.n {
            return Err(Error::Argument(format!(
                "query row {row} out of bounds for {} points",
                self.n
            )));
        }
        Ok(())
    }

    /// Distance from `query_row` to its `k`-th nearest other point (`k >= 1`).
    pub fn knn_distance(&self, query_row: usize, k: usize) -> Result<f64> {
        Ok(self.knn(query_row, k)?[k - 1].0)
    }

    /// The `k` nearest other points as `(distance, row)`, nearest first. Among equal
    /// distances the order is unspecified.
    pub fn knn(&self, query_row: usize, k: usize) -> Result<Vec<(f64, usize)>> {
        self.check_row(query_row)?;
        if k == 0 || k >= self.n {
            return Err(Error::Argument(format!(
                "k = {k} must satisfy 1 <= k < N = {}",
                self.n
            )));
        }
        if !self.uses_tree() {
            return Ok(self.knn_scan(query_row, k));
        }
        let q = self.point(query_row);
        // `best` holds the k smallest distances seen, sorted ascending.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.knn_visit(0, q, query_row, k, &mut best);
        Ok(best)
    }

    fn knn_visit(&self, node_id: usize, q: &[f64], skip: usize, k: usize, best: &mut Vec<(f64, usize)>) {
        let node = &self.nodes[node_id];
        let (near, _) = self.metric.box_bounds(q, &node.lo, &node.hi);
        if best.len() == k && near > best[k - 1].0 {
            return;
        }
        match node.children {
            None => {
                for &row in &self.order[node.start..node.end] {
                    if row == skip {
                        continue;
                    }
                    let d = self.metric.distance(q, self.point(row));
                    if best.len() < k || d < best[k - 1].0 {
                        let at = best.partition_point(|b| b.0 <= d);
                        best.insert(at, (d, row));
                        if best.len() > k {
                            best.pop();
                        }
                    }
                }
            }
            Some((left, right)) => {
                let dl = self.metric.box_bounds(q, &self.nodes[left].lo, &self.nodes[left].hi).0;
                let dr = self
                    .metric
                    .box_bounds(q, &self.nodes[right].lo, &self.nodes[right].hi)
                    .0;
                if dl <= dr {
                    self.knn_visit(left, q, skip, k, best);
                    self.knn_visit(right, q, skip, k, best);
                } else {
                    self.knn_visit(right, q, skip, k, best);
                    self.knn_visit(left, q, skip, k, best);
                }
            }
        }
    }

    fn knn_scan(&self, query_row: usize, k: usize) -> Vec<(f64, usize)> {
        let q = self.point(query_row);
        let mut dists: Vec<(f64, usize)> = (0..self.n)
            .filter(|&j| j != query_row)
            .map(|j| (self.metric.distance(q, self.point(j)), j))
            .collect();
        dists.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
        dists.truncate(k);
        dists.sort_by(|a, b| a.0.total_cmp(&b.0));
        dists
    }

    /// Number of points other than `query_row` within `radius`, using `<` when
    /// `strict` and `<=` otherwise.
    pub fn range_count(&self, query_row: usize, radius: f64, strict: bool) -> Result<usize> {
        self.check_row(query_row)?;
        let q = self.point(query_row);
        if !self.uses_tree() {
            let count = (0..self.n)
                .filter(|&j| j != query_row)
                .filter(|&j| within(self.metric.distance(q, self.point(j)), radius, strict))
                .count();
            return Ok(count);
        }
        let self_pos = self.position[query_row];
        Ok(self.range_visit(0, q, self_pos, radius, strict))
    }

    fn range_visit(&self, node_id: usize, q: &[f64], self_pos: usize, radius: f64, strict: bool) -> usize {
        let node = &self.nodes[node_id];
        let (near, far) = self.metric.box_bounds(q, &node.lo, &node.hi);
        if !within(near, radius, strict) {
            return 0;
        }
        let contains_self = (node.start..node.end).contains(&self_pos);
        if within(far, radius, strict) {
            return node.end - node.start - usize::from(contains_self);
        }
        match node.children {
            None => self.order[node.start..node.end]
                .iter()
                .enumerate()
                .filter(|(offset, _)| node.start + offset != self_pos)
                .filter(|(_, &row)| within(self.metric.distance(q, self.point(row)), radius, strict))
                .count(),
            Some((left, right)) => {
                self.range_visit(left, q, self_pos, radius, strict)
                    + self.range_visit(right, q, self_pos, radius, strict)
            }
        }
    }
}

#[inline]
fn within(d: f64, radius: f64, strict: bool) -> bool {
    if strict {
        d < radius
    } else {
        d <= radius
    }
}
