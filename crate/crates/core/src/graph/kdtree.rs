//! Exact single nearest-neighbor queries in low-dimensional Euclidean space.
//!
//! Candidates are ranked by the same squared-distance sum the brute-force
//! path uses, with ties broken toward the smaller index, so both paths return
//! identical neighbor arrays.

use crate::scalar::Real;

const LEAF_SIZE: usize = 16;

enum Node<T> {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: T, left: usize, right: usize },
}

pub(crate) struct KdTree<'a, T> {
    dim: usize,
    coords: &'a [T],
    order: Vec<usize>,
    nodes: Vec<Node<T>>,
}

#[derive(Clone, Copy)]
pub(crate) struct Best<T> {
    pub key: T,
    pub index: usize,
    pub tied: bool,
}

impl<T: Real> Best<T> {
    pub fn new() -> Self {
        Self {
            key: T::infinity(),
            index: usize::MAX,
            tied: false,
        }
    }

    #[inline]
    pub fn offer(&mut self, key: T, index: usize) {
        if key < self.key {
            self.key = key;
            self.index = index;
            self.tied = false;
        } else if key == self.key {
            self.tied = true;
            if index < self.index {
                self.index = index;
            }
        }
    }
}

impl<'a, T: Real> KdTree<'a, T> {
    pub fn build(coords: &'a [T], dim: usize) -> Self {
        let n = coords.len() / dim;
        let mut tree = Self {
            dim,
            coords,
            order: (0..n).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
        };
        if n > 0 {
            tree.build_node(0, n);
        }
        tree
    }

    #[inline]
    fn coord(&self, i: usize, axis: usize) -> T {
        self.coords[i * self.dim + axis]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        if axis.is_none() {
            // all points coincide
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = axis.unwrap_or(0);
        let mid = start + (end - start) / 2;
        let (dim, coords) = (self.dim, self.coords);
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coords[a * dim + axis]
                .partial_cmp(&coords[b * dim + axis])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let value = self.coord(self.order[mid], axis);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for axis in 0..self.dim {
            let mut lo = T::infinity();
            let mut hi = T::neg_infinity();
            for &i in &self.order[start..end] {
                let v = self.coord(i, axis);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let spread = hi - lo;
            if spread > T::zero() && best.is_none_or(|(_, s)| spread > s) {
                best = Some((axis, spread));
            }
        }
        best.map(|(a, _)| a)
    }

    #[inline]
    fn sq_key(&self, i: usize, j: usize) -> T {
        let a = &self.coords[i * self.dim..(i + 1) * self.dim];
        let b = &self.coords[j * self.dim..(j + 1) * self.dim];
        let mut acc = T::zero();
        for (x, y) in a.iter().zip(b) {
            let d = *x - *y;
            acc = acc + d * d;
        }
        acc
    }

    /// Nearest neighbor of point `query` among all other points.
    pub fn nearest_excluding_self(&self, query: usize) -> Best<T> {
        let mut best = Best::new();
        if !self.nodes.is_empty() {
            self.search(0, query, &mut best);
        }
        best
    }

    fn search(&self, node: usize, query: usize, best: &mut Best<T>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if j != query {
                        best.offer(self.sq_key(query, j), j);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let q = self.coord(query, axis);
                // left holds coordinates <= value, right >= value
                let (near, far, diff) = if q < value {
                    (left, right, value - q)
                } else {
                    (right, left, q - value)
                };
                self.search(near, query, best);
                // `<=` keeps equal-key candidates with a smaller index reachable
                if diff * diff <= best.key {
                    self.search(far, query, best);
                }
            }
        }
    }
}
