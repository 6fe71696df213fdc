//! The nearest-neighbor graph of a covariate sample and its statistics.

mod kdtree;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::scalar::Real;
use crate::special::beta_reg;

use kdtree::{Best, KdTree};

/// How neighbors are searched. Every strategy returns the same graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    /// k-d tree for low-dimensional Euclidean clouds, brute force otherwise.
    #[default]
    Auto,
    BruteForce,
    /// Falls back to brute force when the cloud is not Euclidean.
    KdTree,
}

const KD_MAX_DIM: usize = 8;
const KD_MIN_POINTS: usize = 64;

/// `nbr[i]` is the index of the nearest other point of `i`; ties go to the
/// smallest index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeighborGraph {
    n: usize,
    nbr: Vec<usize>,
    in_degree: Vec<usize>,
    had_ties: bool,
}

impl NeighborGraph {
    /// Graph from an explicit neighbor array (used for hand-built graphs).
    pub fn from_neighbors(nbr: Vec<usize>) -> Result<Self> {
        let n = nbr.len();
        if n < 2 {
            return Err(Error::TooFewPoints { n, required: 2 });
        }
        let mut in_degree = vec![0; n];
        for (i, &j) in nbr.iter().enumerate() {
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, len: n });
            }
            if j == i {
                return Err(Error::InvalidArgument(format!("point {i} is its own neighbor")));
            }
            in_degree[j] += 1;
        }
        Ok(Self {
            n,
            nbr,
            in_degree,
            had_ties: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self) -> &[usize] {
        &self.nbr
    }

    pub fn neighbor(&self, i: usize) -> usize {
        self.nbr[i]
    }

    pub fn in_degrees(&self) -> &[usize] {
        &self.in_degree
    }

    /// Whether any point had two or more equidistant nearest candidates.
    pub fn had_ties(&self) -> bool {
        self.had_ties
    }

    /// `W_n`: fraction of points whose neighbor points back at them.
    pub fn mutual_fraction<T: Real>(&self) -> T {
        T::from_usize_lossy(self.mutual_count()) / T::from_usize_lossy(self.n)
    }

    /// `n * W_n`, always even.
    pub fn mutual_count(&self) -> usize {
        (0..self.n).filter(|&i| self.nbr[self.nbr[i]] == i).count()
    }

    /// `W_n' = (1/n) #{(i, j) : i != j, N(i) = N(j)}`, via in-degrees.
    pub fn shared_neighbor_count<T: Real>(&self) -> T {
        let pairs: usize = self.in_degree.iter().map(|&d| d * d.saturating_sub(1)).sum();
        T::from_usize_lossy(pairs) / T::from_usize_lossy(self.n)
    }

    /// `L_n`: the largest in-degree.
    pub fn max_in_degree(&self) -> usize {
        self.in_degree.iter().copied().max().unwrap_or(0)
    }

    /// `L_n >= n^{1/4}`, the regime where the chi-squared approximation is
    /// not backed by the degree condition.
    pub fn degree_warning(&self) -> bool {
        (self.max_in_degree() as f64) >= (self.n as f64).powf(0.25)
    }
}

/// Exact nearest-neighbor graph with the default search strategy.
pub fn build_neighbor_graph<T: Real, M: Metric<T> + ?Sized>(cloud: &M) -> Result<NeighborGraph> {
    build_neighbor_graph_with(cloud, SearchStrategy::Auto)
}

pub fn build_neighbor_graph_with<T: Real, M: Metric<T> + ?Sized>(
    cloud: &M,
    strategy: SearchStrategy,
) -> Result<NeighborGraph> {
    let n = cloud.len();
    if n < 2 {
        return Err(Error::TooFewPoints { n, required: 2 });
    }
    let tree = match (strategy, cloud.euclidean_view()) {
        (SearchStrategy::BruteForce, _) | (_, None) => None,
        (SearchStrategy::KdTree, Some((coords, dim))) => Some(KdTree::build(coords, dim)),
        (SearchStrategy::Auto, Some((coords, dim))) => {
            (dim <= KD_MAX_DIM && n >= KD_MIN_POINTS).then(|| KdTree::build(coords, dim))
        }
    };
    let results: Vec<Best<T>> = match &tree {
        Some(t) => (0..n)
            .into_par_iter()
            .map(|i| t.nearest_excluding_self(i))
            .collect(),
        None => (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best = Best::new();
                for j in (0..n).filter(|&j| j != i) {
                    best.offer(cloud.rank_key(i, j), j);
                }
                best
            })
            .collect(),
    };
    let mut nbr = Vec::with_capacity(n);
    let mut had_ties = false;
    for b in results {
        if b.index == usize::MAX {
            return Err(Error::InvalidArgument(
                "neighbor search failed (non-comparable distances)".into(),
            ));
        }
        had_ties |= b.tied;
        nbr.push(b.index);
    }
    let mut g = NeighborGraph::from_neighbors(nbr)?;
    g.had_ties = had_ties;
    Ok(g)
}

/// Limit of `W_n` for continuous data in `R^d`: the volume of a unit ball
/// divided by the volume of the union of two unit balls at center distance
/// one. The lens is twice a cap of height 1/2, whose volume relative to the
/// ball is `I_{3/4}((d+1)/2, 1/2) / 2`, so `gamma_d = 1 / (2 - I_{3/4}((d+1)/2, 1/2))`.
pub fn gamma_d<T: Real>(d: usize) -> Result<T> {
    match d {
        0 => Err(Error::InvalidArgument("dimension must be at least 1".into())),
        1 => Ok(T::lit(2.0) / T::lit(3.0)),
        _ => {
            let a = (T::from_usize_lossy(d) + T::one()) / T::lit(2.0);
            let lens_over_ball = beta_reg(a, T::lit(0.5), T::lit(0.75))?;
            Ok(T::one() / (T::lit(2.0) - lens_over_ball))
        }
    }
}
