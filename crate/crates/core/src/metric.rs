//! Covariate samples in a metric space.
//!
//! A [`PointCloud`] stores `n` points behind one of three backends. Neighbor
//! search never looks at coordinates directly; it goes through [`Metric`],
//! which also exposes a monotone surrogate of the distance (`rank_key`) so
//! that exact and accelerated searches compare bit-identical quantities.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Distance backend of a [`PointCloud`].
#[derive(Debug, Clone, PartialEq)]
pub enum Backend<T> {
    /// Row-major coordinates in `R^dim`.
    Euclidean { dim: usize, coords: Vec<T> },
    /// Curves sampled on `m` uniform grid points of `[0, 1]`, row-major.
    /// Distances are `sqrt(dt * sum_g (x_i(t_g) - x_j(t_g))^2)` with
    /// `dt = 1 / (m - 1)`.
    FunctionGrid { m: usize, values: Vec<T> },
    /// Full `n x n` distance matrix, row-major.
    Precomputed { matrix: Vec<T> },
}

/// Anything that can serve as the covariate space for neighbor search.
pub trait Metric<T: Real>: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance between points `i` and `j` (unchecked indices).
    fn distance_unchecked(&self, i: usize, j: usize) -> T;

    /// Squared distance, computed without an intermediate square root where
    /// the backend allows it.
    fn sq_distance_unchecked(&self, i: usize, j: usize) -> T;

    /// Monotone (non-decreasing) transform of the distance used to rank
    /// neighbor candidates; equal keys are treated as exact ties.
    fn rank_key(&self, i: usize, j: usize) -> T;

    /// Coordinates and dimension when the backend is Euclidean.
    fn euclidean_view(&self) -> Option<(&[T], usize)> {
        None
    }

    fn distance(&self, i: usize, j: usize) -> Result<T> {
        let n = self.len();
        for index in [i, j] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, len: n });
            }
        }
        Ok(self.distance_unchecked(i, j))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    n: usize,
    backend: Backend<T>,
}

fn check_finite<T: Real>(values: &[T], width: usize) -> Result<()> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            point: pos / width,
            coord: pos % width,
        });
    }
    Ok(())
}

impl<T: Real> PointCloud<T> {
    /// Points in `R^dim`, given as row-major coordinates.
    pub fn euclidean(coords: Vec<T>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::LengthMismatch {
                what: "coordinates (not a multiple of the dimension)",
                expected: (coords.len() / dim + 1) * dim,
                found: coords.len(),
            });
        }
        check_finite(&coords, dim)?;
        Ok(Self {
            n: coords.len() / dim,
            backend: Backend::Euclidean { dim, coords },
        })
    }

    /// One-dimensional points.
    pub fn from_scalars(values: Vec<T>) -> Result<Self> {
        Self::euclidean(values, 1)
    }

    /// Curves observed on `m >= 2` uniform grid points, row-major.
    pub fn function_grid(values: Vec<T>, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "function grid needs at least 2 points, got {m}"
            )));
        }
        if !values.len().is_multiple_of(m) {
            return Err(Error::LengthMismatch {
                what: "grid values (not a multiple of the grid size)",
                expected: (values.len() / m + 1) * m,
                found: values.len(),
            });
        }
        check_finite(&values, m)?;
        Ok(Self {
            n: values.len() / m,
            backend: Backend::FunctionGrid { m, values },
        })
    }

    /// A precomputed distance matrix; must be square, symmetric, zero on the
    /// diagonal and nonnegative.
    pub fn precomputed(matrix: Vec<T>, n: usize) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::InvalidDistanceMatrix(format!(
                "expected {} entries for {n} points, found {}",
                n * n,
                matrix.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = matrix[i * n + j];
                if !v.is_finite() || v < T::zero() {
                    return Err(Error::InvalidDistanceMatrix(format!(
                        "entry ({i}, {j}) = {v} is not a finite nonnegative number"
                    )));
                }
                if i == j && v != T::zero() {
                    return Err(Error::InvalidDistanceMatrix(format!(
                        "diagonal entry {i} is {v}, not zero"
                    )));
                }
                if v != matrix[j * n + i] {
                    return Err(Error::InvalidDistanceMatrix(
                        "distance matrix not symmetric".into(),
                    ));
                }
            }
        }
        Ok(Self {
            n,
            backend: Backend::Precomputed { matrix },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn backend(&self) -> &Backend<T> {
        &self.backend
    }

    /// Per-coordinate standardization (mean zero, unit population standard
    /// deviation). Zero-variance coordinates are only centered. Only the
    /// Euclidean backend has coordinates to rescale; other backends are
    /// returned unchanged.
    pub fn standardized(&self) -> Self {
        let Backend::Euclidean { dim, coords } = &self.backend else {
            return self.clone();
        };
        let (dim, n) = (*dim, self.n);
        if n == 0 {
            return self.clone();
        }
        let nf = T::from_usize_lossy(n);
        let mut out = coords.clone();
        for c in 0..dim {
            let mean = (0..n).map(|i| coords[i * dim + c]).sum::<T>() / nf;
            let var = (0..n)
                .map(|i| {
                    let d = coords[i * dim + c] - mean;
                    d * d
                })
                .sum::<T>()
                / nf;
            let sd = var.sqrt();
            for i in 0..n {
                let v = coords[i * dim + c] - mean;
                out[i * dim + c] = if sd > T::zero() { v / sd } else { v };
            }
        }
        Self {
            n,
            backend: Backend::Euclidean { dim, coords: out },
        }
    }

    /// Horizontal concatenation of Euclidean clouds (used by tests and the
    /// CLI to assemble multi-column covariates).
    pub fn concat_euclidean(parts: &[&PointCloud<T>]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        let n = first.n;
        let mut dims = Vec::with_capacity(parts.len());
        for p in parts {
            if p.n != n {
                return Err(Error::LengthMismatch {
                    what: "points per component",
                    expected: n,
                    found: p.n,
                });
            }
            match &p.backend {
                Backend::Euclidean { dim, .. } => dims.push(*dim),
                _ => {
                    return Err(Error::InvalidArgument(
                        "only Euclidean clouds can be concatenated".into(),
                    ))
                }
            }
        }
        let total: usize = dims.iter().sum();
        let mut coords = Vec::with_capacity(total * n);
        for i in 0..n {
            for (p, &d) in parts.iter().zip(&dims) {
                if let Backend::Euclidean { coords: c, .. } = &p.backend {
                    coords.extend_from_slice(&c[i * d..(i + 1) * d]);
                }
            }
        }
        Self::euclidean(coords, total)
    }

    fn row_sq_sum(values: &[T], width: usize, i: usize, j: usize) -> T {
        let a = &values[i * width..(i + 1) * width];
        let b = &values[j * width..(j + 1) * width];
        let mut acc = T::zero();
        for (x, y) in a.iter().zip(b) {
            let d = *x - *y;
            acc = acc + d * d;
        }
        acc
    }
}

impl<T: Real> Metric<T> for PointCloud<T> {
    fn len(&self) -> usize {
        self.n
    }

    fn distance_unchecked(&self, i: usize, j: usize) -> T {
        match &self.backend {
            Backend::Precomputed { matrix } => matrix[i * self.n + j],
            _ => self.sq_distance_unchecked(i, j).sqrt(),
        }
    }

    fn sq_distance_unchecked(&self, i: usize, j: usize) -> T {
        match &self.backend {
            Backend::Euclidean { dim, coords } => Self::row_sq_sum(coords, *dim, i, j),
            Backend::FunctionGrid { m, values } => {
                let dt = T::one() / T::from_usize_lossy(m - 1);
                dt * Self::row_sq_sum(values, *m, i, j)
            }
            Backend::Precomputed { matrix } => {
                let d = matrix[i * self.n + j];
                d * d
            }
        }
    }

    fn rank_key(&self, i: usize, j: usize) -> T {
        match &self.backend {
            Backend::Euclidean { dim, coords } => Self::row_sq_sum(coords, *dim, i, j),
            // the constant grid weight does not change the ordering
            Backend::FunctionGrid { m, values } => Self::row_sq_sum(values, *m, i, j),
            Backend::Precomputed { matrix } => matrix[i * self.n + j],
        }
    }

    fn euclidean_view(&self) -> Option<(&[T], usize)> {
        match &self.backend {
            Backend::Euclidean { dim, coords } => Some((coords.as_slice(), *dim)),
            _ => None,
        }
    }
}

/// Joint space of several clouds sharing the same points, with the
/// root-sum-of-squares combination of component distances.
#[derive(Debug, Clone)]
pub struct ProductCloud<'a, T> {
    n: usize,
    components: Vec<&'a PointCloud<T>>,
}

impl<'a, T: Real> ProductCloud<'a, T> {
    pub fn new(components: Vec<&'a PointCloud<T>>) -> Result<Self> {
        let n = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("product metric needs a component".into()))?
            .n;
        for c in &components {
            if c.n != n {
                return Err(Error::LengthMismatch {
                    what: "points per product component",
                    expected: n,
                    found: c.n,
                });
            }
        }
        Ok(Self { n, components })
    }

    pub fn components(&self) -> &[&'a PointCloud<T>] {
        &self.components
    }

    pub fn product_distance(&self, i: usize, j: usize) -> Result<T> {
        self.distance(i, j)
    }
}

impl<T: Real> Metric<T> for ProductCloud<'_, T> {
    fn len(&self) -> usize {
        self.n
    }

    fn distance_unchecked(&self, i: usize, j: usize) -> T {
        self.sq_distance_unchecked(i, j).sqrt()
    }

    fn sq_distance_unchecked(&self, i: usize, j: usize) -> T {
        self.components
            .iter()
            .fold(T::zero(), |acc, c| acc + c.sq_distance_unchecked(i, j))
    }

    fn rank_key(&self, i: usize, j: usize) -> T {
        self.sq_distance_unchecked(i, j)
    }
}
