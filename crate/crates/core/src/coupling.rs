//! Contingency of each label with its nearest neighbor's label, and the
//! resulting coefficient `psi_hat`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::NeighborGraph;
use crate::labels::LabelVector;
use crate::scalar::{canonical_sum, Real};

/// Norm applied to the (estimated) covariance of the conditional class
/// probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixNorm {
    /// `||D^{-1/2} A D^{-1/2}||_F`
    WeightedFrobenius,
    /// `trace(D^{-1/2} A D^{-1/2})`
    WeightedTrace,
}

/// Monotone link mapping the norm ratio to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Square,
    Identity,
}

impl Link {
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Link::Square => x * x,
            Link::Identity => x,
        }
    }
}

/// Counts of `(Y_i, Y_N(i))` pairs over `K` levels.
///
/// Row index is the level of `Y_i`, column index the level of its
/// neighbor's label.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyCounts<T> {
    k: usize,
    n: usize,
    counts: Vec<u64>,
    joint: Vec<T>,
    row: Vec<T>,
    col: Vec<T>,
}

impl<T: Real> ContingencyCounts<T> {
    /// Builds the table from a `k x k` row-major count matrix.
    pub fn from_counts(counts: Vec<u64>, k: usize) -> Result<Self> {
        if counts.len() != k * k {
            return Err(Error::LengthMismatch {
                what: "count matrix",
                expected: k * k,
                found: counts.len(),
            });
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidArgument("empty contingency table".into()));
        }
        let n = total as usize;
        let nf = T::from_usize_lossy(n);
        let joint = counts
            .iter()
            .map(|&c| T::from_u64(c).expect("count representable") / nf)
            .collect();
        let row = (0..k)
            .map(|a| T::from_u64((0..k).map(|b| counts[a * k + b]).sum()).unwrap() / nf)
            .collect();
        let col = (0..k)
            .map(|b| T::from_u64((0..k).map(|a| counts[a * k + b]).sum()).unwrap() / nf)
            .collect();
        Ok(Self {
            k,
            n,
            counts,
            joint,
            row,
            col,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.k + b]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `p_hat_{a,b}`
    pub fn joint(&self, a: usize, b: usize) -> T {
        self.joint[a * self.k + b]
    }

    /// Row marginals `p_hat_a`.
    pub fn row(&self) -> &[T] {
        &self.row
    }

    /// Column marginals `q_hat_b`.
    pub fn col(&self) -> &[T] {
        &self.col
    }

    /// Levels with no observations. A level absent from the labels is also
    /// absent from the neighbor labels, so these rows and columns are empty.
    pub fn empty_levels(&self) -> Vec<usize> {
        (0..self.k)
            .filter(|&a| self.row[a] == T::zero() && self.col[a] == T::zero())
            .collect()
    }

    /// Observed levels that never occur as a neighbor's label.
    pub fn unmatched_levels(&self) -> Vec<usize> {
        (0..self.k)
            .filter(|&a| self.row[a] > T::zero() && self.col[a] == T::zero())
            .collect()
    }

    /// The table restricted to observed levels, plus the dropped levels.
    pub fn reduced(&self) -> (Self, Vec<usize>) {
        let dropped = self.empty_levels();
        if dropped.is_empty() {
            return (self.clone(), dropped);
        }
        let keep: Vec<usize> = (0..self.k).filter(|a| !dropped.contains(a)).collect();
        let k = keep.len();
        let mut counts = Vec::with_capacity(k * k);
        for &a in &keep {
            for &b in &keep {
                counts.push(self.count(a, b));
            }
        }
        let reduced = Self::from_counts(counts, k).expect("reduced table keeps all mass");
        (reduced, dropped)
    }

    /// Applies a level bijection: level `a` becomes `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::LengthMismatch {
                what: "level permutation",
                expected: self.k,
                found: perm.len(),
            });
        }
        let mut counts = vec![0; self.k * self.k];
        for a in 0..self.k {
            for b in 0..self.k {
                counts[perm[a] * self.k + perm[b]] = self.count(a, b);
            }
        }
        Self::from_counts(counts, self.k)
    }
}

/// Counts `(Y_i, Y_N(i))` over all points.
pub fn contingency<T: Real>(y: &LabelVector, g: &NeighborGraph) -> Result<ContingencyCounts<T>> {
    if y.len() != g.n() {
        return Err(Error::LengthMismatch {
            what: "labels vs graph vertices",
            expected: g.n(),
            found: y.len(),
        });
    }
    let k = y.k();
    let codes = y.codes();
    let mut counts = vec![0u64; k * k];
    for (i, &j) in g.neighbors().iter().enumerate() {
        counts[codes[i] * k + codes[j]] += 1;
    }
    ContingencyCounts::from_counts(counts, k)
}

fn active<T: Real>(c: &ContingencyCounts<T>) -> Result<ContingencyCounts<T>> {
    let (r, _) = c.reduced();
    if r.k() < 2 {
        return Err(Error::TooFewLevels { k: r.k() });
    }
    Ok(r)
}

/// `psi_hat = 1/(K-1) * sum_{a,b} (p_ab - p_a q_b)^2 / (p_a q_b)` over the
/// observed levels.
///
/// Cells whose column never occurs as a neighbor label have a zero
/// numerator and are skipped. The value is not clipped to `[0, 1]`.
pub fn psi_hat<T: Real>(c: &ContingencyCounts<T>) -> Result<T> {
    let r = active(c)?;
    let k = r.k();
    let mut terms = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            let e = r.row()[a] * r.col()[b];
            if e > T::zero() {
                let d = r.joint(a, b) - e;
                terms.push(d * d / e);
            }
        }
    }
    Ok(canonical_sum(terms) / T::from_usize_lossy(k - 1))
}

/// Plug-in version of the norm-based coefficient
/// `link(||Var Q(X)|| / ||Var Q(Y)||)`.
///
/// `Var Q(X)` is estimated by `(p_ab + p_ba)/2 - p_a q_b`, the weighting
/// matrix is `diag(p_hat)`, and `||Var Q(Y)||` takes its closed form: `K-1`
/// for the weighted trace and `sqrt(K-1)` for the weighted Frobenius norm.
pub fn psi_hat_norm<T: Real>(c: &ContingencyCounts<T>, norm: MatrixNorm, link: Link) -> Result<T> {
    let r = active(c)?;
    let k = r.k();
    let p = r.row();
    let q = r.col();
    let half = T::lit(0.5);
    let entry = |a: usize, b: usize| (r.joint(a, b) + r.joint(b, a)) * half - p[a] * q[b];
    let km1 = T::from_usize_lossy(k - 1);
    let ratio = match norm {
        MatrixNorm::WeightedFrobenius => {
            let mut terms = Vec::with_capacity(k * k);
            for a in 0..k {
                for b in 0..k {
                    let v = entry(a, b);
                    terms.push(v * v / (p[a] * p[b]));
                }
            }
            (canonical_sum(terms) / km1).sqrt()
        }
        MatrixNorm::WeightedTrace => {
            canonical_sum((0..k).map(|a| entry(a, a) / p[a]).collect()) / km1
        }
    };
    Ok(link.apply(ratio))
}
