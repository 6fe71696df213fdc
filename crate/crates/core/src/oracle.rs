//! Exact population values for finite joint distributions of `(X, Y)` and
//! `(X, Z, Y)`.
//!
//! With `Q_k(x) = P(Y = k | X = x)` and an independent copy `Y'` drawn from
//! `Q(X)` for the same `X`, the coupled cell probabilities are
//! `p_ij = E[Q_i(X) Q_j(X)]` and `psi = V(Y, Y')`, Cramér's V of the pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coupling::{Link, MatrixNorm};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Exact joint probabilities, `prob[x * k + y] = P(X = x, Y = y)`;
/// optionally refined by a second covariate `Z` with
/// `prob_z[(x * j + z) * k + y] = P(X = x, Z = z, Y = y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJoint<T> {
    m: usize,
    k: usize,
    prob: Vec<T>,
    z_levels: usize,
    prob_z: Option<Vec<T>>,
}

fn check_mass<T: Real>(values: &[T]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidProbability(format!("negative or non-finite entry {v}")));
    }
    let total: T = values.iter().copied().sum();
    if (total - T::one()).abs() > T::simplex_tol() {
        return Err(Error::InvalidProbability(format!("total mass {total}, not 1")));
    }
    Ok(())
}

impl<T: Real> FiniteJoint<T> {
    pub fn new(prob: Vec<T>, m: usize, k: usize) -> Result<Self> {
        if prob.len() != m * k {
            return Err(Error::LengthMismatch {
                what: "joint probability table",
                expected: m * k,
                found: prob.len(),
            });
        }
        check_mass(&prob)?;
        let joint = Self {
            m,
            k,
            prob,
            z_levels: 0,
            prob_z: None,
        };
        if let Some(x) = (0..m).find(|&x| joint.x_mass(x) == T::zero()) {
            return Err(Error::InvalidProbability(format!("X level {x} has zero mass")));
        }
        Ok(joint)
    }

    /// Joint of `(X, Z, Y)` given as an `m x j x k` tensor.
    pub fn with_z(prob_z: Vec<T>, m: usize, j: usize, k: usize) -> Result<Self> {
        if prob_z.len() != m * j * k {
            return Err(Error::LengthMismatch {
                what: "joint probability tensor",
                expected: m * j * k,
                found: prob_z.len(),
            });
        }
        check_mass(&prob_z)?;
        let mut prob = vec![T::zero(); m * k];
        for x in 0..m {
            for z in 0..j {
                for y in 0..k {
                    prob[x * k + y] = prob[x * k + y] + prob_z[(x * j + z) * k + y];
                }
            }
        }
        let mut joint = Self::new(prob, m, k)?;
        joint.z_levels = j;
        joint.prob_z = Some(prob_z);
        Ok(joint)
    }

    /// Random joint with every cell positive: independent uniforms on
    /// `(0, 1]`, normalized.
    pub fn random<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Self {
        let raw = normalized_uniforms(m * k, rng);
        Self::new(raw, m, k).expect("positive normalized table")
    }

    pub fn random_with_z<R: Rng + ?Sized>(m: usize, j: usize, k: usize, rng: &mut R) -> Self {
        let raw = normalized_uniforms(m * j * k, rng);
        Self::with_z(raw, m, j, k).expect("positive normalized tensor")
    }

    pub fn x_levels(&self) -> usize {
        self.m
    }

    pub fn y_levels(&self) -> usize {
        self.k
    }

    pub fn z_levels(&self) -> usize {
        self.z_levels
    }

    pub fn prob(&self, x: usize, y: usize) -> T {
        self.prob[x * self.k + y]
    }

    pub fn x_mass(&self, x: usize) -> T {
        self.prob[x * self.k..(x + 1) * self.k].iter().copied().sum()
    }

    /// `p_y = P(Y = y)`.
    pub fn y_marginal(&self) -> Vec<T> {
        (0..self.k)
            .map(|y| (0..self.m).map(|x| self.prob(x, y)).sum())
            .collect()
    }

    /// Rows `P(X = x, Y = .)` of the conditioning variable `X`.
    fn x_rows(&self) -> Vec<&[T]> {
        self.prob.chunks(self.k).collect()
    }

    /// Rows `P(X = x, Z = z, Y = .)` with positive mass.
    fn xz_rows(&self) -> Result<Vec<&[T]>> {
        let pz = self
            .prob_z
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("joint has no Z component".into()))?;
        Ok(pz
            .chunks(self.k)
            .filter(|row| row.iter().copied().sum::<T>() > T::zero())
            .collect())
    }
}

fn normalized_uniforms<T: Real, R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<T> {
    let raw: Vec<f64> = (0..len).map(|_| 1.0 - rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| T::lit(v / total)).collect()
}

fn positive_marginal<T: Real>(p: &[T]) -> Result<()> {
    if let Some(y) = p.iter().position(|v| !(*v > T::zero())) {
        return Err(Error::InvalidProbability(format!(
            "Y level {y} has zero probability; the coefficient is undefined"
        )));
    }
    if p.len() < 2 {
        return Err(Error::TooFewLevels { k: p.len() });
    }
    Ok(())
}

/// `p_ij = sum_x P(x) Q_i(x) Q_j(x)` from rows `P(X = x, Y = .)`.
fn coupled_cells<T: Real>(rows: &[&[T]], k: usize) -> Matrix<T> {
    let mut out = Matrix::zeros(k, k);
    for row in rows {
        let mass: T = row.iter().copied().sum();
        for i in 0..k {
            for j in 0..k {
                out[(i, j)] = out[(i, j)] + row[i] * row[j] / mass;
            }
        }
    }
    out
}

fn cramers_v<T: Real>(cells: &Matrix<T>, p: &[T]) -> T {
    let k = p.len();
    let mut acc = T::zero();
    for i in 0..k {
        for j in 0..k {
            let e = p[i] * p[j];
            let d = cells[(i, j)] - e;
            acc = acc + d * d / e;
        }
    }
    acc / T::from_usize_lossy(k - 1)
}

fn psi_from_rows<T: Real>(rows: &[&[T]], p: &[T]) -> T {
    cramers_v(&coupled_cells(rows, p.len()), p)
}

/// `Var Q(X)` with entries `p_ij - p_i p_j`.
fn conditional_covariance<T: Real>(rows: &[&[T]], p: &[T]) -> Matrix<T> {
    let cells = coupled_cells(rows, p.len());
    Matrix::from_fn(p.len(), p.len(), |i, j| cells[(i, j)] - p[i] * p[j])
}

/// `||A||_{F,D}` or `||A||_{tr,D}` with `D = diag(p)`.
pub fn weighted_norm<T: Real>(a: &Matrix<T>, p: &[T], norm: MatrixNorm) -> T {
    let k = p.len();
    match norm {
        MatrixNorm::WeightedFrobenius => {
            let mut acc = T::zero();
            for i in 0..k {
                for j in 0..k {
                    acc = acc + a[(i, j)] * a[(i, j)] / (p[i] * p[j]);
                }
            }
            acc.sqrt()
        }
        MatrixNorm::WeightedTrace => (0..k).map(|i| a[(i, i)] / p[i]).sum(),
    }
}

/// `Var Q(Y)`: `p_k - p_k^2` on the diagonal, `-p_k p_l` elsewhere.
pub fn response_covariance<T: Real>(p: &[T]) -> Matrix<T> {
    Matrix::from_fn(p.len(), p.len(), |i, j| {
        if i == j {
            p[i] - p[i] * p[i]
        } else {
            -p[i] * p[j]
        }
    })
}

impl<T: Real> FiniteJoint<T> {
    /// `Var Q(X)`.
    pub fn covariance_given_x(&self) -> Result<Matrix<T>> {
        let p = self.y_marginal();
        positive_marginal(&p)?;
        Ok(conditional_covariance(&self.x_rows(), &p))
    }

    /// `Var Q(X, Z)`.
    pub fn covariance_given_xz(&self) -> Result<Matrix<T>> {
        let p = self.y_marginal();
        positive_marginal(&p)?;
        Ok(conditional_covariance(&self.xz_rows()?, &p))
    }
}

/// `psi(X, Y) = V(Y, Y')` via the coupled cell probabilities.
pub fn psi_population<T: Real>(j: &FiniteJoint<T>) -> Result<T> {
    let p = j.y_marginal();
    positive_marginal(&p)?;
    Ok(psi_from_rows(&j.x_rows(), &p))
}

/// `psi(X, Y)` as `vec(V)' (D ⊗ D)^{-1} vec(V) / (K-1)` with
/// `V = E[Q Q'] - E[Q] E[Q]'`, assembled from explicit Kronecker products.
pub fn psi_population_kron<T: Real>(j: &FiniteJoint<T>) -> Result<T> {
    let p = j.y_marginal();
    positive_marginal(&p)?;
    let k = j.k;
    let mut second: Matrix<T> = Matrix::zeros(k, k);
    let mut first = vec![T::zero(); k];
    for x in 0..j.m {
        let mass = j.x_mass(x);
        let q: Vec<T> = (0..k).map(|y| j.prob(x, y) / mass).collect();
        for a in 0..k {
            first[a] = first[a] + mass * q[a];
            for b in 0..k {
                second[(a, b)] = second[(a, b)] + mass * q[a] * q[b];
            }
        }
    }
    let v = Matrix::from_fn(k, k, |a, b| second[(a, b)] - first[a] * first[b]);
    let vec_v: Vec<T> = (0..k * k).map(|idx| v[(idx % k, idx / k)]).collect();
    let inv_d = Matrix::diag(&p.iter().map(|v| T::one() / *v).collect::<Vec<_>>());
    let weight = inv_d.kron(&inv_d);
    let wv = weight.matvec(&vec_v);
    let quad: T = vec_v.iter().zip(&wv).map(|(a, b)| *a * *b).sum();
    Ok(quad / T::from_usize_lossy(k - 1))
}

/// `link(||Var Q(X)|| / ||Var Q(Y)||)`.
pub fn psi_population_norm<T: Real>(j: &FiniteJoint<T>, norm: MatrixNorm, link: Link) -> Result<T> {
    let p = j.y_marginal();
    let num = weighted_norm(&j.covariance_given_x()?, &p, norm);
    let den = weighted_norm(&response_covariance(&p), &p, norm);
    Ok(link.apply(num / den))
}

/// `psi((X, Z), Y)`.
pub fn psi_population_joint<T: Real>(j: &FiniteJoint<T>) -> Result<T> {
    let p = j.y_marginal();
    positive_marginal(&p)?;
    Ok(psi_from_rows(&j.xz_rows()?, &p))
}

/// `(psi((X,Z),Y) - psi(X,Y)) / (1 - psi(X,Y))`; undefined when `X` already
/// determines `Y`.
pub fn psi_population_conditional<T: Real>(j: &FiniteJoint<T>) -> Result<T> {
    let base = psi_population(j)?;
    if base >= T::one() - T::simplex_tol() {
        return Err(Error::ConditionalUndefined {
            psi: base.to_f64_lossy(),
        });
    }
    let joint = psi_population_joint(j)?;
    Ok((joint - base) / (T::one() - base))
}

/// `n` i.i.d. draws of `(X, Y)`: `X` from its marginal and
/// `Y = min{k : Q_1(X) + ... + Q_k(X) > U}` for an independent uniform `U`.
/// Returns zero-based codes.
pub fn sample_coupled<T: Real>(j: &FiniteJoint<T>, n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masses: Vec<f64> = (0..j.m).map(|x| j.x_mass(x).to_f64_lossy()).collect();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = inverse_cdf(&masses, rng.random::<f64>());
        let q: Vec<f64> = (0..j.k)
            .map(|y| j.prob(x, y).to_f64_lossy() / masses[x])
            .collect();
        let y = inverse_cdf(&q, rng.random::<f64>());
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

/// Smallest index whose cumulative weight exceeds `u`; falls back to the
/// last index with positive weight when rounding leaves the total below `u`.
fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if acc > u {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}
