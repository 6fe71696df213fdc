//! Small dense matrices: products, Kronecker products, LU determinants and a
//! symmetric indefinite (Bunch–Kaufman) solver.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(l, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `self ⊗ other`; row `(a, b)` sits at `a * other.rows + b`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r, c) = (other.rows, other.cols);
        Self::from_fn(self.rows * r, self.cols * c, |i, j| {
            self[(i / r, j / c)] * other[(i % r, j % c)]
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Determinant by LU decomposition with partial pivoting.
    pub fn determinant(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = T::one();
        for k in 0..n {
            let (piv, max) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if max == T::zero() {
                return T::zero();
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            let d = a[k * n + k];
            det = det * d;
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                if f != T::zero() {
                    for j in k + 1..n {
                        a[i * n + j] = a[i * n + j] - f * a[k * n + j];
                    }
                }
            }
        }
        det
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, Copy)]
enum Pivot<T> {
    One(T),
    /// symmetric 2x2 block `[[a, b], [b, c]]`
    Two(T, T, T),
}

/// `P^T A P = L D L^T` with unit lower triangular `L` and 1x1/2x2 diagonal
/// blocks in `D` (Bunch–Kaufman partial pivoting).
#[derive(Debug, Clone)]
pub struct SymmetricFactorization<T> {
    n: usize,
    l: Matrix<T>,
    blocks: Vec<(usize, Pivot<T>)>,
    perm: Vec<usize>,
}

impl<T: Real> SymmetricFactorization<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::InvalidArgument("matrix is not square".into()));
        }
        let n = a.rows;
        let alpha = (T::one() + T::lit(17.0).sqrt()) / T::lit(8.0);
        let mut s = a.clone();
        let mut l = Matrix::identity(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut blocks = Vec::new();
        let scale = a.data.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tiny = scale * T::epsilon();

        let mut k = 0;
        while k < n {
            let akk = s[(k, k)].abs();
            let (imax, colmax) = (k + 1..n)
                .map(|i| (i, s[(i, k)].abs()))
                .fold((k, T::zero()), |b, c| if c.1 > b.1 { c } else { b });
            if akk.max(colmax) <= tiny {
                return Err(Error::Singular);
            }
            let (kp, step) = if akk >= alpha * colmax {
                (k, 1)
            } else {
                let rowmax = (k..n)
                    .filter(|&j| j != imax)
                    .map(|j| s[(imax, j)].abs())
                    .fold(T::zero(), T::max);
                if akk * rowmax >= alpha * colmax * colmax {
                    (k, 1)
                } else if s[(imax, imax)].abs() >= alpha * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };
            let kk = k + step - 1;
            if kp != kk {
                Self::swap_sym(&mut s, kk, kp);
                for j in 0..k {
                    let t = l[(kk, j)];
                    l[(kk, j)] = l[(kp, j)];
                    l[(kp, j)] = t;
                }
                perm.swap(kk, kp);
            }
            if step == 1 {
                let d = s[(k, k)];
                if d.abs() <= tiny {
                    return Err(Error::Singular);
                }
                for i in k + 1..n {
                    l[(i, k)] = s[(i, k)] / d;
                }
                for i in k + 1..n {
                    for j in k + 1..=i {
                        let v = s[(i, j)] - l[(i, k)] * d * l[(j, k)];
                        s[(i, j)] = v;
                        s[(j, i)] = v;
                    }
                }
                blocks.push((k, Pivot::One(d)));
            } else {
                let (a11, a21, a22) = (s[(k, k)], s[(k + 1, k)], s[(k + 1, k + 1)]);
                let det = a11 * a22 - a21 * a21;
                if det.abs() <= tiny * tiny {
                    return Err(Error::Singular);
                }
                for i in k + 2..n {
                    let (x, y) = (s[(i, k)], s[(i, k + 1)]);
                    l[(i, k)] = (x * a22 - y * a21) / det;
                    l[(i, k + 1)] = (y * a11 - x * a21) / det;
                }
                for i in k + 2..n {
                    for j in k + 2..=i {
                        let v = s[(i, j)] - l[(i, k)] * s[(j, k)] - l[(i, k + 1)] * s[(j, k + 1)];
                        s[(i, j)] = v;
                        s[(j, i)] = v;
                    }
                }
                blocks.push((k, Pivot::Two(a11, a21, a22)));
            }
            k += step;
        }
        Ok(Self { n, l, blocks, perm })
    }

    fn swap_sym(s: &mut Matrix<T>, a: usize, b: usize) {
        let n = s.rows;
        for j in 0..n {
            let t = s[(a, j)];
            s[(a, j)] = s[(b, j)];
            s[(b, j)] = t;
        }
        for i in 0..n {
            let t = s[(i, a)];
            s[(i, a)] = s[(i, b)];
            s[(i, b)] = t;
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut z: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                z[i] = z[i] - self.l[(i, j)] * z[j];
            }
        }
        for &(k, piv) in &self.blocks {
            match piv {
                Pivot::One(d) => z[k] = z[k] / d,
                Pivot::Two(a, b, c) => {
                    let det = a * c - b * b;
                    let (x, y) = (z[k], z[k + 1]);
                    z[k] = (c * x - b * y) / det;
                    z[k + 1] = (a * y - b * x) / det;
                }
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                z[i] = z[i] - self.l[(j, i)] * z[j];
            }
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    pub fn determinant(&self) -> T {
        self.blocks.iter().fold(T::one(), |acc, (_, piv)| match *piv {
            Pivot::One(d) => acc * d,
            Pivot::Two(a, b, c) => acc * (a * c - b * b),
        })
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e);
            e[j] = T::zero();
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// 1-norm condition number `||A||_1 ||A^{-1}||_1`.
pub fn condition_number<T: Real>(a: &Matrix<T>, f: &SymmetricFactorization<T>) -> T {
    a.norm1() * f.inverse().norm1()
}
