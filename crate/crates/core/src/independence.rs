//! Chi-squared independence test built on the neighbor contingency.
//!
//! Under independence the centered pair frequencies
//! `P_n = sqrt(n) vec(p_ab - p_a q_b)`, `a, b < K-1`, have conditional
//! covariance (given the graph)
//!
//! ```text
//! Sigma((k1,l1),(k2,l2)) = p_k1 p_l1 p_k2 p_l2 (1 + W)
//!                        - p_k1 p_l1 p_l2 (1{k1=k2} + W 1{l1=k2})
//!                        - p_k1 p_l1 p_k2 (1{l1=l2} + W 1{k1=l2})
//!                        + p_k1 p_l1 (1{k1=k2, l1=l2} + W 1{k1=l2, l1=k2})
//! ```
//!
//! which factors as `(C ⊗ C)(I + W T)` with `C = D - p p^T` and `T` the
//! transposition of the index pair. `I_n = P_n' Sigma^{-1} P_n` is then the
//! symmetric part of the centered table weighted by `1/(1+W)` plus the
//! antisymmetric part weighted by `1/(1-W)`.

use serde::Serialize;

use crate::coupling::{psi_hat, ContingencyCounts};
use crate::error::{Error, Result};
use crate::graph::{gamma_d, NeighborGraph};
use crate::linalg::{condition_number, Matrix, SymmetricFactorization};
use crate::scalar::{canonical_sum, Real};
use crate::special::gamma_q;

/// Graphs with `W_n` above `1 - DEGENERATE_GAP` are rejected when `K >= 3`.
pub const DEGENERATE_GAP: f64 = 1e-6;
/// Largest accepted 1-norm condition number of the estimated covariance.
pub const MAX_CONDITION: f64 = 1e12;

/// Position of pair `(k, l)` in the column-major vectorization of a
/// `m x m` matrix.
#[inline]
pub fn vec_index(k: usize, l: usize, m: usize) -> usize {
    k + m * l
}

fn check_probabilities<T: Real>(p: &[T]) -> Result<()> {
    if p.len() < 2 {
        return Err(Error::InvalidProbability(format!(
            "need at least two levels, got {}",
            p.len()
        )));
    }
    if let Some(v) = p.iter().find(|v| !(**v > T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidProbability(format!("entry {v} is not positive")));
    }
    let total: T = p.iter().copied().sum();
    if (total - T::one()).abs() > T::simplex_tol() {
        return Err(Error::InvalidProbability(format!("entries sum to {total}, not 1")));
    }
    Ok(())
}

fn check_w<T: Real>(w: T) -> Result<()> {
    if !(w >= T::zero() && w <= T::one()) {
        return Err(Error::InvalidArgument(format!("W_n = {w} outside [0, 1]")));
    }
    Ok(())
}

/// One entry of the conditional covariance; indices are zero-based and
/// must be below `K - 1 = p.len() - 1`.
pub fn sigma_entry<T: Real>(p: &[T], w: T, (k1, l1): (usize, usize), (k2, l2): (usize, usize)) -> Result<T> {
    check_probabilities(p)?;
    check_w(w)?;
    let m = p.len() - 1;
    if let Some(&bad) = [k1, l1, k2, l2].iter().find(|&&i| i >= m) {
        return Err(Error::IndexOutOfRange { index: bad, len: m });
    }
    Ok(entry_unchecked(p, w, (k1, l1), (k2, l2)))
}

#[inline]
fn entry_unchecked<T: Real>(p: &[T], w: T, a: (usize, usize), b: (usize, usize)) -> T {
    // evaluate in a fixed argument order so the matrix is exactly symmetric
    let ((k1, l1), (k2, l2)) = if a <= b { (a, b) } else { (b, a) };
    let ind = |c: bool| if c { T::one() } else { T::zero() };
    let (pk1, pl1, pk2, pl2) = (p[k1], p[l1], p[k2], p[l2]);
    pk1 * pl1 * pk2 * pl2 * (T::one() + w)
        - pk1 * pl1 * pl2 * (ind(k1 == k2) + w * ind(l1 == k2))
        - pk1 * pl1 * pk2 * (ind(l1 == l2) + w * ind(k1 == l2))
        + pk1 * pl1 * (ind(k1 == k2 && l1 == l2) + w * ind(k1 == l2 && l1 == k2))
}

/// Conditional covariance of `P_n` together with the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix<T> {
    pub sigma: Matrix<T>,
    pub w: T,
    pub p: Vec<T>,
}

impl<T: Real> CovarianceMatrix<T> {
    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    /// LU determinant of the assembled matrix.
    pub fn determinant(&self) -> T {
        self.sigma.determinant()
    }

    pub fn factorize(&self) -> Result<SymmetricFactorization<T>> {
        SymmetricFactorization::new(&self.sigma)
    }
}

/// All `(K-1)^2 x (K-1)^2` entries, in column-major pair order.
pub fn sigma_matrix<T: Real>(p: &[T], w: T) -> Result<CovarianceMatrix<T>> {
    check_probabilities(p)?;
    check_w(w)?;
    let m = p.len() - 1;
    let sigma = Matrix::from_fn(m * m, m * m, |r, c| {
        entry_unchecked(p, w, (r % m, r / m), (c % m, c / m))
    });
    Ok(CovarianceMatrix {
        sigma,
        w,
        p: p.to_vec(),
    })
}

/// The same matrix assembled as `D⊗D · 𝒲 · (I - E D)⊗(I - E D)`, with
/// `D = diag(p_1..p_{K-1})`, `E` all ones and
/// `𝒲((k1,l1),(k2,l2)) = 1{k1=k2,l1=l2} + W 1{k1=l2,l1=k2}`.
pub fn sigma_factorized<T: Real>(p: &[T], w: T) -> Result<Matrix<T>> {
    check_probabilities(p)?;
    check_w(w)?;
    let m = p.len() - 1;
    let d = Matrix::diag(&p[..m]);
    let ones = Matrix::from_fn(m, m, |_, _| T::one());
    let right = Matrix::identity(m).sub(&ones.matmul(&d));
    let ind = |c: bool| if c { T::one() } else { T::zero() };
    let weights = Matrix::from_fn(m * m, m * m, |r, c| {
        let (k1, l1, k2, l2) = (r % m, r / m, c % m, c / m);
        ind(k1 == k2 && l1 == l2) + w * ind(k1 == l2 && l1 == k2)
    });
    Ok(d.kron(&d).matmul(&weights).matmul(&right.kron(&right)))
}

/// `det Sigma = (1+W)^{K(K-1)/2} (1-W)^{(K-1)(K-2)/2} prod_i p_i^{2(K-1)}`,
/// the product running over all `K` levels.
pub fn sigma_det_closed_form<T: Real>(p: &[T], w: T) -> Result<T> {
    check_probabilities(p)?;
    check_w(w)?;
    let k = p.len() as i32;
    let plus = (T::one() + w).powi(k * (k - 1) / 2);
    let minus = (T::one() - w).powi((k - 1) * (k - 2) / 2);
    let prod = p.iter().fold(T::one(), |acc, &pi| acc * pi.powi(2 * (k - 1)));
    Ok(plus * minus * prod)
}

/// `P_n` for the levels other than `dropped`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenteredVector<T> {
    pub entries: Vec<T>,
    pub dropped_level: usize,
}

impl<T: Real> CenteredVector<T> {
    /// Drops the last level.
    pub fn from_counts(c: &ContingencyCounts<T>) -> Self {
        Self::dropping(c, c.k() - 1)
    }

    pub fn dropping(c: &ContingencyCounts<T>, dropped: usize) -> Self {
        let keep: Vec<usize> = (0..c.k()).filter(|&a| a != dropped).collect();
        let m = keep.len();
        let root_n = T::from_usize_lossy(c.n()).sqrt();
        let mut entries = vec![T::zero(); m * m];
        for (ki, &a) in keep.iter().enumerate() {
            for (li, &b) in keep.iter().enumerate() {
                entries[vec_index(ki, li, m)] = root_n * (c.joint(a, b) - c.row()[a] * c.col()[b]);
            }
        }
        Self {
            entries,
            dropped_level: dropped,
        }
    }
}

/// Chi-squared survival function `Q(df/2, x/2)`.
pub fn chi2_sf<T: Real>(x: T, df: usize) -> Result<T> {
    if df == 0 {
        return Err(Error::InvalidArgument("degrees of freedom must be positive".into()));
    }
    if x < T::zero() || x.is_nan() {
        return Err(Error::InvalidArgument(format!("chi-squared argument {x} is negative")));
    }
    let half = T::lit(0.5);
    gamma_q(T::from_usize_lossy(df) * half, x * half)
}

/// Which statistic a [`TestReport`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StatisticKind<T> {
    /// `I_n` with the empirical `W_n`.
    Full,
    /// Binary statistic with `W_n` replaced by the limit `gamma_d`.
    PluginGamma { gamma: T, dimension: usize, as_printed: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport<T> {
    pub statistic: T,
    pub df: usize,
    pub p_value: T,
    pub psi_hat: T,
    pub w_n: Option<T>,
    pub w_n_prime: Option<T>,
    pub l_n: Option<usize>,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub kind: StatisticKind<T>,
    pub warnings: Vec<String>,
}

fn table_warnings<T: Real>(c: &ContingencyCounts<T>, warnings: &mut Vec<String>) {
    let dropped = c.empty_levels();
    if !dropped.is_empty() {
        warnings.push(format!("unobserved levels dropped: {dropped:?}"));
    }
    let unmatched = c.unmatched_levels();
    if !unmatched.is_empty() {
        warnings.push(format!("levels never seen as a neighbor label: {unmatched:?}"));
    }
}

/// Graph-derived warnings shared by every report.
pub fn graph_warnings(g: &NeighborGraph) -> Vec<String> {
    let mut w = Vec::new();
    if g.had_ties() {
        w.push("exact distance ties broken by smallest index".to_string());
    }
    if g.degree_warning() {
        w.push(format!(
            "max in-degree L_n = {} is at least n^(1/4) = {:.3}",
            g.max_in_degree(),
            (g.n() as f64).powf(0.25)
        ));
    }
    w
}

/// `I_n` from the symmetric/antisymmetric split of the centered table over
/// all (observed) levels.
fn quadratic_form<T: Real>(c: &ContingencyCounts<T>, w: T) -> T {
    let k = c.k();
    let p = c.row();
    let q = c.col();
    let centered = |a: usize, b: usize| c.joint(a, b) - p[a] * q[b];
    let half = T::lit(0.5);
    let mut sym = Vec::with_capacity(k * (k + 1) / 2);
    let mut anti = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        let m = centered(a, a);
        sym.push(m * m / (p[a] * p[a]));
        for b in a + 1..k {
            let (x, y) = (centered(a, b), centered(b, a));
            let s = (x + y) * half;
            let d = (x - y) * half;
            let wgt = T::lit(2.0) / (p[a] * p[b]);
            sym.push(s * s * wgt);
            anti.push(d * d * wgt);
        }
    }
    let n = T::from_usize_lossy(c.n());
    let mut stat = n * canonical_sum(sym) / (T::one() + w);
    if k > 2 {
        // with two levels the antisymmetric part vanishes identically
        stat = stat + n * canonical_sum(anti) / (T::one() - w);
    }
    stat
}

fn validated_table<T: Real>(c: &ContingencyCounts<T>) -> Result<ContingencyCounts<T>> {
    let (r, _) = c.reduced();
    if r.k() < 2 {
        return Err(Error::TooFewLevels { k: r.k() });
    }
    Ok(r)
}

fn guard<T: Real>(r: &ContingencyCounts<T>, w: T) -> Result<CovarianceMatrix<T>> {
    if r.k() >= 3 && w > T::one() - T::lit(DEGENERATE_GAP) {
        return Err(Error::DegenerateGraph { w_n: w.to_f64_lossy() });
    }
    let cov = sigma_matrix(r.row(), w)?;
    let f = cov.factorize().map_err(|_| Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let cond = condition_number(&cov.sigma, &f).to_f64_lossy();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition: cond });
    }
    Ok(cov)
}

/// `I_n = P_n' Sigma_hat^{-1} P_n` with its chi-squared `(K-1)^2` p-value.
///
/// Unobserved levels are dropped first. Errors when fewer than two levels
/// remain, when `W_n` makes the covariance singular (`K >= 3` and
/// `W_n > 1 - 1e-6`), or when its condition number exceeds `1e12`.
pub fn independence_statistic<T: Real>(c: &ContingencyCounts<T>, g: &NeighborGraph) -> Result<TestReport<T>> {
    if c.n() != g.n() {
        return Err(Error::LengthMismatch {
            what: "contingency total vs graph vertices",
            expected: g.n(),
            found: c.n(),
        });
    }
    let r = validated_table(c)?;
    let w: T = g.mutual_fraction();
    guard(&r, w)?;
    let statistic = quadratic_form(&r, w);
    let df = (r.k() - 1) * (r.k() - 1);
    let mut warnings = graph_warnings(g);
    table_warnings(c, &mut warnings);
    Ok(TestReport {
        statistic,
        df,
        p_value: chi2_sf(statistic, df)?,
        psi_hat: psi_hat(&r)?,
        w_n: Some(w),
        w_n_prime: Some(g.shared_neighbor_count()),
        l_n: Some(g.max_in_degree()),
        n: c.n(),
        k: r.k(),
        kind: StatisticKind::Full,
        warnings,
    })
}

/// `I_n` by an explicit symmetric indefinite solve `Sigma_hat x = P_n`,
/// dropping level `dropped` of the reduced table. Agrees with
/// [`independence_statistic`] up to rounding for every choice of `dropped`.
pub fn statistic_by_solve<T: Real>(c: &ContingencyCounts<T>, w: T, dropped: usize) -> Result<T> {
    let r = validated_table(c)?;
    if dropped >= r.k() {
        return Err(Error::IndexOutOfRange {
            index: dropped,
            len: r.k(),
        });
    }
    // reorder so the dropped level is last, then use the standard layout
    let mut perm: Vec<usize> = (0..r.k()).collect();
    perm.swap(dropped, r.k() - 1);
    let r = r.permuted(&perm)?;
    let cov = guard(&r, w)?;
    let pn = CenteredVector::from_counts(&r);
    let x = cov.factorize()?.solve(&pn.entries);
    Ok(pn.entries.iter().zip(&x).map(|(a, b)| *a * *b).sum())
}

/// How the binary statistic normalizes the centered cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BinaryVariant {
    /// `p_1^2 (1 - p_1)^2`, the `K = 2` entry of the covariance.
    #[default]
    CovarianceConsistent,
    /// `(p_1 q_1)^2`, as the binary corollary is usually displayed.
    AsPrinted,
}

/// Binary-response statistic with `W_n` replaced by its Euclidean limit
/// `gamma_d`.
pub fn binary_statistic<T: Real>(c: &ContingencyCounts<T>, d: usize, variant: BinaryVariant) -> Result<TestReport<T>> {
    let r = validated_table(c)?;
    if r.k() != 2 {
        return Err(Error::InvalidArgument(format!(
            "binary statistic needs exactly two levels, got {}",
            r.k()
        )));
    }
    let gamma: T = gamma_d(d)?;
    let (p1, q1) = (r.row()[0], r.col()[0]);
    let m = r.joint(0, 0) - p1 * q1;
    let n = T::from_usize_lossy(r.n());
    let statistic = match variant {
        BinaryVariant::CovarianceConsistent => {
            let v = p1 * (T::one() - p1);
            n * m * m / (v * v * (T::one() + gamma))
        }
        BinaryVariant::AsPrinted => {
            let ratio = m / (p1 * q1);
            n / (T::one() + gamma) * ratio * ratio
        }
    };
    let mut warnings = Vec::new();
    table_warnings(c, &mut warnings);
    Ok(TestReport {
        statistic,
        df: 1,
        p_value: chi2_sf(statistic, 1)?,
        psi_hat: psi_hat(&r)?,
        w_n: None,
        w_n_prime: None,
        l_n: None,
        n: r.n(),
        k: 2,
        kind: StatisticKind::PluginGamma {
            gamma,
            dimension: d,
            as_printed: variant == BinaryVariant::AsPrinted,
        },
        warnings,
    })
}
