//! Synthetic settings, label mixing, and Monte-Carlo power and null
//! calibration runs.
//!
//! Every replication draws from `ChaCha8Rng::seed_from_u64(seed)` on stream
//! `r`, so replication `r` is a pure function of `(seed, r)` no matter how the
//! work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::contingency;
use crate::error::{Error, Result};
use crate::graph::build_neighbor_graph;
use crate::independence::{chi2_sf, independence_statistic};
use crate::labels::LabelVector;
use crate::metric::PointCloud;
use crate::scalar::Real;

pub const DEFAULT_GRID: usize = 100;
const MIXTURE_TERMS: i32 = 20;
const MAX_DEGREE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimKind {
    /// `X ~ U[0,1]^2`, `Y = 1{sin(2 pi (x1 + x2)) >= 0}`.
    Sin,
    /// Brownian path `X`, `Y = 1{max_t X(t) >= 1}`.
    Max,
    /// Brownian path for one label, random sine series for the other.
    Mixture,
    /// Random polynomial whose degree is the label.
    Degree,
}

impl SimKind {
    pub fn name(self) -> &'static str {
        match self {
            SimKind::Sin => "sin",
            SimKind::Max => "max",
            SimKind::Mixture => "mixture",
            SimKind::Degree => "degree",
        }
    }
}

impl std::str::FromStr for SimKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin" => Ok(SimKind::Sin),
            "max" => Ok(SimKind::Max),
            "mixture" => Ok(SimKind::Mixture),
            "degree" => Ok(SimKind::Degree),
            other => Err(Error::InvalidArgument(format!("unknown setting '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimSetting {
    pub kind: SimKind,
    pub n: usize,
    /// Grid points per path for the functional settings.
    pub grid: usize,
    pub seed: u64,
}

impl SimSetting {
    pub fn new(kind: SimKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            grid: DEFAULT_GRID,
            seed,
        }
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewPoints { n: self.n, required: 2 });
        }
        if self.kind != SimKind::Sin && self.grid < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid must have at least 2 points, got {}",
                self.grid
            )));
        }
        Ok(())
    }
}

/// The RNG for replication `r` of a run seeded with `seed`.
pub fn stream(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

/// Draws one data set from `setting`, seeded by `setting.seed`.
pub fn generate<T: Real>(setting: &SimSetting) -> Result<(PointCloud<T>, LabelVector)> {
    generate_with_rng(setting, &mut stream(setting.seed, 0))
}

pub fn generate_with_rng<T: Real, R: Rng + ?Sized>(
    setting: &SimSetting,
    rng: &mut R,
) -> Result<(PointCloud<T>, LabelVector)> {
    setting.validate()?;
    let n = setting.n;
    let m = setting.grid;
    match setting.kind {
        SimKind::Sin => {
            let coords: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>()).collect();
            let codes = coords.chunks(2).map(|x| sin_label(x[0], x[1])).collect();
            Ok((
                PointCloud::euclidean(to_real(coords), 2)?,
                LabelVector::from_codes(codes, 2)?,
            ))
        }
        SimKind::Max => {
            let mut values = Vec::with_capacity(n * m);
            let mut codes = Vec::with_capacity(n);
            for _ in 0..n {
                let path = brownian_path(m, rng);
                let peak = path.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                codes.push(usize::from(peak >= 1.0));
                values.extend(path);
            }
            Ok((
                PointCloud::function_grid(to_real(values), m)?,
                LabelVector::from_codes(codes, 2)?,
            ))
        }
        SimKind::Mixture => {
            let mut values = Vec::with_capacity(n * m);
            let mut codes = Vec::with_capacity(n);
            for _ in 0..n {
                let label = usize::from(rng.random::<bool>());
                let path = if label == 0 {
                    brownian_path(m, rng)
                } else {
                    sine_series_path(m, rng)
                };
                codes.push(label);
                values.extend(path);
            }
            Ok((
                PointCloud::function_grid(to_real(values), m)?,
                LabelVector::from_codes(codes, 2)?,
            ))
        }
        SimKind::Degree => {
            let mut values = Vec::with_capacity(n * m);
            let mut codes = Vec::with_capacity(n);
            for _ in 0..n {
                let degree = rng.random_range(0..=MAX_DEGREE);
                let coef: Vec<f64> = (0..=degree).map(|_| rng.random::<f64>()).collect();
                values.extend(grid(m).map(|t| horner(&coef, t)));
                codes.push(degree);
            }
            Ok((
                PointCloud::function_grid(to_real(values), m)?,
                LabelVector::from_codes(codes, MAX_DEGREE + 1)?,
            ))
        }
    }
}

fn to_real<T: Real>(v: Vec<f64>) -> Vec<T> {
    v.into_iter().map(T::lit).collect()
}

pub fn sin_label(x1: f64, x2: f64) -> usize {
    usize::from((2.0 * std::f64::consts::PI * (x1 + x2)).sin() >= 0.0)
}

/// `t_g = g / (m - 1)`, `g = 0..m`.
fn grid(m: usize) -> impl Iterator<Item = f64> {
    (0..m).map(move |g| g as f64 / (m - 1) as f64)
}

/// Cumulative sums of `m` independent `N(0, 1/m)` increments.
pub fn brownian_path<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let sd = (1.0 / m as f64).sqrt();
    let mut level = 0.0;
    (0..m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            level += sd * z;
            level
        })
        .collect()
}

/// `sum_{k=1}^{20} Z_k sin(pi k t)` with `Z_k ~ N(0, 0.5^k)`.
pub fn sine_series_path<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let z: Vec<f64> = (1..=MIXTURE_TERMS)
        .map(|k| {
            let e: f64 = StandardNormal.sample(rng);
            e * 0.5f64.powi(k).sqrt()
        })
        .collect();
    grid(m)
        .map(|t| {
            z.iter()
                .enumerate()
                .map(|(k, zk)| zk * (std::f64::consts::PI * (k + 1) as f64 * t).sin())
                .sum()
        })
        .collect()
}

fn horner(coef: &[f64], t: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Per-observation randomness for label mixing: a uniform deciding whether
/// to keep `Y_i` and a donor index supplying the replacement `Y_{j}`.
#[derive(Debug, Clone)]
pub struct MixingDraws {
    uniforms: Vec<f64>,
    donors: Vec<usize>,
}

impl MixingDraws {
    pub fn draw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut uniforms = Vec::with_capacity(n);
        let mut donors = Vec::with_capacity(n);
        for _ in 0..n {
            uniforms.push(rng.random::<f64>());
            donors.push(rng.random_range(0..n));
        }
        Self { uniforms, donors }
    }

    /// Keeps `Y_i` when `u_i < lambda`, otherwise takes the donor's label,
    /// an independent draw from the empirical marginal of `Y`.
    pub fn apply(&self, y: &LabelVector, lambda: f64) -> Result<LabelVector> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")));
        }
        if self.uniforms.len() != y.len() {
            return Err(Error::LengthMismatch {
                what: "mixing draws vs labels",
                expected: y.len(),
                found: self.uniforms.len(),
            });
        }
        let codes = y.codes();
        let mixed = (0..y.len())
            .map(|i| {
                if self.uniforms[i] < lambda {
                    codes[i]
                } else {
                    codes[self.donors[i]]
                }
            })
            .collect();
        LabelVector::from_codes(mixed, y.k())
    }
}

/// `Y~ = delta Y + (1 - delta) Y'` with `delta ~ Bernoulli(lambda)`.
pub fn mix_labels(y: &LabelVector, lambda: f64, seed: u64) -> Result<LabelVector> {
    MixingDraws::draw(y.len(), &mut stream(seed, 0)).apply(y, lambda)
}

/// Outcome of one test inside a Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Verdict {
    Reject,
    Accept,
    /// The statistic could not be computed (e.g. a single observed level).
    Degenerate,
}

fn verdict<T: Real>(cloud: &PointCloud<T>, y: &LabelVector, alpha: f64) -> (Verdict, Option<f64>) {
    let run = || -> Result<(f64, f64)> {
        let g = build_neighbor_graph(cloud)?;
        let r = independence_statistic(&contingency::<T>(y, &g)?, &g)?;
        Ok((r.statistic.to_f64_lossy(), r.p_value.to_f64_lossy()))
    };
    match run() {
        Ok((stat, p)) if p < alpha => (Verdict::Reject, Some(stat)),
        Ok((stat, _)) => (Verdict::Accept, Some(stat)),
        Err(_) => (Verdict::Degenerate, None),
    }
}

/// Replication `r`: one data set and one set of mixing draws, shared by all
/// `lambdas`.
pub fn replicate(setting: &SimSetting, lambdas: &[f64], alpha: f64, seed: u64, r: u64) -> Result<Vec<Verdict>> {
    let mut rng = stream(seed, r);
    let (cloud, y) = generate_with_rng::<f64, _>(setting, &mut rng)?;
    let draws = MixingDraws::draw(y.len(), &mut rng);
    lambdas
        .iter()
        .map(|&l| Ok(verdict(&cloud, &draws.apply(&y, l)?, alpha).0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCurve {
    pub setting: SimKind,
    pub lambdas: Vec<f64>,
    /// Rejection rate per lambda.
    pub rejections: Vec<f64>,
    /// Degenerate replications per lambda (counted as non-rejections).
    pub degenerate: Vec<usize>,
    pub reps: usize,
    pub alpha: f64,
    pub n: usize,
}

/// One CSV record of a power curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub lambda: f64,
    pub rejections: f64,
    pub reps: usize,
    pub alpha: f64,
    pub n: usize,
    pub setting: &'static str,
}

impl PowerCurve {
    pub fn rows(&self) -> Vec<PowerRow> {
        self.lambdas
            .iter()
            .zip(&self.rejections)
            .map(|(&lambda, &rejections)| PowerRow {
                lambda,
                rejections,
                reps: self.reps,
                alpha: self.alpha,
                n: self.n,
                setting: self.setting.name(),
            })
            .collect()
    }
}

fn check_run(reps: usize, alpha: f64) -> Result<()> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    Ok(())
}

/// Rejection rate of the independence test per `lambda`, over `reps`
/// replications of `setting` (its `seed` field is ignored in favor of `seed`).
pub fn power_curve(setting: &SimSetting, lambdas: &[f64], reps: usize, alpha: f64, seed: u64) -> Result<PowerCurve> {
    check_run(reps, alpha)?;
    setting.validate()?;
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::InvalidArgument(format!("lambda {l} outside [0, 1]")));
    }
    let verdicts = (0..reps as u64)
        .into_par_iter()
        .map(|r| replicate(setting, lambdas, alpha, seed, r))
        .collect::<Result<Vec<_>>>()?;
    let mut rejected = vec![0usize; lambdas.len()];
    let mut degenerate = vec![0usize; lambdas.len()];
    for rep in &verdicts {
        for (li, v) in rep.iter().enumerate() {
            match v {
                Verdict::Reject => rejected[li] += 1,
                Verdict::Degenerate => degenerate[li] += 1,
                Verdict::Accept => {}
            }
        }
    }
    Ok(PowerCurve {
        setting: setting.kind,
        lambdas: lambdas.to_vec(),
        rejections: rejected.iter().map(|&c| c as f64 / reps as f64).collect(),
        degenerate,
        reps,
        alpha,
        n: setting.n,
    })
}

/// Null run: `X ~ U[0,1]^dim`, `Y` uniform over `k` levels independent of
/// `X`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullCalibration {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub dim: usize,
    pub reps: usize,
    pub alpha: f64,
    pub df: usize,
    pub rejection_rate: f64,
    pub ks_distance: f64,
    pub degenerate: usize,
    /// `I_n` of every non-degenerate replication, in replication order.
    pub statistics: Vec<f64>,
}

pub fn null_replicate(n: usize, k: usize, dim: usize, seed: u64, r: u64) -> Result<(PointCloud<f64>, LabelVector)> {
    let mut rng = stream(seed, r);
    let coords: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    let codes = (0..n).map(|_| rng.random_range(0..k)).collect();
    Ok((PointCloud::euclidean(coords, dim)?, LabelVector::from_codes(codes, k)?))
}

pub fn null_calibration(n: usize, k: usize, dim: usize, reps: usize, alpha: f64, seed: u64) -> Result<NullCalibration> {
    check_run(reps, alpha)?;
    if k < 2 {
        return Err(Error::TooFewLevels { k });
    }
    if n < 2 {
        return Err(Error::TooFewPoints { n, required: 2 });
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let outcomes = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let (cloud, y) = null_replicate(n, k, dim, seed, r)?;
            Ok(verdict(&cloud, &y, alpha))
        })
        .collect::<Result<Vec<_>>>()?;
    summarize_null(outcomes, n, k, dim, reps, alpha)
}

/// Builds the calibration summary from per-replication outcomes; the
/// degrees of freedom are `(k-1)^2`.
pub fn summarize_null(
    outcomes: Vec<(Verdict, Option<f64>)>,
    n: usize,
    k: usize,
    dim: usize,
    reps: usize,
    alpha: f64,
) -> Result<NullCalibration> {
    let df = (k - 1) * (k - 1);
    let rejected = outcomes.iter().filter(|(v, _)| *v == Verdict::Reject).count();
    let degenerate = outcomes.iter().filter(|(v, _)| *v == Verdict::Degenerate).count();
    let statistics: Vec<f64> = outcomes.iter().filter_map(|(_, s)| *s).collect();
    let ks_distance = if statistics.is_empty() {
        f64::NAN
    } else {
        ks_distance_chi2(&statistics, df)?
    };
    Ok(NullCalibration {
        n,
        k,
        dim,
        reps,
        alpha,
        df,
        rejection_rate: rejected as f64 / reps as f64,
        ks_distance,
        degenerate,
        statistics,
    })
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `samples` and the chi-squared distribution with `df` degrees of freedom.
pub fn ks_distance_chi2(samples: &[f64], df: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let len = sorted.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = 1.0 - chi2_sf(x.max(0.0), df)?;
        worst = worst.max((cdf - i as f64 / len).abs());
        worst = worst.max((cdf - (i + 1) as f64 / len).abs());
    }
    Ok(worst)
}

/// `verdict` for external callers (permutation calibration in the CLI).
pub fn test_outcome(cloud: &PointCloud<f64>, y: &LabelVector, alpha: f64) -> (Verdict, Option<f64>) {
    verdict(cloud, y, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Metric;

    #[test]
    fn sin_label_examples() {
        assert_eq!(sin_label(0.1, 0.1), 1);
        assert_eq!(sin_label(0.3, 0.4), 0);
    }

    #[test]
    fn settings_have_expected_shapes() {
        for kind in [SimKind::Sin, SimKind::Max, SimKind::Mixture, SimKind::Degree] {
            let s = SimSetting::new(kind, 50, 3).with_grid(20);
            let (cloud, y) = generate::<f64>(&s).unwrap();
            assert_eq!(cloud.len(), 50);
            assert_eq!(y.len(), 50);
            let k = if kind == SimKind::Degree { 9 } else { 2 };
            assert_eq!(y.k(), k);
            assert_eq!(generate::<f64>(&s).unwrap().1, y);
        }
    }

    #[test]
    fn constant_polynomials() {
        let a = PointCloud::<f64>::function_grid(vec![0.3; 10].into_iter().chain(vec![0.3; 10]).collect(), 10).unwrap();
        assert!(a.distance(0, 1).unwrap().abs() < 1e-15);
        let b = PointCloud::<f64>::function_grid(vec![0.3; 10].into_iter().chain(vec![0.5; 10]).collect(), 10).unwrap();
        assert!((b.distance(0, 1).unwrap() - 0.2 * (10.0f64 / 9.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn horner_matches_powers() {
        let c = [0.5, 0.25, 2.0];
        assert!((horner(&c, 0.3) - (0.5 + 0.25 * 0.3 + 2.0 * 0.09)).abs() < 1e-15);
    }

    #[test]
    fn mixing_extremes() {
        let y = LabelVector::from_codes((0..100).map(|i| i % 3).collect(), 3).unwrap();
        assert_eq!(mix_labels(&y, 1.0, 9).unwrap(), y);
        assert_eq!(mix_labels(&y, 0.4, 9).unwrap(), mix_labels(&y, 0.4, 9).unwrap());
        assert!(mix_labels(&y, 1.5, 9).is_err());
    }

    #[test]
    fn single_replication_reproduces() {
        let s = SimSetting::new(SimKind::Sin, 60, 0);
        let curve = power_curve(&s, &[0.0, 1.0], 1, 0.05, 11).unwrap();
        assert!(curve.rejections.iter().all(|r| *r == 0.0 || *r == 1.0));
        let again = replicate(&s, &[0.0, 1.0], 0.05, 11, 0).unwrap();
        for (rate, v) in curve.rejections.iter().zip(again) {
            assert_eq!(*rate == 1.0, v == Verdict::Reject);
        }
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        // chi2(2) quantiles: -2 ln(1 - u)
        let samples: Vec<f64> = (0..1000).map(|i| -2.0 * (1.0 - (i as f64 + 0.5) / 1000.0).ln()).collect();
        assert!(ks_distance_chi2(&samples, 2).unwrap() < 1e-3);
    }
}
