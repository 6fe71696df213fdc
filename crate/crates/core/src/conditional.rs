//! Conditional coefficient `psi(Z, Y | X)` by plug-in, and greedy forward
//! variable selection driven by it.

use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{contingency, psi_hat};
use crate::error::{Error, Result};
use crate::graph::build_neighbor_graph;
use crate::labels::LabelVector;
use crate::metric::{Backend, Metric, PointCloud, ProductCloud};
use crate::scalar::Real;

/// `psi_hat` is treated as saturated (the conditional ratio undefined) at or
/// above `1 - SATURATION_GAP`.
pub const SATURATION_GAP: f64 = 1e-9;

/// `psi_hat` of the labels against the nearest-neighbor graph of `cloud`.
pub fn psi_hat_of<T: Real, M: Metric<T> + ?Sized>(cloud: &M, y: &LabelVector) -> Result<T> {
    if cloud.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs points",
            expected: cloud.len(),
            found: y.len(),
        });
    }
    let g = build_neighbor_graph(cloud)?;
    psi_hat(&contingency::<T>(y, &g)?)
}

/// `psi_hat` under the product metric of `parts`.
///
/// All-Euclidean products are flattened into one Euclidean cloud so the
/// tree search applies; the distances are the same.
pub fn psi_hat_joint<T: Real>(parts: &[&PointCloud<T>], y: &LabelVector) -> Result<T> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("empty covariate set".into()));
    }
    if parts.len() == 1 {
        return psi_hat_of(parts[0], y);
    }
    let all_euclidean = parts
        .iter()
        .all(|p| matches!(p.backend(), Backend::Euclidean { .. }));
    if all_euclidean {
        psi_hat_of(&PointCloud::concat_euclidean(parts)?, y)
    } else {
        psi_hat_of(&ProductCloud::new(parts.to_vec())?, y)
    }
}

fn check_base<T: Real>(base: T) -> Result<()> {
    if base >= T::one() - T::lit(SATURATION_GAP) {
        return Err(Error::ConditionalUndefined {
            psi: base.to_f64_lossy(),
        });
    }
    Ok(())
}

fn ratio<T: Real>(joint: T, base: T) -> T {
    (joint - base) / (T::one() - base)
}

/// `(psi_hat((X, Z), Y) - psi_hat(X, Y)) / (1 - psi_hat(X, Y))` with `X`
/// the product of `given`. May be negative.
pub fn psi_conditional_hat<T: Real>(
    given: &[&PointCloud<T>],
    candidate: &PointCloud<T>,
    y: &LabelVector,
) -> Result<T> {
    let base = psi_hat_joint(given, y)?;
    check_base(base)?;
    let mut parts = given.to_vec();
    parts.push(candidate);
    Ok(ratio(psi_hat_joint(&parts, y)?, base))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The last selected column scored `<= 0`.
    NonpositiveScore,
    /// Every column was selected.
    Exhausted,
    MaxSteps,
    /// The chosen set already gives `psi_hat >= 1 - 1e-9`, so further
    /// conditional scores are undefined.
    Saturated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTrace<T> {
    pub chosen: Vec<usize>,
    pub scores: Vec<T>,
    pub stopped_because: StopReason,
}

/// Index of the largest score; ties go to the earliest entry.
fn argmax<T: Real>(scored: &[(usize, T)]) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for &(i, s) in scored {
        match best {
            Some((_, b)) if !(s > b) => {}
            _ => best = Some((i, s)),
        }
    }
    best
}

/// Greedy forward selection: first by `psi_hat(X_i, Y)`, then by the
/// conditional score given the columns chosen so far. A column is recorded
/// before its score is checked, so a trace ending in
/// [`StopReason::NonpositiveScore`] has a last score `<= 0`.
///
/// `max_steps` defaults to the number of columns.
pub fn select_variables<T: Real>(
    columns: &[PointCloud<T>],
    y: &LabelVector,
    max_steps: Option<usize>,
) -> Result<SelectionTrace<T>> {
    let first = columns
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty covariate list".into()))?;
    if first.n() < 2 {
        return Err(Error::TooFewPoints {
            n: first.n(),
            required: 2,
        });
    }
    if let Some(c) = columns.iter().find(|c| c.n() != first.n()) {
        return Err(Error::LengthMismatch {
            what: "points per covariate column",
            expected: first.n(),
            found: c.n(),
        });
    }
    let limit = max_steps.unwrap_or(columns.len()).min(columns.len());
    let mut chosen: Vec<usize> = Vec::new();
    let mut scores: Vec<T> = Vec::new();

    loop {
        if chosen.len() == columns.len() {
            return Ok(SelectionTrace { chosen, scores, stopped_because: StopReason::Exhausted });
        }
        if chosen.len() >= limit {
            return Ok(SelectionTrace { chosen, scores, stopped_because: StopReason::MaxSteps });
        }
        let given: Vec<&PointCloud<T>> = chosen.iter().map(|&i| &columns[i]).collect();
        let base = if given.is_empty() {
            None
        } else {
            let b = psi_hat_joint(&given, y)?;
            if b >= T::one() - T::lit(SATURATION_GAP) {
                return Ok(SelectionTrace { chosen, scores, stopped_because: StopReason::Saturated });
            }
            Some(b)
        };
        let candidates: Vec<usize> = (0..columns.len()).filter(|i| !chosen.contains(i)).collect();
        let scored = candidates
            .par_iter()
            .map(|&i| {
                let s = match base {
                    None => psi_hat_of(&columns[i], y)?,
                    Some(b) => {
                        let mut parts = given.clone();
                        parts.push(&columns[i]);
                        ratio(psi_hat_joint(&parts, y)?, b)
                    }
                };
                Ok((i, s))
            })
            .collect::<Result<Vec<_>>>()?;
        let (pick, score) = argmax(&scored).expect("at least one candidate");
        chosen.push(pick);
        scores.push(score);
        if score <= T::zero() {
            return Ok(SelectionTrace {
                chosen,
                scores,
                stopped_because: StopReason::NonpositiveScore,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> PointCloud<f64> {
        PointCloud::from_scalars(values.to_vec()).unwrap()
    }

    #[test]
    fn duplicated_covariate_adds_nothing() {
        let x = column(&[0.1, 0.5, 0.35, 0.9, 0.7, 0.2, 0.65, 0.05]);
        let y = LabelVector::from_codes(vec![0, 1, 1, 0, 1, 0, 0, 1], 2).unwrap();
        let v = psi_conditional_hat(&[&x], &x, &y).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn saturated_base_is_an_error() {
        let x = column(&[0.0, 0.1, 5.0, 5.1]);
        let y = LabelVector::from_codes(vec![0, 0, 1, 1], 2).unwrap();
        let z = column(&[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            psi_conditional_hat(&[&x], &z, &y),
            Err(Error::ConditionalUndefined { .. })
        ));
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax(&[(3, 0.5), (1, 0.7), (2, 0.7)]), Some((1, 0.7)));
        assert_eq!(argmax::<f64>(&[]), None);
    }

    #[test]
    fn perfect_column_saturates() {
        let signal = column(&[0.0, 0.1, 5.0, 5.1, 0.2, 5.2]);
        let noise = column(&[0.3, 0.9, 0.1, 0.5, 0.7, 0.2]);
        let y = LabelVector::from_codes(vec![0, 0, 1, 1, 0, 1], 2).unwrap();
        let t = select_variables(&[noise, signal], &y, None).unwrap();
        assert_eq!(t.chosen, vec![1]);
        assert!((t.scores[0] - 1.0).abs() < 1e-12);
        assert_eq!(t.stopped_because, StopReason::Saturated);
    }

    #[test]
    fn max_steps_and_errors() {
        let a = column(&[0.0, 0.1, 5.0, 5.1, 0.2, 5.2]);
        let y = LabelVector::from_codes(vec![0, 1, 0, 1, 1, 0], 2).unwrap();
        let t = select_variables(&[a.clone(), a.clone()], &y, Some(0)).unwrap();
        assert_eq!(t.stopped_because, StopReason::MaxSteps);
        assert!(t.chosen.is_empty());
        assert!(select_variables::<f64>(&[], &y, None).is_err());
        let short = column(&[0.0, 1.0]);
        assert!(select_variables(&[a, short], &y, None).is_err());
    }
}
