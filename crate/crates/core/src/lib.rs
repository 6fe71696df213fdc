//! Nearest-neighbor coupling dependence between a categorical response and
//! covariates living in an arbitrary metric space.
//!
//! The coefficient compares each label `Y_i` with the label of the nearest
//! neighbor of `X_i` and measures the association of the resulting pairs with
//! Cramér's V. Under independence a quadratic form in the centered pair
//! frequencies is asymptotically chi-squared with `(K-1)^2` degrees of
//! freedom, which gives a resampling-free independence (K-sample) test.
//!
//! ## Layout
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`metric`] | point clouds, distance backends, product metric |
//! | [`graph`] | exact nearest-neighbor graph, `W_n`, `W_n'`, `L_n`, `gamma_d` |
//! | [`coupling`] | contingency of `(Y_i, Y_N(i))`, `psi_hat`, norm variants |
//! | [`oracle`] | exact population values for finite joint distributions |
//! | [`independence`] | covariance `Sigma_n`, statistic `I_n`, p-values |
//! | [`conditional`] | conditional coefficient and greedy variable selection |
//! | [`simlab`] | synthetic settings, label mixing, power curves |
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases below name the usual double-precision instantiations.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditional;
pub mod coupling;
pub mod error;
pub mod graph;
pub mod independence;
pub mod labels;
pub mod linalg;
pub mod metric;
pub mod oracle;
pub mod scalar;
pub mod simlab;
pub mod special;

pub use conditional::{psi_conditional_hat, select_variables, SelectionTrace, StopReason};
pub use coupling::{contingency, psi_hat, psi_hat_norm, ContingencyCounts, Link, MatrixNorm};
pub use error::{Error, Result};
pub use graph::{build_neighbor_graph, gamma_d, NeighborGraph, SearchStrategy};
pub use independence::{
    binary_statistic, chi2_sf, independence_statistic, sigma_det_closed_form, sigma_entry,
    sigma_matrix, BinaryVariant, CenteredVector, CovarianceMatrix, TestReport,
};
pub use labels::LabelVector;
pub use metric::{Metric, PointCloud, ProductCloud};
pub use oracle::FiniteJoint;
pub use scalar::Real;

pub type PointCloudF64 = PointCloud<f64>;
pub type PointCloudF32 = PointCloud<f32>;
pub type ContingencyF64 = ContingencyCounts<f64>;
pub type ContingencyF32 = ContingencyCounts<f32>;
pub type CovarianceF64 = CovarianceMatrix<f64>;
pub type TestReportF64 = TestReport<f64>;
pub type FiniteJointF64 = FiniteJoint<f64>;
pub type SelectionTraceF64 = SelectionTrace<f64>;
