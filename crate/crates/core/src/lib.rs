//! Bi-invariant two-sample statistics on Lie groups.
//!
//! Samples are elements of matrix Lie groups (translations, rotations, rigid
//! motions, orientation-preserving linear maps and their products). Means are
//! exponential barycenters, covariances are expressed at the identity, and
//! the Hotelling T², Bhattacharyya and Hellinger measures built from them are
//! invariant under left and right translation and under inversion.
//! Significance is assessed with permutation tests.

// `!(x > y)` comparisons deliberately reject NaN, and published
// coefficients are kept digit for digit.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod groups;
pub mod matfun;
pub mod policy;
pub mod shape;
pub mod stats;
pub mod testing;

pub use error::{Error, Result};
pub use groups::{
    adjoint, compose, connection_exp, connection_log, group_exp, group_log, inverse, product_group, random_element,
    AdjointMatrix, GroupDescriptor, GroupElement, TangentCoords,
};
pub use policy::NumericPolicy;
pub use shape::{differential_coords, frame_from_pca, procrustes_align, relative_pose, ReferenceFrame, TriangleMesh};
pub use stats::{
    averaged_covariance, bhattacharyya, centralized_covariance, euclidean_bhattacharyya, euclidean_t2, group_mean,
    hellinger, hotelling_t2, mahalanobis_sq, pooled_covariance, riemannian_t2_euclidean, sample_wrapped_gaussian,
    CovarianceAtIdentity, MeanOptions, MeanResult, SampleSet, Statistic, TwoSampleFit,
};
pub use testing::{
    bh_fdr, global_test, inv_norm_cdf, local_tests, permutation_test, permutation_tests, GlobalTestReport,
    LocalTestReport, PermutationConfig, TestReport,
};
