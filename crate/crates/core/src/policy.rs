//! Numeric tolerances shared by the matrix kernels and the group layer.

/// Tolerances for the dense matrix kernels.
///
/// The defaults are what every public entry point uses; callers that need a
/// different trade-off go through the `*_with` variants in [`crate::matfun`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Eigenvalues within this distance (relative to ‖A‖_F) of the closed
    /// negative real axis are rejected by the principal logarithm.
    pub cut_tolerance: f64,
    /// Square roots are taken until ‖T − I‖₁ drops below this value.
    pub log_sqrt_threshold: f64,
    /// Hard cap on the number of square roots in the inverse scaling step.
    pub max_square_roots: usize,
    /// Accepted relative asymmetry ‖S − Sᵀ‖_F / ‖S‖_F for SPD inputs.
    pub symmetry_tolerance: f64,
    /// A Cholesky pivot below this fraction of the largest diagonal entry
    /// counts as a failed factorization.
    pub pivot_tolerance: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            cut_tolerance: 1e-12,
            log_sqrt_threshold: 0.25,
            max_square_roots: 64,
            symmetry_tolerance: 1e-8,
            pivot_tolerance: 1e-12,
        }
    }
}

/// Rotation angles at or beyond `π − ROTATION_MARGIN` are outside the
/// principal log domain of SO(3) and SE(3).
pub const ROTATION_MARGIN: f64 = 1e-9;

/// Below this angle the Rodrigues coefficients switch to Taylor series.
pub const SMALL_ANGLE: f64 = 1e-4;

/// Tolerance used when validating rotation matrices on construction.
pub const ROTATION_CHECK: f64 = 1e-9;
