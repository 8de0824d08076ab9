//! Group means, covariances at the identity and the bi-invariant
//! dissimilarity measures between two samples.
//!
//! All covariances are *left-centralized*: residuals `log(ḡ⁻¹gᵢ)` are
//! expressed at the identity, so samples with different means share one
//! tangent space. Every covariance is normalized by `1/m`, including the
//! per-sample covariances of the Euclidean reference formulas; this is the
//! normalization under which the pooled covariance reproduces the classical
//! unbiased pooled estimator.
//!
//! Mahalanobis-type quantities are evaluated through a Cholesky factor,
//! never an explicit inverse. A covariance whose factorization fails is
//! reported as [`Error::NotPositiveDefinite`]; no regularization is applied
//! since a pseudo-inverse would break bi-invariance.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::groups::{compose, connection_exp, group_exp, inverse, GroupDescriptor, GroupElement, TangentCoords};
use crate::matfun::{eigenvalues, SpdFactor};
use crate::policy::ROTATION_MARGIN;

/// An ordered, non-empty sample of elements from one group.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    descriptor: GroupDescriptor,
    elements: Vec<GroupElement>,
}

impl SampleSet {
    /// Builds a sample set, taking the group from the first element.
    pub fn new(elements: Vec<GroupElement>) -> Result<Self> {
        let first = elements.first().ok_or(Error::EmptySampleSet)?;
        let descriptor = first.descriptor();
        Self::with_descriptor(descriptor, elements)
    }

    pub fn with_descriptor(descriptor: GroupDescriptor, elements: Vec<GroupElement>) -> Result<Self> {
        descriptor.validate()?;
        if elements.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if let Some(bad) = elements.iter().find(|g| !g.belongs_to(&descriptor)) {
            return Err(Error::DescriptorMismatch {
                left: descriptor.to_string(),
                right: bad.descriptor().to_string(),
            });
        }
        Ok(Self { descriptor, elements })
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<GroupElement> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Marginal sample of factor `i` of a product group.
    pub fn component(&self, i: usize) -> Result<SampleSet> {
        let factors = self
            .descriptor
            .factors()
            .ok_or_else(|| Error::InvalidConfig(format!("{} is not a product group", self.descriptor)))?;
        let desc = factors.get(i).ok_or_else(|| Error::InvalidConfig(format!("component {i} out of range")))?.clone();
        let elements =
            self.elements.iter().map(|g| g.factors().expect("validated product element")[i].clone()).collect();
        Ok(SampleSet { descriptor: desc, elements })
    }

    /// `(f g₁, …, f g_m)`
    pub fn left_translated(&self, f: &GroupElement) -> Result<SampleSet> {
        let elements = self.elements.iter().map(|g| compose(f, g)).collect::<Result<_>>()?;
        Ok(SampleSet { descriptor: self.descriptor.clone(), elements })
    }

    /// `(g₁ f, …, g_m f)`
    pub fn right_translated(&self, f: &GroupElement) -> Result<SampleSet> {
        let elements = self.elements.iter().map(|g| compose(g, f)).collect::<Result<_>>()?;
        Ok(SampleSet { descriptor: self.descriptor.clone(), elements })
    }

    /// `(g₁⁻¹, …, g_m⁻¹)`
    pub fn inverted(&self) -> SampleSet {
        SampleSet { descriptor: self.descriptor.clone(), elements: self.elements.iter().map(inverse).collect() }
    }

    fn refs(&self) -> Vec<&GroupElement> {
        self.elements.iter().collect()
    }
}

/// Stopping rule for the group-mean fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MeanOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanResult {
    pub mean: GroupElement,
    /// Number of updates applied to the initial guess.
    pub iterations: usize,
    /// Norm of the last mean tangent update, `‖(1/m) Σ log(ḡ⁻¹gᵢ)‖`.
    pub residual: f64,
}

/// A converged mean together with the residuals `log(ḡ⁻¹gᵢ)` at it.
pub(crate) struct Centered {
    pub mean: MeanResult,
    pub residuals: Vec<DVector<f64>>,
}

fn residuals_at(mean: &GroupElement, elems: &[&GroupElement]) -> Result<Vec<DVector<f64>>> {
    let inv = inverse(mean);
    elems.iter().map(|g| Ok(compose(&inv, g)?.log()?.into_vector())).collect()
}

pub(crate) fn center(elems: &[&GroupElement], opts: &MeanOptions) -> Result<Centered> {
    let first = *elems.first().ok_or(Error::EmptySampleSet)?;
    let desc = first.descriptor();
    let m = elems.len() as f64;
    let mut mean = first.clone();
    let mut residual = f64::INFINITY;
    for iterations in 0..=opts.max_iter {
        let residuals = residuals_at(&mean, elems)?;
        let mut step = DVector::zeros(first.dim());
        for r in &residuals {
            step += r;
        }
        step /= m;
        residual = step.norm();
        if !residual.is_finite() {
            break;
        }
        if residual <= opts.tol {
            return Ok(Centered { mean: MeanResult { mean, iterations, residual }, residuals });
        }
        if iterations == opts.max_iter {
            break;
        }
        mean = compose(&mean, &group_exp(&desc, &TangentCoords::new(step))?)?;
    }
    Err(Error::NotConverged { iterations: opts.max_iter, residual })
}

/// Exponential barycenter: the `ḡ` with `Σ log(ḡ⁻¹gᵢ) = 0`, computed by the
/// fixed point `ḡ ← ḡ·exp((1/m) Σ log(ḡ⁻¹gᵢ))` started at the first sample.
pub fn group_mean(samples: &SampleSet, opts: &MeanOptions) -> Result<MeanResult> {
    Ok(center(&samples.refs(), opts)?.mean)
}

/// Symmetric positive semidefinite `d×d` covariance at the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceAtIdentity {
    pub descriptor: GroupDescriptor,
    pub matrix: DMatrix<f64>,
    /// Number of samples the matrix was formed from.
    pub weight: f64,
}

impl CovarianceAtIdentity {
    pub fn new(descriptor: GroupDescriptor, matrix: DMatrix<f64>, weight: f64) -> Result<Self> {
        let d = descriptor.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: matrix.nrows() });
        }
        if !matrix.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("covariance"));
        }
        let norm = matrix.norm();
        if (&matrix - matrix.transpose()).norm() > 1e-12 * norm.max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric((&matrix - matrix.transpose()).norm() / norm));
        }
        let eig = matrix.clone().symmetric_eigenvalues();
        let max = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if eig.iter().any(|&l| l < -1e-10 * max) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { descriptor, matrix, weight })
    }

    pub fn zeros(descriptor: GroupDescriptor, weight: f64) -> Self {
        let d = descriptor.dim();
        Self { descriptor, matrix: DMatrix::zeros(d, d), weight }
    }

    /// `[Σ] ↦ B [Σ] Bᵀ` for a change of identity coordinates `x ↦ B x`.
    pub fn congruence(&self, b: &DMatrix<f64>) -> CovarianceAtIdentity {
        let mut m = b * &self.matrix * b.transpose();
        symmetrize(&mut m);
        Self { descriptor: self.descriptor.clone(), matrix: m, weight: self.weight }
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn outer_mean(residuals: &[DVector<f64>], dim: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(dim, dim);
    for r in residuals {
        s.ger(1.0, r, r, 1.0);
    }
    s /= residuals.len() as f64;
    symmetrize(&mut s);
    s
}

/// `[Σ] = (1/m) Σ [log(ḡ⁻¹gₗ)][log(ḡ⁻¹gₗ)]ᵀ`
pub fn centralized_covariance(samples: &SampleSet, mean: &GroupElement) -> Result<CovarianceAtIdentity> {
    if !mean.belongs_to(&samples.descriptor) {
        return Err(Error::DescriptorMismatch {
            left: samples.descriptor.to_string(),
            right: mean.descriptor().to_string(),
        });
    }
    let residuals = residuals_at(mean, &samples.refs())?;
    Ok(CovarianceAtIdentity {
        descriptor: samples.descriptor.clone(),
        matrix: outer_mean(&residuals, samples.descriptor.dim()),
        weight: samples.len() as f64,
    })
}

fn check_same(a: &CovarianceAtIdentity, b: &CovarianceAtIdentity) -> Result<()> {
    if a.descriptor != b.descriptor {
        return Err(Error::DescriptorMismatch { left: a.descriptor.to_string(), right: b.descriptor.to_string() });
    }
    Ok(())
}

/// `[Σ̂] = (m Σ_A + n Σ_B) / (m + n − 2)` with `m, n` the covariance weights.
pub fn pooled_covariance(a: &CovarianceAtIdentity, b: &CovarianceAtIdentity) -> Result<CovarianceAtIdentity> {
    check_same(a, b)?;
    let total = a.weight + b.weight;
    if total <= 2.0 {
        return Err(Error::DegenerateWeights(total));
    }
    let matrix = (&a.matrix * a.weight + &b.matrix * b.weight) / (total - 2.0);
    Ok(CovarianceAtIdentity { descriptor: a.descriptor.clone(), matrix, weight: total })
}

/// `[Σ̄] = (Σ_A + Σ_B) / 2`
pub fn averaged_covariance(a: &CovarianceAtIdentity, b: &CovarianceAtIdentity) -> Result<CovarianceAtIdentity> {
    check_same(a, b)?;
    let matrix = (&a.matrix + &b.matrix) * 0.5;
    Ok(CovarianceAtIdentity { descriptor: a.descriptor.clone(), matrix, weight: a.weight + b.weight })
}

/// Bi-invariant squared Mahalanobis distance
/// `μ² = [log(ḡ⁻¹f)]ᵀ [Σ]⁻¹ [log(ḡ⁻¹f)]`.
pub fn mahalanobis_sq(f: &GroupElement, mean: &GroupElement, cov: &CovarianceAtIdentity) -> Result<f64> {
    let v = compose(&inverse(mean), f)?.log()?;
    let factor = SpdFactor::new(&cov.matrix)?;
    if v.len() != factor.dim() {
        return Err(Error::DimensionMismatch { expected: factor.dim(), actual: v.len() });
    }
    Ok(factor.quadratic_form(v.as_vector()))
}

/// `t² = mn/(m+n) · δᵀ Σ̂⁻¹ δ` from the mean difference `δ = [log(ḡ⁻¹h̄)]`
/// and the two centralized covariances.
pub fn t2_from_moments(diff: &DVector<f64>, cov_a: &CovarianceAtIdentity, cov_b: &CovarianceAtIdentity) -> Result<f64> {
    let pooled = pooled_covariance(cov_a, cov_b)?;
    let (m, n) = (cov_a.weight, cov_b.weight);
    let factor = SpdFactor::new(&pooled.matrix)?;
    Ok(m * n / (m + n) * factor.quadratic_form(diff))
}

/// `D_B = ⅛ δᵀ Σ̄⁻¹ δ + ½ ln(det Σ̄ / √(det Σ_A det Σ_B))`, with the
/// determinant ratio taken from Cholesky log-determinants.
pub fn bhattacharyya_from_moments(
    diff: &DVector<f64>,
    cov_a: &CovarianceAtIdentity,
    cov_b: &CovarianceAtIdentity,
) -> Result<f64> {
    let avg = averaged_covariance(cov_a, cov_b)?;
    let fa = SpdFactor::new(&cov_a.matrix)?;
    let fb = SpdFactor::new(&cov_b.matrix)?;
    let fbar = SpdFactor::new(&avg.matrix)?;
    let mahal = fbar.quadratic_form(diff);
    let log_ratio = fbar.log_det() - 0.5 * (fa.log_det() + fb.log_det());
    Ok(0.125 * mahal + 0.5 * log_ratio)
}

/// `H = √(1 − e^{−D_B})`
pub fn hellinger_from_bhattacharyya(d_b: f64) -> f64 {
    (-(-d_b.max(0.0)).exp_m1()).sqrt()
}

/// Two-sample dissimilarity measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    HotellingT2,
    Bhattacharyya,
    Hellinger,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::HotellingT2, Statistic::Bhattacharyya, Statistic::Hellinger];

    pub fn tag(self) -> &'static str {
        match self {
            Statistic::HotellingT2 => "t2",
            Statistic::Bhattacharyya => "bhattacharyya",
            Statistic::Hellinger => "hellinger",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t2" | "hotelling" | "hotelling_t2" => Ok(Statistic::HotellingT2),
            "bhattacharyya" | "db" => Ok(Statistic::Bhattacharyya),
            "hellinger" | "h" => Ok(Statistic::Hellinger),
            other => Err(Error::InvalidConfig(format!("unknown statistic {other:?}"))),
        }
    }
}

/// Means, covariances and mean difference of two samples, computed once and
/// shared by all statistics.
#[derive(Debug, Clone)]
pub struct TwoSampleFit {
    pub mean_a: MeanResult,
    pub mean_b: MeanResult,
    pub cov_a: CovarianceAtIdentity,
    pub cov_b: CovarianceAtIdentity,
    /// `[log(ḡ⁻¹h̄)]`
    pub diff: DVector<f64>,
}

impl TwoSampleFit {
    pub fn new(a: &SampleSet, b: &SampleSet, opts: &MeanOptions) -> Result<Self> {
        if a.descriptor != b.descriptor {
            return Err(Error::DescriptorMismatch { left: a.descriptor.to_string(), right: b.descriptor.to_string() });
        }
        Self::from_refs(&a.descriptor, &a.refs(), &b.refs(), opts)
    }

    pub(crate) fn from_refs(
        desc: &GroupDescriptor,
        a: &[&GroupElement],
        b: &[&GroupElement],
        opts: &MeanOptions,
    ) -> Result<Self> {
        let ca = center(a, opts)?;
        let cb = center(b, opts)?;
        let d = desc.dim();
        let cov_a = CovarianceAtIdentity {
            descriptor: desc.clone(),
            matrix: outer_mean(&ca.residuals, d),
            weight: a.len() as f64,
        };
        let cov_b = CovarianceAtIdentity {
            descriptor: desc.clone(),
            matrix: outer_mean(&cb.residuals, d),
            weight: b.len() as f64,
        };
        // log(ḡ⁻¹h̄) = −log(h̄⁻¹ḡ); averaging both makes swapping the samples
        // negate the difference exactly, so every statistic is symmetric.
        let ab = compose(&inverse(&ca.mean.mean), &cb.mean.mean)?.log()?.into_vector();
        let ba = compose(&inverse(&cb.mean.mean), &ca.mean.mean)?.log()?.into_vector();
        let diff = (ab - ba) * 0.5;
        Ok(Self { mean_a: ca.mean, mean_b: cb.mean, cov_a, cov_b, diff })
    }

    pub fn t2(&self) -> Result<f64> {
        t2_from_moments(&self.diff, &self.cov_a, &self.cov_b)
    }

    pub fn bhattacharyya(&self) -> Result<f64> {
        bhattacharyya_from_moments(&self.diff, &self.cov_a, &self.cov_b)
    }

    pub fn hellinger(&self) -> Result<f64> {
        Ok(hellinger_from_bhattacharyya(self.bhattacharyya()?))
    }

    pub fn statistic(&self, s: Statistic) -> Result<f64> {
        match s {
            Statistic::HotellingT2 => self.t2(),
            Statistic::Bhattacharyya => self.bhattacharyya(),
            Statistic::Hellinger => self.hellinger(),
        }
    }
}

/// Bi-invariant Hotelling T² with default mean options.
pub fn hotelling_t2(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    TwoSampleFit::new(a, b, &MeanOptions::default())?.t2()
}

/// Bi-invariant Bhattacharyya distance with default mean options.
pub fn bhattacharyya(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    TwoSampleFit::new(a, b, &MeanOptions::default())?.bhattacharyya()
}

/// Bi-invariant Hellinger distance with default mean options.
pub fn hellinger(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    TwoSampleFit::new(a, b, &MeanOptions::default())?.hellinger()
}

// ---------------------------------------------------------------------------
// Euclidean reference formulas
// ---------------------------------------------------------------------------

fn vec_mean(xs: &[DVector<f64>]) -> Result<DVector<f64>> {
    let first = xs.first().ok_or(Error::EmptySampleSet)?;
    let mut s = DVector::zeros(first.len());
    for x in xs {
        if x.len() != first.len() {
            return Err(Error::DimensionMismatch { expected: first.len(), actual: x.len() });
        }
        s += x;
    }
    Ok(s / xs.len() as f64)
}

fn scatter(xs: &[DVector<f64>], mean: &DVector<f64>) -> DMatrix<f64> {
    let d = mean.len();
    let mut s = DMatrix::zeros(d, d);
    for x in xs {
        let c = x - mean;
        s += &c * c.transpose();
    }
    s
}

fn quad_inv(s: &DMatrix<f64>, v: &DVector<f64>) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(s.clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(v.dot(&chol.solve(v)))
}

fn chol_log_det(s: &DMatrix<f64>) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(s.clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Classical two-sample Hotelling T² with the unbiased pooled covariance.
pub fn euclidean_t2(a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<f64> {
    let (pa, pb) = (vec_mean(a)?, vec_mean(b)?);
    let (m, n) = (a.len() as f64, b.len() as f64);
    if m + n <= 2.0 {
        return Err(Error::DegenerateWeights(m + n));
    }
    let pooled = (scatter(a, &pa) + scatter(b, &pb)) / (m + n - 2.0);
    Ok(m * n / (m + n) * quad_inv(&pooled, &(pa - pb))?)
}

/// Classical Bhattacharyya distance between the Gaussian fits of two
/// samples, with per-sample covariances normalized by `1/m`.
pub fn euclidean_bhattacharyya(a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<f64> {
    let (pa, pb) = (vec_mean(a)?, vec_mean(b)?);
    let sa = scatter(a, &pa) / a.len() as f64;
    let sb = scatter(b, &pb) / b.len() as f64;
    let avg = (&sa + &sb) * 0.5;
    let mahal = quad_inv(&avg, &(pa - pb))?;
    let log_ratio = chol_log_det(&avg)? - 0.5 * (chol_log_det(&sa)? + chol_log_det(&sb)?);
    Ok(0.125 * mahal + 0.5 * log_ratio)
}

/// Two-point Riemannian T² (the average of the generalized T² evaluated at
/// both means) specialized to ℝᵈ, where logarithms are differences.
pub fn riemannian_t2_euclidean(a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<f64> {
    let (pa, pb) = (vec_mean(a)?, vec_mean(b)?);
    let wa = scatter(a, &pa) / a.len() as f64;
    let wb = scatter(b, &pb) / b.len() as f64;
    let at_a = quad_inv(&wa, &(&pb - &pa))?;
    let at_b = quad_inv(&wb, &(&pa - &pb))?;
    Ok(0.5 * (at_a + at_b))
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Result of [`sample_wrapped_gaussian`].
#[derive(Debug, Clone, PartialEq)]
pub struct WrappedGaussianDraw {
    pub samples: SampleSet,
    /// Tangent draws discarded for leaving the log domain.
    pub rejected: usize,
}

/// Whether `v` lies strictly inside the principal log domain, i.e.
/// `log(exp(v)) = v`.
pub fn in_log_domain(desc: &GroupDescriptor, v: &[f64]) -> bool {
    let limit = std::f64::consts::PI - ROTATION_MARGIN;
    match desc {
        GroupDescriptor::Translation(_) => true,
        GroupDescriptor::SO3 | GroupDescriptor::SE3 => (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() < limit,
        GroupDescriptor::GLPlus(n) => match eigenvalues(&DMatrix::from_row_slice(*n, *n, v)) {
            Ok(eig) => eig.iter().all(|&(_, im)| im.abs() < limit),
            Err(_) => false,
        },
        GroupDescriptor::Product(fs) => {
            let mut off = 0;
            fs.iter().all(|f| {
                let d = f.dim();
                let ok = in_log_domain(f, &v[off..off + d]);
                off += d;
                ok
            })
        }
    }
}

/// Square-root factor `L` with `L Lᵀ = Σ` for a PSD matrix.
fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = nalgebra::SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * max) {
        return Err(Error::NotPositiveDefinite);
    }
    let mut l = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    Ok(l)
}

/// Draws `n` elements `mean·exp(vᵢ)` with `vᵢ ~ N(0, [Σ])` in identity
/// coordinates. Draws outside the log domain are rejected and redrawn; more
/// than 50% rejections fail with [`Error::CovarianceTooLarge`].
pub fn sample_wrapped_gaussian(
    mean: &GroupElement,
    cov: &CovarianceAtIdentity,
    n: usize,
    seed: u64,
) -> Result<WrappedGaussianDraw> {
    let desc = mean.descriptor();
    if cov.descriptor != desc {
        return Err(Error::DescriptorMismatch { left: desc.to_string(), right: cov.descriptor.to_string() });
    }
    if n == 0 {
        return Err(Error::EmptySampleSet);
    }
    let d = desc.dim();
    let factor = psd_factor(&cov.matrix)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elements = Vec::with_capacity(n);
    let mut rejected = 0usize;
    while elements.len() < n {
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let v = &factor * z;
        if !in_log_domain(&desc, v.as_slice()) {
            rejected += 1;
            if rejected > n {
                return Err(Error::CovarianceTooLarge { rejected, drawn: rejected + elements.len() });
            }
            continue;
        }
        elements.push(connection_exp(mean, &TangentCoords::new(v))?);
    }
    Ok(WrappedGaussianDraw { samples: SampleSet { descriptor: desc, elements }, rejected })
}
