//! Dense real matrix functions: exponential, principal logarithm, SPD solves
//! and determinants.
//!
//! The exponential uses scaling and squaring with diagonal Padé approximants
//! of degree 3, 5, 7, 9 or 13 picked from the 1-norm of the input. The
//! logarithm works on the real Schur form `A = Q T Qᵀ`: square roots of the
//! quasi-triangular factor are taken until `T` is close to the identity, then
//! `log(I + X)` is evaluated as a Gauss–Legendre quadrature of
//! `∫₀¹ X (I + tX)⁻¹ dt`, which is the diagonal Padé approximant of the same
//! degree. Everything stays in real arithmetic.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Number of quadrature nodes for `log(I + X)`.
const LOG_QUADRATURE_NODES: usize = 8;

fn check_square(a: &DMatrix<f64>) -> Result<usize> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(a.nrows())
}

fn check_finite(a: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential `e^A`.
pub fn mat_exp(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(a)?;
    check_finite(a, "matrix exponential input")?;
    let a_norm = norm1(a);
    let ident = DMatrix::<f64>::identity(n, n);

    let (u, v, squarings) = if a_norm <= THETA_3 {
        let (u, v) = pade_low(a, &PADE_3);
        (u, v, 0)
    } else if a_norm <= THETA_5 {
        let (u, v) = pade_low(a, &PADE_5);
        (u, v, 0)
    } else if a_norm <= THETA_7 {
        let (u, v) = pade_low(a, &PADE_7);
        (u, v, 0)
    } else if a_norm <= THETA_9 {
        let (u, v) = pade_low(a, &PADE_9);
        (u, v, 0)
    } else {
        let s = (a_norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = a * 2f64.powi(-s);
        let (u, v) = pade_13(&scaled, &ident);
        (u, v, s)
    };

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom.lu().solve(&numer).ok_or(Error::NonFinite("matrix exponential (singular Padé denominator)"))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    check_finite(&r, "matrix exponential")?;
    Ok(r)
}

fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut odd = DMatrix::<f64>::identity(n, n) * b[1];
    let mut even = DMatrix::<f64>::identity(n, n) * b[0];
    let mut power = DMatrix::<f64>::identity(n, n);
    for k in 1..b.len() / 2 {
        power = &power * &a2;
        odd += &power * b[2 * k + 1];
        even += &power * b[2 * k];
    }
    (a * odd, even)
}

fn pade_13(a: &DMatrix<f64>, ident: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = &PADE_13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + ident * b[0];
    (u, v)
}

/// Principal matrix logarithm with the default [`NumericPolicy`].
pub fn mat_log(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    mat_log_with(a, &NumericPolicy::default())
}

/// Principal matrix logarithm.
///
/// Fails with [`Error::SpectrumOnCut`] when an eigenvalue lies within
/// `policy.cut_tolerance · ‖A‖_F` of the closed negative real axis.
pub fn mat_log_with(a: &DMatrix<f64>, policy: &NumericPolicy) -> Result<DMatrix<f64>> {
    let n = check_square(a)?;
    check_finite(a, "matrix logarithm input")?;

    if n == 3 {
        let a3 = Matrix3::from_iterator(a.iter().copied());
        if let Some(l) = log3(&a3, policy) {
            return Ok(DMatrix::from_iterator(3, 3, l.iter().copied()));
        }
    }
    let ident = DMatrix::<f64>::identity(n, n);
    if norm1(&(a - &ident)) <= policy.log_sqrt_threshold {
        let log_a = log_near_identity(&(a - &ident))?;
        check_finite(&log_a, "matrix logarithm")?;
        return Ok(log_a);
    }

    let (q, mut t) = real_schur(a)?;
    let blocks = schur_blocks(&t);
    let cut = policy.cut_tolerance * a.norm().max(f64::MIN_POSITIVE);
    check_spectrum(&t, &blocks, cut)?;

    let mut roots = 0usize;
    while norm1(&(&t - &ident)) > policy.log_sqrt_threshold {
        if roots >= policy.max_square_roots {
            return Err(Error::SpectrumOnCut);
        }
        t = sqrt_quasi_triangular(&t, &blocks)?;
        roots += 1;
    }

    let mut log_t = log_near_identity(&(&t - &ident))?;
    log_t *= 2f64.powi(roots as i32);

    let result = &q * log_t * q.transpose();
    check_finite(&result, "matrix logarithm")?;
    Ok(result)
}

/// `log(I + X) = ∫₀¹ X (I + sX)⁻¹ ds` by Gauss–Legendre quadrature, accurate
/// for `‖X‖₁` below the square-root threshold.
fn log_near_identity(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let mut out = DMatrix::<f64>::zeros(n, n);
    for &(node, weight) in gauss_legendre_unit().iter() {
        let lhs = &ident + x * node;
        let term = lhs.lu().solve(x).ok_or(Error::NonFinite("matrix logarithm (singular quadrature system)"))?;
        out += term * weight;
    }
    Ok(out)
}

fn norm1_3(a: &Matrix3<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Principal square root by the product-form Denman–Beavers iteration.
/// `None` if the iteration does not settle, which is what happens when the
/// spectrum touches the closed negative real axis.
fn sqrt3(a: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let ident = Matrix3::identity();
    let mut m = *a;
    let mut y = *a;
    for _ in 0..DB_MAX_ITERATIONS {
        let m_inv = m.try_inverse()?;
        let y_next = y * (ident + m_inv) * 0.5;
        m = (ident * 2.0 + m + m_inv) * 0.25;
        let step = norm1_3(&(y_next - y));
        y = y_next;
        if !y.iter().all(|x| x.is_finite()) {
            return None;
        }
        if step <= 4.0 * f64::EPSILON * norm1_3(&y) {
            let residual = norm1_3(&(y * y - a));
            return (residual <= 1e-12 * norm1_3(a)).then_some(y);
        }
    }
    None
}

const DB_MAX_ITERATIONS: usize = 40;

/// Stack-allocated logarithm for 3×3 inputs that avoids the Schur form.
/// Returns `None` whenever the general path should decide instead.
fn log3(a: &Matrix3<f64>, policy: &NumericPolicy) -> Option<Matrix3<f64>> {
    if !a.iter().all(|x| x.is_finite()) || !(a.determinant() > 0.0) {
        return None;
    }
    let ident = Matrix3::identity();
    let mut t = *a;
    let mut roots = 0;
    while norm1_3(&(t - ident)) > policy.log_sqrt_threshold {
        if roots >= LOG3_MAX_ROOTS {
            return None;
        }
        t = sqrt3(&t)?;
        roots += 1;
    }
    let x = t - ident;
    let mut out = Matrix3::zeros();
    for &(node, weight) in gauss_legendre_unit().iter() {
        let inv = (ident + x * node).try_inverse()?;
        out += inv * x * weight;
    }
    out *= f64::powi(2.0, roots);
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Beyond this many square roots the general path takes over.
const LOG3_MAX_ROOTS: i32 = 6;

/// Iteration budget per dimension for one QR sweep attempt.
const SCHUR_ITERATIONS_PER_DIM: usize = 100;
const SCHUR_ATTEMPTS: usize = 4;

/// Real Schur form `A = Q T Qᵀ` with a bounded number of QR iterations.
///
/// Francis double-shift QR without exceptional shifts can cycle on some
/// inputs. When the budget is exhausted the decomposition is retried on
/// `P A Pᵀ` for a fixed Householder reflector `P` and mapped back.
pub(crate) fn real_schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let budget = SCHUR_ITERATIONS_PER_DIM * n.max(1);
    if let Some(s) = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, budget) {
        return Ok(s.unpack());
    }
    for attempt in 1..=SCHUR_ATTEMPTS {
        let v = DVector::from_fn(n, |i, _| ((attempt * (i + 1)) as f64).sin() + 0.5);
        let p = DMatrix::identity(n, n) - &v * v.transpose() * (2.0 / v.norm_squared());
        let b = &p * a * &p;
        if let Some(s) = nalgebra::linalg::Schur::try_new(b, f64::EPSILON, budget) {
            log::debug!("real Schur form converged after {attempt} similarity restarts");
            let (q, t) = s.unpack();
            return Ok((&p * q, t));
        }
    }
    Err(Error::SchurNotConverged)
}

/// Eigenvalues `(re, im)` read off the diagonal blocks of the real Schur form.
pub(crate) fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let (_, t) = real_schur(a)?;
    let mut out = Vec::with_capacity(a.nrows());
    for (s, size) in schur_blocks(&t) {
        if size == 1 {
            out.push((t[(s, s)], 0.0));
            continue;
        }
        let (p, b, c, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
        let half_tr = 0.5 * (p + d);
        let disc = 0.25 * (p - d) * (p - d) + b * c;
        if disc >= 0.0 {
            let r = disc.sqrt();
            out.push((half_tr + r, 0.0));
            out.push((half_tr - r, 0.0));
        } else {
            let r = (-disc).sqrt();
            out.push((half_tr, r));
            out.push((half_tr, -r));
        }
    }
    Ok(out)
}

/// Diagonal block layout of a real quasi-upper-triangular matrix:
/// `(start, size)` with size 1 or 2.
fn schur_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

fn check_spectrum(t: &DMatrix<f64>, blocks: &[(usize, usize)], cut: f64) -> Result<()> {
    for &(s, size) in blocks {
        if size == 1 {
            if t[(s, s)] <= cut {
                return Err(Error::SpectrumOnCut);
            }
            continue;
        }
        let (a, b, c, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
        let half_tr = 0.5 * (a + d);
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        if disc >= 0.0 {
            let r = disc.sqrt();
            if half_tr - r <= cut {
                return Err(Error::SpectrumOnCut);
            }
        } else if half_tr <= 0.0 && (-disc).sqrt() <= cut {
            return Err(Error::SpectrumOnCut);
        }
    }
    Ok(())
}

/// Principal square root of a 1×1 or 2×2 block whose spectrum is off the
/// closed negative real axis.
fn sqrt_block(t: &DMatrix<f64>, s: usize, size: usize) -> DMatrix<f64> {
    if size == 1 {
        return DMatrix::from_element(1, 1, t[(s, s)].sqrt());
    }
    let blk = t.view((s, s), (2, 2)).clone_owned();
    let det = blk[(0, 0)] * blk[(1, 1)] - blk[(0, 1)] * blk[(1, 0)];
    let sdet = det.sqrt();
    let scale = (blk.trace() + 2.0 * sdet).sqrt();
    (blk + DMatrix::<f64>::identity(2, 2) * sdet) / scale
}

/// Principal square root of a quasi-upper-triangular matrix, block by block
/// (one column of blocks at a time, solving small Sylvester equations for
/// the off-diagonal blocks).
fn sqrt_quasi_triangular(t: &DMatrix<f64>, blocks: &[(usize, usize)]) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let mut u = DMatrix::<f64>::zeros(n, n);
    for (bj, &(sj, nj)) in blocks.iter().enumerate() {
        let ujj = sqrt_block(t, sj, nj);
        u.view_mut((sj, sj), (nj, nj)).copy_from(&ujj);
        for bi in (0..bj).rev() {
            let (si, ni) = blocks[bi];
            let mut rhs = t.view((si, sj), (ni, nj)).clone_owned();
            for &(sk, nk) in &blocks[bi + 1..bj] {
                rhs -= u.view((si, sk), (ni, nk)) * u.view((sk, sj), (nk, nj));
            }
            let uii = u.view((si, si), (ni, ni)).clone_owned();
            let x = solve_sylvester_small(&uii, &ujj, &rhs)?;
            u.view_mut((si, sj), (ni, nj)).copy_from(&x);
        }
    }
    Ok(u)
}

/// Solves `A X + X B = C` for blocks of size at most 2 by vectorization.
fn solve_sylvester_small(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p, q) = (a.nrows(), b.nrows());
    let k = p * q;
    // column-major vec: vec(AX) = (I_q ⊗ A) vec X, vec(XB) = (Bᵀ ⊗ I_p) vec X
    let mut sys = DMatrix::<f64>::zeros(k, k);
    for col in 0..q {
        for row in 0..p {
            let r = col * p + row;
            for kk in 0..p {
                sys[(r, col * p + kk)] += a[(row, kk)];
            }
            for kk in 0..q {
                sys[(r, kk * p + row)] += b[(kk, col)];
            }
        }
    }
    let rhs = DVector::from_iterator(k, c.iter().copied());
    let x = sys.lu().solve(&rhs).ok_or(Error::NonFinite("matrix square root (singular Sylvester system)"))?;
    Ok(DMatrix::from_column_slice(p, q, x.as_slice()))
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre_unit() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(LOG_QUADRATURE_NODES))
}

fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        // Newton on P_m starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (x + 1.0), 0.5 * w));
    }
    out
}

/// Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: DMatrix<f64>,
}

impl SpdFactor {
    pub fn new(s: &DMatrix<f64>) -> Result<Self> {
        Self::with_policy(s, &NumericPolicy::default())
    }

    /// Factorizes the symmetrized input. Fails with
    /// [`Error::NotPositiveDefinite`] when a pivot is non-positive or falls
    /// below `pivot_tolerance` times the largest diagonal entry.
    pub fn with_policy(s: &DMatrix<f64>, policy: &NumericPolicy) -> Result<Self> {
        let n = check_square(s)?;
        check_finite(s, "SPD factorization input")?;
        let norm = s.norm();
        let defect = (s - s.transpose()).norm();
        if norm > 0.0 && defect > policy.symmetry_tolerance * norm {
            return Err(Error::NotSymmetric(defect / norm));
        }
        let max_diag = (0..n).map(|i| s[(i, i)]).fold(0.0, f64::max);
        if max_diag <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let floor = policy.pivot_tolerance * max_diag;
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = s[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut v = 0.5 * (s[(i, j)] + s[(j, i)]);
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / ljj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// `L⁻¹ b` by forward substitution.
    pub fn forward(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut y = b.clone();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v -= self.lower[(i, k)] * y[k];
            }
            y[i] = v / self.lower[(i, i)];
        }
        y
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in i + 1..n {
                v -= self.lower[(k, i)] * x[k];
            }
            x[i] = v / self.lower[(i, i)];
        }
        x
    }

    /// `bᵀ S⁻¹ b = ‖L⁻¹ b‖²`.
    pub fn quadratic_form(&self, b: &DVector<f64>) -> f64 {
        self.forward(b).norm_squared()
    }

    /// `ln det S`, accumulated from the triangular factor.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>()
    }
}

/// Solves `S x = b` for symmetric positive definite `S` without forming `S⁻¹`.
pub fn solve_spd(s: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let factor = SpdFactor::new(s)?;
    if b.len() != factor.dim() {
        return Err(Error::DimensionMismatch { expected: factor.dim(), actual: b.len() });
    }
    Ok(factor.solve(b))
}

/// Determinant by LU with partial pivoting.
pub fn det(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "det of a non-square matrix");
    let mut m = a.clone();
    let mut sign = 1.0;
    for k in 0..n {
        let (piv, max) =
            (k..n).map(|i| (i, m[(i, k)].abs())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if max == 0.0 {
            return 0.0;
        }
        if piv != k {
            m.swap_rows(piv, k);
            sign = -sign;
        }
        let p = m[(k, k)];
        for i in k + 1..n {
            let f = m[(i, k)] / p;
            if f != 0.0 {
                for j in k + 1..n {
                    m[(i, j)] -= f * m[(k, j)];
                }
            }
        }
    }
    sign * (0..n).map(|i| m[(i, i)]).product::<f64>()
}
