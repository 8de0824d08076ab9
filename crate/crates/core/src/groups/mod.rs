//! Matrix Lie groups with their canonical Cartan–Schouten connection.
//!
//! Supported groups are ℝᵈ under addition, SO(3), SE(3), GL⁺(n) and finite
//! products of these. Every group exposes composition, inversion, the group
//! exponential and logarithm in coordinates of the identity tangent space,
//! the adjoint representation, and the connection exponential/logarithm at
//! arbitrary points, which are left translates of the group maps.
//!
//! Canonical identity bases:
//!
//! * `Translation(d)`: standard basis of ℝᵈ.
//! * `SO3`: axis-angle coordinates `ω`, generators are the skew matrices.
//! * `SE3`: `(ω, u)` with the rotation block first; `Ad((R, t)) = [[R, 0], [[t]ₓR, R]]`.
//! * `GLPlus(n)`: elementary matrices `E_ij` in row-major order.
//! * `Product`: concatenation of the factor coordinates.

pub mod se3;
pub mod so3;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matfun;
use crate::policy::ROTATION_CHECK;

/// Which group a [`GroupElement`] lives in.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupDescriptor {
    Translation(usize),
    SO3,
    SE3,
    GLPlus(usize),
    Product(Vec<GroupDescriptor>),
}

impl GroupDescriptor {
    /// Tangent space dimension.
    pub fn dim(&self) -> usize {
        match self {
            GroupDescriptor::Translation(d) => *d,
            GroupDescriptor::SO3 => 3,
            GroupDescriptor::SE3 => 6,
            GroupDescriptor::GLPlus(n) => n * n,
            GroupDescriptor::Product(fs) => fs.iter().map(GroupDescriptor::dim).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GroupDescriptor::Translation(0) => {
                Err(Error::InvalidDescriptor("translation dimension must be positive".into()))
            }
            GroupDescriptor::GLPlus(0) => Err(Error::InvalidDescriptor("GL+(n) needs n >= 1".into())),
            GroupDescriptor::Product(fs) if fs.is_empty() => Err(Error::EmptyProduct),
            GroupDescriptor::Product(fs) => fs.iter().try_for_each(GroupDescriptor::validate),
            _ => Ok(()),
        }
    }

    /// `m` copies of `factor`.
    pub fn power(factor: GroupDescriptor, m: usize) -> Result<Self> {
        product_group(vec![factor; m])
    }

    pub fn factors(&self) -> Option<&[GroupDescriptor]> {
        match self {
            GroupDescriptor::Product(fs) => Some(fs),
            _ => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(match self {
            GroupDescriptor::Translation(d) => Repr::Translation(DVector::zeros(*d)),
            GroupDescriptor::SO3 => Repr::SO3(Matrix3::identity()),
            GroupDescriptor::SE3 => Repr::SE3(Matrix3::identity(), Vector3::zeros()),
            GroupDescriptor::GLPlus(n) => Repr::GLPlus(DMatrix::identity(*n, *n)),
            GroupDescriptor::Product(fs) => Repr::Product(fs.iter().map(GroupDescriptor::identity).collect()),
        })
    }
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupDescriptor::Translation(d) => write!(f, "translation:{d}"),
            GroupDescriptor::SO3 => write!(f, "so3"),
            GroupDescriptor::SE3 => write!(f, "se3"),
            GroupDescriptor::GLPlus(n) => write!(f, "glplus:{n}"),
            GroupDescriptor::Product(fs) => {
                if fs.windows(2).all(|w| w[0] == w[1]) && !fs.is_empty() {
                    write!(f, "power:{}:{}", fs[0], fs.len())
                } else {
                    write!(f, "product(")?;
                    for (i, g) in fs.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{g}")?;
                    }
                    write!(f, ")")
                }
            }
        }
    }
}

impl FromStr for GroupDescriptor {
    type Err = Error;

    /// Parses tags such as `translation:3`, `so3`, `se3`, `glplus:3`,
    /// `power:glplus:3:20` and `product(se3,translation:2)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidDescriptor(format!("unrecognized group tag {s:?}"));
        let parse_n = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
        let desc = if s.eq_ignore_ascii_case("so3") {
            GroupDescriptor::SO3
        } else if s.eq_ignore_ascii_case("se3") {
            GroupDescriptor::SE3
        } else if let Some(d) = s.strip_prefix("translation:") {
            GroupDescriptor::Translation(parse_n(d)?)
        } else if let Some(n) = s.strip_prefix("glplus:") {
            GroupDescriptor::GLPlus(parse_n(n)?)
        } else if let Some(rest) = s.strip_prefix("power:") {
            let (inner, m) = rest.rsplit_once(':').ok_or_else(bad)?;
            GroupDescriptor::power(inner.parse()?, parse_n(m)?)?
        } else if let Some(inner) = s.strip_prefix("product(").and_then(|r| r.strip_suffix(')')) {
            let mut factors = Vec::new();
            let (mut depth, mut start) = (0usize, 0usize);
            for (i, ch) in inner.char_indices() {
                match ch {
                    '(' => depth += 1,
                    ')' => depth = depth.saturating_sub(1),
                    ',' if depth == 0 => {
                        factors.push(inner[start..i].parse()?);
                        start = i + 1;
                    }
                    _ => {}
                }
            }
            if !inner[start..].trim().is_empty() {
                factors.push(inner[start..].parse()?);
            }
            product_group(factors)?
        } else {
            return Err(bad());
        };
        desc.validate()?;
        Ok(desc)
    }
}

/// Builds the direct product of the given groups; all operations act
/// factor-wise and tangent coordinates are concatenated.
pub fn product_group(factors: Vec<GroupDescriptor>) -> Result<GroupDescriptor> {
    if factors.is_empty() {
        return Err(Error::EmptyProduct);
    }
    factors.iter().try_for_each(GroupDescriptor::validate)?;
    Ok(GroupDescriptor::Product(factors))
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Translation(DVector<f64>),
    SO3(Matrix3<f64>),
    SE3(Matrix3<f64>, Vector3<f64>),
    GLPlus(DMatrix<f64>),
    Product(Vec<GroupElement>),
}

/// A validated point of one of the supported groups.
///
/// Elements are checked once on construction; the group operations assume
/// validity and do not re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement(Repr);

impl GroupElement {
    pub fn translation(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidElement("empty translation vector".into()));
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidElement("non-finite translation".into()));
        }
        Ok(Self(Repr::Translation(v)))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::translation(DVector::from_column_slice(v))
    }

    pub fn so3(r: Matrix3<f64>) -> Result<Self> {
        if !so3::is_rotation(&r, ROTATION_CHECK) {
            return Err(Error::InvalidElement("rotation must satisfy RᵀR = I and det R = +1".into()));
        }
        Ok(Self(Repr::SO3(r)))
    }

    pub fn se3(r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self> {
        if !so3::is_rotation(&r, ROTATION_CHECK) {
            return Err(Error::InvalidElement("rotation part must satisfy RᵀR = I and det R = +1".into()));
        }
        if !t.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidElement("non-finite translation part".into()));
        }
        Ok(Self(Repr::SE3(r, t)))
    }

    pub fn glplus(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::InvalidElement(format!("GL+ element must be square, got {}x{}", a.nrows(), a.ncols())));
        }
        if !a.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidElement("non-finite matrix entry".into()));
        }
        let d = matfun::det(&a);
        if !(d > 0.0) {
            return Err(Error::InvalidElement(format!("GL+ element needs det > 0, got {d:e}")));
        }
        Ok(Self(Repr::GLPlus(a)))
    }

    pub fn product(factors: Vec<GroupElement>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptyProduct);
        }
        Ok(Self(Repr::Product(factors)))
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        match &self.0 {
            Repr::Translation(v) => GroupDescriptor::Translation(v.len()),
            Repr::SO3(_) => GroupDescriptor::SO3,
            Repr::SE3(..) => GroupDescriptor::SE3,
            Repr::GLPlus(a) => GroupDescriptor::GLPlus(a.nrows()),
            Repr::Product(fs) => GroupDescriptor::Product(fs.iter().map(GroupElement::descriptor).collect()),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.0 {
            Repr::Translation(v) => v.len(),
            Repr::SO3(_) => 3,
            Repr::SE3(..) => 6,
            Repr::GLPlus(a) => a.nrows() * a.nrows(),
            Repr::Product(fs) => fs.iter().map(GroupElement::dim).sum(),
        }
    }

    /// Whether `self` and `other` belong to the same group (no allocation).
    pub fn same_group(&self, other: &GroupElement) -> bool {
        match (&self.0, &other.0) {
            (Repr::Translation(a), Repr::Translation(b)) => a.len() == b.len(),
            (Repr::SO3(_), Repr::SO3(_)) | (Repr::SE3(..), Repr::SE3(..)) => true,
            (Repr::GLPlus(a), Repr::GLPlus(b)) => a.nrows() == b.nrows(),
            (Repr::Product(a), Repr::Product(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_group(y)),
            _ => false,
        }
    }

    pub fn belongs_to(&self, desc: &GroupDescriptor) -> bool {
        match (&self.0, desc) {
            (Repr::Translation(v), GroupDescriptor::Translation(d)) => v.len() == *d,
            (Repr::SO3(_), GroupDescriptor::SO3) | (Repr::SE3(..), GroupDescriptor::SE3) => true,
            (Repr::GLPlus(a), GroupDescriptor::GLPlus(n)) => a.nrows() == *n,
            (Repr::Product(fs), GroupDescriptor::Product(ds)) => {
                fs.len() == ds.len() && fs.iter().zip(ds).all(|(f, d)| f.belongs_to(d))
            }
            _ => false,
        }
    }

    pub fn as_translation(&self) -> Option<&DVector<f64>> {
        match &self.0 {
            Repr::Translation(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_so3(&self) -> Option<&Matrix3<f64>> {
        match &self.0 {
            Repr::SO3(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_se3(&self) -> Option<(&Matrix3<f64>, &Vector3<f64>)> {
        match &self.0 {
            Repr::SE3(r, t) => Some((r, t)),
            _ => None,
        }
    }

    pub fn as_glplus(&self) -> Option<&DMatrix<f64>> {
        match &self.0 {
            Repr::GLPlus(a) => Some(a),
            _ => None,
        }
    }

    pub fn factors(&self) -> Option<&[GroupElement]> {
        match &self.0 {
            Repr::Product(fs) => Some(fs),
            _ => None,
        }
    }

    /// Matrix representation: homogeneous `(d+1)×(d+1)` for translations,
    /// `4×4` for SE(3), the matrix itself for SO(3) and GL⁺(n), and the
    /// block-diagonal of the factors for products.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match &self.0 {
            Repr::Translation(v) => {
                let d = v.len();
                let mut m = DMatrix::identity(d + 1, d + 1);
                m.view_mut((0, d), (d, 1)).copy_from(v);
                m
            }
            Repr::SO3(r) => DMatrix::from_iterator(3, 3, r.iter().copied()),
            Repr::SE3(r, t) => {
                let mut m = DMatrix::identity(4, 4);
                m.view_mut((0, 0), (3, 3)).copy_from(r);
                m.view_mut((0, 3), (3, 1)).copy_from(t);
                m
            }
            Repr::GLPlus(a) => a.clone(),
            Repr::Product(fs) => block_diag(fs.iter().map(GroupElement::to_matrix)),
        }
    }

    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        compose(self, other)
    }

    pub fn inverse(&self) -> GroupElement {
        inverse(self)
    }

    pub fn log(&self) -> Result<TangentCoords> {
        group_log(self)
    }

    fn log_into(&self, out: &mut [f64]) -> Result<()> {
        match &self.0 {
            Repr::Translation(v) => out.copy_from_slice(v.as_slice()),
            Repr::SO3(r) => out.copy_from_slice(so3::log(r)?.as_slice()),
            Repr::SE3(r, t) => {
                let (w, u) = se3::log(r, t)?;
                out[..3].copy_from_slice(w.as_slice());
                out[3..].copy_from_slice(u.as_slice());
            }
            Repr::GLPlus(a) => {
                let l = matfun::mat_log(a).map_err(|e| match e {
                    Error::SpectrumOnCut => {
                        Error::OutsideLogDomain("GL+ element has an eigenvalue on the closed negative real axis".into())
                    }
                    other => other,
                })?;
                let n = a.nrows();
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = l[(i, j)];
                    }
                }
            }
            Repr::Product(fs) => {
                let mut off = 0;
                for f in fs {
                    let d = f.dim();
                    f.log_into(&mut out[off..off + d])?;
                    off += d;
                }
            }
        }
        Ok(())
    }
}

fn block_diag(blocks: impl Iterator<Item = DMatrix<f64>>) -> DMatrix<f64> {
    let blocks: Vec<_> = blocks.collect();
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = DMatrix::zeros(n, n);
    let mut off = 0;
    for b in &blocks {
        let k = b.nrows();
        m.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    m
}

/// Coordinates of a tangent vector at the identity in the canonical basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentCoords(DVector<f64>);

impl TangentCoords {
    pub fn new(coords: DVector<f64>) -> Self {
        Self(coords)
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Self(DVector::from_column_slice(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }
}

impl From<DVector<f64>> for TangentCoords {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

/// Matrix of `Ad(g)` acting on identity tangent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointMatrix(DMatrix<f64>);

impl AdjointMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn apply(&self, v: &TangentCoords) -> TangentCoords {
        TangentCoords(&self.0 * &v.0)
    }
}

fn mismatch(g: &GroupElement, h: &GroupElement) -> Error {
    Error::DescriptorMismatch { left: g.descriptor().to_string(), right: h.descriptor().to_string() }
}

/// Group product `gh`. SE(3) follows `(R, v)(Q, w) = (RQ, v + Rw)`.
pub fn compose(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    let out = match (&g.0, &h.0) {
        (Repr::Translation(a), Repr::Translation(b)) if a.len() == b.len() => Repr::Translation(a + b),
        (Repr::SO3(a), Repr::SO3(b)) => Repr::SO3(a * b),
        (Repr::SE3(r, v), Repr::SE3(q, w)) => Repr::SE3(r * q, v + r * w),
        (Repr::GLPlus(a), Repr::GLPlus(b)) if a.nrows() == b.nrows() => Repr::GLPlus(a * b),
        (Repr::Product(a), Repr::Product(b)) if a.len() == b.len() => {
            Repr::Product(a.iter().zip(b).map(|(x, y)| compose(x, y)).collect::<Result<_>>()?)
        }
        _ => return Err(mismatch(g, h)),
    };
    Ok(GroupElement(out))
}

/// Group inverse; SE(3) uses `(Rᵀ, −Rᵀv)`.
pub fn inverse(g: &GroupElement) -> GroupElement {
    GroupElement(match &g.0 {
        Repr::Translation(v) => Repr::Translation(-v),
        Repr::SO3(r) => Repr::SO3(r.transpose()),
        Repr::SE3(r, v) => {
            let rt = r.transpose();
            let t = -(rt * v);
            Repr::SE3(rt, t)
        }
        Repr::GLPlus(a) => {
            // det > 0 is an invariant, so the inverse exists
            let inv = a.clone().lu().try_inverse().expect("GL+ element is invertible");
            Repr::GLPlus(inv)
        }
        Repr::Product(fs) => Repr::Product(fs.iter().map(inverse).collect()),
    })
}

/// Group logarithm in canonical identity coordinates.
pub fn group_log(g: &GroupElement) -> Result<TangentCoords> {
    let mut out = DVector::zeros(g.dim());
    g.log_into(out.as_mut_slice())?;
    Ok(TangentCoords(out))
}

/// Group exponential of identity coordinates.
pub fn group_exp(desc: &GroupDescriptor, v: &TangentCoords) -> Result<GroupElement> {
    if v.len() != desc.dim() {
        return Err(Error::DimensionMismatch { expected: desc.dim(), actual: v.len() });
    }
    if !v.0.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("tangent coordinates"));
    }
    exp_from(desc, v.as_slice())
}

fn exp_from(desc: &GroupDescriptor, c: &[f64]) -> Result<GroupElement> {
    Ok(GroupElement(match desc {
        GroupDescriptor::Translation(_) => Repr::Translation(DVector::from_column_slice(c)),
        GroupDescriptor::SO3 => Repr::SO3(so3::exp(&Vector3::from_column_slice(c))),
        GroupDescriptor::SE3 => {
            let (r, t) = se3::exp(&Vector3::from_column_slice(&c[..3]), &Vector3::from_column_slice(&c[3..]));
            Repr::SE3(r, t)
        }
        GroupDescriptor::GLPlus(n) => Repr::GLPlus(matfun::mat_exp(&DMatrix::from_row_slice(*n, *n, c))?),
        GroupDescriptor::Product(fs) => {
            let mut off = 0;
            let mut out = Vec::with_capacity(fs.len());
            for f in fs {
                let d = f.dim();
                out.push(exp_from(f, &c[off..off + d])?);
                off += d;
            }
            Repr::Product(out)
        }
    }))
}

/// Adjoint matrix `[Ad(g)]` in the canonical basis.
pub fn adjoint(g: &GroupElement) -> AdjointMatrix {
    AdjointMatrix(adjoint_matrix(g))
}

fn adjoint_matrix(g: &GroupElement) -> DMatrix<f64> {
    match &g.0 {
        Repr::Translation(v) => DMatrix::identity(v.len(), v.len()),
        Repr::SO3(r) => DMatrix::from_iterator(3, 3, r.iter().copied()),
        Repr::SE3(r, t) => {
            let mut m = DMatrix::zeros(6, 6);
            m.view_mut((0, 0), (3, 3)).copy_from(r);
            m.view_mut((3, 3), (3, 3)).copy_from(r);
            m.view_mut((3, 0), (3, 3)).copy_from(&(so3::hat(t) * r));
            m
        }
        Repr::GLPlus(a) => {
            // column (a, b) is the row-major vectorization of A E_ab A⁻¹
            let n = a.nrows();
            let inv = a.clone().lu().try_inverse().expect("GL+ element is invertible");
            let mut m = DMatrix::zeros(n * n, n * n);
            for p in 0..n {
                for q in 0..n {
                    let col = p * n + q;
                    for i in 0..n {
                        for j in 0..n {
                            m[(i * n + j, col)] = a[(i, p)] * inv[(q, j)];
                        }
                    }
                }
            }
            m
        }
        Repr::Product(fs) => block_diag(fs.iter().map(adjoint_matrix)),
    }
}

/// Connection logarithm at `g`, left-trivialized: coordinates of `log(g⁻¹h)`.
pub fn connection_log(g: &GroupElement, h: &GroupElement) -> Result<TangentCoords> {
    group_log(&compose(&inverse(g), h)?)
}

/// Connection exponential at `g` of left-trivialized coordinates: `g·exp(v)`.
pub fn connection_exp(g: &GroupElement, v: &TangentCoords) -> Result<GroupElement> {
    let step = group_exp(&g.descriptor(), v)?;
    compose(g, &step)
}

/// Draws `group_exp(v)` with `v ~ N(0, scale² I)`, retrying draws that land
/// outside the log domain (rotation angles near π).
pub fn random_element<R: Rng + ?Sized>(desc: &GroupDescriptor, scale: f64, rng: &mut R) -> GroupElement {
    loop {
        let v = DVector::from_fn(desc.dim(), |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        if let Ok(g) = group_exp(desc, &TangentCoords(v)) {
            if group_log(&g).is_ok() {
                return g;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn rz(theta: f64) -> Matrix3<f64> {
        so3::exp(&Vector3::new(0.0, 0.0, theta))
    }

    fn se3(r: Matrix3<f64>, t: [f64; 3]) -> GroupElement {
        GroupElement::se3(r, Vector3::from(t)).unwrap()
    }

    fn gl(rows: &[f64], n: usize) -> GroupElement {
        GroupElement::glplus(DMatrix::from_row_slice(n, n, rows)).unwrap()
    }

    fn close(a: &GroupElement, b: &GroupElement, tol: f64) -> bool {
        (a.to_matrix() - b.to_matrix()).norm() <= tol
    }

    #[test]
    fn descriptor_tags_round_trip() {
        for tag in ["translation:4", "so3", "se3", "glplus:3", "power:glplus:3:20", "product(se3,translation:2)"] {
            let d: GroupDescriptor = tag.parse().unwrap();
            assert_eq!(d.to_string(), tag);
        }
        assert_eq!("power:glplus:3:2".parse::<GroupDescriptor>().unwrap().dim(), 18);
        assert!("translation:0".parse::<GroupDescriptor>().is_err());
        assert!("power:se3:0".parse::<GroupDescriptor>().is_err());
        assert!("sl2".parse::<GroupDescriptor>().is_err());
    }

    #[test]
    fn construction_validates_invariants() {
        assert!(GroupElement::so3(Matrix3::identity() * 2.0).is_err());
        let reflection = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(GroupElement::so3(reflection).is_err());
        assert!(GroupElement::se3(reflection, Vector3::zeros()).is_err());
        assert!(GroupElement::glplus(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).is_err());
        assert!(GroupElement::glplus(DMatrix::zeros(2, 3)).is_err());
        assert!(GroupElement::from_slice(&[f64::NAN]).is_err());
        assert_eq!(GroupElement::product(vec![]), Err(Error::EmptyProduct));
        assert_eq!(product_group(vec![]), Err(Error::EmptyProduct));
    }

    #[test]
    fn compose_examples() {
        let g = se3(Matrix3::identity(), [1.0, 0.0, 0.0]);
        let h = se3(Matrix3::identity(), [0.0, 2.0, 0.0]);
        assert!(close(&compose(&g, &h).unwrap(), &se3(Matrix3::identity(), [1.0, 2.0, 0.0]), 0.0));

        let p = compose(&gl(&[2.0, 0.0, 0.0, 1.0], 2), &gl(&[3.0, 0.0, 0.0, 1.0], 2)).unwrap();
        assert!(close(&p, &gl(&[6.0, 0.0, 0.0, 1.0], 2), 0.0));

        let g = se3(rz(FRAC_PI_2), [0.0; 3]);
        let h = se3(Matrix3::identity(), [1.0, 0.0, 0.0]);
        let gh = compose(&g, &h).unwrap();
        assert!(close(&gh, &se3(rz(FRAC_PI_2), [0.0, 1.0, 0.0]), 1e-15));

        let err = compose(&g, &GroupDescriptor::SO3.identity()).unwrap_err();
        assert!(matches!(err, Error::DescriptorMismatch { .. }));
    }

    #[test]
    fn inverse_examples() {
        let e = GroupDescriptor::SE3.identity();
        assert_eq!(inverse(&e), e);
        let v = GroupElement::from_slice(&[3.0, -1.0]).unwrap();
        assert_eq!(inverse(&v), GroupElement::from_slice(&[-3.0, 1.0]).unwrap());
        let g = se3(rz(FRAC_PI_2), [1.0, 0.0, 0.0]);
        assert!(close(&inverse(&g), &se3(rz(-FRAC_PI_2), [0.0, 1.0, 0.0]), 1e-15));
    }

    #[test]
    fn log_examples() {
        for d in ["translation:2", "so3", "se3", "glplus:3", "power:glplus:3:2"] {
            let d: GroupDescriptor = d.parse().unwrap();
            assert_eq!(group_log(&d.identity()).unwrap().norm(), 0.0);
        }
        let v = GroupElement::from_slice(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(group_log(&v).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        let r = GroupElement::so3(rz(0.5)).unwrap();
        assert_relative_eq!(
            group_log(&r).unwrap().into_vector(),
            DVector::from_vec(vec![0.0, 0.0, 0.5]),
            epsilon = 1e-15
        );
        let half = GroupElement::so3(rz(std::f64::consts::PI)).unwrap();
        assert!(matches!(group_log(&half), Err(Error::OutsideLogDomain(_))));
        let flip = gl(&[-1.0, 0.0, 0.0, -1.0], 2);
        assert!(matches!(group_log(&flip), Err(Error::OutsideLogDomain(_))));
    }

    #[test]
    fn exp_examples() {
        let se3d = GroupDescriptor::SE3;
        assert_eq!(group_exp(&se3d, &TangentCoords::zeros(6)).unwrap(), se3d.identity());
        let g = group_exp(&se3d, &TangentCoords::from_slice(&[0.0, 0.0, 0.0, 1.0, 2.0, 3.0])).unwrap();
        assert!(close(&g, &se3(Matrix3::identity(), [1.0, 2.0, 3.0]), 0.0));
        let g =
            group_exp(&GroupDescriptor::GLPlus(2), &TangentCoords::from_slice(&[3f64.ln(), 0.0, 0.0, 0.0])).unwrap();
        assert!(close(&g, &gl(&[3.0, 0.0, 0.0, 1.0], 2), 1e-14));
        assert!(matches!(group_exp(&se3d, &TangentCoords::zeros(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn adjoint_examples() {
        let se3d = GroupDescriptor::SE3;
        assert_eq!(adjoint(&se3d.identity()).into_matrix(), DMatrix::identity(6, 6));
        let t = GroupElement::from_slice(&[4.0, -2.0]).unwrap();
        assert_eq!(adjoint(&t).into_matrix(), DMatrix::identity(2, 2));

        let g = se3(Matrix3::identity(), [1.0, 2.0, 3.0]);
        let ad = adjoint(&g).into_matrix();
        let mut want = DMatrix::identity(6, 6);
        want.view_mut((3, 0), (3, 3)).copy_from(&so3::hat(&Vector3::new(1.0, 2.0, 3.0)));
        assert_relative_eq!(ad, want, epsilon = 0.0);
    }

    /// Finite-difference derivative of conjugation `h ↦ g h g⁻¹` at the identity.
    fn numeric_adjoint(g: &GroupElement) -> DMatrix<f64> {
        let desc = g.descriptor();
        let d = desc.dim();
        let ginv = inverse(g);
        let eps = 1e-6;
        let mut m = DMatrix::zeros(d, d);
        for k in 0..d {
            let mut v = DVector::zeros(d);
            v[k] = eps;
            let plus = group_exp(&desc, &TangentCoords(v.clone())).unwrap();
            let minus = group_exp(&desc, &TangentCoords(-v)).unwrap();
            let cp = group_log(&compose(&compose(g, &plus).unwrap(), &ginv).unwrap()).unwrap();
            let cm = group_log(&compose(&compose(g, &minus).unwrap(), &ginv).unwrap()).unwrap();
            let col = (cp.into_vector() - cm.into_vector()) / (2.0 * eps);
            m.set_column(k, &col);
        }
        m
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for tag in ["so3", "se3", "glplus:3", "glplus:2", "product(se3,glplus:2)"] {
            let d: GroupDescriptor = tag.parse().unwrap();
            for _ in 0..3 {
                let g = random_element(&d, 0.6, &mut rng);
                let ad = adjoint(&g).into_matrix();
                assert_relative_eq!(ad, numeric_adjoint(&g), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn connection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_element(&GroupDescriptor::SE3, 0.5, &mut rng);
        assert!(connection_log(&g, &g).unwrap().norm() < 1e-14);
        assert_eq!(connection_exp(&g, &TangentCoords::zeros(6)).unwrap(), g);

        let p = GroupElement::from_slice(&[1.0, 5.0]).unwrap();
        let q = GroupElement::from_slice(&[4.0, -1.0]).unwrap();
        assert_eq!(connection_log(&p, &q).unwrap().as_slice(), &[3.0, -6.0]);
        let w = TangentCoords::from_slice(&[0.5, 0.5]);
        assert_eq!(connection_exp(&p, &w).unwrap(), GroupElement::from_slice(&[1.5, 5.5]).unwrap());

        let g = se3(Matrix3::identity(), [1.0, 0.0, 0.0]);
        let h = se3(Matrix3::identity(), [3.0, 0.0, 0.0]);
        assert_eq!(connection_log(&g, &h).unwrap().as_slice(), &[0.0, 0.0, 0.0, 2.0, 0.0, 0.0]);

        let r = GroupElement::so3(rz(0.3)).unwrap();
        let moved = connection_exp(&r, &TangentCoords::from_slice(&[0.0, 0.0, 0.2])).unwrap();
        assert!(close(&moved, &GroupElement::so3(rz(0.5)).unwrap(), 1e-15));
    }

    #[test]
    fn product_examples() {
        let two = GroupDescriptor::power(GroupDescriptor::Translation(1), 2).unwrap();
        let a = GroupElement::product(vec![
            GroupElement::from_slice(&[1.0]).unwrap(),
            GroupElement::from_slice(&[2.0]).unwrap(),
        ])
        .unwrap();
        let b = GroupElement::product(vec![
            GroupElement::from_slice(&[-3.0]).unwrap(),
            GroupElement::from_slice(&[0.5]).unwrap(),
        ])
        .unwrap();
        assert!(a.belongs_to(&two));
        assert_eq!(group_log(&compose(&a, &b).unwrap()).unwrap().as_slice(), &[-2.0, 2.5]);
        assert_eq!(group_log(&inverse(&a)).unwrap().as_slice(), &[-1.0, -2.0]);
        assert_eq!(adjoint(&a).into_matrix(), DMatrix::identity(2, 2));

        let g = GroupElement::product(vec![
            gl(&[2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 3),
            GroupDescriptor::GLPlus(3).identity(),
        ])
        .unwrap();
        let l = group_log(&g).unwrap();
        assert_eq!(l.len(), 18);
        assert_relative_eq!(l.as_slice()[0], 2f64.ln(), epsilon = 1e-15);
        assert!(l.as_slice()[1..].iter().all(|x| x.abs() < 1e-15));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f1 = random_element(&GroupDescriptor::SE3, 0.4, &mut rng);
        let f2 = random_element(&GroupDescriptor::GLPlus(2), 0.4, &mut rng);
        let p = GroupElement::product(vec![f1.clone(), f2.clone()]).unwrap();
        let want = block_diag([adjoint_matrix(&f1), adjoint_matrix(&f2)].into_iter());
        assert_eq!(adjoint(&p).into_matrix(), want);
    }
}
