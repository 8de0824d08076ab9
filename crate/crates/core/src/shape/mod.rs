//! Meshes to group elements: PCA reference frames and SE(3) relative poses,
//! rigid Procrustes alignment, and per-face deformation gradients in
//! GL⁺(3)ᵐ.
//!
//! Face frames are `[v₁ − v₀, v₂ − v₀, n]` in stored index order with `n`
//! the unit normal. With unit normals a rigid motion `R` yields `G_j = R`
//! exactly on every face.

mod io;

pub use io::{read_mesh, read_obj, read_off, write_off};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::groups::GroupElement;
use crate::policy::ROTATION_CHECK;

/// Smallest admissible face area.
pub const MIN_FACE_AREA: f64 = 1e-12;
/// Smallest admissible relative gap between PCA eigenvalues.
pub const MIN_SPECTRAL_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
}

fn face_area(v: &[Vector3<f64>], f: &[usize; 3]) -> f64 {
    0.5 * (v[f[1]] - v[f[0]]).cross(&(v[f[2]] - v[f[0]])).norm()
}

impl TriangleMesh {
    /// Validates finite coordinates, face indices and face areas.
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite("mesh vertex"));
        }
        for (j, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("face {j} references vertex {bad} of {}", vertices.len())));
            }
            let area = face_area(&vertices, f);
            if !(area > MIN_FACE_AREA) {
                return Err(Error::DegenerateFace { face: j, area });
            }
        }
        Ok(Self { vertices, faces })
    }

    /// A vertex cloud without faces.
    pub fn from_points(vertices: Vec<Vector3<f64>>) -> Result<Self> {
        Self::new(vertices, Vec::new())
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_area(&self, j: usize) -> f64 {
        face_area(&self.vertices, &self.faces[j])
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.vertices.iter().sum::<Vector3<f64>>() / self.vertices.len().max(1) as f64
    }

    /// Applies `x ↦ R x + t` to every vertex.
    pub fn transformed(&self, r: &Matrix3<f64>, t: &Vector3<f64>) -> TriangleMesh {
        TriangleMesh { vertices: self.vertices.iter().map(|v| r * v + t).collect(), faces: self.faces.clone() }
    }

    fn same_connectivity(&self, other: &TriangleMesh) -> Result<()> {
        if self.vertices.len() != other.vertices.len() || self.faces != other.faces {
            return Err(Error::InvalidMesh(format!(
                "meshes differ in connectivity ({} vs {} vertices, {} vs {} faces)",
                self.vertices.len(),
                other.vertices.len(),
                self.faces.len(),
                other.faces.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFrame {
    pub origin: Vector3<f64>,
    /// Orthonormal axes as columns, `det = +1`.
    pub axes: Matrix3<f64>,
}

impl ReferenceFrame {
    pub fn new(origin: Vector3<f64>, axes: Matrix3<f64>) -> Result<Self> {
        if !crate::groups::so3::is_rotation(&axes, ROTATION_CHECK) {
            return Err(Error::InvalidElement("frame axes are not a rotation".into()));
        }
        Ok(Self { origin, axes })
    }
}

/// Frame from the vertex centroid and the principal axes of the vertex
/// covariance, in descending eigenvalue order.
///
/// The first two axes are oriented to agree with `sign_reference` when one
/// is given, and otherwise so that their largest-magnitude entry is
/// positive; the third axis completes a right-handed frame.
pub fn frame_from_pca(mesh: &TriangleMesh, sign_reference: Option<&ReferenceFrame>) -> Result<ReferenceFrame> {
    let n = mesh.vertices.len();
    if n < 4 {
        return Err(Error::DegenerateConfiguration(format!("{n} vertices, need at least 4")));
    }
    let c = mesh.centroid();
    let mut cov = Matrix3::zeros();
    for v in &mesh.vertices {
        let d = v - c;
        cov += d * d.transpose();
    }
    cov /= n as f64;
    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda = order.map(|i| eig.eigenvalues[i]);
    if !(lambda[2] > 1e-12 * lambda[0]) {
        return Err(Error::DegenerateConfiguration("vertices are coplanar".into()));
    }
    let gap = ((lambda[0] - lambda[1]).min(lambda[1] - lambda[2])) / lambda[0];
    if gap < MIN_SPECTRAL_GAP {
        return Err(Error::DegenerateSpectrum(gap));
    }
    let mut axes: [Vector3<f64>; 2] =
        [eig.eigenvectors.column(order[0]).into(), eig.eigenvectors.column(order[1]).into()];
    for (k, axis) in axes.iter_mut().enumerate() {
        let flip = match sign_reference {
            Some(r) => axis.dot(&r.axes.column(k)) < 0.0,
            None => {
                let i = axis.iamax();
                axis[i] < 0.0
            }
        };
        if flip {
            *axis = -*axis;
        }
    }
    let third = axes[0].cross(&axes[1]);
    let m = Matrix3::from_columns(&[axes[0], axes[1], third]);
    Ok(ReferenceFrame { origin: c, axes: m })
}

/// `(O_B O_Aᵀ, o_B − o_A)` as a rigid motion.
pub fn relative_pose(a: &ReferenceFrame, b: &ReferenceFrame) -> Result<GroupElement> {
    GroupElement::se3(b.axes * a.axes.transpose(), b.origin - a.origin)
}

/// Rigidly aligns every mesh to `meshes[reference_index]` (centroids, then
/// the orthogonal Procrustes rotation with determinant correction). The
/// reference is returned unchanged.
pub fn procrustes_align(meshes: &[TriangleMesh], reference_index: usize) -> Result<Vec<TriangleMesh>> {
    let reference = meshes
        .get(reference_index)
        .ok_or_else(|| Error::InvalidConfig(format!("reference index {reference_index} out of range")))?;
    let cy = reference.centroid();
    meshes
        .iter()
        .enumerate()
        .map(|(i, mesh)| {
            if i == reference_index {
                return Ok(mesh.clone());
            }
            mesh.same_connectivity(reference)?;
            let cx = mesh.centroid();
            let mut h = Matrix3::zeros();
            for (x, y) in mesh.vertices.iter().zip(&reference.vertices) {
                h += (x - cx) * (y - cy).transpose();
            }
            let r = optimal_rotation(&h)?;
            Ok(mesh.transformed(&r, &(cy - r * cx)))
        })
        .collect()
}

/// Rotation `R` maximizing `tr(R H)` for the cross-covariance
/// `H = Σ (x − x̄)(y − ȳ)ᵀ`, so that `R x` best matches `y`.
fn optimal_rotation(h: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut s = svd.singular_values.as_slice().to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    if !(s[1] > 1e-12 * s[0]) {
        return Err(Error::DegenerateConfiguration("cross-covariance has rank below 2".into()));
    }
    let v = v_t.transpose();
    // the reflection fix acts on the weakest singular direction
    let mut c = Vector3::repeat(1.0);
    c[svd.singular_values.argmin().0] = (v * u.transpose()).determinant().signum();
    let c = Matrix3::from_diagonal(&c);
    Ok(v * c * u.transpose())
}

fn face_frame(v: &[Vector3<f64>], f: &[usize; 3]) -> Matrix3<f64> {
    let e1 = v[f[1]] - v[f[0]];
    let e2 = v[f[2]] - v[f[0]];
    let n = e1.cross(&e2).normalize();
    Matrix3::from_columns(&[e1, e2, n])
}

/// Per-face deformation gradients `G_j = [e₁', e₂', n'] [e₁, e₂, n]⁻¹`.
pub fn face_jacobians(reference: &TriangleMesh, target: &TriangleMesh) -> Result<Vec<Matrix3<f64>>> {
    reference.same_connectivity(target)?;
    reference
        .faces
        .iter()
        .enumerate()
        .map(|(j, f)| {
            for mesh in [reference, target] {
                let area = face_area(&mesh.vertices, f);
                if !(area > MIN_FACE_AREA) {
                    return Err(Error::DegenerateFace { face: j, area });
                }
            }
            let e = face_frame(&reference.vertices, f);
            let e_t = face_frame(&target.vertices, f);
            let inv = e.try_inverse().ok_or(Error::DegenerateFace { face: j, area: 0.0 })?;
            let g = e_t * inv;
            let det = g.determinant();
            if !(det > 0.0) {
                return Err(Error::OrientationFlip { face: j, det });
            }
            Ok(g)
        })
        .collect()
}

/// The deformation from `reference` to `target` as an element of the
/// m-fold power of GL⁺(3), one factor per face.
pub fn differential_coords(reference: &TriangleMesh, target: &TriangleMesh) -> Result<GroupElement> {
    if reference.faces.is_empty() {
        return Err(Error::EmptyProduct);
    }
    let factors = face_jacobians(reference, target)?
        .into_iter()
        .map(|g| GroupElement::glplus(nalgebra::DMatrix::from_iterator(3, 3, g.iter().copied())))
        .collect::<Result<Vec<_>>>()?;
    GroupElement::product(factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{compose, inverse, so3};
    use approx::assert_relative_eq;

    fn tetra() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.2, 0.0),
                Vector3::new(0.1, 0.2, 0.9),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
        .unwrap()
    }

    fn boxed(a: f64, b: f64, c: f64) -> TriangleMesh {
        let mut v = Vec::new();
        for &x in &[-a, a] {
            for &y in &[-b, b] {
                for &z in &[-c, c] {
                    v.push(Vector3::new(x, y, z));
                }
            }
        }
        TriangleMesh::from_points(v).unwrap()
    }

    fn rz(angle: f64) -> Matrix3<f64> {
        so3::exp(&Vector3::new(0.0, 0.0, angle))
    }

    #[test]
    fn mesh_validation() {
        let v = vec![Vector3::zeros(), Vector3::x(), Vector3::y()];
        assert!(matches!(TriangleMesh::new(v.clone(), vec![[0, 1, 3]]), Err(Error::InvalidMesh(_))));
        let collinear = vec![Vector3::zeros(), Vector3::x(), Vector3::x() * 2.0];
        assert!(matches!(TriangleMesh::new(collinear, vec![[0, 1, 2]]), Err(Error::DegenerateFace { face: 0, .. })));
        assert!(TriangleMesh::new(v, vec![[0, 1, 2]]).is_ok());
    }

    #[test]
    fn pca_of_a_box() {
        let f = frame_from_pca(&boxed(3.0, 1.0, 2.0), None).unwrap();
        assert_relative_eq!(f.origin, Vector3::zeros(), epsilon = 1e-15);
        let expected = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert_relative_eq!(f.axes, expected, epsilon = 1e-12);
        assert_relative_eq!(f.axes.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pca_follows_rigid_motions() {
        let mesh = boxed(3.0, 1.0, 2.0);
        let f = frame_from_pca(&mesh, None).unwrap();
        let shift = Vector3::new(1.0, -2.0, 0.5);
        let moved = frame_from_pca(&mesh.transformed(&Matrix3::identity(), &shift), None).unwrap();
        assert_relative_eq!(moved.origin, shift, epsilon = 1e-12);
        assert_relative_eq!(moved.axes, f.axes, epsilon = 1e-12);

        let r = so3::exp(&Vector3::new(0.3, -0.4, 1.1));
        let rotated_ref = ReferenceFrame::new(Vector3::zeros(), r * f.axes).unwrap();
        let rotated = frame_from_pca(&mesh.transformed(&r, &Vector3::zeros()), Some(&rotated_ref)).unwrap();
        assert_relative_eq!(rotated.axes, r * f.axes, epsilon = 1e-10);
    }

    #[test]
    fn pca_rejects_ambiguous_axes() {
        assert!(matches!(frame_from_pca(&boxed(1.0, 1.0, 2.0), None), Err(Error::DegenerateSpectrum(_))));
        let flat = TriangleMesh::from_points(vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(2.0, 1.0, 0.0),
        ])
        .unwrap();
        assert!(matches!(frame_from_pca(&flat, None), Err(Error::DegenerateConfiguration(_))));
    }

    #[test]
    fn relative_pose_examples() {
        let a = ReferenceFrame::new(Vector3::new(1.0, 0.0, 0.0), Matrix3::identity()).unwrap();
        let b = ReferenceFrame::new(Vector3::zeros(), rz(std::f64::consts::FRAC_PI_2)).unwrap();
        let p = relative_pose(&a, &b).unwrap();
        let (r, t) = p.as_se3().unwrap();
        assert_relative_eq!(*r, rz(std::f64::consts::FRAC_PI_2), epsilon = 1e-15);
        assert_eq!(*t, Vector3::new(-1.0, 0.0, 0.0));
        assert_eq!(relative_pose(&a, &a).unwrap(), crate::groups::GroupDescriptor::SE3.identity());
        let d = ReferenceFrame::new(Vector3::new(1.0, 2.0, 3.0), Matrix3::identity()).unwrap();
        let (r, t) = relative_pose(&a, &d).unwrap().as_se3().map(|(r, t)| (*r, *t)).unwrap();
        assert_eq!(r, Matrix3::identity());
        assert_eq!(t, Vector3::new(0.0, 2.0, 3.0));
    }

    #[test]
    fn world_motion_conjugates_the_pose() {
        let fa = ReferenceFrame::new(Vector3::new(0.3, 1.0, -2.0), so3::exp(&Vector3::new(0.2, 0.1, -0.4))).unwrap();
        let fb = ReferenceFrame::new(Vector3::new(-1.0, 0.5, 0.2), so3::exp(&Vector3::new(-0.7, 0.3, 0.9))).unwrap();
        let q = so3::exp(&Vector3::new(1.0, -0.5, 0.25));
        let w = Vector3::new(4.0, -3.0, 2.0);
        let moved = |f: &ReferenceFrame| ReferenceFrame::new(q * f.origin + w, q * f.axes).unwrap();
        let p = relative_pose(&fa, &fb).unwrap();
        let p_moved = relative_pose(&moved(&fa), &moved(&fb)).unwrap();
        let qe = GroupElement::se3(q, Vector3::zeros()).unwrap();
        let conj = compose(&compose(&qe, &p).unwrap(), &inverse(&qe)).unwrap();
        assert_relative_eq!(p_moved.to_matrix(), conj.to_matrix(), epsilon = 1e-12);
    }

    #[test]
    fn procrustes_recovers_rigid_motion() {
        let reference = tetra();
        let r = so3::exp(&Vector3::new(0.5, -1.2, 0.7));
        let t = Vector3::new(3.0, -1.0, 2.0);
        let moved = reference.transformed(&r, &t);
        let aligned = procrustes_align(&[reference.clone(), moved], 0).unwrap();
        assert_eq!(aligned[0], reference);
        for (x, y) in aligned[1].vertices().iter().zip(reference.vertices()) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
        let again = procrustes_align(&aligned, 0).unwrap();
        for (x, y) in again[1].vertices().iter().zip(aligned[1].vertices()) {
            assert_relative_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn procrustes_never_reflects_and_reduces_residual() {
        let reference = tetra();
        let mirrored = reference.transformed(&Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0)), &Vector3::zeros());
        let noisy = TriangleMesh::new(
            mirrored.vertices().iter().enumerate().map(|(i, v)| v + Vector3::repeat(0.01 * i as f64)).collect(),
            mirrored.faces().to_vec(),
        )
        .unwrap();
        let aligned = procrustes_align(&[reference.clone(), noisy.clone()], 0).unwrap();
        let residual = |m: &TriangleMesh| -> f64 {
            m.vertices().iter().zip(reference.vertices()).map(|(a, b)| (a - b).norm_squared()).sum()
        };
        assert!(residual(&aligned[1]) <= residual(&noisy));
        // the aligned mesh is a proper rigid image of the input
        let j = face_jacobians(&noisy, &aligned[1]).unwrap();
        assert!(j.iter().all(|g| so3::is_rotation(g, 1e-9)));
    }

    #[test]
    fn identity_and_rigid_differential_coords() {
        let reference = tetra();
        let g = face_jacobians(&reference, &reference).unwrap();
        assert!(g.iter().all(|m| (m - Matrix3::identity()).norm() < 1e-14));
        let r = so3::exp(&Vector3::new(-0.3, 0.8, 0.2));
        let g = face_jacobians(&reference, &reference.transformed(&r, &Vector3::new(1.0, 2.0, 3.0))).unwrap();
        assert!(g.iter().all(|m| (m - r).norm() < 1e-12));
        let e = differential_coords(&reference, &reference).unwrap();
        assert_eq!(e.factors().unwrap().len(), 4);
    }

    #[test]
    fn scaling_has_in_plane_singular_values() {
        let reference = tetra();
        let s = 1.7;
        let target = reference.transformed(&(Matrix3::identity() * s), &Vector3::zeros());
        for g in face_jacobians(&reference, &target).unwrap() {
            let mut sv = g.singular_values().as_slice().to_vec();
            sv.sort_by(f64::total_cmp);
            assert_relative_eq!(sv[0], 1.0, epsilon = 1e-12);
            assert_relative_eq!(sv[1], s, epsilon = 1e-12);
            assert_relative_eq!(sv[2], s, epsilon = 1e-12);
        }
    }

    #[test]
    fn differential_coords_compose() {
        let base = tetra();
        let warp = |m: &TriangleMesh, a: f64| {
            TriangleMesh::new(
                m.vertices().iter().map(|v| v + Vector3::new(a * v.y * v.y, a * v.z, -a * v.x * v.y)).collect(),
                m.faces().to_vec(),
            )
            .unwrap()
        };
        let t1 = warp(&base, 0.2);
        let t2 = warp(&t1, -0.15);
        let g1 = face_jacobians(&base, &t1).unwrap();
        let g21 = face_jacobians(&t1, &t2).unwrap();
        let g2 = face_jacobians(&base, &t2).unwrap();
        for j in 0..g1.len() {
            assert_relative_eq!(g21[j] * g1[j], g2[j], epsilon = 1e-10);
        }
    }

    #[test]
    fn unit_normal_frames_keep_determinant_positive() {
        // det G = |e₁' × e₂'| / |e₁ × e₂|, so even a mirror image or a folded
        // face maps to GL⁺(3); reflections show up as rotations of the frame
        let reference = tetra();
        let mirrored = reference.transformed(&Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0)), &Vector3::zeros());
        let mut v = reference.vertices().to_vec();
        v[3] = Vector3::new(0.1, 0.2, -0.9);
        let folded = TriangleMesh::new(v, reference.faces().to_vec()).unwrap();
        for target in [mirrored, folded] {
            let g = face_jacobians(&reference, &target).unwrap();
            for (j, m) in g.iter().enumerate() {
                let ratio = target.face_area(j) / reference.face_area(j);
                assert_relative_eq!(m.determinant(), ratio, max_relative = 1e-12);
            }
        }
    }
}
