//! Seeded inputs shared by the benchmarks.

use liestat::{compose, random_element, GroupDescriptor, SampleSet, TriangleMesh};
use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `m` elements scattered around `center` with tangent standard deviation `spread`.
pub fn cloud(desc: &GroupDescriptor, spread: f64, m: usize, seed: u64) -> SampleSet {
    let mut rng = rng(seed);
    let center = random_element(desc, 0.5, &mut rng);
    SampleSet::new((0..m).map(|_| compose(&center, &random_element(desc, spread, &mut rng)).unwrap()).collect())
        .unwrap()
}

/// A random `n×n` matrix with Frobenius norm `norm`.
pub fn matrix(n: usize, norm: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = rng(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let f = a.norm();
    a * (norm / f)
}

/// A closed genus-zero mesh: a UV sphere with `rings × segments` quads split
/// into triangles, squashed so that its principal axes are distinct.
pub fn sphere(rings: usize, segments: usize) -> TriangleMesh {
    let mut vertices = vec![Vector3::new(0.0, 0.0, 1.0)];
    for i in 1..rings {
        let theta = std::f64::consts::PI * i as f64 / rings as f64;
        for j in 0..segments {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / segments as f64;
            vertices.push(Vector3::new(3.0 * theta.sin() * phi.cos(), 2.0 * theta.sin() * phi.sin(), theta.cos()));
        }
    }
    vertices.push(Vector3::new(0.0, 0.0, -1.0));
    let south = vertices.len() - 1;
    let at = |i: usize, j: usize| 1 + (i - 1) * segments + j % segments;
    let mut faces = Vec::new();
    for j in 0..segments {
        faces.push([0, at(1, j), at(1, j + 1)]);
        faces.push([south, at(rings - 1, j + 1), at(rings - 1, j)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segments {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, faces).unwrap()
}

/// `mesh` with every vertex displaced by a smooth seeded field.
pub fn deformed(mesh: &TriangleMesh, amplitude: f64, seed: u64) -> TriangleMesh {
    let mut rng = rng(seed);
    let k = Vector3::new(rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
    let vertices = mesh
        .vertices()
        .iter()
        .map(|v| v + amplitude * Vector3::new((k.x * v.y).sin(), (k.y * v.z).sin(), (k.z * v.x).sin()))
        .collect();
    TriangleMesh::new(vertices, mesh.faces().to_vec()).unwrap()
}
