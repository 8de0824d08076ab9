//! Meshes through differential coordinates into the local and global tests.

use liestat::*;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const FACES: [[usize; 3]; 8] = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];

fn octahedron() -> Vec<Vector3<f64>> {
    vec![
        Vector3::new(3.0, 0.0, 0.0),
        Vector3::new(-3.0, 0.0, 0.0),
        Vector3::new(0.0, 2.0, 0.0),
        Vector3::new(0.0, -2.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
        Vector3::new(0.0, 0.0, -1.0),
    ]
}

/// Jittered copies of the octahedron; `stretch` scales the top vertex.
fn cohort(stretch: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<TriangleMesh> {
    let noise = Normal::new(0.0, 0.05).unwrap();
    (0..n)
        .map(|_| {
            let v = octahedron()
                .into_iter()
                .enumerate()
                .map(|(k, p)| {
                    let s = if k == 4 { stretch } else { 1.0 };
                    s * p + Vector3::from_fn(|_, _| noise.sample(rng))
                })
                .collect();
            TriangleMesh::new(v, FACES.to_vec()).unwrap()
        })
        .collect()
}

fn coords(reference: &TriangleMesh, meshes: &[TriangleMesh]) -> SampleSet {
    SampleSet::new(meshes.iter().map(|m| differential_coords(reference, m).unwrap()).collect()).unwrap()
}

#[test]
fn local_deformation_is_found_on_the_adjacent_faces() {
    let reference = TriangleMesh::new(octahedron(), FACES.to_vec()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let a = coords(&reference, &cohort(1.0, 12, &mut rng));
    let b = coords(&reference, &cohort(1.3, 12, &mut rng));
    let cfg = PermutationConfig { n_permutations: 1000, seed: 32, ..Default::default() };
    let report = local_tests(&a, &b, &cfg, 0.05).unwrap();
    assert!(report.failures.is_empty());
    // faces 0..4 share the top vertex
    assert!(report.reject_mask[..4].iter().all(|&r| r), "{:?}", report.reject_mask);
    assert!(report.reject_mask.iter().filter(|&&r| r).count() <= 5);
    let global = global_test(&report.stats, None).unwrap();
    assert!(global.p_value < 0.05);
}

#[test]
fn rigid_motion_of_the_cohorts_leaves_the_local_tests_unchanged() {
    let reference = TriangleMesh::new(octahedron(), FACES.to_vec()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let ma = cohort(1.0, 10, &mut rng);
    let mb = cohort(1.1, 10, &mut rng);
    let rotation = group_exp(&GroupDescriptor::SO3, &TangentCoords::from_slice(&[0.3, -0.2, 0.9])).unwrap();
    let r = *rotation.as_so3().unwrap();
    let t = Vector3::new(1.0, 2.0, 3.0);
    let moved = |ms: &[TriangleMesh]| ms.iter().map(|m| m.transformed(&r, &t)).collect::<Vec<_>>();
    let cfg = PermutationConfig { n_permutations: 300, seed: 42, ..Default::default() };
    let before = local_tests(&coords(&reference, &ma), &coords(&reference, &mb), &cfg, 0.05).unwrap();
    // every face gradient is left-multiplied by the same rotation
    let after = local_tests(&coords(&reference, &moved(&ma)), &coords(&reference, &moved(&mb)), &cfg, 0.05).unwrap();
    // A triangle has six degrees of freedom, so the nine-dimensional face
    // covariances are nearly singular (condition numbers near 1e10) and
    // rounding in the moved vertices is amplified accordingly.
    for (x, y) in before.stats.iter().zip(after.stats.iter()) {
        assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{x} vs {y}");
    }
    assert_eq!(before.reject_mask, after.reject_mask);
}
