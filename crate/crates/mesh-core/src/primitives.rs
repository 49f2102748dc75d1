//! Procedural test and phantom geometry.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::mesh::SurfaceMesh;

/// Icosahedron-based sphere approximation of the given radius, refined by
/// `subdivisions` rounds of midpoint splitting (0 → 12 vertices, 1 → 42,
/// 2 → 162, 3 → 642, 4 → 2562). Closed, manifold, outward-oriented.
pub fn icosphere(radius: f64, subdivisions: u32) -> SurfaceMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = vec![
        Vector3::new(-1.0, phi, 0.0),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(-1.0, -phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(0.0, -1.0, phi),
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, -1.0, -phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(phi, 0.0, -1.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, -1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|v| v.normalize())
    .collect();

    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let mut mid = |i: u32, j: u32, vertices: &mut Vec<Vector3<f64>>| -> u32 {
                let key = (i.min(j), i.max(j));
                *cache.entry(key).or_insert_with(|| {
                    let m = ((vertices[i as usize] + vertices[j as usize]) * 0.5).normalize();
                    vertices.push(m);
                    (vertices.len() - 1) as u32
                })
            };
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([ab, b, bc]);
            next.push([ca, bc, c]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }

    SurfaceMesh {
        vertices: vertices
            .into_iter()
            .map(|v| Point3::from(v * radius))
            .collect(),
        triangles,
        labels: None,
    }
}

/// Axis-aligned unit square in the z = 0 plane, two triangles, normals +z.
/// Open (not a closed surface); used for flat-sheet edge cases.
pub fn unit_square() -> SurfaceMesh {
    SurfaceMesh {
        vertices: vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
        labels: None,
    }
}

/// Star-shaped deformation of an icosphere: each vertex is moved radially by
/// a smooth bump field, keeping the mesh closed and self-intersection free
/// for moderate amplitudes. `bumps` holds (unit direction, amplitude,
/// angular width in radians).
pub fn bumpy_sphere(radius: f64, subdivisions: u32, bumps: &[(Vector3<f64>, f64, f64)]) -> SurfaceMesh {
    let mut mesh = icosphere(1.0, subdivisions);
    for p in &mut mesh.vertices {
        let dir = p.coords.normalize();
        let mut r = radius;
        for (axis, amplitude, width) in bumps {
            let angle = dir.dot(&axis.normalize()).clamp(-1.0, 1.0).acos();
            r += amplitude * (-(angle / width).powi(2)).exp();
        }
        *p = Point3::from(dir * r);
    }
    mesh
}

/// Two-lobed atrial phantom: a star-shaped closed surface with a larger left
/// lobe (+x) and smaller right lobe (−x), two appendage bumps and four vein
/// stubs, labeled per vertex. Anisotropically squashed so no orientation is
/// close to a symmetry. `radius` sets the base scale in mm (the overall
/// extent is roughly 3·radius across the lobes).
pub fn two_lobe_phantom(radius: f64, subdivisions: u32) -> SurfaceMesh {
    struct Feature {
        dir: Vector3<f64>,
        amp: f64,
        width: f64,
        label: Option<super::mesh::RegionLabel>,
        label_radius: f64,
    }
    use super::mesh::RegionLabel as L;
    let features = [
        // lobes
        Feature { dir: Vector3::new(1.0, 0.0, 0.0), amp: 0.45, width: 0.9, label: None, label_radius: 0.0 },
        Feature { dir: Vector3::new(-1.0, 0.1, 0.0), amp: 0.30, width: 0.8, label: None, label_radius: 0.0 },
        // appendages
        Feature { dir: Vector3::new(0.55, 0.65, 0.5), amp: 0.35, width: 0.30, label: Some(L::Laa), label_radius: 0.34 },
        Feature { dir: Vector3::new(-0.55, 0.75, 0.2), amp: 0.28, width: 0.33, label: Some(L::Raa), label_radius: 0.36 },
        // pulmonary vein stubs
        Feature { dir: Vector3::new(0.75, -0.5, 0.42), amp: 0.30, width: 0.20, label: Some(L::Lpv), label_radius: 0.28 },
        Feature { dir: Vector3::new(0.78, -0.48, -0.35), amp: 0.30, width: 0.20, label: Some(L::Lpv), label_radius: 0.28 },
        Feature { dir: Vector3::new(0.2, -0.9, 0.38), amp: 0.28, width: 0.20, label: Some(L::Rpv), label_radius: 0.28 },
        Feature { dir: Vector3::new(0.25, -0.88, -0.4), amp: 0.28, width: 0.20, label: Some(L::Rpv), label_radius: 0.28 },
    ];

    let mut mesh = icosphere(1.0, subdivisions);

    // Tangential jitter (~1/3 of the lattice spacing, deterministic per
    // index) so the sampling is irregular like segmented meshes. A regular
    // icosphere lattice is nearly self-similar under small rotations, which
    // creates coherent one-off pairings that stall vertex-based alignment.
    let jitter_angle = 0.45 * 1.107 / f64::powi(2.0, subdivisions as i32);
    for (i, p) in mesh.vertices.iter_mut().enumerate() {
        let h = |k: u64| -> f64 {
            // splitmix64 → uniform in [-1, 1)
            let mut z = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let offset = Vector3::new(h(1), h(2), h(3)) * jitter_angle;
        let dir = (p.coords + offset - p.coords.dot(&offset) * p.coords).normalize();
        *p = Point3::from(dir);
    }

    let mut labels = vec![L::Body; mesh.vertex_count()];
    for (i, p) in mesh.vertices.iter_mut().enumerate() {
        let dir = p.coords.normalize();
        let mut r = radius;
        for f in &features {
            let angle = dir.dot(&f.dir.normalize()).clamp(-1.0, 1.0).acos();
            r += f.amp * radius * (-(angle / f.width).powi(2)).exp();
            if let Some(label) = f.label {
                if angle < f.label_radius {
                    labels[i] = label;
                }
            }
        }
        *p = Point3::from(dir * r);
        p.y *= 0.85;
        p.z *= 0.72;
    }
    mesh.with_labels(labels).expect("label count matches")
}
