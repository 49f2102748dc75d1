//! Anisotropic Eikonal solver on tetrahedral meshes.
//!
//! Computes first-arrival times under the per-tet velocity tensor
//! `M = (ar·cv)²·ffᵀ + cv²·(I − ffᵀ)` by a locked-front scheme with per-tet
//! local solves: arrival at a vertex is minimized over entry points on the
//! opposite face (linear interpolation of arrival times plus the straight-ray
//! anisotropic travel time). Anisotropy breaks the strict causality that
//! plain fast marching relies on, so vertices are re-inserted into the queue
//! whenever a later relaxation improves them.
//!
//! Every candidate is an evaluation of the exact face objective at a point of
//! the face simplex, so candidates are always valid upper bounds; stationary
//! points only locate the best entry point.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use mesh_core::{Point3, Vector3};
use nalgebra::{Matrix2, Matrix3, Vector2};

use crate::conduction::ConductionTable;
use crate::error::EpError;
use crate::tetmesh::TetMesh;

/// Per-vertex local activation times in ms. Unreachable vertices keep the
/// `f64::INFINITY` sentinel.
#[derive(Debug, Clone)]
pub struct ActivationMap {
    pub lat: Vec<f64>,
    pub seeds: Vec<u32>,
}

impl ActivationMap {
    pub fn max_finite(&self) -> f64 {
        self.lat
            .iter()
            .copied()
            .filter(|t| t.is_finite())
            .fold(0.0, f64::max)
    }

    pub fn unreachable_count(&self) -> usize {
        self.lat.iter().filter(|t| !t.is_finite()).count()
    }
}

/// Vertices within `radius` mm of `point` — the stimulus site.
pub fn sinus_seed(mesh: &TetMesh, point: &Point3<f64>, radius: f64) -> Result<Vec<u32>, EpError> {
    let seeds: Vec<u32> = mesh
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, p)| (*p - point).norm() <= radius)
        .map(|(i, _)| i as u32)
        .collect();
    if seeds.is_empty() {
        return Err(EpError::EmptySeeds {
            radius,
            x: point.x,
            y: point.y,
            z: point.z,
        });
    }
    Ok(seeds)
}

struct QueueItem {
    time: f64,
    vertex: u32,
}

impl PartialEq for QueueItem {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.vertex == other.vertex
    }
}
impl Eq for QueueItem {}
impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on time (ties by vertex for determinism).
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Solves for first arrival from the seed set (lat = 0 there). Velocities are
/// taken from the conduction table in mm/s and converted to mm/ms once.
pub fn fast_march(
    mesh: &TetMesh,
    table: &ConductionTable,
    seeds: &[u32],
) -> Result<ActivationMap, EpError> {
    mesh.validate()?;
    table.validate()?;
    if seeds.is_empty() {
        return Err(EpError::EmptySeeds {
            radius: 0.0,
            x: f64::NAN,
            y: f64::NAN,
            z: f64::NAN,
        });
    }
    for &s in seeds {
        if s as usize >= mesh.vertex_count() {
            return Err(EpError::SeedOutOfRange(s));
        }
    }

    // Inverse squared-slowness tensors, ms²/mm²:
    // M⁻¹ = (1/(ar·cv)²)·ffᵀ + (1/cv²)·(I − ffᵀ) with cv in mm/ms.
    let inv_tensors: Vec<Matrix3<f64>> = (0..mesh.tet_count())
        .map(|t| {
            let e = table.get(mesh.regions[t]);
            let cv = e.transverse_velocity / 1000.0;
            let cl = e.anisotropy_ratio * cv;
            let f = mesh.fibers[t];
            let ff = f * f.transpose();
            ff * (1.0 / (cl * cl)) + (Matrix3::identity() - ff) * (1.0 / (cv * cv))
        })
        .collect();

    let vertex_tets = mesh.vertex_tets();
    let mut lat = vec![f64::INFINITY; mesh.vertex_count()];
    let mut heap = BinaryHeap::new();
    for &s in seeds {
        lat[s as usize] = 0.0;
        heap.push(QueueItem {
            time: 0.0,
            vertex: s,
        });
    }

    while let Some(item) = heap.pop() {
        let v = item.vertex as usize;
        if item.time > lat[v] + 1e-15 {
            continue; // stale entry
        }
        for &t in &vertex_tets[v] {
            let tet = mesh.tets[t as usize];
            let a = &inv_tensors[t as usize];
            for &u in &tet {
                let u = u as usize;
                if u == v || lat[u] <= 0.0 {
                    continue;
                }
                let face: Vec<usize> = tet
                    .iter()
                    .map(|&x| x as usize)
                    .filter(|&x| x != u)
                    .collect();
                let candidate = local_update(
                    &mesh.vertices[u],
                    [
                        (&mesh.vertices[face[0]], lat[face[0]]),
                        (&mesh.vertices[face[1]], lat[face[1]]),
                        (&mesh.vertices[face[2]], lat[face[2]]),
                    ],
                    a,
                );
                if candidate < lat[u] - 1e-12 {
                    lat[u] = candidate;
                    heap.push(QueueItem {
                        time: candidate,
                        vertex: u as u32,
                    });
                }
            }
        }
    }

    let unreachable = lat.iter().filter(|t| !t.is_finite()).count();
    if unreachable > 0 {
        log::warn!("{unreachable} vertices unreachable from the seed set (lat = +inf)");
    }

    Ok(ActivationMap {
        lat,
        seeds: seeds.to_vec(),
    })
}

/// Anisotropic straight-ray travel time (ms) between two points.
fn ray_time(from: &Point3<f64>, to: &Point3<f64>, a: &Matrix3<f64>) -> f64 {
    let d = to - from;
    (d.transpose() * a * d)[0].max(0.0).sqrt()
}

/// Minimum of `T(x) + ray_time(x, target)` over the face, where `T` is the
/// linear interpolation of the corner arrival times. Evaluates the exact
/// objective at candidate entry points (corners, edge-interior and
/// face-interior stationary points), so the result is always a valid bound.
fn local_update(
    target: &Point3<f64>,
    face: [(&Point3<f64>, f64); 3],
    a: &Matrix3<f64>,
) -> f64 {
    let mut best = f64::INFINITY;

    // Corners.
    for (p, t) in &face {
        if t.is_finite() {
            best = best.min(t + ray_time(p, target, a));
        }
    }

    // Edge interiors.
    for i in 0..3 {
        let j = (i + 1) % 3;
        let (p0, t0) = face[i];
        let (p1, t1) = face[j];
        if t0.is_finite() && t1.is_finite() {
            best = best.min(edge_minimum(target, p0, t0, p1, t1, a));
        }
    }

    // Face interior.
    if face.iter().all(|(_, t)| t.is_finite()) {
        best = best.min(face_minimum(target, &face, a));
    }

    best
}

fn evaluate_edge(
    target: &Point3<f64>,
    p0: &Point3<f64>,
    t0: f64,
    p1: &Point3<f64>,
    t1: f64,
    a: &Matrix3<f64>,
    s: f64,
) -> f64 {
    let entry = Point3::from(p0.coords * (1.0 - s) + p1.coords * s);
    t0 * (1.0 - s) + t1 * s + ray_time(&entry, target, a)
}

/// 1D convex minimization along an edge. The stationary points of
/// `t0 + s·dt + sqrt(c0 − 2sh + s²g)` are `s = (h ± |dt|·k)/g` with
/// `k = sqrt((g·c0 − h²)/(g − dt²))`; this form stays exact as dt → 0
/// (the common symmetric case), unlike the squared quadratic whose
/// discriminant cancels to rounding noise there.
fn edge_minimum(
    target: &Point3<f64>,
    p0: &Point3<f64>,
    t0: f64,
    p1: &Point3<f64>,
    t1: f64,
    a: &Matrix3<f64>,
) -> f64 {
    let e = p1 - p0;
    let w = target - p0;
    let g = (e.transpose() * a * e)[0];
    let h = (e.transpose() * a * w)[0];
    let c0 = (w.transpose() * a * w)[0];
    let dt = t1 - t0;

    let beta = g - dt * dt;
    if !(beta > 0.0) || !(g > 0.0) {
        return f64::INFINITY; // slope too steep: minimum is at an endpoint
    }
    let k = ((g * c0 - h * h).max(0.0) / beta).sqrt();
    let mut best = f64::INFINITY;
    for s in [(h - dt.abs() * k) / g, (h + dt.abs() * k) / g] {
        let s = s.clamp(0.0, 1.0);
        best = best.min(evaluate_edge(target, p0, t0, p1, t1, a, s));
    }
    best
}

fn clamp_to_simplex(u: f64, v: f64) -> (f64, f64) {
    let u = u.max(0.0);
    let v = v.max(0.0);
    let sum = u + v;
    if sum > 1.0 {
        (u / sum, v / sum)
    } else {
        (u, v)
    }
}

/// 2D convex minimization over the face interior.
fn face_minimum(target: &Point3<f64>, face: &[(&Point3<f64>, f64); 3], a: &Matrix3<f64>) -> f64 {
    let (p0, t0) = face[0];
    let (p1, t1) = face[1];
    let (p2, t2) = face[2];
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let w = target - p0;
    let g = Matrix2::new(
        (e1.transpose() * a * e1)[0],
        (e1.transpose() * a * e2)[0],
        (e2.transpose() * a * e1)[0],
        (e2.transpose() * a * e2)[0],
    );
    let h = Vector2::new((e1.transpose() * a * w)[0], (e2.transpose() * a * w)[0]);
    let c0 = (w.transpose() * a * w)[0];
    let dt = Vector2::new(t1 - t0, t2 - t0);

    let Some(g_inv) = g.try_inverse() else {
        return f64::INFINITY;
    };
    let denom = 1.0 - (dt.transpose() * g_inv * dt)[0];
    if denom <= 1e-14 {
        return f64::INFINITY;
    }
    let rhs = (c0 - (h.transpose() * g_inv * h)[0]).max(0.0);
    let s = (rhs / denom).sqrt();
    let uv = g_inv * (h - dt * s);
    let (u, v) = (uv[0], uv[1]);
    if u < -1e-9 || v < -1e-9 || u + v > 1.0 + 1e-9 {
        return f64::INFINITY;
    }
    // Clamp into the simplex and evaluate the true objective there; any point
    // of the face yields a valid bound.
    let (u, v) = clamp_to_simplex(u, v);
    let entry = Point3::from(p0.coords + e1 * u + e2 * v);
    t0 + u * (t1 - t0) + v * (t2 - t0) + ray_time(&entry, target, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conduction::RegionConduction;
    use crate::tetmesh::AtrialRegion;
    use mesh_core::Vector3 as V3;

    fn uniform_table(cv_mm_s: f64, ar: f64) -> ConductionTable {
        let mut table = ConductionTable::default();
        for region in AtrialRegion::ALL {
            table.set(
                region,
                RegionConduction {
                    transverse_velocity: cv_mm_s,
                    anisotropy_ratio: ar,
                },
            );
        }
        table
    }

    fn face_seeds(mesh: &TetMesh, axis: usize) -> Vec<u32> {
        mesh.vertices
            .iter()
            .enumerate()
            .filter(|(_, p)| p[axis].abs() < 1e-9)
            .map(|(i, _)| i as u32)
            .collect()
    }

    #[test]
    fn isotropic_slab_matches_analytic_time() {
        // 100×20×3 mm at 1 mm, cv = 1000 mm/s → far face at 100 ms.
        let mesh = TetMesh::structured_slab(100, 20, 3, 1.0, AtrialRegion::RightAtrium);
        let table = uniform_table(1000.0, 1.0);
        let seeds = face_seeds(&mesh, 0);
        let map = fast_march(&mesh, &table, &seeds).unwrap();
        assert_eq!(map.unreachable_count(), 0);
        let far: Vec<usize> = mesh
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.x - 100.0).abs() < 1e-9)
            .map(|(i, _)| i)
            .collect();
        for v in far {
            let rel = (map.lat[v] - 100.0).abs() / 100.0;
            assert!(rel < 0.03, "lat {} at far face", map.lat[v]);
        }
    }

    #[test]
    fn anisotropic_slab_axis_ratio() {
        // Fibers along x, ar = 2, cv_t = 500 mm/s: x traversal twice as fast.
        let mesh = TetMesh::structured_slab(40, 40, 3, 1.0, AtrialRegion::RightAtrium);
        let table = uniform_table(500.0, 2.0);

        let map_x = fast_march(&mesh, &table, &face_seeds(&mesh, 0)).unwrap();
        let map_y = fast_march(&mesh, &table, &face_seeds(&mesh, 1)).unwrap();

        let t_x = mesh
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.x - 40.0).abs() < 1e-9)
            .map(|(i, _)| map_x.lat[i])
            .fold(0.0f64, f64::max);
        let t_y = mesh
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.y - 40.0).abs() < 1e-9)
            .map(|(i, _)| map_y.lat[i])
            .fold(0.0f64, f64::max);

        // 40 mm at 1000 mm/s = 40 ms; at 500 mm/s = 80 ms.
        assert!((t_x - 40.0).abs() / 40.0 < 0.05, "t_x = {t_x}");
        assert!((t_y - 80.0).abs() / 80.0 < 0.05, "t_y = {t_y}");
        let ratio = t_y / t_x;
        assert!((ratio - 2.0).abs() / 2.0 < 0.05, "ratio = {ratio}");
    }

    #[test]
    fn seeds_are_zero_and_lats_non_negative() {
        let mesh = TetMesh::structured_slab(10, 5, 2, 1.0, AtrialRegion::LeftAtrium);
        let map = fast_march(&mesh, &ConductionTable::default(), &[3, 17]).unwrap();
        assert_eq!(map.lat[3], 0.0);
        assert_eq!(map.lat[17], 0.0);
        for &t in &map.lat {
            assert!(t >= 0.0 && t.is_finite());
        }
    }

    #[test]
    fn removing_a_seed_never_decreases_lat() {
        let mesh = TetMesh::structured_slab(12, 6, 2, 1.0, AtrialRegion::RightAtrium);
        let both = fast_march(&mesh, &ConductionTable::default(), &[0, 200]).unwrap();
        let one = fast_march(&mesh, &ConductionTable::default(), &[0]).unwrap();
        for (b, o) in both.lat.iter().zip(&one.lat) {
            assert!(o >= b, "removing a seed decreased a lat: {o} < {b}");
        }
    }

    #[test]
    fn velocity_scaling_divides_times() {
        let mesh = TetMesh::structured_slab(15, 8, 2, 1.0, AtrialRegion::CristaTerminalis);
        let base = uniform_table(400.0, 2.5);
        let scaled = uniform_table(1200.0, 2.5);
        let map_base = fast_march(&mesh, &base, &[0]).unwrap();
        let map_scaled = fast_march(&mesh, &scaled, &[0]).unwrap();
        for (b, s) in map_base.lat.iter().zip(&map_scaled.lat) {
            if *b > 0.0 {
                assert!((s * 3.0 - b).abs() <= 1e-9 * b.max(1.0), "{s} * 3 != {b}");
            }
        }
    }

    #[test]
    fn rigid_transform_leaves_lats_unchanged() {
        use mesh_core::RigidTransform;
        let mesh = TetMesh::structured_slab(10, 6, 3, 1.0, AtrialRegion::PectinateMuscle);
        let table = ConductionTable::default();
        let base = fast_march(&mesh, &table, &[5]).unwrap();

        let t = RigidTransform::from_axis_angle(
            &V3::new(0.3, 1.0, -0.5),
            0.8,
            V3::new(12.0, -7.0, 3.0),
        );
        let moved = TetMesh {
            vertices: mesh.vertices.iter().map(|p| t.apply(p)).collect(),
            tets: mesh.tets.clone(),
            regions: mesh.regions.clone(),
            fibers: mesh.fibers.iter().map(|f| t.apply_vector(f)).collect(),
        };
        let rotated = fast_march(&moved, &table, &[5]).unwrap();
        for (a, b) in base.lat.iter().zip(&rotated.lat) {
            assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn disconnected_vertices_are_infinite() {
        // Two disjoint slabs in one mesh.
        let slab = TetMesh::structured_slab(3, 2, 1, 1.0, AtrialRegion::RightAtrium);
        let nv = slab.vertex_count();
        let mut vertices = slab.vertices.clone();
        vertices.extend(slab.vertices.iter().map(|p| Point3::new(p.x + 100.0, p.y, p.z)));
        let mut tets = slab.tets.clone();
        tets.extend(slab.tets.iter().map(|t| t.map(|i| i + nv as u32)));
        let mesh = TetMesh {
            vertices,
            tets,
            regions: vec![AtrialRegion::RightAtrium; slab.tet_count() * 2],
            fibers: vec![V3::x(); slab.tet_count() * 2],
        };
        let map = fast_march(&mesh, &ConductionTable::default(), &[0]).unwrap();
        assert_eq!(map.unreachable_count(), nv);
        assert!(map.lat[nv].is_infinite());
    }

    #[test]
    fn sinus_seed_radius_behavior() {
        let mesh = TetMesh::structured_slab(5, 5, 1, 1.0, AtrialRegion::RightAtrium);
        // Exactly at a vertex with a tight radius.
        let seeds = sinus_seed(&mesh, &Point3::new(2.0, 2.0, 0.0), 0.5).unwrap();
        assert_eq!(seeds.len(), 1);
        assert_eq!(mesh.vertices[seeds[0] as usize], Point3::new(2.0, 2.0, 0.0));

        // Point far outside the bounding box.
        assert!(matches!(
            sinus_seed(&mesh, &Point3::new(100.0, 100.0, 100.0), 1.0),
            Err(EpError::EmptySeeds { .. })
        ));

        // Count matches a brute-force scan.
        let p = Point3::new(2.5, 2.5, 0.5);
        let r = 1.3;
        let seeds = sinus_seed(&mesh, &p, r).unwrap();
        let brute = mesh
            .vertices
            .iter()
            .filter(|q| (*q - p).norm() <= r)
            .count();
        assert_eq!(seeds.len(), brute);
    }
}
