//! Wall construction: offset the endocardial surface along vertex normals and
//! fill the gap with tetrahedra.
//!
//! Each surface triangle becomes a stack of prisms (one per layer through the
//! thickness), and each prism splits into three tets. Quad-face diagonals are
//! chosen through the smaller global vertex index of the generating surface
//! edge, which makes neighboring prisms conform, so the result is watertight:
//! its boundary is exactly the endo and epi copies of the input surface.

use mesh_core::{Point3, SurfaceMesh, Vector3};

use crate::error::EpError;
use crate::tetmesh::{AtrialRegion, TetMesh};

#[derive(Debug, Clone)]
pub struct WallConfig {
    /// Wall thickness in mm.
    pub thickness: f64,
    /// Advisory edge target (mm): sets the number of layers through the
    /// thickness (thickness/target rounded, at least one).
    pub target_edge: f64,
}

impl Default for WallConfig {
    fn default() -> Self {
        WallConfig {
            thickness: 3.0,
            target_edge: 1.0,
        }
    }
}

/// Extrudes a closed, outward-oriented endocardial surface into a tet mesh.
/// All tets are tagged RightAtrium and carry +x fibers until
/// [`crate::regions::assign_regions`] and [`crate::fibers::assign_fibers`]
/// run.
pub fn extrude_wall(endo: &SurfaceMesh, cfg: &WallConfig) -> Result<TetMesh, EpError> {
    if cfg.thickness <= 0.0 {
        return Err(EpError::BadSurface("thickness must be positive".into()));
    }
    endo.check_closed_manifold()
        .map_err(|e| EpError::BadSurface(e.to_string()))?;
    if endo.enclosed_volume() <= 0.0 {
        return Err(EpError::BadSurface(
            "surface orientation is inward (negative enclosed volume)".into(),
        ));
    }

    let normals = endo.vertex_normals()?;
    let layers = ((cfg.thickness / cfg.target_edge).round() as usize).max(1);
    let nv = endo.vertex_count();

    let mut vertices = Vec::with_capacity(nv * (layers + 1));
    for layer in 0..=layers {
        let offset = cfg.thickness * layer as f64 / layers as f64;
        for (p, n) in endo.vertices.iter().zip(&normals) {
            vertices.push(Point3::from(p.coords + offset * n));
        }
    }

    // Reject offsets that fold the outer surface into itself.
    check_epi_self_intersection(endo, &vertices[layers * nv..])?;

    let mut tets = Vec::with_capacity(endo.triangle_count() * layers * 3);
    for layer in 0..layers {
        let base = (layer * nv) as u32;
        let top = ((layer + 1) * nv) as u32;
        for tri in &endo.triangles {
            // Rotate so the smallest surface-vertex index leads; diagonals
            // then run from the bottom copy of the smaller edge endpoint.
            let mut order = [tri[0], tri[1], tri[2]];
            while !(order[0] < order[1] && order[0] < order[2]) {
                order.rotate_left(1);
            }
            let [i, j, k] = order;
            let (ib, jb, kb) = (base + i, base + j, base + k);
            let (it, jt, kt) = (top + i, top + j, top + k);
            if j < k {
                tets.push([ib, jb, kb, kt]);
                tets.push([ib, jb, kt, jt]);
                tets.push([ib, jt, kt, it]);
            } else {
                tets.push([ib, jb, kb, jt]);
                tets.push([ib, kb, jt, kt]);
                tets.push([ib, jt, kt, it]);
            }
        }
    }

    // Positive orientation; the face sets (and thus conformity) are
    // unaffected by swapping two vertices.
    for tet in tets.iter_mut() {
        let pa = vertices[tet[0] as usize];
        let pb = vertices[tet[1] as usize];
        let pc = vertices[tet[2] as usize];
        let pd = vertices[tet[3] as usize];
        if (pb - pa).cross(&(pc - pa)).dot(&(pd - pa)) < 0.0 {
            tet.swap(2, 3);
        }
    }

    let n = tets.len();
    let mesh = TetMesh {
        vertices,
        tets,
        regions: vec![AtrialRegion::RightAtrium; n],
        fibers: vec![Vector3::new(1.0, 0.0, 0.0); n],
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Triangle-triangle intersection scan over the offset (epi) layer, grid
/// accelerated. Adjacent triangles (sharing a vertex) are skipped.
fn check_epi_self_intersection(
    endo: &SurfaceMesh,
    epi_vertices: &[Point3<f64>],
) -> Result<(), EpError> {
    let tris = &endo.triangles;
    let tri_pts = |t: usize| -> [Point3<f64>; 3] {
        let [i, j, k] = tris[t];
        [
            epi_vertices[i as usize],
            epi_vertices[j as usize],
            epi_vertices[k as usize],
        ]
    };

    // Bin triangles by bounding box on a uniform grid.
    let mut lo = epi_vertices[0];
    let mut hi = epi_vertices[0];
    for p in epi_vertices {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let cell = ((hi - lo).amax() / (tris.len() as f64).cbrt()).max(1e-9);
    let dims = [
        ((hi.x - lo.x) / cell) as i64 + 1,
        ((hi.y - lo.y) / cell) as i64 + 1,
        ((hi.z - lo.z) / cell) as i64 + 1,
    ];
    let key = |p: &Point3<f64>| -> [i64; 3] {
        [
            (((p.x - lo.x) / cell) as i64).clamp(0, dims[0] - 1),
            (((p.y - lo.y) / cell) as i64).clamp(0, dims[1] - 1),
            (((p.z - lo.z) / cell) as i64).clamp(0, dims[2] - 1),
        ]
    };
    let mut bins: std::collections::HashMap<[i64; 3], Vec<u32>> = std::collections::HashMap::new();
    for t in 0..tris.len() {
        let pts = tri_pts(t);
        let mut t_lo = key(&pts[0]);
        let mut t_hi = t_lo;
        for p in &pts[1..] {
            let k = key(p);
            for i in 0..3 {
                t_lo[i] = t_lo[i].min(k[i]);
                t_hi[i] = t_hi[i].max(k[i]);
            }
        }
        for x in t_lo[0]..=t_hi[0] {
            for y in t_lo[1]..=t_hi[1] {
                for z in t_lo[2]..=t_hi[2] {
                    bins.entry([x, y, z]).or_default().push(t as u32);
                }
            }
        }
    }

    let mut offenders = Vec::new();
    let mut seen: std::collections::HashSet<(u32, u32)> = std::collections::HashSet::new();
    for members in bins.values() {
        for (ai, &a) in members.iter().enumerate() {
            for &b in &members[ai + 1..] {
                let (a, b) = (a.min(b), a.max(b));
                if !seen.insert((a, b)) {
                    continue;
                }
                let ta = tris[a as usize];
                let tb = tris[b as usize];
                if ta.iter().any(|v| tb.contains(v)) {
                    continue; // shared vertex
                }
                if triangles_intersect(&tri_pts(a as usize), &tri_pts(b as usize)) {
                    offenders.push((a as usize, b as usize));
                }
            }
        }
    }
    if let Some(&(a, b)) = offenders.first() {
        return Err(EpError::SelfIntersection {
            count: offenders.len(),
            a,
            b,
        });
    }
    Ok(())
}

/// Segment-triangle based triangle-triangle overlap: the triangles intersect
/// iff an edge of one crosses the interior of the other.
fn triangles_intersect(a: &[Point3<f64>; 3], b: &[Point3<f64>; 3]) -> bool {
    let edge_hits = |tri: &[Point3<f64>; 3], seg: (&Point3<f64>, &Point3<f64>)| -> bool {
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        let d0 = n.dot(&(seg.0 - tri[0]));
        let d1 = n.dot(&(seg.1 - tri[0]));
        if d0 * d1 > 0.0 {
            return false; // both endpoints on one side
        }
        let denom = d0 - d1;
        if denom.abs() < 1e-30 {
            return false; // coplanar; treated as non-crossing
        }
        let t = d0 / denom;
        let p = seg.0 + (seg.1 - seg.0) * t;
        // Barycentric inside test.
        let v0 = tri[1] - tri[0];
        let v1 = tri[2] - tri[0];
        let v2 = p - tri[0];
        let d00 = v0.dot(&v0);
        let d01 = v0.dot(&v1);
        let d11 = v1.dot(&v1);
        let d20 = v2.dot(&v0);
        let d21 = v2.dot(&v1);
        let det = d00 * d11 - d01 * d01;
        if det.abs() < 1e-30 {
            return false;
        }
        let u = (d11 * d20 - d01 * d21) / det;
        let v = (d00 * d21 - d01 * d20) / det;
        u > 1e-12 && v > 1e-12 && u + v < 1.0 - 1e-12
    };
    for e in 0..3 {
        if edge_hits(b, (&a[e], &a[(e + 1) % 3])) {
            return true;
        }
        if edge_hits(a, (&b[e], &b[(e + 1) % 3])) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use mesh_core::primitives::{icosphere, unit_square};

    #[test]
    fn icosphere_shell_volume_matches_analytic() {
        let r = 20.0f64;
        let endo = icosphere(r, 3);
        let cfg = WallConfig {
            thickness: 1.0,
            target_edge: 1.0,
        };
        let wall = extrude_wall(&endo, &cfg).unwrap();
        // Shell between r and r+1 (vertex normals are radial within 2°).
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * ((r + 1.0).powi(3) - r.powi(3));
        let v = wall.total_volume();
        let rel = (v - analytic).abs() / analytic;
        assert!(rel < 0.05, "shell volume {v} vs analytic {analytic}");
    }

    #[test]
    fn default_thickness_moves_epi_three_millimeters() {
        let endo = icosphere(15.0, 2);
        let wall = extrude_wall(&endo, &WallConfig::default()).unwrap();
        let nv = endo.vertex_count();
        let layers = wall.vertex_count() / nv - 1;
        let epi_start = layers * nv;
        for (i, p) in endo.vertices.iter().enumerate() {
            let d = (wall.vertices[epi_start + i] - p).norm();
            assert!((d - 3.0).abs() < 1e-9, "epi-endo distance {d}");
        }
    }

    #[test]
    fn open_sheet_is_rejected() {
        let err = extrude_wall(&unit_square(), &WallConfig::default()).unwrap_err();
        assert!(matches!(err, EpError::BadSurface(_)));
    }

    #[test]
    fn inward_oriented_surface_is_rejected() {
        let mut endo = icosphere(10.0, 1);
        for t in endo.triangles.iter_mut() {
            t.swap(1, 2);
        }
        let err = extrude_wall(&endo, &WallConfig::default()).unwrap_err();
        assert!(matches!(err, EpError::BadSurface(_)));
    }

    #[test]
    fn wall_is_watertight_with_endo_plus_epi_boundary() {
        let endo = mesh_core::primitives::two_lobe_phantom(20.0, 2);
        let wall = extrude_wall(&endo, &WallConfig::default()).unwrap();
        let boundary = wall.boundary_faces();
        assert_eq!(boundary.len(), 2 * endo.triangle_count());
    }

    #[test]
    fn no_inverted_tets_on_the_phantom() {
        let endo = mesh_core::primitives::two_lobe_phantom(25.0, 2);
        let wall = extrude_wall(&endo, &WallConfig::default()).unwrap();
        wall.validate().unwrap();
        assert_eq!(
            wall.tet_count(),
            endo.triangle_count() * 3 * 3 // 3 layers at 3 mm / 1 mm
        );
    }

    #[test]
    fn volume_tracks_area_times_thickness() {
        let endo = icosphere(25.0, 3);
        let wall = extrude_wall(&endo, &WallConfig::default()).unwrap();
        let area: f64 = (0..endo.triangle_count()).map(|t| endo.triangle_area(t)).sum();
        let approx = area * 3.0;
        let rel = (wall.total_volume() - approx).abs() / approx;
        assert!(rel < 0.15, "relative volume error {rel}");
    }

    #[test]
    fn excessive_offset_of_concave_shape_reports_intersections() {
        // Two nearby stubs fold into each other when dilated far enough.
        let endo = mesh_core::primitives::bumpy_sphere(
            10.0,
            3,
            &[
                (mesh_core::Vector3::new(1.0, 0.05, 0.0), 8.0, 0.22),
                (mesh_core::Vector3::new(1.0, -0.05, 0.0), 8.0, 0.22),
            ],
        );
        let cfg = WallConfig {
            thickness: 6.0,
            target_edge: 2.0,
        };
        match extrude_wall(&endo, &cfg) {
            Err(EpError::SelfIntersection { .. }) | Err(EpError::InvertedTet { .. }) => {}
            Ok(_) => panic!("expected a self-intersection report"),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
