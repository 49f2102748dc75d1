use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::error::MeshError;
use crate::transform::RigidTransform;

/// Triangles with area at or below this value (mm²) are rejected as degenerate.
/// Tight enough to pass real data, rejects exact duplicate vertices.
pub const DEGENERATE_AREA_MM2: f64 = 1e-9;

/// Anatomical region tag attached to a surface vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    /// Atrial body wall.
    Body,
    /// Left atrial appendage.
    Laa,
    /// Right atrial appendage.
    Raa,
    /// Left pulmonary veins.
    Lpv,
    /// Right pulmonary veins.
    Rpv,
    Other,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 6] = [
        RegionLabel::Body,
        RegionLabel::Laa,
        RegionLabel::Raa,
        RegionLabel::Lpv,
        RegionLabel::Rpv,
        RegionLabel::Other,
    ];

    /// Integer tag used in files.
    pub fn tag(self) -> u8 {
        match self {
            RegionLabel::Body => 0,
            RegionLabel::Laa => 1,
            RegionLabel::Raa => 2,
            RegionLabel::Lpv => 3,
            RegionLabel::Rpv => 4,
            RegionLabel::Other => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        RegionLabel::ALL.get(tag as usize).copied()
    }
}

/// A triangle surface mesh with optional per-vertex region labels.
///
/// Vertex order is load-bearing: once correspondence is established, vertex
/// `m` denotes the same anatomical landmark on every shape, so no operation
/// in this crate reorders vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    pub labels: Option<Vec<RegionLabel>>,
}

impl SurfaceMesh {
    /// Builds a mesh and validates indices and triangle areas.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let mesh = SurfaceMesh {
            vertices,
            triangles,
            labels: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn with_labels(mut self, labels: Vec<RegionLabel>) -> Result<Self, MeshError> {
        if labels.len() != self.vertices.len() {
            return Err(MeshError::LabelCountMismatch {
                labels: labels.len(),
                vertices: self.vertices.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Index and area checks; labels length if present.
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.vertices.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &i in tri {
                if i as usize >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index: i,
                        vertex_count: nv,
                    });
                }
            }
            let area = self.triangle_area(t);
            if area <= DEGENERATE_AREA_MM2 {
                return Err(MeshError::DegenerateTriangle { triangle: t, area });
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != nv {
                return Err(MeshError::LabelCountMismatch {
                    labels: labels.len(),
                    vertices: nv,
                });
            }
        }
        Ok(())
    }

    fn tri_points(&self, t: usize) -> [Point3<f64>; 3] {
        let [i, j, k] = self.triangles[t];
        [
            self.vertices[i as usize],
            self.vertices[j as usize],
            self.vertices[k as usize],
        ]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tri_points(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal of triangle `t` by the right-hand rule on vertex order.
    pub fn triangle_normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.tri_points(t);
        (b - a).cross(&(c - a)).normalize()
    }

    /// Per-vertex unit normals: the normalized mean of the unit normals of
    /// all incident triangles. Errors on vertices with no incident triangle.
    pub fn vertex_normals(&self) -> Result<Vec<Vector3<f64>>, MeshError> {
        let mut acc = vec![Vector3::zeros(); self.vertices.len()];
        let mut incident = vec![0u32; self.vertices.len()];
        for t in 0..self.triangles.len() {
            let n = self.triangle_normal(t);
            for &i in &self.triangles[t] {
                acc[i as usize] += n;
                incident[i as usize] += 1;
            }
        }
        acc.iter_mut()
            .enumerate()
            .map(|(v, n)| {
                if incident[v] == 0 {
                    return Err(MeshError::IsolatedVertex { vertex: v });
                }
                Ok(n.normalize())
            })
            .collect()
    }

    pub fn centroid(&self) -> Point3<f64> {
        let sum: Vector3<f64> = self.vertices.iter().map(|p| p.coords).sum();
        Point3::from(sum / self.vertices.len() as f64)
    }

    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for tri in &self.triangles {
            for e in 0..3 {
                let a = self.vertices[tri[e] as usize];
                let b = self.vertices[tri[(e + 1) % 3] as usize];
                sum += (b - a).norm();
                n += 1;
            }
        }
        sum / n as f64
    }

    /// Checks that every directed edge appears exactly once and its reverse
    /// exists, i.e. the mesh is a closed, consistently oriented 2-manifold.
    pub fn check_closed_manifold(&self) -> Result<(), MeshError> {
        let mut edges: HashMap<(u32, u32), u32> = HashMap::new();
        for tri in &self.triangles {
            for e in 0..3 {
                let a = tri[e];
                let b = tri[(e + 1) % 3];
                *edges.entry((a, b)).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edges {
            if count > 1 {
                return Err(MeshError::NotClosedManifold {
                    reason: format!("directed edge ({a},{b}) appears {count} times"),
                });
            }
            if !edges.contains_key(&(b, a)) {
                return Err(MeshError::NotClosedManifold {
                    reason: format!("edge ({a},{b}) has no oppositely oriented twin (open boundary)"),
                });
            }
        }
        Ok(())
    }

    /// Signed enclosed volume (mm³) by the divergence theorem.
    /// Positive when triangles are oriented outward.
    pub fn enclosed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[i, j, k]| {
                let a = self.vertices[i as usize].coords;
                let b = self.vertices[j as usize].coords;
                let c = self.vertices[k as usize].coords;
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Volume of the enclosed region on the side `p·normal >= offset` of a
    /// plane, for a closed outward-oriented mesh. Triangles are clipped at
    /// the plane; the planar cap contributes nothing to the chosen flux field.
    pub fn volume_in_halfspace(&self, normal: &Vector3<f64>, offset: f64) -> f64 {
        let n = normal.normalize();
        let mut volume = 0.0;
        for t in 0..self.triangles.len() {
            let pts = self.tri_points(t);
            for poly in clip_triangle_halfspace(&pts, &n, offset) {
                let [a, b, c] = poly;
                let area_vec = (b - a).cross(&(c - a)) * 0.5;
                let centroid = (a.coords + b.coords + c.coords) / 3.0;
                volume += (centroid.dot(&n) - offset) * n.dot(&area_vec);
            }
        }
        volume
    }

    /// Applies a rigid transform to every vertex; topology and labels kept.
    pub fn transformed(&self, t: &RigidTransform) -> SurfaceMesh {
        SurfaceMesh {
            vertices: self.vertices.iter().map(|p| t.apply(p)).collect(),
            triangles: self.triangles.clone(),
            labels: self.labels.clone(),
        }
    }

    /// One round of midpoint subdivision (each triangle into four).
    /// New midpoint vertices take the label of the lower-indexed edge endpoint.
    pub fn subdivide_midpoint(&self) -> SurfaceMesh {
        let mut vertices = self.vertices.clone();
        let mut labels = self.labels.clone();
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, vertices: &mut Vec<Point3<f64>>, labels: &mut Option<Vec<RegionLabel>>| -> u32 {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = midpoint.get(&key) {
                return m;
            }
            let p = Point3::from((vertices[a as usize].coords + vertices[b as usize].coords) * 0.5);
            vertices.push(p);
            if let Some(l) = labels {
                l.push(l[key.0 as usize]);
            }
            let m = (vertices.len() - 1) as u32;
            midpoint.insert(key, m);
            m
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        for &[i, j, k] in &self.triangles {
            let ij = mid(i, j, &mut vertices, &mut labels);
            let jk = mid(j, k, &mut vertices, &mut labels);
            let ki = mid(k, i, &mut vertices, &mut labels);
            triangles.push([i, ij, ki]);
            triangles.push([ij, j, jk]);
            triangles.push([ki, jk, k]);
            triangles.push([ij, jk, ki]);
        }
        SurfaceMesh {
            vertices,
            triangles,
            labels,
        }
    }
}

/// Clips a triangle against `p·n >= offset`, returning the kept part as 0-2
/// triangles (a fan of the clipped polygon).
fn clip_triangle_halfspace(
    pts: &[Point3<f64>; 3],
    n: &Vector3<f64>,
    offset: f64,
) -> Vec<[Point3<f64>; 3]> {
    let d: Vec<f64> = pts.iter().map(|p| p.coords.dot(n) - offset).collect();
    let mut poly: Vec<Point3<f64>> = Vec::with_capacity(4);
    for i in 0..3 {
        let j = (i + 1) % 3;
        if d[i] >= 0.0 {
            poly.push(pts[i]);
        }
        if (d[i] >= 0.0) != (d[j] >= 0.0) {
            let t = d[i] / (d[i] - d[j]);
            poly.push(Point3::from(pts[i].coords + (pts[j].coords - pts[i].coords) * t));
        }
    }
    match poly.len() {
        0..=2 => Vec::new(),
        len => (1..len - 1).map(|i| [poly[0], poly[i], poly[i + 1]]).collect(),
    }
}
