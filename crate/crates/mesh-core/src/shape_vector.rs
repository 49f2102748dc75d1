use nalgebra::Point3;

use crate::error::MeshError;
use crate::mesh::SurfaceMesh;

/// A shape flattened to `[x1, y1, z1, ..., xM, yM, zM]`, the unit of PCA.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeVector {
    pub coords: Vec<f64>,
}

impl ShapeVector {
    /// Wraps a coordinate vector, checking length and finiteness.
    pub fn new(coords: Vec<f64>) -> Result<Self, MeshError> {
        if coords.len() % 3 != 0 {
            return Err(MeshError::BadShapeVectorLength { len: coords.len() });
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(MeshError::NonFiniteCoordinate { index });
        }
        Ok(ShapeVector { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len() / 3
    }

    pub fn point(&self, m: usize) -> Point3<f64> {
        Point3::new(self.coords[3 * m], self.coords[3 * m + 1], self.coords[3 * m + 2])
    }
}

/// Flattens mesh vertices into a shape vector, preserving vertex order.
pub fn to_shape_vector(mesh: &SurfaceMesh) -> Result<ShapeVector, MeshError> {
    if mesh.vertices.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    let mut coords = Vec::with_capacity(mesh.vertices.len() * 3);
    for p in &mesh.vertices {
        coords.extend_from_slice(&[p.x, p.y, p.z]);
    }
    Ok(ShapeVector { coords })
}

/// Rebuilds a mesh from a shape vector and a triangle topology.
///
/// The vector must supply at least enough coordinates for every index used by
/// the topology; extra trailing vertices are kept (they may carry landmarks).
pub fn from_shape_vector(
    v: &ShapeVector,
    topology: &[[u32; 3]],
) -> Result<SurfaceMesh, MeshError> {
    if v.coords.len() % 3 != 0 {
        return Err(MeshError::BadShapeVectorLength { len: v.coords.len() });
    }
    let max_index = topology.iter().flatten().copied().max().map_or(0, |m| m as usize + 1);
    if v.vertex_count() < max_index {
        return Err(MeshError::ShapeVectorTooShort {
            len: v.coords.len(),
            needed: 3 * max_index,
        });
    }
    let vertices = (0..v.vertex_count()).map(|m| v.point(m)).collect();
    SurfaceMesh::new(vertices, topology.to_vec())
}
