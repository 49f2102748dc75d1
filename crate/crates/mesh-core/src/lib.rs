//! Core mesh data structures shared by the shape-modeling and simulation crates.
//!
//! Provides triangle surface meshes with optional per-vertex region labels,
//! flattened shape vectors for statistical analysis, rigid transforms, and a
//! documented ASCII OFF file format with lossless f64 round-trips.
//!
//! All types are plain data and immutable by convention: operations return new
//! values instead of mutating in place, so everything here is safe to share
//! across threads behind `&`.
//!
//! Units are millimeters throughout.

pub mod error;
pub mod io_off;
pub mod mesh;
pub mod primitives;
pub mod shape_vector;
pub mod transform;

pub use error::{MeshError, MeshIoError};
pub use mesh::{RegionLabel, SurfaceMesh, DEGENERATE_AREA_MM2};
pub use shape_vector::ShapeVector;
pub use transform::RigidTransform;

pub use nalgebra::{Point3, Vector3};
