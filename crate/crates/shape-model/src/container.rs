//! Binary model container ("SSMC1").
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic   5 bytes  "SSMC1"
//! u32     version (1)
//! u32     type tag (1 = point-distribution model, 2 = deformation model)
//! u32     corpus size N (0 for deformation models)
//! u32     vertex count M
//! u32     mode count
//! u32     covariance divisor (N−1 for PDMs, 0 otherwise)
//! f64×3M  mean shape (PDM) or reference vertices (deformation model)
//! f64×K   eigenvalues
//! f64×K×3M eigenvectors, row-major (PDM: unit basis; GP: mode fields)
//! u32     triangle count, then u32×3 per triangle
//! u32     label count (0 or M), then u8 per label
//! ```
//!
//! Readers validate counts before touching the arrays.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use mesh_core::{Point3, RegionLabel, ShapeVector, SurfaceMesh, Vector3};

use crate::error::ContainerError;
use crate::gpmm::GpModel;
use crate::pdm::PdmModel;

const MAGIC: &[u8; 5] = b"SSMC1";
const VERSION: u32 = 1;
pub const TYPE_PDM: u32 = 1;
pub const TYPE_GP: u32 = 2;

/// Either model kind, as stored in a container file.
pub enum StoredModel {
    Pdm(PdmModel),
    Gp(GpModel),
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn encode(
    type_tag: u32,
    corpus_n: u32,
    divisor: u32,
    mean: &[f64],
    eigenvalues: &[f64],
    rows: impl Iterator<Item = Vec<f64>>,
    topology: &[[u32; 3]],
    labels: Option<&[RegionLabel]>,
) -> Vec<u8> {
    let m = (mean.len() / 3) as u32;
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u32(type_tag);
    w.u32(corpus_n);
    w.u32(m);
    w.u32(eigenvalues.len() as u32);
    w.u32(divisor);
    for &v in mean {
        w.f64(v);
    }
    for &v in eigenvalues {
        w.f64(v);
    }
    for row in rows {
        debug_assert_eq!(row.len(), mean.len());
        for v in row {
            w.f64(v);
        }
    }
    w.u32(topology.len() as u32);
    for t in topology {
        w.u32(t[0]);
        w.u32(t[1]);
        w.u32(t[2]);
    }
    match labels {
        Some(labels) => {
            w.u32(labels.len() as u32);
            for l in labels {
                w.buf.push(l.tag());
            }
        }
        None => w.u32(0),
    }
    w.buf
}

pub fn save_pdm<P: AsRef<Path>>(model: &PdmModel, path: P) -> Result<(), ContainerError> {
    let bytes = encode(
        TYPE_PDM,
        model.corpus_size as u32,
        model.covariance_divisor as u32,
        &model.mean.coords,
        &model.eigenvalues,
        model.eigenvectors.iter().cloned(),
        &model.topology,
        model.vertex_labels.as_deref(),
    );
    File::create(path)?.write_all(&bytes)?;
    Ok(())
}

pub fn save_gp<P: AsRef<Path>>(model: &GpModel, path: P) -> Result<(), ContainerError> {
    let mean: Vec<f64> = model
        .reference
        .vertices
        .iter()
        .flat_map(|p| [p.x, p.y, p.z])
        .collect();
    let rows = model.modes.iter().map(|mode| {
        mode.iter()
            .flat_map(|v| [v.x, v.y, v.z])
            .collect::<Vec<f64>>()
    });
    let bytes = encode(
        TYPE_GP,
        0,
        0,
        &mean,
        &model.eigenvalues,
        rows,
        &model.reference.triangles,
        model.reference.labels.as_deref(),
    );
    File::create(path)?.write_all(&bytes)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], ContainerError> {
        if self.pos + n > self.bytes.len() {
            return Err(ContainerError::Truncated {
                what,
                needed: self.pos + n - self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self, what: &'static str) -> Result<u32, ContainerError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }
    fn f64_vec(&mut self, count: usize, what: &'static str) -> Result<Vec<f64>, ContainerError> {
        let b = self.take(count * 8, what)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn load<P: AsRef<Path>>(path: P) -> Result<StoredModel, ContainerError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn decode(bytes: &[u8]) -> Result<StoredModel, ContainerError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(5, "magic")? != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(ContainerError::BadVersion(version));
    }
    let type_tag = r.u32("type tag")?;
    if type_tag != TYPE_PDM && type_tag != TYPE_GP {
        return Err(ContainerError::BadTypeTag(type_tag));
    }
    let corpus_n = r.u32("corpus size")? as usize;
    let m = r.u32("vertex count")? as usize;
    let modes = r.u32("mode count")? as usize;
    let divisor = r.u32("covariance divisor")? as usize;

    // Validate the declared counts against the remaining byte budget before
    // reading any array.
    let remaining = bytes.len() - r.pos;
    let needed_floats = 3 * m + modes + modes * 3 * m;
    if remaining < needed_floats * 8 + 4 {
        return Err(ContainerError::Truncated {
            what: "arrays",
            needed: needed_floats * 8 + 4 - remaining,
        });
    }

    let mean = r.f64_vec(3 * m, "mean")?;
    let eigenvalues = r.f64_vec(modes, "eigenvalues")?;
    for w in eigenvalues.windows(2) {
        if w[1] > w[0] {
            return Err(ContainerError::Invalid {
                what: "eigenvalues",
                msg: "not sorted non-increasing".into(),
            });
        }
    }
    let mut eigenvectors = Vec::with_capacity(modes);
    for _ in 0..modes {
        eigenvectors.push(r.f64_vec(3 * m, "eigenvector row")?);
    }

    let tri_count = r.u32("triangle count")? as usize;
    let mut topology = Vec::with_capacity(tri_count);
    for _ in 0..tri_count {
        let a = r.u32("triangle")?;
        let b = r.u32("triangle")?;
        let c = r.u32("triangle")?;
        for &i in &[a, b, c] {
            if i as usize >= m {
                return Err(ContainerError::Invalid {
                    what: "topology",
                    msg: format!("vertex index {i} out of range ({m} vertices)"),
                });
            }
        }
        topology.push([a, b, c]);
    }

    let label_count = r.u32("label count")? as usize;
    let labels = if label_count == 0 {
        None
    } else {
        if label_count != m {
            return Err(ContainerError::Invalid {
                what: "labels",
                msg: format!("label count {label_count} does not match vertex count {m}"),
            });
        }
        let raw = r.take(label_count, "labels")?;
        let mut labels = Vec::with_capacity(label_count);
        for (i, &tag) in raw.iter().enumerate() {
            labels.push(RegionLabel::from_tag(tag).ok_or_else(|| ContainerError::Invalid {
                what: "labels",
                msg: format!("label {i}: unknown tag {tag}"),
            })?);
        }
        Some(labels)
    };

    match type_tag {
        TYPE_PDM => Ok(StoredModel::Pdm(PdmModel {
            mean: ShapeVector { coords: mean },
            eigenvalues,
            eigenvectors,
            topology,
            vertex_labels: labels,
            corpus_size: corpus_n,
            covariance_divisor: divisor,
        })),
        _ => {
            let vertices: Vec<Point3<f64>> = mean
                .chunks_exact(3)
                .map(|c| Point3::new(c[0], c[1], c[2]))
                .collect();
            let reference = SurfaceMesh {
                vertices,
                triangles: topology,
                labels,
            };
            let modes: Vec<Vec<Vector3<f64>>> = eigenvectors
                .into_iter()
                .map(|row| {
                    row.chunks_exact(3)
                        .map(|c| Vector3::new(c[0], c[1], c[2]))
                        .collect()
                })
                .collect();
            Ok(StoredModel::Gp(GpModel {
                reference,
                eigenvalues,
                modes,
                captured: None,
            }))
        }
    }
}
