//! Deformation model for pulmonary-vein orientation.
//!
//! Rank 4: one mode per vein. Each mode tilts exactly one vein's vertices as
//! a (linearized) rigid rotation about the vein's ostium centroid, swinging
//! it within the plane spanned by the vein axis and the anterior-posterior
//! direction. Rotations preserve vein length by construction; the linearized
//! field keeps edge lengths within (αθ)²/2 of exact, under 1% across the
//! ±3 coefficient range at the default angle.

use std::collections::{HashMap, HashSet, VecDeque};

use mesh_core::{RegionLabel, SurfaceMesh, Vector3};

use crate::error::GpError;
use crate::gpmm::GpModel;

#[derive(Debug, Clone)]
pub struct PvModelConfig {
    /// Unit anterior-posterior direction in mesh coordinates.
    pub ap_axis: Vector3<f64>,
    /// Rotation angle (radians) produced by a unit coefficient.
    pub angle_per_unit: f64,
}

impl Default for PvModelConfig {
    fn default() -> Self {
        PvModelConfig {
            ap_axis: Vector3::new(0.0, 1.0, 0.0),
            angle_per_unit: 0.04,
        }
    }
}

/// One vein group found on the reference.
#[derive(Debug)]
pub struct VeinGroup {
    pub label: RegionLabel,
    pub vertices: Vec<usize>,
    /// Centroid of the ostium ring (vertices bordering non-vein neighbors).
    pub ostium: Vector3<f64>,
    /// Unit direction from ostium into the vein.
    pub axis: Vector3<f64>,
}

/// Splits the LPV and RPV labels into two connected components each and
/// derives ostium centroid and vein axis per group.
pub fn find_vein_groups(reference: &SurfaceMesh) -> Result<Vec<VeinGroup>, GpError> {
    let labels = reference
        .labels
        .as_ref()
        .ok_or(GpError::MissingVeinLabels(RegionLabel::Lpv))?;

    let mut adjacency: HashMap<usize, HashSet<usize>> = HashMap::new();
    for tri in &reference.triangles {
        for e in 0..3 {
            let a = tri[e] as usize;
            let b = tri[(e + 1) % 3] as usize;
            adjacency.entry(a).or_default().insert(b);
            adjacency.entry(b).or_default().insert(a);
        }
    }

    let mut groups = Vec::new();
    for side in [RegionLabel::Lpv, RegionLabel::Rpv] {
        let members: HashSet<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == side)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            return Err(GpError::MissingVeinLabels(side));
        }

        // Connected components within the label, via mesh edges.
        let mut remaining: Vec<usize> = members.iter().copied().collect();
        remaining.sort_unstable();
        let mut seen: HashSet<usize> = HashSet::new();
        let mut components: Vec<Vec<usize>> = Vec::new();
        for &start in &remaining {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen.insert(start);
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                if let Some(neigh) = adjacency.get(&v) {
                    for &u in neigh {
                        if members.contains(&u) && seen.insert(u) {
                            queue.push_back(u);
                        }
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        if components.len() != 2 {
            return Err(GpError::BadVeinPartition {
                label: side,
                found: components.len(),
            });
        }
        // Deterministic order: by smallest member index.
        components.sort_by_key(|c| c[0]);

        for comp in components {
            let group_index = groups.len();
            let in_group: HashSet<usize> = comp.iter().copied().collect();
            let ring: Vec<usize> = comp
                .iter()
                .copied()
                .filter(|v| {
                    adjacency
                        .get(v)
                        .is_some_and(|ns| ns.iter().any(|u| !in_group.contains(u)))
                })
                .collect();
            if ring.is_empty() {
                return Err(GpError::DegenerateVein {
                    group: group_index,
                    reason: "no ostium ring (vein not attached to the body)".into(),
                });
            }
            let ostium = ring
                .iter()
                .map(|&v| reference.vertices[v].coords)
                .sum::<Vector3<f64>>()
                / ring.len() as f64;
            // Vein direction: ostium toward the farthest group vertex (the
            // tip). Ties resolve to the lowest index.
            let tip = comp
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let da = (reference.vertices[a].coords - ostium).norm_squared();
                    let db = (reference.vertices[b].coords - ostium).norm_squared();
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("non-empty component");
            let axis = reference.vertices[tip].coords - ostium;
            if axis.norm() < 1e-9 {
                return Err(GpError::DegenerateVein {
                    group: group_index,
                    reason: "vein tip coincides with its ostium".into(),
                });
            }
            groups.push(VeinGroup {
                label: side,
                vertices: comp,
                ostium,
                axis: axis.normalize(),
            });
        }
    }
    Ok(groups)
}

/// Builds the rank-4 vein-orientation model over a labeled reference.
pub fn build_pv_orientation_model(
    reference: &SurfaceMesh,
    cfg: &PvModelConfig,
) -> Result<GpModel, GpError> {
    let groups = find_vein_groups(reference)?;
    let ap = cfg.ap_axis.normalize();

    let mut pairs: Vec<(f64, Vec<Vector3<f64>>)> = Vec::with_capacity(groups.len());
    for (gi, group) in groups.iter().enumerate() {
        let rot_axis = group.axis.cross(&ap);
        if rot_axis.norm() < 1e-6 {
            return Err(GpError::DegenerateVein {
                group: gi,
                reason: "vein axis parallel to the anterior-posterior direction".into(),
            });
        }
        let n = rot_axis.normalize();

        // Linearized rotation about the ostium centroid.
        let mut field = vec![Vector3::zeros(); reference.vertex_count()];
        for &v in &group.vertices {
            field[v] = n.cross(&(reference.vertices[v].coords - group.ostium));
        }
        let norm = field.iter().map(|f| f.norm_squared()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(GpError::DegenerateVein {
                group: gi,
                reason: "zero-length rotation field".into(),
            });
        }
        let phi: Vec<Vector3<f64>> = field.iter().map(|f| f / norm).collect();
        let lambda = (cfg.angle_per_unit * norm).powi(2);
        pairs.push((lambda, phi));
    }

    // Modes on disjoint vertex sets are exactly orthonormal; sort by variance.
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (eigenvalues, modes): (Vec<f64>, Vec<Vec<Vector3<f64>>>) = pairs.into_iter().unzip();

    Ok(GpModel {
        reference: reference.clone(),
        eigenvalues,
        modes,
        captured: None,
    })
}
