//! Forward projection of transmembrane sources to body-surface electrodes in
//! an infinite homogeneous volume conductor.
//!
//! Each tet contributes a current dipole `−σ·∇Vm·vol`; element dipoles are
//! pooled into uniform spatial bins (the source down-sampling resolution),
//! and the potential at electrode e is Σ p·(e−c)/(4π‖e−c‖³) over bins.
//! Amplitudes are in arbitrary consistent units and reported normalized
//! downstream.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use mesh_core::{Point3, Vector3};

use crate::ap::VmMovie;
use crate::error::EpError;
use crate::tetmesh::TetMesh;

pub const ELECTRODE_NAMES: [&str; 9] = ["RA", "LA", "LL", "V1", "V2", "V3", "V4", "V5", "V6"];

/// The nine measurement electrodes (limb-equivalent RA/LA/LL plus V1–V6).
#[derive(Debug, Clone)]
pub struct ElectrodeSet {
    positions: Vec<(String, Point3<f64>)>,
}

impl ElectrodeSet {
    pub fn new(positions: Vec<(String, Point3<f64>)>) -> Result<ElectrodeSet, EpError> {
        for name in ELECTRODE_NAMES {
            if !positions.iter().any(|(n, _)| n == name) {
                return Err(EpError::BadElectrodes(format!("missing electrode {name}")));
            }
        }
        if positions.len() != ELECTRODE_NAMES.len() {
            return Err(EpError::BadElectrodes(format!(
                "expected {} electrodes, got {}",
                ELECTRODE_NAMES.len(),
                positions.len()
            )));
        }
        for (i, (na, pa)) in positions.iter().enumerate() {
            for (nb, pb) in &positions[i + 1..] {
                if (pa - pb).norm() < 1e-6 {
                    return Err(EpError::BadElectrodes(format!(
                        "electrodes {na} and {nb} coincide"
                    )));
                }
            }
        }
        Ok(ElectrodeSet { positions })
    }

    pub fn get(&self, name: &str) -> Option<Point3<f64>> {
        self.positions
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| *p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Point3<f64>)> {
        self.positions.iter().map(|(n, p)| (n.as_str(), *p))
    }

    /// Standard positions on a ~500 mm-tall torso box with the atria at the
    /// origin: x toward the patient's left, y anterior, z superior (mm).
    pub fn standard_torso() -> ElectrodeSet {
        let raw = [
            ("RA", -180.0, 30.0, 180.0),
            ("LA", 180.0, 30.0, 180.0),
            ("LL", 60.0, 20.0, -320.0),
            ("V1", -30.0, 80.0, 20.0),
            ("V2", 20.0, 85.0, 20.0),
            ("V3", 45.0, 90.0, -10.0),
            ("V4", 70.0, 90.0, -40.0),
            ("V5", 110.0, 70.0, -40.0),
            ("V6", 140.0, 40.0, -40.0),
        ];
        ElectrodeSet::new(
            raw.iter()
                .map(|&(n, x, y, z)| (n.to_string(), Point3::new(x, y, z)))
                .collect(),
        )
        .expect("standard set is valid")
    }

    /// Plain-text format: `<name> <x> <y> <z>` per line, `#` comments.
    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<ElectrodeSet, EpError> {
        let display = path.as_ref().display().to_string();
        let reader = BufReader::new(File::open(path.as_ref())?);
        let mut positions = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = t.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(EpError::Parse {
                    path: display,
                    line: i + 1,
                    msg: "expected '<name> <x> <y> <z>'".into(),
                });
            }
            let coord = |s: &str| -> Result<f64, EpError> {
                s.parse().map_err(|_| EpError::Parse {
                    path: display.clone(),
                    line: i + 1,
                    msg: format!("bad coordinate '{s}'"),
                })
            };
            positions.push((
                parts[0].to_string(),
                Point3::new(coord(parts[1])?, coord(parts[2])?, coord(parts[3])?),
            ));
        }
        ElectrodeSet::new(positions)
    }
}

/// Binned dipole sources with per-vertex weight vectors.
pub struct SourceModel {
    /// Bin centroid positions (volume weighted), sorted by grid key.
    pub positions: Vec<Point3<f64>>,
    /// For each bin: (vertex, coefficient) pairs so that the bin dipole is
    /// Σ coeff·Vm(vertex, t).
    terms: Vec<Vec<(u32, Vector3<f64>)>>,
}

/// Pools per-tet dipole operators into `spacing`-sized bins.
pub fn build_source_model(mesh: &TetMesh, spacing: f64, sigma: f64) -> Result<SourceModel, EpError> {
    mesh.validate()?;
    let mut bins: BTreeMap<[i64; 3], (Vector3<f64>, f64, Vec<(u32, Vector3<f64>)>)> =
        BTreeMap::new();
    for t in 0..mesh.tet_count() {
        let [ia, ib, ic, id] = mesh.tets[t];
        let pa = mesh.vertices[ia as usize];
        let pb = mesh.vertices[ib as usize];
        let pc = mesh.vertices[ic as usize];
        let pd = mesh.vertices[id as usize];
        let e = nalgebra::Matrix3::from_columns(&[pb - pa, pc - pa, pd - pa]);
        let vol = e.determinant() / 6.0;
        let Some(g) = e.transpose().try_inverse() else {
            continue;
        };
        // ∇Vm = g·(Vm_b−Vm_a, Vm_c−Vm_a, Vm_d−Vm_a); dipole = −σ·vol·∇Vm.
        let scale = -sigma * vol;
        let g1: Vector3<f64> = g.column(0).into();
        let g2: Vector3<f64> = g.column(1).into();
        let g3: Vector3<f64> = g.column(2).into();
        let c = mesh.centroid(t);
        let key = [
            (c.x / spacing).floor() as i64,
            (c.y / spacing).floor() as i64,
            (c.z / spacing).floor() as i64,
        ];
        let entry = bins
            .entry(key)
            .or_insert_with(|| (Vector3::zeros(), 0.0, Vec::new()));
        entry.0 += c.coords * vol;
        entry.1 += vol;
        entry.2.push((ib, g1 * scale));
        entry.2.push((ic, g2 * scale));
        entry.2.push((id, g3 * scale));
        entry.2.push((ia, -(g1 + g2 + g3) * scale));
    }

    let mut positions = Vec::with_capacity(bins.len());
    let mut terms = Vec::with_capacity(bins.len());
    for (_, (weighted, vol, mut bin_terms)) in bins {
        positions.push(Point3::from(weighted / vol));
        // Merge repeated vertices for a compact operator.
        bin_terms.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(u32, Vector3<f64>)> = Vec::new();
        for (v, coeff) in bin_terms {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += coeff,
                _ => merged.push((v, coeff)),
            }
        }
        terms.push(merged);
    }
    Ok(SourceModel { positions, terms })
}

/// Per-electrode potential time series.
#[derive(Debug, Clone)]
pub struct ElectrodeTraces {
    pub dt: f64,
    pub names: Vec<String>,
    pub series: Vec<Vec<f64>>,
}

impl ElectrodeTraces {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.series[i].as_slice())
    }
}

/// Projects the voltage movie to all electrodes. `sample_spacing` is the
/// source pooling resolution in mm; `sigma` the (arbitrary-unit) bulk
/// conductivity.
pub fn surface_potentials(
    mesh: &TetMesh,
    vm: &VmMovie,
    electrodes: &ElectrodeSet,
    sample_spacing: f64,
    sigma: f64,
) -> Result<ElectrodeTraces, EpError> {
    if vm.vertex_count() != mesh.vertex_count() {
        return Err(EpError::AttributeLength {
            what: "movie vertices",
            got: vm.vertex_count(),
            expected: mesh.vertex_count(),
        });
    }
    let sources = build_source_model(mesh, sample_spacing, sigma)?;

    for (name, pos) in electrodes.iter() {
        let min_d = sources
            .positions
            .iter()
            .map(|c| (pos - c).norm())
            .fold(f64::INFINITY, f64::min);
        if min_d <= 10.0 {
            return Err(EpError::ElectrodeTooClose {
                name: name.to_string(),
                distance: min_d,
            });
        }
    }

    // Collapse bins into one weight per (electrode, vertex):
    // φ_e(t) = Σ_v w_{e,v}·Vm(v,t) with w = Σ_bins k_{e,bin}·coeff_{bin,v}.
    let nv = mesh.vertex_count();
    let electrode_list: Vec<(String, Point3<f64>)> = electrodes
        .iter()
        .map(|(n, p)| (n.to_string(), p))
        .collect();
    let mut weights = vec![vec![0.0; nv]; electrode_list.len()];
    for (bin, terms) in sources.positions.iter().zip(&sources.terms) {
        for (ei, (_, epos)) in electrode_list.iter().enumerate() {
            let r = epos - bin;
            let k = r / (4.0 * std::f64::consts::PI * r.norm().powi(3));
            for (v, coeff) in terms {
                weights[ei][*v as usize] += k.dot(coeff);
            }
        }
    }

    let mut series = vec![Vec::with_capacity(vm.steps); electrode_list.len()];
    for step in 0..vm.steps {
        let frame = vm.frame(step);
        for (ei, w) in weights.iter().enumerate() {
            let phi: f64 = w.iter().zip(&frame).map(|(a, b)| a * b).sum();
            series[ei].push(phi);
        }
    }

    Ok(ElectrodeTraces {
        dt: vm.dt,
        names: electrode_list.into_iter().map(|(n, _)| n).collect(),
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ap::{vm_movie, ApTemplate};
    use crate::conduction::ConductionTable;
    use crate::eikonal::{fast_march, ActivationMap};
    use crate::tetmesh::{AtrialRegion, TetMesh};

    fn small_slab() -> TetMesh {
        TetMesh::structured_slab(6, 4, 2, 1.0, AtrialRegion::RightAtrium)
    }

    #[test]
    fn uniform_vm_gives_zero_potentials() {
        let mesh = small_slab();
        let map = ActivationMap {
            lat: vec![0.0; mesh.vertex_count()],
            seeds: vec![0],
        };
        let template = ApTemplate::default_atrial(0.5);
        let movie = vm_movie(&map, &template, 200.0, 0.5).unwrap();
        let traces =
            surface_potentials(&mesh, &movie, &ElectrodeSet::standard_torso(), 3.0, 1.0).unwrap();
        for s in &traces.series {
            for v in s {
                assert!(v.abs() < 1e-12, "nonzero potential {v}");
            }
        }
    }

    #[test]
    fn dipole_falloff_is_inverse_square_of_distance() {
        // A propagating wavefront in a small slab approximates a point dipole
        // far away: doubling the electrode distance along one axis must scale
        // the peak by ~4 (with a small multipole correction).
        let mesh = small_slab();
        let map = fast_march(&mesh, &ConductionTable::default(), &[0]).unwrap();
        let template = ApTemplate::default_atrial(0.5);
        let movie = vm_movie(&map, &template, 60.0, 0.5).unwrap();

        let make_set = |d: f64| -> ElectrodeSet {
            let raw = [
                ("RA", d, 3.0, 2.0),
                ("LA", -d, 1.0, 0.0),
                ("LL", 3.0, d, 1.0),
                ("V1", 3.0, -d, 1.0),
                ("V2", 3.0, 1.0, d),
                ("V3", 1.0, 2.0, -d),
                ("V4", d, d, d),
                ("V5", -d, d, 0.0),
                ("V6", d, 0.0, -d),
            ];
            ElectrodeSet::new(
                raw.iter()
                    .map(|&(n, x, y, z)| (n.to_string(), Point3::new(x, y, z)))
                    .collect(),
            )
            .unwrap()
        };

        let near = surface_potentials(&mesh, &movie, &make_set(250.0), 3.0, 1.0).unwrap();
        let far = surface_potentials(&mesh, &movie, &make_set(500.0), 3.0, 1.0).unwrap();
        for (n, f) in near.series.iter().zip(&far.series) {
            let peak_near = n.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let peak_far = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let ratio = peak_near / peak_far;
            assert!(
                (3.5..8.4).contains(&ratio),
                "falloff ratio {ratio} outside the dipole-quadrupole band"
            );
        }
    }

    #[test]
    fn fiber_sign_flip_leaves_potentials_unchanged() {
        let mesh = small_slab();
        let map = fast_march(&mesh, &ConductionTable::default(), &[0]).unwrap();
        let template = ApTemplate::default_atrial(0.5);
        let movie = vm_movie(&map, &template, 50.0, 0.5).unwrap();
        let electrodes = ElectrodeSet::standard_torso();

        let flipped = TetMesh {
            vertices: mesh.vertices.clone(),
            tets: mesh.tets.clone(),
            regions: mesh.regions.clone(),
            fibers: mesh.fibers.iter().map(|f| -f).collect(),
        };
        let a = surface_potentials(&mesh, &movie, &electrodes, 3.0, 1.0).unwrap();
        let b = surface_potentials(&flipped, &movie, &electrodes, 3.0, 1.0).unwrap();
        assert_eq!(a.series, b.series);
    }

    #[test]
    fn electrode_inside_the_source_region_is_rejected() {
        let mesh = small_slab();
        let map = ActivationMap {
            lat: vec![0.0; mesh.vertex_count()],
            seeds: vec![0],
        };
        let template = ApTemplate::default_atrial(0.5);
        let movie = vm_movie(&map, &template, 50.0, 0.5).unwrap();
        let mut raw: Vec<(String, Point3<f64>)> = ElectrodeSet::standard_torso()
            .iter()
            .map(|(n, p)| (n.to_string(), p))
            .collect();
        raw[3].1 = Point3::new(3.0, 2.0, 1.0); // V1 inside the slab
        let set = ElectrodeSet::new(raw).unwrap();
        assert!(matches!(
            surface_potentials(&mesh, &movie, &set, 3.0, 1.0),
            Err(EpError::ElectrodeTooClose { .. })
        ));
    }

    #[test]
    fn missing_electrode_is_rejected_at_construction() {
        let raw = vec![("RA".to_string(), Point3::new(0.0, 0.0, 0.0))];
        assert!(matches!(
            ElectrodeSet::new(raw),
            Err(EpError::BadElectrodes(_))
        ));
    }

    #[test]
    fn source_binning_respects_spacing() {
        let mesh = TetMesh::structured_slab(12, 2, 2, 1.0, AtrialRegion::RightAtrium);
        let coarse = build_source_model(&mesh, 6.0, 1.0).unwrap();
        let fine = build_source_model(&mesh, 1.0, 1.0).unwrap();
        assert!(coarse.positions.len() < fine.positions.len());
    }
}
