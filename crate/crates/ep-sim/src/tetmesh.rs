//! Labeled tetrahedral meshes and their ASCII file format.
//!
//! ```text
//! TETMESH
//! <nv> <nt>
//! <x> <y> <z>              (nv lines)
//! 4 <i> <j> <k> <l>        (nt lines)
//! #REGION
//! <region name>            (nt lines)
//! #FIBER
//! <fx> <fy> <fz>           (nt lines, unit vectors)
//! #LAT                     (optional)
//! <t>                      (nv lines, ms)
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mesh_core::{Point3, Vector3};

use crate::error::EpError;

/// The seven anatomical conduction regions of the wall model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtrialRegion {
    RightAtrium,
    LeftAtrium,
    InterAtrial,
    ValveRing,
    PectinateMuscle,
    CristaTerminalis,
    InferiorIsthmus,
}

impl AtrialRegion {
    pub const ALL: [AtrialRegion; 7] = [
        AtrialRegion::RightAtrium,
        AtrialRegion::LeftAtrium,
        AtrialRegion::InterAtrial,
        AtrialRegion::ValveRing,
        AtrialRegion::PectinateMuscle,
        AtrialRegion::CristaTerminalis,
        AtrialRegion::InferiorIsthmus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AtrialRegion::RightAtrium => "RA",
            AtrialRegion::LeftAtrium => "LA",
            AtrialRegion::InterAtrial => "InterAtrial",
            AtrialRegion::ValveRing => "ValveRing",
            AtrialRegion::PectinateMuscle => "PectinateMuscle",
            AtrialRegion::CristaTerminalis => "CristaTerminalis",
            AtrialRegion::InferiorIsthmus => "InferiorIsthmus",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        AtrialRegion::ALL.iter().copied().find(|r| r.name() == s)
    }
}

/// Tetahedral mesh with one region tag and one unit fiber vector per element.
#[derive(Debug, Clone)]
pub struct TetMesh {
    pub vertices: Vec<Point3<f64>>,
    pub tets: Vec<[u32; 4]>,
    pub regions: Vec<AtrialRegion>,
    pub fibers: Vec<Vector3<f64>>,
}

impl TetMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    pub fn signed_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tets[t];
        let pa = self.vertices[a as usize];
        let pb = self.vertices[b as usize];
        let pc = self.vertices[c as usize];
        let pd = self.vertices[d as usize];
        (pb - pa).cross(&(pc - pa)).dot(&(pd - pa)) / 6.0
    }

    pub fn centroid(&self, t: usize) -> Point3<f64> {
        let [a, b, c, d] = self.tets[t];
        Point3::from(
            (self.vertices[a as usize].coords
                + self.vertices[b as usize].coords
                + self.vertices[c as usize].coords
                + self.vertices[d as usize].coords)
                / 4.0,
        )
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tet_count()).map(|t| self.signed_volume(t)).sum()
    }

    pub fn validate(&self) -> Result<(), EpError> {
        let nv = self.vertices.len();
        if self.regions.len() != self.tets.len() {
            return Err(EpError::AttributeLength {
                what: "regions",
                got: self.regions.len(),
                expected: self.tets.len(),
            });
        }
        if self.fibers.len() != self.tets.len() {
            return Err(EpError::AttributeLength {
                what: "fibers",
                got: self.fibers.len(),
                expected: self.tets.len(),
            });
        }
        for (t, tet) in self.tets.iter().enumerate() {
            for &i in tet {
                if i as usize >= nv {
                    return Err(EpError::IndexOutOfRange {
                        tet: t,
                        index: i,
                        vertex_count: nv,
                    });
                }
            }
            let volume = self.signed_volume(t);
            if volume <= 1e-9 {
                return Err(EpError::InvertedTet { tet: t, volume });
            }
            let norm = self.fibers[t].norm();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(EpError::BadFiber { tet: t, norm });
            }
        }
        Ok(())
    }

    /// Triangular faces belonging to exactly one tet, i.e. the mesh surface.
    pub fn boundary_faces(&self) -> Vec<[u32; 3]> {
        let mut count: HashMap<[u32; 3], ([u32; 3], u32)> = HashMap::new();
        for tet in &self.tets {
            let faces = [
                [tet[0], tet[1], tet[2]],
                [tet[0], tet[1], tet[3]],
                [tet[0], tet[2], tet[3]],
                [tet[1], tet[2], tet[3]],
            ];
            for f in faces {
                let mut key = f;
                key.sort_unstable();
                let entry = count.entry(key).or_insert((f, 0));
                entry.1 += 1;
            }
        }
        let mut out: Vec<[u32; 3]> = count
            .into_iter()
            .filter(|(_, (_, c))| *c == 1)
            .map(|(_, (f, _))| f)
            .collect();
        out.sort_unstable();
        out
    }

    /// Vertex → incident tets adjacency.
    pub fn vertex_tets(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (t, tet) in self.tets.iter().enumerate() {
            for &v in tet {
                adj[v as usize].push(t as u32);
            }
        }
        adj
    }

    /// Uniform slab phantom: `nx`×`ny`×`nz` cubes of edge `dx` starting at the
    /// origin, each split into 6 tets (Freudenthal, conforming across cubes).
    /// All tets tagged `region` with fibers along +x.
    pub fn structured_slab(nx: usize, ny: usize, nz: usize, dx: f64, region: AtrialRegion) -> TetMesh {
        let id = |x: usize, y: usize, z: usize| -> u32 {
            (x * (ny + 1) * (nz + 1) + y * (nz + 1) + z) as u32
        };
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
        for x in 0..=nx {
            for y in 0..=ny {
                for z in 0..=nz {
                    vertices.push(Point3::new(x as f64 * dx, y as f64 * dx, z as f64 * dx));
                }
            }
        }
        // Six tets around the main diagonal (0,0,0)-(1,1,1) of each cube.
        const PERMS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut tets = Vec::with_capacity(nx * ny * nz * 6);
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    let corner = [x, y, z];
                    for perm in PERMS {
                        let mut steps = [corner; 4];
                        for (s, &axis) in perm.iter().enumerate() {
                            let mut next = steps[s];
                            next[axis] += 1;
                            steps[s + 1] = next;
                        }
                        let mut tet = [
                            id(steps[0][0], steps[0][1], steps[0][2]),
                            id(steps[1][0], steps[1][1], steps[1][2]),
                            id(steps[2][0], steps[2][1], steps[2][2]),
                            id(steps[3][0], steps[3][1], steps[3][2]),
                        ];
                        // Fix orientation.
                        let pa = vertices[tet[0] as usize];
                        let pb = vertices[tet[1] as usize];
                        let pc = vertices[tet[2] as usize];
                        let pd = vertices[tet[3] as usize];
                        if (pb - pa).cross(&(pc - pa)).dot(&(pd - pa)) < 0.0 {
                            tet.swap(2, 3);
                        }
                        tets.push(tet);
                    }
                }
            }
        }
        let n = tets.len();
        TetMesh {
            vertices,
            tets,
            regions: vec![region; n],
            fibers: vec![Vector3::new(1.0, 0.0, 0.0); n],
        }
    }
}

pub fn save_tetmesh<P: AsRef<Path>>(
    mesh: &TetMesh,
    lat: Option<&[f64]>,
    path: P,
) -> Result<(), EpError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "TETMESH")?;
    writeln!(w, "{} {}", mesh.vertex_count(), mesh.tet_count())?;
    for p in &mesh.vertices {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
    }
    for t in &mesh.tets {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "#REGION")?;
    for r in &mesh.regions {
        writeln!(w, "{}", r.name())?;
    }
    writeln!(w, "#FIBER")?;
    for f in &mesh.fibers {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", f.x, f.y, f.z)?;
    }
    if let Some(lat) = lat {
        writeln!(w, "#LAT")?;
        for t in lat {
            writeln!(w, "{t:.16e}")?;
        }
    }
    Ok(())
}

pub fn load_tetmesh<P: AsRef<Path>>(path: P) -> Result<(TetMesh, Option<Vec<f64>>), EpError> {
    let display = path.as_ref().display().to_string();
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>, EpError> {
        for (i, line) in lines.by_ref() {
            let line = line?;
            let t = line.trim().to_string();
            if t.is_empty() {
                continue;
            }
            return Ok(Some((i + 1, t)));
        }
        Ok(None)
    };
    let perr = |line: usize, msg: String| EpError::Parse {
        path: display.clone(),
        line,
        msg,
    };

    let (ln, header) = next()?.ok_or_else(|| perr(0, "empty file".into()))?;
    if header != "TETMESH" {
        return Err(perr(ln, format!("expected 'TETMESH', found '{header}'")));
    }
    let (ln, counts) = next()?.ok_or_else(|| perr(0, "missing counts".into()))?;
    let parts: Vec<&str> = counts.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(perr(ln, "counts line needs '<nv> <nt>'".into()));
    }
    let nv: usize = parts[0].parse().map_err(|_| perr(ln, "bad vertex count".into()))?;
    let nt: usize = parts[1].parse().map_err(|_| perr(ln, "bad tet count".into()))?;

    let mut vertices = Vec::with_capacity(nv);
    for v in 0..nv {
        let (ln, line) = next()?.ok_or_else(|| perr(0, format!("eof in vertex {v}")))?;
        let c: Vec<&str> = line.split_whitespace().collect();
        if c.len() != 3 {
            return Err(perr(ln, format!("vertex {v}: expected 3 coordinates")));
        }
        let xyz: Result<Vec<f64>, _> = c.iter().map(|s| s.parse()).collect();
        let xyz = xyz.map_err(|_| perr(ln, format!("vertex {v}: bad coordinate")))?;
        vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    }
    let mut tets = Vec::with_capacity(nt);
    for t in 0..nt {
        let (ln, line) = next()?.ok_or_else(|| perr(0, format!("eof in tet {t}")))?;
        let c: Vec<&str> = line.split_whitespace().collect();
        if c.len() != 5 || c[0] != "4" {
            return Err(perr(ln, format!("tet {t}: expected '4 i j k l'")));
        }
        let idx: Result<Vec<u32>, _> = c[1..].iter().map(|s| s.parse()).collect();
        let idx = idx.map_err(|_| perr(ln, format!("tet {t}: bad index")))?;
        for &i in &idx {
            if i as usize >= nv {
                return Err(perr(ln, format!("tet {t}: vertex index {i} out of range ({nv} vertices)")));
            }
        }
        tets.push([idx[0], idx[1], idx[2], idx[3]]);
    }

    let (ln, marker) = next()?.ok_or_else(|| perr(0, "missing #REGION block".into()))?;
    if marker != "#REGION" {
        return Err(perr(ln, format!("expected '#REGION', found '{marker}'")));
    }
    let mut regions = Vec::with_capacity(nt);
    for t in 0..nt {
        let (ln, line) = next()?.ok_or_else(|| perr(0, format!("eof in region {t}")))?;
        let region = AtrialRegion::from_name(&line)
            .ok_or_else(|| perr(ln, format!("unknown region '{line}'")))?;
        regions.push(region);
    }

    let (ln, marker) = next()?.ok_or_else(|| perr(0, "missing #FIBER block".into()))?;
    if marker != "#FIBER" {
        return Err(perr(ln, format!("expected '#FIBER', found '{marker}'")));
    }
    let mut fibers = Vec::with_capacity(nt);
    for t in 0..nt {
        let (ln, line) = next()?.ok_or_else(|| perr(0, format!("eof in fiber {t}")))?;
        let c: Vec<&str> = line.split_whitespace().collect();
        if c.len() != 3 {
            return Err(perr(ln, format!("fiber {t}: expected 3 components")));
        }
        let xyz: Result<Vec<f64>, _> = c.iter().map(|s| s.parse()).collect();
        let xyz = xyz.map_err(|_| perr(ln, format!("fiber {t}: bad component")))?;
        fibers.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
    }

    let mut lat = None;
    if let Some((ln, marker)) = next()? {
        if marker != "#LAT" {
            return Err(perr(ln, format!("unexpected trailing content '{marker}'")));
        }
        let mut values = Vec::with_capacity(nv);
        for v in 0..nv {
            let (ln, line) = next()?.ok_or_else(|| perr(0, format!("eof in lat {v}")))?;
            let t: f64 = line.parse().map_err(|_| perr(ln, format!("lat {v}: bad value")))?;
            values.push(t);
        }
        lat = Some(values);
    }

    let mesh = TetMesh {
        vertices,
        tets,
        regions,
        fibers,
    };
    mesh.validate()?;
    Ok((mesh, lat))
}
