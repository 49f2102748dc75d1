//! ASCII OFF reader/writer.
//!
//! Supported subset:
//!
//! ```text
//! OFF
//! <nv> <nf> <ne>
//! <x> <y> <z>          (nv lines, 17 significant digits on write)
//! 3 <i> <j> <k>        (nf lines)
//! #LABELS              (optional block)
//! <tag>                (nv lines, one integer region tag per vertex)
//! ```
//!
//! Blank lines and `#` comments are skipped everywhere except the literal
//! `#LABELS` directive. Coordinates are printed with 17 significant digits,
//! which round-trips every f64 exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::MeshIoError;
use crate::mesh::{RegionLabel, SurfaceMesh};

pub fn save_mesh<P: AsRef<Path>>(mesh: &SurfaceMesh, path: P) -> Result<(), MeshIoError> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    write_mesh(mesh, &mut w)
}

pub fn write_mesh<W: Write>(mesh: &SurfaceMesh, w: &mut W) -> Result<(), MeshIoError> {
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} 0", mesh.vertex_count(), mesh.triangle_count())?;
    for p in &mesh.vertices {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    if let Some(labels) = &mesh.labels {
        writeln!(w, "#LABELS")?;
        for l in labels {
            writeln!(w, "{}", l.tag())?;
        }
    }
    Ok(())
}

pub fn load_mesh<P: AsRef<Path>>(path: P) -> Result<SurfaceMesh, MeshIoError> {
    let display = path.as_ref().display().to_string();
    let file = File::open(path.as_ref())?;
    read_mesh(BufReader::new(file), &display)
}

/// A line that is either meaningful content or the `#LABELS` marker.
struct Lines<R> {
    reader: R,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_content(&mut self) -> Result<Option<(usize, String)>, MeshIoError> {
        let mut buf = String::new();
        loop {
            buf.clear();
            let n = self.reader.read_line(&mut buf)?;
            if n == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let trimmed = buf.trim();
            if trimmed.is_empty() {
                continue;
            }
            if trimmed.starts_with('#') && trimmed != "#LABELS" {
                continue;
            }
            return Ok(Some((self.line_no, trimmed.to_string())));
        }
    }
}

pub fn read_mesh<R: BufRead>(reader: R, path: &str) -> Result<SurfaceMesh, MeshIoError> {
    let mut lines = Lines { reader, line_no: 0 };

    let (ln, header) = lines
        .next_content()?
        .ok_or_else(|| MeshIoError::Empty(path.to_string()))?;
    if header != "OFF" {
        return Err(MeshIoError::parse(path, ln, format!("expected 'OFF' header, found '{header}'")));
    }

    let (ln, counts) = lines
        .next_content()?
        .ok_or_else(|| MeshIoError::parse(path, 0, "missing counts line"))?;
    let fields: Vec<&str> = counts.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(MeshIoError::parse(path, ln, "counts line needs at least '<nv> <nf>'"));
    }
    let nv: usize = fields[0]
        .parse()
        .map_err(|_| MeshIoError::parse(path, ln, format!("bad vertex count '{}'", fields[0])))?;
    let nf: usize = fields[1]
        .parse()
        .map_err(|_| MeshIoError::parse(path, ln, format!("bad face count '{}'", fields[1])))?;

    let mut vertices = Vec::with_capacity(nv);
    for v in 0..nv {
        let (ln, line) = lines
            .next_content()?
            .ok_or_else(|| MeshIoError::parse(path, 0, format!("unexpected end of file in vertex {v}")))?;
        let coords: Vec<&str> = line.split_whitespace().collect();
        if coords.len() != 3 {
            return Err(MeshIoError::parse(path, ln, format!("vertex {v}: expected 3 coordinates, found {}", coords.len())));
        }
        let mut p = [0.0; 3];
        for (i, c) in coords.iter().enumerate() {
            p[i] = c
                .parse()
                .map_err(|_| MeshIoError::parse(path, ln, format!("vertex {v}: bad coordinate '{c}'")))?;
        }
        vertices.push(Point3::new(p[0], p[1], p[2]));
    }

    let mut triangles = Vec::with_capacity(nf);
    for f in 0..nf {
        let (ln, line) = lines
            .next_content()?
            .ok_or_else(|| MeshIoError::parse(path, 0, format!("unexpected end of file in face {f}")))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "3" {
            return Err(MeshIoError::parse(path, ln, format!("face {f}: expected '3 i j k'")));
        }
        let mut tri = [0u32; 3];
        for (i, s) in fields[1..].iter().enumerate() {
            let idx: u32 = s
                .parse()
                .map_err(|_| MeshIoError::parse(path, ln, format!("face {f}: bad index '{s}'")))?;
            if idx as usize >= nv {
                return Err(MeshIoError::parse(path, ln, format!("face {f}: vertex index {idx} out of range ({nv} vertices)")));
            }
            tri[i] = idx;
        }
        triangles.push(tri);
    }

    let mut labels = None;
    if let Some((ln, marker)) = lines.next_content()? {
        if marker != "#LABELS" {
            return Err(MeshIoError::parse(path, ln, format!("unexpected trailing content '{marker}'")));
        }
        let mut tags = Vec::with_capacity(nv);
        for v in 0..nv {
            let (ln, line) = lines
                .next_content()?
                .ok_or_else(|| MeshIoError::parse(path, 0, format!("unexpected end of file in label {v}")))?;
            let tag: u8 = line
                .parse()
                .map_err(|_| MeshIoError::parse(path, ln, format!("label {v}: bad tag '{line}'")))?;
            let label = RegionLabel::from_tag(tag)
                .ok_or_else(|| MeshIoError::parse(path, ln, format!("label {v}: unknown tag {tag}")))?;
            tags.push(label);
        }
        labels = Some(tags);
    }

    let mesh = SurfaceMesh {
        vertices,
        triangles,
        labels,
    };
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::icosphere;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::io::Cursor;

    fn read_str(s: &str) -> Result<SurfaceMesh, MeshIoError> {
        read_mesh(Cursor::new(s), "<mem>")
    }

    #[test]
    fn save_load_round_trip_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut mesh = icosphere(17.0, 2);
        // Perturb coordinates so they are not "nice" decimals.
        for p in &mut mesh.vertices {
            for i in 0..3 {
                p[i] += rng.random_range(-1.0e-3..1.0e-3);
            }
        }
        let labels: Vec<RegionLabel> = (0..mesh.vertex_count())
            .map(|i| RegionLabel::from_tag((i % 6) as u8).unwrap())
            .collect();
        let mesh = mesh.with_labels(labels).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sphere.off");
        save_mesh(&mesh, &path).unwrap();
        let back = load_mesh(&path).unwrap();

        assert_eq!(back.vertices, mesh.vertices);
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.labels, mesh.labels);
    }

    #[test]
    fn out_of_range_face_index_names_the_face() {
        let text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n";
        let err = read_str(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("face 0"), "{msg}");
        assert!(msg.contains("9"), "{msg}");
    }

    #[test]
    fn empty_file_is_an_error() {
        let err = read_str("").unwrap_err();
        assert!(matches!(err, MeshIoError::Empty(_)));
    }

    #[test]
    fn bad_header_reports_line() {
        let err = read_str("PLY\n").unwrap_err();
        assert!(err.to_string().contains(":1:"));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# a comment\nOFF\n\n3 1 0\n0 0 0\n1 0 0\n# interior comment\n0 1 0\n3 0 1 2\n";
        let mesh = read_str(text).unwrap();
        assert_eq!(mesh.vertex_count(), 3);
        assert_eq!(mesh.triangle_count(), 1);
    }

    #[test]
    fn labels_block_round_trips() {
        let text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n#LABELS\n0\n3\n5\n";
        let mesh = read_str(text).unwrap();
        let labels = mesh.labels.as_ref().unwrap();
        assert_eq!(labels[1], RegionLabel::Lpv);
        assert_eq!(labels[2], RegionLabel::Other);
    }
}
