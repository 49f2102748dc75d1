//! Geometric region tagging driven by a plain-text rule file.
//!
//! Rules apply in file order to every tet centroid; the last matching rule
//! wins, so a `default` rule usually comes first. Grammar, one rule per line:
//!
//! ```text
//! rule <TAG> default
//! rule <TAG> halfspace <nx> <ny> <nz> <offset>       # centroid·n >= offset
//! rule <TAG> sphere <cx> <cy> <cz> <radius>          # within radius of point
//! rule <TAG> band <cx> <cy> <cz> <nx> <ny> <nz> <ring_radius> <width>
//!                                   # within width/2 of a circle of radius
//!                                   # ring_radius around the axis (c, n)
//! ```
//!
//! `<TAG>` is one of RA, LA, InterAtrial, ValveRing, PectinateMuscle,
//! CristaTerminalis, InferiorIsthmus. Blank lines and `#` comments are
//! ignored.

use mesh_core::{Point3, Vector3};

use crate::error::EpError;
use crate::tetmesh::{AtrialRegion, TetMesh};

#[derive(Debug, Clone)]
pub enum RegionPredicate {
    Default,
    HalfSpace { normal: Vector3<f64>, offset: f64 },
    Sphere { center: Point3<f64>, radius: f64 },
    Band {
        center: Point3<f64>,
        normal: Vector3<f64>,
        ring_radius: f64,
        width: f64,
    },
}

impl RegionPredicate {
    pub fn matches(&self, p: &Point3<f64>) -> bool {
        match self {
            RegionPredicate::Default => true,
            RegionPredicate::HalfSpace { normal, offset } => p.coords.dot(normal) >= *offset,
            RegionPredicate::Sphere { center, radius } => (p - center).norm() <= *radius,
            RegionPredicate::Band {
                center,
                normal,
                ring_radius,
                width,
            } => {
                let n = normal.normalize();
                let q = p - center;
                let along = q.dot(&n);
                let radial = (q - along * n).norm();
                let d2 = along * along + (radial - ring_radius).powi(2);
                d2.sqrt() <= width / 2.0
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegionRule {
    pub tag: AtrialRegion,
    pub predicate: RegionPredicate,
}

pub fn parse_rules(text: &str) -> Result<Vec<RegionRule>, EpError> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields[0] != "rule" || fields.len() < 3 {
            return Err(EpError::RuleParse {
                line,
                msg: "expected 'rule <TAG> <predicate> ...'".into(),
            });
        }
        let tag = AtrialRegion::from_name(fields[1]).ok_or_else(|| EpError::RuleParse {
            line,
            msg: format!("unknown region tag '{}'", fields[1]),
        })?;
        let nums = |want: usize| -> Result<Vec<f64>, EpError> {
            let got = &fields[3..];
            if got.len() != want {
                return Err(EpError::RuleParse {
                    line,
                    msg: format!("predicate '{}' needs {want} numbers, got {}", fields[2], got.len()),
                });
            }
            got.iter()
                .map(|s| {
                    s.parse().map_err(|_| EpError::RuleParse {
                        line,
                        msg: format!("bad number '{s}'"),
                    })
                })
                .collect()
        };
        let predicate = match fields[2] {
            "default" => {
                nums(0)?;
                RegionPredicate::Default
            }
            "halfspace" => {
                let v = nums(4)?;
                RegionPredicate::HalfSpace {
                    normal: Vector3::new(v[0], v[1], v[2]),
                    offset: v[3],
                }
            }
            "sphere" => {
                let v = nums(4)?;
                RegionPredicate::Sphere {
                    center: Point3::new(v[0], v[1], v[2]),
                    radius: v[3],
                }
            }
            "band" => {
                let v = nums(8)?;
                RegionPredicate::Band {
                    center: Point3::new(v[0], v[1], v[2]),
                    normal: Vector3::new(v[3], v[4], v[5]),
                    ring_radius: v[6],
                    width: v[7],
                }
            }
            other => {
                return Err(EpError::RuleParse {
                    line,
                    msg: format!("unknown predicate '{other}'"),
                })
            }
        };
        rules.push(RegionRule { tag, predicate });
    }
    Ok(rules)
}

/// Tags every tet by its centroid; the last matching rule wins. Errors if any
/// tet matches no rule.
pub fn assign_regions(mesh: &TetMesh, rules: &[RegionRule]) -> Result<TetMesh, EpError> {
    let mut regions = Vec::with_capacity(mesh.tet_count());
    let mut untagged = Vec::new();
    for t in 0..mesh.tet_count() {
        let c = mesh.centroid(t);
        let mut tag = None;
        for rule in rules {
            if rule.predicate.matches(&c) {
                tag = Some(rule.tag);
            }
        }
        match tag {
            Some(tag) => regions.push(tag),
            None => {
                regions.push(AtrialRegion::RightAtrium);
                untagged.push(t);
            }
        }
    }
    if let Some(&first) = untagged.first() {
        return Err(EpError::UntaggedTets {
            count: untagged.len(),
            first,
        });
    }
    Ok(TetMesh {
        vertices: mesh.vertices.clone(),
        tets: mesh.tets.clone(),
        regions,
        fibers: mesh.fibers.clone(),
    })
}
