//! One-sided activation-time bound against a graph shortest-path oracle.
//!
//! Dijkstra on the 2-ring-augmented vertex graph with anisotropic edge
//! weights over-estimates the continuous first-arrival time (paths are
//! restricted to vertex polylines), so the solver's times must come in at or
//! below it, with a small slack for the oracle's metrication error.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use ep_sim::conduction::{ConductionTable, RegionConduction};
use ep_sim::eikonal::fast_march;
use ep_sim::tetmesh::{AtrialRegion, TetMesh};
use ep_sim::wall::{extrude_wall, WallConfig};
use mesh_core::primitives::bumpy_sphere;
use mesh_core::Vector3;
use nalgebra::Matrix3;

struct Item(f64, u32);
impl PartialEq for Item {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 && self.1 == other.1
    }
}
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Dijkstra over tet edges plus all 2-ring pairs, straight-ray weights under
/// the homogeneous inverse tensor.
fn dijkstra_two_ring(mesh: &TetMesh, inv: &Matrix3<f64>, seeds: &[u32]) -> Vec<f64> {
    let nv = mesh.vertex_count();
    let mut neighbors: Vec<HashSet<u32>> = vec![HashSet::new(); nv];
    for tet in &mesh.tets {
        for i in 0..4 {
            for j in (i + 1)..4 {
                neighbors[tet[i] as usize].insert(tet[j]);
                neighbors[tet[j] as usize].insert(tet[i]);
            }
        }
    }
    let mut edges: Vec<HashMap<u32, f64>> = vec![HashMap::new(); nv];
    let time = |a: u32, b: u32| -> f64 {
        let d = mesh.vertices[b as usize] - mesh.vertices[a as usize];
        (d.transpose() * inv * d)[0].sqrt()
    };
    for u in 0..nv as u32 {
        let mut reach: HashSet<u32> = neighbors[u as usize].clone();
        for &n in &neighbors[u as usize] {
            for &nn in &neighbors[n as usize] {
                if nn != u {
                    reach.insert(nn);
                }
            }
        }
        for w in reach {
            edges[u as usize].insert(w, time(u, w));
        }
    }

    let mut dist = vec![f64::INFINITY; nv];
    let mut heap = BinaryHeap::new();
    for &s in seeds {
        dist[s as usize] = 0.0;
        heap.push(Item(0.0, s));
    }
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        for (&w, &cost) in &edges[u as usize] {
            let nd = d + cost;
            if nd < dist[w as usize] {
                dist[w as usize] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    dist
}

#[test]
fn fast_march_is_bounded_by_the_dijkstra_oracle() {
    // Irregular blob, homogeneous anisotropic tensor (single region, uniform
    // fibers along x, ar = 2).
    let endo = bumpy_sphere(
        18.0,
        2,
        &[
            (Vector3::new(1.0, 0.3, 0.1), 5.0, 0.7),
            (Vector3::new(-0.6, 0.7, -0.2), 4.0, 0.6),
        ],
    );
    let mesh = extrude_wall(
        &endo,
        &WallConfig {
            thickness: 3.0,
            target_edge: 1.5,
        },
    )
    .unwrap();

    let mut table = ConductionTable::default();
    for region in AtrialRegion::ALL {
        table.set(
            region,
            RegionConduction {
                transverse_velocity: 500.0,
                anisotropy_ratio: 2.0,
            },
        );
    }
    let seeds = vec![0u32];
    let map = fast_march(&mesh, &table, &seeds).unwrap();

    let cv = 500.0 / 1000.0;
    let cl = 2.0 * cv;
    let f = Vector3::x();
    let ff = f * f.transpose();
    let inv = ff * (1.0 / (cl * cl)) + (Matrix3::identity() - ff) * (1.0 / (cv * cv));
    let oracle = dijkstra_two_ring(&mesh, &inv, &seeds);

    let mut checked = 0;
    for v in 0..mesh.vertex_count() {
        if !oracle[v].is_finite() {
            continue;
        }
        assert!(
            map.lat[v] <= oracle[v] * 1.02 + 1e-9,
            "vertex {v}: fast march {} vs oracle {}",
            map.lat[v],
            oracle[v]
        );
        checked += 1;
    }
    assert!(checked > 400, "only {checked} vertices checked");
}
