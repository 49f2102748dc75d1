//! Exact nearest-neighbor queries over a fixed point set.
//!
//! A uniform grid with ring-by-ring search. Results are exact — identical to
//! a brute-force scan including tie-breaking by lowest index — because rings
//! are expanded until the remaining cells provably cannot contain a closer
//! point. Approximate answers are not acceptable here: correspondences feed
//! Procrustes and the GP fits.

use mesh_core::Point3;

pub struct PointGrid {
    points: Vec<Point3<f64>>,
    origin: Point3<f64>,
    cell: f64,
    dims: [i64; 3],
    bins: Vec<Vec<u32>>,
}

impl PointGrid {
    pub fn build(points: &[Point3<f64>]) -> PointGrid {
        assert!(!points.is_empty(), "cannot index an empty point set");
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let extent = (hi - lo).amax().max(1e-12);
        // Aim for a few points per cell.
        let per_axis = ((points.len() as f64).cbrt().ceil() as i64).max(1);
        let cell = extent / per_axis as f64;
        let dims = [
            ((hi.x - lo.x) / cell).floor() as i64 + 1,
            ((hi.y - lo.y) / cell).floor() as i64 + 1,
            ((hi.z - lo.z) / cell).floor() as i64 + 1,
        ];
        let mut bins = vec![Vec::new(); (dims[0] * dims[1] * dims[2]) as usize];
        let grid = |p: &Point3<f64>| -> [i64; 3] {
            [
                (((p.x - lo.x) / cell).floor() as i64).clamp(0, dims[0] - 1),
                (((p.y - lo.y) / cell).floor() as i64).clamp(0, dims[1] - 1),
                (((p.z - lo.z) / cell).floor() as i64).clamp(0, dims[2] - 1),
            ]
        };
        for (i, p) in points.iter().enumerate() {
            let c = grid(p);
            bins[(c[0] * dims[1] * dims[2] + c[1] * dims[2] + c[2]) as usize].push(i as u32);
        }
        PointGrid {
            points: points.to_vec(),
            origin: lo,
            cell,
            dims,
            bins,
        }
    }

    fn cell_of(&self, p: &Point3<f64>) -> [i64; 3] {
        [
            (((p.x - self.origin.x) / self.cell).floor() as i64).clamp(0, self.dims[0] - 1),
            (((p.y - self.origin.y) / self.cell).floor() as i64).clamp(0, self.dims[1] - 1),
            (((p.z - self.origin.z) / self.cell).floor() as i64).clamp(0, self.dims[2] - 1),
        ]
    }

    fn bin(&self, c: [i64; 3]) -> &[u32] {
        &self.bins[(c[0] * self.dims[1] * self.dims[2] + c[1] * self.dims[2] + c[2]) as usize]
    }

    /// Index and squared distance of the nearest point; ties by lowest index.
    pub fn nearest(&self, q: &Point3<f64>) -> (u32, f64) {
        let c = self.cell_of(q);
        let mut best: Option<(u32, f64)> = None;
        let max_ring = self.dims.iter().max().copied().unwrap_or(1);

        for ring in 0..=max_ring {
            self.scan_ring(q, c, ring, &mut best);

            if let Some((_, best_d2)) = best {
                // Margin from q to the boundary of the box of cells covered
                // through this ring; anything beyond is at least that far.
                let lo = [
                    self.origin.x + (c[0] - ring) as f64 * self.cell,
                    self.origin.y + (c[1] - ring) as f64 * self.cell,
                    self.origin.z + (c[2] - ring) as f64 * self.cell,
                ];
                let hi = [
                    self.origin.x + (c[0] + ring + 1) as f64 * self.cell,
                    self.origin.y + (c[1] + ring + 1) as f64 * self.cell,
                    self.origin.z + (c[2] + ring + 1) as f64 * self.cell,
                ];
                let qs = [q.x, q.y, q.z];
                let margin = (0..3)
                    .map(|i| (qs[i] - lo[i]).min(hi[i] - qs[i]))
                    .fold(f64::INFINITY, f64::min);
                // Strict: a point exactly at the margin could still tie with
                // a lower index, so only stop once nothing can tie or beat.
                if margin >= 0.0 && margin * margin > best_d2 {
                    break;
                }
            }
        }
        best.expect("non-empty grid always yields a nearest point")
    }

    fn scan_ring(&self, q: &Point3<f64>, c: [i64; 3], ring: i64, best: &mut Option<(u32, f64)>) {
        let lo = [
            (c[0] - ring).max(0),
            (c[1] - ring).max(0),
            (c[2] - ring).max(0),
        ];
        let hi = [
            (c[0] + ring).min(self.dims[0] - 1),
            (c[1] + ring).min(self.dims[1] - 1),
            (c[2] + ring).min(self.dims[2] - 1),
        ];
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    let cheb = (x - c[0]).abs().max((y - c[1]).abs()).max((z - c[2]).abs());
                    if cheb != ring {
                        continue;
                    }
                    for &i in self.bin([x, y, z]) {
                        let d2 = (self.points[i as usize] - q).norm_squared();
                        let better = match *best {
                            None => true,
                            Some((bi, bd2)) => d2 < bd2 || (d2 == bd2 && i < bi),
                        };
                        if better {
                            *best = Some((i, d2));
                        }
                    }
                }
            }
        }
    }
}
