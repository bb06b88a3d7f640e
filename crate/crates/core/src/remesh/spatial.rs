//! Uniform-grid index over a fixed triangle set for closest-point queries.

use crate::Vec3;

/// Closest point to `p` on triangle `abc` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

pub fn closest_point_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    a + ab * ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
}

pub struct TriangleGrid {
    tris: Vec<[Vec3; 3]>,
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

const MAX_CELLS_PER_TRIANGLE: f64 = 4.0;

impl TriangleGrid {
    pub fn new(tris: Vec<[Vec3; 3]>, cell_hint: f64) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for t in &tris {
            for p in t {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
        }
        let extent = (hi - lo).map(|x| x.max(1e-9));
        let volume = extent.x * extent.y * extent.z;
        let min_cell = (volume / (MAX_CELLS_PER_TRIANGLE * tris.len().max(1) as f64)).cbrt();
        let cell = cell_hint.max(min_cell).max(1e-9);
        let dims = [0, 1, 2].map(|k| ((extent[k] / cell).floor() as usize + 1).max(1));
        let mut grid = TriangleGrid {
            tris,
            origin: lo,
            cell,
            dims,
            cells: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
        };
        for (i, t) in grid.tris.iter().enumerate() {
            let tlo = t[0].inf(&t[1]).inf(&t[2]);
            let thi = t[0].sup(&t[1]).sup(&t[2]);
            let a = grid.cell_of(&tlo);
            let b = grid.cell_of(&thi);
            for x in a[0]..=b[0] {
                for y in a[1]..=b[1] {
                    for z in a[2]..=b[2] {
                        let id = grid.index([x, y, z]);
                        grid.cells[id].push(i as u32);
                    }
                }
            }
        }
        grid
    }

    fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|k| {
            let f = ((p[k] - self.origin[k]) / self.cell).floor();
            (f.max(0.0) as usize).min(self.dims[k] - 1)
        })
    }

    fn index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Closest point on the indexed surface. Cells are visited in growing
    /// Chebyshev rings; any triangle first seen in ring r + 1 lies at least
    /// r cells away, which bounds the search.
    pub fn closest_point(&self, p: &Vec3) -> Vec3 {
        let c = self.cell_of(p);
        let max_ring = *self.dims.iter().max().unwrap();
        let mut best = (f64::INFINITY, *p);
        for r in 0..=max_ring {
            let lo = c.map(|x| x.saturating_sub(r));
            let hi = [0, 1, 2].map(|k| (c[k] + r).min(self.dims[k] - 1));
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        let ring = [x.abs_diff(c[0]), y.abs_diff(c[1]), z.abs_diff(c[2])];
                        if ring.into_iter().max().unwrap() != r {
                            continue;
                        }
                        for &t in &self.cells[self.index([x, y, z])] {
                            let [a, b, cc] = &self.tris[t as usize];
                            let q = closest_point_on_triangle(p, a, b, cc);
                            let d = (q - p).norm_squared();
                            if d < best.0 {
                                best = (d, q);
                            }
                        }
                    }
                }
            }
            let reach = r as f64 * self.cell;
            if best.0.is_finite() && best.0 <= reach * reach {
                break;
            }
        }
        best.1
    }
}
