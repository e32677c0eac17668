//! Uniform-grid spatial index over 3D points.
//!
//! Points are bucketed by `floor(p / cell)` and stored contiguously per cell,
//! so a radius query with `radius <= cell` touches exactly the 27 cells
//! around the query.

use std::cell::Cell;

use rustc_hash::{FxHashMap, FxHashSet};

type CellKey = [i64; 3];

#[derive(Debug, Clone)]
pub struct UniformGrid {
    cell: f64,
    /// Points in cell order.
    points: Vec<[f64; 3]>,
    /// Original index of each entry in `points`.
    ids: Vec<u32>,
    cells: FxHashMap<CellKey, (u32, u32)>,
    lo: CellKey,
    hi: CellKey,
}

fn key_of(p: &[f64; 3], cell: f64) -> CellKey {
    p.map(|c| (c / cell).floor() as i64)
}

#[inline]
pub(crate) fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

impl UniformGrid {
    pub fn new(points: &[[f64; 3]], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "grid cell size must be positive");
        assert!(points.len() <= u32::MAX as usize);
        let mut keyed: Vec<(CellKey, u32)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (key_of(p, cell), i as u32))
            .collect();
        keyed.sort_unstable();

        let mut cells = FxHashMap::default();
        cells.reserve(keyed.len() / 2);
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        let mut start = 0;
        while start < keyed.len() {
            let key = keyed[start].0;
            let mut end = start + 1;
            while end < keyed.len() && keyed[end].0 == key {
                end += 1;
            }
            cells.insert(key, (start as u32, end as u32));
            for a in 0..3 {
                lo[a] = lo[a].min(key[a]);
                hi[a] = hi[a].max(key[a]);
            }
            start = end;
        }
        let ids: Vec<u32> = keyed.iter().map(|&(_, i)| i).collect();
        let points = ids.iter().map(|&i| points[i as usize]).collect();
        Self {
            cell,
            points,
            ids,
            cells,
            lo,
            hi,
        }
    }

    #[inline]
    fn visit_cell(&self, key: &CellKey, q: &[f64; 3], f: &mut impl FnMut(u32, f64)) {
        if let Some(&(s, e)) = self.cells.get(key) {
            for k in s as usize..e as usize {
                f(self.ids[k], dist2(q, &self.points[k]));
            }
        }
    }

    /// Calls `f(index, squared_distance)` for every point in the cells that
    /// can hold points within `radius` of `q`. Candidates are not filtered by
    /// distance; callers apply their own (strict or non-strict) test.
    pub fn for_each_candidate(&self, q: &[f64; 3], radius: f64, mut f: impl FnMut(u32, f64)) {
        let reach = (radius / self.cell).ceil().max(1.0) as i64;
        let c = key_of(q, self.cell);
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    self.visit_cell(&[c[0] + dx, c[1] + dy, c[2] + dz], q, &mut f);
                }
            }
        }
    }

    /// Squared distances from `q` to its nearest point and to its nearest
    /// point at nonzero distance, skipping the entry with index `skip`.
    pub fn nearest(&self, q: &[f64; 3], skip: u32) -> (f64, f64) {
        let c = key_of(q, self.cell);
        let max_shell = (0..3)
            .map(|a| (c[a] - self.lo[a]).abs().max((self.hi[a] - c[a]).abs()))
            .max()
            .unwrap_or(0);
        let best = Cell::new(f64::INFINITY);
        let best_nonzero = Cell::new(f64::INFINITY);
        let mut visit = |i: u32, d2: f64| {
            if i == skip {
                return;
            }
            best.set(best.get().min(d2));
            if d2 > 0.0 {
                best_nonzero.set(best_nonzero.get().min(d2));
            }
        };
        for r in 0..=max_shell {
            for dx in -r..=r {
                for dy in -r..=r {
                    let edge = dx.abs() == r || dy.abs() == r;
                    if edge {
                        for dz in -r..=r {
                            self.visit_cell(&[c[0] + dx, c[1] + dy, c[2] + dz], q, &mut visit);
                        }
                    } else {
                        self.visit_cell(&[c[0] + dx, c[1] + dy, c[2] - r], q, &mut visit);
                        if r > 0 {
                            self.visit_cell(&[c[0] + dx, c[1] + dy, c[2] + r], q, &mut visit);
                        }
                    }
                }
            }
            // Anything in shell r+1 is at least r cells away.
            let bound = (r as f64) * self.cell;
            if bound * bound >= best_nonzero.get() {
                break;
            }
        }
        (best.get(), best_nonzero.get())
    }
}

/// Picks a cell size for nearest-neighbour search that keeps the average
/// occupied cell small, whatever the intrinsic dimension of the data.
pub fn nn_cell_size(points: &[[f64; 3]]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    if !(extent > 0.0) {
        return 1.0;
    }
    let mut cell = extent / (points.len() as f64).cbrt();
    for _ in 0..8 {
        let occupied: FxHashSet<CellKey> = points.iter().map(|p| key_of(p, cell)).collect();
        let avg = points.len() as f64 / occupied.len() as f64;
        if avg <= 8.0 {
            break;
        }
        cell /= (avg / 2.0).sqrt();
    }
    cell
}
