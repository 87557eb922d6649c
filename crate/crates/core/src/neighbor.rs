//! Uniform-grid cell list with cell size equal to the kernel support radius,
//! so the 3^d surrounding cells always contain every neighbor.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::Vec3;

#[derive(Debug, Clone)]
pub struct CellIndex {
    cell_size: f64,
    origin: Vec3,
    dims: [usize; 3],
    /// `cell_start[c]..cell_start[c + 1]` indexes into `sorted`.
    cell_start: Vec<usize>,
    sorted: Vec<usize>,
    positions: Vec<Vec3>,
}

/// One entry of a neighbor query: id, displacement `r_a - r_b`, distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborHit {
    pub id: usize,
    pub disp: Vec3,
    pub dist: f64,
}

pub fn build_index(positions: &[Vec3], cell_size: f64) -> Result<CellIndex> {
    CellIndex::build(positions, cell_size)
}

impl CellIndex {
    pub fn build(positions: &[Vec3], cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Invalid(format!("cell size must be positive, got {cell_size}")));
        }
        for (i, p) in positions.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::NonFinitePosition { particle: i, x: p.x, y: p.y, z: p.z });
            }
        }
        let (mut lo, mut hi) = (Vec3::repeat(0.0), Vec3::repeat(0.0));
        if let Some(first) = positions.first() {
            lo = *first;
            hi = *first;
            for p in positions {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
        }
        let mut dims = [1usize; 3];
        for k in 0..3 {
            dims[k] = ((hi[k] - lo[k]) / cell_size).floor() as usize + 1;
        }
        let ncells = dims[0] * dims[1] * dims[2];
        let mut index = CellIndex {
            cell_size,
            origin: lo,
            dims,
            cell_start: vec![0; ncells + 1],
            sorted: vec![0; positions.len()],
            positions: positions.to_vec(),
        };
        // counting sort by cell keeps ids ascending inside each bucket
        let cells: Vec<usize> = positions.iter().map(|p| index.cell_of(p)).collect();
        for &c in &cells {
            index.cell_start[c + 1] += 1;
        }
        for c in 0..ncells {
            index.cell_start[c + 1] += index.cell_start[c];
        }
        let mut fill = index.cell_start.clone();
        for (i, &c) in cells.iter().enumerate() {
            index.sorted[fill[c]] = i;
            fill[c] += 1;
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    fn coords(&self, p: &Vec3) -> [usize; 3] {
        let mut c = [0usize; 3];
        for k in 0..3 {
            let v = ((p[k] - self.origin[k]) / self.cell_size).floor();
            c[k] = (v.max(0.0) as usize).min(self.dims[k] - 1);
        }
        c
    }

    fn cell_of(&self, p: &Vec3) -> usize {
        let c = self.coords(p);
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Particles of the buckets in cell `c`.
    pub fn bucket(&self, c: usize) -> &[usize] {
        &self.sorted[self.cell_start[c]..self.cell_start[c + 1]]
    }

    pub fn num_cells(&self) -> usize {
        self.cell_start.len() - 1
    }

    /// Calls `f(b, r_a - r_b, |r_a - r_b|)` for every `b != a` strictly
    /// inside the support radius. Visit order is deterministic.
    pub fn for_each_neighbor(&self, a: usize, mut f: impl FnMut(usize, Vec3, f64)) {
        let pa = self.positions[a];
        let c = self.coords(&pa);
        let r2max = self.cell_size * self.cell_size;
        let range = |k: usize| c[k].saturating_sub(1)..=(c[k] + 1).min(self.dims[k] - 1);
        for z in range(2) {
            for y in range(1) {
                let row = (z * self.dims[1] + y) * self.dims[0];
                for x in range(0) {
                    for &b in self.bucket(row + x) {
                        if b == a {
                            continue;
                        }
                        let d = pa - self.positions[b];
                        let d2 = d.norm_squared();
                        if d2 < r2max {
                            f(b, d, d2.sqrt());
                        }
                    }
                }
            }
        }
    }

    pub fn neighbors(&self, a: usize) -> Vec<NeighborHit> {
        let mut out = Vec::new();
        self.for_each_neighbor(a, |id, disp, dist| out.push(NeighborHit { id, disp, dist }));
        out
    }
}

/// Cached pair data used by the solver passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub j: usize,
    /// r_a - r_j
    pub r: Vec3,
    pub dist: f64,
    pub w: f64,
    /// grad_a W_aj
    pub grad: Vec3,
}

/// Compressed per-particle neighbor rows with kernel values precomputed.
#[derive(Debug, Clone, Default)]
pub struct NeighborList {
    start: Vec<usize>,
    entries: Vec<Neighbor>,
}

impl NeighborList {
    /// Builds rows for every particle in the index. `keep(a, b)` filters
    /// pairs (the solver drops wall-wall pairs it never reads).
    pub fn build<F>(index: &CellIndex, kernel: &KernelSpec, keep: F) -> Self
    where
        F: Fn(usize, usize) -> bool + Sync,
    {
        let rows: Vec<Vec<Neighbor>> = (0..index.len())
            .into_par_iter()
            .map(|a| {
                let mut row = Vec::with_capacity(64);
                index.for_each_neighbor(a, |j, r, dist| {
                    if keep(a, j) {
                        row.push(Neighbor {
                            j,
                            r,
                            dist,
                            w: kernel.value(dist),
                            grad: r * (kernel.derivative(dist) / dist),
                        });
                    }
                });
                row
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn from_rows(rows: Vec<Vec<Neighbor>>) -> Self {
        let mut start = Vec::with_capacity(rows.len() + 1);
        start.push(0);
        let total: usize = rows.iter().map(Vec::len).sum();
        let mut entries = Vec::with_capacity(total);
        for row in rows {
            entries.extend(row);
            start.push(entries.len());
        }
        Self { start, entries }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            start: vec![0; n + 1],
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.start.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn of(&self, a: usize) -> &[Neighbor] {
        &self.entries[self.start[a]..self.start[a + 1]]
    }

    pub fn total_pairs(&self) -> usize {
        self.entries.len()
    }
}


/// Candidate pairs within `support + skin`, reused across steps until some
/// particle has moved more than half the skin since the last build. Every
/// pair that can be inside the support is guaranteed to be a candidate, so
/// [`VerletCache::refresh`] yields exactly the pairs a fresh build would
/// (rows ordered by neighbor id).
#[derive(Debug, Clone)]
pub struct VerletCache {
    skin: f64,
    start: Vec<usize>,
    ids: Vec<usize>,
    reference: Vec<Vec3>,
    pub rebuilds: u64,
}

impl VerletCache {
    pub fn build<F>(positions: &[Vec3], kernel: &KernelSpec, skin: f64, keep: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> bool + Sync,
    {
        let mut cache = Self {
            skin,
            start: Vec::new(),
            ids: Vec::new(),
            reference: Vec::new(),
            rebuilds: 0,
        };
        cache.rebuild(positions, kernel, keep)?;
        Ok(cache)
    }

    fn rebuild<F>(&mut self, positions: &[Vec3], kernel: &KernelSpec, keep: F) -> Result<()>
    where
        F: Fn(usize, usize) -> bool + Sync,
    {
        let index = CellIndex::build(positions, kernel.support_radius + self.skin)?;
        let rows: Vec<Vec<usize>> = (0..positions.len())
            .into_par_iter()
            .map(|a| {
                let mut row = Vec::with_capacity(96);
                index.for_each_neighbor(a, |j, _, _| {
                    if keep(a, j) {
                        row.push(j);
                    }
                });
                row.sort_unstable();
                row
            })
            .collect();
        self.start.clear();
        self.start.push(0);
        self.ids.clear();
        for row in rows {
            self.ids.extend(row);
            self.start.push(self.ids.len());
        }
        self.reference = positions.to_vec();
        self.rebuilds += 1;
        Ok(())
    }

    /// True once any particle has moved more than half the skin.
    pub fn is_stale(&self, positions: &[Vec3]) -> bool {
        if positions.len() != self.reference.len() {
            return true;
        }
        let lim2 = 0.25 * self.skin * self.skin;
        positions.iter().zip(&self.reference).any(|(p, q)| (p - q).norm_squared() > lim2)
    }

    /// Rebuilds the candidates if stale, then evaluates the kernel on the
    /// current positions.
    pub fn refresh<F>(&mut self, positions: &[Vec3], kernel: &KernelSpec, keep: F) -> Result<NeighborList>
    where
        F: Fn(usize, usize) -> bool + Sync,
    {
        let mut out = NeighborList::default();
        self.refresh_into(positions, kernel, keep, &mut out)?;
        Ok(out)
    }

    /// [`VerletCache::refresh`] reusing the storage of `out`.
    pub fn refresh_into<F>(&mut self, positions: &[Vec3], kernel: &KernelSpec, keep: F, out: &mut NeighborList) -> Result<()>
    where
        F: Fn(usize, usize) -> bool + Sync,
    {
        if self.is_stale(positions) {
            self.rebuild(positions, kernel, keep)?;
        }
        let r2max = kernel.support_radius * kernel.support_radius;
        let NeighborList { start, entries } = out;
        start.clear();
        entries.clear();
        start.push(0);
        for (a, pa) in positions.iter().enumerate() {
            for &j in &self.ids[self.start[a]..self.start[a + 1]] {
                let r = pa - positions[j];
                let d2 = r.norm_squared();
                if d2 < r2max {
                    let dist = d2.sqrt();
                    entries.push(Neighbor {
                        j,
                        r,
                        dist,
                        w: kernel.value(dist),
                        grad: r * (kernel.derivative(dist) / dist),
                    });
                }
            }
            start.push(entries.len());
        }
        Ok(())
    }
}
