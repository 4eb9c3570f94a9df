use serde::{Deserialize, Serialize};

use crate::error::{invalid, NcczError, Result};

/// Largest supported finest-level cell counts.
pub const MAX_CELLS_1D: usize = 1 << 15;
pub const MAX_CELLS_2D: usize = 1 << 14;

/// Dyadic grid on the box [0, 2^{−k_min})^d with finest cells of side 2^{−k_max}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub d: usize,
    pub k_min: i32,
    pub k_max: i32,
}

impl DyadicGrid {
    pub fn new(d: usize, k_min: i32, k_max: i32) -> Result<Self> {
        if d != 1 && d != 2 {
            return invalid(format!("dimension must be 1 or 2, got {d}"));
        }
        if !(k_min <= 0 && 0 < k_max) {
            return invalid(format!("need k_min <= 0 < k_max, got k_min={k_min}, k_max={k_max}"));
        }
        let span = (k_max - k_min) as u32;
        let cap = if d == 1 { MAX_CELLS_1D } else { MAX_CELLS_2D };
        if span as usize * d > cap.trailing_zeros() as usize {
            return invalid(format!("grid with {} levels in d={d} exceeds the {cap}-cell cap", span));
        }
        Ok(DyadicGrid { d, k_min, k_max })
    }

    /// Same box, one level finer.
    pub fn refined(&self) -> Result<Self> {
        DyadicGrid::new(self.d, self.k_min, self.k_max + 1)
    }

    #[inline]
    pub fn per_axis(&self) -> usize {
        1usize << (self.k_max - self.k_min)
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.per_axis().pow(self.d as u32)
    }

    #[inline]
    pub fn cell_side(&self) -> f64 {
        2f64.powi(-self.k_max)
    }

    #[inline]
    pub fn box_side(&self) -> f64 {
        2f64.powi(-self.k_min)
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.cell_side().powi(self.d as i32)
    }

    pub fn box_volume(&self) -> f64 {
        self.box_side().powi(self.d as i32)
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    pub fn check_level(&self, k: i32) -> Result<()> {
        if k < self.k_min || k > self.k_max {
            return Err(NcczError::LevelOutOfRange { level: k, k_min: self.k_min, k_max: self.k_max });
        }
        Ok(())
    }

    /// Per-axis integer index of a cell (second entry 0 in d=1).
    #[inline]
    pub fn cell_index(&self, cell: usize) -> [usize; 2] {
        if self.d == 1 {
            [cell, 0]
        } else {
            let p = self.per_axis();
            [cell % p, cell / p]
        }
    }

    #[inline]
    pub fn cell_id(&self, idx: [usize; 2]) -> usize {
        if self.d == 1 {
            idx[0]
        } else {
            idx[0] + self.per_axis() * idx[1]
        }
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let h = self.cell_side();
        let idx = self.cell_index(cell);
        let mut c = [0.0; 2];
        for a in 0..self.d {
            c[a] = (idx[a] as f64 + 0.5) * h;
        }
        c
    }

    /// Lower and upper corner of a finest cell.
    pub fn cell_rect(&self, cell: usize) -> ([f64; 2], [f64; 2]) {
        let h = self.cell_side();
        let idx = self.cell_index(cell);
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for a in 0..self.d {
            lo[a] = idx[a] as f64 * h;
            hi[a] = lo[a] + h;
        }
        (lo, hi)
    }

    /// Cubes per axis at level k.
    #[inline]
    pub fn cubes_per_axis(&self, k: i32) -> usize {
        1usize << (k - self.k_min)
    }

    #[inline]
    pub fn cube_count(&self, k: i32) -> usize {
        self.cubes_per_axis(k).pow(self.d as u32)
    }

    /// Flat id of the level-k cube containing a finest cell.
    #[inline]
    pub fn cube_id_of_cell(&self, cell: usize, k: i32) -> usize {
        let shift = (self.k_max - k) as usize;
        let idx = self.cell_index(cell);
        if self.d == 1 {
            idx[0] >> shift
        } else {
            (idx[0] >> shift) + self.cubes_per_axis(k) * (idx[1] >> shift)
        }
    }

    pub fn cube_of_cell(&self, cell: usize, k: i32) -> DyadicCube {
        let shift = (self.k_max - k) as usize;
        let idx = self.cell_index(cell);
        let mut index = [0i64; 2];
        for a in 0..self.d {
            index[a] = (idx[a] >> shift) as i64;
        }
        DyadicCube { d: self.d, level: k, index }
    }

    pub fn cube_from_id(&self, k: i32, id: usize) -> DyadicCube {
        let p = self.cubes_per_axis(k);
        let index = if self.d == 1 { [id as i64, 0] } else { [(id % p) as i64, (id / p) as i64] };
        DyadicCube { d: self.d, level: k, index }
    }

    pub fn cube_id(&self, q: &DyadicCube) -> usize {
        if self.d == 1 {
            q.index[0] as usize
        } else {
            q.index[0] as usize + self.cubes_per_axis(q.level) * q.index[1] as usize
        }
    }

    /// Finest cells of a cube, in ascending cell id order.
    pub fn cells_of_cube(&self, q: &DyadicCube) -> Vec<usize> {
        let r = 1usize << (self.k_max - q.level);
        let x0 = q.index[0] as usize * r;
        if self.d == 1 {
            (x0..x0 + r).collect()
        } else {
            let y0 = q.index[1] as usize * r;
            let mut out = Vec::with_capacity(r * r);
            for y in y0..y0 + r {
                for x in x0..x0 + r {
                    out.push(self.cell_id([x, y]));
                }
            }
            out
        }
    }

    /// Finest cells y with |idx_k(y) − idx_k(Q)|∞ ≤ s, i.e. y in (2s+1)Q, clipped to the box.
    pub fn cells_in_dilation(&self, q: &DyadicCube, s: usize) -> Vec<usize> {
        let p = self.cubes_per_axis(q.level) as i64;
        let s = s as i64;
        let lo0 = (q.index[0] - s).max(0);
        let hi0 = (q.index[0] + s).min(p - 1);
        let r = 1usize << (self.k_max - q.level);
        let xs = (lo0 as usize * r)..((hi0 + 1) as usize * r);
        if self.d == 1 {
            xs.collect()
        } else {
            let lo1 = (q.index[1] - s).max(0);
            let hi1 = (q.index[1] + s).min(p - 1);
            let mut out = Vec::new();
            for y in (lo1 as usize * r)..((hi1 + 1) as usize * r) {
                for x in xs.clone() {
                    out.push(self.cell_id([x, y]));
                }
            }
            out
        }
    }

    /// Finest cell containing a point of the box.
    pub fn locate(&self, x: &[f64]) -> Result<usize> {
        let h = self.cell_side();
        let p = self.per_axis();
        let mut idx = [0usize; 2];
        for a in 0..self.d {
            let t = (x[a] / h).floor();
            if !(t >= 0.0 && (t as usize) < p) {
                return Err(NcczError::PointOutsideBox(x[..self.d].to_vec()));
            }
            idx[a] = t as usize;
        }
        Ok(self.cell_id(idx))
    }

    /// (Q_{x,k}, c_{x,k}).
    pub fn cube_query(&self, x: &[f64], k: i32) -> Result<(DyadicCube, [f64; 2])> {
        self.check_level(k)?;
        let cell = self.locate(x)?;
        let q = self.cube_of_cell(cell, k);
        let c = q.center();
        Ok((q, c))
    }
}

/// Dyadic cube of side 2^{−level}: ∏ [index·ℓ, (index+1)·ℓ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    pub d: usize,
    pub level: i32,
    pub index: [i64; 2],
}

impl DyadicCube {
    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.d as i32)
    }

    pub fn lo(&self) -> [f64; 2] {
        let l = self.side();
        let mut c = [0.0; 2];
        for a in 0..self.d {
            c[a] = self.index[a] as f64 * l;
        }
        c
    }

    pub fn center(&self) -> [f64; 2] {
        let l = self.side();
        let mut c = [0.0; 2];
        for a in 0..self.d {
            c[a] = (self.index[a] as f64 + 0.5) * l;
        }
        c
    }

    pub fn parent(&self) -> DyadicCube {
        let mut index = self.index;
        for a in 0..self.d {
            index[a] = self.index[a].div_euclid(2);
        }
        DyadicCube { d: self.d, level: self.level - 1, index }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let l = self.side();
        (0..self.d).all(|a| {
            let lo = self.index[a] as f64 * l;
            x[a] >= lo && x[a] < lo + l
        })
    }

    /// iQ for odd i.
    pub fn dilate(&self, i: usize) -> Result<DilatedCube> {
        if i % 2 == 0 {
            return invalid(format!("dilation factor must be odd, got {i}"));
        }
        Ok(DilatedCube { d: self.d, center: self.center(), half_width: i as f64 * self.side() / 2.0 })
    }
}

/// Cube with the same center and i times the side; half-open like dyadic cubes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilatedCube {
    pub d: usize,
    pub center: [f64; 2],
    pub half_width: f64,
}

impl DilatedCube {
    pub fn lo(&self) -> [f64; 2] {
        let mut c = self.center;
        for a in 0..self.d {
            c[a] -= self.half_width;
        }
        c
    }

    pub fn hi(&self) -> [f64; 2] {
        let mut c = self.center;
        for a in 0..self.d {
            c[a] += self.half_width;
        }
        c
    }

    /// Unclipped membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.d).all(|a| x[a] >= self.center[a] - self.half_width && x[a] < self.center[a] + self.half_width)
    }
}
