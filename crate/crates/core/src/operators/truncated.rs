//! Truncated singular integrals T_ε and the lacunary pieces T_{φ,i}, T^φ_j, T^φ_{ε,j}.

use rayon::prelude::*;

use super::rules::{apply_dense, convolution_tables, dense_weights, Radial, WeightTable};
use crate::algebra::{spectral, C64};
use crate::dyadic::{DyadicGrid, OperatorField};
use crate::error::{invalid, NcczError, Result};
use crate::kernels::{Kernel, PartitionFamily};

#[derive(Clone, Debug)]
enum Table {
    Conv(WeightTable),
    Dense(Vec<Vec<C64>>),
}

/// ∫ k(x,y)ρ(|x−y|) f(y) dy on a fixed grid.
#[derive(Clone, Debug)]
pub struct RadialOperator {
    pub radial: Radial,
    table: Table,
}

impl RadialOperator {
    pub fn apply(&self, f: &OperatorField) -> OperatorField {
        match &self.table {
            Table::Conv(t) => t.apply_auto(f, None),
            Table::Dense(w) => apply_dense(w, f),
        }
    }

    /// Apply when f vanishes off `support`.
    pub fn apply_sparse(&self, f: &OperatorField, support: &[usize]) -> OperatorField {
        match &self.table {
            Table::Conv(t) => t.apply_auto(f, Some(support)),
            _ => self.apply(f),
        }
    }

    pub fn weights(&self) -> Option<&WeightTable> {
        match &self.table {
            Table::Conv(t) => Some(t),
            Table::Dense(_) => None,
        }
    }

    /// Weight coupling cell x to cell y.
    pub fn weight(&self, grid: &DyadicGrid, x: usize, y: usize) -> C64 {
        match &self.table {
            Table::Conv(t) => {
                let a = grid.cell_index(x);
                let b = grid.cell_index(y);
                t.weight([(b[0] as i64 - a[0] as i64) as i32, (b[1] as i64 - a[1] as i64) as i32])
            }
            Table::Dense(w) => w[x][y],
        }
    }
}

pub fn build_operators(kernel: &Kernel, grid: &DyadicGrid, radials: &[Radial]) -> Result<Vec<RadialOperator>> {
    if kernel.is_convolution() {
        let tables = convolution_tables(kernel, grid, radials)?;
        Ok(radials.iter().zip(tables).map(|(&radial, t)| RadialOperator { radial, table: Table::Conv(t) }).collect())
    } else {
        radials.iter().map(|&radial| Ok(RadialOperator { radial, table: Table::Dense(dense_weights(kernel, grid, radial)?) })).collect()
    }
}

fn check_eps(grid: &DyadicGrid, eps: f64) -> Result<()> {
    let half = 0.5 * grid.cell_side();
    if !(eps >= half * (1.0 - 1e-12)) {
        return Err(NcczError::UnresolvableTruncation { eps, half_cell: half });
    }
    Ok(())
}

/// T_ε f(x) = ∫_{|x−y|>ε} k(x,y) f(y) dy at cell midpoints.
pub fn truncated_czo(kernel: &Kernel, f: &OperatorField, eps: f64) -> Result<OperatorField> {
    check_eps(f.grid(), eps)?;
    let ops = build_operators(kernel, f.grid(), &[Radial::Trunc(eps)])?;
    Ok(ops[0].apply(f))
}

/// Ladder ε_j = 2√d·2^{−j}, j = 0..=J.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationLadder {
    pub d: usize,
    pub epsilons: Vec<f64>,
}

impl TruncationLadder {
    /// Longest default ladder resolvable on the grid, J ≤ k_max − k_min.
    pub fn default_for(grid: &DyadicGrid) -> Self {
        let p = PartitionFamily::new(grid.d);
        let half = 0.5 * grid.cell_side();
        let cap = grid.k_max - grid.k_min;
        let mut j = 0;
        while j < cap && p.ladder_eps(j + 1) >= half {
            j += 1;
        }
        Self::lacunary(grid.d, j)
    }

    pub fn lacunary(d: usize, big_j: i32) -> Self {
        let p = PartitionFamily::new(d);
        TruncationLadder { d, epsilons: (0..=big_j).map(|j| p.ladder_eps(j)).collect() }
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    pub fn validate(&self, grid: &DyadicGrid) -> Result<()> {
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return invalid("ladder must be strictly decreasing");
        }
        if self.epsilons.len() as i32 > grid.k_max - grid.k_min + 1 {
            return invalid("ladder longer than the number of grid levels");
        }
        for &e in &self.epsilons {
            check_eps(grid, e)?;
        }
        Ok(())
    }
}

/// All operators of the lacunary reduction on one grid.
#[derive(Clone, Debug)]
pub struct LacunaryBank {
    pub grid: DyadicGrid,
    pub partition: PartitionFamily,
    pub ladder: TruncationLadder,
    /// Smallest scale index; Σ_{i ≥ i_min} φ_i = 1 on the box.
    pub i_min: i32,
    /// T_{φ,i}, i = i_min..J−1.
    pub pieces: Vec<RadialOperator>,
    /// T_{ε_j}.
    pub truncs: Vec<RadialOperator>,
    /// T^φ_{ε_j, j_{ε_j}}.
    pub boundary: Vec<RadialOperator>,
}

/// Fields of the lacunary reduction for one input.
#[derive(Clone, Debug)]
pub struct LacunaryFields {
    /// T_{φ,i} f, i = i_min..J−1.
    pub pieces: Vec<OperatorField>,
    /// T^φ_j f = Σ_{i<j} T_{φ,i} f, j = 0..=J.
    pub partial: Vec<OperatorField>,
    pub truncs: Vec<OperatorField>,
    pub boundary: Vec<OperatorField>,
}

impl LacunaryBank {
    pub fn new(kernel: &Kernel, grid: &DyadicGrid, ladder: TruncationLadder) -> Result<Self> {
        ladder.validate(grid)?;
        let partition = PartitionFamily::new(grid.d);
        let i_min = grid.k_min - 1;
        let js: Vec<i32> = ladder.epsilons.iter().map(|&e| partition.j_of_eps(e)).collect();
        let j_top = js.iter().copied().max().unwrap_or(0);
        let mut radials = Vec::new();
        for i in i_min..j_top {
            radials.push(Radial::Window(i, i));
        }
        for &e in &ladder.epsilons {
            radials.push(Radial::Trunc(e));
        }
        for (&e, &j) in ladder.epsilons.iter().zip(&js) {
            radials.push(Radial::Boundary { eps: e, a: i_min, b: j - 1 });
        }
        let mut ops = build_operators(kernel, grid, &radials)?;
        let nb = ladder.len();
        let boundary = ops.split_off(ops.len() - nb);
        let truncs = ops.split_off(ops.len() - nb);
        Ok(LacunaryBank { grid: *grid, partition, ladder, i_min, pieces: ops, truncs, boundary })
    }

    pub fn j_of(&self, idx: usize) -> i32 {
        self.partition.j_of_eps(self.ladder.epsilons[idx])
    }

    /// T_{φ,i}.
    pub fn piece(&self, i: i32) -> Option<&RadialOperator> {
        if i < self.i_min {
            return None;
        }
        self.pieces.get((i - self.i_min) as usize)
    }

    pub fn apply(&self, f: &OperatorField) -> LacunaryFields {
        let support = f.support();
        let pieces: Vec<OperatorField> = self.pieces.iter().map(|p| p.apply_sparse(f, &support)).collect();
        let partial = self.partial_sums(f, &pieces);
        let truncs = self.truncs.iter().map(|t| t.apply_sparse(f, &support)).collect();
        let boundary = self.boundary.iter().map(|t| t.apply_sparse(f, &support)).collect();
        LacunaryFields { pieces, partial, truncs, boundary }
    }

    /// T^φ_j f for each ladder index from the piece fields.
    pub fn partial_sums(&self, f: &OperatorField, pieces: &[OperatorField]) -> Vec<OperatorField> {
        (0..self.ladder.len())
            .map(|idx| {
                let j = self.j_of(idx);
                let mut acc = OperatorField::zeros(*f.grid(), f.dim());
                for i in self.i_min..j {
                    acc.add_assign(&pieces[(i - self.i_min) as usize]);
                }
                acc
            })
            .collect()
    }

    /// T^φ_j f only (no truncations or boundary pieces).
    pub fn apply_partial(&self, f: &OperatorField) -> Vec<OperatorField> {
        let support = f.support();
        let pieces: Vec<OperatorField> = self.pieces.iter().map(|p| p.apply_sparse(f, &support)).collect();
        self.partial_sums(f, &pieces)
    }

    /// T^φ_{ε_j, j_ε} f only.
    pub fn apply_boundary(&self, f: &OperatorField) -> Vec<OperatorField> {
        let support = f.support();
        self.boundary.iter().map(|t| t.apply_sparse(f, &support)).collect()
    }

    /// Make T_{φ,i} available for every i ≤ i_max.
    pub fn extend_pieces(&mut self, kernel: &Kernel, i_max: i32) -> Result<()> {
        let have = self.i_min + self.pieces.len() as i32;
        if i_max >= have {
            let radials: Vec<Radial> = (have..=i_max).map(|i| Radial::Window(i, i)).collect();
            self.pieces.extend(build_operators(kernel, &self.grid, &radials)?);
        }
        Ok(())
    }

    /// Largest i with T_{φ,i} available.
    pub fn i_max(&self) -> i32 {
        self.i_min + self.pieces.len() as i32 - 1
    }

    /// max_j max_x ‖T_{ε_j} f − T^φ_j f − T^φ_{ε_j,j} f‖ / (‖f‖_∞·C_size).
    pub fn telescoping_residual(&self, fields: &LacunaryFields, f: &OperatorField, c_size: f64) -> Result<f64> {
        let scale = f.norm(f64::INFINITY)? * c_size;
        let mut worst: f64 = 0.0;
        for idx in 0..self.ladder.len() {
            let r = fields.truncs[idx].sub(&fields.partial[idx]).sub(&fields.boundary[idx]);
            let m = r.values().par_iter().map(|v| v.max_abs()).collect::<Vec<_>>().into_iter().fold(0.0, f64::max);
            worst = worst.max(m);
        }
        Ok(if scale > 0.0 { worst / scale } else { worst })
    }
}

/// Smallest C with −C·m ⪯ x ⪯ C·m in every cell (m PSD).
pub fn sandwich_constant(x: &OperatorField, m: &OperatorField) -> Result<f64> {
    let per = x.values().par_iter().zip(m.values().par_iter()).map(|(a, b)| spectral::relative_bound(a, b)).collect::<Result<Vec<_>>>()?;
    Ok(per.into_iter().fold(0.0, f64::max))
}
