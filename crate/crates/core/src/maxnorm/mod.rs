//! Maximal norms of Hermitian families: the strong L_p(ℓ∞) norm through Löwner majorants and
//! certified upper bounds for the weak quasi-norm through explicit projections.

pub mod barrier;
pub mod weak;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::spectral::{loewner_raw_slack, op_norm, tol_psd};
use crate::algebra::CMatrix;
use crate::dyadic::OperatorField;
use crate::error::{invalid, Result};
pub use barrier::{solve_cell, CellSolution, TraceObjective};
pub use weak::{weak_max_quasinorm_upper, weak_sweep, WeakCertificate, WeakRecipe, WeakSweepPoint};

/// Finite ordered family of Hermitian fields on one grid.
#[derive(Clone, Debug)]
pub struct MaximalFamily {
    pub members: Vec<OperatorField>,
    pub labels: Vec<f64>,
}

impl MaximalFamily {
    pub fn new(members: Vec<OperatorField>, labels: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return invalid("maximal family needs at least one member");
        }
        if labels.len() != members.len() {
            return invalid("one label per member");
        }
        for m in &members[1..] {
            members[0].same_shape(m)?;
        }
        for (k, m) in members.iter().enumerate() {
            let scale = m.norm(f64::INFINITY)?.max(1.0);
            if m.hermitian_defect() > 1e-10 * scale {
                return invalid(format!("member {k} is not Hermitian"));
            }
        }
        Ok(MaximalFamily { members, labels })
    }

    pub fn unlabeled(members: Vec<OperatorField>) -> Result<Self> {
        let labels = (0..members.len()).map(|k| k as f64).collect();
        Self::new(members, labels)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.members[0].len()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn cell_values(&self, cell: usize) -> Vec<&CMatrix> {
        self.members.iter().map(|m| m.value(cell)).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        MaximalFamily { members: self.members.iter().map(|m| m.scale(c)).collect(), labels: self.labels.clone() }
    }
}

/// Exponent of the strong maximal norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum MaxNormP {
    One,
    Two,
    Inf,
}

impl MaxNormP {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(MaxNormP::One),
            "2" => Ok(MaxNormP::Two),
            "inf" | "∞" => Ok(MaxNormP::Inf),
            _ => invalid(format!("p must be 1, 2 or inf, got {s}")),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            MaxNormP::One => 1.0,
            MaxNormP::Two => 2.0,
            MaxNormP::Inf => f64::INFINITY,
        }
    }
}

/// PSD a with −a ⪯ x_k ⪯ a for all k, and its norm.
#[derive(Clone, Debug, Serialize)]
pub struct MajorantCertificate {
    #[serde(skip)]
    pub a: OperatorField,
    pub p: MaxNormP,
    pub objective: f64,
    /// min over k and cells of min eig(a ± x_k).
    pub feasibility_slack: f64,
    pub feasible: bool,
    pub dual_bound: Option<f64>,
    pub gap: Option<f64>,
    pub exact: bool,
    /// Some cell solve stopped before reaching its gap target; the output is still feasible.
    pub fallback: bool,
}

impl MajorantCertificate {
    /// Gap relative to 1 + objective.
    pub fn relative_gap(&self) -> f64 {
        self.gap.map(|g| g / (1.0 + self.objective)).unwrap_or(0.0)
    }
}

fn feasibility(fam: &MaximalFamily, a: &OperatorField) -> Result<(f64, bool)> {
    let per = (0..fam.cells())
        .into_par_iter()
        .map(|c| {
            let ac = a.value(c);
            let an = op_norm(ac)?;
            let mut slack = f64::INFINITY;
            let mut ok = true;
            for x in fam.cell_values(c) {
                let s = loewner_raw_slack(x, ac)?;
                ok &= s >= -tol_psd(an, op_norm(x)?);
                slack = slack.min(s);
            }
            Ok((slack, ok))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per.into_iter().fold((f64::INFINITY, true), |(s, o), (s1, o1)| (s.min(s1), o && o1)))
}

/// Strong maximal norm ‖sup⁺ x_k‖_p with a feasible majorant certificate.
pub fn strong_max_norm(fam: &MaximalFamily, p: MaxNormP) -> Result<MajorantCertificate> {
    let g = *fam.members[0].grid();
    let n = fam.dim();
    let vol = g.cell_volume();
    if p == MaxNormP::Inf {
        let per: Vec<f64> = (0..fam.cells())
            .into_par_iter()
            .map(|c| fam.cell_values(c).into_iter().map(op_norm).try_fold(0.0f64, |m, v| v.map(|v| m.max(v))))
            .collect::<Result<_>>()?;
        let objective = per.iter().copied().fold(0.0, f64::max);
        let a = OperatorField::new(g, n, per.iter().map(|&v| CMatrix::scalar(n, v)).collect())?;
        let (feasibility_slack, feasible) = feasibility(fam, &a)?;
        return Ok(MajorantCertificate {
            a,
            p,
            objective,
            feasibility_slack,
            feasible,
            dual_bound: None,
            gap: None,
            exact: true,
            fallback: false,
        });
    }
    let obj = if p == MaxNormP::One { TraceObjective::Linear } else { TraceObjective::Quadratic };
    let sols: Vec<CellSolution> =
        (0..fam.cells()).into_par_iter().map(|c| solve_cell(&fam.cell_values(c), obj)).collect::<Result<_>>()?;
    let primal: f64 = sols.iter().map(|s| s.objective).sum::<f64>() * vol;
    let dual: f64 = sols.iter().map(|s| s.dual).sum::<f64>() * vol;
    let fallback = sols.iter().any(|s| !s.converged);
    let a = OperatorField::new(g, n, sols.into_iter().map(|s| s.a).collect())?;
    let (objective, dual_bound) = match p {
        MaxNormP::One => (primal, dual),
        _ => (primal.max(0.0).sqrt(), dual.max(0.0).sqrt()),
    };
    let (feasibility_slack, feasible) = feasibility(fam, &a)?;
    Ok(MajorantCertificate {
        a,
        p,
        objective,
        feasibility_slack,
        feasible,
        dual_bound: Some(dual_bound),
        gap: Some(objective - dual_bound),
        exact: false,
        fallback,
    })
}

/// A feasible (not necessarily optimal) majorant that solves the cell program only where some
/// member exceeds `cap` in norm; elsewhere a = max_k ‖x_k‖·1, whose spectrum already lies in
/// [0, cap]. Returns the certificate and the number of cells solved.
pub fn capped_majorant(fam: &MaximalFamily, p: MaxNormP, cap: f64) -> Result<(MajorantCertificate, usize)> {
    let g = *fam.members[0].grid();
    let n = fam.dim();
    let vol = g.cell_volume();
    let obj = if p == MaxNormP::One { TraceObjective::Linear } else { TraceObjective::Quadratic };
    let sols: Vec<(CMatrix, bool, bool)> = (0..fam.cells())
        .into_par_iter()
        .map(|c| {
            let xs = fam.cell_values(c);
            let top = xs.iter().map(|x| op_norm(x)).try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?;
            if top <= cap || p == MaxNormP::Inf {
                return Ok((CMatrix::scalar(n, top), true, false));
            }
            let s = solve_cell(&xs, obj)?;
            Ok((s.a, s.converged, true))
        })
        .collect::<Result<_>>()?;
    let solved = sols.iter().filter(|s| s.2).count();
    let fallback = sols.iter().any(|s| !s.1);
    let a = OperatorField::new(g, n, sols.into_iter().map(|s| s.0).collect())?;
    let objective = match p {
        MaxNormP::One => a.values().iter().map(|m| m.trace().re).sum::<f64>() * vol,
        MaxNormP::Two => (a.values().iter().map(|m| m.matmul(m).trace().re).sum::<f64>() * vol).max(0.0).sqrt(),
        MaxNormP::Inf => a.values().iter().map(|m| m[(0, 0)].re).fold(0.0, f64::max),
    };
    let (feasibility_slack, feasible) = feasibility(fam, &a)?;
    let cert = MajorantCertificate {
        a,
        p,
        objective,
        feasibility_slack,
        feasible,
        dual_bound: None,
        gap: None,
        exact: false,
        fallback,
    };
    Ok((cert, solved))
}
