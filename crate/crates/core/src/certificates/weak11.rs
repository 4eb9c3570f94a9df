//! The weak type (1,1) pipeline: η from the boundary pieces, e₁ from the good part, e₂ and e₃
//! from the majorants F₁ and F₂ of the bad parts, and their meet.

use rayon::prelude::*;
use serde::Serialize;

use super::projections::*;
use crate::algebra::spectral::{schatten_norm, schatten_norm_general, TOL_RANK};
use crate::algebra::{CMatrix, C64};
use crate::cz::{decompose, default_s, CzDecomposition};
use crate::dyadic::{hl_average, OperatorField};
use crate::error::{invalid, Result};
use crate::kernels::{difference_kernel, Kernel};
use crate::maxnorm::{capped_majorant, weak_max_quasinorm_upper, MaxNormP, MaximalFamily, WeakRecipe};
use crate::operators::{LacunaryBank, LacunaryFields, TruncationLadder};
use crate::quadrature::gauss_legendre;
use crate::report::{Check, ValidationReport};

pub const WEAK11_SCHEMA: u32 = 1;
/// Relative allowance on the projection norm bounds.
const BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct StageSummary {
    pub deficit: f64,
    /// Measured ‖s X s‖_∞ for the operators the stage controls.
    pub measured: f64,
    pub degenerate: bool,
    pub recipe: Option<WeakRecipe>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Weak11Report {
    pub schema: u32,
    pub kernel: String,
    pub d: usize,
    pub n: usize,
    pub cells: usize,
    pub lambda: f64,
    pub s: usize,
    pub f_l1: f64,
    pub f_inf: f64,
    pub ladder: Vec<f64>,
    pub eta: StageSummary,
    pub e1: StageSummary,
    pub e2: StageSummary,
    pub e3: StageSummary,
    /// φ(e^⊥) for e = η ∧ e₁ ∧ e₂ ∧ e₃.
    pub deficit: f64,
    pub stage_deficit_sum: f64,
    /// sup_j ‖e T^φ_j f e‖_∞.
    pub sup_partial: f64,
    /// sup over the ladder of ‖e T_ε f e‖_∞.
    pub sup_trunc: f64,
    pub f1_l1: f64,
    pub f2_l1: f64,
    pub bd_l1_sum: f64,
    pub boff_l1_sum: f64,
    /// φ(e^⊥)·λ/‖f‖₁
    pub deficit_ratio: f64,
    /// sup_trunc/λ
    pub sup_ratio: f64,
    /// max_j ‖η T^φ_{ε,j_ε} f η‖_∞ / λ
    pub eta_constant: f64,
    /// ‖a‖₂²/(‖g‖₁‖g‖_∞) for the e₁ majorant.
    pub e1_chebyshev_ratio: f64,
    pub holder_samples: usize,
    /// Cells where the e₁ majorant needed the convex solve.
    pub e1_cells_solved: usize,
    pub checks: ValidationReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Weak11Report>,
    #[serde(skip)]
    pub e: Option<OperatorField>,
}

impl Weak11Report {
    pub fn all_hold(&self) -> bool {
        crate::report::all_hold(&self.checks)
    }
}

/// λ-independent operator data for one input, reusable across a λ-sweep.
pub struct Weak11Context<'a> {
    pub kernel: &'a Kernel,
    pub f: &'a OperatorField,
    pub bank: LacunaryBank,
    pub on_f: LacunaryFields,
    /// (M_{2^{−j+1}√d} f)_j on the ladder.
    pub averages: MaximalFamily,
    pub f_l1: f64,
    pub f_inf: f64,
}

impl<'a> Weak11Context<'a> {
    pub fn new(kernel: &'a Kernel, f: &'a OperatorField, ladder: TruncationLadder) -> Result<Self> {
        if !kernel.is_real() {
            return invalid("the pipeline needs a real kernel; split complex kernels first");
        }
        if !f.is_psd()? {
            return invalid("input field must be PSD");
        }
        let g = *f.grid();
        let mut bank = LacunaryBank::new(kernel, &g, ladder)?;
        bank.extend_pieces(kernel, g.k_max)?;
        let on_f = bank.apply(f);
        let sd = bank.partition.sqrt_d();
        let mut members = Vec::new();
        let mut labels = Vec::new();
        for idx in 0..bank.ladder.len() {
            let r = 2f64.powi(-bank.j_of(idx) + 1) * sd;
            members.push(hl_average(f, r)?);
            labels.push(r);
        }
        let averages = MaximalFamily::new(members, labels)?;
        Ok(Weak11Context { kernel, f, bank, f_l1: f.norm(1.0)?, f_inf: f.norm(f64::INFINITY)?, on_f, averages })
    }

    pub fn certify(&self, lambda: f64, s: usize) -> Result<Weak11Report> {
        let f = self.f;
        let g = *f.grid();
        let n = f.dim();
        let bank = &self.bank;
        let tol = lambda * (1.0 + BOUND_TOL);
        let mut checks = ValidationReport::new();
        let dec = decompose(f, lambda, s)?;
        let zeta = &dec.zeta;

        // η: weak certificate for the averages, transferred to the boundary pieces
        let (eta_maj, _) = capped_majorant(&self.averages, MaxNormP::Two, lambda)?;
        let eta_cert = weak_max_quasinorm_upper(&self.averages, lambda, Some(&eta_maj))?;
        let eta_measured = compressed_sup(&eta_cert.e, &self.on_f.boundary)?;
        checks.insert("eta_valid".into(), Check::le(eta_cert.max_compressed, tol));

        // e₁: spectral projection of a p₀ = 2 majorant of (T^φ_j g)_j
        let tg: Vec<OperatorField> = bank.apply_partial(&dec.g).into_iter().map(|x| x.map(|_, m| m.hermitian_part())).collect();
        let fam_g = MaximalFamily::unlabeled(tg.clone())?;
        let (maj, e1_cells_solved) = capped_majorant(&fam_g, MaxNormP::Two, lambda)?;
        checks.insert("e1_majorant_feasible".into(), Check::flag(maj.feasible, -maj.feasibility_slack, 0.0));
        let e1 = at_most(&maj.a, lambda)?;
        let e1_def = deficit(&e1);
        let e1_measured = compressed_sup(&e1, &tg)?;
        checks.insert("e1_sandwich".into(), Check::le(e1_measured, tol));
        let a2 = maj.objective * maj.objective;
        checks.insert("e1_chebyshev".into(), Check::le(e1_def, a2 / (lambda * lambda) * (1.0 + 1e-9) + 1e-15));
        let g_l1 = dec.g.norm(1.0)?;
        let g_inf = dec.g.norm(f64::INFINITY)?;
        let e1_chebyshev_ratio = if g_l1 * g_inf > 0.0 { a2 / (g_l1 * g_inf) } else { 0.0 };

        // e₂ from F₁ = Σ_n Σ_{i<n−1} |T_{φ,i} b_{d,n}|
        let bd = self.level_pieces(&dec, true)?;
        let f1 = self.majorant(&bd)?;
        let (e2, e2_measured) = self.stage_projection(&f1, zeta, lambda)?;
        self.bad_part_checks(&mut checks, "f1", &bd, &f1, zeta)?;

        // e₃ from F₂ = Σ_n Σ_{i<n−1} Σ_Q |T_{φ,i}(χ_Q b_n)|
        let boff = self.level_pieces(&dec, false)?;
        let f2 = self.cube_majorant(&dec)?;
        let (e3, e3_measured) = self.stage_projection(&f2, zeta, lambda)?;
        self.bad_part_checks(&mut checks, "f2", &boff, &f2, zeta)?;
        let holder_samples = self.holder_checks(&mut checks, &dec, lambda)?;

        let e = meet_fields(&[&eta_cert.e, &e1, &e2, &e3])?;
        let def = deficit(&e);
        let stage_sum = eta_cert.deficit + e1_def + deficit(&e2) + deficit(&e3);
        checks.insert("subadditive_deficit".into(), Check::le(def, stage_sum * (1.0 + 1e-12) + 1e-15));
        let pd = projection_defect(&e);
        checks.insert("projection".into(), Check::le(pd, 1e-9));
        let below = [&eta_cert.e, &e1, &e2, &e3].iter().map(|p| below_defect(&e, p)).fold(0.0, f64::max);
        // a vector kept by the rank cut has ‖(1 − p)v‖² ≤ k·TOL_RANK
        checks.insert("meet_below_stages".into(), Check::le(below, (4.0 * TOL_RANK).sqrt()));
        let sup_partial = compressed_sup(&e, &self.on_f.partial)?;
        let sup_trunc = compressed_sup(&e, &self.on_f.truncs)?;

        let bd_l1_sum = dec.bd.iter().map(|b| b.field.norm(1.0)).sum::<Result<f64>>()?;
        let boff_l1_sum = dec.boff.iter().map(|b| b.field.norm(1.0)).sum::<Result<f64>>()?;
        let f1_l1 = f1.norm(1.0)?;
        let f2_l1 = f2.norm(1.0)?;
        Ok(Weak11Report {
            schema: WEAK11_SCHEMA,
            kernel: self.kernel.name(),
            d: g.d,
            n,
            cells: g.cell_count(),
            lambda,
            s,
            f_l1: self.f_l1,
            f_inf: self.f_inf,
            ladder: bank.ladder.epsilons.clone(),
            eta: StageSummary {
                deficit: eta_cert.deficit,
                measured: eta_measured,
                degenerate: eta_cert.degenerate,
                recipe: Some(eta_cert.recipe),
            },
            e1: StageSummary { deficit: e1_def, measured: e1_measured, degenerate: false, recipe: Some(WeakRecipe::Spectral) },
            e2: StageSummary { deficit: deficit(&e2), measured: e2_measured, degenerate: false, recipe: None },
            e3: StageSummary { deficit: deficit(&e3), measured: e3_measured, degenerate: false, recipe: None },
            deficit: def,
            stage_deficit_sum: stage_sum,
            sup_partial,
            sup_trunc,
            f1_l1,
            f2_l1,
            bd_l1_sum,
            boff_l1_sum,
            deficit_ratio: if self.f_l1 > 0.0 { def * lambda / self.f_l1 } else { 0.0 },
            sup_ratio: sup_trunc / lambda,
            eta_constant: eta_measured / lambda,
            e1_chebyshev_ratio,
            holder_samples,
            e1_cells_solved,
            checks,
            components: Vec::new(),
            e: Some(e),
        })
    }

    /// T_{φ,i} b_n for every level n and every available i, from the diagonal or off-diagonal parts.
    fn level_pieces(&self, dec: &CzDecomposition, diagonal: bool) -> Result<Vec<(i32, Vec<OperatorField>)>> {
        let parts = if diagonal { &dec.bd } else { &dec.boff };
        let bank = &self.bank;
        let mut out = Vec::new();
        for lf in parts {
            let support = lf.field.support();
            if support.is_empty() {
                continue;
            }
            let ys = bank.pieces.iter().map(|p| p.apply_sparse(&lf.field, &support).map(|_, m| m.hermitian_part())).collect();
            out.push((lf.level, ys));
        }
        Ok(out)
    }

    fn majorant(&self, pieces: &[(i32, Vec<OperatorField>)]) -> Result<OperatorField> {
        let g = *self.f.grid();
        let mut acc = OperatorField::zeros(g, self.f.dim());
        for (level, ys) in pieces {
            for (k, y) in ys.iter().enumerate() {
                let i = self.bank.i_min + k as i32;
                if i < level - 1 {
                    acc.add_assign(&abs_field(y)?);
                }
            }
        }
        Ok(acc)
    }

    /// F₂ with the per-cube absolute values.
    fn cube_majorant(&self, dec: &CzDecomposition) -> Result<OperatorField> {
        let g = *self.f.grid();
        let n = self.f.dim();
        let mut acc = OperatorField::zeros(g, n);
        for lf in &dec.boff {
            let level = dec.family.level(lf.level);
            for id in level.nonzero_p() {
                let q = g.cube_from_id(lf.level, id);
                let cells = g.cells_of_cube(&q);
                let mut piece = OperatorField::zeros(g, n);
                for &c in &cells {
                    piece.values_mut()[c] = lf.field.value(c).clone();
                }
                if piece.is_zero() {
                    continue;
                }
                for (k, op) in self.bank.pieces.iter().enumerate() {
                    let i = self.bank.i_min + k as i32;
                    if i >= lf.level - 1 {
                        break;
                    }
                    let y = op.apply_sparse(&piece, &cells);
                    acc.add_assign(&abs_field(&y)?);
                }
            }
        }
        Ok(acc)
    }

    /// e = ζ ∧ χ_{[0,λ]}(ζFζ) and max ‖e(ζFζ)e‖.
    fn stage_projection(&self, big_f: &OperatorField, zeta: &OperatorField, lambda: f64) -> Result<(OperatorField, f64)> {
        let zfz = big_f.compress(zeta);
        let e = meet_fields(&[zeta, &at_most(&zfz, lambda)?])?;
        let measured = compressed_sup(&e, std::slice::from_ref(&zfz))?;
        Ok((e, measured))
    }

    /// Vanishing of ζ T_{φ,i} b ζ for i ≥ n−1 and the two-sided bound −ζFζ ⪯ ζT^φ_j b ζ ⪯ ζFζ.
    fn bad_part_checks(
        &self,
        checks: &mut ValidationReport,
        name: &str,
        pieces: &[(i32, Vec<OperatorField>)],
        big_f: &OperatorField,
        zeta: &OperatorField,
    ) -> Result<()> {
        let g = *self.f.grid();
        let bank = &self.bank;
        let scale = self.f_inf.max(f64::MIN_POSITIVE);
        let mut vanish: f64 = 0.0;
        let mut per_i: Vec<OperatorField> = vec![OperatorField::zeros(g, self.f.dim()); bank.pieces.len()];
        for (level, ys) in pieces {
            for (k, y) in ys.iter().enumerate() {
                per_i[k].add_assign(y);
                let i = bank.i_min + k as i32;
                if i >= level - 1 {
                    let c = y.compress(zeta);
                    vanish = vanish.max(c.values().iter().map(|m| m.max_abs()).fold(0.0, f64::max));
                }
            }
        }
        checks.insert(format!("{name}_vanishing"), Check::le(vanish / scale, 1e-10));
        let zfz = big_f.compress(zeta);
        let f_scale = big_f.norm(f64::INFINITY)?.max(scale);
        let mut worst = f64::INFINITY;
        for idx in 0..bank.ladder.len() {
            let j = bank.j_of(idx);
            let mut x = OperatorField::zeros(g, self.f.dim());
            for (k, y) in per_i.iter().enumerate() {
                if bank.i_min + (k as i32) < j {
                    x.add_assign(y);
                }
            }
            worst = worst.min(two_sided_slack(&x.compress(zeta), &zfz)?);
        }
        let slack = if worst.is_finite() { worst / f_scale } else { 0.0 };
        checks.insert(format!("{name}_sandwich"), Check::le(-slack, 1e-10));
        Ok(())
    }

    /// Column-space Hölder step on sampled (x, i, n, Q), and the Cauchy–Schwarz cube sum per level.
    fn holder_checks(&self, checks: &mut ValidationReport, dec: &CzDecomposition, lambda: f64) -> Result<usize> {
        let g = *self.f.grid();
        let d = g.d;
        let h = g.cell_side();
        let sd = self.bank.partition.sqrt_d();
        let rule = gauss_legendre(4);
        let mut worst_holder = f64::INFINITY;
        let mut worst_cs = f64::INFINITY;
        let mut samples = 0usize;
        for lf in &dec.boff {
            let lvl = dec.family.level(lf.level);
            let (mut cs_lhs, mut tr_p, mut tr_fp) = (0.0, 0.0, 0.0);
            for id in lvl.nonzero_p() {
                let q = g.cube_from_id(lf.level, id);
                let vol = q.volume();
                let pq = &lvl.p[id];
                let fq = &lvl.averages[id];
                let a_q = pq.trace().re * vol * lambda;
                let b_q = fq.matmul(pq).trace().re * vol;
                cs_lhs += (a_q * b_q).max(0.0).sqrt();
                tr_p += pq.trace().re * vol;
                tr_fp += b_q;
            }
            let cs_rhs = (lambda * tr_p).sqrt() * tr_fp.max(0.0).sqrt();
            worst_cs = worst_cs.min((cs_rhs - cs_lhs) / cs_rhs.max(f64::MIN_POSITIVE));

            for id in lvl.nonzero_p().take(3) {
                let q = g.cube_from_id(lf.level, id);
                let cells = g.cells_of_cube(&q);
                let pq = &lvl.p[id];
                let qq = &lvl.q[id];
                let center = q.center();
                let i_hi = lf.level - 2;
                for i in (self.bank.i_min.max(i_hi - 2))..=i_hi {
                    let dk = difference_kernel(self.kernel, self.bank.partition, i, lf.level);
                    let reach = 2f64.powi(-i) * sd;
                    let Some(x) = [1.0, -1.0].iter().map(|s| [center[0] + s * reach, center[1]]).find(|x| {
                        x[0] > 0.0 && x[0] < g.box_side() && (d == 1 || (x[1] > 0.0 && x[1] < g.box_side()))
                    }) else {
                        continue;
                    };
                    let mut lhs_m = CMatrix::zeros(self.f.dim());
                    let mut rhs_m = CMatrix::zeros(self.f.dim());
                    for &c in &cells {
                        let (lo, _) = g.cell_rect(c);
                        let (mut w1, mut w2) = (C64::default(), 0.0);
                        for (ya, wa) in rule.mapped(lo[0], lo[0] + h) {
                            if d == 1 {
                                let k = dk.eval(x, [ya, 0.0]);
                                w1 += k * wa;
                                w2 += k.norm_sqr() * wa;
                            } else {
                                for (yb, wb) in rule.mapped(lo[1], lo[1] + h) {
                                    let k = dk.eval(x, [ya, yb]);
                                    w1 += k * (wa * wb);
                                    w2 += k.norm_sqr() * wa * wb;
                                }
                            }
                        }
                        let fc = self.f.value(c);
                        lhs_m.axpy_c(w1, &pq.matmul(fc).matmul(qq));
                        rhs_m.axpy(w2, &pq.matmul(fc).matmul(pq));
                    }
                    let lhs = schatten_norm_general(&lhs_m, 1.0)?;
                    let rhs = schatten_norm(&rhs_m, 0.5)?.sqrt() * (q.volume() * lambda).sqrt();
                    worst_holder = worst_holder.min((rhs - lhs) / rhs.max(lhs).max(f64::MIN_POSITIVE));
                    samples += 1;
                }
            }
        }
        let hs = if worst_holder.is_finite() { worst_holder } else { 0.0 };
        let cs = if worst_cs.is_finite() { worst_cs } else { 0.0 };
        checks.insert("f2_holder".into(), Check::le(-hs, 1e-10));
        checks.insert("f2_cube_cauchy_schwarz".into(), Check::le(-cs, 1e-12));
        Ok(samples)
    }
}

/// Weak type (1,1) certificate at one λ; complex kernels are certified through their real and
/// imaginary parts and the two projections are met.
pub fn weak11_certificate(f: &OperatorField, lambda: f64, kernel: &Kernel, ladder: TruncationLadder) -> Result<Weak11Report> {
    let s = default_s(f.grid().d);
    if kernel.is_real() {
        return Weak11Context::new(kernel, f, ladder)?.certify(lambda, s);
    }
    let (re, im) = kernel.split();
    let r = Weak11Context::new(&re, f, ladder.clone())?.certify(lambda, s)?;
    let i = Weak11Context::new(&im, f, ladder.clone())?.certify(lambda, s)?;
    let e = meet_fields(&[r.e.as_ref().expect("set"), i.e.as_ref().expect("set")])?;
    let bank = LacunaryBank::new(kernel, f.grid(), ladder)?;
    let truncs = bank.apply(f).truncs;
    let sup_trunc = compressed_sup(&e, &truncs)?;
    let mut out = r.clone();
    out.kernel = kernel.name();
    out.deficit = deficit(&e);
    out.stage_deficit_sum = r.stage_deficit_sum + i.stage_deficit_sum;
    out.sup_trunc = sup_trunc;
    out.sup_ratio = sup_trunc / lambda;
    out.deficit_ratio = if r.f_l1 > 0.0 { out.deficit * lambda / r.f_l1 } else { 0.0 };
    let mut checks = ValidationReport::new();
    for (tag, part) in [("re", &r), ("im", &i)] {
        for (k, v) in &part.checks {
            checks.insert(format!("{tag}.{k}"), v.clone());
        }
    }
    out.checks = checks;
    out.e = Some(e);
    out.components = vec![r, i];
    Ok(out)
}

/// Per-cell scalar values of the sup of several scalar fields (helper for sweeps).
pub fn sup_abs(fields: &[OperatorField]) -> Vec<f64> {
    (0..fields[0].len())
        .into_par_iter()
        .map(|c| fields.iter().map(|x| x.value(c).max_abs()).fold(0.0, f64::max))
        .collect()
}
