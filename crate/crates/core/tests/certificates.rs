use nccz::algebra::{CMatrix, C64};
use nccz::certificates::*;
use nccz::dyadic::{DyadicGrid, OperatorField};
use nccz::kernels::partition::mollifier;
use nccz::kernels::Kernel;
use nccz::maxnorm::MaxNormP;
use nccz::operators::{build_operators, Radial, TruncationLadder};
use nccz::report::failures;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gram_field(seed: u64, g: DyadicGrid, n: usize, lo: f64, hi: f64, scale: f64) -> OperatorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..g.cell_count())
        .map(|c| {
            let x = g.cell_center(c)[0];
            if x < lo || x >= hi {
                return CMatrix::zeros(n);
            }
            let a = CMatrix::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            a.matmul(&a.adjoint()).scale(scale)
        })
        .collect();
    OperatorField::new(g, n, vals).unwrap()
}

/// Scalar spikes of height h_i on single cells.
fn spikes(g: DyadicGrid, at: &[(f64, f64)]) -> OperatorField {
    let h = g.cell_side();
    OperatorField::from_fn(g, 1, |x| {
        let v = at.iter().filter(|(p, _)| ((x[0] - p) / h).abs() < 0.5).map(|s| s.1).sum::<f64>();
        CMatrix::from_real_diag(&[v])
    })
}

/// ε^{-1}∫_{|x−y|≤ε} f by exact cell overlaps.
fn brute_average(vals: &[f64], h: f64, x: f64, r: f64) -> f64 {
    let mut acc = 0.0;
    for (c, v) in vals.iter().enumerate() {
        let (a, b) = (c as f64 * h, (c + 1) as f64 * h);
        let overlap = (b.min(x + r) - a.max(x - r)).max(0.0);
        acc += v * overlap;
    }
    acc / r
}

#[test]
fn tiny_field_needs_no_projection() {
    let g = DyadicGrid::new(1, -3, 6).unwrap();
    let f = gram_field(3, g, 2, 1.0, 5.0, 1e-4);
    let r = weak11_certificate(&f, 5.0, &Kernel::hilbert(), TruncationLadder::default_for(&g)).unwrap();
    assert_eq!(r.deficit, 0.0);
    assert_eq!(r.f1_l1, 0.0, "no stopping cubes, so no bad part");
    assert!(r.all_hold(), "{:?}", failures(&r.checks));
}

#[test]
fn zero_field_gives_identity() {
    let g = DyadicGrid::new(1, -2, 5).unwrap();
    let f = OperatorField::zeros(g, 3);
    let r = weak11_certificate(&f, 1.0, &Kernel::hilbert(), TruncationLadder::default_for(&g)).unwrap();
    assert_eq!(r.deficit, 0.0);
    assert_eq!(r.e1.deficit, 0.0);
    assert_eq!(r.sup_trunc, 0.0);
    let e = r.e.unwrap();
    assert!(e.values().iter().all(|p| (p - &CMatrix::identity(3)).max_abs() < 1e-12));
}

#[test]
fn eta_matches_scalar_maximal_level_set() {
    let g = DyadicGrid::new(1, -4, 8).unwrap();
    let f = spikes(g, &[(3.1, 40.0), (3.2, 25.0), (9.7, 60.0)]);
    let k = Kernel::hilbert();
    let ctx = Weak11Context::new(&k, &f, TruncationLadder::default_for(&g)).unwrap();
    let vals = f.scalar_values();
    let h = g.cell_side();
    for lambda in [2.0, 5.0] {
        let r = ctx.certify(lambda, 4).unwrap();
        let count = (0..g.cell_count())
            .filter(|&c| {
                let x = g.cell_center(c)[0];
                ctx.averages.labels.iter().any(|&rad| brute_average(&vals, h, x, rad) > lambda)
            })
            .count();
        let oracle = count as f64 * g.cell_volume();
        assert!((r.eta.deficit - oracle).abs() < 1e-12, "λ={lambda}: {} vs {oracle}", r.eta.deficit);
        assert!(r.all_hold(), "{:?}", failures(&r.checks));
    }
}

/// |(2s+1)Q* ∪ {sup_j |T^φ_j g| > λ} ∪ {sup_j M_j f > λ}| for scalar f, built from scratch.
fn classical_deficit(ctx: &Weak11Context, f: &OperatorField, lambda: f64, s: usize) -> f64 {
    let g = *f.grid();
    let vals = f.scalar_values();
    let np = g.per_axis();
    let h = g.cell_side();
    let mut bad = vec![false; np];
    let mut covered = vec![false; np];
    let mut gcl = vals.clone();
    for k in g.k_min..=g.k_max {
        let width = 1usize << (k - g.k_min);
        let cells_per = np / width;
        for q in 0..width {
            let range = q * cells_per..(q + 1) * cells_per;
            if range.clone().any(|c| covered[c]) {
                continue;
            }
            let avg = range.clone().map(|c| vals[c]).sum::<f64>() / cells_per as f64;
            if avg > lambda {
                for c in range.clone() {
                    covered[c] = true;
                    gcl[c] = avg;
                }
                let side = cells_per as f64 * h;
                let centre = (q as f64 + 0.5) * side;
                let half = 0.5 * (2 * s + 1) as f64 * side;
                for c in 0..np {
                    let x = (c as f64 + 0.5) * h;
                    if (x - centre).abs() < half {
                        bad[c] = true;
                    }
                }
            }
        }
    }
    let gfield = OperatorField::from_scalars(g, &gcl).unwrap();
    for t in ctx.bank.apply_partial(&gfield) {
        for (c, v) in t.scalar_values().iter().enumerate() {
            if v.abs() > lambda {
                bad[c] = true;
            }
        }
    }
    for c in 0..np {
        let x = (c as f64 + 0.5) * h;
        if ctx.averages.labels.iter().any(|&r| brute_average(&vals, h, x, r) > lambda) {
            bad[c] = true;
        }
    }
    bad.iter().filter(|&&b| b).count() as f64 * h
}

#[test]
fn scalar_pipeline_tracks_classical_construction() {
    let g = DyadicGrid::new(1, -4, 9).unwrap();
    let f = spikes(g, &[(2.3, 30.0), (2.35, 12.0), (7.9, 50.0), (12.2, 20.0)]);
    let k = Kernel::hilbert();
    let ctx = Weak11Context::new(&k, &f, TruncationLadder::default_for(&g)).unwrap();
    for lambda in [3.0, 10.0, 40.0] {
        let r = ctx.certify(lambda, 4).unwrap();
        let classical = classical_deficit(&ctx, &f, lambda, 4);
        assert!(classical > 0.0);
        let ratio = r.deficit / classical;
        assert!((0.5..=2.0).contains(&ratio), "λ={lambda}: pipeline {} classical {classical}", r.deficit);
        assert!(r.all_hold(), "{:?}", failures(&r.checks));
    }
}

#[test]
fn complex_kernel_meets_both_parts() {
    let g = DyadicGrid::new(2, -1, 3).unwrap();
    let k = Kernel::from_name("phased:0.7:riesz-1", 2).unwrap();
    assert!(!k.is_real());
    let f = OperatorField::from_fn(g, 2, |x| {
        if x[0] > 0.5 && x[0] < 1.0 && x[1] > 0.5 && x[1] < 0.75 {
            CMatrix::from_real_rows(&[&[2.0, 0.5], &[0.5, 1.0]])
        } else {
            CMatrix::zeros(2)
        }
    });
    let r = weak11_certificate(&f, 0.5, &k, TruncationLadder::default_for(&g)).unwrap();
    assert_eq!(r.components.len(), 2);
    assert!(r.deficit <= r.components.iter().map(|c| c.deficit).sum::<f64>() + 1e-12);
}

#[test]
fn cotlar_zero_field() {
    let g = DyadicGrid::new(1, -2, 5).unwrap();
    let r = cotlar_norm_check(&Kernel::hilbert(), &OperatorField::zeros(g, 2), MaxNormP::Two, &TruncationLadder::default_for(&g)).unwrap();
    assert_eq!(r.lhs, 0.0);
    assert_eq!(r.rhs, 0.0);
    assert!(nccz::report::all_hold(&r.checks), "{:?}", failures(&r.checks));
}

#[test]
fn cotlar_rejects_other_exponents() {
    let g = DyadicGrid::new(1, -2, 5).unwrap();
    let f = OperatorField::zeros(g, 1);
    assert!(cotlar_norm_check(&Kernel::hilbert(), &f, MaxNormP::One, &TruncationLadder::default_for(&g)).is_err());
}

#[test]
fn mollified_hilbert_kernel_matches_direct_sum() {
    // ϕ_ε∗k(x) = ∫ ϕ_ε(y)/(π(x − y)) dy, regular once |x| > ε/2
    let k = Kernel::hilbert();
    for (eps, x) in [(1.0, 0.8), (0.25, 0.3), (0.5, -2.0), (1.0, 9.0)] {
        let m = 400_000;
        let step = eps / m as f64;
        let direct: f64 = (0..m)
            .map(|i| {
                let y = -0.5 * eps + (i as f64 + 0.5) * step;
                mollifier(1, y.abs() / eps) / eps / (std::f64::consts::PI * (x - y)) * step
            })
            .sum();
        let got = mollified_kernel(&k, eps, [x, 0.0]).unwrap();
        assert!((got.re - direct).abs() < 1e-7 * (1.0 + direct.abs()), "ε={eps} x={x}: {} vs {direct}", got.re);
        assert_eq!(got.im, 0.0);
    }
    // odd kernel: PV at the origin vanishes
    assert!(mollified_kernel(&k, 1.0, [0.0, 0.0]).unwrap().norm() < 1e-12);
}

#[test]
fn envelope_is_scale_invariant() {
    for (k, d) in [(Kernel::hilbert(), 1), (Kernel::from_name("riesz-1", 2).unwrap(), 2)] {
        let env = kernel_difference_envelope(&k, &[2.0, 0.5, 0.125]).unwrap();
        for (e, m) in &env.per_eps {
            assert!((m - env.constant).abs() <= 1e-4 * env.constant, "d={d} ε={e}: {m} vs {}", env.constant);
        }
        assert!(env.far_max <= env.constant);
    }
}

#[test]
fn cotlar_ratio_settles_under_refinement() {
    let mut ratios = Vec::new();
    for kmax in [5, 6] {
        let g = DyadicGrid::new(1, -4, kmax).unwrap();
        let base = DyadicGrid::new(1, -4, 5).unwrap();
        let coarse = gram_field(11, base, 2, 3.0, 9.0, 0.2);
        let f = OperatorField::from_fn(g, 2, |x| coarse.value(base.locate(&x[..1]).unwrap()).clone());
        let r = cotlar_norm_check(&Kernel::hilbert(), &f, MaxNormP::Two, &TruncationLadder::default_for(&g)).unwrap();
        assert!(nccz::report::all_hold(&r.checks), "{:?}", failures(&r.checks));
        assert!(r.lhs > 0.0 && r.ratio > 0.0);
        ratios.push(r.ratio);
    }
    assert!((ratios[1] / ratios[0] - 1.0).abs() < 0.25, "{ratios:?}");
}

#[test]
fn mollifier_table_is_a_probability() {
    for d in [1, 2] {
        let g = DyadicGrid::new(d, 0, 4).unwrap();
        for s in [0.0625, 0.25] {
            let t = mollifier_table(&g, s).unwrap();
            let mass: f64 = t.weights.iter().map(|w| w.re).sum();
            assert!((mass - 1.0).abs() < 1e-12);
            assert!(t.weights.iter().all(|w| w.re > 0.0 && w.im == 0.0));
            for (o, w) in t.offsets.iter().zip(&t.weights) {
                assert!((t.weight([-o[0], -o[1]]).re - w.re).abs() < 1e-14, "symmetric");
            }
        }
    }
}

#[test]
fn annulus_cancels_on_constants() {
    // T_{ε_k}c − T_{ε_ℓ}c = c∫_{ε_ℓ<|y|≤ε_k}k = 0 at points farther than ε_k from the edge
    let g = DyadicGrid::new(1, -3, 6).unwrap();
    let f = OperatorField::constant(g, CMatrix::from_real_rows(&[&[1.0, 0.2], &[0.2, 0.5]]));
    let ladder = TruncationLadder::default_for(&g);
    let radials: Vec<Radial> = ladder.epsilons.iter().map(|&e| Radial::Trunc(e)).collect();
    let ops = build_operators(&Kernel::hilbert(), &g, &radials).unwrap();
    let tf: Vec<OperatorField> = ops.iter().map(|o| o.apply(&f)).collect();
    let eps0 = ladder.epsilons[0];
    for c in 0..g.cell_count() {
        let x = g.cell_center(c)[0];
        if x < eps0 + 0.5 || x > 8.0 - eps0 - 0.5 {
            continue;
        }
        for k in 1..tf.len() {
            assert!((tf[0].value(c) - tf[k].value(c)).max_abs() < 1e-12);
        }
    }
}

#[test]
fn bau_constant_field() {
    let g = DyadicGrid::new(1, -2, 8).unwrap();
    let f = OperatorField::from_fn(g, 2, |x| if x[0] > 1.0 && x[0] < 3.0 { CMatrix::identity(2).scale(0.5) } else { CMatrix::zeros(2) });
    let r = bau_cauchy_test(&f, &Kernel::hilbert(), &TruncationLadder::default_for(&g), 0.1).unwrap();
    assert!(nccz::report::all_hold(&r.checks), "{:?}", failures(&r.checks));
    assert!(r.deficit < 0.1);
    assert_eq!(r.reached_n, 8);
    // whole box constant: the truncations agree away from the edges, and e removes the edges
    let full = OperatorField::constant(g, CMatrix::identity(2));
    let r = bau_cauchy_test(&full, &Kernel::hilbert(), &TruncationLadder::default_for(&g), 0.5).unwrap();
    assert!(r.deficit < 0.5);
}

#[test]
fn bau_indicator_converges_off_small_set() {
    let g = DyadicGrid::new(1, -2, 10).unwrap();
    let p = CMatrix::from_real_rows(&[&[0.6, 0.3], &[0.3, 0.4]]);
    let f = OperatorField::from_fn(g, 2, |x| if (1.0..2.0).contains(&x[0]) { p.clone() } else { CMatrix::zeros(2) });
    let ladder = TruncationLadder::default_for(&g);
    let r = bau_cauchy_test(&f, &Kernel::hilbert(), &ladder, 0.1).unwrap();
    assert!(nccz::report::all_hold(&r.checks), "{:?}", failures(&r.checks));
    assert!(r.deficit < 0.1);
    assert_eq!(r.cauchy.len(), ladder.len());
    for k in 0..ladder.len() {
        assert_eq!(r.cauchy[k][k], 0.0);
        for l in 0..ladder.len() {
            assert_eq!(r.cauchy[k][l], r.cauchy[l][k]);
        }
    }
    // without the projection the jump keeps the Cauchy matrix away from zero
    let e = r.e.as_ref().unwrap();
    assert!(nccz::certificates::deficit(e) > 0.0);
    assert!(r.decay_slope.unwrap() > 0.0);
}

#[test]
fn elementary_tensor_is_uniformly_cauchy() {
    let g = DyadicGrid::new(1, -2, 10).unwrap();
    let m = CMatrix::from_real_rows(&[&[1.0, 0.4], &[0.4, 0.3]]);
    let r = elementary_tensor_check(&Kernel::hilbert(), &g, &TruncationLadder::default_for(&g), [2.0, 0.0], 1.0, &m).unwrap();
    assert!(nccz::report::all_hold(&r.checks), "{:?}", failures(&r.checks));
    assert!(r.decay_slope.unwrap() > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn weak11_projection_invariants(seed in 0u64..1000, lam in 0.5f64..8.0) {
        let g = DyadicGrid::new(1, -3, 6).unwrap();
        let f = gram_field(seed, g, 2, 2.0, 4.0, 1.0);
        let r = weak11_certificate(&f, lam, &Kernel::hilbert(), TruncationLadder::default_for(&g)).unwrap();
        prop_assert!(r.all_hold(), "{:?}", failures(&r.checks));
        prop_assert!(r.deficit <= r.stage_deficit_sum + 1e-12);
        let e = r.e.unwrap();
        prop_assert!(projection_defect(&e) < 1e-9);
        prop_assert!(r.sup_partial.is_finite());
    }
}
