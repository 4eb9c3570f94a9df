use nccz::algebra::CMatrix;
use nccz::dyadic::{DyadicGrid, OperatorField};
use nccz::kernels::{Kernel, RoughSymbol};
use nccz::operators::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn indicator_1d(g: DyadicGrid, a: f64, b: f64) -> OperatorField {
    OperatorField::from_fn(g, 1, |x| CMatrix::scalar(1, if x[0] > a && x[0] < b { 1.0 } else { 0.0 }))
}

// Independent scalar reference for the truncated Hilbert transform of a step function.
fn scalar_hilbert(g: &DyadicGrid, s: &[f64], eps: f64) -> Vec<f64> {
    let h = g.cell_side();
    (0..s.len())
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            let mut acc = 0.0;
            for (j, &v) in s.iter().enumerate() {
                let (lo, hi) = (j as f64 * h, (j + 1) as f64 * h);
                // ∫ over [lo,hi] ∩ {|x−y| > ε} of dy/(x−y)
                let mut seg = |a: f64, b: f64| {
                    if b > a {
                        acc += v * ((x - a).abs().ln() - (x - b).abs().ln()) / PI;
                    }
                };
                seg(lo, hi.min(x - eps));
                seg(lo.max(x + eps), hi);
            }
            acc
        })
        .collect()
}

#[test]
fn hilbert_indicator_closed_form() {
    // box [0,4), indicator of [1,3] = χ_[-1,1] shifted by 2
    let g = DyadicGrid::new(1, -2, 8).unwrap();
    let h = g.cell_side();
    let f = indicator_1d(g, 1.0, 3.0);
    let eps = h;
    let t = truncated_czo(&Kernel::hilbert(), &f, eps).unwrap();
    let mut worst: f64 = 0.0;
    for c in 0..g.cell_count() {
        let u = g.cell_center(c)[0] - 2.0;
        if (u.abs() - 1.0).abs() < 2.0 * h {
            continue;
        }
        let exact = ((u + 1.0) / (u - 1.0)).abs().ln() / PI;
        worst = worst.max((t.value(c)[(0, 0)].re - exact).abs());
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn directional_matches_truncated_in_1d() {
    let g = DyadicGrid::new(1, 0, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s: Vec<f64> = (0..g.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = OperatorField::from_scalars(g, &s).unwrap();
    for eps in [g.cell_side(), 0.1, 0.3] {
        let a = directional_hilbert(&f, [1.0, 0.0], eps).unwrap();
        let b = truncated_czo(&Kernel::hilbert(), &f, eps).unwrap();
        assert!(a.max_entry_diff(&b) < 1e-10);
        // Ω(±1) = ±1 gives k_Ω = 1/x = π times the Hilbert kernel
        let one_d = RoughSymbol::by_name("sign", 1).unwrap();
        let r = rotation_method(&one_d, &f, eps, 1).unwrap();
        assert!(r.max_entry_diff(&b.scale(PI)) < 1e-10);
        let direct = truncated_czo(&Kernel::rough(one_d), &f, eps).unwrap();
        assert!(r.max_entry_diff(&direct) < 1e-10);
    }
}

#[test]
fn rotation_by_right_angle() {
    let g = DyadicGrid::new(2, 0, 4).unwrap();
    let np = g.per_axis();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s: Vec<f64> = (0..g.cell_count()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let f = OperatorField::from_scalars(g, &s).unwrap();
    // A(x,y) = (1−y, x) about the box center; (f∘A)(i,j) = f(np−1−j, i)
    let fa = OperatorField::from_fn(g, 1, |x| {
        let i = (x[0] * np as f64) as usize;
        let j = (x[1] * np as f64) as usize;
        f.value(g.cell_id([np - 1 - j, i])).clone()
    });
    let theta = [0.6, 0.8];
    let a_theta = [-0.8, 0.6];
    let lhs = directional_hilbert(&f, a_theta, 0.1).unwrap();
    let rhs = directional_hilbert(&fa, theta, 0.1).unwrap();
    for c in 0..g.cell_count() {
        let [i, j] = g.cell_index(c);
        // A^{-1}(i,j) = (j, np−1−i)
        let back = g.cell_id([j, np - 1 - i]);
        assert!((lhs.value(c)[(0, 0)] - rhs.value(back)[(0, 0)]).norm() < 1e-12);
    }
}

#[test]
fn rotation_agrees_with_direct_truncation() {
    let g = DyadicGrid::new(2, 0, 5).unwrap();
    let f = OperatorField::from_fn(g, 1, |x| {
        let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.45).powi(2);
        CMatrix::scalar(1, (-r2 * 12.0).exp())
    });
    let omega = RoughSymbol::by_name("cos", 2).unwrap();
    let eps = 0.1;
    let direct = truncated_czo(&Kernel::rough(omega.clone()), &f, eps).unwrap();
    let rot = rotation_method(&omega, &f, eps, 2048).unwrap();
    let mut worst: f64 = 0.0;
    for c in 0..g.cell_count() {
        let x = g.cell_center(c);
        if x.iter().all(|&t| (0.25..0.75).contains(&t)) {
            worst = worst.max((direct.value(c)[(0, 0)] - rot.value(c)[(0, 0)]).norm());
        }
    }
    eprintln!("rotation vs direct: {worst:e}");
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn lacunary_telescoping_across_ladder() {
    for (d, k, name) in [(1usize, 9, "hilbert"), (2, 4, "riesz-2"), (2, 4, "rough:sign")] {
        let g = DyadicGrid::new(d, 0, k).unwrap();
        let kern = Kernel::from_name(name, d).unwrap();
        let bank = LacunaryBank::new(&kern, &g, TruncationLadder::default_for(&g)).unwrap();
        let f = OperatorField::from_fn(g, 2, |_| CMatrix::zeros(2)).map(|c, _| {
            let mut r = ChaCha8Rng::seed_from_u64(c as u64 + 11);
            let a: f64 = r.gen_range(0.0..1.0);
            let b: f64 = r.gen_range(-0.5..0.5);
            CMatrix::from_real_rows(&[&[a + 0.5, b], &[b, 1.0 - a * 0.5]])
        });
        let out = bank.apply(&f);
        let r = bank.telescoping_residual(&out, &f, 1.0).unwrap();
        assert!(r <= 1e-9, "{name}: {r}");
    }
}

#[test]
fn boundary_piece_dominated_by_averages() {
    let g = DyadicGrid::new(1, 0, 8).unwrap();
    let bank = LacunaryBank::new(&Kernel::hilbert(), &g, TruncationLadder::default_for(&g)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f = OperatorField::from_fn(g, 2, |_| CMatrix::zeros(2)).map(|c, _| {
        let mut r = ChaCha8Rng::seed_from_u64(c as u64);
        let v = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        CMatrix::from_real_rows(&[&[v[0] * v[0] + 0.01, v[0] * v[1]], &[v[0] * v[1], v[1] * v[1] + 0.01]])
    });
    let _ = rng.gen::<u8>();
    let out = bank.apply(&f);
    let p = bank.partition;
    for idx in 0..bank.ladder.len() {
        let j = bank.j_of(idx);
        let m = nccz::dyadic::hl_average(&f, 2f64.powi(-j + 1) * p.sqrt_d()).unwrap();
        let c = sandwich_constant(&out.boundary[idx], &m).unwrap();
        assert!(c.is_finite() && c < 10.0, "j={j}: {c}");
    }
}

#[test]
fn smooth_truncation_sandwich_on_random_fields() {
    let g = DyadicGrid::new(2, 0, 4).unwrap();
    let omega = RoughSymbol::by_name("sign", 2).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<CMatrix> = (0..g.cell_count())
            .map(|_| {
                let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                CMatrix::from_real_rows(&[&[v[0] * v[0] + 1e-3, v[0] * v[1]], &[v[0] * v[1], v[1] * v[1] + 1e-3]])
            })
            .collect();
        let f = OperatorField::new(g, 2, vals).unwrap();
        let s = smooth_truncation_sandwich(&omega, &f, 0.25, 64).unwrap();
        worst = worst.max(s.constant);
    }
    eprintln!("smooth sandwich C = {worst}");
    assert!(worst.is_finite() && worst < 10.0);
}

#[test]
fn zero_inputs() {
    let g = DyadicGrid::new(2, 0, 3).unwrap();
    let f = OperatorField::zeros(g, 2);
    let omega = RoughSymbol::by_name("cos", 2).unwrap();
    assert!(smooth_truncation(&omega, &f, 0.3).unwrap().is_zero());
    assert!(directional_average(&f, [1.0, 0.0], 0.3).unwrap().is_zero());
    let z = RoughSymbol::from_fn(2, 64, |_| 0.0).unwrap();
    assert!(rotation_method(&z, &OperatorField::constant(g, CMatrix::identity(2)), 0.3, 32).unwrap().is_zero());
}

fn hermitian_field(g: DyadicGrid, n: usize, seed: u64) -> OperatorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..g.cell_count())
        .map(|_| {
            let m = CMatrix::from_fn(n, |_, _| nccz::algebra::C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            m.hermitian_part()
        })
        .collect();
    OperatorField::new(g, n, vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scalar_reduction_matches_reference(seed in 0u64..1000, k in 4i32..8, eps_cells in 1usize..6) {
        let g = DyadicGrid::new(1, 0, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<f64> = (0..g.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eps = eps_cells as f64 * g.cell_side() * 0.75;
        let f = OperatorField::from_scalars(g, &s).unwrap();
        let t = truncated_czo(&Kernel::hilbert(), &f, eps).unwrap();
        let r = scalar_hilbert(&g, &s, eps);
        for c in 0..g.cell_count() {
            prop_assert!((t.value(c)[(0, 0)].re - r[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_and_hermitian_preserved(seed in 0u64..1000, d in 1usize..3) {
        let g = DyadicGrid::new(d, 0, if d == 1 { 6 } else { 3 }).unwrap();
        let kern = if d == 1 { Kernel::hilbert() } else { Kernel::from_name("riesz-1", 2).unwrap() };
        let f = hermitian_field(g, 3, seed);
        let skew = f.map(|_, m| m.scale_c(nccz::algebra::C64::new(0.3, 0.7)));
        let t = truncated_czo(&kern, &skew, 0.3).unwrap();
        let ta = truncated_czo(&kern, &skew.adjoint(), 0.3).unwrap();
        prop_assert!(t.adjoint().max_entry_diff(&ta) < 1e-12);
        prop_assert!(truncated_czo(&kern, &f, 0.3).unwrap().hermitian_defect() < 1e-12);
    }

    #[test]
    fn real_imaginary_split(seed in 0u64..1000) {
        let g = DyadicGrid::new(1, 0, 6).unwrap();
        let kern = Kernel::from_name("phased:0.7:hilbert", 1).unwrap();
        let (re, im) = kern.split();
        let f = hermitian_field(g, 2, seed);
        let t = truncated_czo(&kern, &f, 0.1).unwrap();
        let tr = truncated_czo(&re, &f, 0.1).unwrap();
        let ti = truncated_czo(&im, &f, 0.1).unwrap();
        let sum = tr.zip_map(&ti, |a, b| {
            let mut s = a.clone();
            s.axpy_c(nccz::algebra::C64::new(0.0, 1.0), b);
            s
        });
        prop_assert!(t.max_entry_diff(&sum) < 1e-12);
    }
}
