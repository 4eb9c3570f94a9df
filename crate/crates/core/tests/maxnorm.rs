use nccz::algebra::spectral::{abs_herm, schatten_norm};
use nccz::algebra::{CMatrix, C64};
use nccz::dyadic::{hl_average, DyadicGrid, OperatorField};
use nccz::maxnorm::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).hermitian_part()
}

fn random_family(seed: u64, g: DyadicGrid, n: usize, k: usize) -> MaximalFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = (0..k)
        .map(|_| OperatorField::new(g, n, (0..g.cell_count()).map(|_| random_hermitian(&mut rng, n)).collect()).unwrap())
        .collect();
    MaximalFamily::unlabeled(members).unwrap()
}

fn scalar_family(seed: u64, g: DyadicGrid, k: usize) -> (MaximalFamily, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Vec<f64>> = (0..k).map(|_| (0..g.cell_count()).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let sup: Vec<f64> = (0..g.cell_count()).map(|c| raw.iter().map(|r| r[c].abs()).fold(0.0, f64::max)).collect();
    let members = raw.iter().map(|r| OperatorField::from_scalars(g, r).unwrap()).collect();
    (MaximalFamily::unlabeled(members).unwrap(), sup)
}

#[test]
fn scalar_reduction_is_classical() {
    let g = DyadicGrid::new(1, 0, 5).unwrap();
    let vol = g.cell_volume();
    for seed in 0..5 {
        let (fam, sup) = scalar_family(seed, g, 4);
        for (p, pv) in [(MaxNormP::One, 1.0), (MaxNormP::Two, 2.0)] {
            let cert = strong_max_norm(&fam, p).unwrap();
            let classical = (sup.iter().map(|s: &f64| s.powf(pv)).sum::<f64>() * vol).powf(1.0 / pv);
            assert!((cert.objective - classical).abs() < 1e-8, "{p:?}: {} vs {classical}", cert.objective);
            assert!(cert.feasible && cert.relative_gap() <= 1e-6);
        }
        let inf = strong_max_norm(&fam, MaxNormP::Inf).unwrap();
        assert_eq!(inf.objective, sup.iter().copied().fold(0.0, f64::max));
    }
}

#[test]
fn single_member_p1_is_trace_abs() {
    let g = DyadicGrid::new(1, 0, 3).unwrap();
    for seed in 0..6 {
        let fam = random_family(seed, g, 4, 1);
        let cert = strong_max_norm(&fam, MaxNormP::One).unwrap();
        let exact = fam.members[0].norm(1.0).unwrap();
        assert!((cert.objective - exact).abs() < 1e-6, "{} vs {exact}", cert.objective);
        assert!(cert.relative_gap() <= 1e-6 && cert.feasible);
        let inf = strong_max_norm(&fam, MaxNormP::Inf).unwrap();
        assert_eq!(inf.objective, fam.members[0].norm(f64::INFINITY).unwrap());
    }
}

#[test]
fn counterexample_pair() {
    let g = DyadicGrid::new(1, 0, 1).unwrap();
    let f = CMatrix::from_real_diag(&[8.0, -8.0]);
    let gm = CMatrix::from_real_rows(&[&[10.0, 6.0], &[6.0, 10.0]]);
    // −g ⪯ f ⪯ g while g − |f| is not positive
    assert!(nccz::algebra::spectral::loewner_between(&f, &gm).unwrap());
    assert!(nccz::algebra::spectral::min_eig(&(&gm - &abs_herm(&f).unwrap())).unwrap() < 0.0);
    let fam = MaximalFamily::unlabeled(vec![OperatorField::constant(g, f)]).unwrap();
    let cert = strong_max_norm(&fam, MaxNormP::One).unwrap();
    assert!(cert.objective < 20.0);
    assert!((cert.objective - 16.0).abs() < 1e-4, "{}", cert.objective);
    assert!(cert.relative_gap() <= 1e-6);
}

#[test]
fn random_solves_close_the_gap() {
    let g = DyadicGrid::new(2, 0, 2).unwrap();
    for seed in 0..4 {
        for n in [2, 4, 8] {
            let fam = random_family(seed * 31 + n as u64, g, n, 3);
            for p in [MaxNormP::One, MaxNormP::Two] {
                let cert = strong_max_norm(&fam, p).unwrap();
                assert!(cert.feasible, "infeasible n={n} {p:?}");
                assert!(cert.relative_gap() <= 1e-6, "gap {} n={n} {p:?}", cert.relative_gap());
                assert!(!cert.fallback);
            }
        }
    }
}

#[test]
fn weak_identity_below_lambda() {
    let g = DyadicGrid::new(1, 0, 4).unwrap();
    let fam = random_family(1, g, 3, 3);
    let top = fam.members.iter().map(|m| m.norm(f64::INFINITY).unwrap()).fold(0.0, f64::max);
    let cert = weak_max_quasinorm_upper(&fam, top * 1.01, None).unwrap();
    assert_eq!(cert.deficit, 0.0);
    assert!(cert.valid);
}

#[test]
fn weak_scalar_is_distribution_function() {
    let g = DyadicGrid::new(1, 0, 6).unwrap();
    let vol = g.cell_volume();
    for seed in 0..5 {
        let (fam, sup) = scalar_family(seed, g, 3);
        let lambdas: Vec<f64> = (1..12).map(|i| i as f64 * 0.17).collect();
        let (pts, best) = weak_sweep(&fam, &lambdas, 1.0).unwrap();
        let mut classical: f64 = 0.0;
        for (pt, &l) in pts.iter().zip(&lambdas) {
            let measure = sup.iter().filter(|&&s| s > l).count() as f64 * vol;
            assert_eq!(pt.deficit, measure);
            assert!(pt.valid);
            classical = classical.max(l * measure);
        }
        assert_eq!(best, classical);
    }
}

#[test]
fn weak_below_floor_is_degenerate_but_valid() {
    let g = DyadicGrid::new(1, 0, 3).unwrap();
    let fam = MaximalFamily::unlabeled(vec![OperatorField::constant(g, CMatrix::identity(2))]).unwrap();
    let cert = weak_max_quasinorm_upper(&fam, 0.5, None).unwrap();
    assert!(cert.degenerate && cert.valid);
    assert!((cert.deficit - 2.0).abs() < 1e-15);
}

#[test]
fn mei_inequality_for_averages() {
    let g = DyadicGrid::new(1, 0, 7).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..g.cell_count())
            .map(|_| {
                let v: Vec<C64> = (0..3).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                CMatrix::outer(&v).scale(if rng.gen_bool(0.1) { 20.0 } else { 0.1 })
            })
            .collect();
        let f = OperatorField::new(g, 3, vals).unwrap();
        let epss: Vec<f64> = (0..6).map(|j| 2f64.powi(-j)).collect();
        let members = epss.iter().map(|&e| hl_average(&f, e).unwrap()).collect();
        let fam = MaximalFamily::new(members, epss).unwrap();
        let l1 = f.norm(1.0).unwrap();
        let lambdas: Vec<f64> = (0..8).map(|i| 0.5 * 2f64.powi(i)).collect();
        let (pts, _) = weak_sweep(&fam, &lambdas, 1.0).unwrap();
        for pt in pts {
            assert!(pt.valid);
            worst = worst.max(pt.lambda * pt.deficit / l1);
        }
    }
    eprintln!("Mei constant ≈ {worst}");
    assert!(worst < 10.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn certificates_are_feasible_and_scale(seed in 0u64..500, c in 0.1f64..10.0) {
        let g = DyadicGrid::new(1, 0, 2).unwrap();
        let fam = random_family(seed, g, 3, 3);
        let a = strong_max_norm(&fam, MaxNormP::Two).unwrap();
        let b = strong_max_norm(&fam.scaled(-c), MaxNormP::Two).unwrap();
        prop_assert!(a.feasible && b.feasible);
        prop_assert!((b.objective - c * a.objective).abs() <= 1e-6 * (1.0 + b.objective));
    }

    #[test]
    fn enlarging_the_family_never_decreases(seed in 0u64..500) {
        let g = DyadicGrid::new(1, 0, 2).unwrap();
        let fam = random_family(seed, g, 2, 4);
        let sub = MaximalFamily::unlabeled(fam.members[..2].to_vec()).unwrap();
        for p in [MaxNormP::One, MaxNormP::Two, MaxNormP::Inf] {
            let big = strong_max_norm(&fam, p).unwrap();
            let small = strong_max_norm(&sub, p).unwrap();
            prop_assert!(big.objective >= small.objective - 1e-6 * (1.0 + small.objective));
        }
    }

    #[test]
    fn weak_certificates_verify(seed in 0u64..500, lambda in 0.2f64..2.0) {
        let g = DyadicGrid::new(1, 0, 3).unwrap();
        let fam = random_family(seed, g, 4, 3);
        let cert = weak_max_quasinorm_upper(&fam, lambda, None).unwrap();
        prop_assert!(cert.valid);
        prop_assert!(cert.max_compressed <= lambda * (1.0 + 1e-9));
        let e = &cert.e;
        for c in 0..e.len() {
            let m = e.value(c);
            prop_assert!((&m.matmul(m) - m).max_abs() < 1e-9);
        }
        prop_assert!(schatten_norm(&CMatrix::zeros(1), 1.0).unwrap() == 0.0);
    }
}
