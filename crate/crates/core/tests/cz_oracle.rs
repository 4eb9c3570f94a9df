//! Scalar (n = 1) decompositions against the classical stopping-time construction.

use nccz::algebra::CMatrix;
use nccz::cz::{decompose, validate};
use nccz::dyadic::{DyadicGrid, OperatorField};
use nccz::report::all_hold;
use proptest::prelude::*;

mod common;
use common::classical::classical;

fn run(vals: Vec<f64>, lambda: f64) {
    let (k_min, k_max) = (-1, -1 + vals.len().trailing_zeros() as i32);
    let grid = DyadicGrid::new(1, k_min, k_max).unwrap();
    let f = OperatorField::from_scalars(grid, &vals).unwrap();
    let dec = match decompose(&f, lambda, 4) {
        Ok(d) => d,
        Err(nccz::NcczError::CoarsestLevelViolation { .. }) => return,
        Err(e) => panic!("{e}"),
    };
    let oracle = classical(&vals, k_min, k_max, lambda, 4);
    let bd = dec.bd_total().scalar_values();
    for c in 0..vals.len() {
        assert!((dec.g.value(c)[(0, 0)].re - oracle.g[c]).abs() < 1e-12 * (1.0 + vals[c]));
        assert!((bd[c] - oracle.b[c]).abs() < 1e-12 * (1.0 + vals[c]));
        let z = dec.zeta.value(c)[(0, 0)].re;
        assert_eq!(z == 1.0, oracle.outside[c], "cell {c}");
    }
    assert!(dec.boff_total().values().iter().all(|v| v.max_abs() < 1e-14));
    let rep = validate(&dec, &f).unwrap();
    assert!(all_hold(&rep), "{:?}", nccz::report::failures(&rep));
}

#[test]
fn two_spikes() {
    let mut v = vec![0.1; 64];
    v[5] = 40.0;
    v[40] = 9.0;
    v[41] = 9.0;
    run(v, 1.0);
}

#[test]
fn block_diagonal_matches_scalar_pair() {
    let grid = DyadicGrid::new(1, 0, 5).unwrap();
    let a: Vec<f64> = (0..32).map(|i| if i % 7 == 0 { 6.0 } else { 0.2 }).collect();
    let b: Vec<f64> = (0..32).map(|i| if i > 25 { 5.0 } else { 0.0 }).collect();
    let f = OperatorField::new(grid, 2, (0..32).map(|c| CMatrix::from_real_diag(&[a[c], b[c]])).collect()).unwrap();
    let dec = decompose(&f, 1.5, 4).unwrap();
    let fa = decompose(&OperatorField::from_scalars(grid, &a).unwrap(), 1.5, 4).unwrap();
    let fb = decompose(&OperatorField::from_scalars(grid, &b).unwrap(), 1.5, 4).unwrap();
    for c in 0..32 {
        assert!((dec.g.value(c)[(0, 0)].re - fa.g.value(c)[(0, 0)].re).abs() < 1e-13);
        assert!((dec.g.value(c)[(1, 1)].re - fb.g.value(c)[(0, 0)].re).abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scalar_matches_classical(vals in prop::collection::vec(prop_oneof![3 => 0.0..1.0f64, 1 => 0.0..30.0f64], 64), lambda in 1.0..4.0f64) {
        run(vals, lambda);
    }

    #[test]
    fn random_psd_fields_validate(seed in any::<u64>(), lambda in 0.5..3.0f64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = DyadicGrid::new(1, -1, 5).unwrap();
        let vals: Vec<CMatrix> = (0..64).map(|_| {
            let scale = if rng.gen::<f64>() < 0.15 { 20.0 } else { 1.0 };
            let a = CMatrix::from_fn(3, |_, _| nccz::algebra::C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            a.matmul(&a.adjoint()).scale(scale)
        }).collect();
        let f = OperatorField::new(grid, 3, vals).unwrap();
        if let Ok(dec) = decompose(&f, lambda, 4) {
            let rep = validate(&dec, &f).unwrap();
            prop_assert!(all_hold(&rep), "{:?}", nccz::report::failures(&rep));
        }
    }
}
