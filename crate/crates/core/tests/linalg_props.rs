mod common;

use omplab::linalg::{
    dot, least_squares, norm2, projection_residual, sym_eig, sym_eig_extremes, DenseMatrix,
};
use omplab::sensing::{gaussian_sensing_matrix, rng_from_seed};
use proptest::prelude::*;
use rand::Rng;

fn random_symmetric(seed: u64, n: usize) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    let mut g = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v: f64 = rng.random_range(-2.0..2.0);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

#[test]
fn jacobi_extremes_match_bisection_oracle() {
    for seed in 0..200 {
        let g = random_symmetric(seed, 6);
        let e = sym_eig_extremes(&g).unwrap();
        let rows = common::to_rows(&g);
        let lo = common::eig_bisect(&rows, 0);
        let hi = common::eig_bisect(&rows, 5);
        assert!((e.lambda_min - lo).abs() < 1e-9, "seed {seed}: {} vs {lo}", e.lambda_min);
        assert!((e.lambda_max - hi).abs() < 1e-9, "seed {seed}: {} vs {hi}", e.lambda_max);
    }
}

#[test]
fn full_spectrum_matches_bisection_oracle() {
    for seed in 0..50 {
        let g = random_symmetric(1000 + seed, 5);
        let eig = sym_eig(&g).unwrap();
        let rows = common::to_rows(&g);
        for (i, v) in eig.values.iter().enumerate() {
            assert!((v - common::eig_bisect(&rows, i)).abs() < 1e-9);
        }
    }
}

#[test]
fn least_squares_matches_normal_equations() {
    for seed in 0..100 {
        let a = gaussian_sensing_matrix(15, 5, seed, false).unwrap();
        let mut rng = rng_from_seed(seed + 7);
        let y: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = least_squares(&a, &y).unwrap();
        let (oracle, _) = common::ls_oracle(&a, &y, &[0, 1, 2, 3, 4]);
        for (u, v) in z.iter().zip(&oracle) {
            assert!((u - v).abs() < 1e-9 * (1.0 + v.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_is_contractive_orthogonal_idempotent(
        seed in any::<u64>(),
        m in 4usize..12,
        s in 1usize..4,
    ) {
        let a = gaussian_sensing_matrix(m, s, seed, false).unwrap();
        let mut rng = rng_from_seed(seed ^ 0xabc);
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let r = projection_residual(&a, &y).unwrap();
        prop_assert!(norm2(&r) <= norm2(&y) + 1e-12);
        for j in 0..s {
            prop_assert!(dot(a.column(j), &r).abs() <= 1e-9 * (1.0 + norm2(&y)));
        }
        let rr = projection_residual(&a, &r).unwrap();
        for (u, v) in r.iter().zip(&rr) {
            prop_assert!((u - v).abs() <= 1e-10 * (1.0 + norm2(&y)));
        }
    }

    #[test]
    fn rayleigh_quotient_is_sandwiched(seed in any::<u64>(), n in 2usize..7) {
        let g = random_symmetric(seed, n);
        let e = sym_eig_extremes(&g).unwrap();
        let mut rng = rng_from_seed(seed.wrapping_add(1));
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gu = g.mul_vec(&u).unwrap();
        let q = dot(&u, &gu) / dot(&u, &u);
        prop_assert!(q >= e.lambda_min - 1e-10 && q <= e.lambda_max + 1e-10);
    }
}
