//! Randomized invariants across the library.

use hardy_interp::circle::CircleFunction;
use hardy_interp::convex::SolverOptions;
use hardy_interp::embeddings::kq_embed;
use hardy_interp::factorize::{holder_factor, outer_function, sqrt_factor, DEFAULT_EPS_ZERO};
use hardy_interp::harness::{instance_rng, random_analytic_poly, random_matrix, random_triangular, random_trig_poly};
use hardy_interp::kfunc::{self, CoupleId, Element};
use hardy_interp::schatten::{
    diagonal_part, kt_schatten, triangular_factor_with, FactorBranch, MatrixOperator,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = usize> {
    prop_oneof![Just(8usize), Just(16), Just(32)]
}

fn smooth_weight(seed: u64, n: usize) -> CircleFunction {
    let f = random_trig_poly(&mut instance_rng(seed, 1), n);
    let m = f.modulus();
    let top = m.iter().copied().fold(0.0, f64::max);
    CircleFunction::from_real(&m.iter().map(|v| (v / top - 0.5).exp()).collect::<Vec<_>>()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn riesz_projection_is_an_orthogonal_projection(seed in any::<u64>(), n in grid()) {
        let mut rng = instance_rng(seed, 0);
        let f = random_trig_poly(&mut rng, n);
        let g = random_trig_poly(&mut rng, n);
        let pf = f.riesz_project();
        prop_assert!(pf.riesz_project().max_diff(&pf) < 1e-10);
        let lhs = pf.inner(&g);
        let rhs = f.inner(&g.riesz_project());
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn rearrangement_k_functional_shape(seed in any::<u64>(), n in grid()) {
        let f = random_trig_poly(&mut instance_rng(seed, 0), n);
        let ts: Vec<f64> = (0..20).map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / 19.0)).collect();
        let ks: Vec<f64> = ts.iter().map(|&t| f.kt_l1_linf(t).unwrap()).collect();
        for i in 1..ts.len() {
            prop_assert!(ks[i] >= ks[i - 1] - 1e-12);
            prop_assert!(ks[i] / ts[i] <= ks[i - 1] / ts[i - 1] + 1e-12);
        }
        for i in 1..ts.len() - 1 {
            let w = (ts[i] - ts[i - 1]) / (ts[i + 1] - ts[i - 1]);
            let chord = (1.0 - w) * ks[i - 1] + w * ks[i + 1];
            prop_assert!(ks[i] >= chord - 1e-12);
        }
    }

    #[test]
    fn truncation_at_rearrangement_level_is_optimal(seed in any::<u64>(), n in grid(), t in 0.01f64..2.0) {
        let f = random_trig_poly(&mut instance_rng(seed, 0), n);
        let level = f.rearrange().value_at(t);
        let (big, small) = f.truncate_at_level(level).unwrap();
        let cost = big.lp_norm(1.0).unwrap() + t * small.sup_norm();
        prop_assert!(cost <= f.kt_l1_linf(t).unwrap() + 1e-9);
    }

    #[test]
    fn k_below_min_below_j(seed in any::<u64>(), n in grid(), t in 0.01f64..100.0) {
        let x = Element::Circle(random_trig_poly(&mut instance_rng(seed, 0), n));
        let couple = CoupleId::lebesgue(1.0, f64::INFINITY).unwrap();
        let opts = SolverOptions::default();
        let k = kfunc::kt(&x, couple, t, &opts).unwrap();
        let (a, b) = couple.norms(&x).unwrap();
        let m = a.min(t * b);
        prop_assert!(k <= m + 1e-12);
        prop_assert!(m <= kfunc::jt(&x, couple, t).unwrap() + 1e-12);
    }

    #[test]
    fn outer_function_is_multiplicative(seed in any::<u64>(), n in prop_oneof![Just(64usize), Just(128)]) {
        let w1 = smooth_weight(seed, n);
        let w2 = smooth_weight(seed.wrapping_add(1), n);
        let o1 = outer_function(&w1).unwrap();
        let o2 = outer_function(&w2).unwrap();
        let o12 = outer_function(&w1.mul(&w2)).unwrap();
        prop_assert!(o12.boundary().max_diff(&o1.boundary().mul(o2.boundary())) < 1e-6 * o12.boundary().sup_norm());
        prop_assert!(o1.modulus_error() < 1e-12);
        for p in [1.0, 2.0, f64::INFINITY] {
            let a = CircleFunction::from_real(&o1.boundary().modulus()).unwrap().lp_norm(p).unwrap();
            prop_assert!((a - w1.lp_norm(p).unwrap()).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn sqrt_factor_halves_exponents(seed in any::<u64>()) {
        let f = random_analytic_poly(&mut instance_rng(seed, 0), 64);
        let sf = sqrt_factor(&f, DEFAULT_EPS_ZERO).unwrap();
        let big_f = sf.outer.boundary();
        for p in [1.0, 2.0] {
            let lhs = big_f.lp_norm(2.0 * p).unwrap().powi(2);
            let rhs = f.lp_norm(p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
        }
    }

    #[test]
    fn holder_factor_moduli(seed in any::<u64>(), r in 1.5f64..6.0) {
        let f = random_analytic_poly(&mut instance_rng(seed, 0), 64);
        let p = 1.0;
        let s = 1.0 / (1.0 / p - 1.0 / r);
        let hf = holder_factor(&f, p, r, s, DEFAULT_EPS_ZERO).unwrap();
        let floor = DEFAULT_EPS_ZERO * f.sup_norm();
        for ((g, h), z) in hf.g.samples().iter().zip(hf.h.samples()).zip(f.samples()) {
            let m = z.norm().max(floor);
            prop_assert!((g.norm() - m.powf(p / r)).abs() < 1e-6);
            prop_assert!((h.norm() - m.powf(p / s)).abs() < 1e-6);
        }
    }

    #[test]
    fn schatten_k_functional_three_way(seed in any::<u64>(), n in 1usize..7, t in 0.05f64..5.0) {
        let x = random_matrix(&mut instance_rng(seed, 0), n);
        let opts = SolverOptions::default();
        let a = kt_schatten(&x, 1.0, f64::INFINITY, t, &opts).unwrap();
        let b = kt_schatten(&x.abs(), 1.0, f64::INFINITY, t, &opts).unwrap();
        let sv = x.singular_values();
        let mut closed = 0.0;
        let mut left = t;
        for &s in sv.values() {
            let w = left.clamp(0.0, 1.0);
            closed += w * s;
            left -= w;
        }
        prop_assert!((a - b).abs() < 1e-8 * a.max(1.0));
        prop_assert!((a - closed).abs() < 1e-8 * a.max(1.0));
    }

    #[test]
    fn singular_value_powers(seed in any::<u64>(), n in 1usize..7) {
        let x = random_matrix(&mut instance_rng(seed, 0), n);
        let base = x.singular_values();
        for alpha in [0.5, 2.0] {
            let powered = x.abs_power(alpha).singular_values();
            for (a, b) in powered.values().iter().zip(base.values()) {
                prop_assert!((a - b.powf(alpha)).abs() < 1e-8 * b.powf(alpha).max(1.0));
            }
        }
    }

    #[test]
    fn diagonal_projection_contracts(seed in any::<u64>(), n in 1usize..8) {
        let x = random_matrix(&mut instance_rng(seed, 0), n);
        let d = diagonal_part(&x);
        for p in [1.0, 2.0, f64::INFINITY] {
            prop_assert!(d.schatten_norm(p) <= x.schatten_norm(p) + 1e-10);
        }
    }

    #[test]
    fn factorization_branches_agree(seed in any::<u64>(), n in 1usize..7) {
        let x = random_triangular(&mut instance_rng(seed, 0), n);
        let right = triangular_factor_with(&x, 1.0, 2.0, 2.0, FactorBranch::Right).unwrap();
        let left = triangular_factor_with(&x, 1.0, 2.0, 2.0, FactorBranch::Left).unwrap();
        let pr = right.a.schatten_norm(2.0) * right.b.schatten_norm(2.0);
        let pl = left.a.schatten_norm(2.0) * left.b.schatten_norm(2.0);
        prop_assert!((pr - pl).abs() < 1e-8 * pr);
        prop_assert!(right.triangularity_error() < 1e-10 && left.triangularity_error() < 1e-10);
    }

    #[test]
    fn embedding_scales_and_increases(seed in any::<u64>(), q in 1.5f64..4.0, c in 0.1f64..5.0) {
        let f = random_trig_poly(&mut instance_rng(seed, 0), 16);
        let a = kq_embed(&f, q, 64).unwrap();
        let b = kq_embed(&f.scale(Complex64::new(0.0, c)), q, 64).unwrap();
        prop_assert!((b.sup - c.powf(q) * a.sup).abs() <= 1e-10 * b.sup.max(1.0));
        let more = kq_embed(&f, q, 128).unwrap();
        prop_assert!(more.sup >= a.sup - 1e-12);
        prop_assert!(more.residual <= a.residual + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn oracle_certificates_are_consistent(seed in any::<u64>(), t in 0.05f64..5.0) {
        let f = random_trig_poly(&mut instance_rng(seed, 0), 16);
        let x = Element::Circle(f.clone());
        let opts = SolverOptions::with_tol(1e-8);
        let ambient = kfunc::kt_bruteforce(&x, CoupleId::lebesgue(1.0, f64::INFINITY).unwrap(), t, &opts).unwrap();
        prop_assert!(ambient.certificate.dual <= ambient.certificate.primal + 1e-9);
        prop_assert!((ambient.value - f.kt_l1_linf(t).unwrap()).abs() < 1e-6 * ambient.value.max(1.0));

        let g = Element::Circle(f.riesz_project());
        let sub = kfunc::kt_bruteforce(&g, CoupleId::hardy(1.0, f64::INFINITY).unwrap(), t, &opts).unwrap();
        let amb = kfunc::kt_bruteforce(&g, CoupleId::lebesgue(1.0, f64::INFINITY).unwrap(), t, &opts).unwrap();
        prop_assert!(sub.value >= amb.certificate.dual - 1e-9);
        prop_assert!(sub.decomposition.is_valid(1e-8, 1e-8));
    }

    #[test]
    fn triangular_identity_matrix_unit(n in 1usize..6) {
        let x = MatrixOperator::identity(n);
        let right = triangular_factor_with(&x, 2.0, 3.0, 6.0, FactorBranch::Right).unwrap();
        prop_assert!(right.reconstruction_error(&x) < 1e-12);
    }
}
