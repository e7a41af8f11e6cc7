//! The embedding `F ↦ (n^{-1/q} F)_{n≥1}` and its weak-type norm
//! identities, with the sum over `n` truncated at `n_max`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::CircleFunction;
use crate::error::{Error, Result};
use crate::schatten::MatrixOperator;

/// Default truncation of the sum over `n`.
pub const DEFAULT_N_MAX: usize = 10_000;

const MAX_TERMS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    /// Supremum over the breakpoints of the truncated functional.
    pub sup: f64,
    /// The value the supremum converges to as `n_max → ∞`.
    pub target: f64,
    /// `target − sup`.
    pub residual: f64,
    /// Bound on what the omitted terms `n > n_max` add at `argmax`.
    pub tail_bound: f64,
    /// Level at which the supremum is attained (as a left limit).
    pub argmax: f64,
}

fn check(q: f64, n_max: usize) -> Result<()> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidExponent(q));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    Ok(())
}

/// Distinct positive values with multiplicities.
fn distinct(mut v: Vec<f64>) -> Vec<(f64, usize)> {
    v.retain(|&x| x > 0.0);
    v.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<(f64, usize)> = Vec::new();
    for x in v {
        match out.last_mut() {
            Some((y, m)) if *y == x => *m += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// The multiset `{n^{-1/q} a : n ≤ n_max}` sorted non-increasingly with
/// cumulative multiplicities.
fn scaled_multiset(values: &[(f64, usize)], q: f64, n_max: usize) -> Result<Vec<(f64, usize)>> {
    let total = values.len().saturating_mul(n_max);
    if total > MAX_TERMS {
        return Err(Error::TooLarge(format!("{total} embedding terms")));
    }
    let weights: Vec<f64> = (1..=n_max).map(|n| (n as f64).powf(-1.0 / q)).collect();
    let mut all: Vec<(f64, usize)> = values
        .par_iter()
        .flat_map_iter(|&(a, m)| weights.iter().map(move |&w| (w * a, m)))
        .collect();
    all.par_sort_unstable_by(|x, y| y.0.total_cmp(&x.0));
    let mut acc = 0;
    for e in all.iter_mut() {
        acc += e.1;
        e.1 = acc;
    }
    Ok(all)
}

/// `sup_t Σ_{n ≤ n_max} t^q m{n^{-1/q}|F| > t}` against `∫|F|^q`.
///
/// The functional is a step function of `t` that jumps down at each value
/// `n^{-1/q}|F(e^{iθ_k})|`; its supremum is the largest left limit at those
/// breakpoints.
pub fn kq_embed(f: &CircleFunction, q: f64, n_max: usize) -> Result<EmbeddingReport> {
    check(q, n_max)?;
    let grid = f.len() as f64;
    let modulus = f.modulus();
    let target = modulus.iter().map(|v| v.powf(q)).sum::<f64>() / grid;
    let sup_f = f.sup_norm();
    let values = distinct(modulus);
    if values.is_empty() {
        return Ok(EmbeddingReport {
            sup: 0.0,
            target: 0.0,
            residual: 0.0,
            tail_bound: 0.0,
            argmax: 0.0,
        });
    }
    let all = scaled_multiset(&values, q, n_max)?;
    let (sup, argmax) = all
        .iter()
        .map(|&(b, cum)| (b.powf(q) * cum as f64 / grid, b))
        .fold((0.0, 0.0), |best, cand| if cand.0 > best.0 { cand } else { best });
    let tail_bound = (sup_f.powf(q) - n_max as f64 * argmax.powf(q)).max(0.0);
    Ok(EmbeddingReport {
        sup,
        target,
        residual: target - sup,
        tail_bound,
        argmax,
    })
}

/// Weak-`C_q` norm `sup_k (k+1)^{1/q} v_k` of the rearranged multiset
/// `{n^{-1/q} a_k(x)}` against `‖x‖_q`.
pub fn kq_embed_matrix(x: &MatrixOperator, q: f64, n_max: usize) -> Result<EmbeddingReport> {
    check(q, n_max)?;
    let sv = x.singular_values();
    let target = sv.lp(q);
    let values = distinct(sv.values().to_vec());
    if values.is_empty() {
        return Ok(EmbeddingReport {
            sup: 0.0,
            target: 0.0,
            residual: 0.0,
            tail_bound: 0.0,
            argmax: 0.0,
        });
    }
    let all = scaled_multiset(&values, q, n_max)?;
    let (sup, argmax) = all
        .iter()
        .map(|&(v, cum)| ((cum as f64).powf(1.0 / q) * v, v))
        .fold((0.0, 0.0), |best, cand| if cand.0 > best.0 { cand } else { best });
    let tail_bound = (sv.largest().powf(q) - n_max as f64 * argmax.powf(q)).max(0.0).powf(1.0 / q);
    Ok(EmbeddingReport {
        sup,
        target,
        residual: target - sup,
        tail_bound,
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn constant_function() {
        let f = CircleFunction::constant(16, Complex64::new(1.0, 0.0)).unwrap();
        let r = kq_embed(&f, 2.0, DEFAULT_N_MAX).unwrap();
        assert!((r.target - 1.0).abs() < 1e-15);
        assert!(r.residual.abs() < 1e-4);
    }

    #[test]
    fn zero_function() {
        let f = CircleFunction::zero(16).unwrap();
        let r = kq_embed(&f, 2.0, 100).unwrap();
        assert_eq!(r.sup, 0.0);
        let r = kq_embed_matrix(&MatrixOperator::zeros(3), 2.0, 100).unwrap();
        assert_eq!(r.sup, 0.0);
    }

    #[test]
    fn two_level_function() {
        let v: Vec<f64> = (0..32).map(|k| if k % 2 == 0 { 3.0 } else { 1.0 }).collect();
        let f = CircleFunction::from_real(&v).unwrap();
        let r = kq_embed(&f, 2.0, DEFAULT_N_MAX).unwrap();
        assert!((r.target - 5.0).abs() < 1e-12);
        assert!(r.residual >= -1e-12 && r.residual < 1e-3);
    }

    #[test]
    fn sup_never_exceeds_target() {
        let f = CircleFunction::from_fn(32, |t| Complex64::new(1.0 + t.sin(), 0.3 * t.cos())).unwrap();
        let mut prev = 0.0;
        for n_max in [1, 4, 16, 64, 256] {
            let r = kq_embed(&f, 3.0, n_max).unwrap();
            assert!(r.sup <= r.target * (1.0 + 1e-12));
            assert!(r.sup >= prev);
            prev = r.sup;
        }
    }

    #[test]
    fn scaling() {
        let f = CircleFunction::from_fn(16, |t| Complex64::new(2.0 + t.cos(), t.sin())).unwrap();
        let a = kq_embed(&f, 2.5, 200).unwrap();
        let b = kq_embed(&f.scale(Complex64::new(0.0, 3.0)), 2.5, 200).unwrap();
        assert!((b.sup - 3f64.powf(2.5) * a.sup).abs() < 1e-10 * b.sup);
    }

    #[test]
    fn matrix_variant() {
        let r = kq_embed_matrix(&MatrixOperator::diag(&[1.0]), 2.0, DEFAULT_N_MAX).unwrap();
        assert!(r.residual.abs() < 1e-2);
        let x = MatrixOperator::diag(&[3.0, 1.0]);
        let mut prev = f64::INFINITY;
        for n_max in [1_000, 10_000, 100_000] {
            let r = kq_embed_matrix(&x, 2.0, n_max).unwrap();
            assert!(r.residual <= prev + 1e-12);
            prev = r.residual;
        }
    }

    #[test]
    fn rejects_bad_exponent() {
        let f = CircleFunction::zero(8).unwrap();
        assert!(kq_embed(&f, 1.0, 10).is_err());
        assert!(kq_embed(&f, 2.0, 0).is_err());
    }
}
