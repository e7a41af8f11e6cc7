use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{cholesky_upper, hermitian_power, triangular_part, upper_inverse, MatrixOperator};
use crate::convex::SolverOptions;
use crate::error::{Error, Result};
use crate::kfunc::{self, CoupleDecomposition, CoupleId, Element};
use crate::split::{search_level, sv_truncate};

/// Constructive `(T₁, T_q)` split of an upper triangular matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangularDecomposition {
    pub decomposition: CoupleDecomposition,
    /// `K_t(x; C₁, C_q)`.
    pub ambient_k: f64,
    pub ratio: f64,
    /// Regularization added to `|x|` before the Cholesky step (0 if none).
    pub eps_reg: f64,
    /// `‖a₀b₀ + a₁b₁ + a₀b₁ + a₁b₀ − x‖_∞ / ‖x‖_∞`.
    pub expansion_residual: f64,
    /// `2r(ε/2) − r(ε)` when regularized, else the plain residual.
    pub expansion_residual_extrapolated: f64,
    /// `(‖a₀‖₂, ‖a₁‖_{2q})`.
    pub a_norms: (f64, f64),
    /// `(‖b₀‖₂, ‖b₁‖_{2q})`.
    pub b_norms: (f64, f64),
}

fn sv_marks(m: &DMatrix<Complex64>) -> Vec<f64> {
    m.singular_values().iter().copied().collect()
}

fn schatten(m: &DMatrix<Complex64>, p: f64) -> f64 {
    crate::convex::prox::lp(&sv_marks(m), p)
}

/// Singular-value truncation at the level minimising the ambient
/// `(C₂, C_{2q})` cost at `s`, followed by the triangular projection.
fn split_factor(m: &DMatrix<Complex64>, q: f64, s: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let sv = sv_marks(m);
    let (level, _) = search_level(&sv, |l| {
        let big: Vec<f64> = sv.iter().map(|&v| (v - l).max(0.0)).collect();
        let small: Vec<f64> = sv.iter().map(|&v| v.min(l)).collect();
        crate::convex::prox::lp(&big, 2.0) + s * crate::convex::prox::lp(&small, 2.0 * q)
    });
    let (_, small) = sv_truncate(m, level);
    let m1 = triangular_part(&MatrixOperator::from_matrix_unchecked(small)).into_matrix();
    (m - &m1, m1)
}

struct Pieces {
    x1: DMatrix<Complex64>,
    residual: f64,
    a_norms: (f64, f64),
    b_norms: (f64, f64),
}

fn pieces(xm: &DMatrix<Complex64>, q: f64, t: f64, eps: f64) -> Result<Pieces> {
    let n = xm.nrows();
    let mut m = hermitian_power(&(xm.adjoint() * xm), 0.5);
    for i in 0..n {
        m[(i, i)] += Complex64::new(eps, 0.0);
    }
    let b = cholesky_upper(&m)?;
    let a = xm * upper_inverse(&b)?;
    let s = t.sqrt();
    let (a0, a1) = split_factor(&a, q, s);
    let (b0, b1) = split_factor(&b, q, s);
    let d1 = &a1 * &b1;
    let cross = &a0 * &b1 + &a1 * &b0;
    let expansion = &a0 * &b0 + &d1 + &cross;
    let residual = schatten(&(expansion - xm), f64::INFINITY) / schatten(xm, f64::INFINITY);
    let cost_of = |x1: &DMatrix<Complex64>| schatten(&(xm - x1), 1.0) + t * schatten(x1, q);
    let cross_at = |l: f64| -> DMatrix<Complex64> {
        let (_, small) = sv_truncate(&cross, l);
        triangular_part(&MatrixOperator::from_matrix_unchecked(small)).into_matrix()
    };
    let (level, _) = search_level(&sv_marks(&cross), |l| cost_of(&(&d1 + cross_at(l))));
    let x1 = triangular_part(&MatrixOperator::from_matrix_unchecked(&d1 + cross_at(level))).into_matrix();
    Ok(Pieces {
        x1,
        residual,
        a_norms: (schatten(&a0, 2.0), schatten(&a1, 2.0 * q)),
        b_norms: (schatten(&b0, 2.0), schatten(&b1, 2.0 * q)),
    })
}

/// `x = ab` with `b*b = |x|` (regularized by `eps_reg·I` when `x` is
/// singular), both factors split at `√t` in `(T₂, T_{2q})`, and the four
/// products redistributed: `x₁ = a₁b₁ + ` (optimal truncation of the cross
/// terms), `x₀ = x − x₁`. `eps_reg` is relative to `‖x‖_∞`.
pub fn decompose_t1_tq(
    x: &MatrixOperator,
    q: f64,
    t: f64,
    eps_reg: f64,
    opts: &SolverOptions,
) -> Result<TriangularDecomposition> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidExponent(q));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    if !x.is_upper_triangular(1e-12) {
        return Err(Error::NotInSubspace(x.triangular_residual()));
    }
    let couple = CoupleId::triangular(1.0, q)?;
    let el = Element::Matrix(x.clone());
    let ambient_k = kfunc::kt_value(&el, couple.ambient(), t, opts)?.lower;
    let norm = x.schatten_norm(f64::INFINITY);
    if norm == 0.0 {
        let decomposition = CoupleDecomposition::new(&el, el.zero_like(), el.zero_like(), couple, t)?;
        return Ok(TriangularDecomposition {
            decomposition,
            ambient_k,
            ratio: 1.0,
            eps_reg: 0.0,
            expansion_residual: 0.0,
            expansion_residual_extrapolated: 0.0,
            a_norms: (0.0, 0.0),
            b_norms: (0.0, 0.0),
        });
    }
    let xm = triangular_part(x).into_matrix();
    let sv = x.singular_values();
    let singular = sv.smallest() <= 1e-12 * sv.largest();
    let eps = if singular { eps_reg * norm } else { 0.0 };
    let full = pieces(&xm, q, t, eps)?;
    let extrapolated = if singular {
        let half = pieces(&xm, q, t, eps / 2.0)?;
        (2.0 * half.residual - full.residual).abs()
    } else {
        full.residual
    };
    let x1 = MatrixOperator::from_matrix_unchecked(full.x1);
    let x0 = x.sub(&x1);
    let decomposition = CoupleDecomposition::new(&el, Element::Matrix(x0), Element::Matrix(x1), couple, t)?;
    Ok(TriangularDecomposition {
        ratio: kfunc::k_ratio(decomposition.cost, ambient_k),
        decomposition,
        ambient_k,
        eps_reg: eps,
        expansion_residual: full.residual,
        expansion_residual_extrapolated: extrapolated,
        a_norms: full.a_norms,
        b_norms: full.b_norms,
    })
}
