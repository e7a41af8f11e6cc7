//! Decompositions in Hardy-space couples: the projected truncation split,
//! the squaring construction for `(H¹, H^q)` and `(H¹, H^∞)`, and
//! simultaneous best approximation by analytic functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{grid_lp, CircleFunction};
use crate::convex::{self, NormSpec, Simultaneous, SolverCertificate, SolverOptions, Subspace};
use crate::error::{Error, Result};
use crate::factorize::{check_analytic, sqrt_factor, SqrtFactorization, DEFAULT_EPS_ZERO};
use crate::kfunc::{self, CoupleDecomposition, CoupleId, Element, MAX_ORACLE_GRID};
use crate::split::{search_level, truncate_values};

fn lp_of(f: &CircleFunction, p: f64) -> f64 {
    grid_lp(f.samples().iter().map(|z| z.norm()), f.len(), p)
}

fn zero_split(f: &CircleFunction, couple: CoupleId, t: f64) -> Result<CoupleDecomposition> {
    let x = Element::Circle(f.clone());
    CoupleDecomposition::new(&x, x.zero_like(), x.zero_like(), couple, t)
}

/// Projected truncation split of an analytic function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseSplit {
    pub decomposition: CoupleDecomposition,
    /// Truncation level chosen for the ambient couple.
    pub level: f64,
    /// Ambient cost of the truncation split before projection.
    pub ambient_cost: f64,
}

/// Optimal-level truncation split for `(L^{p₀}, L^{p₁})` followed by the
/// Riesz projection of both parts. Requires `1 < p₀ < p₁ < ∞`.
pub fn decompose_base(f: &CircleFunction, p0: f64, p1: f64, t: f64) -> Result<BaseSplit> {
    if !(p0 > 1.0 && p0.is_finite()) {
        return Err(Error::InvalidExponent(p0));
    }
    if !(p1 > p0 && p1.is_finite()) {
        return Err(Error::InvalidExponent(p1));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    check_analytic(f)?;
    base_split(f, p0, p1, t)
}

/// [`decompose_base`] without the analyticity check; `x₁` is analytic and
/// `x₀ = f − x₁` inherits whatever non-analytic part `f` has.
fn base_split(f: &CircleFunction, p0: f64, p1: f64, t: f64) -> Result<BaseSplit> {
    let couple = CoupleId::hardy(p0, p1)?;
    let n = f.len();
    let m = f.modulus();
    let (level, ambient_cost) = search_level(&m, |l| {
        let big = grid_lp(m.iter().map(|&v| (v - l).max(0.0)), n, p0);
        let small = grid_lp(m.iter().map(|&v| v.min(l)), n, p1);
        big + t * small
    });
    let (_, small) = f.truncate_at_level(level)?;
    let x1 = small.riesz_project();
    let x0 = f.sub(&x1);
    let decomposition = CoupleDecomposition::new(
        &Element::Circle(f.clone()),
        Element::Circle(x0),
        Element::Circle(x1),
        couple,
        t,
    )?;
    Ok(BaseSplit {
        decomposition,
        level,
        ambient_cost,
    })
}

/// Output of the squaring construction `f = B(g₀ + g₁)²`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SquaringSplit {
    pub decomposition: CoupleDecomposition,
    pub factor_tol: f64,
    pub blaschke_degree: usize,
    /// `‖g₀‖₂`.
    pub g0_norm: f64,
    /// `‖g₁‖_{2q}`.
    pub g1_norm: f64,
    /// `p` with `1/p = 1/2 + 1/(2q)`.
    pub holder_p: f64,
    /// `‖2g₀g₁‖_p`.
    pub holder_lhs: f64,
    /// `2‖g₀‖₂‖g₁‖_{2q}`.
    pub holder_rhs: f64,
    /// `max|B(g₀ + g₁)² − f| / ‖f‖_∞`.
    pub squaring_residual: f64,
    /// Truncation level used for the cross term.
    pub cross_level: f64,
}

impl SquaringSplit {
    pub fn holder_holds(&self, slack: f64) -> bool {
        self.holder_lhs <= self.holder_rhs + slack
    }
}

fn holder_exponent(q: f64) -> f64 {
    if q.is_infinite() {
        2.0
    } else {
        2.0 * q / (q + 1.0)
    }
}

/// Assembles `x₁ = P(B g₁²) + c₁` where `c₁` is a projected truncation of
/// the cross term `2B g₀ g₁`, its level minimising the final `(L¹, L^q)`
/// cost; `x₀ = f − x₁`.
fn assemble(
    f: &CircleFunction,
    sf: &SqrtFactorization,
    g0: &CircleFunction,
    g1: &CircleFunction,
    q: f64,
    t: f64,
) -> Result<SquaringSplit> {
    let b = sf.blaschke_on_grid();
    let d1 = b.mul(&g1.mul(g1)).riesz_project();
    let cross = b.mul(&g0.mul(g1)).scale(Complex64::new(2.0, 0.0));
    let marks = cross.modulus();
    let c1_at = |level: f64| -> CircleFunction {
        let (_, small) = truncate_values(cross.samples(), level);
        CircleFunction::from_samples_unchecked(small).riesz_project()
    };
    let cost_of = |x1: &CircleFunction| lp_of(&f.sub(x1), 1.0) + t * lp_of(x1, q);
    let (cross_level, _) = search_level(&marks, |l| cost_of(&d1.add(&c1_at(l))));
    let x1 = d1.add(&c1_at(cross_level));
    let x0 = f.sub(&x1);
    let couple = CoupleId::hardy(1.0, q)?;
    let decomposition = CoupleDecomposition::new(
        &Element::Circle(f.clone()),
        Element::Circle(x0),
        Element::Circle(x1),
        couple,
        t,
    )?;
    let holder_p = holder_exponent(q);
    let g0_norm = lp_of(g0, 2.0);
    let g1_norm = lp_of(g1, 2.0 * q);
    let sum = g0.add(g1);
    let squaring_residual = b.mul(&sum.mul(&sum)).max_diff(f) / f.sup_norm();
    Ok(SquaringSplit {
        decomposition,
        factor_tol: sf.tol_factor,
        blaschke_degree: sf.blaschke.degree(),
        g0_norm,
        g1_norm,
        holder_p,
        holder_lhs: lp_of(&cross, holder_p),
        holder_rhs: 2.0 * g0_norm * g1_norm,
        squaring_residual,
        cross_level,
    })
}

/// `(H¹, H^q)` decomposition by squaring: factor `f = BF²`, split `F` in
/// `(H², H^{2q})` at `√t`, expand `B(g₀ + g₁)²` and distribute the terms.
pub fn decompose_h1_hq(f: &CircleFunction, q: f64, t: f64) -> Result<SquaringSplit> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidExponent(q));
    }
    let sf = sqrt_factor(f, DEFAULT_EPS_ZERO)?;
    // F is analytic only up to aliasing on the grid
    let base = base_split(sf.outer.boundary(), 2.0, 2.0 * q, t.sqrt())?;
    let (g0, g1) = match (&base.decomposition.x0, &base.decomposition.x1) {
        (Element::Circle(a), Element::Circle(b)) => (a.clone(), b.clone()),
        _ => unreachable!("circle split"),
    };
    assemble(f, &sf, &g0, &g1, q, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Convex program over analytic splits.
    #[default]
    Oracle,
    /// Squaring route with the `(H², H^∞)` step solved by the oracle.
    Constructive,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Backend::Oracle),
            "constructive" => Ok(Backend::Constructive),
            _ => Err(Error::InvalidParameter(format!("unknown backend '{s}'"))),
        }
    }
}

/// `(H¹, H^∞)` decomposition with its ratio against `∫_0^t f*`.
#[derive(Debug, Clone)]
pub struct H1HinfSplit {
    pub decomposition: CoupleDecomposition,
    pub ambient_k: f64,
    pub ratio: f64,
    pub certificate: Option<SolverCertificate>,
    pub squaring: Option<SquaringSplit>,
}

pub fn decompose_h1_hinf(
    f: &CircleFunction,
    t: f64,
    backend: Backend,
    opts: &SolverOptions,
) -> Result<H1HinfSplit> {
    let couple = CoupleId::hardy(1.0, f64::INFINITY)?;
    let ambient_k = f.kt_l1_linf(t)?;
    check_analytic(f)?;
    if f.sup_norm() == 0.0 {
        return Ok(H1HinfSplit {
            decomposition: zero_split(f, couple, t)?,
            ambient_k,
            ratio: 1.0,
            certificate: None,
            squaring: None,
        });
    }
    let (decomposition, certificate, squaring) = match backend {
        Backend::Oracle => {
            let b = kfunc::kt_bruteforce(&Element::Circle(f.clone()), couple, t, opts)?;
            (b.decomposition, Some(b.certificate), None)
        }
        Backend::Constructive => {
            let sf = sqrt_factor(f, DEFAULT_EPS_ZERO)?;
            let big_f = sf.outer.boundary();
            let target = Element::Circle(big_f.riesz_project());
            let b = kfunc::kt_bruteforce(&target, CoupleId::hardy(2.0, f64::INFINITY)?, t.sqrt(), opts)?;
            let g1 = match &b.decomposition.x1 {
                Element::Circle(c) => c.clone(),
                _ => unreachable!("circle split"),
            };
            let g0 = big_f.sub(&g1);
            let s = assemble(f, &sf, &g0, &g1, f64::INFINITY, t)?;
            (s.decomposition.clone(), Some(b.certificate), Some(s))
        }
    };
    let ratio = kfunc::k_ratio(decomposition.cost, ambient_k);
    Ok(H1HinfSplit {
        decomposition,
        ambient_k,
        ratio,
        certificate,
        squaring,
    })
}

/// Analytic `h` simultaneously close to `f` in `L¹` and `L^∞`.
#[derive(Debug, Clone)]
pub struct AnalyticApprox {
    pub h: CircleFunction,
    pub result: Simultaneous,
}

pub fn simultaneous_approx(f: &CircleFunction, opts: &SolverOptions) -> Result<AnalyticApprox> {
    let n = f.len();
    if n > MAX_ORACLE_GRID {
        return Err(Error::TooLarge(format!("grid of size {n}")));
    }
    let result = convex::simultaneous_approx(
        f.samples(),
        Subspace::Analytic { grid: n, stride: 1 },
        (NormSpec::grid_lp(1.0, n), NormSpec::grid_lp(f64::INFINITY, n)),
        opts,
    )?;
    let h = CircleFunction::from_samples_unchecked(result.solution.clone());
    Ok(AnalyticApprox { h, result })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_poly(n: usize) -> CircleFunction {
        CircleFunction::from_poly(
            n,
            &[c(0.4, -0.2), c(1.0, 0.3), c(-0.15, 0.25), c(0.1, 0.05), c(0.0, -0.05), c(0.02, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn base_split_edge_cases() {
        let n = 32;
        let z = CircleFunction::zero(n).unwrap();
        let d = decompose_base(&z, 2.0, 4.0, 1.0).unwrap().decomposition;
        assert!(d.x0.is_zero() && d.x1.is_zero());

        // small t: everything goes to the second space
        let f = CircleFunction::monomial(n, 3).unwrap().scale(c(0.5, 0.0));
        let d = decompose_base(&f, 2.0, 4.0, 1e-3).unwrap().decomposition;
        assert!(d.x0.max_abs() < 1e-12);
        assert!((d.cost - 1e-3 * 0.5).abs() < 1e-12);

        assert!(decompose_base(&f, 1.0, 4.0, 1.0).is_err());
        assert!(decompose_base(&f, 2.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn base_split_ratio_is_moderate() {
        let n = 32;
        let f = CircleFunction::from_poly(n, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)]).unwrap();
        let s = decompose_base(&f, 2.0, 4.0, 1.0).unwrap();
        let amb = kfunc::kt_bruteforce(
            &Element::Circle(f.clone()),
            CoupleId::lebesgue(2.0, 4.0).unwrap(),
            1.0,
            &SolverOptions::with_tol(1e-8),
        )
        .unwrap();
        let ratio = s.decomposition.cost / amb.certificate.dual;
        assert!(ratio >= 1.0 - 1e-9 && ratio <= 4.0, "{ratio}");
        assert!(s.decomposition.is_valid(1e-10, 1e-10));
    }

    #[test]
    fn h1_hq_certificate() {
        let n = 64;
        let f = sample_poly(n);
        for &t in &[0.05, 0.5, 2.0] {
            let s = decompose_h1_hq(&f, 2.0, t).unwrap();
            assert!(s.holder_holds(1e-9));
            assert!(s.decomposition.is_valid(1e-10, 1e-6));
            assert!(s.squaring_residual < 1e-8, "{}", s.squaring_residual);
            let amb = kfunc::kt(
                &Element::Circle(f.clone()),
                CoupleId::lebesgue(1.0, 2.0).unwrap(),
                t,
                &SolverOptions::with_tol(1e-8),
            )
            .unwrap();
            assert!(s.decomposition.cost >= amb * (1.0 - 1e-6));
        }
    }

    #[test]
    fn h1_hq_monomial_square() {
        let n = 32;
        let f = CircleFunction::monomial(n, 2).unwrap();
        let s = decompose_h1_hq(&f, 2.0, 1.0).unwrap();
        assert_eq!(s.blaschke_degree, 2);
        assert!(s.decomposition.is_valid(1e-10, 1e-8));
        assert!(matches!(decompose_h1_hq(&CircleFunction::zero(n).unwrap(), 2.0, 1.0), Err(Error::ZeroFunction)));
    }

    #[test]
    fn h1_hinf_backends() {
        let n = 16;
        let opts = SolverOptions::default();
        let z = CircleFunction::monomial(n, 1).unwrap();
        let r = decompose_h1_hinf(&z, 0.5, Backend::Oracle, &opts).unwrap();
        assert!((r.ambient_k - 0.5).abs() < 1e-15);
        assert!(r.ratio >= 1.0 - 1e-9 && r.ratio <= 20.0);
        let f = sample_poly(n);
        for backend in [Backend::Oracle, Backend::Constructive] {
            let r = decompose_h1_hinf(&f, 0.3, backend, &opts).unwrap();
            assert!(r.decomposition.is_valid(1e-8, 1e-6), "{backend:?}");
            assert!(r.ratio >= 1.0 - 1e-9, "{backend:?} {}", r.ratio);
        }
        let zero = CircleFunction::zero(n).unwrap();
        let r = decompose_h1_hinf(&zero, 0.5, Backend::Oracle, &opts).unwrap();
        assert!(r.decomposition.x0.is_zero() && r.decomposition.x1.is_zero());
    }

    #[test]
    fn simultaneous_conjugate_monomial() {
        let n = 16;
        let f = CircleFunction::monomial(n, -1).unwrap();
        let s = simultaneous_approx(&f, &SolverOptions::with_tol(1e-8)).unwrap();
        assert!((s.result.distances.0 - 1.0).abs() < 1e-6);
        assert!((s.result.distances.1 - 1.0).abs() < 1e-6);
        assert!(s.result.k_achieved <= 1.0 + 1e-4);
        assert!(s.h.negative_coeff_residual() < 1e-10);

        let g = sample_poly(n);
        let s = simultaneous_approx(&g, &SolverOptions::default()).unwrap();
        assert!(s.result.degenerate && s.h.max_diff(&g) < 1e-10);
    }
}
