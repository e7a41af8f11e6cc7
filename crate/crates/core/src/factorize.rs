//! Outer functions, finite Blaschke products and the factorizations
//! `f = B·F²` and `f = g·h` of analytic grid functions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{dft_in_place, idft_in_place, CircleFunction};
use crate::error::{Error, Result};

/// Zeros closer than this to the unit circle are not factored out.
pub const BOUNDARY_MARGIN: f64 = 1e-8;

/// Default relative floor on `|f|` before taking logarithms.
pub const DEFAULT_EPS_ZERO: f64 = 1e-12;

/// Negative-coefficient tolerance for accepting a function as analytic.
pub const ANALYTIC_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Outer function with prescribed boundary modulus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterFunction {
    logmod: CircleFunction,
    log: CircleFunction,
    boundary: CircleFunction,
}

impl OuterFunction {
    /// `log w` on the grid (real valued).
    pub fn logmod(&self) -> &CircleFunction {
        &self.logmod
    }

    /// Boundary values of `O`.
    pub fn boundary(&self) -> &CircleFunction {
        &self.boundary
    }

    /// The analytic completion of `log w`, so that `O = exp(log)`.
    pub fn analytic_log(&self) -> &CircleFunction {
        &self.log
    }

    /// `O(0) = exp(mean log w)`.
    pub fn value_at_zero(&self) -> f64 {
        self.log.coeff(0).re.exp()
    }

    /// Max relative deviation of `|O|` from `w = exp(logmod)`.
    pub fn modulus_error(&self) -> f64 {
        self.boundary
            .samples()
            .iter()
            .zip(self.logmod.samples())
            .map(|(o, l)| {
                let w = l.re.exp();
                (o.norm() - w).abs() / w
            })
            .fold(0.0, f64::max)
    }

    /// Logarithm recovered from the boundary values alone: `ln|O|` plus an
    /// unwrapped argument.
    pub fn boundary_log(&self) -> CircleFunction {
        let s = self.boundary.samples();
        let mut out = Vec::with_capacity(s.len());
        let mut phase = s[0].arg();
        let mut prev = phase;
        for (k, z) in s.iter().enumerate() {
            if k > 0 {
                let a = z.arg();
                let mut d = a - prev;
                d -= 2.0 * PI * (d / (2.0 * PI)).round();
                phase += d;
                prev = a;
            }
            out.push(Complex64::new(z.norm().ln(), phase));
        }
        CircleFunction::from_samples_unchecked(out)
    }

    /// Largest negative-frequency coefficient of [`Self::boundary_log`].
    pub fn log_negative_residual(&self) -> f64 {
        self.boundary_log().negative_coeff_residual()
    }
}

/// Outer function `O` with `|O| = w` on the grid and `O(0) > 0`.
///
/// `log w` is completed analytically by doubling its positive frequencies;
/// the Nyquist coefficient is kept as is, which makes `|O| = w` exact on the
/// grid for every positive `w`.
pub fn outer_function(w: &CircleFunction) -> Result<OuterFunction> {
    let n = w.len();
    let mut logw = Vec::with_capacity(n);
    for (index, z) in w.samples().iter().enumerate() {
        let tol = 1e-12 * z.norm().max(f64::MIN_POSITIVE);
        if !(z.re > 0.0) || z.im.abs() > tol.max(1e-14) {
            return Err(Error::VanishingModulus { index, value: z.re });
        }
        logw.push(Complex64::new(z.re.ln(), 0.0));
    }
    let logmod = CircleFunction::from_samples_unchecked(logw.clone());
    let mut c = logw;
    dft_in_place(&mut c);
    for (k, v) in c.iter_mut().enumerate() {
        if k == 0 {
            *v = Complex64::new(v.re, 0.0);
        } else if k < n / 2 {
            *v *= 2.0;
        } else if k > n / 2 {
            *v = ZERO;
        } else {
            *v = Complex64::new(v.re, 0.0);
        }
    }
    idft_in_place(&mut c);
    let log = CircleFunction::from_samples_unchecked(c);
    let boundary = log.map(|z| z.exp());
    Ok(OuterFunction {
        logmod,
        log,
        boundary,
    })
}

/// Finite Blaschke product `rotation · ∏ (|a|/a)(a − z)/(1 − āz)`, with the
/// factor for `a = 0` read as `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeProduct {
    zeros: Vec<Complex64>,
    rotation: Complex64,
}

impl BlaschkeProduct {
    pub fn new(zeros: Vec<Complex64>, rotation: Complex64) -> Result<Self> {
        if let Some(z) = zeros.iter().find(|z| !(z.norm() <= 1.0 - BOUNDARY_MARGIN)) {
            return Err(Error::InvalidParameter(format!(
                "Blaschke zero {z} too close to or outside the unit circle"
            )));
        }
        if !((rotation.norm() - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "rotation {rotation} is not unimodular"
            )));
        }
        Ok(Self { zeros, rotation })
    }

    pub fn identity() -> Self {
        Self {
            zeros: Vec::new(),
            rotation: ONE,
        }
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn rotation(&self) -> Complex64 {
        self.rotation
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.zeros.iter().fold(self.rotation, |acc, &a| {
            let r = a.norm();
            if r == 0.0 {
                acc * z
            } else {
                acc * (r / a) * (a - z) / (ONE - a.conj() * z)
            }
        })
    }

    fn with_rotation(&self, rotation: Complex64) -> Self {
        Self {
            zeros: self.zeros.clone(),
            rotation,
        }
    }
}

/// Boundary values of `b` on the `n`-point grid.
pub fn blaschke_eval(b: &BlaschkeProduct, n: usize) -> Result<CircleFunction> {
    let pts = CircleFunction::grid(n);
    CircleFunction::from_samples(pts.into_iter().map(|z| b.eval(z)).collect())
}

fn horner(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Roots of `Σ c_j z^j`, leading and trailing negligible coefficients
/// removed first (trailing ones become roots at the origin).
pub fn poly_roots(c: &[Complex64], rel_tol: f64) -> Vec<Complex64> {
    let big = c.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return Vec::new();
    }
    let keep = |a: &Complex64| a.norm() > rel_tol * big;
    let lo = c.iter().position(keep).unwrap_or(0);
    let hi = c.iter().rposition(keep).unwrap_or(0);
    let mut roots = vec![ZERO; lo];
    let core = &c[lo..=hi];
    let d = core.len() - 1;
    if d == 0 {
        return roots;
    }
    let lead = core[d];
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = ONE;
    }
    for i in 0..d {
        m[(i, d - 1)] = -core[i] / lead;
    }
    let eig = Schur::new(m)
        .eigenvalues()
        .map(|v| v.iter().copied().collect::<Vec<_>>())
        .unwrap_or_default();
    for mut z in eig {
        for _ in 0..3 {
            let (p, dp) = horner(core, z);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.re.is_finite() || !step.im.is_finite() || step.norm() > 1e-3 * (1.0 + z.norm()) {
                break;
            }
            z -= step;
        }
        roots.push(z);
    }
    roots
}

/// `f = B·F²` with `B` a finite Blaschke product and `F` outer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SqrtFactorization {
    pub blaschke: BlaschkeProduct,
    pub outer: OuterFunction,
    /// `max|B·F² − f| / ‖f‖_∞` on the grid.
    pub tol_factor: f64,
    /// Roots found within [`BOUNDARY_MARGIN`] of the circle and absorbed
    /// into the outer factor.
    pub boundary_zeros: usize,
    pub eps_zero: f64,
}

impl SqrtFactorization {
    pub fn blaschke_on_grid(&self) -> CircleFunction {
        let n = self.outer.boundary.len();
        let pts = CircleFunction::grid(n);
        CircleFunction::from_samples_unchecked(pts.into_iter().map(|z| self.blaschke.eval(z)).collect())
    }

    pub fn reconstruct(&self) -> CircleFunction {
        let f = self.outer.boundary();
        self.blaschke_on_grid().mul(&f.mul(f))
    }
}

pub(crate) fn check_analytic(f: &CircleFunction) -> Result<()> {
    let res = f.negative_coeff_residual();
    if res > ANALYTIC_TOL * f.sup_norm().max(1.0) {
        return Err(Error::NotInSubspace(res));
    }
    Ok(())
}

struct InnerOuter {
    zeros: Vec<Complex64>,
    boundary_zeros: usize,
    floor: f64,
    modulus: Vec<f64>,
}

fn inner_outer(f: &CircleFunction, eps_zero: f64) -> Result<InnerOuter> {
    check_analytic(f)?;
    let sup = f.sup_norm();
    if sup == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let roots = poly_roots(&f.analytic_coeffs(), 1e-13);
    let mut zeros = Vec::new();
    let mut boundary_zeros = 0;
    for z in roots {
        let r = z.norm();
        if r < 1.0 - BOUNDARY_MARGIN {
            zeros.push(if r < 1e-13 { ZERO } else { z });
        } else if r <= 1.0 + BOUNDARY_MARGIN {
            boundary_zeros += 1;
        }
    }
    let floor = eps_zero * sup;
    let modulus = f.modulus().into_iter().map(|v| v.max(floor)).collect();
    Ok(InnerOuter {
        zeros,
        boundary_zeros,
        floor,
        modulus,
    })
}

fn outer_of_power(modulus: &[f64], a: f64) -> Result<OuterFunction> {
    let w: Vec<f64> = modulus.iter().map(|v| v.powf(a)).collect();
    outer_function(&CircleFunction::from_real(&w)?)
}

/// Unimodular `c` best aligning `c·base` with `f`.
fn align(f: &CircleFunction, base: &CircleFunction) -> Complex64 {
    let c = base.inner(f);
    if c.norm() == 0.0 {
        ONE
    } else {
        c / c.norm()
    }
}

/// Factorization `f = B·F²` with `F = outer(max(|f|, ε)^{1/2})`,
/// `ε = eps_zero·‖f‖_∞`.
pub fn sqrt_factor(f: &CircleFunction, eps_zero: f64) -> Result<SqrtFactorization> {
    let io = inner_outer(f, eps_zero)?;
    let outer = outer_of_power(&io.modulus, 0.5)?;
    let b0 = BlaschkeProduct {
        zeros: io.zeros,
        rotation: ONE,
    };
    let bf = blaschke_eval(&b0, f.len())?;
    let sq = outer.boundary().mul(outer.boundary());
    let base = bf.mul(&sq);
    let blaschke = b0.with_rotation(align(f, &base));
    let mut out = SqrtFactorization {
        blaschke,
        outer,
        tol_factor: 0.0,
        boundary_zeros: io.boundary_zeros,
        eps_zero: io.floor,
    };
    out.tol_factor = out.reconstruct().max_diff(f) / f.sup_norm();
    Ok(out)
}

/// `f = g·h` with `|g| = |f|^{p/r}`, `|h| = |f|^{p/s}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderFactorization {
    pub g: CircleFunction,
    pub h: CircleFunction,
    pub blaschke: BlaschkeProduct,
    pub tol_factor: f64,
}

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// Checks `1/p = 1/r + 1/s` with all exponents in `[1, ∞]`.
pub fn check_holder(p: f64, r: f64, s: f64) -> Result<()> {
    for e in [p, r, s] {
        if !(e >= 1.0) {
            return Err(Error::InvalidExponent(e));
        }
    }
    if (inv(p) - inv(r) - inv(s)).abs() > 1e-12 {
        return Err(Error::InconsistentExponents { p, r, s });
    }
    Ok(())
}

/// `g = B·outer(|f|^{p/r})`, `h = outer(|f|^{p/s})`; the whole inner factor
/// goes to `g`.
pub fn holder_factor(
    f: &CircleFunction,
    p: f64,
    r: f64,
    s: f64,
    eps_zero: f64,
) -> Result<HolderFactorization> {
    check_holder(p, r, s)?;
    if p.is_infinite() {
        return Err(Error::InvalidExponent(p));
    }
    let io = inner_outer(f, eps_zero)?;
    let og = outer_of_power(&io.modulus, p * inv(r))?;
    let oh = outer_of_power(&io.modulus, p * inv(s))?;
    let b0 = BlaschkeProduct {
        zeros: io.zeros,
        rotation: ONE,
    };
    let bf = blaschke_eval(&b0, f.len())?;
    let base = bf.mul(og.boundary()).mul(oh.boundary());
    let rot = align(f, &base);
    let g = bf.mul(og.boundary()).scale(rot);
    let h = oh.boundary().clone();
    let tol_factor = g.mul(&h).max_diff(f) / f.sup_norm();
    Ok(HolderFactorization {
        g,
        h,
        blaschke: b0.with_rotation(rot),
        tol_factor,
    })
}
