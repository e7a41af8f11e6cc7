//! K- and J-functionals of compatible couples, real interpolation norms and
//! K-closedness reports.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{check_exponent, CircleFunction, Rearrangement};
use crate::convex::{self, NormSpec, SolverCertificate, SolverOptions, SplitProgram, Subspace};
use crate::error::{Error, Result};
use crate::schatten::matrix_valued::MatrixFunction;
use crate::schatten::MatrixOperator;

/// Largest circle grid accepted by the brute-force oracle.
pub const MAX_ORACLE_GRID: usize = 64;
/// Largest matrix dimension accepted by the brute-force oracle.
pub const MAX_ORACLE_MATRIX: usize = 16;

/// Anything a couple can act on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Element {
    Circle(CircleFunction),
    Sequence(Vec<Complex64>),
    Matrix(MatrixOperator),
    MatrixField(MatrixFunction),
}

impl Element {
    pub fn to_vec(&self) -> Vec<Complex64> {
        match self {
            Element::Circle(f) => f.samples().to_vec(),
            Element::Sequence(v) => v.clone(),
            Element::Matrix(m) => m.to_column_major(),
            Element::MatrixField(m) => m.to_vec(),
        }
    }

    /// Element of the same shape holding `v`.
    pub fn with_values(&self, v: Vec<Complex64>) -> Element {
        match self {
            Element::Circle(_) => Element::Circle(CircleFunction::from_samples_unchecked(v)),
            Element::Sequence(_) => Element::Sequence(v),
            Element::Matrix(m) => Element::Matrix(MatrixOperator::from_matrix_unchecked(
                nalgebra::DMatrix::from_column_slice(m.n(), m.n(), &v),
            )),
            Element::MatrixField(m) => Element::MatrixField(MatrixFunction::from_vec_unchecked(m.n(), m.grid(), v)),
        }
    }

    pub fn zero_like(&self) -> Element {
        self.with_values(vec![Complex64::new(0.0, 0.0); self.to_vec().len()])
    }

    pub fn sub(&self, other: &Element) -> Element {
        let v = self.to_vec().iter().zip(other.to_vec()).map(|(a, b)| a - b).collect();
        self.with_values(v)
    }

    pub fn add(&self, other: &Element) -> Element {
        let v = self.to_vec().iter().zip(other.to_vec()).map(|(a, b)| a + b).collect();
        self.with_values(v)
    }

    pub fn is_zero(&self) -> bool {
        self.to_vec().iter().all(|z| z.norm() == 0.0)
    }

    /// Largest entry modulus of the flattened values.
    pub fn max_abs(&self) -> f64 {
        self.to_vec().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn shape_name(&self) -> &'static str {
        match self {
            Element::Circle(_) => "circle function",
            Element::Sequence(_) => "sequence",
            Element::Matrix(_) => "matrix",
            Element::MatrixField(_) => "matrix-valued function",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoupleKind {
    /// `(L^{p₀}, L^{p₁})` on the circle grid.
    Lebesgue,
    /// `(ℓ_{p₀}, ℓ_{p₁})`, counting measure.
    Sequence,
    /// `(C_{p₀}, C_{p₁})`.
    Schatten,
    /// `(H^{p₀}, H^{p₁})`.
    Hardy,
    /// Upper triangular parts of `(C_{p₀}, C_{p₁})`.
    Triangular,
    /// `(L_{p₀}(C_{p₀}), L_{p₁}(C_{p₁}))` for matrix-valued grid functions.
    Bochner,
    /// Analytic matrix-valued functions inside [`CoupleKind::Bochner`].
    HardyBochner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupleId {
    pub kind: CoupleKind,
    pub p0: f64,
    pub p1: f64,
}

impl CoupleId {
    pub fn new(kind: CoupleKind, p0: f64, p1: f64) -> Result<Self> {
        check_exponent(p0)?;
        check_exponent(p1)?;
        Ok(Self { kind, p0, p1 })
    }

    pub fn lebesgue(p0: f64, p1: f64) -> Result<Self> {
        Self::new(CoupleKind::Lebesgue, p0, p1)
    }

    pub fn sequence(p0: f64, p1: f64) -> Result<Self> {
        Self::new(CoupleKind::Sequence, p0, p1)
    }

    pub fn schatten(p0: f64, p1: f64) -> Result<Self> {
        Self::new(CoupleKind::Schatten, p0, p1)
    }

    pub fn hardy(p0: f64, p1: f64) -> Result<Self> {
        Self::new(CoupleKind::Hardy, p0, p1)
    }

    pub fn triangular(p0: f64, p1: f64) -> Result<Self> {
        Self::new(CoupleKind::Triangular, p0, p1)
    }

    pub fn bochner(p0: f64, p1: f64) -> Result<Self> {
        Self::new(CoupleKind::Bochner, p0, p1)
    }

    pub fn hardy_bochner(p0: f64, p1: f64) -> Result<Self> {
        Self::new(CoupleKind::HardyBochner, p0, p1)
    }

    pub fn is_subspace(&self) -> bool {
        matches!(
            self.kind,
            CoupleKind::Hardy | CoupleKind::Triangular | CoupleKind::HardyBochner
        )
    }

    /// The ambient couple with the same exponents.
    pub fn ambient(&self) -> CoupleId {
        let kind = match self.kind {
            CoupleKind::Hardy => CoupleKind::Lebesgue,
            CoupleKind::Triangular => CoupleKind::Schatten,
            CoupleKind::HardyBochner => CoupleKind::Bochner,
            k => k,
        };
        CoupleId { kind, ..*self }
    }

    fn check(&self, x: &Element) -> Result<()> {
        let ok = matches!(
            (self.kind, x),
            (CoupleKind::Lebesgue | CoupleKind::Hardy, Element::Circle(_))
                | (CoupleKind::Sequence, Element::Sequence(_))
                | (CoupleKind::Schatten | CoupleKind::Triangular, Element::Matrix(_))
                | (CoupleKind::Bochner | CoupleKind::HardyBochner, Element::MatrixField(_))
        );
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "couple {self} does not act on a {}",
                x.shape_name()
            )))
        }
    }

    fn norm_spec(&self, x: &Element, p: f64) -> NormSpec {
        match x {
            Element::Circle(f) => NormSpec::grid_lp(p, f.len()),
            Element::Sequence(_) => NormSpec::sequence(p),
            Element::Matrix(m) => NormSpec::schatten(p, m.n()),
            Element::MatrixField(m) => NormSpec::bochner_schatten(p, m.n(), m.grid()),
        }
    }

    /// Norm specifications of the two spaces for elements shaped like `x`.
    pub fn norm_specs(&self, x: &Element) -> Result<(NormSpec, NormSpec)> {
        self.check(x)?;
        Ok((self.norm_spec(x, self.p0), self.norm_spec(x, self.p1)))
    }

    pub fn subspace(&self, x: &Element) -> Subspace {
        match (self.kind, x) {
            (CoupleKind::Hardy, Element::Circle(f)) => Subspace::Analytic {
                grid: f.len(),
                stride: 1,
            },
            (CoupleKind::Triangular, Element::Matrix(m)) => Subspace::UpperTriangular { n: m.n() },
            (CoupleKind::HardyBochner, Element::MatrixField(m)) => Subspace::Analytic {
                grid: m.grid(),
                stride: m.n() * m.n(),
            },
            _ => Subspace::Full,
        }
    }

    /// `(‖x‖₀, ‖x‖₁)`.
    pub fn norms(&self, x: &Element) -> Result<(f64, f64)> {
        let (a, b) = self.norm_specs(x)?;
        let v = x.to_vec();
        Ok((a.eval(&v), b.eval(&v)))
    }

    /// Distance of `x` from the subspace, measured in the natural
    /// coordinates (largest negative Fourier coefficient, largest strictly
    /// lower entry); zero for ambient couples.
    pub fn membership_residual(&self, x: &Element) -> f64 {
        if !self.is_subspace() {
            return 0.0;
        }
        match x {
            Element::Circle(f) => f.negative_coeff_residual(),
            Element::Matrix(m) => m.strict_lower_max(),
            Element::MatrixField(m) => m.negative_coeff_residual(),
            Element::Sequence(_) => 0.0,
        }
    }
}

fn fmt_exp(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

impl fmt::Display for CoupleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.kind {
            CoupleKind::Lebesgue => "L",
            CoupleKind::Sequence => "l",
            CoupleKind::Schatten => "S",
            CoupleKind::Hardy => "H",
            CoupleKind::Triangular => "T",
            CoupleKind::Bochner => "LS",
            CoupleKind::HardyBochner => "HS",
        };
        write!(f, "{s}{},{s}{}", fmt_exp(self.p0), fmt_exp(self.p1))
    }
}

impl FromStr for CoupleId {
    type Err = Error;

    /// Parses forms such as `L1,Linf`, `H2,H4`, `S1,Sinf`, `T1,T2`, `l1,linf`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse couple '{s}'"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let split = |part: &str| -> Result<(String, f64)> {
            let part = part.trim();
            if let Some(name) = part.strip_suffix("inf") {
                return Ok((name.to_string(), f64::INFINITY));
            }
            let idx = part.find(|c: char| c.is_ascii_digit() || c == '.').ok_or_else(bad)?;
            let (name, e) = part.split_at(idx);
            Ok((name.to_string(), e.parse().map_err(|_| bad())?))
        };
        let (na, p0) = split(a)?;
        let (nb, p1) = split(b)?;
        if na != nb {
            return Err(bad());
        }
        let kind = match na.as_str() {
            "L" => CoupleKind::Lebesgue,
            "l" => CoupleKind::Sequence,
            "S" | "C" => CoupleKind::Schatten,
            "H" => CoupleKind::Hardy,
            "T" => CoupleKind::Triangular,
            "LS" => CoupleKind::Bochner,
            "HS" => CoupleKind::HardyBochner,
            _ => return Err(bad()),
        };
        CoupleId::new(kind, p0, p1)
    }
}

/// A split `x = x₀ + x₁` with its cost `‖x₀‖₀ + t‖x₁‖₁`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoupleDecomposition {
    pub couple: CoupleId,
    pub t: f64,
    pub x0: Element,
    pub x1: Element,
    pub norm0: f64,
    pub norm1: f64,
    pub cost: f64,
    pub membership_residual: f64,
    /// `max|x₀ + x₁ − x|` over the flattened entries.
    pub reconstruction_error: f64,
}

impl CoupleDecomposition {
    pub fn new(x: &Element, x0: Element, x1: Element, couple: CoupleId, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
        }
        let (norm0, _) = couple.norms(&x0)?;
        let (_, norm1) = couple.norms(&x1)?;
        let reconstruction_error = x0.add(&x1).sub(x).max_abs();
        let membership_residual = couple
            .membership_residual(&x0)
            .max(couple.membership_residual(&x1));
        Ok(Self {
            couple,
            t,
            norm0,
            norm1,
            cost: norm0 + t * norm1,
            membership_residual,
            reconstruction_error,
            x0,
            x1,
        })
    }

    /// Reconstruction within `recon_tol` (relative to `max(1, ‖x‖)`) and
    /// membership within `member_tol`.
    pub fn is_valid(&self, recon_tol: f64, member_tol: f64) -> bool {
        let scale = self.x0.add(&self.x1).max_abs().max(1.0);
        self.reconstruction_error <= recon_tol * scale && self.membership_residual <= member_tol
    }
}

/// Minimum from the convex oracle, with its certificate.
#[derive(Debug, Clone)]
pub struct BruteForce {
    pub value: f64,
    pub decomposition: CoupleDecomposition,
    pub certificate: SolverCertificate,
}

fn check_oracle_size(x: &Element) -> Result<()> {
    let too_big = match x {
        Element::Circle(f) => f.len() > MAX_ORACLE_GRID,
        Element::Matrix(m) => m.n() > MAX_ORACLE_MATRIX,
        Element::MatrixField(m) => m.grid() > 32 || m.n() > 8,
        Element::Sequence(v) => v.len() > 10_000,
    };
    if too_big {
        return Err(Error::TooLarge(format!("{} of size {}", x.shape_name(), x.to_vec().len())));
    }
    Ok(())
}

/// `K_t` by direct convex minimization over all admissible splits.
pub fn kt_bruteforce(x: &Element, couple: CoupleId, t: f64, opts: &SolverOptions) -> Result<BruteForce> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let norms = couple.norm_specs(x)?;
    check_oracle_size(x)?;
    let target = x.to_vec();
    let prog = SplitProgram {
        target: target.clone(),
        subspace: couple.subspace(x),
        norms,
        weight: t,
    };
    let cert = convex::solve_split(&prog, opts)?;
    let x1 = x.with_values(cert.solution.clone());
    let x0 = x.sub(&x1);
    let decomposition = CoupleDecomposition::new(x, x0, x1, couple, t)?;
    Ok(BruteForce {
        value: cert.primal,
        decomposition,
        certificate: cert,
    })
}

fn closed_form_rearrangement(x: &Element, couple: CoupleId) -> Option<Rearrangement> {
    if couple.p0 != 1.0 || !couple.p1.is_infinite() {
        return None;
    }
    match (couple.kind, x) {
        (CoupleKind::Lebesgue, Element::Circle(f)) => Some(f.rearrange()),
        (CoupleKind::Sequence, Element::Sequence(v)) => {
            Some(Rearrangement::sequence(v.iter().map(|z| z.norm()).collect()))
        }
        (CoupleKind::Schatten, Element::Matrix(m)) => {
            Some(Rearrangement::sequence(m.singular_values().values().to_vec()))
        }
        _ => None,
    }
}

/// `K_t` for `(L¹, L^∞)`-type couples from the rearrangement:
/// `∫_0^t x*`, or `Σ_{k<⌊t⌋} λ_k + (t − ⌊t⌋)λ_{⌊t⌋}` for sequences.
pub fn kt_closed_form(x: &Rearrangement, t: f64) -> Result<f64> {
    x.kt(t)
}

/// Value of `K_t` with a certified lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KValue {
    /// Best known upper bound (exact for closed forms).
    pub value: f64,
    /// Certified lower bound.
    pub lower: f64,
}

impl KValue {
    pub fn gap(&self) -> f64 {
        self.value - self.lower
    }
}

/// `K_t(x)`: closed form for `(1, ∞)` rearrangement-invariant couples,
/// singular-value reduction for Schatten couples, brute force otherwise.
pub fn kt_value(x: &Element, couple: CoupleId, t: f64, opts: &SolverOptions) -> Result<KValue> {
    couple.check(x)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    if let Some(r) = closed_form_rearrangement(x, couple) {
        let v = r.kt(t)?;
        return Ok(KValue { value: v, lower: v });
    }
    if let (CoupleKind::Schatten, Element::Matrix(m)) = (couple.kind, x) {
        let seq = Element::Sequence(
            m.singular_values()
                .values()
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
        );
        return kt_value(&seq, CoupleId::sequence(couple.p0, couple.p1)?, t, opts);
    }
    let b = kt_bruteforce(x, couple, t, opts)?;
    Ok(KValue {
        value: b.value,
        lower: b.certificate.dual.min(b.value),
    })
}

/// `K_t(x)` (see [`kt_value`]).
pub fn kt(x: &Element, couple: CoupleId, t: f64, opts: &SolverOptions) -> Result<f64> {
    Ok(kt_value(x, couple, t, opts)?.value)
}

/// `J_t(x) = max(‖x‖₀, t‖x‖₁)`.
pub fn jt(x: &Element, couple: CoupleId, t: f64) -> Result<f64> {
    let (a, b) = couple.norms(x)?;
    Ok(a.max(t * b))
}

/// Log-spaced grid of positive parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
}

impl Default for TGrid {
    fn default() -> Self {
        Self {
            t_min: 1e-3,
            t_max: 1e3,
            per_decade: 20,
        }
    }
}

impl TGrid {
    pub fn new(t_min: f64, t_max: f64, per_decade: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max >= t_min && per_decade > 0) {
            return Err(Error::InvalidParameter(format!(
                "bad t-grid [{t_min}, {t_max}] with {per_decade} points per decade"
            )));
        }
        Ok(Self {
            t_min,
            t_max,
            per_decade,
        })
    }

    /// Points `10^{k/d}` between the endpoints (endpoints rounded to the
    /// lattice), so decades are hit exactly.
    pub fn points(&self) -> Vec<f64> {
        let d = self.per_decade as f64;
        let lo = (self.t_min.log10() * d).round() as i64;
        let hi = (self.t_max.log10() * d).round() as i64;
        (lo..=hi).map(|k| 10f64.powf(k as f64 / d)).collect()
    }
}

/// Real interpolation norm `‖x‖_{θ,q}` evaluated on a t-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterpNorm {
    pub value: f64,
    /// Upper bound on what the omitted tails can add to `value`.
    pub tail_bound: f64,
    pub t: Vec<f64>,
    pub kt: Vec<f64>,
}

pub fn real_interp_norm(
    x: &Element,
    couple: CoupleId,
    theta: f64,
    q: f64,
    grid: &TGrid,
    opts: &SolverOptions,
) -> Result<InterpNorm> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta must lie in (0,1), got {theta}")));
    }
    check_exponent(q)?;
    let (n0, n1) = couple.norms(x)?;
    let ts = grid.points();
    let ks = ts
        .par_iter()
        .map(|&t| kt(x, couple, t, opts))
        .collect::<Result<Vec<f64>>>()?;
    let phi: Vec<f64> = ts.iter().zip(&ks).map(|(t, k)| t.powf(-theta) * k).collect();
    let (t_lo, t_hi) = (ts[0], *ts.last().unwrap());
    if q.is_infinite() {
        let value = phi.iter().copied().fold(0.0, f64::max);
        let tail = (n1 * t_lo.powf(1.0 - theta)).max(n0 * t_hi.powf(-theta));
        return Ok(InterpNorm {
            value,
            tail_bound: (tail - value).max(0.0),
            t: ts,
            kt: ks,
        });
    }
    let mut integral = 0.0;
    for i in 1..ts.len() {
        let h = ts[i].ln() - ts[i - 1].ln();
        integral += 0.5 * h * (phi[i].powf(q) + phi[i - 1].powf(q));
    }
    let tails = n1.powf(q) * t_lo.powf((1.0 - theta) * q) / ((1.0 - theta) * q)
        + n0.powf(q) * t_hi.powf(-theta * q) / (theta * q);
    let value = integral.powf(1.0 / q);
    Ok(InterpNorm {
        value,
        tail_bound: (integral + tails).powf(1.0 / q) - value,
        t: ts,
        kt: ks,
    })
}

/// Per-instance comparison of subspace decompositions against the ambient
/// K-functional.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KReport {
    pub instance_id: String,
    pub couple: CoupleId,
    pub t_grid: Vec<f64>,
    pub ambient_k: Vec<f64>,
    pub achieved_cost: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Gap of the ambient value (zero for closed forms).
    pub gap: Vec<f64>,
    /// `max(reconstruction, membership)` of each decomposition.
    pub residual: Vec<f64>,
    pub c_estimate: f64,
}

impl KReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,ambient_K,achieved_cost,ratio\n");
        for i in 0..self.t_grid.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e}\n",
                self.t_grid[i], self.ambient_k[i], self.achieved_cost[i], self.ratio[i]
            ));
        }
        out
    }

    pub fn min_ratio(&self) -> f64 {
        self.ratio.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `achieved / ambient`, with `0/0` read as 1.
pub fn k_ratio(achieved: f64, ambient: f64) -> f64 {
    if ambient <= 0.0 {
        if achieved <= 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        achieved / ambient
    }
}

/// Runs `decomposer` over `t_grid` and compares each cost with the
/// certified lower bound on the ambient `K_t`.
pub fn k_closedness_report(
    instance_id: &str,
    x: &Element,
    couple: CoupleId,
    decomposer: &(dyn Fn(f64) -> Result<CoupleDecomposition> + Sync),
    t_grid: &[f64],
    opts: &SolverOptions,
) -> Result<KReport> {
    let ambient = couple.ambient();
    let rows = t_grid
        .par_iter()
        .map(|&t| -> Result<(f64, f64, f64, f64)> {
            let k = kt_value(x, ambient, t, opts)?;
            let d = decomposer(t)?;
            let scale = x.max_abs().max(1.0);
            let residual = (d.reconstruction_error / scale).max(d.membership_residual);
            Ok((k.lower, d.cost, k.gap(), residual))
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio: Vec<f64> = rows.iter().map(|r| k_ratio(r.1, r.0)).collect();
    Ok(KReport {
        instance_id: instance_id.to_string(),
        couple,
        t_grid: t_grid.to_vec(),
        ambient_k: rows.iter().map(|r| r.0).collect(),
        achieved_cost: rows.iter().map(|r| r.1).collect(),
        gap: rows.iter().map(|r| r.2).collect(),
        residual: rows.iter().map(|r| r.3).collect(),
        c_estimate: ratio.iter().copied().fold(1.0, f64::max),
        ratio,
    })
}

/// Quotient norm `‖f‖_{L^p/H^p}`, the `L^p` distance from `f` to analytic
/// functions.
pub fn quotient_norm(f: &CircleFunction, p: f64, opts: &SolverOptions) -> Result<SolverCertificate> {
    check_exponent(p)?;
    let n = f.len();
    if n > MAX_ORACLE_GRID {
        return Err(Error::TooLarge(format!("grid of size {n}")));
    }
    convex::solve_distance(
        f.samples(),
        Subspace::Analytic { grid: n, stride: 1 },
        NormSpec::grid_lp(p, n),
        opts,
    )
}

/// Upper bound on `‖f‖_{L^p/H^p} / (‖f‖_{L¹/H¹}^{1/p} ‖f‖_{L^∞/H^∞}^{1−1/p})`.
/// `None` when `f` is (numerically) analytic.
pub fn extrapolation_ratio(f: &CircleFunction, p: f64, opts: &SolverOptions) -> Result<Option<f64>> {
    let num = quotient_norm(f, p, opts)?.primal;
    let d1 = quotient_norm(f, 1.0, opts)?.dual;
    let dinf = quotient_norm(f, f64::INFINITY, opts)?.dual;
    if d1 <= 1e-12 || dinf <= 1e-12 {
        return Ok(None);
    }
    Ok(Some(num / (d1.powf(1.0 / p) * dinf.powf(1.0 - 1.0 / p))))
}
