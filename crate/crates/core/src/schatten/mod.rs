//! Finite matrices as Schatten-class operators: singular values, the upper
//! triangular subspace, triangular factorizations and distances to the
//! triangular algebra.

mod decomp;
pub mod matrix_valued;

pub use decomp::{decompose_t1_tq, TriangularDecomposition};

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::convex::{self, NormSpec, Simultaneous, SolverCertificate, SolverOptions, Subspace};
use crate::error::{Error, Result};
use crate::factorize::check_holder;
use crate::kfunc::{self, CoupleId, Element};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Dense `n×n` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOperator(DMatrix<Complex64>);

impl MatrixOperator {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite entry".into()));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, f))
    }

    /// Column-major entries.
    pub fn from_column_major(n: usize, v: &[Complex64]) -> Result<Self> {
        if v.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: v.len(),
            });
        }
        Self::new(DMatrix::from_column_slice(n, n, v))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    /// Matrix unit `e_{ij}` (zero-based indices).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        Self(m)
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn to_column_major(&self) -> Vec<Complex64> {
        self.0.as_slice().to_vec()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(self.0.map(|z| z * c))
    }

    /// Largest entry modulus.
    pub fn max_entry(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus strictly below the diagonal.
    pub fn strict_lower_max(&self) -> f64 {
        let n = self.n();
        let mut m: f64 = 0.0;
        for j in 0..n {
            for i in j + 1..n {
                m = m.max(self.0[(i, j)].norm());
            }
        }
        m
    }

    /// Frobenius norm of the strict lower part (distance to triangular
    /// matrices in `C₂`).
    pub fn triangular_residual(&self) -> f64 {
        Subspace::UpperTriangular { n: self.n() }.residual(self.0.as_slice())
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        self.strict_lower_max() <= tol * self.max_entry().max(f64::MIN_POSITIVE)
    }

    pub fn singular_values(&self) -> SingularValues {
        SingularValues::of(self)
    }

    pub fn schatten_norm(&self, p: f64) -> f64 {
        self.singular_values().lp(p)
    }

    /// `|x|^α = (x*x)^{α/2}`.
    pub fn abs_power(&self, alpha: f64) -> Self {
        Self(hermitian_power(&(self.0.adjoint() * &self.0), alpha / 2.0))
    }

    /// `|x| = (x*x)^{1/2}`.
    pub fn abs(&self) -> Self {
        self.abs_power(1.0)
    }

    /// Trace inner product `tr(x* y)`.
    pub fn trace_inner(&self, other: &Self) -> Complex64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for MatrixOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.n();
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| f(&self.0[(i, j)])).collect())
                .collect()
        };
        MatrixJson {
            n,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = MatrixJson::deserialize(d)?;
        let n = j.n;
        let ok = j.re.len() == n
            && j.im.len() == n
            && j.re.iter().chain(&j.im).all(|r| r.len() == n);
        if !ok {
            return Err(D::Error::custom(format!("matrix rows do not match n = {n}")));
        }
        MatrixOperator::from_fn(n, |i, k| Complex64::new(j.re[i][k], j.im[i][k]))
            .map_err(D::Error::custom)
    }
}

/// `M^α` for Hermitian positive semidefinite `M` (negative eigenvalues from
/// rounding are clamped to zero).
pub(crate) fn hermitian_power(m: &DMatrix<Complex64>, alpha: f64) -> DMatrix<Complex64> {
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(h);
    let n = m.nrows();
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let l = eig.eigenvalues[i].max(0.0);
            Complex64::new(if l == 0.0 { 0.0 } else { l.powf(alpha) }, 0.0)
        } else {
            ZERO
        }
    });
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Singular values sorted non-increasingly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularValues {
    values: Vec<f64>,
}

impl SingularValues {
    pub fn of(x: &MatrixOperator) -> Self {
        let mut values: Vec<f64> = x.0.singular_values().iter().map(|v| v.max(0.0)).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn smallest(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn lp(&self, p: f64) -> f64 {
        convex::prox::lp(&self.values, p)
    }

    /// Number of values above [`RANK_TOL`] times the largest.
    pub fn rank(&self) -> usize {
        let cut = RANK_TOL * self.largest();
        self.values.iter().filter(|&&v| v > cut).count()
    }
}

pub fn schatten_norm(x: &MatrixOperator, p: f64) -> Result<f64> {
    crate::circle::check_exponent(p)?;
    Ok(x.schatten_norm(p))
}

/// Keeps the diagonal and everything above it.
pub fn triangular_part(x: &MatrixOperator) -> MatrixOperator {
    let n = x.n();
    MatrixOperator(DMatrix::from_fn(n, n, |i, j| if i <= j { x.0[(i, j)] } else { ZERO }))
}

pub fn diagonal_part(x: &MatrixOperator) -> MatrixOperator {
    let n = x.n();
    MatrixOperator(DMatrix::from_fn(n, n, |i, j| if i == j { x.0[(i, j)] } else { ZERO }))
}

/// Upper triangular `b` with `b*b = m` (`m` Hermitian positive definite).
pub(crate) fn cholesky_upper(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    let c = Cholesky::new(h).ok_or(Error::Cholesky("matrix is not positive definite"))?;
    Ok(c.l().adjoint())
}

/// Upper triangular `a` with `a a* = m`, from the Cholesky factor of the
/// order-reversed matrix.
pub(crate) fn cholesky_upper_left(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = m.nrows();
    let rev = DMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)]);
    let h = (&rev + rev.adjoint()).map(|z| z * 0.5);
    let l = Cholesky::new(h)
        .ok_or(Error::Cholesky("matrix is not positive definite"))?
        .l();
    Ok(DMatrix::from_fn(n, n, |i, j| l[(n - 1 - i, n - 1 - j)]))
}

pub(crate) fn upper_inverse(b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = b.nrows();
    b.solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::SingularMatrix(0.0))
}

/// Which half of the triangular factorization lemma was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorBranch {
    /// `b*b = |x|^{2p/q}`, `a = x b⁻¹`; needs `p/q ≤ 1/2`.
    Right,
    /// `a a* = |x*|^{2p/r}`, `b = a⁻¹ x`; needs `p/r ≤ 1/2`.
    Left,
}

/// `x = a·b` with `a`, `b` upper triangular and `‖a‖_r‖b‖_q = ‖x‖_p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangularFactorization {
    pub a: MatrixOperator,
    pub b: MatrixOperator,
    pub p: f64,
    pub r: f64,
    pub q: f64,
    pub branch: FactorBranch,
}

impl TriangularFactorization {
    /// `‖ab − x‖_∞ / ‖x‖_∞`.
    pub fn reconstruction_error(&self, x: &MatrixOperator) -> f64 {
        self.a.mul(&self.b).sub(x).schatten_norm(f64::INFINITY) / x.schatten_norm(f64::INFINITY)
    }

    /// Relative deviation of `‖a‖_r‖b‖_q` from `‖x‖_p`.
    pub fn norm_identity_error(&self, x: &MatrixOperator) -> f64 {
        let lhs = self.a.schatten_norm(self.r) * self.b.schatten_norm(self.q);
        let rhs = x.schatten_norm(self.p);
        (lhs - rhs).abs() / rhs
    }

    /// Largest strictly-lower entry of `a` and `b`, relative to their
    /// operator norms.
    pub fn triangularity_error(&self) -> f64 {
        let rel = |m: &MatrixOperator| m.strict_lower_max() / m.schatten_norm(f64::INFINITY);
        rel(&self.a).max(rel(&self.b))
    }
}

fn check_invertible_triangular(x: &MatrixOperator) -> Result<()> {
    if !x.is_upper_triangular(1e-12) {
        return Err(Error::NotInSubspace(x.triangular_residual()));
    }
    let sv = x.singular_values();
    let ratio = sv.smallest() / sv.largest();
    if !(ratio > 1e-10) {
        return Err(Error::SingularMatrix(ratio));
    }
    Ok(())
}

/// Factorization of an invertible upper triangular `x` for
/// `1/p = 1/r + 1/q`; picks [`FactorBranch::Right`] when `p/q ≤ 1/2`.
pub fn triangular_factor(x: &MatrixOperator, p: f64, r: f64, q: f64) -> Result<TriangularFactorization> {
    check_holder(p, r, q)?;
    let branch = if q.is_infinite() || p / q <= 0.5 {
        FactorBranch::Right
    } else {
        FactorBranch::Left
    };
    triangular_factor_with(x, p, r, q, branch)
}

pub fn triangular_factor_with(
    x: &MatrixOperator,
    p: f64,
    r: f64,
    q: f64,
    branch: FactorBranch,
) -> Result<TriangularFactorization> {
    check_holder(p, r, q)?;
    check_invertible_triangular(x)?;
    let n = x.n();
    let xm = triangular_part(x).0;
    let ratio = |e: f64| if e.is_infinite() { 0.0 } else { p / e };
    let (a, b) = match branch {
        FactorBranch::Right => {
            if !(ratio(q) <= 0.5 + 1e-12) {
                return Err(Error::InvalidParameter(format!("p/q = {} > 1/2", ratio(q))));
            }
            if q.is_infinite() {
                (xm, DMatrix::identity(n, n))
            } else {
                let m = hermitian_power(&(xm.adjoint() * &xm), ratio(q));
                let b = cholesky_upper(&m)?;
                (&xm * upper_inverse(&b)?, b)
            }
        }
        FactorBranch::Left => {
            if !(ratio(r) <= 0.5 + 1e-12) {
                return Err(Error::InvalidParameter(format!("p/r = {} > 1/2", ratio(r))));
            }
            if r.is_infinite() {
                (DMatrix::identity(n, n), xm)
            } else {
                let m = hermitian_power(&(&xm * xm.adjoint()), ratio(r));
                let a = cholesky_upper_left(&m)?;
                let b = upper_inverse(&a)? * &xm;
                (a, b)
            }
        }
    };
    Ok(TriangularFactorization {
        a: MatrixOperator(a),
        b: MatrixOperator(b),
        p,
        r,
        q,
        branch,
    })
}

/// `K_t(x; C_{p₀}, C_{p₁})` through the singular-value sequence.
pub fn kt_schatten(x: &MatrixOperator, p0: f64, p1: f64, t: f64, opts: &SolverOptions) -> Result<f64> {
    let sv = x.singular_values();
    let seq = Element::Sequence(sv.values.iter().map(|&v| Complex64::new(v, 0.0)).collect());
    kfunc::kt(&seq, CoupleId::sequence(p0, p1)?, t, opts)
}

/// Operator-norm distance to upper triangular matrices via the corner
/// formula `max_k ‖x[k.., ..k]‖`.
pub fn dist_triangular_inf(x: &MatrixOperator) -> f64 {
    let n = x.n();
    (1..n)
        .map(|k| {
            x.0.view((k, 0), (n - k, k))
                .singular_values()
                .iter()
                .copied()
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Same distance from the convex oracle.
pub fn dist_triangular_inf_oracle(x: &MatrixOperator, opts: &SolverOptions) -> Result<SolverCertificate> {
    let n = x.n();
    convex::solve_distance(
        x.0.as_slice(),
        Subspace::UpperTriangular { n },
        NormSpec::schatten(f64::INFINITY, n),
        opts,
    )
}

/// Trace-norm distance to upper triangular matrices. The dual witness is
/// strictly lower triangular with operator norm at most one.
pub fn dist_triangular_1(x: &MatrixOperator, opts: &SolverOptions) -> Result<SolverCertificate> {
    let n = x.n();
    convex::solve_distance(
        x.0.as_slice(),
        Subspace::UpperTriangular { n },
        NormSpec::schatten(1.0, n),
        opts,
    )
}

/// Upper triangular `x̂` nearly optimal in `C₁` and `C_∞` at once.
#[derive(Debug, Clone)]
pub struct TriangularApprox {
    pub approx: MatrixOperator,
    pub result: Simultaneous,
}

pub fn simultaneous_triangular_approx(x: &MatrixOperator, opts: &SolverOptions) -> Result<TriangularApprox> {
    let n = x.n();
    let res = convex::simultaneous_approx(
        x.0.as_slice(),
        Subspace::UpperTriangular { n },
        (NormSpec::schatten(1.0, n), NormSpec::schatten(f64::INFINITY, n)),
        opts,
    )?;
    let approx = triangular_part(&MatrixOperator::from_column_major(n, &res.solution)?);
    Ok(TriangularApprox { approx, result: res })
}
