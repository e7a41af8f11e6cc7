//! Matrix-valued functions on the circle grid: spectral factorization and
//! the squaring split for `(L_{p₀}(C_{p₀}), L_{p₁}(C_{p₁}))`.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{hermitian_power, MatrixOperator};
use crate::circle::{check_grid, dft_in_place, idft_in_place};
use crate::convex::{NormSpec, SolverOptions, Subspace};
use crate::error::{Error, Result};
use crate::kfunc::{self, CoupleDecomposition, CoupleId, Element};
use crate::split::{search_level, sv_truncate};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Grid samples of an `n×n`-matrix-valued function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFunction {
    samples: Vec<MatrixOperator>,
}

impl MatrixFunction {
    pub fn new(samples: Vec<MatrixOperator>) -> Result<Self> {
        check_grid(samples.len())?;
        let n = samples[0].n();
        if let Some(m) = samples.iter().find(|m| m.n() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.n(),
            });
        }
        Ok(Self { samples })
    }

    /// Grid-major layout: sample `k` occupies `k·n²..(k+1)·n²` column-major.
    pub(crate) fn from_vec_unchecked(n: usize, grid: usize, v: Vec<Complex64>) -> Self {
        let samples = (0..grid)
            .map(|k| MatrixOperator::from_matrix_unchecked(DMatrix::from_column_slice(n, n, &v[k * n * n..(k + 1) * n * n])))
            .collect();
        Self { samples }
    }

    pub fn constant(grid: usize, m: &MatrixOperator) -> Result<Self> {
        Self::new(vec![m.clone(); grid])
    }

    /// `Σ_j C_j e^{ijt}` on the grid.
    pub fn from_coeffs(grid: usize, terms: &[(i64, MatrixOperator)]) -> Result<Self> {
        check_grid(grid)?;
        let n = terms.first().map_or(1, |(_, m)| m.n());
        let mut c = vec![DMatrix::zeros(n, n); grid];
        for (j, m) in terms {
            if m.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.n(),
                });
            }
            c[j.rem_euclid(grid as i64) as usize] += m.matrix();
        }
        Ok(Self::from_fft_order(c, true))
    }

    fn from_fft_order(mut c: Vec<DMatrix<Complex64>>, inverse: bool) -> Self {
        let grid = c.len();
        let n = c[0].nrows();
        let mut buf = vec![ZERO; grid];
        for i in 0..n {
            for j in 0..n {
                for k in 0..grid {
                    buf[k] = c[k][(i, j)];
                }
                if inverse {
                    idft_in_place(&mut buf);
                } else {
                    dft_in_place(&mut buf);
                }
                for k in 0..grid {
                    c[k][(i, j)] = buf[k];
                }
            }
        }
        Self {
            samples: c.into_iter().map(MatrixOperator::from_matrix_unchecked).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.samples[0].n()
    }

    pub fn grid(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[MatrixOperator] {
        &self.samples
    }

    pub fn to_vec(&self) -> Vec<Complex64> {
        self.samples.iter().flat_map(|m| m.matrix().iter().copied()).collect()
    }

    /// Fourier coefficients in FFT order.
    pub fn fft_coeffs(&self) -> Vec<DMatrix<Complex64>> {
        let c = self.samples.iter().map(|m| m.matrix().clone()).collect();
        Self::from_fft_order(c, false)
            .samples
            .into_iter()
            .map(MatrixOperator::into_matrix)
            .collect()
    }

    /// Largest entry modulus among negative-frequency coefficients.
    pub fn negative_coeff_residual(&self) -> f64 {
        let g = self.grid();
        self.fft_coeffs()[g / 2..]
            .iter()
            .flat_map(|m| m.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    pub fn riesz_project(&self) -> Self {
        let mut v = self.to_vec();
        Subspace::Analytic {
            grid: self.grid(),
            stride: self.n() * self.n(),
        }
        .project(&mut v);
        Self::from_vec_unchecked(self.n(), self.grid(), v)
    }

    fn zip(&self, other: &Self, f: impl Fn(&DMatrix<Complex64>, &DMatrix<Complex64>) -> DMatrix<Complex64>) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| MatrixOperator::from_matrix_unchecked(f(a.matrix(), b.matrix())))
                .collect(),
        }
    }

    fn map(&self, f: impl Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|a| MatrixOperator::from_matrix_unchecked(f(a.matrix())))
                .collect(),
        }
    }

    /// Pointwise product `self(t)·other(t)`.
    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    /// Largest pointwise operator norm.
    pub fn sup_norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|m| m.schatten_norm(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    /// `L_p(C_p)` norm on the grid measure.
    pub fn bochner_norm(&self, p: f64) -> f64 {
        NormSpec::bochner_schatten(p, self.n(), self.grid()).eval(&self.to_vec())
    }
}

/// Analytic `F` with `F*F ≈ W` on the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralFactor {
    pub boundary: MatrixFunction,
    /// `max_t ‖F*F − W‖_∞ / max_t ‖W‖_∞`.
    pub residual: f64,
    /// Number of Toeplitz blocks used.
    pub blocks: usize,
}

fn bauer_coeffs(r: &[DMatrix<Complex64>], n: usize, grid: usize, m: usize) -> Result<Vec<DMatrix<Complex64>>> {
    let half = grid / 2;
    let rk = |k: i64| -> DMatrix<Complex64> {
        let a = k.unsigned_abs() as usize;
        if a > half {
            return DMatrix::zeros(n, n);
        }
        let c = r[k.rem_euclid(grid as i64) as usize].clone();
        if a == half {
            c * Complex64::new(0.5, 0.0)
        } else {
            c
        }
    };
    let size = m * n;
    let mut t = DMatrix::<Complex64>::zeros(size, size);
    for bi in 0..m {
        for bj in 0..m {
            let d = bj as i64 - bi as i64;
            if d.unsigned_abs() as usize > half {
                continue;
            }
            let blk = rk(d);
            t.view_mut((bi * n, bj * n), (n, n)).copy_from(&blk);
        }
    }
    let l = Cholesky::new(t)
        .ok_or(Error::Cholesky("block Toeplitz matrix is not positive definite"))?
        .l();
    let last = (m - 1) * n;
    Ok((0..half.min(m))
        .map(|k| l.view((last, (m - 1 - k) * n), (n, n)).adjoint())
        .collect())
}

/// Spectral factorization `W = F*F` with `F` analytic, via Cholesky of the
/// block Toeplitz matrix of `W`'s Fourier coefficients; the block count is
/// doubled until the coefficients settle.
pub fn spectral_factor(w: &MatrixFunction) -> Result<SpectralFactor> {
    let n = w.n();
    let grid = w.grid();
    let r: Vec<DMatrix<Complex64>> = w
        .fft_coeffs()
        .into_iter()
        .enumerate()
        .map(|(k, c)| if k == 0 { (&c + c.adjoint()) * Complex64::new(0.5, 0.0) } else { c })
        .collect();
    let scale = w.sup_norm().max(f64::MIN_POSITIVE);
    let max_size = 1024;
    let mut m = grid.max(2);
    let mut prev = bauer_coeffs(&r, n, grid, m)?;
    let mut settled = false;
    while 2 * m * n <= max_size {
        m *= 2;
        let next = bauer_coeffs(&r, n, grid, m)?;
        let change = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        prev = next;
        if change <= 1e-12 * scale.sqrt() {
            settled = true;
            break;
        }
    }
    let mut c = vec![DMatrix::zeros(n, n); grid];
    for (k, fk) in prev.into_iter().enumerate() {
        c[k] = fk;
    }
    let boundary = MatrixFunction::from_fft_order(c, true);
    let residual = boundary
        .samples
        .iter()
        .zip(&w.samples)
        .map(|(f, wv)| (f.adjoint().mul(f).sub(wv)).schatten_norm(f64::INFINITY))
        .fold(0.0, f64::max)
        / scale;
    if !settled && residual > 1e-6 {
        return Err(Error::SpectralFactorization(residual));
    }
    Ok(SpectralFactor {
        boundary,
        residual,
        blocks: m,
    })
}

/// Squaring split of an analytic matrix-valued function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixSplit {
    pub decomposition: CoupleDecomposition,
    pub ambient_k: f64,
    pub ratio: f64,
    pub eps: f64,
    pub factor_residual: f64,
    /// `max_t ‖G F − f‖_∞ / max_t ‖f‖_∞`.
    pub squaring_residual: f64,
}

fn check_exponents(p0: f64, q0: f64, p1: f64, q1: f64) -> Result<()> {
    for e in [p0, q0, p1, q1] {
        crate::circle::check_exponent(e)?;
    }
    if p0 != q0 || p1 != q1 {
        return Err(Error::InvalidParameter(format!(
            "only diagonal exponents L_p(C_p) are supported, got ({p0},{q0},{p1},{q1})"
        )));
    }
    Ok(())
}

fn double(p: f64) -> f64 {
    2.0 * p
}

/// Pointwise singular-value truncation at the level minimising the
/// unprojected cost, then Riesz projection of the truncated part.
fn split_field(f: &MatrixFunction, p0: f64, p1: f64, s: f64) -> (MatrixFunction, MatrixFunction) {
    let svs: Vec<Vec<f64>> = f
        .samples
        .iter()
        .map(|m| m.singular_values().values().to_vec())
        .collect();
    let marks: Vec<f64> = svs.iter().flatten().copied().collect();
    let grid = f.grid() as f64;
    let lp = |vals: &mut dyn Iterator<Item = f64>, p: f64| -> f64 {
        let v: Vec<f64> = vals.collect();
        if p.is_infinite() {
            v.into_iter().fold(0.0, f64::max)
        } else {
            (v.iter().map(|x| x.powf(p)).sum::<f64>() / grid).powf(1.0 / p)
        }
    };
    let (level, _) = search_level(&marks, |l| {
        lp(&mut svs.iter().flatten().map(|&v| (v - l).max(0.0)), p0)
            + s * lp(&mut svs.iter().flatten().map(|&v| v.min(l)), p1)
    });
    let small = f.map(|m| sv_truncate(m, level).1).riesz_project();
    (f.sub(&small), small)
}

/// The squaring step for matrix-valued analytic `f`: `F*F = |f| + εI`,
/// `G = P(f F⁻¹)`, both split at `√t` in the doubled couple, then
/// `x₁ = P(G₁F₁) + ` (optimal truncation of `G₀F₁ + G₁F₀`), `x₀ = f − x₁`.
#[allow(clippy::too_many_arguments)]
pub fn matrix_valued_split(
    f: &MatrixFunction,
    p0: f64,
    q0: f64,
    p1: f64,
    q1: f64,
    t: f64,
    eps: f64,
    opts: &SolverOptions,
) -> Result<MatrixSplit> {
    check_exponents(p0, q0, p1, q1)?;
    if f.n() > 8 || f.grid() > 32 {
        return Err(Error::TooLarge(format!("{}x{} values on {} points", f.n(), f.n(), f.grid())));
    }
    if !(eps > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter("eps and t must be positive".into()));
    }
    let res = f.negative_coeff_residual();
    if res > 1e-8 * f.sup_norm().max(1.0) {
        return Err(Error::NotInSubspace(res));
    }
    let couple = CoupleId::hardy_bochner(p0, p1)?;
    let el = Element::MatrixField(f.clone());
    let ambient_k = kfunc::kt_value(&el, couple.ambient(), t, opts)?.lower;

    let n = f.n();
    let w = f.map(|m| {
        let mut a = hermitian_power(&(m.adjoint() * m), 0.5);
        for i in 0..n {
            a[(i, i)] += Complex64::new(eps, 0.0);
        }
        a
    });
    let sf = spectral_factor(&w)?;
    let big_f = sf.boundary.clone();
    let inv = big_f.map(|m| m.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(n, n)));
    let g = f.mul(&inv).riesz_project();
    let squaring_residual = g.mul(&big_f).sub(f).sup_norm() / f.sup_norm().max(f64::MIN_POSITIVE);

    let s = t.sqrt();
    let (f0, f1) = split_field(&big_f, double(p0), double(p1), s);
    let (g0, g1) = split_field(&g, double(p0), double(p1), s);
    let d1 = g1.mul(&f1).riesz_project();
    let cross = g0.mul(&f1).add(&g1.mul(&f0));
    let spec0 = NormSpec::bochner_schatten(p0, n, f.grid());
    let spec1 = NormSpec::bochner_schatten(p1, n, f.grid());
    let cross_at = |l: f64| cross.map(|m| sv_truncate(m, l).1).riesz_project();
    let cost_of = |x1: &MatrixFunction| spec0.eval(&f.sub(x1).to_vec()) + t * spec1.eval(&x1.to_vec());
    let marks: Vec<f64> = cross
        .samples
        .iter()
        .flat_map(|m| m.singular_values().values().to_vec())
        .collect();
    let (level, _) = search_level(&marks, |l| cost_of(&d1.add(&cross_at(l))));
    let x1 = d1.add(&cross_at(level));
    let x0 = f.sub(&x1);
    let decomposition = CoupleDecomposition::new(&el, Element::MatrixField(x0), Element::MatrixField(x1), couple, t)?;
    Ok(MatrixSplit {
        ratio: kfunc::k_ratio(decomposition.cost, ambient_k),
        decomposition,
        ambient_k,
        eps,
        factor_residual: sf.residual,
        squaring_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::CircleFunction;
    use crate::factorize::outer_function;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_poly(n: usize, grid: usize, deg: usize, seed: u64) -> MatrixFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(i64, MatrixOperator)> = (0..=deg)
            .map(|j| {
                let m = MatrixOperator::from_fn(n, |_, _| {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) / (j as f64 + 1.0)
                })
                .unwrap();
                (j as i64, m)
            })
            .collect();
        MatrixFunction::from_coeffs(grid, &terms).unwrap()
    }

    #[test]
    fn layout_round_trip() {
        let f = random_poly(2, 16, 3, 1);
        let g = MatrixFunction::from_vec_unchecked(2, 16, f.to_vec());
        assert_eq!(f, g);
        assert!(f.negative_coeff_residual() < 1e-14);
        assert!(f.riesz_project().sub(&f).sup_norm() < 1e-14);
    }

    #[test]
    fn scalar_factor_matches_outer_function() {
        let grid = 32;
        let w: Vec<f64> = (0..grid)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / grid as f64;
                2.0 + t.cos() + 0.3 * (2.0 * t).sin()
            })
            .collect();
        let wf = MatrixFunction::new(w.iter().map(|&v| MatrixOperator::diag(&[v])).collect()).unwrap();
        let sf = spectral_factor(&wf).unwrap();
        assert!(sf.residual < 1e-8, "{}", sf.residual);
        let sq: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
        let o = outer_function(&CircleFunction::from_real(&sq).unwrap()).unwrap();
        for (a, b) in sf.boundary.samples().iter().zip(o.boundary().samples()) {
            assert!((a.matrix()[(0, 0)] - b).norm() < 1e-6);
        }
    }

    #[test]
    fn matrix_factor_residual() {
        let f = random_poly(2, 16, 2, 4);
        let w = f.map(|m| m.adjoint() * m + DMatrix::identity(2, 2) * c(0.1, 0.0));
        let sf = spectral_factor(&w).unwrap();
        assert!(sf.residual < 1e-6, "{}", sf.residual);
        assert!(sf.boundary.negative_coeff_residual() < 1e-12);
    }

    #[test]
    fn constant_diagonal() {
        let m = MatrixOperator::diag(&[2.0, 1.0]);
        let f = MatrixFunction::constant(16, &m).unwrap();
        let s = matrix_valued_split(&f, 1.0, 1.0, f64::INFINITY, f64::INFINITY, 0.7, 1e-12, &SolverOptions::default()).unwrap();
        assert!(s.factor_residual < 1e-10);
        assert!(s.squaring_residual < 1e-10);
        assert!(s.decomposition.is_valid(1e-10, 1e-10));
        assert!(s.ratio >= 1.0 - 1e-9);
    }

    #[test]
    fn random_two_by_two() {
        let f = random_poly(2, 16, 3, 9);
        for &t in &[0.2, 1.0] {
            let s = matrix_valued_split(&f, 1.0, 1.0, f64::INFINITY, f64::INFINITY, t, 1e-6, &SolverOptions::default()).unwrap();
            assert!(s.decomposition.is_valid(1e-8, 1e-8));
            assert!(s.ratio >= 1.0 - 1e-9 && s.ratio.is_finite(), "{}", s.ratio);
        }
    }

    #[test]
    fn rejects_mixed_exponents() {
        let f = random_poly(2, 16, 1, 2);
        assert!(matrix_valued_split(&f, 1.0, 2.0, f64::INFINITY, f64::INFINITY, 1.0, 1e-6, &SolverOptions::default()).is_err());
    }
}
