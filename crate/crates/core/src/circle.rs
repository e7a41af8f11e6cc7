//! Boundary functions on the circle, sampled on a uniform grid.
//!
//! All `L^p` quantities use the normalised grid measure (weight `1/N` per
//! sample), so identities hold exactly for the discrete model rather than up
//! to quadrature error.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        cell.borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// In-place forward DFT normalised by `1/N`; output is in FFT order
/// (frequency `j` at index `j mod N`).
pub(crate) fn dft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, false).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// In-place inverse of [`dft_in_place`].
pub(crate) fn idft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, true).process(buf);
}

/// Signed frequency of FFT-order index `k` on an `n`-point grid, in
/// `-n/2..n/2`.
pub(crate) fn frequency(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

pub(crate) fn check_grid(n: usize) -> Result<()> {
    if n >= 8 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::InvalidGrid(n))
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && !p.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// `(mean |v|^p)^{1/p}`, or `max |v|` for `p = ∞`.
pub(crate) fn grid_lp(values: impl Iterator<Item = f64> + Clone, n: usize, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else if p == 1.0 {
        values.sum::<f64>() / n as f64
    } else if p == 2.0 {
        (values.map(|v| v * v).sum::<f64>() / n as f64).sqrt()
    } else {
        let m = values.clone().fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * (values.map(|v| (v / m).powf(p)).sum::<f64>() / n as f64).powf(1.0 / p)
    }
}

/// Complex samples at `e^{2πik/N}`, `k = 0..N`, with lazily cached Fourier
/// coefficients.
#[derive(Clone)]
pub struct CircleFunction {
    samples: Vec<Complex64>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl std::fmt::Debug for CircleFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CircleFunction")
            .field("n", &self.len())
            .field("samples", &self.samples)
            .finish()
    }
}

impl PartialEq for CircleFunction {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples
    }
}

impl CircleFunction {
    pub fn from_samples(samples: Vec<Complex64>) -> Result<Self> {
        check_grid(samples.len())?;
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(Self {
            samples,
            coeffs: OnceLock::new(),
        })
    }

    pub(crate) fn from_samples_unchecked(samples: Vec<Complex64>) -> Self {
        debug_assert!(samples.len().is_power_of_two());
        Self {
            samples,
            coeffs: OnceLock::new(),
        }
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_samples(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f(t_k)` with `t_k = 2πk/N`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        check_grid(n)?;
        Self::from_samples((0..n).map(|k| f(2.0 * PI * k as f64 / n as f64)).collect())
    }

    /// Builds a function from `(frequency, coefficient)` pairs; frequencies
    /// are reduced mod `N`.
    pub fn from_coeffs(n: usize, terms: &[(i64, Complex64)]) -> Result<Self> {
        check_grid(n)?;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for &(j, c) in terms {
            buf[j.rem_euclid(n as i64) as usize] += c;
        }
        idft_in_place(&mut buf);
        Self::from_samples(buf)
    }

    /// Analytic polynomial `Σ c_j z^j` evaluated on the grid.
    pub fn from_poly(n: usize, coeffs: &[Complex64]) -> Result<Self> {
        let terms: Vec<_> = coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| (j as i64, c))
            .collect();
        Self::from_coeffs(n, &terms)
    }

    pub fn constant(n: usize, c: Complex64) -> Result<Self> {
        check_grid(n)?;
        Self::from_samples(vec![c; n])
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::constant(n, Complex64::new(0.0, 0.0))
    }

    /// `e^{ikt}` on the grid.
    pub fn monomial(n: usize, k: i64) -> Result<Self> {
        Self::from_fn(n, |t| Complex64::from_polar(1.0, k as f64 * t))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Grid points `e^{2πik/N}`.
    pub fn grid(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
            .collect()
    }

    fn fft_coeffs(&self) -> &[Complex64] {
        self.coeffs.get_or_init(|| {
            let mut buf = self.samples.clone();
            dft_in_place(&mut buf);
            buf
        })
    }

    /// Fourier coefficients ordered by frequency `-N/2..N/2`.
    pub fn fourier_coeffs(&self) -> Vec<Complex64> {
        let n = self.len();
        let c = self.fft_coeffs();
        (0..n).map(|i| c[(i + n / 2) % n]).collect()
    }

    /// Coefficient of frequency `j`, `-N/2 <= j < N/2`.
    pub fn coeff(&self, j: i64) -> Complex64 {
        let n = self.len() as i64;
        assert!(
            (-n / 2..n / 2).contains(&j),
            "frequency {j} outside -{}..{}",
            n / 2,
            n / 2
        );
        self.fft_coeffs()[j.rem_euclid(n) as usize]
    }

    /// Coefficients of frequencies `0..N/2` (the analytic part).
    pub fn analytic_coeffs(&self) -> Vec<Complex64> {
        self.fft_coeffs()[..self.len() / 2].to_vec()
    }

    /// Largest modulus among negative-frequency coefficients.
    pub fn negative_coeff_residual(&self) -> f64 {
        let n = self.len();
        self.fft_coeffs()[n / 2..]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_analytic(&self, tol: f64) -> bool {
        self.negative_coeff_residual() <= tol
    }

    fn multiplier(&self, m: impl Fn(i64) -> Complex64) -> CircleFunction {
        let n = self.len();
        let mut buf: Vec<Complex64> = self
            .fft_coeffs()
            .iter()
            .enumerate()
            .map(|(k, &c)| c * m(frequency(k, n)))
            .collect();
        idft_in_place(&mut buf);
        CircleFunction::from_samples_unchecked(buf)
    }

    /// Riesz projection: keeps frequencies `j >= 0`.
    pub fn riesz_project(&self) -> CircleFunction {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        self.multiplier(|j| if j >= 0 { one } else { zero })
    }

    /// Conjugate function: multiplier `-i sign(j)`.
    pub fn hilbert_transform(&self) -> CircleFunction {
        self.multiplier(|j| Complex64::new(0.0, -(j.signum() as f64)))
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        Ok(grid_lp(self.samples.iter().map(|z| z.norm()), self.len(), p))
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    pub fn rearrange(&self) -> Rearrangement {
        Rearrangement::from_values(self.modulus(), 1.0 / self.len() as f64)
    }

    /// `K_t(f; L¹, L^∞) = ∫_0^t f*`, evaluated exactly on the step function.
    pub fn kt_l1_linf(&self, t: f64) -> Result<f64> {
        self.rearrange().kt(t)
    }

    /// Splits `f = (f - h) + h` with `h = f·min(1, λ/|f|)`.
    pub fn truncate_at_level(&self, level: f64) -> Result<(CircleFunction, CircleFunction)> {
        if !(level >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation level must be non-negative, got {level}"
            )));
        }
        let (big, small): (Vec<_>, Vec<_>) = self
            .samples
            .iter()
            .map(|&z| {
                let r = z.norm();
                if r <= level {
                    (Complex64::new(0.0, 0.0), z)
                } else {
                    let h = z * (level / r);
                    (z - h, h)
                }
            })
            .unzip();
        Ok((
            CircleFunction::from_samples_unchecked(big),
            CircleFunction::from_samples_unchecked(small),
        ))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> CircleFunction {
        CircleFunction::from_samples_unchecked(self.samples.iter().map(|&z| f(z)).collect())
    }

    fn zip_with(
        &self,
        other: &CircleFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> CircleFunction {
        assert_eq!(self.len(), other.len(), "grid size mismatch");
        CircleFunction::from_samples_unchecked(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &CircleFunction) -> CircleFunction {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CircleFunction) -> CircleFunction {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &CircleFunction) -> CircleFunction {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> CircleFunction {
        self.map(|z| z * c)
    }

    pub fn conj(&self) -> CircleFunction {
        self.map(|z| z.conj())
    }

    /// Discrete inner product `mean(conj(f)·g)`.
    pub fn inner(&self, other: &CircleFunction) -> Complex64 {
        assert_eq!(self.len(), other.len(), "grid size mismatch");
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            / self.len() as f64
    }

    /// `max_k |f_k - g_k|`.
    pub fn max_diff(&self, other: &CircleFunction) -> f64 {
        self.sub(other).sup_norm()
    }
}

#[derive(Serialize, Deserialize)]
struct CircleJson {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for CircleFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CircleJson {
            n: self.len(),
            re: self.samples.iter().map(|z| z.re).collect(),
            im: self.samples.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CircleFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = CircleJson::deserialize(d)?;
        if raw.re.len() != raw.n || raw.im.len() != raw.n {
            return Err(D::Error::custom(format!(
                "expected {} samples, got re={} im={}",
                raw.n,
                raw.re.len(),
                raw.im.len()
            )));
        }
        let samples = raw
            .re
            .into_iter()
            .zip(raw.im)
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        CircleFunction::from_samples(samples).map_err(D::Error::custom)
    }
}

/// Non-increasing step function on `[0, len·weight]`; the decreasing
/// rearrangement `f*` of a grid function (weight `1/N`) or of a sequence
/// (weight 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Rearrangement {
    values: Vec<f64>,
    weight: f64,
}

impl Rearrangement {
    /// Sorts `values` non-increasingly; ties keep their original order.
    pub fn from_values(mut values: Vec<f64>, weight: f64) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values, weight }
    }

    /// Sequence rearrangement (counting measure).
    pub fn sequence(values: Vec<f64>) -> Self {
        Self::from_values(values, 1.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn domain_length(&self) -> f64 {
        self.values.len() as f64 * self.weight
    }

    /// Total mass `Σ values·weight`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.weight
    }

    /// Right-continuous value `f*(t)`; zero beyond the domain.
    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.values.first().copied().unwrap_or(0.0);
        }
        let idx = (t / self.weight).floor() as usize;
        self.values.get(idx).copied().unwrap_or(0.0)
    }

    /// `∫_0^t f*(s) ds`.
    pub fn kt(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
        }
        let steps = t / self.weight;
        let full = (steps.floor() as usize).min(self.values.len());
        let mut acc: f64 = self.values[..full].iter().sum();
        if full < self.values.len() {
            acc += (steps - full as f64) * self.values[full];
        }
        Ok(acc * self.weight)
    }
}
