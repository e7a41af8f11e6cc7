use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::circle::CircleFunction;
use crate::kfunc::Element;
use crate::schatten::matrix_valued::MatrixFunction;
use crate::schatten::{triangular_part, MatrixOperator};

/// Largest grid and matrix size used for matrix-valued instances.
pub const FIELD_MAX_GRID: usize = 16;
pub const FIELD_MAX_N: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    AnalyticPoly,
    TrigPoly,
    Matrix,
    TriangularMatrix,
    MatrixValuedPoly,
}

/// One RNG stream per `(seed, index)`, so instances do not depend on the
/// order in which they are generated.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Complex Gaussian with `E|z|² = 1`.
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn decay(j: i64) -> f64 {
    1.0 / (j.unsigned_abs().max(1) as f64)
}

pub fn random_analytic_poly(rng: &mut impl Rng, grid: usize) -> CircleFunction {
    let deg = (grid / 4) as i64;
    let terms: Vec<(i64, Complex64)> = (0..=deg).map(|j| (j, complex_gaussian(rng) * decay(j))).collect();
    CircleFunction::from_coeffs(grid, &terms).expect("valid grid")
}

pub fn random_trig_poly(rng: &mut impl Rng, grid: usize) -> CircleFunction {
    let deg = (grid / 4) as i64;
    let terms: Vec<(i64, Complex64)> = (-deg..=deg).map(|j| (j, complex_gaussian(rng) * decay(j))).collect();
    CircleFunction::from_coeffs(grid, &terms).expect("valid grid")
}

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> MatrixOperator {
    MatrixOperator::from_fn(n, |_, _| complex_gaussian(rng)).expect("positive size")
}

/// Upper triangular part of a Gaussian matrix with each diagonal entry
/// pushed one unit away from the origin.
pub fn random_triangular(rng: &mut impl Rng, n: usize) -> MatrixOperator {
    let mut m = triangular_part(&random_matrix(rng, n)).into_matrix();
    for i in 0..n {
        let d = m[(i, i)];
        let dir = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        m[(i, i)] = d + dir;
    }
    MatrixOperator::new(m).expect("finite entries")
}

pub fn random_matrix_poly(rng: &mut impl Rng, n: usize, grid: usize) -> MatrixFunction {
    let deg = (grid / 4) as i64;
    let terms: Vec<(i64, MatrixOperator)> = (0..=deg)
        .map(|j| (j, random_matrix(rng, n).scale(Complex64::new(decay(j), 0.0))))
        .collect();
    MatrixFunction::from_coeffs(grid, &terms).expect("valid grid")
}

/// Reproducible random instance number `index` of the given kind.
pub fn generate_instance(kind: InstanceKind, config: &ExperimentConfig, index: u64) -> Element {
    let mut rng = instance_rng(config.seed, index);
    match kind {
        InstanceKind::AnalyticPoly => Element::Circle(random_analytic_poly(&mut rng, config.grid_n)),
        InstanceKind::TrigPoly => Element::Circle(random_trig_poly(&mut rng, config.grid_n)),
        InstanceKind::Matrix => Element::Matrix(random_matrix(&mut rng, config.matrix_n)),
        InstanceKind::TriangularMatrix => Element::Matrix(random_triangular(&mut rng, config.matrix_n)),
        InstanceKind::MatrixValuedPoly => Element::MatrixField(random_matrix_poly(
            &mut rng,
            config.matrix_n.min(FIELD_MAX_N),
            config.grid_n.min(FIELD_MAX_GRID),
        )),
    }
}
