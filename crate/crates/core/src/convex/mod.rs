//! First-order primal-dual solver for the small norm programs used as
//! oracles throughout the crate.
//!
//! Every program has the form
//!
//! ```text
//!     minimize  Φ(u) = ⊕_i c_i · N_i(s_i − u)      over u in a subspace S
//! ```
//!
//! where `⊕` is either a sum or a maximum, `N_i` are unitarily invariant
//! norms (entrywise moduli or block singular values) and `s_i` are optional
//! shifts. The scheme is Chambolle–Pock with extrapolation, adaptive
//! restarts to the averaged iterate and a primal-weight update. Each check
//! repairs the dual iterate into an exactly feasible point, so the reported
//! gap is a certified bound on suboptimality.

pub mod prox;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{dft_in_place, idft_in_place};
use crate::error::{Error, Result};

/// `scale · ‖σ‖_p` where `σ` are entry moduli or, for `spectral = Some(n)`,
/// the singular values of consecutive column-major `n×n` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub p: f64,
    pub scale: f64,
    pub spectral: Option<usize>,
}

impl NormSpec {
    /// `L^p` on an `N`-point circle grid (normalised measure).
    pub fn grid_lp(p: f64, n: usize) -> Self {
        Self {
            p,
            scale: measure_scale(p, n),
            spectral: None,
        }
    }

    /// `ℓ_p` with counting measure.
    pub fn sequence(p: f64) -> Self {
        Self {
            p,
            scale: 1.0,
            spectral: None,
        }
    }

    /// Schatten `p`-norm of an `n×n` matrix.
    pub fn schatten(p: f64, n: usize) -> Self {
        Self {
            p,
            scale: 1.0,
            spectral: Some(n),
        }
    }

    /// `L_p(C_p)` of a grid of `n×n` matrices over `grid` points.
    pub fn bochner_schatten(p: f64, n: usize, grid: usize) -> Self {
        Self {
            p,
            scale: measure_scale(p, grid),
            spectral: Some(n),
        }
    }

    pub fn dual(&self) -> Self {
        Self {
            p: prox::conjugate(self.p),
            scale: 1.0 / self.scale,
            spectral: self.spectral,
        }
    }

    pub fn eval(&self, v: &[Complex64]) -> f64 {
        self.scale * prox::lp(&Spectrum::new(v, self.spectral).mags, self.p)
    }
}

fn measure_scale(p: f64, n: usize) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        (n as f64).powf(-1.0 / p)
    }
}

enum Frame {
    Phases(Vec<Complex64>),
    Svd {
        n: usize,
        factors: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)>,
    },
}

/// Magnitudes plus the unitary data needed to rebuild a vector from
/// modified magnitudes.
struct Spectrum {
    mags: Vec<f64>,
    frame: Frame,
}

impl Spectrum {
    fn new(v: &[Complex64], spectral: Option<usize>) -> Self {
        match spectral {
            None => {
                let mut mags = Vec::with_capacity(v.len());
                let mut phases = Vec::with_capacity(v.len());
                for &z in v {
                    let r = z.norm();
                    mags.push(r);
                    phases.push(if r > 0.0 { z / r } else { Complex64::new(1.0, 0.0) });
                }
                Spectrum {
                    mags,
                    frame: Frame::Phases(phases),
                }
            }
            Some(n) => {
                let mut mags = Vec::with_capacity(v.len() / n);
                let mut factors = Vec::with_capacity(v.len() / (n * n));
                for block in v.chunks(n * n) {
                    let m = DMatrix::from_column_slice(n, n, block);
                    let svd = m.svd(true, true);
                    mags.extend(svd.singular_values.iter().copied());
                    factors.push((svd.u.unwrap(), svd.v_t.unwrap()));
                }
                Spectrum {
                    mags,
                    frame: Frame::Svd { n, factors },
                }
            }
        }
    }

    fn rebuild(&self, mags: &[f64]) -> Vec<Complex64> {
        match &self.frame {
            Frame::Phases(ph) => ph.iter().zip(mags).map(|(z, &r)| z * r).collect(),
            Frame::Svd { n, factors } => {
                let n = *n;
                let mut out = Vec::with_capacity(factors.len() * n * n);
                for (b, (u, vt)) in factors.iter().enumerate() {
                    let mut us = u.clone();
                    for j in 0..n {
                        let s = mags[b * n + j];
                        for i in 0..n {
                            us[(i, j)] *= s;
                        }
                    }
                    out.extend((us * vt).iter().copied());
                }
                out
            }
        }
    }
}

/// Linear constraint on the variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subspace {
    Full,
    /// Grid-major layout: sample `k` of component `e` sits at `k·stride + e`;
    /// negative frequencies of every component vanish.
    Analytic { grid: usize, stride: usize },
    /// Consecutive column-major `n×n` blocks, each upper triangular.
    UpperTriangular { n: usize },
}

impl Subspace {
    pub fn project(&self, v: &mut [Complex64]) {
        match *self {
            Subspace::Full => {}
            Subspace::Analytic { grid, stride } => {
                if stride == 1 {
                    dft_in_place(v);
                    for z in v[grid / 2..].iter_mut() {
                        *z = Complex64::new(0.0, 0.0);
                    }
                    idft_in_place(v);
                } else {
                    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
                    for e in 0..stride {
                        for k in 0..grid {
                            buf[k] = v[k * stride + e];
                        }
                        dft_in_place(&mut buf);
                        for z in buf[grid / 2..].iter_mut() {
                            *z = Complex64::new(0.0, 0.0);
                        }
                        idft_in_place(&mut buf);
                        for k in 0..grid {
                            v[k * stride + e] = buf[k];
                        }
                    }
                }
            }
            Subspace::UpperTriangular { n } => {
                for block in v.chunks_mut(n * n) {
                    for j in 0..n {
                        for i in j + 1..n {
                            block[j * n + i] = Complex64::new(0.0, 0.0);
                        }
                    }
                }
            }
        }
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn residual(&self, v: &[Complex64]) -> f64 {
        let mut p = v.to_vec();
        self.project(&mut p);
        v.iter()
            .zip(&p)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub norm: NormSpec,
    pub coef: f64,
    pub shift: Option<Vec<Complex64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    Sum,
    Max,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub dim: usize,
    pub blocks: Vec<Block>,
    pub coupling: Coupling,
    pub subspace: Subspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 200_000,
            check_every: 40,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverCertificate {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Minimizer `u` (in the subspace).
    #[serde(skip)]
    pub solution: Vec<Complex64>,
    /// Feasible dual point, one vector per block.
    #[serde(skip)]
    pub dual_witness: Vec<Vec<Complex64>>,
}

fn re_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn euclid(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn diff_norm(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

impl Program {
    fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidParameter("program has no blocks".into()));
        }
        if self.dim > 20_000 {
            return Err(Error::TooLarge(format!("{} complex variables", self.dim)));
        }
        for b in &self.blocks {
            if !(b.coef > 0.0) || !(b.norm.scale > 0.0) || !(b.norm.p >= 1.0) {
                return Err(Error::InvalidParameter(format!("bad block {:?}", b.norm)));
            }
            if let Some(s) = &b.shift {
                if s.len() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        got: s.len(),
                    });
                }
            }
            if let Some(n) = b.norm.spectral {
                if n == 0 || self.dim % (n * n) != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "dimension {} not a multiple of {n}x{n} blocks",
                        self.dim
                    )));
                }
            }
        }
        Ok(())
    }

    /// `Φ(u)`.
    pub fn objective(&self, u: &[Complex64]) -> f64 {
        let terms = self.blocks.iter().map(|b| {
            let v: Vec<Complex64> = match &b.shift {
                Some(s) => s.iter().zip(u).map(|(a, c)| a - c).collect(),
                None => u.to_vec(),
            };
            b.coef * b.norm.eval(&v)
        });
        match self.coupling {
            Coupling::Sum => terms.sum(),
            Coupling::Max => terms.fold(0.0, f64::max),
        }
    }

    fn dual_term(&self, w: &[Vec<Complex64>]) -> f64 {
        -self
            .blocks
            .iter()
            .zip(w)
            .map(|(b, wi)| b.shift.as_ref().map_or(0.0, |s| re_inner(wi, s)))
            .sum::<f64>()
    }

    /// Feasibility factor of a dual point: `≤ 1` means feasible.
    fn dual_factor(&self, w: &[Vec<Complex64>]) -> f64 {
        let vals = self
            .blocks
            .iter()
            .zip(w)
            .map(|(b, wi)| b.norm.dual().eval(wi) / b.coef);
        match self.coupling {
            Coupling::Sum => vals.fold(0.0, f64::max),
            Coupling::Max => vals.sum(),
        }
    }

    /// Repairs `w` so that `Σ w_i ⊥ S` and the norm constraints hold
    /// exactly; returns the resulting lower bound and the feasible point.
    fn repaired_dual(&self, w: &[Vec<Complex64>]) -> (f64, Vec<Vec<Complex64>>) {
        let mut total = vec![Complex64::new(0.0, 0.0); self.dim];
        for wi in w {
            for (t, z) in total.iter_mut().zip(wi) {
                *t += z;
            }
        }
        self.subspace.project(&mut total);
        let mut best = (f64::NEG_INFINITY, w.to_vec());
        for j in 0..w.len() {
            let mut cand = w.to_vec();
            for (z, r) in cand[j].iter_mut().zip(&total) {
                *z -= r;
            }
            let factor = self.dual_factor(&cand).max(1.0);
            if factor > 1.0 {
                for wi in cand.iter_mut() {
                    for z in wi.iter_mut() {
                        *z /= factor;
                    }
                }
            }
            let val = self.dual_term(&cand);
            if val > best.0 {
                best = (val, cand);
            }
        }
        best
    }

    /// Projection of `v` onto the dual feasible set of the conjugate of the
    /// coupled objective (shifts already removed).
    fn dual_project(&self, v: &mut [Vec<Complex64>]) {
        match self.coupling {
            Coupling::Sum => {
                for (b, vi) in self.blocks.iter().zip(v.iter_mut()) {
                    let sp = Spectrum::new(vi, b.norm.spectral);
                    let radius = b.coef * b.norm.scale;
                    let shrunk = prox::prox_lp(&sp.mags, b.norm.p, radius);
                    let mags: Vec<f64> = sp.mags.iter().zip(&shrunk).map(|(a, c)| a - c).collect();
                    *vi = sp.rebuild(&mags);
                }
            }
            Coupling::Max => {
                let specs: Vec<Spectrum> = self
                    .blocks
                    .iter()
                    .zip(v.iter())
                    .map(|(b, vi)| Spectrum::new(vi, b.norm.spectral))
                    .collect();
                let duals: Vec<NormSpec> = self.blocks.iter().map(|b| b.norm.dual()).collect();
                let load = |lam: f64| -> (f64, Vec<Vec<f64>>) {
                    let mut total = 0.0;
                    let mut out = Vec::with_capacity(specs.len());
                    for ((b, d), sp) in self.blocks.iter().zip(&duals).zip(&specs) {
                        let mu = lam * d.scale / b.coef;
                        let m = prox::prox_lp(&sp.mags, d.p, mu);
                        total += d.scale * prox::lp(&m, d.p) / b.coef;
                        out.push(m);
                    }
                    (total, out)
                };
                let (t0, m0) = load(0.0);
                let mags = if t0 <= 1.0 {
                    m0
                } else {
                    let mut hi: f64 = self
                        .blocks
                        .iter()
                        .zip(&specs)
                        .map(|(b, sp)| b.coef * b.norm.scale * prox::lp(&sp.mags, b.norm.p))
                        .fold(0.0, f64::max);
                    let mut lo = 0.0;
                    hi = hi.max(1e-300);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if load(mid).0 > 1.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if hi - lo <= 1e-15 * hi {
                            break;
                        }
                    }
                    load(hi).1
                };
                for ((vi, sp), m) in v.iter_mut().zip(&specs).zip(&mags) {
                    *vi = sp.rebuild(m);
                }
            }
        }
    }
}

/// Solves the program from the zero start (or `initial`, projected).
pub fn solve(
    prog: &Program,
    opts: &SolverOptions,
    initial: Option<&[Complex64]>,
) -> Result<SolverCertificate> {
    prog.validate()?;
    let dim = prog.dim;
    let m = prog.blocks.len();
    let zero = Complex64::new(0.0, 0.0);

    let mut u = match initial {
        Some(x) if x.len() == dim => x.to_vec(),
        Some(x) => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            })
        }
        None => vec![zero; dim],
    };
    prog.subspace.project(&mut u);
    let mut w: Vec<Vec<Complex64>> = vec![vec![zero; dim]; m];

    let scale_u = prog
        .blocks
        .iter()
        .filter_map(|b| b.shift.as_ref().map(|s| euclid(s)))
        .fold(0.0, f64::max);
    if scale_u == 0.0 {
        // every shift vanishes: u = 0 is optimal with value 0
        return Ok(SolverCertificate {
            primal: prog.objective(&u).min(0.0).max(0.0),
            dual: 0.0,
            gap: 0.0,
            iterations: 0,
            converged: true,
            solution: vec![zero; dim],
            dual_witness: w,
        });
    }
    let scale_w: f64 = prog
        .blocks
        .iter()
        .map(|b| {
            let unit = vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim];
            b.coef / b.norm.dual().eval(&unit).max(1e-300)
        })
        .fold(0.0, f64::max);
    let mut omega = (scale_w / scale_u).max(1e-12);
    let knorm = (m as f64).sqrt();

    let mut best_primal = prog.objective(&u);
    let mut best_u = u.clone();
    let (mut best_dual, mut best_w) = prog.repaired_dual(&w);

    let mut u_bar = u.clone();
    let mut u_sum = vec![zero; dim];
    let mut w_sum: Vec<Vec<Complex64>> = vec![vec![zero; dim]; m];
    let mut n_avg = 0usize;
    let mut u_anchor = u.clone();
    let mut w_anchor = w.clone();
    let mut gap_anchor = best_primal - best_dual;
    let mut since_restart = 0usize;
    let mut iter = 0usize;

    let target_gap = |p: f64| opts.tol * p.abs().max(1.0);

    while iter < opts.max_iter {
        let tau = 0.95 / (knorm * omega);
        let sigma = 0.95 * omega / knorm;

        // dual step
        let mut v: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        for (b, wi) in prog.blocks.iter().zip(&w) {
            let mut vi: Vec<Complex64> = wi.iter().zip(&u_bar).map(|(a, c)| a + c * sigma).collect();
            if let Some(s) = &b.shift {
                for (z, si) in vi.iter_mut().zip(s) {
                    *z -= si * sigma;
                }
            }
            v.push(vi);
        }
        prog.dual_project(&mut v);
        w = v;

        // primal step
        let mut u_new = u.clone();
        for wi in &w {
            for (z, y) in u_new.iter_mut().zip(wi) {
                *z -= y * tau;
            }
        }
        prog.subspace.project(&mut u_new);
        for ((ub, un), uo) in u_bar.iter_mut().zip(&u_new).zip(&u) {
            *ub = un * 2.0 - uo;
        }
        u = u_new;

        for (s, z) in u_sum.iter_mut().zip(&u) {
            *s += z;
        }
        for (ws, wi) in w_sum.iter_mut().zip(&w) {
            for (s, z) in ws.iter_mut().zip(wi) {
                *s += z;
            }
        }
        n_avg += 1;
        iter += 1;
        since_restart += 1;

        if iter % opts.check_every != 0 && iter != opts.max_iter {
            continue;
        }

        let inv = 1.0 / n_avg as f64;
        let u_avg: Vec<Complex64> = u_sum.iter().map(|z| z * inv).collect();
        let w_avg: Vec<Vec<Complex64>> = w_sum
            .iter()
            .map(|ws| ws.iter().map(|z| z * inv).collect())
            .collect();

        let p_cur = prog.objective(&u);
        let p_avg = prog.objective(&u_avg);
        let (d_cur, w_cur_rep) = prog.repaired_dual(&w);
        let (d_avg, w_avg_rep) = prog.repaired_dual(&w_avg);
        if p_cur < best_primal {
            best_primal = p_cur;
            best_u = u.clone();
        }
        if p_avg < best_primal {
            best_primal = p_avg;
            best_u = u_avg.clone();
        }
        if d_cur > best_dual {
            best_dual = d_cur;
            best_w = w_cur_rep;
        }
        if d_avg > best_dual {
            best_dual = d_avg;
            best_w = w_avg_rep;
        }
        if best_primal - best_dual <= target_gap(best_primal) {
            break;
        }

        let gap_cur = p_cur - d_cur;
        let gap_avg = p_avg - d_avg;
        let (cand_gap, use_avg) = if gap_avg < gap_cur {
            (gap_avg, true)
        } else {
            (gap_cur, false)
        };
        let restart = cand_gap <= 0.2 * gap_anchor
            || (since_restart >= 2000 && since_restart as f64 >= 0.36 * iter as f64);
        if restart {
            if use_avg {
                u = u_avg;
                w = w_avg;
            }
            let du = diff_norm(&u, &u_anchor);
            let dw: f64 = w
                .iter()
                .zip(&w_anchor)
                .map(|(a, b)| diff_norm(a, b).powi(2))
                .sum::<f64>()
                .sqrt();
            if du > 1e-300 && dw > 1e-300 {
                omega = (0.5 * (dw / du).ln() + 0.5 * omega.ln()).exp();
            }
            u_anchor = u.clone();
            w_anchor = w.clone();
            gap_anchor = cand_gap;
            u_bar = u.clone();
            u_sum.iter_mut().for_each(|z| *z = zero);
            w_sum
                .iter_mut()
                .for_each(|ws| ws.iter_mut().for_each(|z| *z = zero));
            n_avg = 0;
            since_restart = 0;
        }
    }

    let gap = best_primal - best_dual;
    let cert = SolverCertificate {
        primal: best_primal,
        dual: best_dual,
        gap,
        iterations: iter,
        converged: gap <= target_gap(best_primal),
        solution: best_u,
        dual_witness: best_w,
    };
    if cert.converged {
        Ok(cert)
    } else {
        Err(Error::NonConvergence(Box::new(cert)))
    }
}

/// Norm-split program: minimise `‖x₀‖_a + t‖x₁‖_b` over `x = x₀ + x₁`
/// with both parts in `subspace` (`target` must lie in it).
#[derive(Debug, Clone)]
pub struct SplitProgram {
    pub target: Vec<Complex64>,
    pub subspace: Subspace,
    pub norms: (NormSpec, NormSpec),
    pub weight: f64,
}

impl SplitProgram {
    pub fn to_program(&self) -> Result<Program> {
        if !(self.weight > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weight must be positive, got {}",
                self.weight
            )));
        }
        let scale = euclid(&self.target).max(1.0);
        let res = self.subspace.residual(&self.target);
        if res > 1e-8 * scale {
            return Err(Error::NotInSubspace(res));
        }
        Ok(Program {
            dim: self.target.len(),
            blocks: vec![
                Block {
                    norm: self.norms.0,
                    coef: 1.0,
                    shift: Some(self.target.clone()),
                },
                Block {
                    norm: self.norms.1,
                    coef: self.weight,
                    shift: None,
                },
            ],
            coupling: Coupling::Sum,
            subspace: self.subspace,
        })
    }
}

/// Minimises `‖x₀‖_a + t‖x₁‖_b`; the certificate's `solution` is `x₁`.
pub fn solve_split(prog: &SplitProgram, opts: &SolverOptions) -> Result<SolverCertificate> {
    solve(&prog.to_program()?, opts, None)
}

/// `min_{y ∈ S} ‖target − y‖`; the certificate's `solution` is `y`.
pub fn solve_distance(
    target: &[Complex64],
    subspace: Subspace,
    norm: NormSpec,
    opts: &SolverOptions,
) -> Result<SolverCertificate> {
    let prog = Program {
        dim: target.len(),
        blocks: vec![Block {
            norm,
            coef: 1.0,
            shift: Some(target.to_vec()),
        }],
        coupling: Coupling::Sum,
        subspace,
    };
    solve(&prog, opts, None)
}

/// `min_{y ∈ S} max(‖target − y‖_a / s_a, ‖target − y‖_b / s_b)`.
pub fn solve_minmax_distance(
    target: &[Complex64],
    subspace: Subspace,
    norms: (NormSpec, NormSpec),
    scales: (f64, f64),
    opts: &SolverOptions,
    initial: Option<&[Complex64]>,
) -> Result<SolverCertificate> {
    if !(scales.0 > 0.0 && scales.1 > 0.0) {
        return Err(Error::InvalidParameter("scales must be positive".into()));
    }
    let prog = Program {
        dim: target.len(),
        blocks: vec![
            Block {
                norm: norms.0,
                coef: 1.0 / scales.0,
                shift: Some(target.to_vec()),
            },
            Block {
                norm: norms.1,
                coef: 1.0 / scales.1,
                shift: Some(target.to_vec()),
            },
        ],
        coupling: Coupling::Max,
        subspace,
    };
    solve(&prog, opts, initial)
}

/// Element of a subspace that is simultaneously close to `target` in two
/// norms, relative to the respective distances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Simultaneous {
    #[serde(skip)]
    pub solution: Vec<Complex64>,
    /// Certified lower bounds on the two distances.
    pub distances: (f64, f64),
    /// `‖target − y‖ / d` for each norm.
    pub ratios: (f64, f64),
    /// `max` of the two ratios.
    pub k_achieved: f64,
    pub gap: f64,
    pub degenerate: bool,
}

/// Distances below this are treated as zero.
pub const DEGENERATE_DISTANCE: f64 = 1e-10;

/// Minimises `max(‖target − y‖_a / d_a, ‖target − y‖_b / d_b)` over `y` in
/// `subspace`, where `d_a`, `d_b` are the dual (lower) bounds on the two
/// distances, so the reported ratios never undercount.
pub fn simultaneous_approx(
    target: &[Complex64],
    subspace: Subspace,
    norms: (NormSpec, NormSpec),
    opts: &SolverOptions,
) -> Result<Simultaneous> {
    let da = solve_distance(target, subspace, norms.0, opts)?;
    let db = solve_distance(target, subspace, norms.1, opts)?;
    let (d0, d1) = (da.dual.max(0.0), db.dual.max(0.0));
    if d0 < DEGENERATE_DISTANCE || d1 < DEGENERATE_DISTANCE {
        let mut y = target.to_vec();
        subspace.project(&mut y);
        return Ok(Simultaneous {
            solution: y,
            distances: (d0, d1),
            ratios: (1.0, 1.0),
            k_achieved: 1.0,
            gap: da.gap.max(db.gap),
            degenerate: true,
        });
    }
    let start = if da.primal / d0 <= db.primal / d1 {
        &da.solution
    } else {
        &db.solution
    };
    let cert = solve_minmax_distance(target, subspace, norms, (d0, d1), opts, Some(start))?;
    let resid: Vec<Complex64> = target.iter().zip(&cert.solution).map(|(a, b)| a - b).collect();
    let ratios = (norms.0.eval(&resid) / d0, norms.1.eval(&resid) / d1);
    Ok(Simultaneous {
        solution: cert.solution,
        distances: (d0, d1),
        ratios,
        k_achieved: ratios.0.max(ratios.1),
        gap: cert.gap,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_target() {
        let prog = SplitProgram {
            target: vec![c(0.0); 4],
            subspace: Subspace::Full,
            norms: (NormSpec::sequence(1.0), NormSpec::sequence(f64::INFINITY)),
            weight: 0.5,
        };
        let cert = solve_split(&prog, &SolverOptions::default()).unwrap();
        assert_eq!(cert.primal, 0.0);
    }

    #[test]
    fn scalar_split() {
        // min_s |2 − s| + 0.5|s| = 1 at s = 2
        let prog = SplitProgram {
            target: vec![c(2.0)],
            subspace: Subspace::Full,
            norms: (NormSpec::sequence(1.0), NormSpec::sequence(f64::INFINITY)),
            weight: 0.5,
        };
        let cert = solve_split(&prog, &SolverOptions::default()).unwrap();
        assert!((cert.primal - 1.0).abs() < 1e-6, "{cert:?}");
        assert!(cert.dual <= cert.primal + 1e-9);
    }

    #[test]
    fn constant_on_grid() {
        let n = 16;
        let prog = SplitProgram {
            target: vec![c(1.0); n],
            subspace: Subspace::Full,
            norms: (NormSpec::grid_lp(1.0, n), NormSpec::grid_lp(f64::INFINITY, n)),
            weight: 0.5,
        };
        let cert = solve_split(&prog, &SolverOptions::default()).unwrap();
        assert!((cert.primal - 0.5).abs() < 1e-6);
    }

    #[test]
    fn rejects_target_outside_subspace() {
        let mut target = vec![c(0.0); 4];
        target[1] = c(1.0); // entry (1,0): strictly lower
        let prog = SplitProgram {
            target,
            subspace: Subspace::UpperTriangular { n: 2 },
            norms: (NormSpec::schatten(1.0, 2), NormSpec::schatten(f64::INFINITY, 2)),
            weight: 1.0,
        };
        assert!(matches!(prog.to_program(), Err(Error::NotInSubspace(_))));
    }

    #[test]
    fn minmax_corner_matrix() {
        let mut target = vec![c(0.0); 4];
        target[1] = c(1.0);
        let cert = solve_minmax_distance(
            &target,
            Subspace::UpperTriangular { n: 2 },
            (NormSpec::schatten(1.0, 2), NormSpec::schatten(f64::INFINITY, 2)),
            (1.0, 1.0),
            &SolverOptions::default(),
            None,
        )
        .unwrap();
        assert!((cert.primal - 1.0).abs() < 1e-6, "{cert:?}");
    }

    #[test]
    fn subspace_projection_is_idempotent() {
        let v: Vec<Complex64> = (0..32)
            .map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos()))
            .collect();
        for s in [
            Subspace::Analytic { grid: 16, stride: 2 },
            Subspace::Analytic { grid: 32, stride: 1 },
            Subspace::UpperTriangular { n: 4 },
        ] {
            let mut a = v.clone();
            s.project(&mut a);
            let mut b = a.clone();
            s.project(&mut b);
            assert!(diff_norm(&a, &b) < 1e-12);
        }
    }
}
