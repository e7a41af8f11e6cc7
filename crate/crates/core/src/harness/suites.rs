use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::ExperimentConfig;
use super::instances::{generate_instance, InstanceKind};
use crate::circle::{CircleFunction, Rearrangement};
use crate::convex::SolverOptions;
use crate::embeddings::{kq_embed, DEFAULT_N_MAX};
use crate::error::{Error, Result};
use crate::hardy::{self, Backend};
use crate::kfunc::{self, k_ratio, CoupleDecomposition, CoupleId, Element};
use crate::schatten::matrix_valued::matrix_valued_split;
use crate::schatten::{self, decompose_t1_tq, MatrixOperator};

/// Lower guard on ratios against certified ambient lower bounds.
const RATIO_FLOOR: f64 = 1.0 - 1e-9;

/// Exponent `q` used by the `(·¹, ·^q)` suites.
const SUITE_Q: f64 = 2.0;

const FACTOR_TRIPLES: [(f64, f64, f64); 3] = [(1.0, 2.0, 2.0), (2.0, 3.0, 6.0), (2.0, 6.0, 3.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    JonesH1Hinf,
    Prop12H1Hq,
    Thm21Triangular,
    Prop25Identity,
    Lemma23Factor,
    Simultaneous03,
    Simultaneous21i,
    Embeddings42,
    MatrixValued33,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::JonesH1Hinf,
        Suite::Prop12H1Hq,
        Suite::Thm21Triangular,
        Suite::Prop25Identity,
        Suite::Lemma23Factor,
        Suite::Simultaneous03,
        Suite::Simultaneous21i,
        Suite::Embeddings42,
        Suite::MatrixValued33,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::JonesH1Hinf => "jones_h1_hinf",
            Suite::Prop12H1Hq => "prop12_h1_hq",
            Suite::Thm21Triangular => "thm21_triangular",
            Suite::Prop25Identity => "prop25_identity",
            Suite::Lemma23Factor => "lemma23_factor",
            Suite::Simultaneous03 => "simultaneous_03",
            Suite::Simultaneous21i => "simultaneous_21i",
            Suite::Embeddings42 => "embeddings_42",
            Suite::MatrixValued33 => "matrix_valued_33",
        }
    }

    pub fn instance_kind(self) -> InstanceKind {
        match self {
            Suite::JonesH1Hinf | Suite::Prop12H1Hq => InstanceKind::AnalyticPoly,
            Suite::Simultaneous03 | Suite::Embeddings42 => InstanceKind::TrigPoly,
            Suite::Prop25Identity | Suite::Simultaneous21i => InstanceKind::Matrix,
            Suite::Thm21Triangular | Suite::Lemma23Factor => InstanceKind::TriangularMatrix,
            Suite::MatrixValued33 => InstanceKind::MatrixValuedPoly,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

/// One CSV line. For suites without a `t` sweep, `t` holds the swept
/// parameter instead: the exponent-triple index for `lemma23_factor`,
/// `n_max` for `embeddings_42`, and 0 for the simultaneous suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub instance_id: usize,
    pub t: f64,
    #[serde(rename = "ambient_K")]
    pub ambient_k: f64,
    pub achieved_cost: f64,
    pub ratio: f64,
    pub gap: f64,
    pub residual: f64,
}

pub const CSV_HEADER: &str = "instance_id,t,ambient_K,achieved_cost,ratio,gap,residual";

impl Row {
    fn csv(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.instance_id, self.t, self.ambient_k, self.achieved_cost, self.ratio, self.gap, self.residual
        )
    }
}

/// A failed guard, with the instance needed to replay it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub instance_id: usize,
    pub t: Option<f64>,
    pub reason: String,
    pub instance: Element,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub violations: Vec<Violation>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }

    /// Largest ratio over all rows.
    pub fn c_estimate(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn summary(&self) -> serde_json::Value {
        let mut ratios: Vec<f64> = self.rows.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect();
        ratios.sort_by(f64::total_cmp);
        let max_of = |f: fn(&Row) -> f64| self.rows.iter().map(f).fold(0.0, f64::max);
        let per_instance: Vec<f64> = (0..self.config.instances)
            .map(|i| {
                self.rows
                    .iter()
                    .filter(|r| r.instance_id == i)
                    .map(|r| r.ratio)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        json!({
            "schema": 1,
            "suite": self.suite.name(),
            "passed": self.passed(),
            "seed": self.config.seed,
            "instances": self.config.instances,
            "rows": self.rows.len(),
            "c_estimate": finite_or_null(self.c_estimate()),
            "c_estimate_per_instance": per_instance.into_iter().map(finite_or_null).collect::<Vec<_>>(),
            "ratio": {
                "min": finite_or_null(quantile(&ratios, 0.0)),
                "median": finite_or_null(quantile(&ratios, 0.5)),
                "p90": finite_or_null(quantile(&ratios, 0.9)),
                "max": finite_or_null(quantile(&ratios, 1.0)),
            },
            "max_residual": max_of(|r| r.residual),
            "max_gap": max_of(|r| r.gap),
            "violations": self.violations.iter().map(|v| json!({
                "instance_id": v.instance_id,
                "t": v.t,
                "reason": v.reason,
            })).collect::<Vec<_>>(),
            "config": self.config,
        })
    }

    /// Writes `<suite>.csv`, `<suite>.json` and one replay file per
    /// violation into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let name = self.suite.name();
        let csv = dir.join(format!("{name}.csv"));
        fs::write(&csv, self.to_csv())?;
        let summary = dir.join(format!("{name}.json"));
        fs::write(&summary, serde_json::to_string_pretty(&self.summary())?)?;
        let mut out = vec![csv, summary];
        for v in &self.violations {
            let p = dir.join(format!("{name}_violation_{}.json", v.instance_id));
            let body = json!({
                "schema": 1,
                "suite": name,
                "config": self.config,
                "violation": v,
            });
            fs::write(&p, serde_json::to_string_pretty(&body)?)?;
            out.push(p);
        }
        Ok(out)
    }
}

/// Rows and failed guards of one instance.
#[derive(Default)]
struct Outcome {
    rows: Vec<Row>,
    failures: Vec<(Option<f64>, String)>,
}

impl Outcome {
    fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    fn guard(&mut self, ok: bool, t: Option<f64>, reason: impl FnOnce() -> String) {
        if !ok {
            self.failures.push((t, reason()));
        }
    }

    fn guard_ratio(&mut self, row: &Row, cfg: &ExperimentConfig) {
        let t = Some(row.t);
        self.guard(
            row.ratio >= RATIO_FLOOR && row.ratio <= cfg.thresholds.k_ratio,
            t,
            || format!("ratio {} outside [{RATIO_FLOOR}, {}]", row.ratio, cfg.thresholds.k_ratio),
        );
        self.guard(row.residual <= cfg.thresholds.certificate, t, || {
            format!("certificate residual {:e} above {:e}", row.residual, cfg.thresholds.certificate)
        });
    }
}

fn certificate_residual(x: &Element, d: &CoupleDecomposition) -> f64 {
    (d.reconstruction_error / x.max_abs().max(1.0)).max(d.membership_residual)
}

fn circle(x: &Element) -> &CircleFunction {
    match x {
        Element::Circle(f) => f,
        _ => unreachable!("suite generates circle instances"),
    }
}

fn matrix(x: &Element) -> &MatrixOperator {
    match x {
        Element::Matrix(m) => m,
        _ => unreachable!("suite generates matrix instances"),
    }
}

fn jones(id: usize, x: &Element, cfg: &ExperimentConfig, opts: &SolverOptions) -> Result<Outcome> {
    let f = circle(x);
    let mut out = Outcome::default();
    for t in cfg.t_grid.points() {
        let s = hardy::decompose_h1_hinf(f, t, Backend::Oracle, opts)?;
        let row = Row {
            instance_id: id,
            t,
            ambient_k: s.ambient_k,
            achieved_cost: s.decomposition.cost,
            ratio: s.ratio,
            gap: s.certificate.as_ref().map_or(0.0, |c| c.gap),
            residual: certificate_residual(x, &s.decomposition),
        };
        out.guard_ratio(&row, cfg);
        out.push(row);
    }
    Ok(out)
}

fn prop12(id: usize, x: &Element, cfg: &ExperimentConfig, opts: &SolverOptions) -> Result<Outcome> {
    let f = circle(x);
    let ambient = CoupleId::lebesgue(1.0, SUITE_Q)?;
    let mut out = Outcome::default();
    for t in cfg.t_grid.points() {
        let s = hardy::decompose_h1_hq(f, SUITE_Q, t)?;
        let k = kfunc::kt_value(x, ambient, t, opts)?;
        let row = Row {
            instance_id: id,
            t,
            ambient_k: k.lower,
            achieved_cost: s.decomposition.cost,
            ratio: k_ratio(s.decomposition.cost, k.lower),
            gap: k.gap(),
            residual: certificate_residual(x, &s.decomposition),
        };
        out.guard_ratio(&row, cfg);
        out.guard(s.holder_holds(cfg.thresholds.holder_slack), Some(t), || {
            format!("Hölder cross term {} exceeds {}", s.holder_lhs, s.holder_rhs)
        });
        out.push(row);
    }
    Ok(out)
}

fn thm21(id: usize, x: &Element, cfg: &ExperimentConfig, opts: &SolverOptions) -> Result<Outcome> {
    let m = matrix(x);
    let mut out = Outcome::default();
    for t in cfg.t_grid.points() {
        let s = decompose_t1_tq(m, SUITE_Q, t, cfg.epsilon.reg, opts)?;
        let row = Row {
            instance_id: id,
            t,
            ambient_k: s.ambient_k,
            achieved_cost: s.decomposition.cost,
            ratio: s.ratio,
            gap: 0.0,
            residual: certificate_residual(x, &s.decomposition).max(s.expansion_residual_extrapolated),
        };
        out.guard_ratio(&row, cfg);
        out.push(row);
    }
    Ok(out)
}

fn prop25(id: usize, x: &Element, cfg: &ExperimentConfig, opts: &SolverOptions) -> Result<Outcome> {
    let m = matrix(x);
    let seq = Rearrangement::sequence(m.singular_values().values().to_vec());
    let couple = CoupleId::schatten(1.0, f64::INFINITY)?;
    let mut out = Outcome::default();
    for t in cfg.t_grid.points() {
        let closed = seq.kt(t)?;
        let via_sv = schatten::kt_schatten(m, 1.0, f64::INFINITY, t, opts)?;
        let brute = kfunc::kt_bruteforce(x, couple, t, opts)?;
        let residual = (via_sv - closed).abs().max((via_sv - brute.value).abs());
        let row = Row {
            instance_id: id,
            t,
            ambient_k: closed,
            achieved_cost: brute.value,
            ratio: k_ratio(brute.value, closed),
            gap: brute.certificate.gap,
            residual,
        };
        out.guard(residual <= cfg.thresholds.identity, Some(t), || {
            format!("K-functional identity residual {residual:e} above {:e}", cfg.thresholds.identity)
        });
        out.push(row);
    }
    Ok(out)
}

fn lemma23(id: usize, x: &Element, cfg: &ExperimentConfig) -> Result<Outcome> {
    let m = matrix(x);
    let mut out = Outcome::default();
    for (k, &(p, r, q)) in FACTOR_TRIPLES.iter().enumerate() {
        let fac = schatten::triangular_factor(m, p, r, q)?;
        let norm_x = m.schatten_norm(p);
        let prod = fac.a.schatten_norm(r) * fac.b.schatten_norm(q);
        let residual = fac
            .triangularity_error()
            .max(fac.reconstruction_error(m))
            .max(fac.norm_identity_error(m));
        let row = Row {
            instance_id: id,
            t: k as f64,
            ambient_k: norm_x,
            achieved_cost: prod,
            ratio: k_ratio(prod, norm_x),
            gap: 0.0,
            residual,
        };
        out.guard(residual <= cfg.thresholds.factor, Some(k as f64), || {
            format!("factorization ({p},{r},{q}) residual {residual:e} above {:e}", cfg.thresholds.factor)
        });
        out.push(row);
    }
    Ok(out)
}

fn simultaneous_row(
    out: &mut Outcome,
    id: usize,
    cfg: &ExperimentConfig,
    res: &crate::convex::Simultaneous,
    membership: f64,
) {
    let row = Row {
        instance_id: id,
        t: 0.0,
        ambient_k: res.distances.0,
        achieved_cost: res.distances.0 * res.ratios.0,
        ratio: res.k_achieved,
        gap: res.gap,
        residual: membership,
    };
    out.guard(
        res.k_achieved >= RATIO_FLOOR && res.k_achieved <= cfg.thresholds.k_ratio,
        None,
        || format!("K_achieved {} outside [{RATIO_FLOOR}, {}]", res.k_achieved, cfg.thresholds.k_ratio),
    );
    out.guard(membership <= cfg.thresholds.certificate, None, || {
        format!("approximant leaves the subspace by {membership:e}")
    });
    out.push(row);
}

fn simultaneous03(id: usize, x: &Element, cfg: &ExperimentConfig, opts: &SolverOptions) -> Result<Outcome> {
    let a = hardy::simultaneous_approx(circle(x), opts)?;
    let mut out = Outcome::default();
    simultaneous_row(&mut out, id, cfg, &a.result, a.h.negative_coeff_residual());
    Ok(out)
}

fn simultaneous21i(id: usize, x: &Element, cfg: &ExperimentConfig, opts: &SolverOptions) -> Result<Outcome> {
    let m = matrix(x);
    let a = schatten::simultaneous_triangular_approx(m, opts)?;
    let raw = MatrixOperator::from_column_major(m.n(), &a.result.solution)?;
    let mut out = Outcome::default();
    simultaneous_row(&mut out, id, cfg, &a.result, raw.strict_lower_max());
    Ok(out)
}

/// `n_max` values of the embedding sweep, doubling up to the default.
pub fn embedding_sweep() -> Vec<usize> {
    vec![DEFAULT_N_MAX / 8, DEFAULT_N_MAX / 4, DEFAULT_N_MAX / 2, DEFAULT_N_MAX]
}

fn embeddings42(id: usize, x: &Element, _cfg: &ExperimentConfig) -> Result<Outcome> {
    let f = circle(x);
    let mut out = Outcome::default();
    let mut prev: Option<f64> = None;
    for n_max in embedding_sweep() {
        let r = kq_embed(f, SUITE_Q, n_max)?;
        let t = Some(n_max as f64);
        let slack = 1e-12 * r.target.max(1.0);
        out.guard(r.sup <= r.target + slack, t, || {
            format!("embedding sup {} exceeds target {}", r.sup, r.target)
        });
        if let Some(p) = prev {
            out.guard(r.residual <= p + slack, t, || {
                format!("residual grew from {p:e} to {:e}", r.residual)
            });
        }
        prev = Some(r.residual);
        out.push(Row {
            instance_id: id,
            t: n_max as f64,
            ambient_k: r.target,
            achieved_cost: r.sup,
            ratio: k_ratio(r.sup, r.target),
            gap: r.tail_bound,
            residual: r.residual,
        });
    }
    Ok(out)
}

fn matrix_valued33(id: usize, x: &Element, cfg: &ExperimentConfig, opts: &SolverOptions) -> Result<Outcome> {
    let f = match x {
        Element::MatrixField(f) => f,
        _ => unreachable!("suite generates matrix-valued instances"),
    };
    let mut out = Outcome::default();
    for t in cfg.t_grid.points() {
        let s = matrix_valued_split(f, 1.0, 1.0, f64::INFINITY, f64::INFINITY, t, cfg.epsilon.reg, opts)?;
        let row = Row {
            instance_id: id,
            t,
            ambient_k: s.ambient_k,
            achieved_cost: s.decomposition.cost,
            ratio: s.ratio,
            gap: 0.0,
            residual: certificate_residual(x, &s.decomposition),
        };
        out.guard_ratio(&row, cfg);
        out.push(row);
    }
    Ok(out)
}

fn run_instance(suite: Suite, id: usize, x: &Element, cfg: &ExperimentConfig) -> Result<Outcome> {
    let opts = cfg.solver_options();
    match suite {
        Suite::JonesH1Hinf => jones(id, x, cfg, &opts),
        Suite::Prop12H1Hq => prop12(id, x, cfg, &opts),
        Suite::Thm21Triangular => thm21(id, x, cfg, &opts),
        Suite::Prop25Identity => prop25(id, x, cfg, &opts),
        Suite::Lemma23Factor => lemma23(id, x, cfg),
        Suite::Simultaneous03 => simultaneous03(id, x, cfg, &opts),
        Suite::Simultaneous21i => simultaneous21i(id, x, cfg, &opts),
        Suite::Embeddings42 => embeddings42(id, x, cfg),
        Suite::MatrixValued33 => matrix_valued33(id, x, cfg, &opts),
    }
}

/// Runs `suite` over `config.instances` random instances. Instances run in
/// parallel; rows come out ordered by instance and parameter. Library
/// errors on an instance are reported as violations.
pub fn run_suite(suite: Suite, config: &ExperimentConfig) -> Result<SuiteReport> {
    config.validate()?;
    let kind = suite.instance_kind();
    let work = || {
        (0..config.instances)
            .into_par_iter()
            .map(|id| {
                let x = generate_instance(kind, config, id as u64);
                let outcome = run_instance(suite, id, &x, config).unwrap_or_else(|e| Outcome {
                    rows: Vec::new(),
                    failures: vec![(None, format!("error: {e}"))],
                });
                (id, x, outcome)
            })
            .collect::<Vec<_>>()
    };
    let results = if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work)
    } else {
        work()
    };
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (id, x, outcome) in results {
        rows.extend(outcome.rows);
        for (t, reason) in outcome.failures {
            violations.push(Violation {
                instance_id: id,
                t,
                reason,
                instance: x.clone(),
            });
        }
    }
    Ok(SuiteReport {
        suite,
        config: config.clone(),
        rows,
        violations,
    })
}
