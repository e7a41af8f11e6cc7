//! Truncation splits and the one-dimensional search over truncation levels
//! shared by the constructive decompositions.

use nalgebra::DMatrix;
use num_complex::Complex64;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Minimises `cost` over truncation levels in `[0, top]`.
///
/// `marks` are the magnitudes at which the cost changes slope (sample
/// moduli or singular values). A scan over those marks, a log-spaced net and
/// the two endpoints brackets the minimum, which golden-section search on
/// `log λ` then refines. Returns the level and its cost.
pub(crate) fn search_level(marks: &[f64], cost: impl Fn(f64) -> f64) -> (f64, f64) {
    let top = marks.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return (0.0, cost(0.0));
    }
    let bottom = marks
        .iter()
        .copied()
        .filter(|&v| v > 1e-14 * top)
        .fold(top, f64::min);
    let mut cands: Vec<f64> = marks.iter().copied().filter(|&v| v > 0.0).collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * top);
    if cands.len() > 256 {
        let step = cands.len() as f64 / 256.0;
        cands = (0..256).map(|i| cands[(i as f64 * step) as usize]).collect();
    }
    let net = 48;
    let span = (top / bottom).ln().max(1e-12);
    for i in 0..=net {
        cands.push(bottom * (span * i as f64 / net as f64).exp());
    }
    cands.push(0.0);
    cands.push(top);
    cands.sort_by(f64::total_cmp);
    cands.dedup();

    let vals: Vec<f64> = cands.iter().map(|&l| cost(l)).collect();
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for (i, &v) in vals.iter().enumerate() {
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut best_level = cands[best_i];
    // refine between the neighbours of the best candidate
    let lo = cands[best_i.saturating_sub(1)];
    let hi = cands[(best_i + 1).min(cands.len() - 1)];
    let (mut a, mut b) = (lo.max(bottom * 1e-3).ln(), hi.max(bottom * 1e-3).ln());
    if b > a {
        let f = |s: f64| cost(s.exp());
        let mut c = b - GOLDEN * (b - a);
        let mut d = a + GOLDEN * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..60 {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - GOLDEN * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + GOLDEN * (b - a);
                fd = f(d);
            }
            if b - a < 1e-10 {
                break;
            }
        }
        for (s, v) in [(c, fc), (d, fd)] {
            if v < best {
                best = v;
                best_level = s.exp().clamp(lo, hi);
            }
        }
    }
    (best_level, best)
}

/// Pointwise modulus truncation `h = z·min(1, λ/|z|)`; returns `(z − h, h)`.
pub(crate) fn truncate_values(v: &[Complex64], level: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    v.iter()
        .map(|&z| {
            let r = z.norm();
            if r <= level {
                (Complex64::new(0.0, 0.0), z)
            } else {
                let h = z * (level / r);
                (z - h, h)
            }
        })
        .unzip()
}

/// Singular-value truncation of a matrix at `level`; returns
/// `(m − h, h)` with `h = U·min(σ, λ)·V*`.
pub(crate) fn sv_truncate(m: &DMatrix<Complex64>, level: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors");
    let vt = svd.v_t.as_ref().expect("right singular vectors");
    let k = svd.singular_values.len();
    let mut small = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..k {
        let s = svd.singular_values[i].min(level);
        if s > 0.0 {
            small += (u.column(i) * vt.row(i)) * Complex64::new(s, 0.0);
        }
    }
    (m - &small, small)
}
