//! Proximal maps of `ℓ_p` norms acting on non-negative magnitude vectors
//! (moduli of entries, or singular values).

/// Hölder conjugate exponent.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Plain `ℓ_p` norm of a non-negative vector.
pub fn lp(r: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        r.iter().copied().fold(0.0, f64::max)
    } else if p == 1.0 {
        r.iter().sum()
    } else if p == 2.0 {
        r.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        let m = r.iter().copied().fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * r.iter().map(|v| (v / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `prox_{λ‖·‖_p}(r)` for a non-negative vector `r`.
pub fn prox_lp(r: &[f64], p: f64, lam: f64) -> Vec<f64> {
    if lam <= 0.0 {
        return r.to_vec();
    }
    if p == 1.0 {
        return r.iter().map(|&v| (v - lam).max(0.0)).collect();
    }
    if p == 2.0 {
        let nrm = lp(r, 2.0);
        if nrm <= lam {
            return vec![0.0; r.len()];
        }
        let s = 1.0 - lam / nrm;
        return r.iter().map(|&v| v * s).collect();
    }
    if p.is_infinite() {
        let tau = l1_ball_threshold(r, lam);
        return r.iter().map(|&v| v.min(tau)).collect();
    }
    prox_lp_general(r, p, lam)
}

/// Threshold `τ` with `Σ (r_k − τ)_+ = lam`, or 0 when `Σ r <= lam`.
fn l1_ball_threshold(r: &[f64], lam: f64) -> f64 {
    let total: f64 = r.iter().sum();
    if total <= lam {
        return 0.0;
    }
    let mut sorted = r.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let cand = (cum - lam) / (k + 1) as f64;
        let next = sorted.get(k + 1).copied().unwrap_or(0.0);
        if cand >= next {
            tau = cand;
            break;
        }
    }
    tau.max(0.0)
}

/// Root of `x + c·x^{p-1} = r` on `[0, r]`.
fn scalar_root(r: f64, c: f64, p: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, r);
    let mut x = r / (1.0 + c * r.powf(p - 2.0));
    x = x.clamp(0.0, r);
    for _ in 0..100 {
        let fx = x + c * x.powf(p - 1.0) - r;
        if fx.abs() <= 1e-15 * r {
            return x;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = 1.0 + c * (p - 1.0) * x.powf(p - 2.0);
        let mut next = x - fx / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * r {
            return next;
        }
        x = next;
    }
    x
}

fn prox_lp_general(r: &[f64], p: f64, lam: f64) -> Vec<f64> {
    let q = conjugate(p);
    if lp(r, q) <= lam {
        return vec![0.0; r.len()];
    }
    let solve = |c: f64| -> (Vec<f64>, f64) {
        let x: Vec<f64> = r.iter().map(|&v| scalar_root(v, c, p)).collect();
        let s = lp(&x, p);
        (x, c * s.powf(p - 1.0) - lam)
    };
    // h(c) = c‖x(c)‖^{p-1} − λ is increasing in c.
    let mut lo = 1.0;
    let mut hi = 1.0;
    if solve(1.0).1 > 0.0 {
        while solve(lo).1 > 0.0 && lo > 1e-300 {
            lo *= 0.125;
        }
    } else {
        while solve(hi).1 < 0.0 && hi < 1e300 {
            hi *= 8.0;
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if solve(mid).1 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    solve((lo * hi).sqrt()).0
}
