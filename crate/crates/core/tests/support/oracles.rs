//! Reference solvers used only by tests. They work on plain slices with
//! their own difference operators so they share no code path with the
//! library.

#![allow(dead_code)]

/// Integrand of a 1D model, indexed by the forward-difference node.
#[derive(Clone, Debug)]
pub enum OracleModel {
    Tv,
    Huber(f64),
    /// `t + (w_k / 2) t^2`.
    DoublePhase(Vec<f64>),
}

impl OracleModel {
    fn phi(&self, k: usize, t: f64) -> f64 {
        let t = t.abs();
        match self {
            OracleModel::Tv => t,
            OracleModel::Huber(a) => {
                if t <= *a {
                    t * t / (2.0 * a)
                } else {
                    t - a / 2.0
                }
            }
            OracleModel::DoublePhase(w) => t + 0.5 * w[k] * t * t,
        }
    }

    /// Conjugate `phi*(s)`, possibly infinite.
    fn phi_star(&self, k: usize, s: f64) -> f64 {
        let s = s.abs();
        match self {
            OracleModel::Tv => {
                if s <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            OracleModel::Huber(a) => {
                if s <= 1.0 {
                    0.5 * a * s * s
                } else {
                    f64::INFINITY
                }
            }
            OracleModel::DoublePhase(w) => {
                let e = (s - 1.0).max(0.0);
                if w[k] == 0.0 {
                    if e > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    e * e / (2.0 * w[k])
                }
            }
        }
    }

    /// `argmin_p (p - q)^2 / (2 t) + phi*(p)` for scalar `p`.
    fn prox_star(&self, k: usize, q: f64, t: f64) -> f64 {
        match self {
            OracleModel::Tv => q.clamp(-1.0, 1.0),
            OracleModel::Huber(a) => (q / (1.0 + t * a)).clamp(-1.0, 1.0),
            OracleModel::DoublePhase(w) => {
                let wk = w[k];
                if q.abs() <= 1.0 {
                    q
                } else if wk == 0.0 {
                    q.signum()
                } else {
                    q.signum() * (wk * q.abs() + t) / (wk + t)
                }
            }
        }
    }
}

fn diff(u: &[f64]) -> Vec<f64> {
    u.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `D^T p` for the forward difference `D`.
fn diff_t(p: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for (k, &pk) in p.iter().enumerate() {
        out[k] -= pk;
        out[k + 1] += pk;
    }
    out
}

/// Primal energy of a 1D signal with unit spacing.
pub fn primal_energy_1d(u: &[f64], g: &[f64], lambda: f64, model: &OracleModel) -> f64 {
    let d = diff(u);
    let reg: f64 = d.iter().enumerate().map(|(k, &t)| model.phi(k, t)).sum();
    let fid: f64 = u.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * lambda);
    reg + fid
}

pub struct OracleSolution {
    pub u: Vec<f64>,
    pub energy: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// FISTA with adaptive restart on the dual problem
/// `min_p (lambda/2)||D^T p||^2 - <D^T p, g> + sum phi*(p_k)`,
/// with primal recovery `u = g - lambda D^T p`. Stops once the duality gap
/// drops below `gap_tol`.
pub fn dual_projected_gradient_1d(g: &[f64], lambda: f64, model: &OracleModel, gap_tol: f64, max_iters: usize) -> OracleSolution {
    let m = g.len();
    let step = 1.0 / (4.0 * lambda);
    let mut p = vec![0.0; m - 1];
    let mut z = p.clone();
    let mut t_k = 1.0f64;
    let dual = |p: &[f64]| -> f64 {
        let dtp = diff_t(p, m);
        let quad: f64 = dtp.iter().map(|v| v * v).sum::<f64>() * lambda / 2.0;
        let lin: f64 = dtp.iter().zip(g).map(|(a, b)| a * b).sum();
        let conj: f64 = p.iter().enumerate().map(|(k, &s)| model.phi_star(k, s)).sum();
        quad - lin + conj
    };
    let recover = |p: &[f64]| -> Vec<f64> {
        let dtp = diff_t(p, m);
        g.iter().zip(&dtp).map(|(gv, d)| gv - lambda * d).collect()
    };
    let mut iterations = 0;
    let mut prev_obj = dual(&p);
    for it in 0..max_iters {
        iterations = it + 1;
        // gradient of the smooth part at z is -D u(z)
        let uz = recover(&z);
        let du = diff(&uz);
        let p_next: Vec<f64> = (0..m - 1)
            .map(|k| model.prox_star(k, z[k] + step * du[k], step))
            .collect();
        let obj = dual(&p_next);
        if obj > prev_obj && t_k > 1.0 {
            // momentum overshoot: restart from the last iterate
            t_k = 1.0;
            z = p.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt()) / 2.0;
        let beta = (t_k - 1.0) / t_next;
        z = (0..m - 1).map(|k| p_next[k] + beta * (p_next[k] - p[k])).collect();
        p = p_next;
        t_k = t_next;
        prev_obj = obj;
        if it % 50 == 0 && primal_energy_1d(&recover(&p), g, lambda, model) + obj <= gap_tol {
            break;
        }
    }
    let u = recover(&p);
    let energy = primal_energy_1d(&u, g, lambda, model);
    let gap = energy + dual(&p);
    OracleSolution {
        u,
        energy,
        gap,
        iterations,
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Numerically minimizes `|p - q|^2 / (2 sigma) + phi*(|p|)` over the plane
/// by nested golden-section search. `phi_star` may return infinity; the
/// search box is restricted to where it is finite when `bounded` is set.
pub fn numerical_dual_prox(q: (f64, f64), sigma: f64, phi_star: impl Fn(f64) -> f64, bounded: bool) -> (f64, f64) {
    let reach = if bounded { 1.0 } else { q.0.hypot(q.1) + 1.0 };
    let objective = |x: f64, y: f64| {
        let d = (x - q.0).powi(2) + (y - q.1).powi(2);
        d / (2.0 * sigma) + phi_star(x.hypot(y))
    };
    let inner_reach = |x: f64| {
        if bounded {
            (1.0 - x * x).max(0.0).sqrt()
        } else {
            reach
        }
    };
    let best_y = |x: f64| {
        let r = inner_reach(x);
        golden_section(|y| objective(x, y), -r, r, 90)
    };
    let x = golden_section(|x| objective(x, best_y(x)), -reach, reach, 90);
    (x, best_y(x))
}
