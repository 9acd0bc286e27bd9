//! Minimum-error estimator design under an equivocation floor:
//!
//! minimize P(Y != Yhat)  over column-stochastic P,  s.t.  H(X | Yhat) >= H0.
//!
//! The problem is convex (linear objective, concave equivocation), so it is
//! solved through its scalar dual: an outer bisection on the multiplier `mu`
//! of the privacy constraint, and an inner projected gradient descent on the
//! penalized objective `error + mu * I(X; Yhat)` with a backtracking line
//! search. Optimality is certified by the residual of the stationarity /
//! feasibility / complementary-slackness system.

use crate::estimator::{error_probability_of, mutual_information_of, Estimator};
use crate::linalg::Mat;
use crate::prob::Channel;
use crate::{Error, Result};

/// Knobs for [`solve_privacy_aware`].
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Required equivocation H(X | Yhat), in bits.
    pub h0_bits: f64,
    /// Initial gradient step; the line search adapts it from there.
    pub step_init: f64,
    /// Certification threshold on the KKT residual.
    pub tol_kkt: f64,
    /// Feasibility slack on the privacy constraint and column sums.
    pub tol_primal: f64,
    /// Inner-iteration cap per penalized solve.
    pub max_iters: usize,
    /// Initial dual bracket; the upper end grows geometrically until the
    /// achieved equivocation brackets the floor.
    pub mu_bracket: (f64, f64),
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(h0_bits: f64) -> Self {
        Self {
            h0_bits,
            step_init: 1.0,
            tol_kkt: 1e-6,
            tol_primal: 1e-7,
            max_iters: 50_000,
            mu_bracket: (0.0, 1.0),
            seed: 0,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let cap = (n as f64).log2().max(0.0);
        if !(0.0..=cap + 1e-12).contains(&self.h0_bits) {
            return Err(Error::Invalid(format!(
                "h0 = {} bits outside [0, log2 n = {cap}]",
                self.h0_bits
            )));
        }
        if self.step_init <= 0.0 || self.tol_kkt <= 0.0 || self.tol_primal <= 0.0 {
            return Err(Error::Invalid("steps and tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Invalid("max_iters must be positive".into()));
        }
        if self.mu_bracket.0 < 0.0 || self.mu_bracket.1 <= self.mu_bracket.0 {
            return Err(Error::Invalid("mu bracket must satisfy 0 <= lo < hi".into()));
        }
        Ok(())
    }
}

/// One row of the solve trace, recorded after every inner solve.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub stage: usize,
    pub mu: f64,
    pub objective: f64,
    pub cond_entropy_bits: f64,
    /// KKT residual of the iterate at this stage's multiplier.
    pub residual: f64,
    pub inner_iterations: usize,
}

/// Terminal solver state: primal iterate, duals, certificate.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub probs: Mat,
    pub mu: f64,
    pub lambdas: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before the residual met
    /// `tol_kkt`; the iterate returned is still the best one found.
    pub certified: bool,
    pub trace: Vec<TraceRow>,
}

/// Euclidean projection of every column onto the probability simplex
/// (sort-based algorithm). Idempotent.
pub fn project_simplex_columns(p: &Mat) -> Mat {
    let m = p.rows();
    let k = p.cols();
    let mut out = Mat::zeros(m, k);
    let mut col = vec![0.0; m];
    let mut sorted = vec![0.0; m];
    for l in 0..k {
        for i in 0..m {
            col[i] = p.get(i, l);
        }
        sorted.copy_from_slice(&col);
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut acc = 0.0;
        let mut theta = 0.0;
        for (idx, &v) in sorted.iter().enumerate() {
            acc += v;
            let candidate = (acc - 1.0) / (idx + 1) as f64;
            if v - candidate > 0.0 {
                theta = candidate;
            }
        }
        for i in 0..m {
            out.set(i, l, (col[i] - theta).max(0.0));
        }
    }
    out
}

/// Gradient of the penalized objective `error + mu * I(X; Yhat)` (bits) with
/// respect to the randomization matrix:
///
/// ```text
/// G[h][k] = -P(sym=k|Y=y_h) P(Y=y_h)
///           + mu * sum_j P(X=x_j) P(sym=k|X=x_j) log2(q_hj / r_h)
/// ```
///
/// with `q_hj = sum_l P_hl P(sym=l|x_j)` and `r_h = sum_l P_hl P(sym=l)`,
/// both clamped at 1e-12 before the logarithm.
pub fn lagrangian_gradient(probs: &Mat, mu: f64, ch: &Channel) -> Mat {
    let m = probs.rows();
    let k = probs.cols();
    let n = ch.x_count();
    let beta = ch.correct_weights();
    let px = ch.prior().px();
    let mut g = Mat::zeros(m, k);

    // log2(q_hj / r_h) per (h, j).
    let r: Vec<f64> = probs.mul_vec(ch.p_marginal());
    let mut log_ratio = vec![vec![0.0; n]; m];
    for (j, &pxj) in px.iter().enumerate() {
        if pxj <= 0.0 {
            continue;
        }
        let q = probs.mul_vec(ch.p_given_x(j));
        for h in 0..m {
            log_ratio[h][j] = (q[h].max(1e-12) / r[h].max(1e-12)).log2();
        }
    }

    for h in 0..m {
        for l in 0..k {
            let mut entropy_term = 0.0;
            if mu != 0.0 {
                for (j, &pxj) in px.iter().enumerate() {
                    if pxj > 0.0 {
                        entropy_term += pxj * ch.p_given_x(j)[l] * log_ratio[h][j];
                    }
                }
            }
            g.set(h, l, -beta.get(h, l) + mu * entropy_term);
        }
    }
    g
}

/// Penalized objective the gradient above differentiates.
pub fn penalized_objective(probs: &Mat, mu: f64, ch: &Channel) -> f64 {
    error_probability_of(probs, ch) + mu * mutual_information_of(probs, ch)
}

/// Per-column multipliers for the sum constraints, estimated from the
/// gradient: minus the mean gradient over interior entries, or minus the
/// column minimum when the column sits on a vertex.
pub fn estimate_lambdas(probs: &Mat, gradient: &Mat) -> Vec<f64> {
    let m = probs.rows();
    let k = probs.cols();
    (0..k)
        .map(|l| {
            let mut acc = 0.0;
            let mut count = 0usize;
            for h in 0..m {
                let v = probs.get(h, l);
                if v > BOUNDARY_TOL && v < 1.0 - BOUNDARY_TOL {
                    acc += gradient.get(h, l);
                    count += 1;
                }
            }
            if count > 0 {
                -acc / count as f64
            } else {
                -(0..m)
                    .map(|h| gradient.get(h, l))
                    .fold(f64::INFINITY, f64::min)
            }
        })
        .collect()
}

const BOUNDARY_TOL: f64 = 1e-9;

/// Residual of the optimality system at (P, mu, lambda): the largest of
///  (i) per-entry stationarity violations,
///  (ii) column-stochasticity violations,
///  (iii) privacy-floor violation max(0, H0 - H),
///  (iv) complementary slackness |mu (H0 - H)|.
/// Zero at an exact optimum.
pub fn kkt_residual(
    probs: &Mat,
    mu: f64,
    lambdas: &[f64],
    ch: &Channel,
    cfg: &SolverConfig,
) -> f64 {
    let g = lagrangian_gradient(probs, mu, ch);
    let mut worst = stationarity_residual(probs, &g, lambdas);

    for l in 0..probs.cols() {
        let mut sum = 0.0;
        for h in 0..probs.rows() {
            let v = probs.get(h, l);
            sum += v;
            worst = worst.max(-v).max(v - 1.0);
        }
        worst = worst.max((sum - 1.0).abs());
    }

    let h = crate::estimator::conditional_entropy_of(probs, ch);
    worst = worst.max(cfg.h0_bits - h).max((mu * (cfg.h0_bits - h)).abs());
    worst.max(0.0)
}

/// Stationarity part of the KKT system: interior entries need G + lambda = 0;
/// entries at the lower bound need G + lambda >= 0; entries at the upper
/// bound need G + lambda <= 0.
fn stationarity_residual(probs: &Mat, gradient: &Mat, lambdas: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for l in 0..probs.cols() {
        for h in 0..probs.rows() {
            let s = gradient.get(h, l) + lambdas[l];
            let v = probs.get(h, l);
            let violation = if v <= BOUNDARY_TOL {
                (-s).max(0.0)
            } else if v >= 1.0 - BOUNDARY_TOL {
                s.max(0.0)
            } else {
                s.abs()
            };
            worst = worst.max(violation);
        }
    }
    worst
}

/// Projected gradient descent on the penalized objective at fixed `mu`.
/// Returns the iterate and the iterations spent.
fn minimize_penalized(
    ch: &Channel,
    mu: f64,
    start: &Mat,
    cfg: &SolverConfig,
    stat_tol: f64,
) -> (Mat, usize, bool) {
    let mut p = project_simplex_columns(start);
    let mut value = penalized_objective(&p, mu, ch);
    let mut step = cfg.step_init;
    let mut converged = false;
    let mut iters = 0usize;

    while iters < cfg.max_iters {
        iters += 1;
        let g = lagrangian_gradient(&p, mu, ch);

        let lambdas = estimate_lambdas(&p, &g);
        if stationarity_residual(&p, &g, &lambdas) <= stat_tol {
            converged = true;
            break;
        }

        // Backtracking line search on the penalized value along the
        // projected-gradient arc.
        let mut accepted = false;
        while step >= 1e-18 {
            let mut trial = p.clone();
            for h in 0..p.rows() {
                for l in 0..p.cols() {
                    trial.set(h, l, p.get(h, l) - step * g.get(h, l));
                }
            }
            let candidate = project_simplex_columns(&trial);
            // Armijo decrease against the actual displacement.
            let mut dot = 0.0;
            let mut moved = 0.0f64;
            for h in 0..p.rows() {
                for l in 0..p.cols() {
                    let d = candidate.get(h, l) - p.get(h, l);
                    dot += g.get(h, l) * d;
                    moved = moved.max(d.abs());
                }
            }
            if moved < 1e-15 {
                break; // projected fixed point at this step size
            }
            let trial_value = penalized_objective(&candidate, mu, ch);
            if trial_value <= value + 1e-4 * dot {
                p = candidate;
                value = trial_value;
                step = (step * 1.5).min(1e8);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No acceptable move: either a fixed point or the floor on the
            // step; treat the current iterate as converged and let the KKT
            // residual judge it.
            converged = true;
            break;
        }
    }
    (p, iters, converged)
}

/// Mix of the column-wise MAP vertex with 1% uniform: starts at the
/// unconstrained optimum while keeping every logarithm finite.
fn smoothed_map_start(ch: &Channel) -> Mat {
    let map = Estimator::map_for(ch);
    let m = ch.y_count();
    let k = ch.symbol_count();
    let mut p = Mat::zeros(m, k);
    for h in 0..m {
        for l in 0..k {
            p.set(h, l, 0.99 * map.probs().get(h, l) + 0.01 / m as f64);
        }
    }
    p
}

/// Solve the equivocation-constrained design problem. Returns the estimator,
/// the terminal solver state (with certificate), and its analytic report.
///
/// An `h0_bits` above H(X) is rejected as infeasible; `h0_bits == H(X)` up to
/// 1e-9 belongs to the perfect-privacy path.
pub fn solve_privacy_aware(
    ch: &Channel,
    cfg: &SolverConfig,
) -> Result<(Estimator, SolverState, crate::PrivacyReport)> {
    cfg.validate(ch.x_count())?;
    let hx = ch.prior().entropy_x_bits();
    if cfg.h0_bits > hx - 1e-9 {
        return Err(Error::InfeasiblePrivacyFloor { h0: cfg.h0_bits, hx });
    }

    let stat_tol = (cfg.tol_kkt * 0.5).min(1e-7);
    let mut trace = Vec::new();
    let mut total_iters = 0usize;
    let mut budget_exhausted = false;

    let mut solve_at = |mu: f64, warm: &Mat, stage: usize| -> (Mat, f64) {
        let (p, iters, converged) = minimize_penalized(ch, mu, warm, cfg, stat_tol);
        total_iters += iters;
        if !converged {
            budget_exhausted = true;
        }
        let h = crate::estimator::conditional_entropy_of(&p, ch);
        let g = lagrangian_gradient(&p, mu, ch);
        let lambdas = estimate_lambdas(&p, &g);
        trace.push(TraceRow {
            stage,
            mu,
            objective: error_probability_of(&p, ch),
            cond_entropy_bits: h,
            residual: kkt_residual(&p, mu, &lambdas, ch, cfg),
            inner_iterations: iters,
        });
        (p, h)
    };

    let start = smoothed_map_start(ch);
    let mut stage = 0usize;

    // Unconstrained pass: if the floor is already met, the dual is zero.
    let (p0, h0_achieved) = solve_at(0.0, &start, stage);
    let (p_final, mu_final) = if h0_achieved >= cfg.h0_bits - cfg.tol_primal {
        (p0, 0.0)
    } else {
        // Grow the upper end of the dual bracket until it overshoots the
        // privacy floor.
        let mut lo = cfg.mu_bracket.0;
        let mut lo_p = p0.clone();
        let mut hi = cfg.mu_bracket.1.max(1e-6);
        let mut hi_state: Option<(Mat, f64)> = None;
        for _ in 0..200 {
            stage += 1;
            let (p, h) = solve_at(hi, &lo_p, stage);
            if h >= cfg.h0_bits {
                hi_state = Some((p, h));
                break;
            }
            lo = hi;
            lo_p = p;
            hi *= 2.0;
        }
        let Some((mut hi_p, _)) = hi_state else {
            return Err(Error::IterationLimit(
                "dual bracket expansion failed to reach the privacy floor".into(),
            ));
        };

        // Bisect the dual until complementary slackness is inside the
        // certification tolerance.
        let mut best = (hi, hi_p.clone());
        for _ in 0..200 {
            stage += 1;
            let mid = 0.5 * (lo + hi);
            let (p, h) = solve_at(mid, &best.1, stage);
            if h >= cfg.h0_bits {
                hi = mid;
                hi_p = p.clone();
                best = (mid, p);
            } else {
                lo = mid;
                lo_p = p;
            }
            let slack = (best.0 * (cfg.h0_bits - crate::estimator::conditional_entropy_of(&best.1, ch))).abs();
            if slack <= cfg.tol_kkt * 0.5 || (hi - lo) <= 1e-14 * (1.0 + hi) {
                break;
            }
        }

        // If the dual gap pinched without meeting slackness (the penalized
        // optimum jumped across the floor), blend the two endpoint iterates:
        // both minimize the same limiting Lagrangian, and equivocation is
        // continuous along the segment.
        let h_hi = crate::estimator::conditional_entropy_of(&best.1, ch);
        if (best.0 * (cfg.h0_bits - h_hi)).abs() > cfg.tol_kkt * 0.5 {
            let mut t_lo = 0.0f64;
            let mut t_hi = 1.0f64;
            for _ in 0..100 {
                let t = 0.5 * (t_lo + t_hi);
                let mut blend = Mat::zeros(hi_p.rows(), hi_p.cols());
                for h in 0..hi_p.rows() {
                    for l in 0..hi_p.cols() {
                        blend.set(h, l, (1.0 - t) * lo_p.get(h, l) + t * hi_p.get(h, l));
                    }
                }
                let hb = crate::estimator::conditional_entropy_of(&blend, ch);
                if hb >= cfg.h0_bits {
                    t_hi = t;
                    best = (best.0, blend);
                } else {
                    t_lo = t;
                }
                if (hb - cfg.h0_bits).abs() <= cfg.tol_primal * 0.1 && hb >= cfg.h0_bits {
                    break;
                }
            }
        }
        (best.1, best.0)
    };

    let gradient = lagrangian_gradient(&p_final, mu_final, ch);
    let lambdas = estimate_lambdas(&p_final, &gradient);
    let residual = kkt_residual(&p_final, mu_final, &lambdas, ch, cfg);
    let certified = !budget_exhausted && residual <= cfg.tol_kkt;

    let est = Estimator::new(p_final.clone(), ch.prior().y_support().to_vec())?;
    let report = est.report(ch)?;
    let state = SolverState {
        probs: p_final,
        mu: mu_final,
        lambdas,
        kkt_residual: residual,
        iterations: total_iters,
        certified,
        trace,
    };
    Ok((est, state, report))
}
