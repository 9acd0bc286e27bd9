//! The multi-sensor study: privacy-oblivious baseline, perfect-privacy
//! independence check, error comparison across sensor counts, and the
//! equivocation-floor sweep.
//!
//! Everything here is deterministic given the seed. Monte-Carlo trials run in
//! fixed-size shards with per-shard substreams, merged in shard order, so the
//! totals do not depend on how the shards are scheduled.

use crate::config::ExperimentSettings;
use crate::estimator::Estimator;
use crate::multisensor::{count_channel, enumerate_counts, CountAlphabet};
use crate::perfect::solve_perfect_privacy;
use crate::prob::Channel;
use crate::rng::SplitMix64;
use crate::solver::{solve_privacy_aware, SolverConfig};
use crate::{Error, Result};

const SHARD_SIZE: usize = 10_000;

/// One simulated trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub x_idx: usize,
    pub y_idx: usize,
    /// Per-sensor bin indices (0-based).
    pub bins: Vec<u16>,
    /// Count vector over bins.
    pub counts: Vec<u32>,
    /// Declared output index.
    pub output_idx: usize,
    pub correct: bool,
}

/// Empirical counterpart of the analytic report, from seeded simulation.
#[derive(Debug, Clone)]
pub struct EmpiricalReport {
    pub trials: usize,
    pub seed: u64,
    pub error_prob: f64,
    /// Samples per output symbol.
    pub output_counts: Vec<usize>,
    /// Empirical P(X = x_j | Yhat = y_i), row j, column i; NaN where the
    /// output never occurred.
    pub x_given_output: Vec<Vec<f64>>,
}

/// Draw (x, y), per-sensor bins, and the count vector for one trial.
fn draw_trial(
    base: &Channel,
    sensors: usize,
    rng: &mut SplitMix64,
) -> (usize, usize, Vec<u16>, Vec<u32>) {
    let n = base.x_count();
    let m = base.y_count();
    // Joint draw over the n*m table.
    let mut u = rng.next_f64();
    let mut x_idx = n - 1;
    let mut y_idx = m - 1;
    'outer: for j in 0..n {
        for i in 0..m {
            u -= base.prior().joint(j, i);
            if u < 0.0 {
                x_idx = j;
                y_idx = i;
                break 'outer;
            }
        }
    }
    let pmf = base.p_given_xy(x_idx, y_idx);
    let mut bins = Vec::with_capacity(sensors);
    let mut counts = vec![0u32; base.symbol_count()];
    for _ in 0..sensors {
        let b = rng.sample_pmf(pmf);
        bins.push(b as u16);
        counts[b] += 1;
    }
    (x_idx, y_idx, bins, counts)
}

/// Monte-Carlo evaluation of one estimator. With an alphabet the estimator
/// reads the count vector of `alphabet.sensor_count()` sensors; without one
/// it reads the single sensor's bin index directly.
pub fn monte_carlo_eval(
    est: &Estimator,
    base: &Channel,
    alphabet: Option<&CountAlphabet>,
    trials: usize,
    seed: u64,
) -> Result<(EmpiricalReport, Vec<TrialRecord>)> {
    if trials < 1 {
        return Err(Error::Invalid("at least one trial required".into()));
    }
    let sensors = alphabet.map_or(1, CountAlphabet::sensor_count);
    let expected_symbols = alphabet.map_or(base.symbol_count(), CountAlphabet::len);
    if est.symbol_count() != expected_symbols {
        return Err(Error::DimensionMismatch(format!(
            "estimator over {} symbols, observation alphabet has {expected_symbols}",
            est.symbol_count()
        )));
    }

    let n = base.x_count();
    let m = est.output_count();
    let mut records = Vec::with_capacity(trials);
    let mut errors = 0usize;
    let mut output_counts = vec![0usize; m];
    let mut joint_xy_hat = vec![vec![0usize; m]; n];

    let shards = trials.div_ceil(SHARD_SIZE);
    let mut column = vec![0.0; m];
    for shard in 0..shards {
        let mut rng = SplitMix64::substream(seed, shard as u64);
        let in_shard = SHARD_SIZE.min(trials - shard * SHARD_SIZE);
        for _ in 0..in_shard {
            let (x_idx, y_idx, bins, counts) = draw_trial(base, sensors, &mut rng);
            let symbol = match alphabet {
                Some(a) => a
                    .index_of(&counts)
                    .expect("drawn count vector is in the alphabet"),
                None => bins[0] as usize,
            };
            for i in 0..m {
                column[i] = est.probs().get(i, symbol);
            }
            let output_idx = rng.sample_pmf(&column);
            let correct = output_idx == y_idx;
            if !correct {
                errors += 1;
            }
            output_counts[output_idx] += 1;
            joint_xy_hat[x_idx][output_idx] += 1;
            records.push(TrialRecord { x_idx, y_idx, bins, counts, output_idx, correct });
        }
    }

    let x_given_output = (0..n)
        .map(|j| {
            (0..m)
                .map(|i| {
                    if output_counts[i] > 0 {
                        joint_xy_hat[j][i] as f64 / output_counts[i] as f64
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect();

    Ok((
        EmpiricalReport {
            trials,
            seed,
            error_prob: errors as f64 / trials as f64,
            output_counts,
            x_given_output,
        },
        records,
    ))
}

/// The per-sensor unconstrained MAP rule: bin index -> declared output index.
pub fn per_sensor_map_rule(base: &Channel) -> Vec<usize> {
    let beta = base.correct_weights();
    (0..base.symbol_count())
        .map(|l| {
            let mut best = 0;
            for i in 1..base.y_count() {
                if beta.get(i, l) > beta.get(best, l) {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Per-value transition table T[j][i][w] = P(per-sensor declared output = w |
/// x_j, y_i) induced by the per-sensor MAP rule.
fn rule_transition(base: &Channel, rule: &[usize]) -> Vec<Vec<Vec<f64>>> {
    let n = base.x_count();
    let m = base.y_count();
    (0..n)
        .map(|j| {
            (0..m)
                .map(|i| {
                    let mut t = vec![0.0; m];
                    for (l, &w) in rule.iter().enumerate() {
                        t[w] += base.p_given_xy(j, i)[l];
                    }
                    t
                })
                .collect()
        })
        .collect()
}

/// How a baseline error value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalMode::Exact => write!(f, "exact"),
            EvalMode::MonteCarlo => write!(f, "monte-carlo"),
        }
    }
}

/// Exact errors of the user's MAP estimates of X and Y from the vector of
/// per-sensor declared outputs, by summation over the whole product alphabet.
fn oblivious_exact(base: &Channel, rule: &[usize], sensors: usize) -> (f64, f64) {
    let n = base.x_count();
    let m = base.y_count();
    let t = rule_transition(base, rule);
    let px = base.prior().px();
    let py = base.prior().py();
    // P(y_i | x_j) and P(x_j | y_i).
    let y_given_x: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| if px[j] > 0.0 { base.prior().joint(j, i) / px[j] } else { 0.0 }).collect())
        .collect();
    let x_given_y: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..n).map(|j| if py[i] > 0.0 { base.prior().joint(j, i) / py[i] } else { 0.0 }).collect())
        .collect();

    let mut correct_x = 0.0;
    let mut correct_y = 0.0;
    let mut v = vec![0usize; sensors];
    loop {
        // prod[j][i] = P(v | x_j, y_i)
        let mut best_x = 0.0f64;
        let mut best_y = 0.0f64;
        let mut prod = vec![vec![1.0; m]; n];
        for &vs in &v {
            for (j, row) in prod.iter_mut().enumerate() {
                for (i, p) in row.iter_mut().enumerate() {
                    *p *= t[j][i][vs];
                }
            }
        }
        for j in 0..n {
            let p_v_x: f64 = (0..m).map(|i| y_given_x[j][i] * prod[j][i]).sum();
            best_x = best_x.max(px[j] * p_v_x);
        }
        for i in 0..m {
            let p_v_y: f64 = (0..n).map(|j| x_given_y[i][j] * prod[j][i]).sum();
            best_y = best_y.max(py[i] * p_v_y);
        }
        correct_x += best_x;
        correct_y += best_y;

        // Odometer over {0..m-1}^sensors.
        let mut pos = 0;
        loop {
            if pos == sensors {
                return (1.0 - correct_x, 1.0 - correct_y);
            }
            v[pos] += 1;
            if v[pos] < m {
                break;
            }
            v[pos] = 0;
            pos += 1;
        }
    }
}

/// Monte-Carlo errors of the same user decisions.
fn oblivious_mc(
    base: &Channel,
    rule: &[usize],
    sensors: usize,
    trials: usize,
    seed: u64,
) -> (f64, f64) {
    let n = base.x_count();
    let m = base.y_count();
    let t = rule_transition(base, rule);
    let px = base.prior().px();
    let py = base.prior().py();
    let ln_t: Vec<Vec<Vec<f64>>> = t
        .iter()
        .map(|per_x| per_x.iter().map(|row| row.iter().map(|&p| p.max(1e-300).ln()).collect()).collect())
        .collect();

    let mut err_x = 0usize;
    let mut err_y = 0usize;
    let shards = trials.div_ceil(SHARD_SIZE);
    for shard in 0..shards {
        let mut rng = SplitMix64::substream(seed, shard as u64);
        let in_shard = SHARD_SIZE.min(trials - shard * SHARD_SIZE);
        for _ in 0..in_shard {
            let (x_idx, y_idx, bins, _) = draw_trial(base, sensors, &mut rng);
            // Log-likelihood of the declared-output vector per (j, i).
            let mut ll = vec![vec![0.0; m]; n];
            for &b in &bins {
                let w = rule[b as usize];
                for (j, row) in ll.iter_mut().enumerate() {
                    for (i, v) in row.iter_mut().enumerate() {
                        *v += ln_t[j][i][w];
                    }
                }
            }
            // MAP of X: argmax_j px_j sum_i P(y_i|x_j) exp(ll).
            let mut best_x = (0usize, f64::NEG_INFINITY);
            for j in 0..n {
                if px[j] <= 0.0 {
                    continue;
                }
                let mut p = 0.0;
                for i in 0..m {
                    p += base.prior().joint(j, i) / px[j] * stable_exp(ll[j][i], &ll);
                }
                let score = px[j] * p;
                if score > best_x.1 {
                    best_x = (j, score);
                }
            }
            let mut best_y = (0usize, f64::NEG_INFINITY);
            for i in 0..m {
                if py[i] <= 0.0 {
                    continue;
                }
                let mut p = 0.0;
                for j in 0..n {
                    p += base.prior().joint(j, i) / py[i] * stable_exp(ll[j][i], &ll);
                }
                let score = py[i] * p;
                if score > best_y.1 {
                    best_y = (i, score);
                }
            }
            if best_x.0 != x_idx {
                err_x += 1;
            }
            if best_y.0 != y_idx {
                err_y += 1;
            }
        }
    }
    (err_x as f64 / trials as f64, err_y as f64 / trials as f64)
}

/// exp shifted by the largest log-likelihood in the trial, so the argmax
/// comparison survives extreme sensor counts.
fn stable_exp(ll: f64, all: &[Vec<f64>]) -> f64 {
    let max = all
        .iter()
        .flat_map(|row| row.iter())
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    (ll - max).exp()
}

/// One sensor count of the privacy-oblivious baseline.
#[derive(Debug, Clone)]
pub struct ObliviousRow {
    pub sensors: usize,
    pub mode: EvalMode,
    /// Error of the user's MAP estimate of the private variable; the leakage
    /// figure of merit.
    pub err_x: f64,
    pub err_x_mc: f64,
    /// Error of the user's MAP estimate of the public variable.
    pub err_y: f64,
    pub err_y_mc: f64,
}

/// The privacy-oblivious baseline: each sensor reveals its unconstrained MAP
/// estimate of Y; the user then MAP-estimates X (and Y) from the vector of
/// revealed estimates. Exact summation when the product alphabet is within
/// `exact_limit`, Monte Carlo otherwise; the Monte-Carlo column is always
/// filled for cross-checking.
pub fn run_oblivious_baseline(
    base: &Channel,
    settings: &ExperimentSettings,
) -> Result<Vec<ObliviousRow>> {
    let rule = per_sensor_map_rule(base);
    let m = base.y_count();
    let mut rows = Vec::new();
    for &sensors in &settings.sensor_counts {
        let alphabet_size = (m as f64).powi(sensors as i32);
        let exact = alphabet_size <= settings.exact_limit as f64;
        let (err_x_mc, err_y_mc) = oblivious_mc(
            base,
            &rule,
            sensors,
            settings.trials,
            settings.seed ^ (sensors as u64).wrapping_mul(0x9E37),
        );
        let (err_x, err_y, mode) = if exact {
            let (ex, ey) = oblivious_exact(base, &rule, sensors);
            (ex, ey, EvalMode::Exact)
        } else {
            (err_x_mc, err_y_mc, EvalMode::MonteCarlo)
        };
        rows.push(ObliviousRow { sensors, mode, err_x, err_x_mc, err_y, err_y_mc });
    }
    Ok(rows)
}

/// One sensor count of the perfect-privacy comparison.
#[derive(Debug, Clone)]
pub struct PerfectRow {
    pub sensors: usize,
    pub alphabet_size: usize,
    /// Analytic error of the optimal independence-constrained estimator.
    pub err_pp: f64,
    pub err_pp_mc: f64,
    /// Error of the privacy-oblivious user estimating Y.
    pub err_oblivious_y: f64,
    pub err_oblivious_y_mc: f64,
    /// err_pp - err_oblivious_y; the price of independence.
    pub gap: f64,
    pub pp_residual: f64,
}

/// Empirical conditional of the private variable given one output symbol.
#[derive(Debug, Clone)]
pub struct IndependenceRow {
    pub y_label: f64,
    pub samples: usize,
    /// Empirical P(X = x_j | Yhat = this output).
    pub p_x_given_output: Vec<f64>,
}

/// Everything the perfect-privacy experiment produces.
#[derive(Debug, Clone)]
pub struct PerfectExperiment {
    pub rows: Vec<PerfectRow>,
    /// Empirical independence table for the largest sensor count.
    pub independence: Vec<IndependenceRow>,
    /// The optimal estimator at the largest sensor count.
    pub estimator: Estimator,
    pub sensors_for_independence: usize,
}

/// Design the optimal perfect-privacy estimator per sensor count, compare it
/// with the privacy-oblivious user, and verify independence empirically.
pub fn run_perfect_privacy_experiment(
    base: &Channel,
    settings: &ExperimentSettings,
) -> Result<PerfectExperiment> {
    let rule = per_sensor_map_rule(base);
    let m = base.y_count();
    let mut rows = Vec::new();
    let mut last: Option<(Estimator, Vec<IndependenceRow>, usize)> = None;

    for &sensors in &settings.sensor_counts {
        let alphabet = enumerate_counts(sensors, base.symbol_count(), settings.alphabet_cap)?;
        let cc = count_channel(base, &alphabet)?;
        let solution = solve_perfect_privacy(&cc)?;

        let (mc, _) = monte_carlo_eval(
            &solution.estimator,
            base,
            Some(&alphabet),
            settings.trials,
            settings.seed ^ (sensors as u64).wrapping_mul(0xC2B2),
        )?;

        let exact = (m as f64).powi(sensors as i32) <= settings.exact_limit as f64;
        let (_, err_obl_y_mc) = oblivious_mc(
            base,
            &rule,
            sensors,
            settings.trials,
            settings.seed ^ (sensors as u64).wrapping_mul(0x9E37),
        );
        let err_obl_y = if exact {
            oblivious_exact(base, &rule, sensors).1
        } else {
            err_obl_y_mc
        };

        rows.push(PerfectRow {
            sensors,
            alphabet_size: alphabet.len(),
            err_pp: solution.report.error_prob,
            err_pp_mc: mc.error_prob,
            err_oblivious_y: err_obl_y,
            err_oblivious_y_mc: err_obl_y_mc,
            gap: solution.report.error_prob - err_obl_y,
            pp_residual: solution.residual,
        });

        let independence = (0..m)
            .map(|i| IndependenceRow {
                y_label: base.prior().y_support()[i],
                samples: mc.output_counts[i],
                p_x_given_output: (0..base.x_count())
                    .map(|j| mc.x_given_output[j][i])
                    .collect(),
            })
            .collect();
        last = Some((solution.estimator, independence, sensors));
    }

    let (estimator, independence, sensors_for_independence) =
        last.ok_or_else(|| Error::Invalid("no sensor counts configured".into()))?;
    Ok(PerfectExperiment { rows, independence, estimator, sensors_for_independence })
}

/// One point of the equivocation-floor sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub h0_bits: f64,
    pub error_prob: f64,
    pub cond_entropy_bits: f64,
    pub mu: f64,
    pub kkt_residual: f64,
    pub certified: bool,
}

/// Sweep the privacy floor over an even grid of `points` values in
/// [0, H(X)) and solve the design problem at each; the (equivocation, error)
/// pairs trace the privacy-loss frontier.
pub fn run_sweep(ch: &Channel, points: usize, template: &SolverConfig) -> Result<Vec<SweepRow>> {
    if points < 2 {
        return Err(Error::Invalid("sweep needs at least two points".into()));
    }
    let hx = ch.prior().entropy_x_bits();
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let h0 = hx * k as f64 / points as f64;
        let cfg = SolverConfig { h0_bits: h0, ..template.clone() };
        let (_, state, report) = solve_privacy_aware(ch, &cfg)?;
        rows.push(SweepRow {
            h0_bits: h0,
            error_prob: report.error_prob,
            cond_entropy_bits: report.cond_entropy_bits,
            mu: state.mu,
            kkt_residual: state.kkt_residual,
            certified: state.certified,
        });
    }
    Ok(rows)
}
