//! Perfect privacy: estimates independent of the private variable.
//!
//! Independence holds exactly when every output's randomization vector lies
//! in the null space of the deviation matrix `phi[j][l] = P(sym=l | X=x_j) -
//! P(sym=l)`. The minimum-error estimator under that condition is a linear
//! program, solved here with the two-phase simplex.

use crate::estimator::Estimator;
use crate::linalg::{self, Mat};
use crate::prob::{build_channel, Channel, Partition, SensorModel};
use crate::simplex::{solve_equality_form, LpSolution};
use crate::{Error, Result};

/// Default tolerance on the independence residual `max_i ||Phi P_i||_inf`.
pub const PP_RESIDUAL_TOL: f64 = 1e-9;

/// Rank tolerance for the null-space computation; channel entries carry
/// roughly 1e-12 of CDF accuracy, so anything below this is noise.
pub const RANK_TOL: f64 = 1e-10;

/// Deviation of the private-conditional symbol distribution from the
/// marginal. Rows sum to zero by construction.
#[derive(Debug, Clone)]
pub struct PhiMatrix {
    data: Mat,
    pub tol_rank: f64,
}

impl PhiMatrix {
    pub fn matrix(&self) -> &Mat {
        &self.data
    }

    pub fn private_count(&self) -> usize {
        self.data.rows()
    }

    pub fn symbol_count(&self) -> usize {
        self.data.cols()
    }

    /// `||Phi v||_inf` for one randomization row.
    pub fn residual_of(&self, row: &[f64]) -> f64 {
        self.data
            .mul_vec(row)
            .into_iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Build the deviation matrix from a channel.
pub fn build_phi(ch: &Channel) -> PhiMatrix {
    let n = ch.x_count();
    let k = ch.symbol_count();
    let marginal = ch.p_marginal();
    let mut data = Mat::zeros(n, k);
    for j in 0..n {
        let cond = ch.p_given_x(j);
        for l in 0..k {
            data.set(j, l, cond[l] - marginal[l]);
        }
    }
    PhiMatrix { data, tol_rank: RANK_TOL }
}

/// Orthonormal basis of the null space of the deviation matrix. The all-ones
/// direction is always in the span because rows sum to zero.
pub fn null_space_basis(phi: &PhiMatrix) -> Vec<Vec<f64>> {
    linalg::null_space_basis(&phi.data, phi.tol_rank)
}

/// Check `max_i ||Phi P_i||_inf <= tol`; the residual comes back either way.
pub fn is_perfectly_private(est: &Estimator, phi: &PhiMatrix, tol: f64) -> Result<(bool, f64)> {
    if est.symbol_count() != phi.symbol_count() {
        return Err(Error::DimensionMismatch(format!(
            "estimator has {} symbols, phi has {}",
            est.symbol_count(),
            phi.symbol_count()
        )));
    }
    let mut residual = 0.0f64;
    for i in 0..est.output_count() {
        residual = residual.max(phi.residual_of(est.probs().row(i)));
    }
    Ok((residual <= tol, residual))
}

/// The assembled equality-form LP for the perfect-privacy design problem.
#[derive(Debug, Clone)]
pub struct LpProblem {
    /// Maximize `objective . x` where x flattens the estimator row-major.
    pub objective: Vec<f64>,
    pub constraints: Mat,
    pub rhs: Vec<f64>,
}

/// Flattened index of estimator entry (i, l) with k symbols per row.
#[inline]
fn flat(i: usize, l: usize, k: usize) -> usize {
    i * k + l
}

/// Assemble the LP: maximize the probability of a correct estimate subject to
/// column sums of one and independence constraints `Phi P_i = 0` per output.
pub fn build_lp(ch: &Channel, phi: &PhiMatrix) -> LpProblem {
    let m = ch.y_count();
    let k = ch.symbol_count();
    let n = phi.private_count();
    let beta = ch.correct_weights();

    let mut objective = vec![0.0; m * k];
    for i in 0..m {
        for l in 0..k {
            objective[flat(i, l, k)] = beta.get(i, l);
        }
    }

    let rows = k + m * n;
    let mut constraints = Mat::zeros(rows, m * k);
    let mut rhs = vec![0.0; rows];
    for l in 0..k {
        for i in 0..m {
            constraints.set(l, flat(i, l, k), 1.0);
        }
        rhs[l] = 1.0;
    }
    for i in 0..m {
        for j in 0..n {
            let r = k + i * n + j;
            for l in 0..k {
                constraints.set(r, flat(i, l, k), phi.matrix().get(j, l));
            }
        }
    }
    LpProblem { objective, constraints, rhs }
}

/// Solution artifacts of the perfect-privacy program.
#[derive(Debug, Clone)]
pub struct PerfectPrivacySolution {
    pub estimator: Estimator,
    pub report: crate::PrivacyReport,
    pub lp: LpSolution,
    /// Residual `max_i ||Phi P_i||_inf` of the returned estimator.
    pub residual: f64,
}

/// Solve the perfect-privacy design problem on a channel.
///
/// Infeasibility can only occur when the symbol count does not exceed the
/// private support size; the error text carries that reminder, since refining
/// the partition restores feasibility.
pub fn solve_perfect_privacy(ch: &Channel) -> Result<PerfectPrivacySolution> {
    let phi = build_phi(ch);
    let problem = build_lp(ch, &phi);
    let lp = solve_equality_form(&problem.objective, &problem.constraints, &problem.rhs)
        .map_err(|e| match e {
            Error::LpInfeasible(msg) => Error::LpInfeasible(format!(
                "{msg}; perfect privacy is guaranteed feasible when the symbol count \
                 exceeds the private support size - refine the partition"
            )),
            other => other,
        })?;

    let m = ch.y_count();
    let k = ch.symbol_count();
    let mut probs = Mat::zeros(m, k);
    for i in 0..m {
        for l in 0..k {
            probs.set(i, l, lp.x[flat(i, l, k)].clamp(0.0, 1.0));
        }
    }
    let estimator = Estimator::new(probs, ch.prior().y_support().to_vec())?;
    let (_, residual) = is_perfectly_private(&estimator, &phi, PP_RESIDUAL_TOL)?;
    let report = estimator.report(ch)?;
    Ok(PerfectPrivacySolution { estimator, report, lp, residual })
}

/// Outcome of interpreting a discrete design as a piecewise-constant
/// randomization over the continuous measurement.
#[derive(Debug, Clone)]
pub struct PiecewiseReduction {
    pub channel: Channel,
    /// True when the bin count exceeds the private support size, which
    /// guarantees the discrete feasible set is non-empty.
    pub feasibility_guaranteed: bool,
    pub note: String,
}

/// Reduce the continuous perfect-privacy problem onto a partition: build the
/// discrete channel and document why a feasible discrete design, held
/// constant on each bin, satisfies the continuous independence integrals.
///
/// For piecewise-constant P_i the integral of `P_i(z) (p_Z - p_{Z|X=x_j})`
/// collapses to `sum_l P_il (P(sym=l) - P(sym=l | x_j))`, which is minus the
/// j-th component of `Phi P_i`, so the continuous residual equals the
/// discrete one up to channel-construction accuracy.
pub fn reduce_continuous_to_discrete(
    model: &SensorModel,
    partition: &Partition,
) -> Result<PiecewiseReduction> {
    let channel = build_channel(model, partition)?;
    let n = model.prior().x_count();
    let bins = partition.bin_count();
    let feasibility_guaranteed = bins > n;
    let note = if feasibility_guaranteed {
        format!(
            "bins = {bins} > private values = {n}: the constant randomization is feasible, \
             and any discrete design extends to a piecewise-constant continuous design with \
             identical independence residuals"
        )
    } else {
        format!(
            "warning: bins = {bins} <= private values = {n}; feasibility of the discrete \
             program is not guaranteed - refine the partition"
        )
    };
    Ok(PiecewiseReduction { channel, feasibility_guaranteed, note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::JointPrior;

    fn study_prior() -> JointPrior {
        JointPrior::independent(vec![0.0, 1.0], &[0.7, 0.3], vec![0.0, 1.0], &[0.5, 0.5])
            .unwrap()
    }

    fn study_channel() -> Channel {
        let model = SensorModel::new(0.6, 0.4, 0.0, 0.1, study_prior()).unwrap();
        build_channel(&model, &Partition::new(vec![0.2, 0.5, 0.8]).unwrap()).unwrap()
    }

    fn independent_channel() -> Channel {
        // x_coeff = 0: X has no effect on the measurement.
        let model = SensorModel::new(0.6, 0.0, 0.0, 0.1, study_prior()).unwrap();
        build_channel(&model, &Partition::new(vec![0.2, 0.5, 0.8]).unwrap()).unwrap()
    }

    #[test]
    fn phi_rows_sum_to_zero() {
        let phi = build_phi(&study_channel());
        for j in 0..phi.private_count() {
            let s: f64 = phi.matrix().row(j).iter().sum();
            assert!(s.abs() < 1e-12);
        }
        // X shifts the Gaussian mean, so the dependence is material.
        let max_abs = phi
            .matrix()
            .data()
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(max_abs > 0.01);
    }

    #[test]
    fn single_private_value_gives_zero_row() {
        let prior = JointPrior::independent(vec![0.0], &[1.0], vec![0.0, 1.0], &[0.5, 0.5])
            .unwrap();
        let model = SensorModel::new(0.6, 0.4, 0.0, 0.1, prior).unwrap();
        let ch = build_channel(&model, &Partition::new(vec![0.2, 0.5, 0.8]).unwrap()).unwrap();
        let phi = build_phi(&ch);
        assert_eq!(phi.private_count(), 1);
        for &v in phi.matrix().row(0) {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn phi_vanishes_when_x_is_uninformative() {
        let phi = build_phi(&independent_channel());
        for &v in phi.matrix().data() {
            assert!(v.abs() < 1e-12);
        }
        // Null space then has full dimension.
        assert_eq!(null_space_basis(&phi).len(), 4);
    }

    #[test]
    fn null_space_contains_ones_direction_and_meets_residual_tol() {
        let phi = build_phi(&study_channel());
        let basis = null_space_basis(&phi);
        // n = 2 makes the two rows dependent, so dim >= K - n = 2.
        assert!(basis.len() >= 2);
        for v in &basis {
            assert!(phi.residual_of(v) <= 1e-10);
        }
        // ones/2 must be representable in the basis: residual of its
        // projection is zero.
        let ones = [0.5; 4];
        let mut reconstructed = [0.0; 4];
        for v in &basis {
            let dot: f64 = v.iter().zip(&ones).map(|(a, b)| a * b).sum();
            for (r, vi) in reconstructed.iter_mut().zip(v) {
                *r += dot * vi;
            }
        }
        for (r, o) in reconstructed.iter().zip(&ones) {
            assert!((r - o).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_estimator_is_perfectly_private() {
        let ch = study_channel();
        let phi = build_phi(&ch);
        let est = Estimator::constant(&[0.3, 0.7], 4, vec![0.0, 1.0]).unwrap();
        let (ok, residual) = is_perfectly_private(&est, &phi, 1e-12).unwrap();
        assert!(ok, "residual {residual}");
    }

    #[test]
    fn map_estimator_is_not_private_here() {
        let ch = study_channel();
        let phi = build_phi(&ch);
        let est = Estimator::map_for(&ch);
        let (ok, residual) = is_perfectly_private(&est, &phi, 1e-6).unwrap();
        assert!(!ok);
        assert!(residual > 1e-3, "residual {residual}");
    }

    #[test]
    fn lp_solution_is_independent_and_beats_constant() {
        let ch = study_channel();
        let sol = solve_perfect_privacy(&ch).unwrap();
        assert!(sol.residual <= 1e-9, "residual {}", sol.residual);
        assert!(sol.report.mutual_info_bits.abs() <= 1e-8);
        // Never better than the unconstrained MAP.
        let map_err = Estimator::map_for(&ch).error_probability(&ch).unwrap();
        assert!(sol.report.error_prob >= map_err - 1e-12);
        // Never worse than the best constant estimator.
        let constant_err = 1.0
            - ch.prior()
                .py()
                .into_iter()
                .fold(f64::MIN, f64::max);
        assert!(sol.report.error_prob <= constant_err + 1e-9);
        // Output-conditional distributions coincide across private values.
        for j in 0..2 {
            let cond = sol.estimator.conditional_output_pmf(&ch, j).unwrap();
            let marg = sol.estimator.output_pmf(&ch).unwrap();
            for (c, m) in cond.iter().zip(&marg) {
                assert!((c - m).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn vacuous_constraint_reduces_to_map() {
        let ch = independent_channel();
        let sol = solve_perfect_privacy(&ch).unwrap();
        let map_err = Estimator::map_for(&ch).error_probability(&ch).unwrap();
        assert!((sol.report.error_prob - map_err).abs() < 1e-9);
    }

    #[test]
    fn single_symbol_forces_constant_estimator() {
        let model = SensorModel::new(0.6, 0.4, 0.0, 0.1, study_prior()).unwrap();
        // One edge -> two bins is the smallest partition; shrink further by
        // assembling a one-symbol channel directly.
        let _ = model;
        let prior = study_prior();
        let p_xy = vec![vec![vec![1.0]; 2]; 2];
        let ch = Channel::from_parts(prior, p_xy).unwrap();
        let sol = solve_perfect_privacy(&ch).unwrap();
        // Only constant estimators exist: error = 1 - max_i P(Y=y_i).
        assert!((sol.report.error_prob - 0.5).abs() < 1e-9);
    }

    #[test]
    fn reduction_documents_feasibility() {
        let model = SensorModel::new(0.6, 0.4, 0.0, 0.1, study_prior()).unwrap();
        let fine = Partition::new(vec![0.2, 0.5, 0.8]).unwrap();
        let red = reduce_continuous_to_discrete(&model, &fine).unwrap();
        assert!(red.feasibility_guaranteed);

        // N = n boundary: warning, not error.
        let coarse = Partition::new(vec![0.5]).unwrap();
        let red = reduce_continuous_to_discrete(&model, &coarse).unwrap();
        assert!(!red.feasibility_guaranteed);
        assert!(red.note.contains("warning"));
    }

    #[test]
    fn piecewise_constant_integrals_match_discrete_residuals() {
        let model = SensorModel::new(0.6, 0.4, 0.0, 0.1, study_prior()).unwrap();
        let part = Partition::new(vec![0.2, 0.5, 0.8]).unwrap();
        let red = reduce_continuous_to_discrete(&model, &part).unwrap();
        let ch = &red.channel;
        let phi = build_phi(ch);
        let sol = solve_perfect_privacy(ch).unwrap();
        // integral of P_i(z)(p_Z - p_{Z|x_j}) dz over piecewise-constant P_i
        // = sum_l P_il (P(sym=l) - P(sym=l|x_j)) = -(Phi P_i)_j.
        for i in 0..2 {
            let row = sol.estimator.probs().row(i);
            for j in 0..2 {
                let integral: f64 = (0..4)
                    .map(|l| row[l] * (ch.p_marginal()[l] - ch.p_given_x(j)[l]))
                    .sum();
                let phi_term = phi.matrix().row(j).iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
                assert!((integral + phi_term).abs() < 1e-12);
                assert!(integral.abs() <= 1e-9);
            }
        }
    }
}
