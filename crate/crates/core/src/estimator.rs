//! Randomized estimators and their information metrics: error probability,
//! output distributions, equivocation, mutual information, Fano bound.
//!
//! All entropies are in bits.

use crate::linalg::Mat;
use crate::prob::{Channel, PROB_FLOOR};
use crate::{Error, Result};

/// Column-stochastic randomization matrix: entry (i, l) is the probability of
/// declaring output y_i when observation symbol l arrives.
#[derive(Debug, Clone)]
pub struct Estimator {
    probs: Mat,
    output_labels: Vec<f64>,
}

impl Estimator {
    pub fn new(probs: Mat, output_labels: Vec<f64>) -> Result<Self> {
        if probs.rows() != output_labels.len() {
            return Err(Error::DimensionMismatch(
                "one output label per estimator row".into(),
            ));
        }
        for r in 0..probs.rows() {
            for &v in probs.row(r) {
                if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                    return Err(Error::Invalid(format!("entry {v} outside [0, 1]")));
                }
            }
        }
        for l in 0..probs.cols() {
            let s: f64 = (0..probs.rows()).map(|i| probs.get(i, l)).sum();
            if (s - 1.0).abs() > 1e-10 {
                return Err(Error::Invalid(format!(
                    "column {l} sums to {s}, must be 1"
                )));
            }
        }
        Ok(Self { probs, output_labels })
    }

    /// Deterministic column-wise MAP estimator of Y: on symbol l declare the
    /// output maximizing P(sym=l | Y=y_i) P(Y=y_i), lowest index on ties.
    pub fn map_for(ch: &Channel) -> Self {
        let beta = ch.correct_weights();
        let m = ch.y_count();
        let k = ch.symbol_count();
        let mut probs = Mat::zeros(m, k);
        for l in 0..k {
            let mut best = 0usize;
            for i in 1..m {
                if beta.get(i, l) > beta.get(best, l) {
                    best = i;
                }
            }
            probs.set(best, l, 1.0);
        }
        Self { probs, output_labels: ch.prior().y_support().to_vec() }
    }

    /// Constant randomization: every symbol maps to the same output weights.
    /// With uniform weights this is the canonical always-feasible point of the
    /// perfect-privacy program.
    pub fn constant(weights: &[f64], symbols: usize, output_labels: Vec<f64>) -> Result<Self> {
        if weights.len() != output_labels.len() {
            return Err(Error::DimensionMismatch("weights vs labels".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-10 || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Invalid("weights must form a pmf".into()));
        }
        let mut probs = Mat::zeros(weights.len(), symbols);
        for (i, &w) in weights.iter().enumerate() {
            for l in 0..symbols {
                probs.set(i, l, w);
            }
        }
        Ok(Self { probs, output_labels })
    }

    pub fn uniform(m: usize, symbols: usize, output_labels: Vec<f64>) -> Result<Self> {
        Estimator::constant(&vec![1.0 / m as f64; m], symbols, output_labels)
    }

    pub fn probs(&self) -> &Mat {
        &self.probs
    }

    pub fn output_labels(&self) -> &[f64] {
        &self.output_labels
    }

    pub fn output_count(&self) -> usize {
        self.probs.rows()
    }

    pub fn symbol_count(&self) -> usize {
        self.probs.cols()
    }

    fn check_dims(&self, ch: &Channel) -> Result<()> {
        if self.symbol_count() != ch.symbol_count() {
            return Err(Error::DimensionMismatch(format!(
                "estimator has {} symbols, channel has {}",
                self.symbol_count(),
                ch.symbol_count()
            )));
        }
        if self.output_count() != ch.y_count() {
            return Err(Error::DimensionMismatch(format!(
                "estimator has {} outputs, channel has {}",
                self.output_count(),
                ch.y_count()
            )));
        }
        Ok(())
    }

    /// P(Y != Yhat) = 1 - sum_{i,l} P_{il} P(sym=l | Y=y_i) P(Y=y_i).
    pub fn error_probability(&self, ch: &Channel) -> Result<f64> {
        self.check_dims(ch)?;
        Ok(error_probability_of(&self.probs, ch))
    }

    /// Output pmf of the estimate: P(Yhat = y_i) = sum_l P_{il} P(sym=l).
    pub fn output_pmf(&self, ch: &Channel) -> Result<Vec<f64>> {
        self.check_dims(ch)?;
        Ok(self.probs.mul_vec(ch.p_marginal()))
    }

    /// Output pmf conditioned on X = x_j.
    pub fn conditional_output_pmf(&self, ch: &Channel, j: usize) -> Result<Vec<f64>> {
        self.check_dims(ch)?;
        if j >= ch.x_count() {
            return Err(Error::DimensionMismatch(format!(
                "private index {j} out of range"
            )));
        }
        Ok(self.probs.mul_vec(ch.p_given_x(j)))
    }

    /// Equivocation H(X | Yhat) in bits, via the decomposition
    /// H(X) - sum_j P(X=x_j) D(P_{Yhat|X=x_j} || P_Yhat).
    pub fn conditional_entropy_bits(&self, ch: &Channel) -> Result<f64> {
        self.check_dims(ch)?;
        Ok(conditional_entropy_of(&self.probs, ch))
    }

    /// I(X; Yhat) = H(X) - H(X | Yhat), in bits.
    pub fn mutual_information_bits(&self, ch: &Channel) -> Result<f64> {
        Ok(ch.prior().entropy_x_bits() - self.conditional_entropy_bits(ch)?)
    }

    /// Full analytic report against a channel, including the independence
    /// residual `max_i ||Phi P_i||_inf`.
    pub fn report(&self, ch: &Channel) -> Result<PrivacyReport> {
        self.check_dims(ch)?;
        let cond = self.conditional_entropy_bits(ch)?;
        let n = ch.x_count();
        let marginal = ch.p_marginal();
        let mut pp_residual = 0.0f64;
        for j in 0..n {
            let cond_row = ch.p_given_x(j);
            for i in 0..self.output_count() {
                let dot: f64 = self
                    .probs
                    .row(i)
                    .iter()
                    .enumerate()
                    .map(|(l, &p)| p * (cond_row[l] - marginal[l]))
                    .sum();
                pp_residual = pp_residual.max(dot.abs());
            }
        }
        Ok(PrivacyReport {
            cond_entropy_bits: cond,
            mutual_info_bits: ch.prior().entropy_x_bits() - cond,
            fano_bound: if n >= 2 {
                fano_lower_bound(cond, n).expect("n >= 2")
            } else {
                0.0
            },
            error_prob: self.error_probability(ch)?,
            pp_residual,
        })
    }
}

/// Error probability for an arbitrary (not necessarily stochastic) matrix;
/// the solver needs this on raw iterates.
pub fn error_probability_of(probs: &Mat, ch: &Channel) -> f64 {
    let beta = ch.correct_weights();
    let mut correct = 0.0;
    for i in 0..probs.rows() {
        for l in 0..probs.cols() {
            correct += probs.get(i, l) * beta.get(i, l);
        }
    }
    1.0 - correct
}

/// Equivocation via the KL decomposition, tolerating raw positive matrices.
pub fn conditional_entropy_of(probs: &Mat, ch: &Channel) -> f64 {
    ch.prior().entropy_x_bits() - mutual_information_of(probs, ch)
}

/// I(X; Yhat) in bits: sum_j P(x_j) sum_i q_{ij} log2(q_{ij} / r_i) with
/// q_{ij} = sum_l P_{il} P(sym=l | x_j) and r_i = sum_l P_{il} P(sym=l).
pub fn mutual_information_of(probs: &Mat, ch: &Channel) -> f64 {
    let px = ch.prior().px();
    let r = probs.mul_vec(ch.p_marginal());
    let mut mi = 0.0;
    for (j, &pxj) in px.iter().enumerate() {
        if pxj <= PROB_FLOOR {
            continue;
        }
        let q = probs.mul_vec(ch.p_given_x(j));
        for i in 0..probs.rows() {
            if q[i] > PROB_FLOOR && r[i] > PROB_FLOOR {
                mi += pxj * q[i] * (q[i] / r[i]).log2();
            }
        }
    }
    mi
}

/// Direct evaluation of H(X | Yhat) from the definition: cross-check for the
/// KL-decomposition path.
pub fn conditional_entropy_direct_bits(est: &Estimator, ch: &Channel) -> Result<f64> {
    let p_out = est.output_pmf(ch)?;
    let px = ch.prior().px();
    // P(X = x_j | Yhat = y_i) = P(x_j) q_{ij} / r_i.
    let mut h = 0.0;
    for (i, &ri) in p_out.iter().enumerate() {
        if ri <= PROB_FLOOR {
            continue;
        }
        for (j, &pxj) in px.iter().enumerate() {
            if pxj <= PROB_FLOOR {
                continue;
            }
            let q = est.conditional_output_pmf(ch, j)?[i];
            let post = pxj * q / ri;
            if post > PROB_FLOOR {
                h -= ri * post * post.log2();
            }
        }
    }
    Ok(h)
}

/// Fano lower bound on any adversary's error in recovering X from the
/// estimate: max(0, (H(X|Yhat) - 1) / log2 n). Informative only for n > 2.
pub fn fano_lower_bound(cond_entropy_bits: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Invalid(format!(
            "Fano bound needs at least 2 private values, got {n}"
        )));
    }
    Ok(((cond_entropy_bits - 1.0) / (n as f64).log2()).max(0.0))
}

/// Analytic privacy metrics of one estimator against one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyReport {
    pub cond_entropy_bits: f64,
    pub mutual_info_bits: f64,
    pub fano_bound: f64,
    pub error_prob: f64,
    pub pp_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{build_channel, JointPrior, Partition, SensorModel};
    use proptest::prelude::*;

    fn study_channel() -> Channel {
        let prior =
            JointPrior::independent(vec![0.0, 1.0], &[0.7, 0.3], vec![0.0, 1.0], &[0.5, 0.5])
                .unwrap();
        let model = SensorModel::new(0.6, 0.4, 0.0, 0.1, prior).unwrap();
        build_channel(&model, &Partition::new(vec![0.2, 0.5, 0.8]).unwrap()).unwrap()
    }

    fn random_stochastic(m: usize, k: usize, seed: u64) -> Mat {
        let mut rng = crate::rng::SplitMix64::new(seed);
        let mut probs = Mat::zeros(m, k);
        for l in 0..k {
            let mut col: Vec<f64> = (0..m).map(|_| rng.next_f64() + 1e-3).collect();
            let s: f64 = col.iter().sum();
            for v in &mut col {
                *v /= s;
            }
            for i in 0..m {
                probs.set(i, l, col[i]);
            }
        }
        probs
    }

    #[test]
    fn uniform_estimator_error_is_one_minus_inverse_m() {
        let ch = study_channel();
        let est = Estimator::uniform(2, 4, vec![0.0, 1.0]).unwrap();
        assert!((est.error_probability(&ch).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_estimator_error_matches_prior() {
        let ch = study_channel();
        // Always declare y_0 (argmax of the uniform P(Y) by lowest index).
        let est = Estimator::constant(&[1.0, 0.0], 4, vec![0.0, 1.0]).unwrap();
        assert!((est.error_probability(&ch).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn map_error_on_study_channel_matches_exhaustive_oracle() {
        let ch = study_channel();
        let est = Estimator::map_for(&ch);
        // Independent oracle: direct summation of 1 - sum_l max_i beta.
        let beta = ch.correct_weights();
        let mut correct = 0.0;
        for l in 0..4 {
            correct += (0..2).map(|i| beta.get(i, l)).fold(f64::MIN, f64::max);
        }
        let oracle = 1.0 - correct;
        let got = est.error_probability(&ch).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        // Frozen from the oracle above.
        assert!((got - 0.0793277702915147).abs() < 1e-12, "map error {got}");
    }

    #[test]
    fn output_pmf_shapes() {
        let ch = study_channel();
        let det = Estimator::constant(&[1.0, 0.0], 4, vec![0.0, 1.0]).unwrap();
        let pmf = det.output_pmf(&ch).unwrap();
        assert!((pmf[0] - 1.0).abs() < 1e-12 && pmf[1].abs() < 1e-12);
        let uni = Estimator::uniform(2, 4, vec![0.0, 1.0]).unwrap();
        for v in uni.output_pmf(&ch).unwrap() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_estimator_keeps_full_equivocation() {
        let ch = study_channel();
        let est = Estimator::uniform(2, 4, vec![0.0, 1.0]).unwrap();
        let h = est.conditional_entropy_bits(&ch).unwrap();
        assert!((h - 0.8812908992306927).abs() < 1e-9);
        assert!(est.mutual_information_bits(&ch).unwrap().abs() < 1e-9);
    }

    #[test]
    fn single_private_value_has_zero_entropy() {
        let prior = JointPrior::independent(vec![0.0], &[1.0], vec![0.0, 1.0], &[0.5, 0.5])
            .unwrap();
        let model = SensorModel::new(0.6, 0.4, 0.0, 0.1, prior).unwrap();
        let ch = build_channel(&model, &Partition::new(vec![0.3]).unwrap()).unwrap();
        let est = Estimator::map_for(&ch);
        assert!(est.conditional_entropy_bits(&ch).unwrap().abs() < 1e-12);
        // n = 1: conditional output pmf equals output pmf.
        let a = est.output_pmf(&ch).unwrap();
        let b = est.conditional_output_pmf(&ch, 0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn independence_in_model_means_no_leakage() {
        // x_coeff = 0 and product prior: X affects nothing.
        let prior =
            JointPrior::independent(vec![0.0, 1.0], &[0.7, 0.3], vec![0.0, 1.0], &[0.5, 0.5])
                .unwrap();
        let hx = prior.entropy_x_bits();
        let model = SensorModel::new(0.6, 0.0, 0.0, 0.1, prior).unwrap();
        let ch = build_channel(&model, &Partition::new(vec![0.2, 0.5, 0.8]).unwrap()).unwrap();
        for est in [
            Estimator::map_for(&ch),
            Estimator::uniform(2, 4, vec![0.0, 1.0]).unwrap(),
        ] {
            assert!((est.conditional_entropy_bits(&ch).unwrap() - hx).abs() < 1e-9);
        }
    }

    #[test]
    fn map_mutual_information_frozen_value() {
        let ch = study_channel();
        let est = Estimator::map_for(&ch);
        // Cross-check decomposition against the direct double sum.
        let h_dec = est.conditional_entropy_bits(&ch).unwrap();
        let h_dir = conditional_entropy_direct_bits(&est, &ch).unwrap();
        assert!((h_dec - h_dir).abs() < 1e-9);
        let mi = est.mutual_information_bits(&ch).unwrap();
        assert!((mi - 0.0153271523161028).abs() < 1e-12, "map MI {mi}");
    }

    #[test]
    fn fano_bound_cases() {
        assert!(fano_lower_bound(1.0, 2).unwrap().abs() < 1e-15);
        assert!((fano_lower_bound(1.5, 4).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(fano_lower_bound(0.5, 7).unwrap(), 0.0);
        assert!(fano_lower_bound(1.0, 1).is_err());
    }

    #[test]
    fn estimator_validation() {
        let mut bad = Mat::zeros(2, 3);
        bad.set(0, 0, 0.7);
        bad.set(1, 0, 0.7);
        assert!(Estimator::new(bad, vec![0.0, 1.0]).is_err());
        let ch = study_channel();
        let est = Estimator::uniform(2, 3, vec![0.0, 1.0]).unwrap();
        assert!(est.error_probability(&ch).is_err()); // 3 symbols vs 4
    }

    proptest! {
        #[test]
        fn entropy_chain_identity(seed in 0u64..5_000) {
            let ch = study_channel();
            let probs = random_stochastic(2, 4, seed);
            let est = Estimator::new(probs, vec![0.0, 1.0]).unwrap();
            let h = est.conditional_entropy_bits(&ch).unwrap();
            let mi = est.mutual_information_bits(&ch).unwrap();
            let hx = ch.prior().entropy_x_bits();
            prop_assert!((h + mi - hx).abs() < 1e-9);
            prop_assert!(mi >= -1e-9);
            prop_assert!(h >= -1e-9 && h <= hx + 1e-9);
            // Decomposition agrees with the direct definition.
            let direct = conditional_entropy_direct_bits(&est, &ch).unwrap();
            prop_assert!((h - direct).abs() < 1e-9);
        }

        #[test]
        fn mutual_information_is_convex(seed in 0u64..2_000) {
            let ch = study_channel();
            let p = random_stochastic(2, 4, seed);
            let q = random_stochastic(2, 4, seed.wrapping_add(77_777));
            for alpha in [0.25, 0.5, 0.75] {
                let mut blend = Mat::zeros(2, 4);
                for i in 0..2 {
                    for l in 0..4 {
                        blend.set(i, l, alpha * p.get(i, l) + (1.0 - alpha) * q.get(i, l));
                    }
                }
                let mi_blend = mutual_information_of(&blend, &ch);
                let bound = alpha * mutual_information_of(&p, &ch)
                    + (1.0 - alpha) * mutual_information_of(&q, &ch);
                prop_assert!(mi_blend <= bound + 1e-9);
            }
        }

        #[test]
        fn error_probability_is_affine(seed in 0u64..2_000) {
            let ch = study_channel();
            let p = random_stochastic(2, 4, seed);
            let q = random_stochastic(2, 4, seed.wrapping_add(31));
            let alpha = 0.37;
            let mut blend = Mat::zeros(2, 4);
            for i in 0..2 {
                for l in 0..4 {
                    blend.set(i, l, alpha * p.get(i, l) + (1.0 - alpha) * q.get(i, l));
                }
            }
            let lhs = error_probability_of(&blend, &ch);
            let rhs = alpha * error_probability_of(&p, &ch)
                + (1.0 - alpha) * error_probability_of(&q, &ch);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn output_pmf_mixes_over_private_values(seed in 0u64..2_000) {
            let ch = study_channel();
            let est = Estimator::new(random_stochastic(2, 4, seed), vec![0.0, 1.0]).unwrap();
            let px = ch.prior().px();
            let marginal = est.output_pmf(&ch).unwrap();
            let mut mixed = vec![0.0; 2];
            for (j, &pj) in px.iter().enumerate() {
                let cond = est.conditional_output_pmf(&ch, j).unwrap();
                for (mi, ci) in mixed.iter_mut().zip(&cond) {
                    *mi += pj * ci;
                }
            }
            for (a, b) in marginal.iter().zip(&mixed) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
