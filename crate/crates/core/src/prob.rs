//! Observation model: joint prior over the private/public pair, Gaussian
//! sensor, bin partition of the measurement line, and the discrete channel of
//! bin probabilities derived from them.

use crate::linalg::Mat;
use crate::math::gaussian_cdf;
use crate::{Error, Result};

/// Probabilities below this floor are clamped and the row renormalized, so
/// every downstream logarithm stays finite.
pub const PROB_FLOOR: f64 = 1e-15;

const PMF_SUM_TOL: f64 = 1e-12;

/// Joint prior over the private variable X (n values) and the public
/// variable Y (m values). `pmf[j][i] = P(X = x_j, Y = y_i)`.
#[derive(Debug, Clone)]
pub struct JointPrior {
    x_support: Vec<f64>,
    y_support: Vec<f64>,
    pmf: Vec<Vec<f64>>,
}

impl JointPrior {
    pub fn new(x_support: Vec<f64>, y_support: Vec<f64>, pmf: Vec<Vec<f64>>) -> Result<Self> {
        let n = x_support.len();
        let m = y_support.len();
        if n == 0 || m == 0 {
            return Err(Error::Invalid("prior supports must be non-empty".into()));
        }
        if pmf.len() != n || pmf.iter().any(|row| row.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "prior pmf must be {n} x {m}"
            )));
        }
        let mut total = 0.0;
        for row in &pmf {
            for &p in row {
                if p.is_nan() || p < 0.0 {
                    return Err(Error::Invalid(format!("negative prior entry {p}")));
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::Invalid(format!("prior pmf sums to {total}, not 1")));
        }
        Ok(Self { x_support, y_support, pmf })
    }

    /// Independent product prior from two marginals.
    pub fn independent(
        x_support: Vec<f64>,
        px: &[f64],
        y_support: Vec<f64>,
        py: &[f64],
    ) -> Result<Self> {
        if px.len() != x_support.len() || py.len() != y_support.len() {
            return Err(Error::DimensionMismatch("marginal length mismatch".into()));
        }
        let pmf = px
            .iter()
            .map(|&pj| py.iter().map(|&pi| pj * pi).collect())
            .collect();
        Self::new(x_support, y_support, pmf)
    }

    pub fn x_count(&self) -> usize {
        self.x_support.len()
    }

    pub fn y_count(&self) -> usize {
        self.y_support.len()
    }

    pub fn x_support(&self) -> &[f64] {
        &self.x_support
    }

    pub fn y_support(&self) -> &[f64] {
        &self.y_support
    }

    pub fn joint(&self, j: usize, i: usize) -> f64 {
        self.pmf[j][i]
    }

    /// Marginal P(X = x_j).
    pub fn px(&self) -> Vec<f64> {
        self.pmf.iter().map(|row| row.iter().sum()).collect()
    }

    /// Marginal P(Y = y_i).
    pub fn py(&self) -> Vec<f64> {
        let mut py = vec![0.0; self.y_count()];
        for row in &self.pmf {
            for (i, &p) in row.iter().enumerate() {
                py[i] += p;
            }
        }
        py
    }

    /// H(X) in bits.
    pub fn entropy_x_bits(&self) -> f64 {
        -self
            .px()
            .iter()
            .filter(|&&p| p > PROB_FLOOR)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }
}

/// Scalar Gaussian sensor: Z = a*y + b*x + c + noise, noise ~ N(0, sigma^2).
#[derive(Debug, Clone)]
pub struct SensorModel {
    pub y_coeff: f64,
    pub x_coeff: f64,
    pub offset: f64,
    noise_std: f64,
    prior: JointPrior,
}

impl SensorModel {
    pub fn new(
        y_coeff: f64,
        x_coeff: f64,
        offset: f64,
        noise_std: f64,
        prior: JointPrior,
    ) -> Result<Self> {
        if noise_std.is_nan() || noise_std <= 0.0 || !noise_std.is_finite() {
            return Err(Error::Invalid(format!(
                "noise_std must be positive, got {noise_std}"
            )));
        }
        Ok(Self { y_coeff, x_coeff, offset, noise_std, prior })
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn prior(&self) -> &JointPrior {
        &self.prior
    }

    /// Conditional mean of Z given (x_j, y_i).
    pub fn mean(&self, j: usize, i: usize) -> f64 {
        self.y_coeff * self.prior.y_support()[i]
            + self.x_coeff * self.prior.x_support()[j]
            + self.offset
    }
}

/// Partition of the real line into N bins by N-1 strictly increasing edges.
/// Bin 1 is `(-inf, a_1]`, bin l is `(a_{l-1}, a_l]`, bin N is `(a_{N-1}, inf)`.
#[derive(Debug, Clone)]
pub struct Partition {
    edges: Vec<f64>,
}

impl Partition {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::Invalid("partition needs at least one edge".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Invalid("partition edges must be finite".into()));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(
                "partition edges must be strictly increasing".into(),
            ));
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Number of bins, N = edges + 1.
    pub fn bin_count(&self) -> usize {
        self.edges.len() + 1
    }

    /// Index (0-based) of the bin containing `z`.
    pub fn bin_of(&self, z: f64) -> usize {
        self.edges.partition_point(|&e| e < z)
    }
}

/// Discrete observation channel: bin (or count-symbol) probabilities
/// conditioned on (x, y), on x, on y, and marginally, plus the prior.
///
/// Rows over the symbol index always sum to one; entries are clamped away
/// from zero by [`PROB_FLOOR`].
#[derive(Debug, Clone)]
pub struct Channel {
    prior: JointPrior,
    symbol_count: usize,
    /// `p_xy[j][i]` is the length-K row P(sym | x_j, y_i).
    p_xy: Vec<Vec<Vec<f64>>>,
    p_x: Vec<Vec<f64>>,
    p_y: Vec<Vec<f64>>,
    p: Vec<f64>,
}

impl Channel {
    /// Assemble a channel from conditional rows P(sym | x_j, y_i); marginals
    /// are computed exactly from the joint prior. Rows are floored at
    /// [`PROB_FLOOR`] and renormalized.
    pub fn from_parts(prior: JointPrior, mut p_xy: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = prior.x_count();
        let m = prior.y_count();
        if p_xy.len() != n || p_xy.iter().any(|per_x| per_x.len() != m) {
            return Err(Error::DimensionMismatch(
                "conditional table must be n x m rows".into(),
            ));
        }
        let k = p_xy[0][0].len();
        if k == 0 {
            return Err(Error::Invalid("channel needs at least one symbol".into()));
        }
        for per_x in &mut p_xy {
            for row in per_x.iter_mut() {
                if row.len() != k {
                    return Err(Error::DimensionMismatch(
                        "conditional rows must share one symbol count".into(),
                    ));
                }
                clamp_and_renormalize(row)?;
            }
        }

        let px = prior.px();
        let py = prior.py();

        // P(sym | x_j): average over y with weights P(Y=y_i | X=x_j). A prior
        // atom of mass zero gets the unweighted average so the row still sums
        // to one; it carries no weight anywhere downstream.
        let p_x: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut row = vec![0.0; k];
                if px[j] > 0.0 {
                    for i in 0..m {
                        let w = prior.joint(j, i) / px[j];
                        for l in 0..k {
                            row[l] += w * p_xy[j][i][l];
                        }
                    }
                } else {
                    for i in 0..m {
                        for l in 0..k {
                            row[l] += p_xy[j][i][l] / m as f64;
                        }
                    }
                }
                row
            })
            .collect();

        let p_y: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut row = vec![0.0; k];
                if py[i] > 0.0 {
                    for j in 0..n {
                        let w = prior.joint(j, i) / py[i];
                        for l in 0..k {
                            row[l] += w * p_xy[j][i][l];
                        }
                    }
                } else {
                    for j in 0..n {
                        for l in 0..k {
                            row[l] += p_xy[j][i][l] / n as f64;
                        }
                    }
                }
                row
            })
            .collect();

        let mut p = vec![0.0; k];
        for j in 0..n {
            for i in 0..m {
                let w = prior.joint(j, i);
                for l in 0..k {
                    p[l] += w * p_xy[j][i][l];
                }
            }
        }

        Ok(Self { prior, symbol_count: k, p_xy, p_x, p_y, p })
    }

    pub fn prior(&self) -> &JointPrior {
        &self.prior
    }

    pub fn symbol_count(&self) -> usize {
        self.symbol_count
    }

    pub fn x_count(&self) -> usize {
        self.prior.x_count()
    }

    pub fn y_count(&self) -> usize {
        self.prior.y_count()
    }

    /// P(sym = l | X = x_j, Y = y_i).
    pub fn p_given_xy(&self, j: usize, i: usize) -> &[f64] {
        &self.p_xy[j][i]
    }

    /// P(sym = l | X = x_j).
    pub fn p_given_x(&self, j: usize) -> &[f64] {
        &self.p_x[j]
    }

    /// P(sym = l | Y = y_i).
    pub fn p_given_y(&self, i: usize) -> &[f64] {
        &self.p_y[i]
    }

    /// Marginal P(sym = l).
    pub fn p_marginal(&self) -> &[f64] {
        &self.p
    }

    /// Objective coefficients `beta[i][l] = P(sym=l | Y=y_i) P(Y=y_i)`: the
    /// probability-of-correct weight for declaring y_i on symbol l.
    pub fn correct_weights(&self) -> Mat {
        let m = self.y_count();
        let k = self.symbol_count;
        let py = self.prior.py();
        let mut beta = Mat::zeros(m, k);
        for i in 0..m {
            for l in 0..k {
                beta.set(i, l, self.p_y[i][l] * py[i]);
            }
        }
        beta
    }
}

fn clamp_and_renormalize(row: &mut [f64]) -> Result<()> {
    let mut sum = 0.0;
    for p in row.iter_mut() {
        if !p.is_finite() || *p < -1e-9 {
            return Err(Error::Invalid(format!("bad probability {p}")));
        }
        if *p < PROB_FLOOR {
            *p = PROB_FLOOR;
        }
        sum += *p;
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Invalid(format!(
            "conditional row sums to {sum}, not 1"
        )));
    }
    for p in row.iter_mut() {
        *p /= sum;
    }
    Ok(())
}

/// Build the discrete observation channel for one sensor: bin probabilities
/// are Gaussian CDF differences at the partition edges.
pub fn build_channel(model: &SensorModel, partition: &Partition) -> Result<Channel> {
    let prior = model.prior().clone();
    let n = prior.x_count();
    let m = prior.y_count();
    let edges = partition.edges();
    let k = partition.bin_count();
    let sigma = model.noise_std();

    let mut p_xy = vec![vec![vec![0.0; k]; m]; n];
    for j in 0..n {
        for i in 0..m {
            let mu = model.mean(j, i);
            let mut prev = 0.0;
            for l in 0..k {
                let upper = if l + 1 < k {
                    gaussian_cdf((edges[l] - mu) / sigma)
                } else {
                    1.0
                };
                p_xy[j][i][l] = (upper - prev).max(0.0);
                prev = upper;
            }
        }
    }
    Channel::from_parts(prior, p_xy)
}
