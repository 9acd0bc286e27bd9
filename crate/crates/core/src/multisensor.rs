//! Count-vector observation alphabet for several conditionally independent,
//! identically distributed sensors.
//!
//! Each sensor reports its bin index; the sufficient statistic is the vector
//! counting how many sensors landed in each bin. The count channel is again a
//! [`Channel`], so both design solvers run on it unchanged.

use crate::math::ln_factorial_table;
use crate::prob::Channel;
use crate::{Error, Result};

/// Enumeration cap: compositions beyond this are refused rather than chewed.
pub const DEFAULT_ALPHABET_CAP: usize = 200_000;

/// Ordered alphabet of count vectors: all length-N nonnegative integer
/// vectors summing to M, in descending lexicographic order.
#[derive(Debug, Clone)]
pub struct CountAlphabet {
    sensor_count: usize,
    bin_count: usize,
    counts: Vec<Vec<u32>>,
}

impl CountAlphabet {
    pub fn sensor_count(&self) -> usize {
        self.sensor_count
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    pub fn symbol(&self, idx: usize) -> &[u32] {
        &self.counts[idx]
    }

    /// Position of a count vector in the alphabet. The descending-lex order
    /// makes this a binary search.
    pub fn index_of(&self, c: &[u32]) -> Option<usize> {
        self.counts
            .binary_search_by(|probe| cmp_desc_lex(probe, c))
            .ok()
    }
}

fn cmp_desc_lex(a: &[u32], b: &[u32]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.cmp(x) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

/// Enumerate every count vector for `sensors` sensors over `bins` bins, in
/// descending lexicographic order. Errors when the alphabet would exceed
/// `cap` entries.
pub fn enumerate_counts(sensors: usize, bins: usize, cap: usize) -> Result<CountAlphabet> {
    if sensors < 1 {
        return Err(Error::Invalid("at least one sensor required".into()));
    }
    if bins < 2 {
        return Err(Error::Invalid("at least two bins required".into()));
    }
    let size_wide = binomial(sensors + bins - 1, bins - 1).unwrap_or(u128::MAX);
    if size_wide > cap as u128 {
        return Err(Error::AlphabetTooLarge {
            size: usize::try_from(size_wide).unwrap_or(usize::MAX),
            cap,
        });
    }
    let size = size_wide as usize;

    let mut counts = Vec::with_capacity(size);
    let mut current = vec![0u32; bins];
    fill(&mut counts, &mut current, 0, sensors as u32, bins);
    debug_assert_eq!(counts.len(), size);
    Ok(CountAlphabet { sensor_count: sensors, bin_count: bins, counts })
}

fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: u32, bins: usize) {
    if pos == bins - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        fill(out, current, pos + 1, remaining - v, bins);
    }
}

/// Lift a per-sensor channel to the count alphabet. Conditioned on (x, y)
/// the sensors are independent and identically distributed, so the count
/// vector is multinomial:
///
/// P(C = c | x, y) = M! / (c_1! ... c_N!) * prod_l P(sym=l | x, y)^{c_l}
///
/// The private and public variables are common to all sensors, so marginals
/// over x (or y) are taken after the product, not per sensor; the assembly in
/// [`Channel::from_parts`] does exactly that. Coefficients run in log space.
pub fn count_channel(base: &Channel, alphabet: &CountAlphabet) -> Result<Channel> {
    if alphabet.bin_count() != base.symbol_count() {
        return Err(Error::DimensionMismatch(format!(
            "alphabet built for {} bins, channel has {}",
            alphabet.bin_count(),
            base.symbol_count()
        )));
    }
    let n = base.x_count();
    let m = base.y_count();
    let sensors = alphabet.sensor_count();
    let ln_fact = ln_factorial_table(sensors);

    let mut p_xy = vec![vec![vec![0.0; alphabet.len()]; m]; n];
    for j in 0..n {
        for i in 0..m {
            let bin_probs = base.p_given_xy(j, i);
            let ln_p: Vec<f64> = bin_probs.iter().map(|&p| p.ln()).collect();
            for (idx, c) in alphabet.counts().iter().enumerate() {
                let mut ln = ln_fact[sensors];
                for (l, &cl) in c.iter().enumerate() {
                    if cl > 0 {
                        ln += cl as f64 * ln_p[l] - ln_fact[cl as usize];
                    }
                }
                p_xy[j][i][idx] = ln.exp();
            }
        }
    }
    Channel::from_parts(base.prior().clone(), p_xy)
}
