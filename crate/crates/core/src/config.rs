//! Plain-text configuration: INI-style sections of `key = value` pairs.
//!
//! ```text
//! # comment
//! [model]
//! y_coeff   = 0.6
//! x_coeff   = 0.4
//! offset    = 0.0
//! noise_std = 0.1
//!
//! [prior]
//! x_values = 0, 1
//! y_values = 0, 1
//! row = 0.35, 0.35      # P(x_1, y_1), P(x_1, y_2), ...
//! row = 0.15, 0.15
//!
//! [partition]
//! edges = 0.2, 0.5, 0.8
//!
//! [solver]        # optional
//! h0_bits = 0.5
//!
//! [experiment]    # optional
//! sensor_counts = 1:10
//! trials = 100000
//! seed = 7
//! ```
//!
//! Lists split on commas or whitespace; `lo:hi` expands to an inclusive
//! integer range. Repeated keys (the prior rows) keep their order.

use crate::multisensor::DEFAULT_ALPHABET_CAP;
use crate::perfect::PP_RESIDUAL_TOL;
use crate::prob::{JointPrior, Partition, SensorModel};
use crate::solver::SolverConfig;
use crate::{Error, Result};

/// Parsed configuration: a constructed model plus solver and experiment
/// settings with defaults filled in.
#[derive(Debug, Clone)]
pub struct AppConfig {
    pub model: SensorModel,
    pub partition: Partition,
    pub solver: SolverConfig,
    pub experiment: ExperimentSettings,
}

/// Settings for the study runners.
#[derive(Debug, Clone)]
pub struct ExperimentSettings {
    pub sensor_counts: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub alphabet_cap: usize,
    /// Enumerate the oblivious product alphabet exactly up to this size;
    /// beyond it the baseline falls back to Monte Carlo.
    pub exact_limit: usize,
    pub pp_residual_tol: f64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            sensor_counts: (1..=10).collect(),
            trials: 100_000,
            seed: 7,
            alphabet_cap: DEFAULT_ALPHABET_CAP,
            exact_limit: 1_000_000,
            pp_residual_tol: PP_RESIDUAL_TOL,
        }
    }
}

#[derive(Debug, Default)]
struct Section {
    entries: Vec<(String, String)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(v) => parse_f64(key, v),
            None => Ok(default),
        }
    }

    fn f64_required(&self, key: &str, section: &str) -> Result<f64> {
        let v = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("[{section}] is missing `{key}`")))?;
        parse_f64(key, v)
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("`{key}` must be an integer, got `{v}`"))),
            None => Ok(default),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("`{key}` must be an integer, got `{v}`"))),
            None => Ok(default),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}` must be a number, got `{v}`")))
}

fn parse_f64_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split([',', ' ', '\t'])
        .filter(|tok| !tok.is_empty())
        .map(|tok| parse_f64(key, tok))
        .collect()
}

fn parse_usize_list(key: &str, v: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for tok in v.split([',', ' ', '\t']).filter(|tok| !tok.is_empty()) {
        if let Some((lo, hi)) = tok.split_once(':') {
            let lo: usize = lo
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad range start in `{key}`: `{tok}`")))?;
            let hi: usize = hi
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad range end in `{key}`: `{tok}`")))?;
            if hi < lo {
                return Err(Error::Config(format!("empty range `{tok}` in `{key}`")));
            }
            out.extend(lo..=hi);
        } else {
            out.push(
                tok.parse()
                    .map_err(|_| Error::Config(format!("bad integer in `{key}`: `{tok}`")))?,
            );
        }
    }
    Ok(out)
}

fn split_sections(text: &str) -> Result<Vec<(String, Section)>> {
    let mut sections: Vec<(String, Section)> = Vec::new();
    let mut current: Option<usize> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Config(format!("line {}: unclosed section", lineno + 1)))?
                .trim()
                .to_string();
            sections.push((name, Section::default()));
            current = Some(sections.len() - 1);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let idx = current.ok_or_else(|| {
            Error::Config(format!("line {}: key outside any [section]", lineno + 1))
        })?;
        sections[idx]
            .1
            .entries
            .push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(sections)
}

/// Parse a configuration file's contents.
pub fn parse_config(text: &str) -> Result<AppConfig> {
    let sections = split_sections(text)?;
    let find = |name: &str| sections.iter().find(|(n, _)| n == name).map(|(_, s)| s);

    let model_sec = find("model")
        .ok_or_else(|| Error::Config("missing [model] section".into()))?;
    let prior_sec = find("prior")
        .ok_or_else(|| Error::Config("missing [prior] section".into()))?;
    let part_sec = find("partition")
        .ok_or_else(|| Error::Config("missing [partition] section".into()))?;

    let x_values = parse_f64_list(
        "x_values",
        prior_sec
            .get("x_values")
            .ok_or_else(|| Error::Config("[prior] is missing `x_values`".into()))?,
    )?;
    let y_values = parse_f64_list(
        "y_values",
        prior_sec
            .get("y_values")
            .ok_or_else(|| Error::Config("[prior] is missing `y_values`".into()))?,
    )?;
    let rows = prior_sec.get_all("row");
    if rows.len() != x_values.len() {
        return Err(Error::Config(format!(
            "[prior] needs one `row` per private value: {} rows for {} values",
            rows.len(),
            x_values.len()
        )));
    }
    let pmf = rows
        .iter()
        .map(|r| parse_f64_list("row", r))
        .collect::<Result<Vec<_>>>()?;
    let prior = JointPrior::new(x_values, y_values, pmf)?;

    let model = SensorModel::new(
        model_sec.f64_required("y_coeff", "model")?,
        model_sec.f64_required("x_coeff", "model")?,
        model_sec.f64_or("offset", 0.0)?,
        model_sec.f64_required("noise_std", "model")?,
        prior,
    )?;

    let partition = Partition::new(parse_f64_list(
        "edges",
        part_sec
            .get("edges")
            .ok_or_else(|| Error::Config("[partition] is missing `edges`".into()))?,
    )?)?;

    let solver = {
        let defaults = SolverConfig::new(0.0);
        match find("solver") {
            Some(s) => SolverConfig {
                h0_bits: s.f64_or("h0_bits", defaults.h0_bits)?,
                step_init: s.f64_or("step_init", defaults.step_init)?,
                tol_kkt: s.f64_or("tol_kkt", defaults.tol_kkt)?,
                tol_primal: s.f64_or("tol_primal", defaults.tol_primal)?,
                max_iters: s.usize_or("max_iters", defaults.max_iters)?,
                mu_bracket: (
                    s.f64_or("mu_lo", defaults.mu_bracket.0)?,
                    s.f64_or("mu_hi", defaults.mu_bracket.1)?,
                ),
                seed: s.u64_or("seed", defaults.seed)?,
            },
            None => defaults,
        }
    };

    let experiment = {
        let d = ExperimentSettings::default();
        match find("experiment") {
            Some(s) => ExperimentSettings {
                sensor_counts: match s.get("sensor_counts") {
                    Some(v) => parse_usize_list("sensor_counts", v)?,
                    None => d.sensor_counts.clone(),
                },
                trials: s.usize_or("trials", d.trials)?,
                seed: s.u64_or("seed", d.seed)?,
                alphabet_cap: s.usize_or("alphabet_cap", d.alphabet_cap)?,
                exact_limit: s.usize_or("exact_limit", d.exact_limit)?,
                pp_residual_tol: s.f64_or("pp_residual_tol", d.pp_residual_tol)?,
            },
            None => d,
        }
    };

    if experiment.trials < 1 {
        return Err(Error::Config("`trials` must be at least 1".into()));
    }
    if experiment.sensor_counts.is_empty() || experiment.sensor_counts.contains(&0) {
        return Err(Error::Config("`sensor_counts` must be positive".into()));
    }

    Ok(AppConfig { model, partition, solver, experiment })
}

/// Parse a configuration file from disk.
pub fn load_config(path: &std::path::Path) -> Result<AppConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// The multi-sensor study configuration shipped with the repository:
/// Z = 0.6 Y + 0.4 X + noise, sigma = 0.1, P(X=0) = 0.7, P(Y=0) = 0.5,
/// independent prior, four bins with edges at the midpoints between the
/// conditional means.
pub const STUDY_CONFIG: &str = "\
# Multi-sensor estimation study.
[model]
y_coeff   = 0.6
x_coeff   = 0.4
offset    = 0.0
noise_std = 0.1

[prior]
x_values = 0, 1
y_values = 0, 1
row = 0.35, 0.35
row = 0.15, 0.15

[partition]
edges = 0.2, 0.5, 0.8

[solver]
h0_bits = 0.5

[experiment]
sensor_counts = 1:10
trials = 100000
seed = 7
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study_config_parses() {
        let cfg = parse_config(STUDY_CONFIG).unwrap();
        assert_eq!(cfg.partition.bin_count(), 4);
        assert!((cfg.model.noise_std() - 0.1).abs() < 1e-15);
        let px = cfg.model.prior().px();
        assert!((px[0] - 0.7).abs() < 1e-12);
        assert_eq!(cfg.experiment.sensor_counts, (1..=10).collect::<Vec<_>>());
        assert_eq!(cfg.experiment.trials, 100_000);
        assert!((cfg.solver.h0_bits - 0.5).abs() < 1e-15);
    }

    #[test]
    fn comments_and_spacing_are_tolerated() {
        let text = "
# leading comment
[model]
y_coeff = 0.6   # trailing comment
x_coeff=0.4
noise_std = 0.1

[prior]
x_values = 0 1
y_values = 0 1
row = 0.25 0.25
row = 0.25, 0.25

[partition]
edges = 0.5
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.partition.bin_count(), 2);
        assert!((cfg.model.offset - 0.0).abs() < 1e-15);
    }

    #[test]
    fn range_and_list_sensor_counts() {
        let base = STUDY_CONFIG.replace("sensor_counts = 1:10", "sensor_counts = 1, 3, 5:7");
        let cfg = parse_config(&base).unwrap();
        assert_eq!(cfg.experiment.sensor_counts, vec![1, 3, 5, 6, 7]);
    }

    #[test]
    fn errors_are_specific() {
        let missing = "[prior]\nx_values = 0\ny_values = 0\nrow = 1.0\n[partition]\nedges = 0.5\n";
        let err = parse_config(missing).unwrap_err();
        assert!(err.to_string().contains("[model]"), "{err}");

        let bad_rows = STUDY_CONFIG.replace("row = 0.15, 0.15\n", "");
        let err = parse_config(&bad_rows).unwrap_err();
        assert!(err.to_string().contains("row"), "{err}");

        let bad_number = STUDY_CONFIG.replace("noise_std = 0.1", "noise_std = zebra");
        assert!(parse_config(&bad_number).is_err());

        let outside = "stray = 1\n[model]\n";
        assert!(parse_config(outside).is_err());
    }

    #[test]
    fn last_value_wins_for_scalar_keys() {
        let text = STUDY_CONFIG.replace("seed = 7", "seed = 7\nseed = 9");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.experiment.seed, 9);
    }
}
