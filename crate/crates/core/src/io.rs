//! File formats: estimator CSV with a JSON header line, channel/phi/basis
//! CSV dumps, privacy reports as flat key-value text and one-line JSON, solve
//! traces, and gnuplot-ready tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a matrix back reproduces it bit for bit.

use crate::estimator::Estimator;
use crate::linalg::Mat;
use crate::perfect::PhiMatrix;
use crate::prob::Channel;
use crate::solver::SolverState;
use crate::{Error, PrivacyReport, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Estimator file: `# {"y_labels":[...],"symbols":K}` then one CSV row per
/// output.
pub fn write_estimator_csv(path: &Path, est: &Estimator) -> Result<()> {
    let mut out = String::new();
    let labels = est
        .output_labels()
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",");
    writeln!(
        out,
        "# {{\"y_labels\":[{labels}],\"symbols\":{}}}",
        est.symbol_count()
    )
    .expect("string write");
    for i in 0..est.output_count() {
        let row = est
            .probs()
            .row(i)
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(out, "{row}").expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read an estimator back from [`write_estimator_csv`] output.
pub fn read_estimator_csv(path: &Path) -> Result<Estimator> {
    let text = std::fs::read_to_string(path)?;
    let mut labels: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            // Minimal parse of the {"y_labels":[..],"symbols":K} header.
            if let Some(start) = header.find('[') {
                if let Some(end) = header[start..].find(']') {
                    labels = header[start + 1..start + end]
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| {
                            t.trim().parse().map_err(|_| {
                                Error::Invalid(format!("bad label `{t}` in estimator header"))
                            })
                        })
                        .collect::<Result<_>>()?;
                }
            }
            continue;
        }
        rows.push(
            line.split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad probability `{t}`")))
                })
                .collect::<Result<_>>()?,
        );
    }
    if rows.is_empty() {
        return Err(Error::Invalid("estimator file has no rows".into()));
    }
    if labels.len() != rows.len() {
        // Tolerate a missing header by numbering the outputs.
        labels = (0..rows.len()).map(|i| i as f64).collect();
    }
    Estimator::new(Mat::from_rows(&rows), labels)
}

/// Channel dump: one row per (x, y) pair, one probability column per symbol.
pub fn write_channel_csv(path: &Path, ch: &Channel, symbol_labels: &[String]) -> Result<()> {
    let mut out = String::new();
    write!(out, "x,y").expect("string write");
    for s in symbol_labels {
        write!(out, ",{s}").expect("string write");
    }
    out.push('\n');
    for j in 0..ch.x_count() {
        for i in 0..ch.y_count() {
            write!(
                out,
                "{},{}",
                ch.prior().x_support()[j],
                ch.prior().y_support()[i]
            )
            .expect("string write");
            for &p in ch.p_given_xy(j, i) {
                write!(out, ",{p}").expect("string write");
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Labels "bin1".."binK" for a plain partition channel.
pub fn bin_labels(k: usize) -> Vec<String> {
    (1..=k).map(|l| format!("bin{l}")).collect()
}

/// Labels like "c3-0-1-0" for a count alphabet.
pub fn count_labels(alphabet: &crate::multisensor::CountAlphabet) -> Vec<String> {
    alphabet
        .counts()
        .iter()
        .map(|c| {
            let joined = c
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("-");
            format!("c{joined}")
        })
        .collect()
}

/// Plain numeric matrix CSV (deviation matrix, null-space basis, ...).
pub fn write_matrix_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        writeln!(
            out,
            "{}",
            row.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn phi_rows(phi: &PhiMatrix) -> Vec<Vec<f64>> {
    (0..phi.private_count())
        .map(|j| phi.matrix().row(j).to_vec())
        .collect()
}

/// Privacy report as flat `key = value` text plus extra entries.
pub fn report_text(report: &PrivacyReport, extras: &[(&str, String)]) -> String {
    let mut out = String::new();
    writeln!(out, "cond_entropy_bits = {}", report.cond_entropy_bits).expect("string write");
    writeln!(out, "mutual_info_bits = {}", report.mutual_info_bits).expect("string write");
    writeln!(out, "fano_bound = {}", report.fano_bound).expect("string write");
    writeln!(out, "error_prob = {}", report.error_prob).expect("string write");
    writeln!(out, "pp_residual = {}", report.pp_residual).expect("string write");
    for (k, v) in extras {
        writeln!(out, "{k} = {v}").expect("string write");
    }
    out
}

/// The same report as a single-line JSON record.
pub fn report_json(report: &PrivacyReport, extras: &[(&str, String)]) -> String {
    let mut out = String::from("{");
    write!(
        out,
        "\"cond_entropy_bits\":{},\"mutual_info_bits\":{},\"fano_bound\":{},\"error_prob\":{},\"pp_residual\":{}",
        json_num(report.cond_entropy_bits),
        json_num(report.mutual_info_bits),
        json_num(report.fano_bound),
        json_num(report.error_prob),
        json_num(report.pp_residual),
    )
    .expect("string write");
    for (k, v) in extras {
        // Extras are numeric or plain strings; quote anything non-numeric.
        match v.parse::<f64>() {
            Ok(num) if num.is_finite() => {
                write!(out, ",\"{k}\":{v}").expect("string write");
                let _ = num;
            }
            _ => write!(out, ",\"{k}\":\"{v}\"").expect("string write"),
        }
    }
    out.push('}');
    out.push('\n');
    out
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "null".to_string()
    }
}

pub fn write_report(dir: &Path, stem: &str, report: &PrivacyReport, extras: &[(&str, String)]) -> Result<()> {
    std::fs::write(dir.join(format!("{stem}.txt")), report_text(report, extras))?;
    std::fs::write(dir.join(format!("{stem}.json")), report_json(report, extras))?;
    Ok(())
}

/// Solve trace: one row per inner solve of the dual search.
pub fn write_trace_csv(path: &Path, state: &SolverState) -> Result<()> {
    let mut out =
        String::from("stage,mu,objective,cond_entropy_bits,kkt_residual,inner_iterations\n");
    for row in &state.trace {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.stage,
            row.mu,
            row.objective,
            row.cond_entropy_bits,
            row.residual,
            row.inner_iterations
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Comma CSV table plus a gnuplot-ready `.dat` twin (whitespace-separated,
/// `#` header) next to it.
pub fn write_table(dir: &Path, stem: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut csv = String::new();
    writeln!(csv, "{}", header.join(",")).expect("string write");
    for row in rows {
        writeln!(csv, "{}", row.join(",")).expect("string write");
    }
    std::fs::write(dir.join(format!("{stem}.csv")), csv)?;

    let mut dat = String::new();
    writeln!(dat, "# {}", header.join(" ")).expect("string write");
    for row in rows {
        writeln!(dat, "{}", row.join(" ")).expect("string write");
    }
    std::fs::write(dir.join(format!("{stem}.dat")), dat)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{build_channel, JointPrior, Partition, SensorModel};

    fn tmpdir(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("equivest-io-{name}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn study_channel() -> Channel {
        let prior =
            JointPrior::independent(vec![0.0, 1.0], &[0.7, 0.3], vec![0.0, 1.0], &[0.5, 0.5])
                .unwrap();
        let model = SensorModel::new(0.6, 0.4, 0.0, 0.1, prior).unwrap();
        build_channel(&model, &Partition::new(vec![0.2, 0.5, 0.8]).unwrap()).unwrap()
    }

    #[test]
    fn estimator_roundtrip_is_exact() {
        let dir = tmpdir("est");
        let ch = study_channel();
        let (est, _, _) =
            crate::solver::solve_privacy_aware(&ch, &crate::solver::SolverConfig::new(0.7))
                .unwrap();
        let path = dir.join("estimator.csv");
        write_estimator_csv(&path, &est).unwrap();
        let back = read_estimator_csv(&path).unwrap();
        assert_eq!(back.output_labels(), est.output_labels());
        for i in 0..est.output_count() {
            for l in 0..est.symbol_count() {
                assert_eq!(back.probs().get(i, l), est.probs().get(i, l));
            }
        }
    }

    #[test]
    fn channel_csv_has_row_per_pair() {
        let dir = tmpdir("ch");
        let ch = study_channel();
        let path = dir.join("channel.csv");
        write_channel_csv(&path, &ch, &bin_labels(4)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 4);
        assert!(text.starts_with("x,y,bin1,bin2,bin3,bin4"));
    }

    #[test]
    fn report_formats() {
        let ch = study_channel();
        let est = crate::estimator::Estimator::map_for(&ch);
        let report = est.report(&ch).unwrap();
        let txt = report_text(&report, &[("seed", "7".into())]);
        assert!(txt.contains("error_prob = "));
        assert!(txt.contains("seed = 7"));
        let json = report_json(&report, &[("mode", "exact".into())]);
        assert!(json.contains("\"error_prob\":"));
        assert!(json.contains("\"mode\":\"exact\""));
        assert!(json.trim_end().ends_with('}'));
    }

    #[test]
    fn table_twins_agree() {
        let dir = tmpdir("tab");
        write_table(
            &dir,
            "demo",
            &["m", "value"],
            &[vec!["1".into(), "0.5".into()], vec!["2".into(), "0.25".into()]],
        )
        .unwrap();
        let csv = std::fs::read_to_string(dir.join("demo.csv")).unwrap();
        let dat = std::fs::read_to_string(dir.join("demo.dat")).unwrap();
        assert!(csv.starts_with("m,value\n1,0.5\n"));
        assert!(dat.starts_with("# m value\n1 0.5\n"));
    }
}
