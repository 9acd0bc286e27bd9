//! Command-line driver: design estimators (equivocation-constrained or
//! perfectly private), evaluate stored estimators, dump channels, and run the
//! multi-sensor study.
//!
//! Exit codes: 0 success, 2 infeasible problem, 3 non-converged solve,
//! 1 any other failure.

use equivest::config::{load_config, AppConfig};
use equivest::estimator::Estimator;
use equivest::experiment;
use equivest::io;
use equivest::multisensor::{count_channel, enumerate_counts, CountAlphabet};
use equivest::perfect;
use equivest::prob::{build_channel, Channel};
use equivest::solver;
use equivest::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const USAGE: &str = "\
equivest - equivocation-constrained estimator design

USAGE:
    equivest <COMMAND> [OPTIONS]

COMMANDS:
    design      solve for an estimator: privacy-aware (--h0) or --perfect
    evaluate    report the metrics of a stored estimator
    channel     dump the observation channel and deviation matrix
    experiment  run a study: oblivious | perfect | sweep

OPTIONS:
    --config <FILE>     configuration file (required)
    --out <DIR>         output directory (required)
    --estimator <FILE>  stored estimator CSV (for evaluate)
    --h0 <BITS>         equivocation floor, overrides [solver] h0_bits
    --perfect           design under exact independence instead of a floor
    --sensors <M>       number of sensors (default 1)
    --trials <N>        Monte-Carlo trials, overrides [experiment] trials
    --seed <N>          RNG seed, overrides [experiment] seed

EXIT CODES:
    0 success, 2 infeasible, 3 not converged, 1 other errors
";

struct Args {
    command: String,
    sub: Option<String>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    estimator: Option<PathBuf>,
    h0: Option<f64>,
    perfect: bool,
    sensors: usize,
    trials: Option<usize>,
    seed: Option<u64>,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut args = Args {
        command: String::new(),
        sub: None,
        config: None,
        out: None,
        estimator: None,
        h0: None,
        perfect: false,
        sensors: 1,
        trials: None,
        seed: None,
    };
    let mut positional = Vec::new();
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        let mut grab = |name: &str| {
            it.next()
                .map(String::as_str)
                .ok_or_else(|| format!("{name} needs a value"))
        };
        match arg.as_str() {
            "--config" => args.config = Some(PathBuf::from(grab("--config")?)),
            "--out" => args.out = Some(PathBuf::from(grab("--out")?)),
            "--estimator" => args.estimator = Some(PathBuf::from(grab("--estimator")?)),
            "--h0" => {
                args.h0 = Some(
                    grab("--h0")?
                        .parse()
                        .map_err(|_| "--h0 must be a number".to_string())?,
                )
            }
            "--perfect" => args.perfect = true,
            "--sensors" => {
                args.sensors = grab("--sensors")?
                    .parse()
                    .map_err(|_| "--sensors must be a positive integer".to_string())?
            }
            "--trials" => {
                args.trials = Some(
                    grab("--trials")?
                        .parse()
                        .map_err(|_| "--trials must be a positive integer".to_string())?,
                )
            }
            "--seed" => {
                args.seed = Some(
                    grab("--seed")?
                        .parse()
                        .map_err(|_| "--seed must be an integer".to_string())?,
                )
            }
            "-h" | "--help" => return Err(String::new()),
            other if other.starts_with('-') => return Err(format!("unknown option {other}")),
            other => positional.push(other.to_string()),
        }
    }
    let mut positional = positional.into_iter();
    args.command = positional.next().unwrap_or_default();
    args.sub = positional.next();
    if args.command.is_empty() {
        return Err(String::new());
    }
    if let Some(extra) = positional.next() {
        return Err(format!("unexpected argument {extra}"));
    }
    Ok(args)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(msg) => {
            if msg.is_empty() {
                eprint!("{USAGE}");
                return ExitCode::from(if argv.is_empty() { 1 } else { 0 });
            }
            eprintln!("error: {msg}");
            eprint!("{USAGE}");
            return ExitCode::from(1);
        }
    };
    match dispatch(&args) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::InfeasiblePrivacyFloor { .. }
                | Error::LpInfeasible(_)
                | Error::AlphabetTooLarge { .. } => 2,
                Error::IterationLimit(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn required_config(args: &Args) -> equivest::Result<AppConfig> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = load_config(path)?;
    if let Some(h0) = args.h0 {
        cfg.solver.h0_bits = h0;
    }
    if let Some(trials) = args.trials {
        cfg.experiment.trials = trials;
    }
    if let Some(seed) = args.seed {
        cfg.experiment.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(args: &Args) -> equivest::Result<&Path> {
    let dir = args
        .out
        .as_ref()
        .ok_or_else(|| Error::Config("--out is required".into()))?;
    std::fs::create_dir_all(dir)?;
    Ok(dir)
}

/// The observation channel at the requested sensor count, plus the count
/// alphabet when several sensors aggregate.
fn observation_channel(
    cfg: &AppConfig,
    sensors: usize,
) -> equivest::Result<(Channel, Option<CountAlphabet>, Vec<String>)> {
    let base = build_channel(&cfg.model, &cfg.partition)?;
    if sensors <= 1 {
        let labels = io::bin_labels(base.symbol_count());
        Ok((base, None, labels))
    } else {
        let alphabet = enumerate_counts(
            sensors,
            base.symbol_count(),
            cfg.experiment.alphabet_cap,
        )?;
        let labels = io::count_labels(&alphabet);
        let cc = count_channel(&base, &alphabet)?;
        Ok((cc, Some(alphabet), labels))
    }
}

fn metadata_lines(cfg: &AppConfig, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "edges = {:?}\nnoise_std = {}\ntrials = {}\nseed = {}\n",
        cfg.partition.edges(),
        cfg.model.noise_std(),
        cfg.experiment.trials,
        cfg.experiment.seed,
    ));
    for (k, v) in extra {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

fn dispatch(args: &Args) -> equivest::Result<ExitCode> {
    match (args.command.as_str(), args.sub.as_deref()) {
        ("design", None) => design(args),
        ("evaluate", None) => evaluate(args),
        ("channel", None) => channel_dump(args),
        ("experiment", Some("oblivious")) => experiment_oblivious(args),
        ("experiment", Some("perfect")) => experiment_perfect(args),
        ("experiment", Some("sweep")) => experiment_sweep(args),
        ("experiment", other) => Err(Error::Config(format!(
            "experiment needs one of: oblivious, perfect, sweep (got {})",
            other.unwrap_or("nothing")
        ))),
        (cmd, _) => Err(Error::Config(format!("unknown command `{cmd}`"))),
    }
}

fn design(args: &Args) -> equivest::Result<ExitCode> {
    let cfg = required_config(args)?;
    let dir = out_dir(args)?;
    let (ch, _, labels) = observation_channel(&cfg, args.sensors)?;

    if args.perfect {
        let solution = perfect::solve_perfect_privacy(&ch)?;
        io::write_estimator_csv(&dir.join("estimator.csv"), &solution.estimator)?;
        let phi = perfect::build_phi(&ch);
        io::write_matrix_csv(&dir.join("phi.csv"), &io::phi_rows(&phi))?;
        io::write_matrix_csv(&dir.join("null_basis.csv"), &perfect::null_space_basis(&phi))?;
        let mut cert = String::new();
        cert.push_str(&format!("objective = {}\n", solution.lp.objective));
        cert.push_str(&format!("iterations = {}\n", solution.lp.iterations));
        cert.push_str(&format!("alternate_optima = {}\n", solution.lp.alternate_optima));
        cert.push_str(&format!("basis = {:?}\n", solution.lp.basis));
        cert.push_str(&format!("reduced_costs = {:?}\n", solution.lp.reduced_costs));
        std::fs::write(dir.join("lp_certificate.txt"), cert)?;
        io::write_report(
            dir,
            "report",
            &solution.report,
            &[
                ("mode", "perfect".into()),
                ("sensors", args.sensors.to_string()),
                ("symbols", labels.len().to_string()),
                (
                    "alternate_optima",
                    solution.lp.alternate_optima.to_string(),
                ),
            ],
        )?;
        println!(
            "perfect-privacy design: error = {}, residual = {}",
            solution.report.error_prob, solution.residual
        );
        return Ok(ExitCode::SUCCESS);
    }

    let (est, state, report) = solver::solve_privacy_aware(&ch, &cfg.solver)?;
    io::write_estimator_csv(&dir.join("estimator.csv"), &est)?;
    io::write_trace_csv(&dir.join("trace.csv"), &state)?;
    io::write_report(
        dir,
        "report",
        &report,
        &[
            ("mode", "privacy-aware".into()),
            ("h0_bits", cfg.solver.h0_bits.to_string()),
            ("mu", state.mu.to_string()),
            ("kkt_residual", state.kkt_residual.to_string()),
            ("iterations", state.iterations.to_string()),
            ("certified", state.certified.to_string()),
            ("sensors", args.sensors.to_string()),
        ],
    )?;
    println!(
        "privacy-aware design: error = {}, equivocation = {} bits, mu = {}, residual = {}",
        report.error_prob, report.cond_entropy_bits, state.mu, state.kkt_residual
    );
    if !state.certified {
        eprintln!("warning: KKT residual above tolerance; solution not certified");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn evaluate(args: &Args) -> equivest::Result<ExitCode> {
    let cfg = required_config(args)?;
    let dir = out_dir(args)?;
    let est_path = args
        .estimator
        .as_ref()
        .ok_or_else(|| Error::Config("--estimator is required for evaluate".into()))?;
    let est: Estimator = io::read_estimator_csv(est_path)?;
    let (ch, alphabet, _) = observation_channel(&cfg, args.sensors)?;
    let phi = perfect::build_phi(&ch);
    let (private_at_tol, _) =
        perfect::is_perfectly_private(&est, &phi, cfg.experiment.pp_residual_tol)?;
    let report = est.report(&ch)?;
    let base = build_channel(&cfg.model, &cfg.partition)?;
    let (mc, _) = experiment::monte_carlo_eval(
        &est,
        &base,
        alphabet.as_ref(),
        cfg.experiment.trials,
        cfg.experiment.seed,
    )?;
    io::write_report(
        dir,
        "report",
        &report,
        &[
            ("mode", "evaluate".into()),
            ("sensors", args.sensors.to_string()),
            ("empirical_error", mc.error_prob.to_string()),
            ("trials", mc.trials.to_string()),
            ("seed", mc.seed.to_string()),
            ("perfectly_private", private_at_tol.to_string()),
            (
                "pp_residual_tol",
                cfg.experiment.pp_residual_tol.to_string(),
            ),
        ],
    )?;
    println!(
        "evaluate: error = {} (empirical {}), equivocation = {} bits, pp residual = {}",
        report.error_prob, mc.error_prob, report.cond_entropy_bits, report.pp_residual
    );
    Ok(ExitCode::SUCCESS)
}

fn channel_dump(args: &Args) -> equivest::Result<ExitCode> {
    let cfg = required_config(args)?;
    let dir = out_dir(args)?;
    let (ch, _, labels) = observation_channel(&cfg, args.sensors)?;
    io::write_channel_csv(&dir.join("channel.csv"), &ch, &labels)?;
    let phi = perfect::build_phi(&ch);
    io::write_matrix_csv(&dir.join("phi.csv"), &io::phi_rows(&phi))?;
    io::write_matrix_csv(&dir.join("null_basis.csv"), &perfect::null_space_basis(&phi))?;
    std::fs::write(
        dir.join("run_metadata.txt"),
        metadata_lines(&cfg, &[("sensors", args.sensors.to_string())]),
    )?;
    println!(
        "channel: {} symbols over {} (x, y) pairs",
        ch.symbol_count(),
        ch.x_count() * ch.y_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn experiment_oblivious(args: &Args) -> equivest::Result<ExitCode> {
    let cfg = required_config(args)?;
    let dir = out_dir(args)?;
    let base = build_channel(&cfg.model, &cfg.partition)?;
    let rows = experiment::run_oblivious_baseline(&base, &cfg.experiment)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.sensors.to_string(),
                r.mode.to_string(),
                r.err_x.to_string(),
                r.err_x_mc.to_string(),
                r.err_y.to_string(),
                r.err_y_mc.to_string(),
            ]
        })
        .collect();
    io::write_table(
        dir,
        "oblivious",
        &["sensors", "mode", "err_x", "err_x_mc", "err_y", "err_y_mc"],
        &table,
    )?;
    std::fs::write(
        dir.join("run_metadata.txt"),
        metadata_lines(&cfg, &[("experiment", "oblivious".into())]),
    )?;
    for r in &rows {
        println!(
            "M = {:>3}: err_x = {} ({}), err_y = {}",
            r.sensors, r.err_x, r.mode, r.err_y
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment_perfect(args: &Args) -> equivest::Result<ExitCode> {
    let cfg = required_config(args)?;
    let dir = out_dir(args)?;
    let base = build_channel(&cfg.model, &cfg.partition)?;
    let exp = experiment::run_perfect_privacy_experiment(&base, &cfg.experiment)?;

    let table: Vec<Vec<String>> = exp
        .rows
        .iter()
        .map(|r| {
            vec![
                r.sensors.to_string(),
                r.alphabet_size.to_string(),
                r.err_pp.to_string(),
                r.err_pp_mc.to_string(),
                r.err_oblivious_y.to_string(),
                r.err_oblivious_y_mc.to_string(),
                r.gap.to_string(),
                r.pp_residual.to_string(),
            ]
        })
        .collect();
    io::write_table(
        dir,
        "perfect_compare",
        &[
            "sensors",
            "alphabet",
            "err_pp",
            "err_pp_mc",
            "err_oblivious_y",
            "err_oblivious_y_mc",
            "gap",
            "pp_residual",
        ],
        &table,
    )?;

    let independence: Vec<Vec<String>> = exp
        .independence
        .iter()
        .map(|row| {
            let mut cells = vec![row.y_label.to_string(), row.samples.to_string()];
            cells.extend(row.p_x_given_output.iter().map(|p| p.to_string()));
            cells
        })
        .collect();
    let base_labels: Vec<String> = (0..base.x_count())
        .map(|j| format!("p_x{}_given_output", base.prior().x_support()[j]))
        .collect();
    let mut header: Vec<&str> = vec!["output", "samples"];
    header.extend(base_labels.iter().map(String::as_str));
    io::write_table(dir, "independence", &header, &independence)?;

    io::write_estimator_csv(&dir.join("estimator.csv"), &exp.estimator)?;
    std::fs::write(
        dir.join("run_metadata.txt"),
        metadata_lines(
            &cfg,
            &[
                ("experiment", "perfect".into()),
                (
                    "independence_sensors",
                    exp.sensors_for_independence.to_string(),
                ),
            ],
        ),
    )?;
    for r in &exp.rows {
        println!(
            "M = {:>3}: err_pp = {} (mc {}), err_oblivious_y = {}, gap = {}",
            r.sensors, r.err_pp, r.err_pp_mc, r.err_oblivious_y, r.gap
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment_sweep(args: &Args) -> equivest::Result<ExitCode> {
    let cfg = required_config(args)?;
    let dir = out_dir(args)?;
    let (ch, _, _) = observation_channel(&cfg, args.sensors)?;
    let rows = experiment::run_sweep(&ch, 10, &cfg.solver)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.h0_bits.to_string(),
                r.error_prob.to_string(),
                r.cond_entropy_bits.to_string(),
                r.mu.to_string(),
                r.kkt_residual.to_string(),
                r.certified.to_string(),
            ]
        })
        .collect();
    io::write_table(
        dir,
        "sweep",
        &[
            "h0_bits",
            "error_prob",
            "cond_entropy_bits",
            "mu",
            "kkt_residual",
            "certified",
        ],
        &table,
    )?;
    std::fs::write(
        dir.join("run_metadata.txt"),
        metadata_lines(&cfg, &[("experiment", "sweep".into())]),
    )?;
    let uncertified = rows.iter().filter(|r| !r.certified).count();
    for r in &rows {
        println!(
            "H0 = {:.6}: error = {}, achieved = {} bits, mu = {}",
            r.h0_bits, r.error_prob, r.cond_entropy_bits, r.mu
        );
    }
    if uncertified > 0 {
        eprintln!("warning: {uncertified} sweep points not certified");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
