//! Command-line front end: simulation, informativity checks, LQR / H2
//! synthesis from trajectory files, model-based verification and the
//! consensus benchmark.
//!
//! Exit codes: 0 success; 1 infeasible / requested bound not certifiable;
//! 2 usage or input-format error; 3 numerical failure or inconclusive.

use clap::{Args, Parser, Subcommand};
use ddctrl::bench::{aggregate_csv, run_benchmark, trials_csv, BenchConfig};
use ddctrl::error::Error;
use ddctrl::h2::{synthesize_h2, H2Synthesis};
use ddctrl::io;
use ddctrl::lqr::{minimize_gamma_lqr, synthesize_lqr, Synthesis};
use ddctrl::rng::SplitMix64;
use ddctrl::sdp::{EpsPolicy, SolverSettings};
use ddctrl::system::{identifiability_report, simulate};
use nalgebra::{DMatrix, DVector};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ddctrl",
    version,
    about = "Data-driven suboptimal LQR and H2 state-feedback synthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// State trajectory CSV (T+1 rows, n columns); repeat for segments
    #[arg(long = "x", required = true, num_args = 1)]
    x: Vec<PathBuf>,
    /// Input trajectory CSV (T rows, m columns); repeat for segments
    #[arg(long = "u", required = true, num_args = 1)]
    u: Vec<PathBuf>,
    /// Disturbance trajectory CSV (T rows, d columns); repeat for segments
    #[arg(long = "w", num_args = 1)]
    w: Vec<PathBuf>,
}

impl DataArgs {
    fn read(&self) -> ddctrl::Result<ddctrl::system::DataRecord> {
        let x: Vec<&Path> = self.x.iter().map(PathBuf::as_path).collect();
        let u: Vec<&Path> = self.u.iter().map(PathBuf::as_path).collect();
        let w: Vec<&Path> = self.w.iter().map(PathBuf::as_path).collect();
        io::read_data(&x, &u, &w)
    }
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Fixed strictness margin for every LMI block (default: per-block
    /// 1e-8·(1+‖constant‖))
    #[arg(long)]
    eps: Option<f64>,
    /// Relative duality-measure stopping tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Newton iteration budget
    #[arg(long = "max-iter", default_value_t = 500)]
    max_iter: usize,
}

impl SolverArgs {
    fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.tol,
            max_iter: self.max_iter,
            ..SolverSettings::default()
        }
    }

    fn eps(&self) -> EpsPolicy {
        match self.eps {
            Some(e) => EpsPolicy::Fixed(e),
            None => EpsPolicy::Auto,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a system JSON and write trajectory CSV files
    Simulate {
        /// System JSON with "A", "B" and optional "E"
        #[arg(long)]
        system: PathBuf,
        /// Initial state, comma-separated
        #[arg(long)]
        x0: String,
        /// Number of steps T
        #[arg(long)]
        steps: usize,
        /// Input CSV to replay (default: uniform(0,1) draws)
        #[arg(long = "u-file")]
        u_file: Option<PathBuf>,
        /// Disturbance CSV to replay (default: uniform(0,1) draws when the
        /// system has E)
        #[arg(long = "w-file")]
        w_file: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output state CSV
        #[arg(long = "out-x")]
        out_x: PathBuf,
        /// Output input CSV
        #[arg(long = "out-u")]
        out_u: PathBuf,
        /// Output disturbance CSV
        #[arg(long = "out-w")]
        out_w: Option<PathBuf>,
    },
    /// Identifiability / informativity diagnostics for a data set
    Check {
        #[command(flatten)]
        data: DataArgs,
        /// Write the report JSON here as well as to stdout
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a suboptimal LQR gain from data
    SynthLqr {
        #[command(flatten)]
        data: DataArgs,
        /// Spec JSON {"Q", "R", "x0", "gamma"?}
        #[arg(long)]
        spec: PathBuf,
        /// Minimize gamma even when the spec fixes one
        #[arg(long)]
        minimize: bool,
        /// Override the spec's gamma
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Synthesize an H2 suboptimal gain from data with measured disturbances
    SynthH2 {
        #[command(flatten)]
        data: DataArgs,
        /// Spec JSON {"C", "D", "gamma"}
        #[arg(long)]
        spec: PathBuf,
        /// Override the spec's gamma
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Verify a gain against a known system (model-based oracle)
    Verify {
        /// True system JSON (needs "E" plus spec "C"/"D" for H2 checks)
        #[arg(long)]
        system: PathBuf,
        /// Spec JSON ({"Q","R","x0","gamma"} or {"C","D","gamma"})
        #[arg(long)]
        spec: PathBuf,
        /// Result JSON holding the gain under "K"
        #[arg(long)]
        result: Option<PathBuf>,
        /// Gain CSV (m rows, n columns), alternative to --result
        #[arg(long = "k-csv")]
        k_csv: Option<PathBuf>,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Run the consensus benchmark and emit CSV tables
    BenchConsensus {
        /// Benchmark config JSON (defaults apply to missing fields)
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "t-min")]
        t_min: Option<usize>,
        #[arg(long = "t-max")]
        t_max: Option<usize>,
        /// Include wall-clock timings in the trial CSV (breaks byte-for-byte
        /// determinism)
        #[arg(long)]
        timings: bool,
        /// Per-trial CSV path
        #[arg(long = "out-trials")]
        out_trials: Option<PathBuf>,
        /// Aggregate CSV path
        #[arg(long = "out-aggregate")]
        out_aggregate: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Dimension { .. }
                | Error::Spec(_)
                | Error::Format(_)
                | Error::Io(_)
                | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn parse_vector(text: &str) -> ddctrl::Result<DVector<f64>> {
    let vals: Result<Vec<f64>, _> = text
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect();
    vals.map(DVector::from_vec)
        .map_err(|_| Error::Format(format!("cannot parse vector '{text}'")))
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> ddctrl::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn dispatch(command: Command) -> ddctrl::Result<ExitCode> {
    match command {
        Command::Simulate {
            system,
            x0,
            steps,
            u_file,
            w_file,
            seed,
            out_x,
            out_u,
            out_w,
        } => {
            let sys = io::read_system_json(&system)?;
            let x0 = parse_vector(&x0)?;
            if steps == 0 {
                return Err(Error::Spec("need at least one simulation step".into()));
            }
            let mut rng = SplitMix64::new(seed);
            let inputs = match u_file {
                Some(p) => io::read_csv_matrix(&p)?.transpose(),
                None => DMatrix::from_fn(sys.input_dim(), steps, |_, _| rng.next_f64()),
            };
            let disturbances = match (&sys.e, w_file) {
                (Some(_), Some(p)) => Some(io::read_csv_matrix(&p)?.transpose()),
                (Some(e), None) => {
                    Some(DMatrix::from_fn(e.ncols(), steps, |_, _| rng.next_f64()))
                }
                (None, Some(_)) => {
                    return Err(Error::Spec(
                        "disturbance file given but the system has no E".into(),
                    ))
                }
                (None, None) => None,
            };
            let record = simulate(&sys, &x0, &inputs, disturbances.as_ref())?;
            io::write_data(&record, &out_x, &out_u, out_w.as_deref())?;
            eprintln!(
                "wrote {} steps to {} / {}",
                record.len(),
                out_x.display(),
                out_u.display()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Check { data, out } => {
            let record = data.read()?;
            let report = identifiability_report(&record)?;
            let value = serde_json::to_value(&report)?;
            emit(&value, out.as_deref())?;
            if report.right_inverse_exists {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "rank deficiency: rank(X-) = {} < n = {}; no right inverse of X- exists",
                    report.rank_x_minus, report.state_dim
                );
                Ok(ExitCode::from(1))
            }
        }

        Command::SynthLqr {
            data,
            spec,
            minimize,
            gamma,
            solver,
            out,
        } => {
            let record = data.read()?;
            let io::ProblemSpec::Lqr(mut lqr_spec) = io::read_spec_json(&spec)? else {
                return Err(Error::Format(
                    "synth-lqr expects an LQR spec with Q/R/x0".into(),
                ));
            };
            if let Some(g) = gamma {
                lqr_spec.gamma = Some(g);
            }
            let outcome = if minimize || lqr_spec.gamma.is_none() {
                minimize_gamma_lqr(
                    &record,
                    &lqr_spec.q,
                    &lqr_spec.r,
                    &lqr_spec.x0,
                    solver.eps(),
                    &solver.settings(),
                )?
            } else {
                synthesize_lqr(&record, &lqr_spec, solver.eps(), &solver.settings())?
            };
            match outcome {
                Synthesis::Feasible(ctrl) => {
                    emit(&io::lqr_result_json(&ctrl), out.as_deref())?;
                    Ok(ExitCode::SUCCESS)
                }
                Synthesis::Infeasible(diag) => {
                    emit(&io::failure_result_json(&diag), out.as_deref())?;
                    Ok(ExitCode::from(1))
                }
                Synthesis::Inconclusive(diag) => {
                    emit(&io::failure_result_json(&diag), out.as_deref())?;
                    Ok(ExitCode::from(3))
                }
            }
        }

        Command::SynthH2 {
            data,
            spec,
            gamma,
            solver,
            out,
        } => {
            let record = data.read()?;
            let io::ProblemSpec::H2(mut h2_spec) = io::read_spec_json(&spec)? else {
                return Err(Error::Format("synth-h2 expects an H2 spec with C/D".into()));
            };
            if let Some(g) = gamma {
                h2_spec.gamma = g;
            }
            match synthesize_h2(&record, &h2_spec, solver.eps(), &solver.settings())? {
                H2Synthesis::Feasible(ctrl, cert) => {
                    emit(&io::h2_result_json(&ctrl, &cert), out.as_deref())?;
                    Ok(ExitCode::SUCCESS)
                }
                H2Synthesis::NotFeasible {
                    outcome_i,
                    outcome_ii,
                    conclusive,
                } => {
                    let value = serde_json::json!({
                        "status": if conclusive { "infeasible" } else { "inconclusive" },
                        "K": null,
                        "condition_i": outcome_i
                            .diagnostics()
                            .map(|d| d.message.clone()),
                        "condition_ii": outcome_ii
                            .diagnostics()
                            .map(|d| d.message.clone()),
                    });
                    emit(&value, out.as_deref())?;
                    Ok(ExitCode::from(if conclusive { 1 } else { 3 }))
                }
            }
        }

        Command::Verify {
            system,
            spec,
            result,
            k_csv,
            out,
        } => {
            let mut sys = io::read_system_json(&system)?;
            let k = match (result, k_csv) {
                (Some(path), None) => {
                    let text = std::fs::read_to_string(&path)?;
                    let value: serde_json::Value = serde_json::from_str(&text)?;
                    let rows: Vec<Vec<f64>> = serde_json::from_value(
                        value
                            .get("K")
                            .cloned()
                            .ok_or_else(|| Error::Format("result JSON has no \"K\"".into()))?,
                    )?;
                    io::nested_to_mat(&rows, "K")?
                }
                (None, Some(path)) => io::read_csv_matrix(&path)?,
                _ => {
                    return Err(Error::Spec(
                        "give exactly one of --result or --k-csv".into(),
                    ))
                }
            };
            let report = match io::read_spec_json(&spec)? {
                io::ProblemSpec::Lqr(lqr_spec) => {
                    let gamma = lqr_spec.gamma.ok_or_else(|| {
                        Error::Format("verification needs a gamma in the spec".into())
                    })?;
                    ddctrl::oracle::check_suboptimal_lqr(
                        &sys,
                        &k,
                        &lqr_spec.q,
                        &lqr_spec.r,
                        &lqr_spec.x0,
                        gamma,
                    )?
                }
                io::ProblemSpec::H2(h2_spec) => {
                    sys.c = Some(h2_spec.c.clone());
                    sys.d = Some(h2_spec.d.clone());
                    ddctrl::oracle::check_suboptimal_h2(&sys, &k, h2_spec.gamma)?
                }
            };
            let value = serde_json::to_value(&report)?;
            emit(&value, out.as_deref())?;
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }

        Command::BenchConsensus {
            config,
            trials,
            seed,
            t_min,
            t_max,
            timings,
            out_trials,
            out_aggregate,
        } => {
            let mut cfg: BenchConfig = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    serde_json::from_str(&text)?
                }
                None => BenchConfig::default(),
            };
            if let Some(v) = trials {
                cfg.trials = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = t_min {
                cfg.t_min = v;
            }
            if let Some(v) = t_max {
                cfg.t_max = v;
            }
            let output = run_benchmark(&cfg)?;
            let agg = aggregate_csv(&output.aggregates);
            print!("{agg}");
            if let Some(path) = out_trials {
                std::fs::write(path, trials_csv(&output.rows, timings))?;
            }
            if let Some(path) = out_aggregate {
                std::fs::write(path, agg)?;
            }
            if output.all_oracle_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("oracle verification failed for at least one feasible trial");
                Ok(ExitCode::from(3))
            }
        }
    }
}
