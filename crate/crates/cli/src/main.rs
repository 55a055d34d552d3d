//! One binary, subcommand style. Exit codes: 0 success, 2 validation error,
//! 3 solver failure. `--json` switches stdout to machine-readable records.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sidework::error::{Error, SdpError};
use sidework::io::{aep_points_to_csv, ChoiJson, OperatorJson, ProtocolJson};
use sidework::linalg::SubsystemDims;
use sidework::protocols::ProtocolParams;
use sidework::smoothing::{SdpParams, SmoothParams};
use sidework::states::{gibbs_state, DensityOperator, Hamiltonian, ThermoState};
use sidework::Result;
use sidework::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sidework",
    about = "Work costs of preparation and erasure with quantum side information",
    version
)]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(flatten)]
    tols: TolArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct TolArgs {
    /// Duality-gap tolerance for the SDP engine.
    #[arg(long, default_value_t = 1e-7, global = true)]
    tol_gap: f64,
    /// Feasibility tolerance for the SDP engine and witnesses.
    #[arg(long, default_value_t = 1e-7, global = true)]
    tol_feas: f64,
    /// Bisection width, in bits, for ball-smoothed max quantities.
    #[arg(long, default_value_t = 1e-4, global = true)]
    tol_bisect: f64,
    /// Hermitian defect tolerance when loading operators.
    #[arg(long, default_value_t = 1e-8, global = true)]
    tol_herm: f64,
    /// Residual tolerance for free-operation predicates.
    #[arg(long, default_value_t = 1e-8, global = true)]
    tol_predicate: f64,
}

impl TolArgs {
    fn smooth(&self) -> SmoothParams {
        SmoothParams {
            sdp: SdpParams {
                gap_tol: self.tol_gap,
                feas_tol: self.tol_feas,
                max_iter: 500,
            },
            bisect_tol_bits: self.tol_bisect,
            feas_slack: self.tol_feas,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EntropyVariant {
    Min,
    Max,
    Vn,
    Sandwiched,
    Petz,
}

#[derive(Clone, Copy, ValueEnum)]
enum DivergenceVariant {
    Max,
    Min,
    Umegaki,
    Sandwiched,
    Petz,
    MinSmoothed,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutualVariant {
    MaxUp,
    MinDown,
    Umegaki,
    MaxDown,
    PetzDown,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Prep,
    Eras,
    Convert,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional entropy of a bipartite state.
    Entropy {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum)]
        variant: EntropyVariant,
        #[arg(long)]
        alpha: Option<f64>,
        /// Smoothing parameter; only min and max variants admit smoothing.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Relative-entropy family on a pair of states.
    Divergence {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long, value_enum)]
        variant: DivergenceVariant,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Generalized mutual information of a thermo state.
    Mutualinfo {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long)]
        hamiltonian: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        beta_b: f64,
        #[arg(long, value_enum)]
        variant: MutualVariant,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// One-shot or asymptotic work cost.
    Workcost {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long)]
        hamiltonian: Option<PathBuf>,
        #[arg(long, value_enum)]
        task: Task,
        /// Target state for convert.
        #[arg(long)]
        to_state: Option<PathBuf>,
        #[arg(long)]
        to_gamma: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        beta_b: f64,
    },
    /// Synthesize and verify an achievability protocol.
    Protocol {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long)]
        hamiltonian: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        beta_b: f64,
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Output battery dimension for erasure.
        #[arg(long, default_value_t = 8)]
        battery_out: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Free-operation predicate verdicts for a Choi operator.
    VerifyChannel {
        #[arg(long)]
        choi: PathBuf,
        #[arg(long)]
        gamma_in: PathBuf,
        #[arg(long)]
        gamma_out: PathBuf,
    },
    /// Per-copy smoothed max-mutual information with one-shot bounds.
    Aep {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long)]
        hamiltonian: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        beta_b: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long)]
        eps_prime: Option<f64>,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Diagonal fast path (required beyond small n).
        #[arg(long)]
        classical: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sandwich, special-state, and duality sweep over a random corpus.
    Sweep {
        #[arg(long, default_value_t = 67)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Worker threads; defaults to the logical core count.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value_t = 100)]
        duality_samples: usize,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Sdp(SdpError::Infeasible)
        | Error::Sdp(SdpError::Unbounded)
        | Error::Sdp(SdpError::MaxIterations { .. })
        | Error::Sdp(SdpError::ToleranceNotMet { .. })
        | Error::Sdp(SdpError::SolverStatus(_))
        | Error::NonConvergence(_)
        | Error::BracketFailure(_)
        | Error::EigFailure(_) => 3,
        _ => 2,
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}

fn load_density(path: &Path) -> Result<DensityOperator> {
    let op: OperatorJson = load_json(path)?;
    op.to_density()
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}

fn load_gamma(
    gamma: &Option<PathBuf>,
    hamiltonian: &Option<PathBuf>,
    beta_b: f64,
    d_a: usize,
) -> Result<DensityOperator> {
    match (gamma, hamiltonian) {
        (Some(path), None) => load_density(path),
        (None, Some(path)) => {
            let op: OperatorJson = load_json(path)?;
            let (h, dims) = op.to_operator()?;
            if dims.product() != d_a {
                return Err(Error::DimMismatch(format!(
                    "hamiltonian dim {} != |A| = {d_a}",
                    dims.product()
                )));
            }
            gibbs_state(&Hamiltonian::new(h), beta_b)
        }
        (None, None) => {
            // trivial Hamiltonian: uniform Gibbs state
            DensityOperator::new(
                sidework::linalg::HermitianOperator::identity(d_a).scale(1.0 / d_a as f64),
                SubsystemDims::new(&[d_a])?,
            )
        }
        (Some(_), Some(_)) => Err(Error::InvalidParameter(
            "pass either --gamma or --hamiltonian, not both".into(),
        )),
    }
}

fn load_thermo(
    state: &Path,
    gamma: &Option<PathBuf>,
    hamiltonian: &Option<PathBuf>,
    beta_b: f64,
) -> Result<ThermoState> {
    let rho = load_density(state)?;
    if rho.dims().len() != 2 {
        return Err(Error::DimMismatch(format!(
            "{}: bipartite dims [|A|,|B|] expected, got {:?}",
            state.display(),
            rho.dims().dims()
        )));
    }
    let d_a = rho.dims().dim(0);
    let g = load_gamma(gamma, hamiltonian, beta_b, d_a)?;
    ThermoState::new(rho, g)
}

fn emit(json_mode: bool, value: serde_json::Value, human: String) {
    if json_mode {
        println!("{value}");
    } else {
        println!("{human}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let smooth = cli.tols.smooth();
    match cli.command {
        Command::Entropy {
            state,
            variant,
            alpha,
            eps,
        } => {
            let rho = load_density(&state)?;
            let eps = eps.unwrap_or(0.0);
            let (name, bits) = match (variant, eps > 0.0) {
                (EntropyVariant::Min, false) => ("min", h_min_cond(&rho)?.bits),
                (EntropyVariant::Max, false) => ("max", h_max_cond(&rho)?.bits),
                (EntropyVariant::Min, true) => (
                    "min-smoothed",
                    smoothing::h_min_cond_smoothed(&rho, eps, &smooth)?.bits,
                ),
                (EntropyVariant::Max, true) => (
                    "max-smoothed",
                    smoothing::h_max_cond_smoothed(&rho, eps, &smooth)?.bits,
                ),
                (EntropyVariant::Vn, _) => ("von-neumann", h_vn_cond(&rho)?.bits),
                (EntropyVariant::Sandwiched, _) => {
                    let a = alpha.ok_or(Error::InvalidParameter("--alpha required".into()))?;
                    ("sandwiched", h_sandwiched_down(&rho, a)?.bits)
                }
                (EntropyVariant::Petz, _) => {
                    let a = alpha.ok_or(Error::InvalidParameter("--alpha required".into()))?;
                    ("petz", h_petz_up(&rho, a)?.bits)
                }
            };
            emit(
                cli.json,
                json!({"variant": name, "bits": bits, "eps": eps}),
                format!("H[{name}] = {bits} bits"),
            );
        }
        Command::Divergence {
            rho,
            sigma,
            variant,
            alpha,
            eps,
        } => {
            let r = load_density(&rho)?;
            let s = load_density(&sigma)?;
            let need_alpha =
                || alpha.ok_or_else(|| Error::InvalidParameter("--alpha required".into()));
            let (name, v) = match variant {
                DivergenceVariant::Max => ("max", d_max(r.op(), s.op())?),
                DivergenceVariant::Min => ("min", d_min(r.op(), s.op())?),
                DivergenceVariant::Umegaki => ("umegaki", d_umegaki(r.op(), s.op())?),
                DivergenceVariant::Sandwiched => {
                    ("sandwiched", d_sandwiched(r.op(), s.op(), need_alpha()?)?)
                }
                DivergenceVariant::Petz => ("petz", d_petz(r.op(), s.op(), need_alpha()?)?),
                DivergenceVariant::MinSmoothed => {
                    let e = eps.unwrap_or(0.0);
                    ("min-smoothed", d_min_smoothed(r.op(), s.op(), e)?)
                }
            };
            emit(
                cli.json,
                json!({"variant": name, "value_bits": v.value, "infinite": v.is_infinite()}),
                format!("D[{name}] = {} bits", v.value),
            );
        }
        Command::Mutualinfo {
            state,
            gamma,
            hamiltonian,
            beta_b,
            variant,
            alpha,
            eps,
        } => {
            let ts = load_thermo(&state, &gamma, &hamiltonian, beta_b)?;
            let eps = eps.unwrap_or(0.0);
            let (name, bits) = match (variant, eps > 0.0) {
                (MutualVariant::MaxUp, false) => ("max-up", i_max_up(&ts)?.bits),
                (MutualVariant::MaxUp, true) => (
                    "max-up-smoothed",
                    i_max_up_smoothed(&ts, eps, &smooth)?.bits,
                ),
                (MutualVariant::MinDown, false) => ("min-down", i_min_down(&ts)?.bits),
                (MutualVariant::MinDown, true) => (
                    "min-down-smoothed",
                    i_min_down_smoothed(&ts, eps, &smooth)?.bits,
                ),
                (MutualVariant::Umegaki, _) => ("umegaki", i_umegaki(&ts)?.bits),
                (MutualVariant::MaxDown, false) => ("max-down", i_max_down(&ts)?.bits),
                (MutualVariant::MaxDown, true) => (
                    "max-down-smoothed",
                    i_max_down_smoothed(&ts, eps, &smooth)?.bits,
                ),
                (MutualVariant::PetzDown, _) => {
                    let a = alpha.ok_or(Error::InvalidParameter("--alpha required".into()))?;
                    ("petz-down", i_petz_down(&ts, a)?.bits)
                }
            };
            emit(
                cli.json,
                json!({"variant": name, "bits": bits, "eps": eps}),
                format!("I[{name}] = {bits} bits"),
            );
        }
        Command::Workcost {
            state,
            gamma,
            hamiltonian,
            task,
            to_state,
            to_gamma,
            eps,
            beta_b,
        } => {
            let ts = load_thermo(&state, &gamma, &hamiltonian, beta_b)?;
            let report = match task {
                Task::Prep => w_prep_oneshot(&ts, eps, beta_b, &smooth)?,
                Task::Eras => w_eras_oneshot(&ts, eps, beta_b, &smooth)?,
                Task::Convert => {
                    let to = to_state.ok_or(Error::InvalidParameter(
                        "--to-state required for convert".into(),
                    ))?;
                    let ts_to = load_thermo(&to, &to_gamma, &None, beta_b)?;
                    w_asymptotic(&ts, &ts_to, beta_b)?
                }
            };
            let method = match report.method {
                WorkMethod::ClosedForm => "closed_form",
                WorkMethod::Sdp => "sdp",
                WorkMethod::Protocol => "protocol",
            };
            emit(
                cli.json,
                json!({
                    "work_bits": report.work_bits,
                    "beta_b": report.beta_b,
                    "epsilon": report.epsilon,
                    "method": method,
                    "diagnostics": report.diagnostics,
                }),
                format!(
                    "W = {} bits (kT ln2 units), method {method}",
                    report.work_bits
                ),
            );
        }
        Command::Protocol {
            state,
            gamma,
            hamiltonian,
            beta_b,
            task,
            eps,
            battery_out,
            out,
        } => {
            let ts = load_thermo(&state, &gamma, &hamiltonian, beta_b)?;
            let params = ProtocolParams {
                smooth,
                erasure_battery_out: battery_out,
                ..Default::default()
            };
            let (proto, report) = match task {
                Task::Prep => {
                    let p = build_preparation_protocol(&ts, eps, &params)?;
                    let rep =
                        verify_protocol(&p, &default_pure_input(ts.dim_a())?, ts.rho(), eps)?;
                    (p, rep)
                }
                Task::Eras => {
                    let p = build_erasure_protocol(&ts, eps, &params)?;
                    let target = DensityOperator::new(
                        sidework::linalg::HermitianOperator::basis_projector(ts.dim_a(), 0),
                        SubsystemDims::new(&[ts.dim_a()])?,
                    )?;
                    let rep = verify_protocol(&p, &ts, &target, eps)?;
                    (p, rep)
                }
                Task::Convert => {
                    return Err(Error::InvalidParameter(
                        "protocol synthesis supports prep and eras".into(),
                    ))
                }
            };
            if let Some(path) = out {
                let jsonable = ProtocolJson::from_protocol(&proto);
                std::fs::write(&path, serde_json::to_string_pretty(&jsonable)?)?;
            }
            emit(
                cli.json,
                json!({
                    "ideal_work_bits": proto.ideal_work_bits,
                    "integer_work_bits": proto.integer_work_bits,
                    "battery_in": proto.d_battery_in,
                    "battery_out": proto.d_battery_out,
                    "achieved_error": report.achieved_error,
                    "covariance_residual": report.covariance_residual,
                    "pass": report.pass,
                }),
                format!(
                    "work {} bits (integer {}), error {:.3e}, covariance {:.3e}, pass {}",
                    proto.ideal_work_bits,
                    proto.integer_work_bits,
                    report.achieved_error,
                    report.covariance_residual,
                    report.pass
                ),
            );
        }
        Command::VerifyChannel {
            choi,
            gamma_in,
            gamma_out,
        } => {
            let ch: ChoiJson = load_json(&choi)?;
            let ch = ch.to_choi()?;
            let g_in = load_density(&gamma_in)?;
            let g_out = load_density(&gamma_out)?;
            let d_a_in = g_in.dim();
            let d_a_out = g_out.dim();
            let op = channels::ThermoOperation::new(ch, g_in, g_out)?;
            let tol = cli.tols.tol_predicate;
            let (covariant, r1) = is_cond_thermal_covariant(&op, tol)?;
            let (preserving, r2) = is_cond_gibbs_preserving(&op, tol)?;
            let (nonsignaling, r3) =
                is_nonsignaling_a_to_b(&op.channel, d_a_in, d_a_out, tol)?;
            emit(
                cli.json,
                json!({
                    "covariant": covariant,
                    "covariance_residual": r1,
                    "gibbs_preserving": preserving,
                    "gibbs_residual": r2,
                    "nonsignaling_a_to_b": nonsignaling,
                    "nonsignaling_residual": r3,
                    "free": covariant,
                }),
                format!(
                    "covariant {covariant} ({r1:.3e}), gibbs-preserving {preserving} ({r2:.3e}), nonsignaling {nonsignaling} ({r3:.3e})"
                ),
            );
        }
        Command::Aep {
            state,
            gamma,
            hamiltonian,
            beta_b,
            eps,
            eps_prime,
            n_max,
            classical,
            out,
        } => {
            let ts = load_thermo(&state, &gamma, &hamiltonian, beta_b)?;
            let eps_prime = eps_prime.unwrap_or(eps);
            let pts = aep_experiment(&ts, eps, eps_prime, n_max, classical, &smooth)?;
            let csv = aep_points_to_csv(&pts);
            if let Some(path) = out {
                std::fs::write(&path, &csv)?;
            }
            if cli.json {
                let rows: Vec<_> = pts
                    .iter()
                    .map(|p| {
                        json!({
                            "n": p.n,
                            "eps": p.eps,
                            "value_bits": p.value_bits,
                            "lower_bound": p.lower_bound,
                            "upper_bound": p.upper_bound,
                        })
                    })
                    .collect();
                println!("{}", json!(rows));
            } else {
                print!("{csv}");
            }
        }
        Command::Sweep {
            samples,
            seed,
            workers,
            duality_samples,
        } => {
            let workers = workers.unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            });
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
            // fan the per-dims corpora out over the pool and merge
            let jobs: Vec<(usize, usize)> = vec![(2, 2), (2, 3), (3, 3)];
            let reports: Vec<SweepReport> = pool.install(|| {
                use rayon::prelude::*;
                jobs.par_iter()
                    .map(|&(d_a, d_b)| {
                        let config = SweepConfig {
                            dims_list: vec![(d_a, d_b)],
                            samples_per_dims: samples,
                            seed: seed ^ ((d_a * 31 + d_b) as u64),
                            duality_samples: 0,
                            ..Default::default()
                        };
                        entropy_sandwich_sweep(&config)
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            // duality pass runs once
            let duality = entropy_sandwich_sweep(&SweepConfig {
                dims_list: vec![],
                samples_per_dims: 0,
                seed,
                duality_samples,
                ..Default::default()
            })?;
            let states: usize = reports.iter().map(|r| r.states_checked).sum();
            let violations: usize = reports.iter().map(|r| r.sandwich_violations).sum();
            let defect = reports
                .iter()
                .map(|r| r.max_sandwich_defect)
                .fold(0.0f64, f64::max);
            let table = reports
                .iter()
                .map(|r| r.special_table_max_error)
                .fold(0.0f64, f64::max);
            emit(
                cli.json,
                json!({
                    "states_checked": states,
                    "sandwich_violations": violations,
                    "max_sandwich_defect": defect,
                    "special_table_max_error": table,
                    "duality_checked": duality.duality_checked,
                    "duality_max_residual": duality.duality_max_residual,
                    "workers": workers,
                }),
                format!(
                    "{states} states, {violations} sandwich violations (max defect {defect:.3e}); special table {table:.3e}; duality max {:.3e} over {}",
                    duality.duality_max_residual, duality.duality_checked
                ),
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
