use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use isocap_core::checks::{mutated_diag_1d, Kernels, Suite};
use isocap_core::optimizer::{minimize, Objective};
use isocap_core::solver::{
    eigen_ground_state, p_capacity, relative_capacity, verify_potential, PotentialReport, VerifyMode,
};
use isocap_lab::config::LabConfig;
use isocap_lab::experiments::{self, FluctuationSettings};
use isocap_lab::io::{self, Checkpoint};
use isocap_lab::ledger::{self, Ledger};
use isocap_lab::verify::verify;
use isocap_lab::LabError;
use serde_json::json;

#[derive(Parser)]
#[command(name = "isocap", version, about = "Capacities and near-optimal shapes of finite lattice sets")]
struct Cli {
    /// TOML file with solver tolerances, truncation and search budgets.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct ObjectiveArgs {
    /// Exponent of the p-capacity (default 2).
    #[arg(long, conflicts_with_all = ["r", "eigen"])]
    p: Option<f64>,
    /// Capacity relative to the ball of radius R N^{1/d}.
    #[arg(long = "R", id = "r", conflicts_with = "eigen")]
    r: Option<f64>,
    /// First Dirichlet eigenvalue instead of a capacity.
    #[arg(long)]
    eigen: bool,
}

impl ObjectiveArgs {
    fn objective(self) -> Objective {
        match (self.p, self.r, self.eigen) {
            (_, _, true) => Objective::Eigen,
            (_, Some(r), _) => Objective::Relative { r },
            (p, None, false) => Objective::Capacity { p: p.unwrap_or(2.0) },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the capacity (or eigenvalue) of a set file and print a JSON result.
    Solve {
        set: PathBuf,
        /// Expected dimension; the set file must match.
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        objective: ObjectiveArgs,
        /// Write the JSON result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the potential (or ground state) as a function file.
        #[arg(long)]
        dump_potential: Option<PathBuf>,
    },
    /// Search for a low-capacity set of N points and write a checkpoint.
    Minimize {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long = "N", id = "n")]
        n: usize,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Best-value ledger to update.
        #[arg(long)]
        ledger: Option<PathBuf>,
    },
    /// Fluctuation experiment over a list of cardinalities; writes CSV.
    Fluctuation {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Comma-separated, nondecreasing.
        #[arg(long = "N", id = "n", value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "isocap-ledger.json")]
        ledger: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Scaled capacities of lattice balls against the continuum value; writes CSV.
    Convergence {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Comma-separated ball radii.
        #[arg(long, value_delimiter = ',', default_value = "4,5,6,7,8")]
        k: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run randomized invariant checks; exits 1 if any property fails.
    Verify {
        /// Suites to run (energy, rearrangement, minmax, embedding, solver); all by default.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Check a deliberately broken diagonal kernel (the run should fail).
        #[arg(long, hide = true)]
        mutate_diag: bool,
    },
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => io::write_string(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn objective_label(o: Objective) -> String {
    match o {
        Objective::Capacity { p } => format!("capacity p={p}"),
        Objective::Relative { r } => format!("relative R={r}"),
        Objective::Eigen => "eigen".into(),
    }
}

fn check_json(r: &PotentialReport) -> serde_json::Value {
    json!({
        "harmonic_defect": r.harmonic_defect,
        "bound_violation": r.bound_violation,
        "constraint_violation": r.constraint_violation,
        "boundary_violation": r.boundary_violation,
    })
}

fn solve(
    cfg: &LabConfig,
    set: &Path,
    dim: Option<usize>,
    objective: Objective,
    out: Option<&Path>,
    dump: Option<&Path>,
) -> anyhow::Result<()> {
    let x = io::read_set(set).with_context(|| format!("reading {}", set.display()))?;
    if let Some(d) = dim {
        if d != x.dim() {
            return Err(LabError::Format {
                line: 1,
                reason: format!("set has dimension {}, expected {d}", x.dim()),
            })
            .with_context(|| format!("reading {}", set.display()));
        }
    }
    let solver = cfg.solver();
    let base = json!({"objective": objective_label(objective), "dim": x.dim(), "n": x.len()});
    let (mut doc, potential) = match objective {
        Objective::Eigen => {
            let e = eigen_ground_state(&x, &solver)?;
            let doc = json!({"value": e.eigenvalue, "residual": e.residual, "iterations": e.iterations});
            (doc, e.eigenfunction)
        }
        Objective::Relative { r } => {
            let res = relative_capacity(&x, r, &solver)?;
            let check = verify_potential(&res.potential, &x, 2.0, VerifyMode::Relative { r })?;
            let doc = json!({
                "value": res.value,
                "raw_value": res.raw_value,
                "residual": res.residual,
                "iterations": res.iterations,
                "check": check_json(&check),
            });
            (doc, res.potential)
        }
        Objective::Capacity { p } => {
            let policy = cfg.truncation();
            let res = p_capacity(&x, p, policy, &solver)?;
            let (radius, center) = policy.resolve(&x);
            let check = verify_potential(&res.potential, &x, p, VerifyMode::Truncated { radius, center })?;
            let doc = json!({
                "value": res.value,
                "raw_value": res.raw_value,
                "corrected_value": res.corrected_value,
                "truncation_radius": res.truncation_radius,
                "residual": res.residual,
                "iterations": res.iterations,
                "check": check_json(&check),
            });
            (doc, res.potential)
        }
    };
    if let (Some(obj), Some(extra)) = (doc.as_object_mut(), base.as_object()) {
        for (k, v) in extra {
            obj.insert(k.clone(), v.clone());
        }
    }
    if let Some(path) = dump {
        io::write_string(path, &io::format_function(&potential))?;
    }
    emit(out, &(serde_json::to_string_pretty(&doc)? + "\n"))
}

#[allow(clippy::too_many_arguments)]
fn minimize_cmd(
    cfg: &LabConfig,
    dim: usize,
    n: usize,
    objective: Objective,
    seed: u64,
    restarts: usize,
    out: Option<&Path>,
    ledger_path: Option<&Path>,
) -> anyhow::Result<()> {
    let mut best: Option<Checkpoint> = None;
    let mut book = match ledger_path {
        Some(p) => Some(Ledger::load(p)?),
        None => None,
    };
    for r in 0..restarts.max(1) {
        let s = seed.wrapping_add(r as u64);
        let st = minimize(dim, n, objective, &cfg.optimizer(s))?;
        if let Some(l) = book.as_mut() {
            l.record(&ledger::key(dim, objective, n), st.best.1, s);
        }
        if st.budget_exhausted {
            eprintln!("restart {r}: evaluation budget exhausted, keeping the best set seen");
        }
        if best.as_ref().is_none_or(|b| st.best.1 < b.value) {
            best = Some(Checkpoint {
                set: st.best.0,
                objective: objective_label(objective),
                value: st.best.1,
                seed: s,
                evaluations: st.evaluations,
                budget_exhausted: st.budget_exhausted,
            });
        }
    }
    if let (Some(l), Some(p)) = (&book, ledger_path) {
        l.save(p)?;
    }
    let best = best.expect("at least one restart");
    emit(out, &io::format_checkpoint(&best))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let cfg = match &cli.config {
        Some(p) => LabConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => LabConfig::default(),
    };
    match cli.command {
        Command::Solve {
            set,
            dim,
            objective,
            out,
            dump_potential,
        } => solve(&cfg, &set, dim, objective.objective(), out.as_deref(), dump_potential.as_deref())?,
        Command::Minimize {
            dim,
            n,
            objective,
            seed,
            restarts,
            out,
            ledger,
        } => minimize_cmd(&cfg, dim, n, objective.objective(), seed, restarts, out.as_deref(), ledger.as_deref())?,
        Command::Fluctuation {
            dim,
            n,
            objective,
            restarts,
            seed,
            out,
            ledger,
            jobs,
        } => {
            let settings = FluctuationSettings {
                dim,
                objective: objective.objective(),
                ns: n,
                restarts,
                seed,
                optimizer: cfg.optimizer(seed),
                jobs,
            };
            let mut book = Ledger::load(&ledger)?;
            let report = experiments::fluctuation(&settings, &mut book)?;
            book.save(&ledger)?;
            emit(out.as_deref(), &experiments::fluctuation_csv(&report, true))?;
        }
        Command::Convergence { dim, p, k, out } => {
            let records = experiments::convergence(p, dim, &k, cfg.truncation.volume_factor, &cfg.solver())?;
            emit(out.as_deref(), &experiments::convergence_csv(&records, true))?;
        }
        Command::Verify {
            suite,
            seed,
            trials,
            out,
            mutate_diag,
        } => {
            let suites = if suite.is_empty() {
                Suite::ALL.to_vec()
            } else {
                suite
                    .iter()
                    .map(|s| Suite::parse(s).ok_or_else(|| LabError::Config(format!("unknown suite `{s}`"))))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let kernels = if mutate_diag {
                Kernels { diag_1d: mutated_diag_1d }
            } else {
                Kernels::default()
            };
            let report = verify(&suites, seed, trials, kernels)?;
            emit(out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
            if !report.passed {
                for p in report.properties.iter().filter(|p| p.failures > 0) {
                    eprintln!("FAILED {}/{}: {} of {} trials", p.suite, p.property, p.failures, p.trials);
                }
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let input = e.chain().any(|c| c.downcast_ref::<LabError>().is_some_and(LabError::is_input_error));
            if input {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn objective_flags() {
        let pick = |args: &[&str]| match Cli::try_parse_from(args).unwrap().command {
            Command::Minimize { objective, .. } => objective.objective(),
            _ => unreachable!(),
        };
        assert_eq!(pick(&["isocap", "minimize", "--N", "5"]), Objective::Capacity { p: 2.0 });
        assert_eq!(pick(&["isocap", "minimize", "--N", "5", "--p", "1.5"]), Objective::Capacity { p: 1.5 });
        assert_eq!(pick(&["isocap", "minimize", "--N", "5", "--R", "3"]), Objective::Relative { r: 3.0 });
        assert_eq!(pick(&["isocap", "minimize", "--N", "5", "--eigen"]), Objective::Eigen);
        assert!(Cli::try_parse_from(["isocap", "minimize", "--N", "5", "--p", "2", "--eigen"]).is_err());
    }
}
