//! fairlip: solve, audit, and stress-test Lipschitz-fair classifiers.
//!
//! Exit codes: 0 success, 2 input/validation failure, 3 internal error.

mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fairlip::affirmative::{evaluate_composed, run_affirmative_action};
use fairlip::expmech::{exp_mechanism, expected_loss as mech_expected_loss, lipschitz_constant};
use fairlip::fairness::solve_fairness;
use fairlip::parity::{bias_inf, bias_tv, earthmover, parity_gap, EmForm};
use fairlip::{check_lipschitz, Error, ProbMetricKind, StochasticMap};

use files::{fmt_sig, LoadedInstance, MappingFile};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Internal(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Internal(_) => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    /// Total variation
    Tv,
    /// Relative l-infinity
    Inf,
}

impl From<KindArg> for ProbMetricKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Tv => ProbMetricKind::TotalVariation,
            KindArg::Inf => ProbMetricKind::RelativeLinf,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormArg {
    /// Marginal-equality earthmover LP (any distance function)
    General,
    /// Net-flow form (requires a verified metric)
    Metric,
}

#[derive(Parser)]
#[command(name = "fairlip", version, about = "Fair classification via Lipschitz-constrained linear programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the fairness LP and report the optimal expected loss
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Tv)]
        kind: KindArg,
        /// Write the optimal mapping to this path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Worst-case parity bias between two groups over Lipschitz maps
    Bias {
        instance: PathBuf,
        #[arg(long)]
        s: String,
        #[arg(long)]
        t: String,
        #[arg(long, value_enum, default_value_t = KindArg::Tv)]
        kind: KindArg,
        /// Write the witness mapping to this path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Earthmover distance between two groups
    Em {
        instance: PathBuf,
        #[arg(long)]
        s: String,
        #[arg(long)]
        t: String,
        #[arg(long, value_enum, default_value_t = FormArg::General)]
        form: FormArg,
    },
    /// Fair affirmative action: enforce parity, relax cross-group Lipschitz
    Aa {
        instance: PathBuf,
        /// Protected group (declared with "members")
        #[arg(long)]
        s: String,
        /// Other group; defaults to the complement of --s
        #[arg(long)]
        t: Option<String>,
        /// Statistical-parity slack
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = KindArg::Tv)]
        kind: KindArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exponential mechanism over the instance's metric space
    Expmech {
        instance: PathBuf,
        /// Exponent multiplier applied as e^{-scale * d(x,y)}
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a mapping: Lipschitz violations and per-group-pair parity gaps
    Check {
        instance: PathBuf,
        mapping: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Tv)]
        kind: KindArg,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Input(_) => ExitCode::from(2),
                CliError::Internal(_) => ExitCode::from(3),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { instance, kind, out } => {
            let loaded = LoadedInstance::read(&instance)?;
            let solution = solve_fairness(&loaded.instance, kind.into())?;
            println!("opt={}", fmt_sig(solution.opt_value));
            if let Some(path) = out {
                MappingFile::from_map(
                    loaded.instance.space().ids(),
                    loaded.instance.outcomes(),
                    &solution.map,
                )
                .write(&path)?;
            }
            Ok(())
        }
        Command::Bias { instance, s, t, kind, out } => {
            let loaded = LoadedInstance::read(&instance)?;
            let gs = loaded.group_distribution(&s)?;
            let gt = loaded.group_distribution(&t)?;
            let report = match kind {
                KindArg::Tv => bias_tv(loaded.instance.space(), &gs, &gt)?,
                KindArg::Inf => bias_inf(loaded.instance.space(), &gs, &gt)?,
            };
            println!("bias={}", fmt_sig(report.value));
            if let Some(path) = out {
                MappingFile::from_map(
                    loaded.instance.space().ids(),
                    &["0".to_string(), "1".to_string()],
                    &report.witness,
                )
                .write(&path)?;
            }
            Ok(())
        }
        Command::Em { instance, s, t, form } => {
            let loaded = LoadedInstance::read(&instance)?;
            let gs = loaded.group_distribution(&s)?;
            let gt = loaded.group_distribution(&t)?;
            let mut space = loaded.instance.space().clone();
            let form = match form {
                FormArg::General => EmForm::General,
                FormArg::Metric => {
                    // The net-flow form is only valid on a true metric, so
                    // verify the triangle inequality on demand.
                    if !space.verify_metric() {
                        return Err(CliError::Input(
                            "metric does not satisfy the triangle inequality; use --form general"
                                .into(),
                        ));
                    }
                    EmForm::MetricSimplified
                }
            };
            let plan = earthmover(&space, &gs, &gt, form)?;
            println!("cost={}", fmt_sig(plan.cost));
            Ok(())
        }
        Command::Aa { instance, s, t, epsilon, kind, out } => {
            let loaded = LoadedInstance::read(&instance)?;
            let s_members = loaded.group_members(&s)?;
            let t_members = match t {
                Some(name) => loaded.group_members(&name)?,
                None => loaded.complement(&s_members),
            };
            let composed = run_affirmative_action(
                &loaded.instance,
                &s_members,
                &t_members,
                epsilon,
                kind.into(),
            )?;
            let report = evaluate_composed(&composed, loaded.instance.space(), epsilon)?;
            // opt is the T-side fairness LP value (the reweighted loss), so an
            // empty protected group reproduces `solve` exactly.
            let t_restricted = loaded.instance.space().restrict(&composed.t_members)?;
            let inner_opt = {
                // recompute from the inner map under the reweighted loss
                let plan = &composed.plan;
                let lprime = fairlip::affirmative::reweight_loss(
                    plan,
                    &loaded.instance,
                    &composed.s_members,
                    &composed.t_members,
                )?;
                let t_inst = fairlip::FairnessInstance::new(
                    t_restricted,
                    loaded.instance.outcomes().to_vec(),
                    lprime,
                )?;
                fairlip::fairness::expected_loss(&t_inst, &composed.inner)?
            };
            println!("em_cost={}", fmt_sig(composed.plan.em_cost));
            println!("opt={}", fmt_sig(inner_opt));
            println!("parity_gap={}", fmt_sig(report.parity_gap));
            if let Some(path) = out {
                MappingFile::from_map(
                    loaded.instance.space().ids(),
                    loaded.instance.outcomes(),
                    &composed.map,
                )
                .write(&path)?;
            }
            Ok(())
        }
        Command::Expmech { instance, scale, out } => {
            let loaded = LoadedInstance::read(&instance)?;
            let mech = exp_mechanism(loaded.instance.space(), scale)?;
            println!(
                "expected_loss={}",
                fmt_sig(mech_expected_loss(&mech, loaded.instance.space())?)
            );
            println!(
                "lipschitz_constant={}",
                fmt_sig(lipschitz_constant(&mech, loaded.instance.space())?)
            );
            if let Some(path) = out {
                MappingFile::from_map(
                    loaded.instance.space().ids(),
                    loaded.instance.space().ids(),
                    &mech.map,
                )
                .write(&path)?;
            }
            Ok(())
        }
        Command::Check { instance, mapping, kind } => {
            let loaded = LoadedInstance::read(&instance)?;
            let (file, map) = MappingFile::read(&mapping)?;
            if file.individuals != loaded.instance.space().ids() {
                return Err(CliError::Input(format!(
                    "{}: individuals do not match the instance",
                    mapping.display()
                )));
            }
            let tol = check_tolerance()?;
            let report = check_lipschitz(&map, loaded.instance.space(), kind.into(), tol)?;
            println!("max_violation={}", fmt_sig(report.max_violation));
            match report.witness {
                Some((x, y)) => println!(
                    "argmax_pair={},{}",
                    loaded.instance.space().ids()[x],
                    loaded.instance.space().ids()[y]
                ),
                None => println!("argmax_pair=none"),
            }
            println!("lipschitz={}", report.is_lipschitz());
            print_parity_gaps(&loaded, &map)?;
            Ok(())
        }
    }
}

/// Check tolerance, overridable through FAIRLIP_TOL.
fn check_tolerance() -> Result<f64> {
    match std::env::var("FAIRLIP_TOL") {
        Ok(raw) => raw
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| CliError::Input(format!("FAIRLIP_TOL={raw:?} is not a valid tolerance"))),
        Err(_) => Ok(fairlip::LIPSCHITZ_TOL),
    }
}

fn print_parity_gaps(loaded: &LoadedInstance, map: &StochasticMap) -> Result<()> {
    let names = loaded.group_names();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let ga = loaded.group_distribution(a)?;
            let gb = loaded.group_distribution(b)?;
            let gap = parity_gap(map, &ga, &gb)?;
            println!("parity_gap[{a},{b}]={}", fmt_sig(gap));
        }
    }
    Ok(())
}
