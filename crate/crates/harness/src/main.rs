use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use zomax::output::output_root;
use zomax::{compare_study, mvi_study, run_experiment};
use zomax_core::diagnostics::{
    plan_constrained, plan_harmonic, plan_nonsmooth, plan_unconstrained, ConstrainedInput, HarmonicInput,
    HyperparamPlan, NonsmoothInput, UnconstrainedInput,
};

/// Zeroth-order min-max experiments. Outputs go under $ZOMAX_OUT (default: cwd).
#[derive(Parser)]
#[command(name = "zomax", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a config and write traces plus summary.csv.
    Run { config: PathBuf },
    /// Run the [[variant]] entries of a config and write compare.csv.
    Compare { config: PathBuf },
    /// Proximal MVI sampling study around a candidate point.
    Mvi { config: PathBuf },
    /// Print a hyperparameter plan.
    #[command(subcommand)]
    Plan(PlanCommand),
}

#[derive(Subcommand)]
enum PlanCommand {
    Unconstrained(UnconstrainedArgs),
    Constrained(ConstrainedArgs),
    Nonsmooth(NonsmoothArgs),
    Harmonic(HarmonicArgs),
}

#[derive(Args)]
struct UnconstrainedArgs {
    #[arg(long)]
    l1: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    r0: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    h2: f64,
    /// Joint dimension n + m.
    #[arg(long)]
    d: usize,
    /// Oracle noise level; plans the variance-reduced method when given.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct ConstrainedArgs {
    #[arg(long)]
    l1: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    r0: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    h: f64,
    /// Diameter of the feasible set.
    #[arg(long)]
    d_z: f64,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct NonsmoothArgs {
    #[arg(long)]
    l0: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    r0: f64,
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct HarmonicArgs {
    #[arg(long)]
    l1: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long)]
    r0: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    h2: f64,
    #[arg(long)]
    d: usize,
    /// `l` in mu_k = l / (k + 1).
    #[arg(long)]
    scale: f64,
}

fn print_plan(plan: &HyperparamPlan) {
    println!("source      {}", plan.source.describe());
    println!("mu_max      {:e}", plan.mu_max);
    println!("n_min       {}", plan.n_min);
    match plan.t_min {
        Some(t) => println!("t_min       {t}"),
        None => println!("t_min       -"),
    }
    println!("h_window    ({:e}, {:e}]", plan.h_window.0, plan.h_window.1);
    println!("h1_max      {:e}", plan.h1_max);
    if let Some(l) = plan.smoothed_l1 {
        println!("L1(f_mu)    {l:e}");
    }
    for w in &plan.warnings {
        println!("warning     {w}");
    }
}

fn plan(cmd: PlanCommand) -> Result<HyperparamPlan> {
    let plan = match cmd {
        PlanCommand::Unconstrained(a) => plan_unconstrained(&UnconstrainedInput {
            l1: a.l1,
            rho: a.rho,
            lambda: a.lambda,
            r0: a.r0,
            epsilon: a.epsilon,
            h2: a.h2,
            d: a.d,
            sigma: a.sigma,
        })?,
        PlanCommand::Constrained(a) => plan_constrained(&ConstrainedInput {
            l1: a.l1,
            rho: a.rho,
            lambda: a.lambda,
            r0: a.r0,
            epsilon: a.epsilon,
            h: a.h,
            d_z: a.d_z,
            d: a.d,
            sigma: a.sigma,
        })?,
        PlanCommand::Nonsmooth(a) => plan_nonsmooth(&NonsmoothInput {
            l0: a.l0,
            rho: a.rho,
            d: a.d,
            delta: a.delta,
            epsilon: a.epsilon,
            r0: a.r0,
            sigma: a.sigma,
        })?,
        PlanCommand::Harmonic(a) => plan_harmonic(&HarmonicInput {
            l1: a.l1,
            rho: a.rho,
            r0: a.r0,
            epsilon: a.epsilon,
            h2: a.h2,
            d: a.d,
            scale: a.scale,
        })?,
    };
    Ok(plan)
}

fn execute(cli: Cli) -> Result<()> {
    let root = output_root();
    match cli.cmd {
        Command::Run { config } => {
            let out = run_experiment(&config, &root)?;
            println!("{:>6} {:>14} {:>12} {:>10} {:>12} {:>8}", "seed", "objective", "ratio", "diag", "evals", "time_s");
            for r in &out.rows {
                println!(
                    "{:>6} {:>14.6e} {:>12.4e} {:>10.3e} {:>12} {:>8.2}",
                    r.seed,
                    r.final_objective,
                    r.objective_ratio(),
                    r.final_diag_norm,
                    r.function_evals,
                    r.wall_time_s
                );
                if let Some(a) = r.accuracy {
                    println!("{:>6} accuracy {a:.4}", "");
                }
            }
            println!("wrote {}", out.dir.display());
        }
        Command::Compare { config } => {
            let out = compare_study(&config, &root)?;
            for c in &out.curves {
                let f: Vec<f64> = c.rows.iter().map(|r| r.final_objective).collect();
                let (m, s) = zomax::output::mean_std(&f);
                println!("{:<24} final objective {m:.6e} +- {s:.3e}", c.label);
            }
            println!("wrote {}", out.dir.join("compare.csv").display());
        }
        Command::Mvi { config } => {
            let out = mvi_study(&config, &root)?;
            let r = &out.report;
            println!("samples            {}", r.samples);
            println!("min value          {:e}", r.min_value);
            println!("violating fraction {}", r.violating_fraction);
            println!("wrote {}", out.dir.join("mvi_histogram.csv").display());
        }
        Command::Plan(cmd) => print_plan(&plan(cmd)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
