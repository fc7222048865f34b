use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hplan_bench::report;
use hplan_bench::runner;
use hplan_bench::spec::{parse_curriculum, parse_goal, BenchSpec, EnvSelector, Method};
use hplan_bench::BenchError;
use hplan_core::env::{random_env, save_env};
use hplan_core::skill_learn::registry_to_spec;
use hplan_core::PartialAssignment;

#[derive(Parser)]
#[command(name = "hplan", version, about = "Hierarchical planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials and write one CSV row per trial.
    Run(RunArgs),
    /// Generate a random task-graph domain file.
    Gen(GenArgs),
    /// Train with condition learning and compare learned and real conditions.
    Conditions(RunArgs),
    /// Train and write the resulting skill registry as JSON.
    ExportSkills(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Args)]
struct RunArgs {
    /// crafting, drawer, baking, file:PATH or random:n,lambda,p,seed
    #[arg(long, default_value = "crafting")]
    env: EnvSelector,
    /// hierarchical[+learn-skills][+learn-conditions], goal-regression, mcts:B, rrt:S or qlearn
    #[arg(long, default_value = "hierarchical+learn-skills")]
    method: Method,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Base seed; trial i uses seed + i.
    #[arg(long, env = "HPLAN_SEED", default_value_t = 0)]
    seed: u64,
    /// Goal such as `21` or `3=1,5=0`.
    #[arg(long, value_parser = parse_goal)]
    goal: Option<PartialAssignment>,
    /// Stage goals separated by `;`.
    #[arg(long, value_parser = parse_curriculum)]
    curriculum: Option<Vec<PartialAssignment>>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write zero plan times so output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

impl RunArgs {
    fn spec(&self) -> BenchSpec {
        BenchSpec {
            env: self.env.clone(),
            method: self.method,
            trials: self.trials,
            seed: self.seed,
            goal: self.goal.clone(),
            curriculum: self.curriculum.clone(),
        }
    }

    fn output(&self) -> Result<Box<dyn Write>, BenchError> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long = "noise", default_value_t = 0.0)]
    noise_p: f64,
    #[arg(long, env = "HPLAN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn run(args: &RunArgs) -> Result<(), BenchError> {
    let rows = runner::run_trials(&args.spec())?;
    let mut out = args.output()?;
    match args.format {
        Format::Csv => report::write_csv(&mut out, &rows, !args.no_timing)?,
        Format::Md => out.write_all(report::markdown(&rows, !args.no_timing).as_bytes())?,
    }
    out.flush()?;
    if !rows.is_empty() {
        eprintln!("{}", report::summary_line(&rows));
    }
    Ok(())
}

fn gen(args: &GenArgs) -> Result<(), BenchError> {
    if !(args.lambda >= 0.0 && args.lambda.is_finite()) || !(0.0..=1.0).contains(&args.noise_p) {
        return Err(BenchError::Usage("lambda must be >= 0 and noise in [0, 1]".to_owned()));
    }
    let env = random_env(args.n, args.lambda, args.noise_p, args.seed);
    save_env(&env, &args.out)?;
    Ok(())
}

fn conditions(args: &RunArgs) -> Result<(), BenchError> {
    let (rows, n_train) = runner::condition_rows(&args.spec())?;
    let mut out = args.output()?;
    match args.format {
        Format::Csv => report::write_conditions_csv(&mut out, &rows)?,
        Format::Md => out.write_all(report::conditions_markdown(&rows).as_bytes())?,
    }
    out.flush()?;
    let exact = rows.iter().filter(|r| r.exact).count();
    let subset = rows.iter().filter(|r| r.subset).count();
    eprintln!("n_train {n_train}, exact {exact}/{}, subset {subset}/{}", rows.len(), rows.len());
    Ok(())
}

fn export_skills(args: &RunArgs) -> Result<(), BenchError> {
    let registry = runner::trained_registry(&args.spec())?;
    let json = serde_json::to_string_pretty(&registry_to_spec(&registry)).expect("registry serializes");
    let mut out = args.output()?;
    writeln!(out, "{json}")?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Gen(a) => gen(a),
        Command::Conditions(a) => conditions(a),
        Command::ExportSkills(a) => export_skills(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
