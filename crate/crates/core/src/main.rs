use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use colopt::anneal::{anneal, Schedule};
use colopt::encode::{co_qubo, CoEncoding, CoEncodingOptions, QuboModel};
use colopt::harness::{
    generate_instance, run_experiment, run_kp_demo, with_group_weights, write_allocation_csv,
    write_exposure_csv, write_kp_summary, ExperimentConfig, GeneratorSpec, HarnessError,
};
use colopt::lpref::{solve_lp, LpProblem, LpStatus};
use colopt::model::{evaluate_allocation, KnapsackInstance};

#[derive(Parser)]
#[command(name = "colopt", version, about = "Collateral allocation via QUBO encodings, simulated annealing and an LP baseline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file (meaning depends on the subcommand).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed overriding the one in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Balanced,
    Unbalanced,
}

impl From<EncodingArg> for CoEncoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Balanced => CoEncoding::Balanced,
            EncodingArg::Unbalanced => CoEncoding::Unbalanced,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance (config: generator spec).
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the LP relaxation (config: experiment config).
    SolveLp {
        #[command(flatten)]
        common: Common,
        /// Instance file; overrides the configuration.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Also write the problem as MPS text to this file.
        #[arg(long)]
        mps: Option<PathBuf>,
    },
    /// Build a collateral QUBO and write it as JSON (config: experiment config).
    Encode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "unbalanced")]
        encoding: EncodingArg,
    },
    /// Anneal a QUBO JSON file (config: schedule).
    Anneal {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        qubo: PathBuf,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        reads: Option<usize>,
    },
    /// Run a full experiment and write the report bundle (config: experiment config).
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        workers: Option<usize>,
        /// Fill the runtime_ms column.
        #[arg(long)]
        timing: bool,
    },
    /// Knapsack demo on the ten-item benchmark (config: schedule).
    Kp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        timing: bool,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn experiment_config(common: &Common, instance: Option<PathBuf>) -> Result<ExperimentConfig, HarnessError> {
    let mut c = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = instance {
        c.instance = Some(p);
    }
    if let Some(s) = common.seed {
        c.generator.seed = s;
        c.schedule.seed = s;
        c.seeds = vec![s];
    }
    Ok(c)
}

fn schedule_config(common: &Common) -> Result<Schedule, HarnessError> {
    let mut s: Schedule = match &common.config {
        Some(p) => read_json(p)?,
        None => Schedule::default(),
    };
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Generate { common } => {
            let mut spec: GeneratorSpec = match &common.config {
                Some(p) => read_json(p)?,
                None => GeneratorSpec::default(),
            };
            if let Some(s) = common.seed {
                spec.seed = s;
            }
            emit(&common.out, &generate_instance(&spec)?.to_json())
        }
        Command::SolveLp { common, instance, mps } => {
            let config = experiment_config(&common, instance)?;
            config.validate()?;
            let inst = config.load_instance()?;
            if let Some(p) = mps {
                let problem = LpProblem::from_instance(&inst).map_err(|e| HarnessError::Config(e.to_string()))?;
                fs::write(p, problem.to_mps("COLLATERAL"))?;
            }
            let lp = solve_lp(&inst).map_err(|e| HarnessError::Config(e.to_string()))?;
            println!(
                "status {} objective {} iterations {}",
                lp.status.name(),
                lp.objective,
                lp.iterations
            );
            if lp.status != LpStatus::Optimal {
                return Err(HarnessError::InfeasibleLp(lp.status.name().into()));
            }
            if let Some(dir) = &common.out {
                fs::create_dir_all(dir)?;
                let report = evaluate_allocation(&lp.allocation, &inst, config.epsilon)?;
                write_allocation_csv(&dir.join("allocation_lp.csv"), &lp.allocation)?;
                write_exposure_csv(&dir.join("exposure_lp.csv"), &inst, &report)?;
                fs::write(
                    dir.join("lp.json"),
                    serde_json::to_string_pretty(&lp).expect("solution serializes"),
                )?;
            }
            Ok(())
        }
        Command::Encode { common, instance, encoding } => {
            let config = experiment_config(&common, instance)?;
            config.validate()?;
            let inst = config.load_instance()?;
            let enc = CoEncoding::from(encoding);
            let w = with_group_weights(enc, &config.weights_for(enc), inst.groups.is_some());
            let opts = CoEncodingOptions {
                bits: config.bits,
                normalize: config.normalize,
                cost_quantity_weighted: config.cost_quantity_weighted,
            };
            let q = co_qubo(enc, &inst, &opts, &w)?;
            for warning in q.warnings() {
                eprintln!("warning: {warning}");
            }
            emit(&common.out, &q.to_json())
        }
        Command::Anneal { common, qubo, sweeps, reads } => {
            let text = fs::read_to_string(&qubo)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", qubo.display())))?;
            let model = QuboModel::<f64>::from_json(&text)?;
            let mut s = schedule_config(&common)?;
            s.sweeps = sweeps.unwrap_or(s.sweeps);
            s.reads = reads.unwrap_or(s.reads);
            let set = anneal(&model, &s)?;
            println!("best energy {} ({} distinct samples)", set.best().energy, set.samples.len());
            if let Some(dir) = &common.out {
                fs::create_dir_all(dir)?;
                set.write_csv(fs::File::create(dir.join("samples.csv"))?)?;
                fs::write(dir.join("samples.json"), set.metadata_json())?;
            }
            Ok(())
        }
        Command::Run { common, workers, timing } => {
            let mut config = experiment_config(&common, None)?;
            if let Some(dir) = &common.out {
                config.output_dir = dir.clone();
            }
            if workers.is_some() {
                config.workers = workers;
            }
            config.record_runtime |= timing;
            let bundle = run_experiment(&config)?;
            println!("encoding,seed,objective,gap,feasible");
            println!("lp,,{},0,{}", bundle.lp.objective, bundle.lp.status.name());
            for r in &bundle.runs {
                println!(
                    "{},{},{},{},{}",
                    r.encoding.name(),
                    r.seed,
                    r.report.objective,
                    r.gap.map(|g| g.to_string()).unwrap_or_default(),
                    r.report.feasible_within
                );
            }
            if bundle.lp.status != LpStatus::Optimal {
                return Err(HarnessError::InfeasibleLp(bundle.lp.status.name().into()));
            }
            println!("report written to {}", config.output_dir.display());
            Ok(())
        }
        Command::Kp { common, timing } => {
            let s = schedule_config(&common)?;
            let rows = run_kp_demo(&KnapsackInstance::ten_item_benchmark(), &s, timing)?;
            println!("encoding,parameters,value,weight,exact,optimal");
            for r in &rows {
                println!(
                    "{},{},{},{},{},{}",
                    r.encoding, r.parameters, r.value, r.weight, r.exact_value, r.optimal
                );
            }
            if let Some(dir) = &common.out {
                fs::create_dir_all(dir)?;
                write_kp_summary(&dir.join("kp_summary.csv"), &rows)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
