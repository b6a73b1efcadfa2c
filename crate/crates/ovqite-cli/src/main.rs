//! Command-line front end: run configured evolutions, print static circuit
//! scaling tables, and sweep measurement budgets against accuracy targets.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use ovqite::{
    count_circuits, exact_ground_energy, run_evolution, Algorithm, EstimatorMode, HeaAnsatz,
    MeasurementStrategy, SetName, TfimParams,
};

const EXIT_PARSE: u8 = 2;
const EXIT_CAPABILITY: u8 = 3;
const EXIT_SOLVER: u8 = 4;

/// Master-seed override honored by every subcommand.
const SEED_ENV: &str = "OVQITE_SEED";

#[derive(Parser)]
#[command(name = "ovqite", version, about = "Imaginary-time evolution benchmark driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured evolution and write trajectory, ledger and summary.
    Run {
        /// TOML experiment configuration.
        config: PathBuf,
    },
    /// Emit static per-step circuit counts across system sizes.
    Scaling {
        #[arg(long, default_value_t = 4)]
        n_min: usize,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 2)]
        n_step: usize,
        #[arg(long, default_value_t = 5)]
        layers: usize,
        /// Comma-separated algorithms (vqite, ovqite).
        #[arg(long, default_value = "vqite,ovqite")]
        algorithms: String,
        /// Comma-separated operator sets for the projected algorithm.
        #[arg(long, default_value = "S_H,S_IM")]
        sets: String,
        /// Comma-separated strategies (naive, grouped).
        #[arg(long, default_value = "naive,grouped")]
        strategies: String,
        /// Shots per circuit used to convert counts to measurements.
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        /// Output CSV path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run all three algorithm variants over a list of shot budgets and
    /// report measurements-to-target.
    Sweep {
        /// TOML experiment configuration providing model, ansatz, delta,
        /// steps and seed.
        config: PathBuf,
        /// Comma-separated shot counts (defaults to the config value).
        #[arg(long)]
        shots: Option<String>,
        /// Relative-energy-error target.
        #[arg(long, default_value_t = 1e-3)]
        target: f64,
        /// Output CSV path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Scaling {
            n_min,
            n_max,
            n_step,
            layers,
            algorithms,
            sets,
            strategies,
            shots,
            output,
        } => cmd_scaling(n_min, n_max, n_step, layers, &algorithms, &sets, &strategies, shots, output.as_deref()),
        Command::Sweep {
            config,
            shots,
            target,
            output,
        } => cmd_sweep(&config, shots.as_deref(), target, output.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Maps error kinds onto the documented exit codes: configuration and parse
/// problems are 2, capability limits 3, solver failures 4.
fn classify(e: &anyhow::Error) -> u8 {
    if let Some(lib) = e.downcast_ref::<ovqite::Error>() {
        return match lib {
            ovqite::Error::Capability(_) => EXIT_CAPABILITY,
            ovqite::Error::Solver(_) => EXIT_SOLVER,
            _ => EXIT_PARSE,
        };
    }
    EXIT_PARSE
}

fn seed_override() -> anyhow::Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(text) => {
            let seed = text
                .parse::<u64>()
                .map_err(|_| anyhow::anyhow!("{SEED_ENV} must be an unsigned integer, got '{text}'"))?;
            Ok(Some(seed))
        }
        Err(_) => Ok(None),
    }
}

fn write_or_print(path: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(p, contents)?;
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_run(config_path: &Path) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", config_path.display()))?;
    let config = ExperimentConfig::from_toml(&text)?;
    let seed = seed_override()?;
    let evolution = config.evolution_config(seed)?;
    let model = config.model_params();
    let ansatz = HeaAnsatz::new(model.n, config.ansatz.layers);

    let trajectory = run_evolution(&evolution, &model, &ansatz, None, None)?;

    let provenance = vec![
        ("config_hash", config.hash()?),
        ("seed", evolution.seed.to_string()),
    ];
    let out_path = PathBuf::from(&config.output.path);
    write_or_print(Some(&out_path), &ovqite::trajectory_csv(&trajectory, &provenance))?;
    write_or_print(
        Some(&sibling_path(&out_path, "ledger.csv")),
        &ovqite::ledger_csv(&trajectory, &provenance),
    )?;

    let final_rel_error = trajectory.final_rel_error().unwrap_or(f64::NAN);
    let total_measurements = trajectory
        .records
        .last()
        .map(|r| r.measurements_cumulative)
        .unwrap_or(0);
    let summary = format!(
        "config_hash = \"{}\"\nseed = {}\nsteps = {}\nground_energy = {}\nfinal_rel_error = {}\ntotal_measurements = {}\naborted = {}\n",
        provenance[0].1,
        evolution.seed,
        trajectory.records.len(),
        trajectory.ground_energy,
        final_rel_error,
        total_measurements,
        trajectory.aborted.is_some(),
    );
    write_or_print(Some(&sibling_path(&out_path, "summary.toml")), &summary)?;
    println!(
        "wrote {} ({} rows); final rel_error {final_rel_error:.3e}, total measurements {total_measurements}",
        out_path.display(),
        trajectory.records.len(),
    );

    if let Some(reason) = &trajectory.aborted {
        eprintln!("solver failure aborted the run: {reason}");
        return Ok(ExitCode::from(EXIT_SOLVER));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> anyhow::Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| anyhow::anyhow!("invalid {what} '{s}'"))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_scaling(
    n_min: usize,
    n_max: usize,
    n_step: usize,
    layers: usize,
    algorithms: &str,
    sets: &str,
    strategies: &str,
    shots: u64,
    output: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let algorithms: Vec<Algorithm> = parse_list(algorithms, "algorithm")?;
    let sets: Vec<SetName> = parse_list(sets, "operator set")?;
    let strategies: Vec<MeasurementStrategy> = strategies
        .split(',')
        .map(|s| match s.trim() {
            "naive" => Ok(MeasurementStrategy::Naive),
            "grouped" => Ok(MeasurementStrategy::Grouped),
            other => Err(anyhow::anyhow!("invalid strategy '{other}'")),
        })
        .collect::<anyhow::Result<_>>()?;
    if n_step == 0 {
        anyhow::bail!("n_step must be >= 1");
    }

    let mut csv = String::from(
        "algorithm,set,n,layers,n_params,strategy,m_phase,v_phase,g_phase,b_phase,energy_phase,anticommutator_circuits,total_circuits,measurements_per_step,measurements_per_qubit\n",
    );
    for &algorithm in &algorithms {
        let set_choices: Vec<Option<SetName>> = match algorithm {
            Algorithm::Vqite => vec![None],
            Algorithm::Ovqite => sets.iter().copied().map(Some).collect(),
        };
        for set_name in set_choices {
            let mut n = n_min;
            while n <= n_max {
                let params = TfimParams::new(n, 1.0, 0.5);
                let h = ovqite::build_tfim(&params)?;
                let set = match set_name {
                    Some(name) => Some(ovqite::operator_set(&params, name)?),
                    None => None,
                };
                let ansatz = HeaAnsatz::new(n, layers);
                for &strategy in &strategies {
                    let counts = count_circuits(algorithm, &h, set.as_ref(), &ansatz, strategy)?;
                    let anticommutators = match &set {
                        Some(s) => match strategy {
                            MeasurementStrategy::Naive => {
                                ovqite::anticommutator_naive_count(&h, s)?
                            }
                            MeasurementStrategy::Grouped => {
                                ovqite::anticommutator_grouped_count(&h, s)?
                            }
                        },
                        None => 0,
                    };
                    let total = counts.total();
                    let measurements = total * shots;
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                        algorithm,
                        set_name.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
                        n,
                        layers,
                        ansatz.num_parameters(),
                        strategy_label(strategy),
                        counts.phase(ovqite::CostPhase::DerivativeMatrix),
                        counts.phase(ovqite::CostPhase::TargetVector),
                        counts.phase(ovqite::CostPhase::MetricTensor),
                        counts.phase(ovqite::CostPhase::EnergyGradient),
                        counts.phase(ovqite::CostPhase::Energy),
                        anticommutators,
                        total,
                        measurements,
                        measurements as f64 / n as f64,
                    ));
                }
                n += n_step;
            }
        }
    }
    write_or_print(output, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn strategy_label(strategy: MeasurementStrategy) -> &'static str {
    match strategy {
        MeasurementStrategy::Naive => "naive",
        MeasurementStrategy::Grouped => "grouped",
    }
}

fn cmd_sweep(
    config_path: &Path,
    shots: Option<&str>,
    target: f64,
    output: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", config_path.display()))?;
    let config = ExperimentConfig::from_toml(&text)?;
    let seed = seed_override()?.unwrap_or(config.evolution.seed);
    let shot_list: Vec<u64> = match shots {
        Some(list) => parse_list(list, "shot count")?,
        None => vec![config
            .evolution
            .shots
            .ok_or_else(|| anyhow::anyhow!("config has no shots; pass --shots"))?],
    };

    let model = config.model_params();
    let ansatz = HeaAnsatz::new(model.n, config.ansatz.layers);
    let h = ovqite::build_tfim(&model)?;
    let e0 = exact_ground_energy(&h)?;

    let variants: [(Algorithm, Option<SetName>); 3] = [
        (Algorithm::Vqite, None),
        (Algorithm::Ovqite, Some(SetName::SH)),
        (Algorithm::Ovqite, Some(SetName::SIM)),
    ];
    let mut csv = String::from(
        "algorithm,set,shots,target,reached,steps_to_target,measurements_to_target\n",
    );
    for &(algorithm, set) in &variants {
        for &n_sh in &shot_list {
            let evolution = ovqite::EvolutionConfig {
                algorithm,
                operator_set: set,
                delta: config.evolution.delta,
                steps: config.evolution.steps,
                mode: EstimatorMode::Shots(n_sh),
                rcond: config.evolution.rcond,
                seed,
                solver: config.solver()?,
            };
            let trajectory = run_evolution(&evolution, &model, &ansatz, None, Some(e0))?;
            let crossing = trajectory
                .records
                .iter()
                .find(|r| r.rel_error <= target);
            let set_label = set.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
            match crossing {
                Some(r) => csv.push_str(&format!(
                    "{algorithm},{set_label},{n_sh},{target},true,{},{}\n",
                    r.step, r.measurements_cumulative
                )),
                None => csv.push_str(&format!(
                    "{algorithm},{set_label},{n_sh},{target},false,,not_reached\n"
                )),
            }
        }
    }
    write_or_print(output, &csv)?;
    Ok(ExitCode::SUCCESS)
}
