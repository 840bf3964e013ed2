//! Command-line workflow for the corroborative verification toolkit:
//! simulation campaigns, trace pipelines, model construction, property
//! checking, experiments and report generation.
//!
//! Exit codes: 0 success, 1 property violations found, 2 errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use swarmverify::checker::{
    evaluate, run_experiment, write_experiment_csv, write_experiment_svg, CheckResult,
    SweepSpec,
};
use swarmverify::lfsim::{run_campaign, BehaviourState};
use swarmverify::macromodel::{estimate_params, evolve, write_trajectory_csv, PopulationVector};
use swarmverify::markov::{build_model, export_model, import_model, BuildMode, MarkovModel};
use swarmverify::pipeline::{
    average_trials, clean_campaign, discretize_ewd, downsample_lf, downsample_physical,
    ingest_hf, read_clean_csv, write_bins_json, write_clean_csv, write_discrete_csv,
    zone_time_stats, CleanSeries, DiscreteSeries,
};
use swarmverify::propspec::{bind, parse, parse_file, NamedProperty};
use swarmverify::report::{analyze_source, Report, SourceReport};
use swarmverify::scenario::{build_zone_map, default_scenario, ScenarioConfig};
use swarmverify::{Error, Result};

/// Environment variable naming the default output root for run
/// directories.
const OUT_ROOT_ENV: &str = "SWARMVERIFY_OUT_ROOT";

/// Default property pack evaluated by `all`: red/amber reachability,
/// red-zone filters, cumulative rewards, level-progress queries and the
/// two CTL requirement checks.
const DEFAULT_PACK: &str = r#"
// Probability of entering the red / amber zones within T timesteps.
red_within_t: P=? [ F<=T "unsafe_fireexitsblocked" ]
amber_critical_within_t: P=? [ F<=T "unsafe_amber_critical" ]
amber_within_t: P=? [ F<=T "unsafe_amber" ]
// States with a red-zone successor.
red_filter_sum: filter(sum, P=? [ X "unsafe_red" ])
red_filter_avg: filter(avg, P=? [ X "unsafe_red" ])
// Accumulated occupancy of main vs avoidance states.
reward_main: R{"main_states"}=? [C<=T]
reward_avoidance: R{"avoidance_states"}=? [C<=T]
// Probability-level queries over the discretized channels.
level_probe: P=? [ F<=T (s=state&l=level&timestep=T) ]
searching_high_first_half: P=? [ F[0,99] (s=1&l>=3) ]
dropoff_high_second_half: P=? [ F[100,199] (s=4&l>=3) ]
dropoff_until_searching: P>=0.25 [ s=4 U<=99.0 s=1 ]
// Requirement invariants.
req1_fire_exit: A [ G !"unsafe_red" ]
req2_density: A [ G !"density_violation" ]
"#;

#[derive(Parser)]
#[command(
    name = "swarmverify",
    version,
    about = "Corroborative verification workflow for robot swarm traces"
)]
struct Cli {
    /// Cap worker threads for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a campaign of low-fidelity simulation trials.
    Simulate(SimulateArgs),
    /// Clean a campaign into an averaged 1 Hz probability series.
    Clean(CleanArgs),
    /// Discretize a cleaned series into probability levels.
    Discretize(DiscretizeArgs),
    /// Ingest a high-fidelity per-second position CSV.
    IngestHf(IngestHfArgs),
    /// Downsample an irregular physical recording to 1 Hz.
    DownsamplePhys(DownsamplePhysArgs),
    /// Zone occupancy statistics over cleaned series.
    Stats(StatsArgs),
    /// Estimate population-model parameters and evolve the model.
    Macro(MacroArgs),
    /// Build a labelled chain from a cleaned series.
    BuildModel(BuildModelArgs),
    /// Check a property file against a model.
    Check(CheckArgs),
    /// Sweep one property over a variable range.
    Experiment(ExperimentArgs),
    /// Generate the cross-source report for a run directory.
    Report(ReportArgs),
    /// Full workflow: simulate, clean, discretize, build, check, report.
    All(AllArgs),
}

#[derive(Args)]
struct ConfigOpt {
    /// Scenario configuration TOML; defaults to the published setup.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigOpt {
    fn load(&self) -> Result<ScenarioConfig> {
        match &self.config {
            Some(path) => ScenarioConfig::from_toml_file(path),
            None => Ok(default_scenario()),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Output campaign directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reduced 10-trial, 1000-step preset for quick runs.
    #[arg(long)]
    smoke: bool,
    /// Overwrite an existing output directory.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    config: ConfigOpt,
}

#[derive(Args)]
struct CleanArgs {
    /// Campaign directory produced by `simulate`.
    #[arg(long)]
    campaign: PathBuf,
    /// Averaged cleaned series CSV.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigOpt,
}

#[derive(Args)]
struct DiscretizeArgs {
    /// Cleaned series CSV.
    #[arg(long)]
    clean: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Bin-edge JSON output.
    #[arg(long)]
    bins: PathBuf,
    #[arg(long, default_value_t = 5)]
    levels: usize,
}

#[derive(Args)]
struct IngestHfArgs {
    /// High-fidelity CSV (`robot_id,t_s,x_m,y_m`, whole seconds).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigOpt,
}

#[derive(Args)]
struct DownsamplePhysArgs {
    /// Raw recording CSV (`robot_id,t_s,x_m,y_m`, float seconds).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Recording duration in seconds.
    #[arg(long, default_value_t = 200)]
    duration: usize,
    /// Availability report JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigOpt,
}

#[derive(Args)]
struct StatsArgs {
    /// Cleaned 1 Hz series CSVs, one per trial.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    /// Statistics JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MacroArgs {
    /// Campaign directory with per-trial state traces.
    #[arg(long)]
    campaign: PathBuf,
    /// Trajectory CSV output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Cap on the avoidance sojourn horizon.
    #[arg(long, default_value_t = 50)]
    t_s_cap: usize,
    /// Estimated parameters JSON output.
    #[arg(long)]
    params_out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildModelArgs {
    /// Cleaned series CSV.
    #[arg(long)]
    clean: PathBuf,
    /// Model file output.
    #[arg(long)]
    out: PathBuf,
    /// `joint` or one of searching|pickup|dropoff|avoid_s|avoid_p|avoid_d.
    #[arg(long, default_value = "searching")]
    mode: String,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    #[arg(long)]
    bins_out: Option<PathBuf>,
    #[arg(long)]
    discrete_out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Model file produced by `build-model`.
    #[arg(long)]
    model: PathBuf,
    /// Property file: one property per line, optional `name:` prefixes.
    #[arg(long)]
    props: PathBuf,
    /// Parameter definitions, e.g. `--define T=50`.
    #[arg(long = "define", value_name = "NAME=VALUE")]
    defines: Vec<String>,
    /// Results CSV (property_name,kind,value_or_bool,details_path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for counterexample/witness traces.
    #[arg(long)]
    details: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    model: PathBuf,
    /// Property text referencing the sweep variable.
    #[arg(long)]
    prop: String,
    /// Sweep of the form `NAME=START:STEP:STOP`.
    #[arg(long)]
    sweep: String,
    #[arg(long = "define", value_name = "NAME=VALUE")]
    defines: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG plot.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory holding model_{lf,hf,phys}.txt and optional
    /// zone_stats.json.
    #[arg(long)]
    run: PathBuf,
}

#[derive(Args)]
struct AllArgs {
    /// Run directory for all outputs.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    smoke: bool,
    #[arg(long)]
    force: bool,
    /// Stop immediately when the property pack reports a violation.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    config: ConfigOpt,
}

/// Tool version, config hash and stage record sufficient to reproduce a
/// run bit-for-bit (datasets and results are seed-deterministic).
#[derive(Serialize)]
struct RunManifest {
    tool_version: String,
    created_unix_s: u64,
    config_sha256: String,
    base_seed: u64,
    n_trials: usize,
    stages: Vec<String>,
    outputs: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.cmd) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether property violations were found.
fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Simulate(args) => cmd_simulate(args).map(|_| false),
        Cmd::Clean(args) => cmd_clean(args).map(|_| false),
        Cmd::Discretize(args) => cmd_discretize(args).map(|_| false),
        Cmd::IngestHf(args) => cmd_ingest_hf(args).map(|_| false),
        Cmd::DownsamplePhys(args) => cmd_downsample_phys(args).map(|_| false),
        Cmd::Stats(args) => cmd_stats(args).map(|_| false),
        Cmd::Macro(args) => cmd_macro(args).map(|_| false),
        Cmd::BuildModel(args) => cmd_build_model(args).map(|_| false),
        Cmd::Check(args) => cmd_check(args),
        Cmd::Experiment(args) => cmd_experiment(args).map(|_| false),
        Cmd::Report(args) => cmd_report(&args.run).map(|_| false),
        Cmd::All(args) => cmd_all(args),
    }
}

fn default_out(name: &str) -> PathBuf {
    match std::env::var_os(OUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join(name),
        None => PathBuf::from(name),
    }
}

fn apply_smoke(config: &mut ScenarioConfig) {
    config.trial_duration_s = 20.0;
    config.timesteps_per_trial = 1000;
}

fn load_campaign_config(campaign: &Path) -> Result<ScenarioConfig> {
    let path = campaign.join("config.toml");
    if path.exists() {
        ScenarioConfig::from_toml_file(&path)
    } else {
        Ok(default_scenario())
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut config = args.config.load()?;
    let mut trials = args.trials;
    if args.smoke {
        apply_smoke(&mut config);
        trials = trials.min(10);
    }
    let zones = build_zone_map(&config)?;
    let out = args.out.unwrap_or_else(|| default_out("campaign"));
    let summary = run_campaign(&config, &zones, trials, args.seed, &out, args.force)?;
    config.to_toml_file(&out.join("config.toml"))?;
    println!(
        "simulated {} trials (seed {}): {} deposits, {} red samples, {} amber samples",
        summary.n_trials,
        summary.base_seed,
        summary.total_deposits,
        summary.red_samples,
        summary.amber_samples
    );
    Ok(())
}

/// Clean + downsample + average a campaign into one 1 Hz series.
fn averaged_series(campaign: &Path, config: &ScenarioConfig) -> Result<CleanSeries> {
    let zones = build_zone_map(config)?;
    let trials = clean_campaign(campaign, &zones, config)?;
    let sampled: Vec<CleanSeries> = trials.iter().map(downsample_lf).collect();
    average_trials(&sampled)
}

fn cmd_clean(args: CleanArgs) -> Result<()> {
    let config = match &args.config.config {
        Some(_) => args.config.load()?,
        None => load_campaign_config(&args.campaign)?,
    };
    let series = averaged_series(&args.campaign, &config)?;
    write_clean_csv(&args.out, &series)?;
    println!("cleaned {} samples -> {}", series.len(), args.out.display());
    Ok(())
}

fn cmd_discretize(args: DiscretizeArgs) -> Result<()> {
    let series = read_clean_csv(&args.clean)?;
    let outcome = discretize_ewd(&series, args.levels)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    write_discrete_csv(&args.out, &outcome.series)?;
    write_bins_json(&args.bins, &outcome.series)?;
    println!(
        "discretized {} samples into L1..L{} -> {}",
        outcome.series.len(),
        args.levels,
        args.out.display()
    );
    Ok(())
}

fn cmd_ingest_hf(args: IngestHfArgs) -> Result<()> {
    let config = args.config.load()?;
    let zones = build_zone_map(&config)?;
    let ingest = ingest_hf(&args.input, &zones)?;
    write_clean_csv(&args.out, &ingest.series)?;
    if ingest.gaps.is_empty() {
        println!("ingested {} samples, no gaps", ingest.series.len());
    } else {
        println!(
            "ingested {} samples with {} missing (second, robot) entries",
            ingest.series.len(),
            ingest.gaps.len()
        );
    }
    Ok(())
}

fn cmd_downsample_phys(args: DownsamplePhysArgs) -> Result<()> {
    let config = args.config.load()?;
    let zones = build_zone_map(&config)?;
    let ingest = downsample_physical(&args.input, &zones, args.duration)?;
    write_clean_csv(&args.out, &ingest.series)?;
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&ingest.report)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
    }
    println!(
        "downsampled to {} samples; availability {:.3}, max gap {:.1} s",
        ingest.series.len(),
        ingest.report.availability,
        ingest.report.max_gap_s
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let series: Vec<CleanSeries> = args
        .inputs
        .iter()
        .map(|p| read_clean_csv(p))
        .collect::<Result<_>>()?;
    let stats = zone_time_stats(&series)?;
    println!(
        "mean seconds per trial: red {:.1}, amber-critical {:.1}, amber-single {:.1}",
        stats.red_s, stats.amber_critical_s, stats.amber_single_s
    );
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&stats)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn cmd_macro(args: MacroArgs) -> Result<()> {
    let estimate = estimate_params(&args.campaign, args.t_s_cap)?;
    let config = load_campaign_config(&args.campaign)?;
    let start = PopulationVector::all_searching(
        estimate.params.t_s,
        config.n_robots as f64,
    );
    let trajectory = evolve(&start, &estimate.params, args.steps)?;
    write_trajectory_csv(&args.out, &trajectory)?;
    if let Some(path) = &args.params_out {
        let json = serde_json::to_string_pretty(&estimate)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
    }
    let p = &estimate.params;
    println!(
        "estimated P_s={:.4} P_p={:.4} P_a={:.4} T_s={}; evolved {} steps",
        p.p_s, p.p_p, p.p_a, p.t_s, args.steps
    );
    Ok(())
}

fn parse_mode(text: &str) -> Result<BuildMode> {
    let channel = match text {
        "joint" => return Ok(BuildMode::Joint),
        "searching" => BehaviourState::Searching,
        "pickup" => BehaviourState::Pickup,
        "dropoff" => BehaviourState::Dropoff,
        "avoid_s" => BehaviourState::AvoidanceS,
        "avoid_p" => BehaviourState::AvoidanceP,
        "avoid_d" => BehaviourState::AvoidanceD,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown build mode `{other}`"
            )))
        }
    };
    Ok(BuildMode::PerStateChain(channel))
}

fn build_from_clean(
    clean: &Path,
    mode: BuildMode,
    levels: usize,
) -> Result<(MarkovModel, DiscreteSeries, Vec<String>)> {
    let series = read_clean_csv(clean)?;
    let outcome = discretize_ewd(&series, levels)?;
    let model = build_model(&outcome.series, mode)?;
    Ok((model, outcome.series, outcome.warnings))
}

fn cmd_build_model(args: BuildModelArgs) -> Result<()> {
    let mode = parse_mode(&args.mode)?;
    let (model, series, warnings) = build_from_clean(&args.clean, mode, args.levels)?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    export_model(&model, &args.out)?;
    if let Some(path) = &args.bins_out {
        write_bins_json(path, &series)?;
    }
    if let Some(path) = &args.discrete_out {
        write_discrete_csv(path, &series)?;
    }
    println!(
        "built chain with {} states, {} transitions -> {}",
        model.n_states(),
        model.transitions.len(),
        args.out.display()
    );
    Ok(())
}

fn parse_defines(pairs: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut defines = BTreeMap::new();
    for pair in pairs {
        let (name, value) = pair.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("define `{pair}` is not NAME=VALUE"))
        })?;
        let value: f64 = value.parse().map_err(|_| {
            Error::InvalidConfig(format!("define `{pair}` has a non-numeric value"))
        })?;
        defines.insert(name.trim().to_string(), value);
    }
    Ok(defines)
}

fn result_kind(result: &CheckResult) -> &'static str {
    match result {
        CheckResult::Probability(_) => "probability",
        CheckResult::Reward(_) => "reward",
        CheckResult::Decision { .. } => "decision",
        CheckResult::Filter(_) => "filter",
        CheckResult::Ctl(_) => "ctl",
    }
}

fn property_name(prop: &NamedProperty, index: usize) -> String {
    prop.name
        .clone()
        .unwrap_or_else(|| format!("property_{index}"))
}

/// Writes a counterexample/witness trace as CSV; states carry their
/// `timestep` valuation where defined.
fn write_trace(path: &Path, model: &MarkovModel, trace: &[usize]) -> Result<()> {
    let mut out = String::from("step,state,timestep\n");
    for (step, &state) in trace.iter().enumerate() {
        let timestep = model.states[state]
            .get("timestep")
            .map(|t| t.to_string())
            .unwrap_or_default();
        out.push_str(&format!("{step},{state},{timestep}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Evaluates a property list; returns CSV rows and the violation count.
fn check_pack(
    model: &MarkovModel,
    props: &[NamedProperty],
    defines: &BTreeMap<String, f64>,
    details_dir: Option<&Path>,
) -> Result<(String, usize)> {
    let mut csv = String::from("property_name,kind,value_or_bool,details_path\n");
    let mut violations = 0usize;
    for (i, prop) in props.iter().enumerate() {
        let name = property_name(prop, i);
        let bound = bind(&prop.property, model, defines)?;
        for warning in &bound.warnings {
            eprintln!("warning: {name}: {warning}");
        }
        let result = evaluate(model, &bound)?;
        if result.as_bool() == Some(false) {
            violations += 1;
        }
        let mut details = String::new();
        if let (CheckResult::Ctl(outcome), Some(dir)) = (&result, details_dir) {
            if let Some(trace) = &outcome.trace {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let path = dir.join(format!("{name}_trace.csv"));
                write_trace(&path, model, trace)?;
                // Relative to the run directory so results files are
                // byte-identical across reruns in different locations.
                details = dir
                    .parent()
                    .and_then(|base| path.strip_prefix(base).ok())
                    .unwrap_or(&path)
                    .display()
                    .to_string();
            }
        }
        csv.push_str(&format!(
            "{name},{},{},{}\n",
            result_kind(&result),
            result.render().replace(',', ";"),
            details
        ));
        println!("{name}: {}", result.render());
    }
    Ok((csv, violations))
}

fn cmd_check(args: CheckArgs) -> Result<bool> {
    let model = import_model(&args.model)?;
    let text = std::fs::read_to_string(&args.props).map_err(|e| Error::io(&args.props, e))?;
    let props = parse_file(&text)?;
    let defines = parse_defines(&args.defines)?;
    let details_dir = args.details.clone().or_else(|| {
        args.out
            .as_ref()
            .and_then(|o| o.parent().map(|p| p.join("details")))
    });
    let (csv, violations) = check_pack(&model, &props, &defines, details_dir.as_deref())?;
    if let Some(out) = &args.out {
        std::fs::write(out, csv).map_err(|e| Error::io(out, e))?;
    }
    if violations > 0 {
        eprintln!("{violations} property violation(s) found");
    }
    Ok(violations > 0)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let model = import_model(&args.model)?;
    let property = parse(&args.prop)?;
    let sweep = SweepSpec::parse(&args.sweep)?;
    let defines = parse_defines(&args.defines)?;
    let points = run_experiment(&model, &property, &sweep, &defines)?;
    write_experiment_csv(&args.out, &sweep, &points)?;
    if let Some(plot) = &args.plot {
        write_experiment_svg(plot, &args.prop, &sweep, &points)?;
    }
    println!("evaluated {} sweep points -> {}", points.len(), args.out.display());
    Ok(())
}

fn cmd_report(run: &Path) -> Result<()> {
    let mut sources: Vec<SourceReport> = Vec::new();
    for (file, label) in [
        ("model_lf.txt", "LF"),
        ("model_hf.txt", "HF"),
        ("model_phys.txt", "PHYS"),
    ] {
        let path = run.join(file);
        if path.exists() {
            let model = import_model(&path)?;
            sources.push(analyze_source(&model, label)?);
        }
    }
    if sources.is_empty() {
        return Err(Error::MissingInput(format!(
            "no model_{{lf,hf,phys}}.txt under {}",
            run.display()
        )));
    }
    let stats_path = run.join("zone_stats.json");
    let zone_stats = if stats_path.exists() {
        let text =
            std::fs::read_to_string(&stats_path).map_err(|e| Error::io(&stats_path, e))?;
        Some(serde_json::from_str(&text)?)
    } else {
        None
    };
    let report = Report::new(sources, zone_stats, vec![]);
    let out = run.join("report.md");
    report.write(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_all(args: AllArgs) -> Result<bool> {
    let mut config = args.config.load()?;
    let mut trials = args.trials;
    if args.smoke {
        apply_smoke(&mut config);
        trials = trials.min(10);
    }
    let out = args.out.unwrap_or_else(|| default_out("run"));
    if out.exists() && !args.force {
        return Err(Error::OutputExists(out.clone()));
    }
    let zones = build_zone_map(&config)?;
    let campaign = out.join("campaign");
    let mut stages = Vec::new();

    run_campaign(&config, &zones, trials, args.seed, &campaign, args.force)?;
    config.to_toml_file(&campaign.join("config.toml"))?;
    stages.push("simulate".to_string());

    let series = averaged_series(&campaign, &config)?;
    let clean_path = out.join("clean_avg.csv");
    write_clean_csv(&clean_path, &series)?;
    stages.push("clean".to_string());

    let outcome = discretize_ewd(&series, 5)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    write_discrete_csv(&out.join("discrete.csv"), &outcome.series)?;
    write_bins_json(&out.join("bins.json"), &outcome.series)?;
    stages.push("discretize".to_string());

    let model = build_model(
        &outcome.series,
        BuildMode::PerStateChain(BehaviourState::Searching),
    )?;
    let model_path = out.join("model_lf.txt");
    export_model(&model, &model_path)?;
    stages.push("build-model".to_string());

    let horizon = (model.n_states() - 1).saturating_sub(1) as f64;
    let defines = BTreeMap::from([
        ("T".to_string(), horizon),
        ("state".to_string(), 0.0),
        ("level".to_string(), 3.0),
    ]);
    let props = parse_file(DEFAULT_PACK)?;
    let details = out.join("details");
    let (csv, violations) = check_pack(&model, &props, &defines, Some(&details))?;
    std::fs::write(out.join("results.csv"), &csv)
        .map_err(|e| Error::io(out.join("results.csv"), e))?;
    stages.push("check".to_string());
    if violations > 0 {
        eprintln!("{violations} property violation(s) found");
        if args.strict {
            return Ok(true);
        }
    }

    cmd_report(&out)?;
    stages.push("report".to_string());

    let config_toml = std::fs::read(campaign.join("config.toml"))
        .map_err(|e| Error::io(campaign.join("config.toml"), e))?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config_sha256: format!("{:x}", Sha256::digest(&config_toml)),
        base_seed: args.seed,
        n_trials: trials,
        stages,
        outputs: [
            "campaign",
            "clean_avg.csv",
            "discrete.csv",
            "bins.json",
            "model_lf.txt",
            "results.csv",
            "report.md",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    };
    let manifest_path = out.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .map_err(|e| Error::io(&manifest_path, e))?;
    println!("run complete: {}", out.display());
    Ok(violations > 0)
}
