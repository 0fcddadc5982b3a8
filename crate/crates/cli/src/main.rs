//! `simulate` — macroscopic AV-lane traffic assignment from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 input validation error,
//! 3 runtime failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lanesim_core::analytic::{
    saturation_threshold, scenario2_time, solve_two_lane, TwoLaneScenario,
};
use lanesim_core::assignment::{
    agents_to_csv, assign_incremental, links_to_csv, AssignmentConfig,
};
use lanesim_core::cost::HeadwayConfig;
use lanesim_core::demand::{generate_population, load_od, population_to_csv};
use lanesim_core::grid::{generate_grid, od_to_csv, west_east_od, GridConfig};
use lanesim_core::network::{load_network, save_network, transform_av_lane_default};
use lanesim_core::runner::{emit_report, run_sweep, Scenario, SweepConfig};
use lanesim_core::Error;

#[derive(Parser)]
#[command(
    name = "simulate",
    version,
    about = "Macroscopic traffic assignment with dedicated AV-lane policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full AV-percentage sweep from a config file and write the
    /// report CSVs.
    Sweep(SweepArgs),
    /// Run a single assignment cell and write link/agent CSVs.
    Assign(AssignArgs),
    /// Print the closed-form single-road solution as JSON.
    Analytic(AnalyticArgs),
    /// Apply the AV-lane transformation to a network file.
    Transform(TransformArgs),
    /// Generate a synthetic grid network (and optionally a matching OD file).
    GenGrid(GenGridArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the report files.
    #[arg(long, default_value = "sweep_out")]
    out: PathBuf,
    /// Additionally record per-segment flows.
    #[arg(long)]
    per_link: bool,
}

#[derive(Args)]
struct AssignArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    od: PathBuf,
    /// AV share of the population, percent.
    #[arg(long)]
    av_percent: u32,
    /// Lane policy: with-av-lane or no-av-lane.
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 10_000)]
    agents: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    batches: u32,
    #[arg(long, default_value_t = 5)]
    passes: u32,
    #[arg(long, default_value_t = 1e-3)]
    gap: f64,
    #[arg(long, default_value_t = 1.0)]
    period_h: f64,
    #[arg(long, default_value_t = 1.0)]
    headway_av: f64,
    #[arg(long, default_value_t = 1.8)]
    headway_cv: f64,
    /// Directory for links.csv and agents.csv.
    #[arg(long, default_value = "assign_out")]
    out: PathBuf,
    /// Also dump the generated population as CSV.
    #[arg(long)]
    dump_population: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyticArgs {
    /// Normal (mixed) lane count N; the road has N+1 lanes in total.
    #[arg(long, default_value_t = 1)]
    lanes: u32,
    #[arg(long, default_value_t = 1.0)]
    headway_av: f64,
    #[arg(long, default_value_t = 1.8)]
    headway_cv: f64,
    /// Total vehicles per period; enables the full solution output.
    #[arg(long)]
    flow: Option<f64>,
    /// Overall AV fraction in [0, 1].
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 10_000.0)]
    length: f64,
    #[arg(long, default_value_t = 25.0)]
    speed: f64,
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
    #[arg(long, default_value_t = 4.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    period_h: f64,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Highway links shorter than this keep all lanes mixed.
    #[arg(long, default_value_t = 0.0)]
    min_length_m: f64,
}

#[derive(Args)]
struct GenGridArgs {
    #[arg(long, default_value_t = 8)]
    rows: u32,
    #[arg(long, default_value_t = 8)]
    cols: u32,
    /// Turn the middle row into a multi-lane highway corridor.
    #[arg(long)]
    highway_corridor: bool,
    #[arg(long, default_value_t = 500.0)]
    spacing_m: f64,
    #[arg(long, default_value = "grid.csv")]
    out: PathBuf,
    /// Also write a west-to-east OD matrix.
    #[arg(long)]
    od_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path too
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err.downcast_ref::<Error>() {
                Some(e) if e.is_input_error() => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Assign(args) => cmd_assign(args),
        Command::Analytic(args) => cmd_analytic(args),
        Command::Transform(args) => cmd_transform(args),
        Command::GenGrid(args) => cmd_gen_grid(args),
    }
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let mut cfg = SweepConfig::load(&args.config)?;
    if args.per_link {
        cfg.per_link = true;
    }
    let report = run_sweep(&cfg)?;
    emit_report(&report, &args.out)?;
    println!(
        "wrote {} cells to {}",
        report.cells.len(),
        args.out.display()
    );
    Ok(())
}

fn parse_scenario(s: &str) -> Result<Scenario, Error> {
    match s {
        "with-av-lane" => Ok(Scenario::WithAvLane),
        "no-av-lane" => Ok(Scenario::NoAvLane),
        other => Err(Error::Config(format!(
            "unknown scenario `{other}` (expected with-av-lane or no-av-lane)"
        ))),
    }
}

fn cmd_assign(args: AssignArgs) -> anyhow::Result<()> {
    if args.av_percent > 100 {
        return Err(Error::Config("av-percent must be within [0, 100]".into()).into());
    }
    let scenario = parse_scenario(&args.scenario)?;
    let base = load_network(&args.network)?;
    let net = match scenario {
        Scenario::WithAvLane => transform_av_lane_default(&base, 0.0)?,
        Scenario::NoAvLane => base.clone(),
    };
    let od = load_od(&args.od, &base)?;
    let pop = generate_population(&od, args.agents, args.av_percent as f64 / 100.0, args.seed)?;
    if let Some(path) = &args.dump_population {
        population_to_csv(&pop, &base, fs::File::create(path)?)?;
    }
    let cfg = AssignmentConfig {
        batch_count: args.batches,
        max_passes: args.passes,
        gap_tolerance: args.gap,
        period_h: args.period_h,
        headways: HeadwayConfig::new(args.headway_av, args.headway_cv)?,
        ..AssignmentConfig::default()
    };
    let assignment = assign_incremental(&net, &pop, &cfg)?;
    fs::create_dir_all(&args.out)?;
    links_to_csv(&assignment, fs::File::create(args.out.join("links.csv"))?)?;
    agents_to_csv(&assignment, fs::File::create(args.out.join("agents.csv"))?)?;
    println!(
        "assigned {} agents in {} passes (gap {:.3e}, converged: {}) -> {}",
        pop.len(),
        assignment.iteration_count(),
        assignment.relative_gap(),
        assignment.converged(),
        args.out.display()
    );
    Ok(())
}

fn cmd_analytic(args: AnalyticArgs) -> anyhow::Result<()> {
    let hw = HeadwayConfig::new(args.headway_av, args.headway_cv)?;
    let threshold = saturation_threshold(args.lanes, &hw);
    let mut doc = serde_json::json!({
        "normal_lanes": args.lanes,
        "h_av": hw.h_av,
        "h_cv": hw.h_cv,
        "saturation_threshold": threshold,
    });
    if let (Some(flow), Some(p)) = (args.flow, args.p) {
        let scenario = TwoLaneScenario {
            total_flow: flow,
            av_fraction: p,
            length_m: args.length,
            speed_mps: args.speed,
            alpha: args.alpha,
            beta: args.beta,
            headways: hw,
            normal_lanes: args.lanes,
            period_h: args.period_h,
        };
        let solution = solve_two_lane(&scenario)?;
        doc["solution"] = serde_json::to_value(solution)?;
        doc["no_lane_time"] = serde_json::to_value(scenario2_time(&scenario)?)?;
    } else if args.flow.is_some() || args.p.is_some() {
        return Err(Error::Config("--flow and --p must be given together".into()).into());
    }
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn cmd_transform(args: TransformArgs) -> anyhow::Result<()> {
    let net = load_network(&args.network)?;
    let transformed = transform_av_lane_default(&net, args.min_length_m)?;
    save_network(&transformed, &args.out)?;
    println!(
        "{} nodes, {} links -> {} nodes, {} links ({})",
        net.node_count(),
        net.link_count(),
        transformed.node_count(),
        transformed.link_count(),
        args.out.display()
    );
    Ok(())
}

fn cmd_gen_grid(args: GenGridArgs) -> anyhow::Result<()> {
    let cfg = GridConfig {
        rows: args.rows,
        cols: args.cols,
        spacing_m: args.spacing_m,
        highway_corridor: args.highway_corridor,
        ..GridConfig::default()
    };
    let net = generate_grid(&cfg)?;
    save_network(&net, &args.out)?;
    println!(
        "grid {}x{}: {} nodes, {} links -> {}",
        cfg.rows,
        cfg.cols,
        net.node_count(),
        net.link_count(),
        args.out.display()
    );
    if let Some(od_path) = &args.od_out {
        let od = west_east_od(&cfg, &net)?;
        od_to_csv(&od, &net, fs::File::create(od_path)?)?;
        println!("od matrix with {} pairs -> {}", od.len(), od_path.display());
    }
    Ok(())
}
