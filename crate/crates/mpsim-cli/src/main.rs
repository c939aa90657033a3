//! Command-line runner for multipath forwarding scenarios.

use clap::{Args, Parser, Subcommand};
use mpsim::harness::{self, sweep, Overrides};
use mpsim::simcore::RunOptions;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mpsim",
    about = "Multipath forwarding experiments in a deterministic network simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (bundled name or path to a .toml file)
    Run(RunArgs),
    /// Parameter sweeps over generated scenarios
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// List bundled scenarios
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Bundled scenario name or scenario file path
    scenario: String,
    /// Base directory for results (default: ./results)
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated duration, seconds
    #[arg(long)]
    duration: Option<f64>,
    /// Record packet-level deliveries and drops to trace.log
    #[arg(long)]
    trace: bool,
    /// Record resequencer actions to trace.log
    #[arg(long)]
    trace_reseq: bool,
    /// Imbalance above which the receiving edge resequences flows
    #[arg(long)]
    reorder_threshold: Option<f64>,
    /// Imbalance above which aggregation falls back to the fastest path
    #[arg(long)]
    aggregation_cutoff: Option<f64>,
    /// Controller statistics polling interval, milliseconds
    #[arg(long)]
    poll_interval_ms: Option<f64>,
    /// Maximum number of forwarding paths per demand
    #[arg(long)]
    max_paths: Option<usize>,
    /// Packets per full scheduler round
    #[arg(long)]
    wrr_round_size: Option<u32>,
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Sweep the delay imbalance between two equal paths, with and
    /// without the resequencing buffer
    Mdi(MdiArgs),
}

#[derive(Args)]
struct MdiArgs {
    /// Fast path one-way latency, milliseconds
    #[arg(long, default_value_t = 25.0)]
    base_latency_ms: f64,
    /// Per-path capacity, Mbit/s
    #[arg(long, default_value_t = 10.0)]
    capacity_mbps: f64,
    /// Flow duration per point, seconds
    #[arg(long, default_value_t = 15.0)]
    duration: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Imbalance points, comma separated
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45"
    )]
    points: Vec<f64>,
    /// Write the sweep table to this CSV file
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_scenario_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn dispatch(cli: Cli) -> mpsim::Result<()> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(SweepCommand::Mdi(args)) => sweep_mdi(args),
        Command::List => {
            for (name, _, description) in harness::BUNDLED_SCENARIOS {
                println!("{name:<16} {description}");
            }
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> mpsim::Result<()> {
    let overrides = Overrides {
        seed: args.seed,
        duration_s: args.duration,
        reorder_threshold: args.reorder_threshold,
        aggregation_cutoff: args.aggregation_cutoff,
        poll_interval_ms: args.poll_interval_ms,
        max_paths: args.max_paths,
        wrr_round_size: args.wrr_round_size,
    };
    let opts = RunOptions {
        pin_path: None,
        trace: args.trace,
        trace_reseq: args.trace_reseq,
    };
    let experiment = harness::run_experiment(&args.scenario, &overrides, &opts, Some(&args.out_dir))?;

    let s = &experiment.summary;
    println!("scenario        {}", s.scenario);
    println!("seed            {}", s.seed);
    println!(
        "aggregate       {:.2} Mbit/s over {:.0} s",
        s.aggregate_goodput_bps / 1e6,
        s.duration_s
    );
    for f in &s.flows {
        println!(
            "  {} {} {}->{}  {:.2} Mbit/s  retx {}  drops {}",
            f.flow, f.kind, f.src, f.dst, f.goodput_bps / 1e6, f.retransmits, f.drops
        );
    }
    for b in &s.baselines {
        let hops: Vec<String> = b.hops.iter().map(|h| h.to_string()).collect();
        println!(
            "  single-path[{}] {}  {:.2} Mbit/s",
            b.path_index,
            hops.join("-"),
            b.goodput_bps / 1e6
        );
    }
    if let Some(r) = s.ratio_over_best_single {
        println!("ratio/best      {r:.2}");
    }
    if let Some(r) = s.ratio_over_sum_singles {
        println!("ratio/sum       {r:.2}");
    }
    if let Some(dir) = &experiment.out_dir {
        println!("results         {}", dir.display());
    }
    Ok(())
}

fn sweep_mdi(args: MdiArgs) -> mpsim::Result<()> {
    let params = sweep::SweepParams {
        base_latency_ms: args.base_latency_ms,
        capacity_mbps: args.capacity_mbps,
        duration_s: args.duration,
        seed: args.seed,
        ..Default::default()
    };
    let points = sweep::mdi_sweep(&params, &args.points)?;
    let csv = sweep::sweep_to_csv(&points);
    print!("{csv}");
    if let Some(path) = args.out {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(&path, csv)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
