use clap::{Parser, Subcommand};
use regionex_cli::commands::{self, ExploreArgs};
use regionex_cli::maps::MapKind;
use regionex_core::baselines::Strategy;
use std::path::PathBuf;
use std::process::ExitCode;

/// Multi-robot exploration simulator and benchmark runner.
///
/// Exit status: 0 when every run completed, 1 when a run hit the time cap,
/// 2 on invalid configuration or input.
#[derive(Parser)]
#[command(name = "regionex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one exploration.
    Explore {
        /// Bundled map (empty, grid, random, campus) or a .map/.pgm file.
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 2)]
        robots: usize,
        /// hierarchical, ctr, mtsp or gre.
        #[arg(long, default_value = "hierarchical")]
        strategy: Strategy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory [default: $REGIONEX_OUT/<map>-<robots>-<strategy>-<seed>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write an SVG frame every this many simulated seconds.
        #[arg(long)]
        snapshot_every: Option<f64>,
        /// Config file whose [scenario] section overrides the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run an experiment file and write summary.csv.
    Bench {
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the experiment's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Generate a 50 m × 30 m map.
    Genmap {
        kind: MapKind,
        #[arg(long, default_value_t = regionex_cli::maps::BUNDLED_SEED)]
        seed: u64,
        /// Destination file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay an event log and write SVG frames.
    Render {
        #[arg(long)]
        log: PathBuf,
        /// Frame directory [default: $REGIONEX_OUT/frames].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seconds of simulated time between frames.
        #[arg(long, default_value_t = 10.0)]
        every: f64,
        /// Config file used for the original run.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Explore { map, robots, strategy, seed, out, snapshot_every, config } => {
            commands::explore(&ExploreArgs { map, robots, strategy, seed, out, snapshot_every, config })
        }
        Command::Bench { spec, jobs, out, verbose } => commands::bench(&spec, jobs, out, verbose),
        Command::Genmap { kind, seed, out } => commands::genmap(kind, seed, out.as_deref()).map(|text| {
            if out.is_none() {
                print!("{text}");
            }
            true
        }),
        Command::Render { log, out, every, config } => {
            let out = out.unwrap_or_else(|| commands::default_output().join("frames"));
            commands::render(&log, &out, every, config.as_deref())
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("regionex: exploration did not complete within the time cap");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("regionex: {e}");
            ExitCode::from(2)
        }
    }
}
