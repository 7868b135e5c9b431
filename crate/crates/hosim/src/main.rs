//! Thin CLI over the library commands.
//!
//! Exit codes: 0 on success, 2 for configuration/usage errors, 1 for
//! runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hosim::commands::{cmd_gen_route, cmd_sweep, cmd_synth_map, cmd_train, Overrides, RouteSpec};
use hosim::config::RunConfig;
use hosim::Error;

#[derive(Parser)]
#[command(
    name = "hosim",
    version,
    about = "Q-learning handover optimization for cellular-connected drones"
)]
struct Cli {
    /// TOML run configuration; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the seed (map seed for synth-map, master seed otherwise).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps (0 = automatic).
    #[arg(long, global = true)]
    parallel: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RouteArgs {
    /// Route start as "x,y" in meters.
    #[arg(long, value_parser = parse_point, conflicts_with_all = ["route", "random"])]
    start: Option<(f64, f64)>,

    /// Route end as "x,y" in meters.
    #[arg(long, value_parser = parse_point, requires = "start")]
    end: Option<(f64, f64)>,

    /// Load the route from a trajectory CSV.
    #[arg(long, conflicts_with = "random")]
    route: Option<PathBuf>,

    /// Draw seeded random endpoints instead.
    #[arg(long)]
    random: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build the radio map and export grid + association CSVs.
    SynthMap,
    /// Generate a flight route and export it as CSV.
    GenRoute(RouteArgs),
    /// Train the handover policy on one route.
    Train {
        #[command(flatten)]
        route: RouteArgs,
        /// Also run the exact oracle and write a comparison report.
        #[arg(long)]
        oracle: bool,
    },
    /// Run the multi-route experiment sweep over weight combinations.
    Sweep {
        /// Override weight pairs, e.g. "0:1,1:9,1:4,1:1,4:1".
        #[arg(long, value_parser = parse_weights)]
        weights: Option<Weights>,
    },
}

#[derive(Clone)]
struct Weights(Vec<(f64, f64)>);

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"x,y\", got {s:?}"));
    }
    let x = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad x: {}", parts[0]))?;
    let y = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("bad y: {}", parts[1]))?;
    Ok((x, y))
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    let mut pairs = Vec::new();
    for item in s.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() != 2 {
            return Err(format!("expected \"w_ho:w_rsrp\", got {item:?}"));
        }
        let w_ho = parts[0]
            .trim()
            .parse()
            .map_err(|_| format!("bad w_ho: {}", parts[0]))?;
        let w_rsrp = parts[1]
            .trim()
            .parse()
            .map_err(|_| format!("bad w_rsrp: {}", parts[1]))?;
        pairs.push((w_ho, w_rsrp));
    }
    if pairs.is_empty() {
        return Err("expected at least one weight pair".into());
    }
    Ok(Weights(pairs))
}

fn route_spec(args: &RouteArgs) -> Result<RouteSpec, Error> {
    if let Some(path) = &args.route {
        return Ok(RouteSpec::CsvFile(path.clone()));
    }
    if args.random {
        return Ok(RouteSpec::Random);
    }
    match (args.start, args.end) {
        (Some(start), Some(end)) => Ok(RouteSpec::Endpoints { start, end }),
        _ => Err(Error::InvalidConfig(
            "specify --start and --end, --route <csv>, or --random".into(),
        )),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        seed: cli.seed,
        out_dir: cli.out.clone(),
        parallel: cli.parallel,
        weights: match &cli.command {
            Command::Sweep { weights } => weights.as_ref().map(|w| w.0.clone()),
            _ => None,
        },
    };

    match &cli.command {
        Command::SynthMap => {
            let s = cmd_synth_map(&config, &overrides)?;
            println!(
                "map: {} x {} bins ({}), {} cells, coverage {:.2}%",
                s.bins_x,
                s.bins_y,
                s.num_bins,
                s.num_cells,
                100.0 * s.coverage_fraction
            );
            for f in &s.files {
                println!("wrote {}", f.display());
            }
        }
        Command::GenRoute(args) => {
            let spec = route_spec(args)?;
            let s = cmd_gen_route(&config, &spec, &overrides)?;
            println!(
                "route: {} waypoints, step {} m",
                s.waypoints, s.step_length_m
            );
            println!("wrote {}", s.route_csv.display());
        }
        Command::Train { route, oracle } => {
            let spec = route_spec(route)?;
            let s = cmd_train(&config, &spec, *oracle, &overrides)?;
            println!(
                "trained {} waypoints: {} handovers (baseline {}), return {:.6}",
                s.waypoints, s.ho_count_proposed, s.ho_count_baseline, s.proposed_return
            );
            if let Some(o) = &s.oracle {
                println!(
                    "oracle: return {:.6} (gap {:.3e}), {} handovers, policies match: {}",
                    o.oracle_return, o.return_gap, o.oracle_ho_count, o.policies_match
                );
            }
            for f in &s.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep { .. } => {
            let s = cmd_sweep(&config, &overrides)?;
            println!(
                "sweep: {} flights over {} weight pairs ({} routes skipped)",
                s.flights, s.num_weights, s.skipped_routes
            );
            println!("w_ho\tw_rsrp\tmean_hos\tmean_hos_baseline\tmean_ratio");
            for (w_ho, w_rsrp, hos, base, ratio) in &s.table {
                println!("{w_ho}\t{w_rsrp}\t{hos:.3}\t{base:.3}\t{ratio:.4}");
            }
            for f in &s.files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
