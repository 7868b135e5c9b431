//! Command implementations behind the CLI: map synthesis, route generation,
//! single-route training, and experiment sweeps, each writing its CSV
//! artifacts into an output directory. The binary only parses arguments and
//! forwards here, so tests can drive every command directly.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{MapKind, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{self, route_seed, sweep_on_grid, CdfSeries, ExperimentConfig, SweepResult};
use crate::qlearn::{
    baseline_policy, build_candidates, build_reward, discounted_return, dp_optimal, extract_policy,
    train, write_policy_csv, write_qtable_csv,
};
use crate::radio_map::{
    quantize, read_samples_csv, synthesize_samples, write_association_csv, write_grid_csv,
    write_samples_csv, RsrpGrid, RsrpSampleSet,
};
use crate::trajectory::{
    generate_trajectory, random_route, read_trajectory_csv, validate_route_coverage,
    write_trajectory_csv, Trajectory, Waypoint,
};

/// CLI-level overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub parallel: Option<usize>,
    pub weights: Option<Vec<(f64, f64)>>,
}

/// How a route is specified on the command line.
#[derive(Debug, Clone)]
pub enum RouteSpec {
    Endpoints { start: (f64, f64), end: (f64, f64) },
    CsvFile(PathBuf),
    Random,
}

fn resolve_out_dir(config: &RunConfig, overrides: &Overrides) -> Result<PathBuf> {
    let dir = overrides
        .out_dir
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("hosim-out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn build_samples(config: &RunConfig) -> Result<RsrpSampleSet> {
    match config.map.kind {
        MapKind::Synthetic => {
            let synth = config.map.synthetic.as_ref().expect("validated");
            synthesize_samples(
                synth,
                &config.grid,
                config.map.num_samples.expect("validated"),
            )
        }
        MapKind::Csv => read_samples_csv(config.map.samples_csv.as_ref().expect("validated")),
    }
}

fn build_grid(config: &RunConfig) -> Result<RsrpGrid> {
    let samples = build_samples(config)?;
    quantize(&samples, &config.grid)
}

// ---------------------------------------------------------------------------
// synth-map
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SynthMapSummary {
    pub num_bins: usize,
    pub bins_x: usize,
    pub bins_y: usize,
    pub num_cells: usize,
    pub coverage_fraction: f64,
    pub files: Vec<PathBuf>,
}

/// Builds the map and writes `grid.csv`, `association.csv`, and (for
/// synthetic sources) the raw `samples.csv`.
pub fn cmd_synth_map(config: &RunConfig, overrides: &Overrides) -> Result<SynthMapSummary> {
    let mut config = config.clone();
    if let (Some(seed), Some(synth)) = (overrides.seed, config.map.synthetic.as_mut()) {
        synth.seed = seed;
    }
    config.validate()?;
    let out = resolve_out_dir(&config, overrides)?;

    let samples = build_samples(&config)?;
    let grid = quantize(&samples, &config.grid)?;

    let mut files = Vec::new();
    if config.map.kind == MapKind::Synthetic {
        let path = out.join("samples.csv");
        write_samples_csv(&samples, &path)?;
        files.push(path);
    }
    let grid_path = out.join("grid.csv");
    write_grid_csv(&grid, &grid_path)?;
    files.push(grid_path);
    let assoc_path = out.join("association.csv");
    write_association_csv(&grid, &assoc_path)?;
    files.push(assoc_path);

    Ok(SynthMapSummary {
        num_bins: config.grid.num_bins(),
        bins_x: config.grid.bins_x(),
        bins_y: config.grid.bins_y(),
        num_cells: grid.num_cells(),
        coverage_fraction: grid.coverage_fraction(),
        files,
    })
}

// ---------------------------------------------------------------------------
// gen-route
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GenRouteSummary {
    pub waypoints: usize,
    pub step_length_m: f64,
    pub route_csv: PathBuf,
}

fn resolve_route(config: &RunConfig, spec: &RouteSpec, seed: u64) -> Result<Trajectory> {
    match spec {
        RouteSpec::Endpoints { start, end } => generate_trajectory(
            Waypoint::new(start.0, start.1),
            Waypoint::new(end.0, end.1),
            config.experiment.step_length_m,
            &config.grid,
        ),
        RouteSpec::CsvFile(path) => read_trajectory_csv(path),
        RouteSpec::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(route_seed(seed, 0));
            random_route(
                &config.grid,
                config.experiment.step_length_m,
                config.experiment.min_route_length_m,
                &mut rng,
            )
        }
    }
}

/// Generates a route and writes `route.csv`.
pub fn cmd_gen_route(
    config: &RunConfig,
    spec: &RouteSpec,
    overrides: &Overrides,
) -> Result<GenRouteSummary> {
    config.validate()?;
    let out = resolve_out_dir(config, overrides)?;
    let seed = overrides.seed.unwrap_or(config.experiment.master_seed);
    let route = resolve_route(config, spec, seed)?;
    let path = out.join("route.csv");
    write_trajectory_csv(&route, &path)?;
    Ok(GenRouteSummary {
        waypoints: route.len(),
        step_length_m: route.step_length_m,
        route_csv: path,
    })
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub waypoints: usize,
    pub ho_count_proposed: usize,
    pub ho_count_baseline: usize,
    pub proposed_return: f64,
    pub oracle: Option<OracleComparison>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct OracleComparison {
    pub oracle_return: f64,
    pub return_gap: f64,
    pub oracle_ho_count: usize,
    pub policies_match: bool,
}

/// Trains one route and writes `route.csv`, `policy_proposed.csv`,
/// `policy_baseline.csv`, and `qtable.csv`; with `oracle` set, also
/// `policy_oracle.csv` and `oracle_report.csv`.
pub fn cmd_train(
    config: &RunConfig,
    spec: &RouteSpec,
    oracle: bool,
    overrides: &Overrides,
) -> Result<TrainSummary> {
    config.validate()?;
    let out = resolve_out_dir(config, overrides)?;
    let seed = overrides.seed.unwrap_or(config.experiment.master_seed);

    let grid = build_grid(config)?;
    let route = resolve_route(config, spec, seed)?;
    let uncovered = validate_route_coverage(&route, &grid);
    if !uncovered.is_empty() {
        return Err(Error::UncoveredRoute {
            waypoints: uncovered,
        });
    }

    let hp = config.hyperparams;
    let candidates = build_candidates(&grid, &route, hp.k)?;
    let (reward, _) = build_reward(&candidates, hp.w_ho, hp.w_rsrp)?;
    let q = train(&reward, &hp, seed)?;
    let proposed = extract_policy(&q, &candidates);
    let baseline = baseline_policy(&candidates);
    let proposed_return = discounted_return(&reward, &proposed.ranks(), hp.lambda);

    let mut files = Vec::new();
    let route_path = out.join("route.csv");
    write_trajectory_csv(&route, &route_path)?;
    files.push(route_path);
    let proposed_path = out.join("policy_proposed.csv");
    write_policy_csv(&proposed, &route, &proposed_path)?;
    files.push(proposed_path);
    let baseline_path = out.join("policy_baseline.csv");
    write_policy_csv(&baseline, &route, &baseline_path)?;
    files.push(baseline_path);
    let qtable_path = out.join("qtable.csv");
    write_qtable_csv(&q, &qtable_path)?;
    files.push(qtable_path);

    let oracle_summary = if oracle {
        let (oracle_policy, oracle_return) = dp_optimal(&reward, &candidates, hp.lambda);
        let oracle_path = out.join("policy_oracle.csv");
        write_policy_csv(&oracle_policy, &route, &oracle_path)?;
        files.push(oracle_path);

        let comparison = OracleComparison {
            oracle_return,
            return_gap: (oracle_return - proposed_return).abs(),
            oracle_ho_count: oracle_policy.ho_count,
            policies_match: oracle_policy.cells() == proposed.cells(),
        };
        let report_path = out.join("oracle_report.csv");
        let mut w = csv::Writer::from_path(&report_path)?;
        w.write_record(["metric", "value"])?;
        w.write_record(["proposed_return", &proposed_return.to_string()])?;
        w.write_record(["oracle_return", &oracle_return.to_string()])?;
        w.write_record(["return_gap", &comparison.return_gap.to_string()])?;
        w.write_record(["proposed_hos", &proposed.ho_count.to_string()])?;
        w.write_record(["oracle_hos", &oracle_policy.ho_count.to_string()])?;
        w.write_record(["baseline_hos", &baseline.ho_count.to_string()])?;
        w.write_record(["policies_match", &comparison.policies_match.to_string()])?;
        w.flush()?;
        files.push(report_path);
        Some(comparison)
    } else {
        None
    };

    Ok(TrainSummary {
        waypoints: route.len(),
        ho_count_proposed: proposed.ho_count,
        ho_count_baseline: baseline.ho_count,
        proposed_return,
        oracle: oracle_summary,
        files,
    })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub num_weights: usize,
    pub flights: usize,
    pub skipped_routes: usize,
    pub files: Vec<PathBuf>,
    /// (w_ho, w_rsrp, mean proposed HOs, mean baseline HOs, mean ratio).
    pub table: Vec<(f64, f64, f64, f64, f64)>,
}

fn weight_label(w_ho: f64, w_rsrp: f64) -> String {
    format!("w_ho={w_ho} w_rsrp={w_rsrp}")
}

/// Runs the configured sweep and writes `summary.csv`, `flights.csv`,
/// `cdf_hos.csv`, `cdf_ho_ratio.csv`, `cdf_rsrp.csv`, `seeds.csv`, and
/// `skipped.csv`.
pub fn cmd_sweep(config: &RunConfig, overrides: &Overrides) -> Result<SweepSummary> {
    config.validate()?;
    let out = resolve_out_dir(config, overrides)?;

    let mut experiment: ExperimentConfig = config.experiment_config();
    if let Some(seed) = overrides.seed {
        experiment.master_seed = seed;
    }
    if let Some(parallel) = overrides.parallel {
        experiment.parallel = parallel;
    }
    if let Some(weights) = &overrides.weights {
        experiment.weights = weights.clone();
    }

    let grid = experiment.map.build()?;
    let result = sweep_on_grid(&grid, &experiment)?;
    let files = write_sweep_outputs(&result, &experiment, &out)?;

    Ok(SweepSummary {
        num_weights: experiment.weights.len(),
        flights: result.flights.len(),
        skipped_routes: result.skipped_routes.len(),
        files,
        table: result
            .weights
            .iter()
            .map(|a| {
                (
                    a.w_ho,
                    a.w_rsrp,
                    a.mean_hos_proposed,
                    a.mean_hos_baseline,
                    a.mean_ho_ratio,
                )
            })
            .collect(),
    })
}

fn write_sweep_outputs(
    result: &SweepResult,
    experiment: &ExperimentConfig,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();

    let summary_path = out.join("summary.csv");
    eval::write_summary_csv(&result.weights, &summary_path)?;
    files.push(summary_path);

    let flights_path = out.join("flights.csv");
    eval::write_flights_csv(&result.flights, &flights_path)?;
    files.push(flights_path);

    // handover CDFs: one series per weight pair plus the shared baseline
    let mut ho_series: Vec<(String, &CdfSeries)> = result
        .weights
        .iter()
        .map(|a| (weight_label(a.w_ho, a.w_rsrp), &a.cdf_hos_proposed))
        .collect();
    ho_series.push(("baseline".to_string(), &result.weights[0].cdf_hos_baseline));
    let path = out.join("cdf_hos.csv");
    eval::write_cdf_csv(&ho_series, &path)?;
    files.push(path);

    let ratio_series: Vec<(String, &CdfSeries)> = result
        .weights
        .iter()
        .filter_map(|a| {
            a.cdf_ho_ratio
                .as_ref()
                .map(|cdf| (weight_label(a.w_ho, a.w_rsrp), cdf))
        })
        .collect();
    let path = out.join("cdf_ho_ratio.csv");
    eval::write_cdf_csv(&ratio_series, &path)?;
    files.push(path);

    let mut rsrp_series: Vec<(String, &CdfSeries)> = result
        .weights
        .iter()
        .map(|a| (weight_label(a.w_ho, a.w_rsrp), &a.cdf_rsrp_proposed_dbm))
        .collect();
    rsrp_series.push((
        "baseline".to_string(),
        &result.weights[0].cdf_rsrp_baseline_dbm,
    ));
    let path = out.join("cdf_rsrp.csv");
    eval::write_cdf_csv(&rsrp_series, &path)?;
    files.push(path);

    let seeds_path = out.join("seeds.csv");
    eval::write_seed_manifest_csv(result, &experiment.weights, &seeds_path)?;
    files.push(seeds_path);

    let skipped_path = out.join("skipped.csv");
    let mut w = csv::Writer::from_path(&skipped_path)?;
    w.write_record(["route_id", "uncovered_waypoints"])?;
    for s in &result.skipped_routes {
        let joined = s
            .uncovered_waypoints
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([s.route_id.to_string(), joined])?;
    }
    w.flush()?;
    files.push(skipped_path);

    Ok(files)
}
