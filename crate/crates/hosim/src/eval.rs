//! Multi-route experiments: per-flight handover counts and ratios, weight
//! sweeps, and empirical CDFs of handovers, handover ratios, and RSRP.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlearn::{
    baseline_policy, build_candidates, build_reward, extract_policy, train, HyperParams, Policy,
};
use crate::radio_map::{
    quantize, read_samples_csv, synthesize_samples, GridSpec, RsrpGrid, SyntheticMapConfig,
};
use crate::trajectory::{random_route, validate_route_coverage, Trajectory};

/// Where the radio map comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    Synthetic {
        grid: GridSpec,
        config: SyntheticMapConfig,
        num_samples: usize,
    },
    SamplesCsv {
        grid: GridSpec,
        path: PathBuf,
    },
}

impl MapSource {
    /// Builds the quantized grid from samples.
    pub fn build(&self) -> Result<RsrpGrid> {
        match self {
            MapSource::Synthetic {
                grid,
                config,
                num_samples,
            } => {
                let samples = synthesize_samples(config, grid, *num_samples)?;
                quantize(&samples, grid)
            }
            MapSource::SamplesCsv { grid, path } => {
                let samples = read_samples_csv(path)?;
                quantize(&samples, grid)
            }
        }
    }

    pub fn grid_spec(&self) -> &GridSpec {
        match self {
            MapSource::Synthetic { grid, .. } => grid,
            MapSource::SamplesCsv { grid, .. } => grid,
        }
    }
}

/// Full experiment design: map, hyperparameters, weight pairs, route count.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub map: MapSource,
    pub hp: HyperParams,
    pub num_routes: usize,
    /// (w_ho, w_rsrp) pairs to sweep.
    pub weights: Vec<(f64, f64)>,
    pub step_length_m: f64,
    pub min_route_length_m: f64,
    pub master_seed: u64,
    /// Worker threads for the sweep; 0 picks the rayon default.
    pub parallel: usize,
}

impl ExperimentConfig {
    /// Validates everything including the map source.
    pub fn validate(&self) -> Result<()> {
        self.validate_params()?;
        self.map.grid_spec().validate()?;
        if let MapSource::Synthetic { grid, config, .. } = &self.map {
            config.validate(grid)?;
        }
        Ok(())
    }

    /// Validates the experiment design alone; used when the grid is
    /// supplied directly.
    pub fn validate_params(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid_config(msg));
        if self.num_routes == 0 {
            return bad("num_routes must be at least 1".into());
        }
        if self.weights.is_empty() {
            return bad("at least one weight pair required".into());
        }
        for (i, &(w_ho, w_rsrp)) in self.weights.iter().enumerate() {
            if w_ho < 0.0 || w_rsrp < 0.0 || w_ho + w_rsrp <= 0.0 {
                return bad(format!(
                    "weight pair ({w_ho}, {w_rsrp}) must be nonnegative and not both zero"
                ));
            }
            if self.weights[i + 1..].contains(&(w_ho, w_rsrp)) {
                return bad(format!("duplicate weight pair ({w_ho}, {w_rsrp})"));
            }
        }
        if self.step_length_m <= 0.0 {
            return bad("step_length_m must be positive".into());
        }
        if self.min_route_length_m < 0.0 {
            return bad("min_route_length_m must be nonnegative".into());
        }
        self.hp.validate()
    }
}

// ---------------------------------------------------------------------------
// Seed derivation
// ---------------------------------------------------------------------------

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-(route, weight) seed stream derived from the master seed.
pub fn derive_seed(master: u64, route_index: u64, weight_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ route_index) ^ weight_index)
}

/// Seed for route geometry; shares the master stream but cannot collide
/// with flight seeds, whose weight index is always a small integer.
pub fn route_seed(master: u64, route_index: u64) -> u64 {
    derive_seed(master, route_index, u64::MAX)
}

// ---------------------------------------------------------------------------
// Flights
// ---------------------------------------------------------------------------

/// Outcome of one flight under one weight pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightResult {
    pub route_id: usize,
    pub w_ho: f64,
    pub w_rsrp: f64,
    pub ho_count_proposed: usize,
    pub ho_count_baseline: usize,
    /// Proposed over baseline handover count; `None` when the baseline made
    /// no handovers but the proposed policy did (excluded from ratio CDFs).
    pub ho_ratio: Option<f64>,
    pub rsrp_trace_proposed_dbm: Vec<f64>,
    pub rsrp_trace_baseline_dbm: Vec<f64>,
}

fn ho_ratio(proposed: usize, baseline: usize) -> Option<f64> {
    match (baseline, proposed) {
        (0, 0) => Some(1.0),
        (0, _) => None,
        (b, p) => Some(p as f64 / b as f64),
    }
}

/// Trains on one route and compares the learned policy to the
/// always-strongest baseline.
pub fn run_flight(
    grid: &RsrpGrid,
    trajectory: &Trajectory,
    hp: &HyperParams,
    seed: u64,
    route_id: usize,
) -> Result<FlightResult> {
    hp.validate()?;
    let candidates = build_candidates(grid, trajectory, hp.k)?;
    let (proposed, baseline): (Policy, Policy) = if candidates.len() < 2 {
        // stationary route: nothing to learn, both policies sit on rank 0
        let p = baseline_policy(&candidates);
        (p.clone(), p)
    } else {
        let (reward, _) = build_reward(&candidates, hp.w_ho, hp.w_rsrp)?;
        let q = train(&reward, hp, seed)?;
        (
            extract_policy(&q, &candidates),
            baseline_policy(&candidates),
        )
    };
    Ok(FlightResult {
        route_id,
        w_ho: hp.w_ho,
        w_rsrp: hp.w_rsrp,
        ho_count_proposed: proposed.ho_count,
        ho_count_baseline: baseline.ho_count,
        ho_ratio: ho_ratio(proposed.ho_count, baseline.ho_count),
        rsrp_trace_proposed_dbm: proposed.raw_dbm_trace(),
        rsrp_trace_baseline_dbm: baseline.raw_dbm_trace(),
    })
}

// ---------------------------------------------------------------------------
// Empirical CDFs
// ---------------------------------------------------------------------------

/// Step CDF over distinct sorted values; the final probability is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSeries {
    values: Vec<f64>,
    probs: Vec<f64>,
}

/// Standard empirical CDF: a step of weight 1/N at each sorted value.
pub fn empirical_cdf(values: &[f64]) -> Result<CdfSeries> {
    if values.is_empty() {
        return Err(Error::EmptyInput("CDF input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("CDF values must not be NaN"));
    let n = sorted.len();
    let mut out_values = Vec::new();
    let mut probs = Vec::new();
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i + 1;
        while j < n && sorted[j] == v {
            j += 1;
        }
        out_values.push(v);
        probs.push(j as f64 / n as f64);
        i = j;
    }
    Ok(CdfSeries {
        values: out_values,
        probs,
    })
}

impl CdfSeries {
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Smallest value whose cumulative probability reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!((0.0..=1.0).contains(&p), "quantile level out of range");
        for (v, prob) in self.points() {
            if prob >= p {
                return v;
            }
        }
        self.max()
    }

    /// Mean of the underlying sample, recovered from the step weights.
    pub fn mean(&self) -> f64 {
        let mut prev = 0.0;
        let mut total = 0.0;
        for (v, prob) in self.points() {
            total += v * (prob - prev);
            prev = prob;
        }
        total
    }
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Aggregates for one weight pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAggregate {
    pub w_ho: f64,
    pub w_rsrp: f64,
    pub mean_hos_proposed: f64,
    pub mean_hos_baseline: f64,
    /// Mean over flights with a defined ratio; NaN if none were defined.
    pub mean_ho_ratio: f64,
    /// Flights whose ratio was undefined (baseline 0, proposed > 0).
    pub ratio_excluded: usize,
    pub cdf_hos_proposed: CdfSeries,
    pub cdf_hos_baseline: CdfSeries,
    pub cdf_ho_ratio: Option<CdfSeries>,
    pub cdf_rsrp_proposed_dbm: CdfSeries,
    pub cdf_rsrp_baseline_dbm: CdfSeries,
    pub p5_rsrp_dbm: f64,
    pub min_rsrp_dbm: f64,
}

/// A route excluded from the experiment because the map does not cover it.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRoute {
    pub route_id: usize,
    pub uncovered_waypoints: Vec<usize>,
}

/// Everything a sweep produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub weights: Vec<WeightAggregate>,
    /// Ordered by (weight index, route id); skipped routes are absent.
    pub flights: Vec<FlightResult>,
    pub skipped_routes: Vec<SkippedRoute>,
    pub route_seeds: Vec<u64>,
    pub master_seed: u64,
}

/// Builds the map from the configured source, then sweeps.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let grid = cfg.map.build()?;
    sweep_on_grid(&grid, cfg)
}

/// Runs `num_routes` flights per weight pair over seeded random routes.
///
/// Routes are shared across weight pairs so aggregate differences come from
/// the weights alone. Flight seeds derive from (master seed, route index,
/// weight index); uncovered routes are skipped and recorded. Results are
/// independent of the parallelism degree.
pub fn sweep_on_grid(grid: &RsrpGrid, cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate_params()?;

    let mut routes = Vec::with_capacity(cfg.num_routes);
    let mut route_seeds = Vec::with_capacity(cfg.num_routes);
    for r in 0..cfg.num_routes {
        let seed = route_seed(cfg.master_seed, r as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        routes.push(random_route(
            grid.spec(),
            cfg.step_length_m,
            cfg.min_route_length_m,
            &mut rng,
        )?);
        route_seeds.push(seed);
    }

    let mut skipped_routes = Vec::new();
    let mut covered = Vec::new();
    for (r, route) in routes.iter().enumerate() {
        let uncovered = validate_route_coverage(route, grid);
        if uncovered.is_empty() {
            covered.push(r);
        } else {
            skipped_routes.push(SkippedRoute {
                route_id: r,
                uncovered_waypoints: uncovered,
            });
        }
    }
    if covered.is_empty() {
        return Err(Error::AllRoutesUncovered);
    }

    let jobs: Vec<(usize, usize)> = (0..cfg.weights.len())
        .flat_map(|w| covered.iter().map(move |&r| (w, r)))
        .collect();

    let run_job = |&(w, r): &(usize, usize)| -> Result<FlightResult> {
        let (w_ho, w_rsrp) = cfg.weights[w];
        let hp = HyperParams {
            w_ho,
            w_rsrp,
            ..cfg.hp
        };
        let seed = derive_seed(cfg.master_seed, r as u64, w as u64);
        run_flight(grid, &routes[r], &hp, seed, r)
    };

    let flights: Vec<FlightResult> = if cfg.parallel == 1 {
        jobs.iter().map(run_job).collect::<Result<_>>()?
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallel)
            .build()
            .map_err(|e| Error::invalid_config(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run_job).collect::<Result<_>>())?
    };

    let per_weight = covered.len();
    let weights = cfg
        .weights
        .iter()
        .enumerate()
        .map(|(w, &(w_ho, w_rsrp))| {
            aggregate_weight(w_ho, w_rsrp, &flights[w * per_weight..(w + 1) * per_weight])
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepResult {
        weights,
        flights,
        skipped_routes,
        route_seeds,
        master_seed: cfg.master_seed,
    })
}

fn aggregate_weight(w_ho: f64, w_rsrp: f64, flights: &[FlightResult]) -> Result<WeightAggregate> {
    let n = flights.len() as f64;
    let hos_proposed: Vec<f64> = flights.iter().map(|f| f.ho_count_proposed as f64).collect();
    let hos_baseline: Vec<f64> = flights.iter().map(|f| f.ho_count_baseline as f64).collect();
    let ratios: Vec<f64> = flights.iter().filter_map(|f| f.ho_ratio).collect();
    let ratio_excluded = flights.len() - ratios.len();

    let pooled_proposed: Vec<f64> = flights
        .iter()
        .flat_map(|f| f.rsrp_trace_proposed_dbm.iter().copied())
        .collect();
    let pooled_baseline: Vec<f64> = flights
        .iter()
        .flat_map(|f| f.rsrp_trace_baseline_dbm.iter().copied())
        .collect();

    let cdf_rsrp_proposed_dbm = empirical_cdf(&pooled_proposed)?;
    let cdf_rsrp_baseline_dbm = empirical_cdf(&pooled_baseline)?;
    let p5_rsrp_dbm = cdf_rsrp_proposed_dbm.quantile(0.05);
    let min_rsrp_dbm = cdf_rsrp_proposed_dbm.min();

    Ok(WeightAggregate {
        w_ho,
        w_rsrp,
        mean_hos_proposed: hos_proposed.iter().sum::<f64>() / n,
        mean_hos_baseline: hos_baseline.iter().sum::<f64>() / n,
        mean_ho_ratio: if ratios.is_empty() {
            f64::NAN
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        },
        ratio_excluded,
        cdf_hos_proposed: empirical_cdf(&hos_proposed)?,
        cdf_hos_baseline: empirical_cdf(&hos_baseline)?,
        cdf_ho_ratio: if ratios.is_empty() {
            None
        } else {
            Some(empirical_cdf(&ratios)?)
        },
        cdf_rsrp_proposed_dbm,
        cdf_rsrp_baseline_dbm,
        p5_rsrp_dbm,
        min_rsrp_dbm,
    })
}

// ---------------------------------------------------------------------------
// CSV interfaces
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct FlightRow {
    route_id: usize,
    w_ho: f64,
    w_rsrp: f64,
    ho_proposed: usize,
    ho_baseline: usize,
    ho_ratio: Option<f64>,
}

/// Writes `route_id,w_ho,w_rsrp,ho_proposed,ho_baseline,ho_ratio`; the
/// ratio field is empty for flights excluded from ratio statistics.
pub fn write_flights_csv(flights: &[FlightResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for f in flights {
        w.serialize(FlightRow {
            route_id: f.route_id,
            w_ho: f.w_ho,
            w_rsrp: f.w_rsrp,
            ho_proposed: f.ho_count_proposed,
            ho_baseline: f.ho_count_baseline,
            ho_ratio: f.ho_ratio,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes labelled CDF series as `value,cum_prob,series_label`.
pub fn write_cdf_csv(series: &[(String, &CdfSeries)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value", "cum_prob", "series_label"])?;
    for (label, cdf) in series {
        for (value, prob) in cdf.points() {
            w.write_record([value.to_string(), prob.to_string(), label.clone()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-weight summary:
/// `w_ho,w_rsrp,mean_hos_proposed,mean_hos_baseline,mean_ho_ratio,p5_rsrp_dbm,min_rsrp_dbm`.
pub fn write_summary_csv(weights: &[WeightAggregate], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "w_ho",
        "w_rsrp",
        "mean_hos_proposed",
        "mean_hos_baseline",
        "mean_ho_ratio",
        "p5_rsrp_dbm",
        "min_rsrp_dbm",
    ])?;
    for a in weights {
        w.write_record([
            a.w_ho.to_string(),
            a.w_rsrp.to_string(),
            a.mean_hos_proposed.to_string(),
            a.mean_hos_baseline.to_string(),
            a.mean_ho_ratio.to_string(),
            a.p5_rsrp_dbm.to_string(),
            a.min_rsrp_dbm.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the seed manifest: one row per (weight pair, covered route).
pub fn write_seed_manifest_csv(
    result: &SweepResult,
    weights: &[(f64, f64)],
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "route_id",
        "weight_index",
        "w_ho",
        "w_rsrp",
        "route_seed",
        "flight_seed",
    ])?;
    for f in &result.flights {
        let weight_index = weights
            .iter()
            .position(|&(a, b)| a == f.w_ho && b == f.w_rsrp)
            .expect("flight weights come from the sweep config");
        w.write_record([
            f.route_id.to_string(),
            weight_index.to_string(),
            f.w_ho.to_string(),
            f.w_rsrp.to_string(),
            result.route_seeds[f.route_id].to_string(),
            derive_seed(result.master_seed, f.route_id as u64, weight_index as u64).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlearn::{discounted_return, dp_optimal};
    use crate::radio_map::RsrpSampleSet;
    use approx::assert_relative_eq;

    /// Small fully covered map with noisy per-bin cell strengths.
    fn toy_grid(cells: usize, seed: u64) -> RsrpGrid {
        let spec = GridSpec {
            width_m: 1000.0,
            height_m: 500.0,
            bin_size_m: 50.0,
            origin_x_m: 0.0,
            origin_y_m: 0.0,
        };
        let mut state = seed.max(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut set = RsrpSampleSet::new(cells, None);
        for by in 0..spec.bins_y() {
            for bx in 0..spec.bins_x() {
                let vals: Vec<f64> = (0..cells).map(|_| -110.0 + 50.0 * next()).collect();
                set.push(
                    (bx as f64 + 0.5) * spec.bin_size_m,
                    (by as f64 + 0.5) * spec.bin_size_m,
                    vals,
                );
            }
        }
        quantize(&set, &spec).unwrap()
    }

    fn straight_route(grid: &RsrpGrid, waypoints: usize) -> Trajectory {
        crate::trajectory::generate_trajectory(
            crate::trajectory::Waypoint::new(25.0, 225.0),
            crate::trajectory::Waypoint::new(25.0 + 50.0 * (waypoints - 1) as f64, 225.0),
            50.0,
            grid.spec(),
        )
        .unwrap()
    }

    #[test]
    fn zero_ho_weight_gives_exact_ratio_one() {
        let grid = toy_grid(4, 0xAB);
        let route = straight_route(&grid, 12);
        let hp = HyperParams {
            w_ho: 0.0,
            w_rsrp: 1.0,
            k: 3,
            ..HyperParams::default()
        };
        let flight = run_flight(&grid, &route, &hp, 5, 0).unwrap();
        assert_eq!(flight.ho_ratio, Some(1.0));
        assert_eq!(flight.ho_count_proposed, flight.ho_count_baseline);
        assert_eq!(
            flight.rsrp_trace_proposed_dbm,
            flight.rsrp_trace_baseline_dbm
        );
    }

    #[test]
    fn stationary_route_has_zero_handovers() {
        let grid = toy_grid(3, 0xCD);
        let route = crate::trajectory::generate_trajectory(
            crate::trajectory::Waypoint::new(100.0, 100.0),
            crate::trajectory::Waypoint::new(100.0, 100.0),
            50.0,
            grid.spec(),
        )
        .unwrap();
        let hp = HyperParams {
            k: 2,
            ..HyperParams::default()
        };
        let flight = run_flight(&grid, &route, &hp, 1, 7).unwrap();
        assert_eq!(flight.ho_count_proposed, 0);
        assert_eq!(flight.ho_count_baseline, 0);
        assert_eq!(flight.ho_ratio, Some(1.0));
        assert_eq!(flight.rsrp_trace_proposed_dbm.len(), 1);
    }

    #[test]
    fn flight_ho_count_matches_dp_oracle_on_small_route() {
        let grid = toy_grid(4, 0xEF);
        let route = straight_route(&grid, 5);
        let hp = HyperParams {
            k: 2,
            episodes: 5000,
            ..HyperParams::default()
        };
        let flight = run_flight(&grid, &route, &hp, 99, 0).unwrap();

        let cand = build_candidates(&grid, &route, hp.k).unwrap();
        let (reward, _) = build_reward(&cand, hp.w_ho, hp.w_rsrp).unwrap();
        let (dp_policy, dp_value) = dp_optimal(&reward, &cand, hp.lambda);
        assert_eq!(flight.ho_count_proposed, dp_policy.ho_count);

        // and the learned return agrees with the oracle value
        let q = train(&reward, &hp, 99).unwrap();
        let learned = extract_policy(&q, &cand);
        assert_relative_eq!(
            discounted_return(&reward, &learned.ranks(), hp.lambda),
            dp_value,
            epsilon = 1e-9
        );
    }

    #[test]
    fn cdf_single_value_jumps_to_one() {
        let cdf = empirical_cdf(&[5.0]).unwrap();
        let points: Vec<(f64, f64)> = cdf.points().collect();
        assert_eq!(points, vec![(5.0, 1.0)]);
    }

    #[test]
    fn cdf_quartiles_step_evenly() {
        let cdf = empirical_cdf(&[4.0, 2.0, 3.0, 1.0]).unwrap();
        let points: Vec<(f64, f64)> = cdf.points().collect();
        assert_eq!(
            points,
            vec![(1.0, 0.25), (2.0, 0.5), (3.0, 0.75), (4.0, 1.0)]
        );
    }

    #[test]
    fn cdf_quantile_reads_order_statistics() {
        let values: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        let cdf = empirical_cdf(&values).unwrap();
        assert_eq!(cdf.quantile(0.05), 5.0);
        assert_eq!(cdf.quantile(0.5), 50.0);
        assert_eq!(cdf.quantile(1.0), 100.0);
        assert_eq!(cdf.quantile(0.0), 1.0);
    }

    #[test]
    fn cdf_mean_recovers_sample_mean() {
        let values = [3.0, 3.0, 7.0, 1.0, 3.0, 9.5];
        let cdf = empirical_cdf(&values).unwrap();
        let expected = values.iter().sum::<f64>() / values.len() as f64;
        assert_relative_eq!(cdf.mean(), expected, epsilon = 1e-12);
    }

    #[test]
    fn cdf_rejects_empty_input() {
        assert!(matches!(empirical_cdf(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn cdf_probs_are_nondecreasing_and_end_at_one() {
        let cdf = empirical_cdf(&[2.0, 2.0, 2.0, 5.0, -1.0]).unwrap();
        let probs: Vec<f64> = cdf.points().map(|(_, p)| p).collect();
        assert!(probs.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*probs.last().unwrap(), 1.0);
    }

    fn small_experiment(grid_seed: u64) -> (RsrpGrid, ExperimentConfig) {
        let grid = toy_grid(5, grid_seed);
        let cfg = ExperimentConfig {
            map: MapSource::Synthetic {
                grid: *grid.spec(),
                config: SyntheticMapConfig::default(),
                num_samples: 0,
            },
            hp: HyperParams {
                k: 3,
                episodes: 400,
                ..HyperParams::default()
            },
            num_routes: 12,
            weights: vec![(0.0, 1.0), (1.0, 9.0), (1.0, 1.0)],
            step_length_m: 50.0,
            min_route_length_m: 400.0,
            master_seed: 2024,
            parallel: 1,
        };
        (grid, cfg)
    }

    #[test]
    fn sweep_zero_cost_weight_matches_baseline_everywhere() {
        let (grid, cfg) = small_experiment(0x1234);
        let result = sweep_on_grid(&grid, &cfg).unwrap();
        let agg = &result.weights[0];
        assert_eq!(agg.w_ho, 0.0);
        assert_relative_eq!(agg.mean_ho_ratio, 1.0);
        assert_eq!(agg.cdf_rsrp_proposed_dbm, agg.cdf_rsrp_baseline_dbm);
        for f in result.flights.iter().filter(|f| f.w_ho == 0.0) {
            assert_eq!(f.ho_ratio, Some(1.0));
        }
    }

    #[test]
    fn sweep_is_deterministic_and_parallel_invariant() {
        let (grid, cfg) = small_experiment(0x777);
        let a = sweep_on_grid(&grid, &cfg).unwrap();
        let b = sweep_on_grid(&grid, &cfg).unwrap();
        assert_eq!(a, b);
        let par = ExperimentConfig {
            parallel: 4,
            ..cfg.clone()
        };
        let c = sweep_on_grid(&grid, &par).unwrap();
        assert_eq!(a, c);
        assert_eq!(
            a.flights.len(),
            cfg.weights.len() * (cfg.num_routes - a.skipped_routes.len())
        );
    }

    #[test]
    fn sweep_mean_equals_cdf_mean() {
        let (grid, cfg) = small_experiment(0x99);
        let result = sweep_on_grid(&grid, &cfg).unwrap();
        for agg in &result.weights {
            assert_relative_eq!(
                agg.cdf_hos_proposed.mean(),
                agg.mean_hos_proposed,
                epsilon = 1e-9
            );
            assert_relative_eq!(
                agg.cdf_hos_baseline.mean(),
                agg.mean_hos_baseline,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn baseline_rsrp_dominates_proposed_at_every_quantile() {
        let (grid, cfg) = small_experiment(0x31415);
        let result = sweep_on_grid(&grid, &cfg).unwrap();
        for agg in &result.weights {
            let mut proposed: Vec<f64> = result
                .flights
                .iter()
                .filter(|f| f.w_ho == agg.w_ho && f.w_rsrp == agg.w_rsrp)
                .flat_map(|f| f.rsrp_trace_proposed_dbm.iter().copied())
                .collect();
            let mut baseline: Vec<f64> = result
                .flights
                .iter()
                .filter(|f| f.w_ho == agg.w_ho && f.w_rsrp == agg.w_rsrp)
                .flat_map(|f| f.rsrp_trace_baseline_dbm.iter().copied())
                .collect();
            proposed.sort_by(|a, b| a.partial_cmp(b).unwrap());
            baseline.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (p, b) in proposed.iter().zip(&baseline) {
                assert!(b >= p, "baseline order statistic below proposed");
            }
        }
    }

    #[test]
    fn uncovered_routes_are_skipped_with_diagnostics() {
        // only one bin is populated: every route must leave it and be skipped
        let spec = GridSpec {
            width_m: 1000.0,
            height_m: 500.0,
            bin_size_m: 50.0,
            origin_x_m: 0.0,
            origin_y_m: 0.0,
        };
        let mut set = RsrpSampleSet::new(2, None);
        set.push(25.0, 25.0, vec![-70.0, -80.0]);
        set.push(30.0, 30.0, vec![-75.0, -85.0]);
        let grid = quantize(&set, &spec).unwrap();
        let cfg = ExperimentConfig {
            map: MapSource::Synthetic {
                grid: spec,
                config: SyntheticMapConfig::default(),
                num_samples: 0,
            },
            hp: HyperParams {
                k: 2,
                ..HyperParams::default()
            },
            num_routes: 4,
            weights: vec![(1.0, 1.0)],
            step_length_m: 50.0,
            min_route_length_m: 300.0,
            master_seed: 5,
            parallel: 1,
        };
        let err = sweep_on_grid(&grid, &cfg).unwrap_err();
        assert!(matches!(err, Error::AllRoutesUncovered));
    }

    #[test]
    fn seed_derivation_is_stable_and_collision_resistant() {
        assert_eq!(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
        assert_ne!(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
        assert_ne!(route_seed(1, 2), derive_seed(1, 2, 0));
    }

    #[test]
    fn flight_csv_serializes_missing_ratio_as_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flights.csv");
        let flights = vec![FlightResult {
            route_id: 3,
            w_ho: 1.0,
            w_rsrp: 2.0,
            ho_count_proposed: 2,
            ho_count_baseline: 0,
            ho_ratio: None,
            rsrp_trace_proposed_dbm: vec![-70.0],
            rsrp_trace_baseline_dbm: vec![-69.0],
        }];
        write_flights_csv(&flights, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "route_id,w_ho,w_rsrp,ho_proposed,ho_baseline,ho_ratio"
        );
        assert_eq!(text.lines().nth(1).unwrap(), "3,1.0,2.0,2,0,");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn cdf_is_a_valid_distribution(
                values in proptest::collection::vec(-1000.0..1000.0f64, 1..200),
            ) {
                let cdf = empirical_cdf(&values).unwrap();
                let probs: Vec<f64> = cdf.points().map(|(_, p)| p).collect();
                prop_assert!(probs.windows(2).all(|w| w[0] < w[1]));
                prop_assert_eq!(*probs.last().unwrap(), 1.0);
                let vals: Vec<f64> = cdf.points().map(|(v, _)| v).collect();
                prop_assert!(vals.windows(2).all(|w| w[0] < w[1]));
            }

            #[test]
            fn cdf_quantile_matches_order_statistics(
                values in proptest::collection::vec(-100.0..100.0f64, 1..100),
                p in 0.01..1.0f64,
            ) {
                let cdf = empirical_cdf(&values).unwrap();
                let mut sorted = values.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let idx = (p * sorted.len() as f64).ceil() as usize - 1;
                prop_assert_eq!(cdf.quantile(p), sorted[idx.min(sorted.len() - 1)]);
            }

            #[test]
            fn optimal_return_dominates_baseline_return(
                seed in 1u64..10_000,
                w_ho in 0.0..3.0f64,
                w_rsrp in 0.05..3.0f64,
                lambda in 0.0..0.9f64,
            ) {
                let cand = crate::qlearn::tests::random_table(10, 3, 5, seed);
                let (reward, _) = build_reward(&cand, w_ho, w_rsrp).unwrap();
                let (_, dp_value) = dp_optimal(&reward, &cand, lambda);
                let base = baseline_policy(&cand);
                let base_return = discounted_return(&reward, &base.ranks(), lambda);
                prop_assert!(dp_value >= base_return - 1e-12);
            }

            #[test]
            fn ho_ratio_is_defined_exactly_when_spec_says(
                proposed in 0usize..40,
                baseline in 0usize..40,
            ) {
                match ho_ratio(proposed, baseline) {
                    Some(r) => {
                        prop_assert!(r >= 0.0);
                        if baseline == 0 {
                            prop_assert_eq!(proposed, 0);
                            prop_assert_eq!(r, 1.0);
                        } else if proposed == baseline {
                            prop_assert_eq!(r, 1.0);
                        }
                    }
                    None => {
                        prop_assert_eq!(baseline, 0);
                        prop_assert!(proposed > 0);
                    }
                }
            }
        }
    }
}
