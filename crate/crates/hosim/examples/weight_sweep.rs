//! Mini experiment sweep over handover/RSRP weight combinations.
//!
//! Builds the default synthetic map, flies a batch of seeded random routes
//! under each weight pair, and prints the handover/RSRP trade-off table.
//! The full-scale version of this experiment is `hosim sweep`.

use hosim::eval::{sweep_on_grid, ExperimentConfig, MapSource};
use hosim::qlearn::HyperParams;
use hosim::radio_map::{GridSpec, SyntheticMapConfig};

fn main() -> hosim::Result<()> {
    let grid_spec = GridSpec::default();
    let map_config = SyntheticMapConfig::default();

    let experiment = ExperimentConfig {
        map: MapSource::Synthetic {
            grid: grid_spec,
            config: map_config,
            num_samples: 180_000,
        },
        hp: HyperParams::default(),
        num_routes: 60,
        weights: vec![(0.0, 1.0), (1.0, 9.0), (1.0, 4.0), (1.0, 1.0), (4.0, 1.0)],
        step_length_m: 50.0,
        min_route_length_m: 2000.0,
        master_seed: 7,
        parallel: 0,
    };

    let grid = experiment.map.build()?;
    println!(
        "map: {} x {} bins, {} cells, coverage {:.3}%",
        grid.spec().bins_x(),
        grid.spec().bins_y(),
        grid.num_cells(),
        100.0 * grid.coverage_fraction()
    );

    let result = sweep_on_grid(&grid, &experiment)?;
    println!(
        "{} flights, {} skipped routes",
        result.flights.len(),
        result.skipped_routes.len()
    );
    println!("w_ho/w_rsrp  mean_HOs  baseline  mean_ratio  p5_rsrp_dbm  min_rsrp_dbm  p5_gap_db");
    for agg in &result.weights {
        let ratio = agg.w_ho / agg.w_rsrp;
        let p5_gap = agg.cdf_rsrp_baseline_dbm.quantile(0.05) - agg.p5_rsrp_dbm;
        println!(
            "{:>11.3}  {:>8.2}  {:>8.2}  {:>10.4}  {:>11.2}  {:>12.2}  {:>9.2}",
            ratio,
            agg.mean_hos_proposed,
            agg.mean_hos_baseline,
            agg.mean_ho_ratio,
            agg.p5_rsrp_dbm,
            agg.min_rsrp_dbm,
            p5_gap
        );
    }
    Ok(())
}
