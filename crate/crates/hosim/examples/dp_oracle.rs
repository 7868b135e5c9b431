//! Check the learned policy against the exact backward-induction oracle.
//!
//! On small instances the deterministic finite-horizon problem can be
//! solved exactly; a converged Q-learning run must reach the same
//! discounted return.

use hosim::qlearn::{
    build_candidates, build_reward, discounted_return, dp_optimal, extract_policy, train,
    HyperParams,
};
use hosim::radio_map::{quantize, synthesize_samples, GridSpec, SyntheticMapConfig};
use hosim::trajectory::{generate_trajectory, Waypoint};

fn main() -> hosim::Result<()> {
    let spec = GridSpec {
        width_m: 2000.0,
        height_m: 1000.0,
        bin_size_m: 50.0,
        ..GridSpec::default()
    };
    let map_config = SyntheticMapConfig {
        bs_positions: vec![[400.0, 500.0], [1600.0, 500.0]],
        shadowing_std_db: 5.0,
        seed: 3,
        ..SyntheticMapConfig::default()
    };
    let samples = synthesize_samples(&map_config, &spec, 16_000)?;
    let grid = quantize(&samples, &spec)?;

    // short route, small action space: the oracle enumerates exactly
    let route = generate_trajectory(
        Waypoint::new(200.0, 300.0),
        Waypoint::new(900.0, 700.0),
        50.0,
        &spec,
    )?;
    let hp = HyperParams {
        k: 2,
        episodes: 5000,
        w_ho: 1.0,
        w_rsrp: 2.0,
        ..HyperParams::default()
    };

    let candidates = build_candidates(&grid, &route, hp.k)?;
    let (reward, _) = build_reward(&candidates, hp.w_ho, hp.w_rsrp)?;

    let q = train(&reward, &hp, 2024)?;
    let learned = extract_policy(&q, &candidates);
    let learned_return = discounted_return(&reward, &learned.ranks(), hp.lambda);

    let (oracle, oracle_return) = dp_optimal(&reward, &candidates, hp.lambda);

    println!("route: {} waypoints, k = {}", route.len(), hp.k);
    println!(
        "learned: return {learned_return:.9}, {} handovers",
        learned.ho_count
    );
    println!(
        "oracle:  return {oracle_return:.9}, {} handovers",
        oracle.ho_count
    );
    println!("return gap: {:.3e}", (oracle_return - learned_return).abs());
    println!("policies identical: {}", learned.cells() == oracle.cells());
    Ok(())
}
