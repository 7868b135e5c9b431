//! End-to-end single-route training: map -> route -> Q-learning -> policy.
//!
//! Compares the learned handover policy against the always-strongest-cell
//! baseline on one flight and writes both policies under
//! `hosim-out/train-route/`.

use hosim::qlearn::{
    baseline_policy, build_candidates, build_reward, discounted_return, extract_policy, train,
    write_policy_csv, HyperParams,
};
use hosim::radio_map::{quantize, synthesize_samples, GridSpec, SyntheticMapConfig};
use hosim::trajectory::{generate_trajectory, validate_route_coverage, Waypoint};

fn main() -> hosim::Result<()> {
    let spec = GridSpec::default();
    let samples = synthesize_samples(&SyntheticMapConfig::default(), &spec, 180_000)?;
    let grid = quantize(&samples, &spec)?;

    let route = generate_trajectory(
        Waypoint::new(500.0, 500.0),
        Waypoint::new(5500.0, 4500.0),
        50.0,
        &spec,
    )?;
    assert!(validate_route_coverage(&route, &grid).is_empty());
    println!("route: {} waypoints", route.len());

    let hp = HyperParams::default(); // w_ho = 1, w_rsrp = 9, n = 1000
    let candidates = build_candidates(&grid, &route, hp.k)?;
    let (reward, _) = build_reward(&candidates, hp.w_ho, hp.w_rsrp)?;
    let q = train(&reward, &hp, 42)?;
    let learned = extract_policy(&q, &candidates);
    let baseline = baseline_policy(&candidates);

    let mean = |trace: &[f64]| trace.iter().sum::<f64>() / trace.len() as f64;
    println!(
        "learned:  {} handovers, mean serving RSRP {:.2} dBm, return {:.4}",
        learned.ho_count,
        mean(&learned.raw_dbm_trace()),
        discounted_return(&reward, &learned.ranks(), hp.lambda)
    );
    println!(
        "baseline: {} handovers, mean serving RSRP {:.2} dBm, return {:.4}",
        baseline.ho_count,
        mean(&baseline.raw_dbm_trace()),
        discounted_return(&reward, &baseline.ranks(), hp.lambda)
    );

    let out = std::path::Path::new("hosim-out/train-route");
    std::fs::create_dir_all(out)?;
    write_policy_csv(&learned, &route, &out.join("policy_proposed.csv"))?;
    write_policy_csv(&baseline, &route, &out.join("policy_baseline.csv"))?;
    println!("wrote {}", out.display());
    Ok(())
}
