//! Generate flight trajectories with the 8-direction greedy stepping rule.
//!
//! Shows a fixed start/end route and a batch of seeded random routes, and
//! writes the fixed one to `hosim-out/gen-route/route.csv`.

use hosim::radio_map::GridSpec;
use hosim::trajectory::{generate_trajectory, random_route, write_trajectory_csv, Waypoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hosim::Result<()> {
    let bounds = GridSpec::default();

    let start = Waypoint::new(400.0, 600.0);
    let end = Waypoint::new(5300.0, 4200.0);
    let route = generate_trajectory(start, end, 50.0, &bounds)?;
    println!(
        "route ({}, {}) -> ({}, {}): {} waypoints, step {} m",
        start.x_m,
        start.y_m,
        end.x_m,
        end.y_m,
        route.len(),
        route.step_length_m
    );
    for (i, wp) in route.waypoints.iter().take(5).enumerate() {
        let dir = route.directions.get(i).map(|d| d.index());
        println!(
            "  wp {i}: ({:.1}, {:.1}) direction {:?}",
            wp.x_m, wp.y_m, dir
        );
    }
    println!(
        "  ... final waypoint ({:.1}, {:.1})",
        route.waypoints.last().unwrap().x_m,
        route.waypoints.last().unwrap().y_m
    );

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..3 {
        let random = random_route(&bounds, 50.0, 2000.0, &mut rng)?;
        let length = random.waypoints[0].distance_to(random.waypoints.last().unwrap());
        println!(
            "random route {i}: {} waypoints, start-to-end distance {:.0} m",
            random.len(),
            length
        );
    }

    let out = std::path::Path::new("hosim-out/gen-route");
    std::fs::create_dir_all(out)?;
    write_trajectory_csv(&route, &out.join("route.csv"))?;
    println!("wrote {}", out.join("route.csv").display());
    Ok(())
}
