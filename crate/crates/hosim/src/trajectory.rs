//! Fixed 2D flight trajectories built from 8-direction greedy stepping.
//!
//! From the start point, the step direction minimizing the Euclidean
//! distance to the destination is taken repeatedly until no in-bounds step
//! strictly improves on the current distance. All generation is
//! deterministic; randomness only enters through seeded endpoint draws.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::radio_map::{GridSpec, RsrpGrid};

/// One of the 8 movement directions, at angle `index * pi/4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Direction(u8);

impl Direction {
    pub const COUNT: usize = 8;

    /// All directions in index order.
    pub fn all() -> [Direction; 8] {
        [0, 1, 2, 3, 4, 5, 6, 7].map(Direction)
    }

    pub fn from_index(index: u8) -> Result<Direction> {
        if index >= 8 {
            return Err(Error::invalid_config(format!(
                "direction index {index} out of range 0..8"
            )));
        }
        Ok(Direction(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn angle_rad(self) -> f64 {
        self.0 as f64 * std::f64::consts::FRAC_PI_4
    }

    /// Unit displacement (cos, sin); diagonal steps keep total length 1.
    pub fn unit(self) -> (f64, f64) {
        let a = self.angle_rad();
        (a.cos(), a.sin())
    }
}

/// A point on the trajectory where a handover decision may be taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub x_m: f64,
    pub y_m: f64,
}

impl Waypoint {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Waypoint { x_m, y_m }
    }

    pub fn distance_to(&self, other: &Waypoint) -> f64 {
        ((self.x_m - other.x_m).powi(2) + (self.y_m - other.y_m).powi(2)).sqrt()
    }
}

/// An ordered waypoint sequence with the direction taken out of each
/// waypoint. `directions.len() == waypoints.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    pub step_length_m: f64,
    pub directions: Vec<Direction>,
}

impl Trajectory {
    /// Number of waypoints.
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// Number of handover decision transitions (`len - 1`).
    pub fn transitions(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }
}

/// Greedy 8-direction stepping from `start` toward `end`.
///
/// At each waypoint the in-bounds candidate step that most reduces the
/// distance to `end` is taken (ties to the lowest direction index);
/// generation stops when no step strictly improves, which bounds the
/// path length and leaves the final waypoint as close to `end` as the
/// stepping rule can reach.
pub fn generate_trajectory(
    start: Waypoint,
    end: Waypoint,
    step_length_m: f64,
    bounds: &GridSpec,
) -> Result<Trajectory> {
    if !bounds.contains(start.x_m, start.y_m) {
        return Err(Error::OutOfBounds {
            x: start.x_m,
            y: start.y_m,
        });
    }
    if !bounds.contains(end.x_m, end.y_m) {
        return Err(Error::OutOfBounds {
            x: end.x_m,
            y: end.y_m,
        });
    }
    if step_length_m <= 0.0 {
        return Err(Error::invalid_config("step_length_m must be positive"));
    }

    let mut waypoints = vec![start];
    let mut directions = Vec::new();
    let mut current = start;
    let mut current_distance = current.distance_to(&end);

    loop {
        let mut best: Option<(Direction, Waypoint, f64)> = None;
        for dir in Direction::all() {
            let (ux, uy) = dir.unit();
            let candidate = Waypoint::new(
                current.x_m + step_length_m * ux,
                current.y_m + step_length_m * uy,
            );
            if !bounds.contains(candidate.x_m, candidate.y_m) {
                continue;
            }
            let d = candidate.distance_to(&end);
            if d < current_distance && best.as_ref().is_none_or(|(_, _, bd)| d < *bd) {
                best = Some((dir, candidate, d));
            }
        }
        match best {
            None => break,
            Some((dir, next, d)) => {
                directions.push(dir);
                waypoints.push(next);
                current = next;
                current_distance = d;
            }
        }
    }

    Ok(Trajectory {
        waypoints,
        step_length_m,
        directions,
    })
}

/// Draws start and end uniformly over the area until they are at least
/// `min_length_m` apart, then generates the trajectory between them.
pub fn random_route<R: Rng>(
    bounds: &GridSpec,
    step_length_m: f64,
    min_length_m: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    let diagonal = (bounds.width_m.powi(2) + bounds.height_m.powi(2)).sqrt();
    if min_length_m >= diagonal {
        return Err(Error::invalid_config(format!(
            "min_length_m = {min_length_m} exceeds the area diagonal {diagonal:.1}"
        )));
    }
    for _ in 0..100_000 {
        let start = Waypoint::new(
            bounds.origin_x_m + rng.random::<f64>() * bounds.width_m,
            bounds.origin_y_m + rng.random::<f64>() * bounds.height_m,
        );
        let end = Waypoint::new(
            bounds.origin_x_m + rng.random::<f64>() * bounds.width_m,
            bounds.origin_y_m + rng.random::<f64>() * bounds.height_m,
        );
        if start.distance_to(&end) >= min_length_m {
            return generate_trajectory(start, end, step_length_m, bounds);
        }
    }
    Err(Error::invalid_config(
        "could not draw endpoints satisfying min_length_m",
    ))
}

/// Indices of waypoints whose bin holds no samples (or falls outside the
/// grid). Empty result means the route is fully covered.
pub fn validate_route_coverage(trajectory: &Trajectory, grid: &RsrpGrid) -> Vec<usize> {
    let mut uncovered = Vec::new();
    for (i, wp) in trajectory.waypoints.iter().enumerate() {
        match grid.spec().bin_of(wp.x_m, wp.y_m) {
            Ok((bx, by)) if grid.is_populated(bx, by) => {}
            _ => uncovered.push(i),
        }
    }
    uncovered
}

// ---------------------------------------------------------------------------
// CSV interface: index,x_m,y_m,direction_index
// ---------------------------------------------------------------------------

/// Writes the route; `direction_index` is the step taken out of each
/// waypoint, empty on the final one.
pub fn write_trajectory_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "x_m", "y_m", "direction_index"])?;
    for (i, wp) in trajectory.waypoints.iter().enumerate() {
        let dir = trajectory
            .directions
            .get(i)
            .map(|d| d.index().to_string())
            .unwrap_or_default();
        w.write_record([i.to_string(), wp.x_m.to_string(), wp.y_m.to_string(), dir])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a route back; the step length is recovered from the first step
/// and every recorded direction is checked against the waypoint deltas.
pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let malformed = |reason: String| Error::MalformedFile {
        path: path.to_path_buf(),
        reason,
    };
    let mut r = csv::Reader::from_path(path)?;
    {
        let header = r.headers()?;
        if header != vec!["index", "x_m", "y_m", "direction_index"] {
            return Err(malformed(
                "header must be index,x_m,y_m,direction_index".into(),
            ));
        }
    }

    let mut waypoints = Vec::new();
    let mut directions = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let index: usize = record[0]
            .parse()
            .map_err(|_| malformed(format!("bad index: {}", &record[0])))?;
        if index != row {
            return Err(malformed(format!("row {row} carries index {index}")));
        }
        let x: f64 = record[1]
            .parse()
            .map_err(|_| malformed(format!("bad x_m: {}", &record[1])))?;
        let y: f64 = record[2]
            .parse()
            .map_err(|_| malformed(format!("bad y_m: {}", &record[2])))?;
        waypoints.push(Waypoint::new(x, y));
        if !record[3].is_empty() {
            let idx: u8 = record[3]
                .parse()
                .map_err(|_| malformed(format!("bad direction_index: {}", &record[3])))?;
            directions.push(Direction::from_index(idx)?);
        }
    }

    if waypoints.is_empty() {
        return Err(Error::EmptyInput("trajectory file"));
    }
    if directions.len() != waypoints.len() - 1 {
        return Err(malformed(format!(
            "{} waypoints need {} directions, found {}",
            waypoints.len(),
            waypoints.len() - 1,
            directions.len()
        )));
    }

    let step_length_m = if waypoints.len() >= 2 {
        waypoints[0].distance_to(&waypoints[1])
    } else {
        0.0
    };
    for (i, dir) in directions.iter().enumerate() {
        let (ux, uy) = dir.unit();
        let dx = waypoints[i + 1].x_m - waypoints[i].x_m;
        let dy = waypoints[i + 1].y_m - waypoints[i].y_m;
        let tol = 1e-6 * step_length_m.max(1.0);
        if (dx - step_length_m * ux).abs() > tol || (dy - step_length_m * uy).abs() > tol {
            return Err(malformed(format!(
                "step {i} does not match direction {} at length {step_length_m}",
                dir.index()
            )));
        }
    }

    Ok(Trajectory {
        waypoints,
        step_length_m,
        directions,
    })
}
