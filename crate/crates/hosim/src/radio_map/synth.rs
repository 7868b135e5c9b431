//! Synthetic RSRP sample generation.
//!
//! Substitute for a measured dataset: log-distance path loss plus a
//! hard-edged main-lobe/sidelobe antenna pattern per sector and log-normal
//! shadowing. Downtilted sectors leave the area near each site served by
//! sidelobes only, which fragments the strongest-cell map the same way
//! sidelobe-dominated sky coverage does.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio_map::{GridSpec, RsrpSampleSet};

/// Distances below this are clamped before the path-loss log.
const MIN_DISTANCE_M: f64 = 1.0;

/// Parameters of the synthetic deployment.
///
/// Cells are numbered `bs_index * sectors_per_bs + sector_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticMapConfig {
    /// Base-station positions in meters; all must lie inside the area.
    pub bs_positions: Vec<[f64; 2]>,
    pub sectors_per_bs: usize,
    /// Boresight azimuth per sector, shared by every base station.
    pub sector_azimuths_rad: Vec<f64>,
    pub path_loss_exponent: f64,
    pub tx_power_dbm: f64,
    pub main_lobe_gain_db: f64,
    pub sidelobe_gain_db: f64,
    /// Main-lobe axis points this far below the horizontal.
    pub downtilt_rad: f64,
    /// Full cone width of the main lobe.
    pub beamwidth_rad: f64,
    pub shadowing_std_db: f64,
    /// Height of the sampling plane above the base stations.
    pub altitude_m: f64,
    pub seed: u64,
}

impl Default for SyntheticMapConfig {
    /// Seven three-sector sites spread over the default 6 x 5 km area.
    fn default() -> Self {
        use std::f64::consts::PI;
        SyntheticMapConfig {
            bs_positions: vec![
                [1000.0, 1250.0],
                [1000.0, 3750.0],
                [3000.0, 500.0],
                [3000.0, 2500.0],
                [3000.0, 4500.0],
                [5000.0, 1250.0],
                [5000.0, 3750.0],
            ],
            sectors_per_bs: 3,
            sector_azimuths_rad: vec![PI / 2.0, PI * 7.0 / 6.0, PI * 11.0 / 6.0],
            path_loss_exponent: 3.0,
            tx_power_dbm: 46.0,
            main_lobe_gain_db: 14.0,
            sidelobe_gain_db: -2.0,
            downtilt_rad: 0.09,
            beamwidth_rad: 0.35,
            shadowing_std_db: 6.0,
            altitude_m: 50.0,
            seed: 7,
        }
    }
}

impl SyntheticMapConfig {
    pub fn num_cells(&self) -> usize {
        self.bs_positions.len() * self.sectors_per_bs
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        spec.validate()?;
        if self.bs_positions.is_empty() {
            return Err(Error::invalid_config("at least one base station required"));
        }
        for &[x, y] in &self.bs_positions {
            if !spec.contains(x, y) {
                return Err(Error::invalid_config(format!(
                    "base station at ({x}, {y}) lies outside the service area"
                )));
            }
        }
        if self.sectors_per_bs == 0 {
            return Err(Error::invalid_config("sectors_per_bs must be at least 1"));
        }
        if self.sector_azimuths_rad.len() != self.sectors_per_bs {
            return Err(Error::invalid_config(format!(
                "expected {} sector azimuths, got {}",
                self.sectors_per_bs,
                self.sector_azimuths_rad.len()
            )));
        }
        if self.path_loss_exponent <= 0.0 {
            return Err(Error::invalid_config("path_loss_exponent must be positive"));
        }
        if self.beamwidth_rad <= 0.0 {
            return Err(Error::invalid_config("beamwidth_rad must be positive"));
        }
        if self.shadowing_std_db < 0.0 {
            return Err(Error::invalid_config(
                "shadowing_std_db must be nonnegative",
            ));
        }
        if self.altitude_m < 0.0 {
            return Err(Error::invalid_config("altitude_m must be nonnegative"));
        }
        Ok(())
    }

    /// Mean RSRP (dBm) per cell at a position, without shadowing.
    pub fn rsrp_at(&self, x: f64, y: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_cells());
        for &[bx, by] in &self.bs_positions {
            let dx = x - bx;
            let dy = y - by;
            let horizontal = (dx * dx + dy * dy).sqrt();
            let distance = (horizontal * horizontal + self.altitude_m * self.altitude_m)
                .sqrt()
                .max(MIN_DISTANCE_M);
            let path_loss = 10.0 * self.path_loss_exponent * distance.log10();
            // direction from the antenna to the sample point
            let bearing = dy.atan2(dx);
            let elevation = self.altitude_m.atan2(horizontal);
            for &azimuth in &self.sector_azimuths_rad {
                let gain = self.antenna_gain_db(bearing, elevation, azimuth);
                out.push(self.tx_power_dbm - path_loss + gain);
            }
        }
        out
    }

    /// Hard-edged pattern: main-lobe gain inside a cone of `beamwidth_rad`
    /// around the boresight (azimuth, -downtilt), sidelobe floor elsewhere.
    fn antenna_gain_db(&self, bearing: f64, elevation: f64, azimuth: f64) -> f64 {
        let tilt = -self.downtilt_rad;
        // angle between boresight and the direction to the sample
        let cos_angle =
            tilt.cos() * elevation.cos() * (bearing - azimuth).cos() + tilt.sin() * elevation.sin();
        let angle = cos_angle.clamp(-1.0, 1.0).acos();
        if angle <= self.beamwidth_rad / 2.0 {
            self.main_lobe_gain_db
        } else {
            self.sidelobe_gain_db
        }
    }
}

/// Scatters `num_samples` positions uniformly over the area and evaluates
/// per-cell RSRP at each: transmit power minus path loss, plus the sector
/// antenna gain and a zero-mean shadowing draw. Bit-reproducible for a
/// fixed seed.
pub fn synthesize_samples(
    config: &SyntheticMapConfig,
    spec: &GridSpec,
    num_samples: usize,
) -> Result<RsrpSampleSet> {
    config.validate(spec)?;
    if num_samples < spec.num_bins() {
        return Err(Error::invalid_config(format!(
            "num_samples = {} is below one sample per bin on average ({} bins)",
            num_samples,
            spec.num_bins()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shadowing = if config.shadowing_std_db > 0.0 {
        Some(Normal::new(0.0, config.shadowing_std_db).expect("std validated finite"))
    } else {
        None
    };

    let mut set = RsrpSampleSet::new(config.num_cells(), Some(config.altitude_m));
    set.samples.reserve(num_samples);
    for _ in 0..num_samples {
        let x = spec.origin_x_m + rng.random::<f64>() * spec.width_m;
        let y = spec.origin_y_m + rng.random::<f64>() * spec.height_m;
        let mut values = config.rsrp_at(x, y);
        if let Some(normal) = &shadowing {
            for v in &mut values {
                *v += normal.sample(&mut rng);
            }
        }
        set.push(x, y, values);
    }
    Ok(set)
}
