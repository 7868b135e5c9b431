//! Run configuration: a single TOML document covering the grid geometry,
//! map source, hyperparameters, and experiment design. Unknown keys are
//! rejected and every nested invariant is checked before any work starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{ExperimentConfig, MapSource};
use crate::qlearn::HyperParams;
use crate::radio_map::{GridSpec, SyntheticMapConfig};

/// Which sample source feeds the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Synthetic,
    Csv,
}

/// `[map]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub kind: MapKind,
    /// Samples to draw when `kind = "synthetic"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_samples: Option<usize>,
    /// Sample file when `kind = "csv"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticMapConfig>,
}

impl Default for MapSection {
    fn default() -> Self {
        MapSection {
            kind: MapKind::Synthetic,
            num_samples: Some(180_000),
            samples_csv: None,
            synthetic: Some(SyntheticMapConfig::default()),
        }
    }
}

/// `[experiment]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub num_routes: usize,
    /// `(w_ho, w_rsrp)` pairs.
    pub weights: Vec<(f64, f64)>,
    pub step_length_m: f64,
    pub min_route_length_m: f64,
    pub master_seed: u64,
    /// Worker threads; 0 lets the runtime decide.
    #[serde(default)]
    pub parallel: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            num_routes: 2000,
            weights: vec![(0.0, 1.0), (1.0, 9.0), (1.0, 4.0), (1.0, 1.0), (4.0, 1.0)],
            step_length_m: 50.0,
            min_route_length_m: 2000.0,
            master_seed: 7,
            parallel: 0,
        }
    }
}

/// The whole run configuration document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub grid: GridSpec,
    pub map: MapSection,
    pub hyperparams: HyperParams,
    pub experiment: ExperimentSection,
}

impl RunConfig {
    /// Parses and validates a TOML file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::invalid_config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        match self.map.kind {
            MapKind::Synthetic => {
                let synthetic = self.map.synthetic.as_ref().ok_or_else(|| {
                    Error::invalid_config("map.kind = synthetic requires a [map.synthetic] table")
                })?;
                if self.map.num_samples.is_none() {
                    return Err(Error::invalid_config(
                        "map.kind = synthetic requires map.num_samples",
                    ));
                }
                if self.map.samples_csv.is_some() {
                    return Err(Error::invalid_config(
                        "map.samples_csv is only valid with map.kind = csv",
                    ));
                }
                synthetic.validate(&self.grid)?;
            }
            MapKind::Csv => {
                if self.map.samples_csv.is_none() {
                    return Err(Error::invalid_config(
                        "map.kind = csv requires map.samples_csv",
                    ));
                }
                if self.map.synthetic.is_some() || self.map.num_samples.is_some() {
                    return Err(Error::invalid_config(
                        "map.synthetic and map.num_samples are only valid with map.kind = synthetic",
                    ));
                }
            }
        }
        self.hyperparams.validate()?;
        self.experiment_config().validate_params()?;
        Ok(())
    }

    /// The map source assembled from the grid and `[map]` sections.
    pub fn map_source(&self) -> MapSource {
        match self.map.kind {
            MapKind::Synthetic => MapSource::Synthetic {
                grid: self.grid,
                config: self.map.synthetic.clone().unwrap_or_default(),
                num_samples: self.map.num_samples.unwrap_or(0),
            },
            MapKind::Csv => MapSource::SamplesCsv {
                grid: self.grid,
                path: self.map.samples_csv.clone().unwrap_or_default(),
            },
        }
    }

    /// The experiment design assembled from all sections.
    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            map: self.map_source(),
            hp: self.hyperparams,
            num_routes: self.experiment.num_routes,
            weights: self.experiment.weights.clone(),
            step_length_m: self.experiment.step_length_m,
            min_route_length_m: self.experiment.min_route_length_m,
            master_seed: self.experiment.master_seed,
            parallel: self.experiment.parallel,
        }
    }
}
