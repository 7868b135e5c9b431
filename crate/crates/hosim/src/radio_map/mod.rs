//! Per-cell RSRP radio map over a binned 2D service area.
//!
//! The map is built from RSRP samples (synthetic via [`SyntheticMapConfig`]
//! or ingested from CSV), normalized to [0, 1] with a global affine map, and
//! quantized into fixed-size bins holding the per-cell mean. Queries answer
//! strongest-cell and top-k-cell questions at arbitrary positions.

mod synth;

pub use synth::{synthesize_samples, SyntheticMapConfig};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of one cell (sector) in the deployment, in `[0, num_cells)`.
///
/// For synthetic maps the id is `bs_index * sectors_per_bs + sector_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId(usize);

impl CellId {
    pub fn new(index: usize) -> Self {
        CellId(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Geometry of the binned service area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub bin_size_m: f64,
    pub origin_x_m: f64,
    pub origin_y_m: f64,
}

impl Default for GridSpec {
    /// 6 x 5 km area split into 50 x 50 m bins.
    fn default() -> Self {
        GridSpec {
            width_m: 6000.0,
            height_m: 5000.0,
            bin_size_m: 50.0,
            origin_x_m: 0.0,
            origin_y_m: 0.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.width_m > 0.0 && self.height_m > 0.0 && self.bin_size_m > 0.0) {
            return Err(Error::invalid_config(format!(
                "grid dimensions and bin size must be positive (got {} x {} m, bin {} m)",
                self.width_m, self.height_m, self.bin_size_m
            )));
        }
        Ok(())
    }

    pub fn bins_x(&self) -> usize {
        (self.width_m / self.bin_size_m).ceil() as usize
    }

    pub fn bins_y(&self) -> usize {
        (self.height_m / self.bin_size_m).ceil() as usize
    }

    pub fn num_bins(&self) -> usize {
        self.bins_x() * self.bins_y()
    }

    /// Bounds are inclusive on all edges.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.origin_x_m
            && x <= self.origin_x_m + self.width_m
            && y >= self.origin_y_m
            && y <= self.origin_y_m + self.height_m
    }

    /// Maps a position to its bin. Positions on the far edges belong to the
    /// last bin so that every in-bounds position has exactly one bin.
    pub fn bin_of(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        if !self.contains(x, y) {
            return Err(Error::OutOfBounds { x, y });
        }
        let bx = (((x - self.origin_x_m) / self.bin_size_m) as usize).min(self.bins_x() - 1);
        let by = (((y - self.origin_y_m) / self.bin_size_m) as usize).min(self.bins_y() - 1);
        Ok((bx, by))
    }

    fn flat_index(&self, bx: usize, by: usize) -> usize {
        by * self.bins_x() + bx
    }
}

/// One RSRP measurement: a position and one dBm value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RsrpSample {
    pub x_m: f64,
    pub y_m: f64,
    pub rsrp_dbm: Vec<f64>,
}

/// A set of RSRP samples, each carrying a value for every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RsrpSampleSet {
    pub num_cells: usize,
    /// Altitude the samples were taken at; metadata only.
    pub altitude_m: Option<f64>,
    pub samples: Vec<RsrpSample>,
}

impl RsrpSampleSet {
    pub fn new(num_cells: usize, altitude_m: Option<f64>) -> Self {
        RsrpSampleSet {
            num_cells,
            altitude_m,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, x_m: f64, y_m: f64, rsrp_dbm: Vec<f64>) {
        debug_assert_eq!(rsrp_dbm.len(), self.num_cells);
        self.samples.push(RsrpSample { x_m, y_m, rsrp_dbm });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Parameters of the affine dBm -> [0, 1] map: the global sample min and max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub min_dbm: f64,
    pub max_dbm: f64,
}

impl NormParams {
    /// Global min/max over every sample and cell.
    pub fn from_samples(samples: &RsrpSampleSet) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("sample set"));
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for s in &samples.samples {
            for &v in &s.rsrp_dbm {
                min = min.min(v);
                max = max.max(v);
            }
        }
        if min == max {
            return Err(Error::DegenerateRange { value: min });
        }
        Ok(NormParams {
            min_dbm: min,
            max_dbm: max,
        })
    }

    pub fn normalize(&self, dbm: f64) -> f64 {
        (dbm - self.min_dbm) / (self.max_dbm - self.min_dbm)
    }

    pub fn denormalize(&self, norm: f64) -> f64 {
        self.min_dbm + norm * (self.max_dbm - self.min_dbm)
    }
}

/// Linearly maps the sample set onto [0, 1]: the global minimum becomes 0,
/// the global maximum 1. Returns the mapped set plus the parameters needed
/// to invert the map.
pub fn normalize(samples: &RsrpSampleSet) -> Result<(RsrpSampleSet, NormParams)> {
    let params = NormParams::from_samples(samples)?;
    let mut out = RsrpSampleSet::new(samples.num_cells, samples.altitude_m);
    out.samples.reserve(samples.len());
    for s in &samples.samples {
        let mapped = s.rsrp_dbm.iter().map(|&v| params.normalize(v)).collect();
        out.push(s.x_m, s.y_m, mapped);
    }
    Ok((out, params))
}

/// Quantized per-bin, per-cell RSRP map.
///
/// Each populated bin stores the arithmetic dBm mean of the samples that
/// fell into it, plus the normalized value recomputed from that mean.
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct RsrpGrid {
    spec: GridSpec,
    num_cells: usize,
    norm_params: NormParams,
    raw: Vec<f64>,
    norm: Vec<f64>,
    populated: Vec<bool>,
}

/// Averages samples into bins. Empty bins are allowed here; querying one
/// later raises [`Error::UnpopulatedBin`].
pub fn quantize(samples: &RsrpSampleSet, spec: &GridSpec) -> Result<RsrpGrid> {
    spec.validate()?;
    let params = NormParams::from_samples(samples)?;
    let bins = spec.num_bins();
    let cells = samples.num_cells;

    let mut sums = vec![0.0f64; bins * cells];
    let mut counts = vec![0usize; bins];
    for s in &samples.samples {
        let (bx, by) = spec.bin_of(s.x_m, s.y_m)?;
        let bin = spec.flat_index(bx, by);
        counts[bin] += 1;
        for (c, &v) in s.rsrp_dbm.iter().enumerate() {
            sums[bin * cells + c] += v;
        }
    }

    let mut raw = vec![f64::NAN; bins * cells];
    let mut norm = vec![f64::NAN; bins * cells];
    let mut populated = vec![false; bins];
    for bin in 0..bins {
        if counts[bin] == 0 {
            continue;
        }
        populated[bin] = true;
        for c in 0..cells {
            let mean = sums[bin * cells + c] / counts[bin] as f64;
            raw[bin * cells + c] = mean;
            norm[bin * cells + c] = params.normalize(mean);
        }
    }

    Ok(RsrpGrid {
        spec: *spec,
        num_cells: cells,
        norm_params: params,
        raw,
        norm,
        populated,
    })
}

impl RsrpGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn norm_params(&self) -> NormParams {
        self.norm_params
    }

    pub fn is_populated(&self, bx: usize, by: usize) -> bool {
        self.populated[self.spec.flat_index(bx, by)]
    }

    /// Fraction of bins holding at least one sample.
    pub fn coverage_fraction(&self) -> f64 {
        let filled = self.populated.iter().filter(|&&p| p).count();
        filled as f64 / self.populated.len() as f64
    }

    pub fn raw_mean_dbm(&self, bx: usize, by: usize, cell: CellId) -> Option<f64> {
        let bin = self.spec.flat_index(bx, by);
        if !self.populated[bin] {
            return None;
        }
        Some(self.raw[bin * self.num_cells + cell.index()])
    }

    pub fn norm_rsrp(&self, bx: usize, by: usize, cell: CellId) -> Option<f64> {
        let bin = self.spec.flat_index(bx, by);
        if !self.populated[bin] {
            return None;
        }
        Some(self.norm[bin * self.num_cells + cell.index()])
    }

    /// The `k` strongest cells at a position, descending by normalized RSRP
    /// with ties broken by ascending cell id.
    pub fn top_k_cells(&self, x: f64, y: f64, k: usize) -> Result<Vec<(CellId, f64)>> {
        let (bx, by) = self.spec.bin_of(x, y)?;
        self.top_k_in_bin(bx, by, k)
    }

    fn top_k_in_bin(&self, bx: usize, by: usize, k: usize) -> Result<Vec<(CellId, f64)>> {
        if k > self.num_cells {
            return Err(Error::KTooLarge {
                k,
                num_cells: self.num_cells,
            });
        }
        let bin = self.spec.flat_index(bx, by);
        if !self.populated[bin] {
            return Err(Error::UnpopulatedBin {
                bin_x: bx,
                bin_y: by,
            });
        }
        let mut ranked: Vec<(CellId, f64)> = (0..self.num_cells)
            .map(|c| (CellId(c), self.norm[bin * self.num_cells + c]))
            .collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("RSRP values are finite")
                .then(a.0.cmp(&b.0))
        });
        ranked.truncate(k);
        Ok(ranked)
    }

    /// The single strongest cell at a position (ties to the lowest id).
    pub fn strongest_cell(&self, x: f64, y: f64) -> Result<CellId> {
        Ok(self.top_k_cells(x, y, 1)?[0].0)
    }
}

// ---------------------------------------------------------------------------
// CSV interfaces
// ---------------------------------------------------------------------------

/// Writes samples as `x_m,y_m,cell_0,...,cell_{C-1}`.
pub fn write_samples_csv(samples: &RsrpSampleSet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["x_m".to_string(), "y_m".to_string()];
    header.extend((0..samples.num_cells).map(|c| format!("cell_{c}")));
    w.write_record(&header)?;
    for s in &samples.samples {
        let mut rec = vec![s.x_m.to_string(), s.y_m.to_string()];
        rec.extend(s.rsrp_dbm.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads samples from the `x_m,y_m,cell_0,...,cell_{C-1}` format.
pub fn read_samples_csv(path: &Path) -> Result<RsrpSampleSet> {
    let malformed = |reason: String| Error::MalformedFile {
        path: path.to_path_buf(),
        reason,
    };
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 3 || &header[0] != "x_m" || &header[1] != "y_m" {
        return Err(malformed(
            "header must be x_m,y_m,cell_0,...,cell_{C-1}".into(),
        ));
    }
    let num_cells = header.len() - 2;
    for (c, field) in header.iter().skip(2).enumerate() {
        if field != format!("cell_{c}") {
            return Err(malformed(format!(
                "expected column cell_{c}, found {field}"
            )));
        }
    }

    let parse = |field: &str| -> Result<f64> {
        let v: f64 = field
            .parse()
            .map_err(|_| malformed(format!("not a number: {field}")))?;
        if !v.is_finite() {
            return Err(malformed(format!("non-finite value: {field}")));
        }
        Ok(v)
    };

    let mut set = RsrpSampleSet::new(num_cells, None);
    for record in r.records() {
        let record = record?;
        if record.len() != num_cells + 2 {
            return Err(malformed(format!(
                "row has {} fields, expected {}",
                record.len(),
                num_cells + 2
            )));
        }
        let x = parse(&record[0])?;
        let y = parse(&record[1])?;
        let values = record
            .iter()
            .skip(2)
            .map(parse)
            .collect::<Result<Vec<f64>>>()?;
        set.push(x, y, values);
    }
    Ok(set)
}

/// Writes populated bins as `bin_x,bin_y,cell_id,raw_mean_dbm,norm`.
pub fn write_grid_csv(grid: &RsrpGrid, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_x", "bin_y", "cell_id", "raw_mean_dbm", "norm"])?;
    for by in 0..grid.spec.bins_y() {
        for bx in 0..grid.spec.bins_x() {
            if !grid.is_populated(bx, by) {
                continue;
            }
            for c in 0..grid.num_cells {
                let cell = CellId(c);
                let raw = grid.raw_mean_dbm(bx, by, cell).unwrap();
                let norm = grid.norm_rsrp(bx, by, cell).unwrap();
                w.write_record([
                    bx.to_string(),
                    by.to_string(),
                    c.to_string(),
                    raw.to_string(),
                    norm.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the strongest-cell association map as `bin_x,bin_y,strongest_cell_id`.
pub fn write_association_csv(grid: &RsrpGrid, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_x", "bin_y", "strongest_cell_id"])?;
    for by in 0..grid.spec.bins_y() {
        for bx in 0..grid.spec.bins_x() {
            if !grid.is_populated(bx, by) {
                continue;
            }
            let cell = grid.top_k_in_bin(bx, by, 1)?[0].0;
            w.write_record([bx.to_string(), by.to_string(), cell.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
