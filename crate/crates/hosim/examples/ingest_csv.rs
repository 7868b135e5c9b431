//! Ingest RSRP samples from CSV instead of synthesizing them.
//!
//! Writes a sample file in the `x_m,y_m,cell_0,...,cell_{C-1}` format,
//! reads it back, and quantizes the result, mirroring how a measured
//! dataset would enter the pipeline.

use hosim::radio_map::{
    quantize, read_samples_csv, synthesize_samples, write_samples_csv, GridSpec, SyntheticMapConfig,
};

fn main() -> hosim::Result<()> {
    let spec = GridSpec {
        width_m: 1000.0,
        height_m: 1000.0,
        bin_size_m: 50.0,
        ..GridSpec::default()
    };
    let config = SyntheticMapConfig {
        bs_positions: vec![[300.0, 300.0], [700.0, 700.0]],
        ..SyntheticMapConfig::default()
    };

    // stand-in for a measured dataset
    let measured = synthesize_samples(&config, &spec, 8_000)?;
    let out = std::path::Path::new("hosim-out/ingest-csv");
    std::fs::create_dir_all(out)?;
    let path = out.join("samples.csv");
    write_samples_csv(&measured, &path)?;
    println!("wrote {} samples to {}", measured.len(), path.display());

    let ingested = read_samples_csv(&path)?;
    assert_eq!(ingested.num_cells, measured.num_cells);
    assert_eq!(ingested.len(), measured.len());

    let grid = quantize(&ingested, &spec)?;
    println!(
        "ingested grid: {} x {} bins, {} cells, coverage {:.2}%",
        spec.bins_x(),
        spec.bins_y(),
        grid.num_cells(),
        100.0 * grid.coverage_fraction()
    );
    let strongest = grid.strongest_cell(500.0, 500.0)?;
    println!("strongest cell at the center: {strongest}");
    Ok(())
}
