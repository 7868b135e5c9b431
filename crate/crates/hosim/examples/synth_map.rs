//! Build the synthetic RSRP radio map and export it as CSV.
//!
//! Produces the quantized per-bin grid (`grid.csv`), the strongest-cell
//! association map (`association.csv`), and the raw samples
//! (`samples.csv`) under `hosim-out/synth-map/`.

use hosim::radio_map::{
    quantize, synthesize_samples, write_association_csv, write_grid_csv, write_samples_csv,
    GridSpec, SyntheticMapConfig,
};

fn main() -> hosim::Result<()> {
    let spec = GridSpec::default();
    let config = SyntheticMapConfig::default();

    let samples = synthesize_samples(&config, &spec, 180_000)?;
    let grid = quantize(&samples, &spec)?;

    println!(
        "synthesized {} samples over {} x {} m at {} m altitude",
        samples.len(),
        spec.width_m,
        spec.height_m,
        samples.altitude_m.unwrap_or_default()
    );
    println!(
        "grid: {} x {} bins of {} m, {} cells, coverage {:.3}%",
        spec.bins_x(),
        spec.bins_y(),
        spec.bin_size_m,
        grid.num_cells(),
        100.0 * grid.coverage_fraction()
    );
    let params = grid.norm_params();
    println!(
        "normalization: [{:.2}, {:.2}] dBm -> [0, 1]",
        params.min_dbm, params.max_dbm
    );

    // a probe near the middle of the area
    let (x, y) = (2525.0, 2475.0);
    println!("top-3 cells at ({x}, {y}):");
    for (cell, norm) in grid.top_k_cells(x, y, 3)? {
        println!(
            "  cell {cell}: norm {:.4} ({:.2} dBm)",
            norm,
            params.denormalize(norm)
        );
    }

    let out = std::path::Path::new("hosim-out/synth-map");
    std::fs::create_dir_all(out)?;
    write_samples_csv(&samples, &out.join("samples.csv"))?;
    write_grid_csv(&grid, &out.join("grid.csv"))?;
    write_association_csv(&grid, &out.join("association.csv"))?;
    println!("wrote {}", out.display());
    Ok(())
}
