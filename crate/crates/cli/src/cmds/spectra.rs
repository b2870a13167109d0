use std::fs;
use std::io::BufWriter;
use std::path::Path;

use spinchain_core::{delta_spectrum, density_auto_edges, density_map, freq_grid, ChainConfig, Result};

use crate::inputs::{load_chain, parse_config};
use crate::manifest::RunManifest;

pub fn spectrum(
    chain_spec: &str,
    configs: &[String],
    reference: Option<&str>,
    fmin: f64,
    fmax: f64,
    step: f64,
    out: &Path,
) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("spectrum");
    manifest.param("fmin", fmin);
    manifest.param("fmax", fmax);
    manifest.param("step", step);

    let chain = load_chain(chain_spec, &mut manifest)?;
    let n = chain.len();
    let grid = freq_grid(fmin, fmax, step)?;
    let reference = match reference {
        Some(s) => parse_config("reference", s, n)?,
        None => ChainConfig::all_down(n),
    };
    manifest.param("reference", reference.to_bitstring());

    for s in configs {
        let cfg = parse_config("config", s, n)?;
        let spec = delta_spectrum(&chain, &cfg, &reference, &grid)?;
        let name = format!("spectrum_{}.csv", cfg.to_bitstring());
        spec.write_csv(BufWriter::new(fs::File::create(out.join(&name))?))?;
    }
    println!(
        "spectrum: {} configuration(s) on {}, {} points each",
        configs.len(),
        chain.name,
        grid.len()
    );

    manifest.write(out)
}

pub fn density(
    chain_spec: &str,
    fmin: f64,
    fmax: f64,
    step: f64,
    bins: usize,
    cap: usize,
    out: &Path,
) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("density-map");
    manifest.param("fmin", fmin);
    manifest.param("fmax", fmax);
    manifest.param("step", step);
    manifest.param("bins", bins);
    manifest.param("cap", cap);

    let chain = load_chain(chain_spec, &mut manifest)?;
    let grid = freq_grid(fmin, fmax, step)?;
    let edges = density_auto_edges(&chain, &grid, bins)?;
    let map = density_map(&chain, &grid, &edges, cap)?;
    map.write_csv(BufWriter::new(fs::File::create(out.join("density.csv"))?))?;

    println!(
        "density-map: {} configurations over {} frequencies, {} bins",
        1u64 << chain.len(),
        grid.len(),
        bins
    );

    manifest.write(out)
}
