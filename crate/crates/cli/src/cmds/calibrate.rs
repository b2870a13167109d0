use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spinchain_core::{calibration_sweep, extract_table, Polarity, Result, SweepParams};

use crate::inputs::load_chain;
use crate::manifest::{write_json, RunManifest};

pub fn run(chain_spec: &str, fmin: f64, fmax: f64, step: f64, seed: u64, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("calibrate");
    manifest.param("fmin", fmin);
    manifest.param("fmax", fmax);
    manifest.param("step", step);
    manifest.seed(seed);

    let chain = load_chain(chain_spec, &mut manifest)?;
    let params = SweepParams {
        write_f_min: fmin,
        write_f_max: fmax,
        write_step: step,
        ..SweepParams::default()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw_down = calibration_sweep(&chain, &params, Polarity::Down, &mut rng)?;
    let raw_up = calibration_sweep(&chain, &params, Polarity::Up, &mut rng)?;

    // Raw maps go to disk before extraction so a failed extraction still
    // leaves the sweep data for inspection.
    raw_down.write_stitched_csv(BufWriter::new(fs::File::create(out.join("raw_down.csv"))?))?;
    raw_up.write_stitched_csv(BufWriter::new(fs::File::create(out.join("raw_up.csv"))?))?;

    let (table, bands) = extract_table(&raw_down, &raw_up, chain.devices.len())?;
    write_json(&out.join("table.json"), &table)?;
    write_json(&out.join("bandmap.json"), &bands)?;

    println!(
        "calibrate: {} devices resolved on {} over {:.0}..{:.0} MHz",
        table.entries.len(),
        chain.name,
        fmin,
        fmax
    );
    for e in &table.entries {
        println!(
            "  device {}: up\u{2192}down {:.1} MHz, down\u{2192}up {:.1} MHz, {:.0} dBm",
            e.id, e.freq_up_to_down, e.freq_down_to_up, e.power
        );
    }

    manifest.write(out)
}
