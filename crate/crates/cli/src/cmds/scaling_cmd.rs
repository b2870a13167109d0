use std::fs;
use std::io::BufWriter;
use std::path::Path;

use spinchain_core::{
    freq_grid, scaling_table, write_scaling_csv, EnergyAnchor, MaterialParams, Result,
};

use crate::manifest::RunManifest;

#[allow(clippy::too_many_arguments)]
pub fn run(
    fmin: f64,
    fmax: f64,
    step: f64,
    f_ref: f64,
    e_ref_pj: f64,
    p_ref_dbm: f64,
    tau_ref_ns: f64,
    out: &Path,
) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("scaling");
    manifest.param("fmin", fmin);
    manifest.param("fmax", fmax);
    manifest.param("step", step);
    manifest.param("f_ref", f_ref);
    manifest.param("e_ref_pj", e_ref_pj);
    manifest.param("p_ref_dbm", p_ref_dbm);
    manifest.param("tau_ref_ns", tau_ref_ns);

    let anchor = EnergyAnchor {
        f_ref_mhz: f_ref,
        e_ref_pj,
        p_ref_dbm,
        tau_ref_ns,
    };
    if !anchor.is_consistent() {
        eprintln!(
            "warning: anchor power x duration implies {:.3} pJ but e_ref_pj is {:.3} \
             ({:.0}% apart); the energy column keeps e_ref_pj",
            anchor.implied_energy_pj(),
            anchor.e_ref_pj,
            100.0 * anchor.consistency_deviation()
        );
    }

    let grid = freq_grid(fmin, fmax, step)?;
    let rows = scaling_table(&anchor, &MaterialParams::default(), &grid)?;
    write_scaling_csv(&rows, BufWriter::new(fs::File::create(out.join("scaling.csv"))?))?;

    println!(
        "scaling: {} rows over {:.0}..{:.0} MHz (anchor {:.0} MHz, {:.1} pJ)",
        rows.len(),
        fmin,
        fmax,
        f_ref,
        e_ref_pj
    );

    manifest.write(out)
}
