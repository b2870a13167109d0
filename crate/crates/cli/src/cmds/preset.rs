use std::fs;
use std::path::Path;

use spinchain_core::{chain_a, chain_b, default_network, Result};

use crate::manifest::RunManifest;

pub fn run(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let a = chain_a();
    let b = chain_b();
    let net = default_network();

    fs::write(out.join("chain_a.json"), a.to_json()?)?;
    fs::write(out.join("chain_b.json"), b.to_json()?)?;
    fs::write(out.join("network.json"), net.to_json()?)?;

    println!(
        "preset: wrote chain_a.json ({} devices), chain_b.json ({} devices), network.json",
        a.devices.len(),
        b.devices.len()
    );

    RunManifest::new("preset").write(out)
}
