//! Input loading with digest recording. Chain and network flags accept
//! either a file path or a built-in name (`preset:a`, `preset:b`,
//! `builtin:default`).

use std::fs;
use std::io::BufReader;
use std::path::Path;

use spinchain_core::{
    chain_a, chain_b, default_network, BandMap, Chain, ChainConfig, Error, LabeledSpectrumDataset,
    Network, ProgrammingTable, Result, S21Table,
};

use crate::manifest::RunManifest;

fn read_input(key: &str, path: &Path, manifest: &mut RunManifest) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| {
        Error::Domain(format!("cannot read {} file {}: {e}", key, path.display()))
    })?;
    manifest.input(key, path, &bytes);
    Ok(bytes)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_string())
}

pub fn load_chain(spec: &str, manifest: &mut RunManifest) -> Result<Chain> {
    manifest.param("chain", spec);
    match spec {
        "preset:a" => Ok(chain_a()),
        "preset:b" => Ok(chain_b()),
        _ => {
            let path = Path::new(spec);
            let bytes = read_input("chain", path, manifest)?;
            let text = String::from_utf8_lossy(&bytes);
            let chain = Chain::from_json(file_stem(path), &text)?;
            for warning in chain.validate()? {
                eprintln!("warning: {warning}");
            }
            Ok(chain)
        }
    }
}

pub fn load_network(spec: &str, manifest: &mut RunManifest) -> Result<Network> {
    manifest.param("network", spec);
    if spec == "builtin:default" {
        return Ok(default_network());
    }
    let path = Path::new(spec);
    let bytes = read_input("network", path, manifest)?;
    Network::from_json(&String::from_utf8_lossy(&bytes))
}

pub fn load_table(path: &Path, manifest: &mut RunManifest) -> Result<ProgrammingTable> {
    let bytes = read_input("table", path, manifest)?;
    let table: ProgrammingTable = serde_json::from_str(&String::from_utf8_lossy(&bytes))?;
    table.validate()?;
    Ok(table)
}

pub fn load_bandmap(path: &Path, manifest: &mut RunManifest) -> Result<BandMap> {
    let bytes = read_input("bandmap", path, manifest)?;
    let map: BandMap = serde_json::from_str(&String::from_utf8_lossy(&bytes))?;
    map.validate()?;
    Ok(map)
}

pub fn load_dataset(path: &Path, manifest: &mut RunManifest) -> Result<LabeledSpectrumDataset> {
    let bytes = read_input("dataset", path, manifest)?;
    LabeledSpectrumDataset::from_csv(file_stem(path), BufReader::new(bytes.as_slice()))
}

/// S21 defaults to a lossless flat line when no file is given.
pub fn load_s21(path: Option<&Path>, manifest: &mut RunManifest) -> Result<S21Table> {
    match path {
        None => {
            manifest.param("s21", "flat");
            Ok(S21Table::flat(200.0, 700.0))
        }
        Some(p) => {
            manifest.param("s21", p.display().to_string());
            let bytes = read_input("s21", p, manifest)?;
            S21Table::from_csv(BufReader::new(bytes.as_slice()))
        }
    }
}

/// Parses a `--<label>` configuration bitstring and checks it against the
/// chain length.
pub fn parse_config(label: &str, s: &str, n: usize) -> Result<ChainConfig> {
    let cfg = ChainConfig::from_bitstring(s).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!("--{label}: {msg}")),
        other => other,
    })?;
    if cfg.len() != n {
        return Err(Error::ConfigLength {
            expected: n,
            got: cfg.len(),
        });
    }
    Ok(cfg)
}
