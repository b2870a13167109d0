use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use spinchain_core::{
    execute, freq_grid, plan_sequence, BandMap, Chain, ChainConfig, ConfigReader, Error, Polarity,
    ProgrammingTable, Result, DENSITY_ENUM_CAP,
};

use crate::inputs::{load_bandmap, load_chain, load_table, parse_config};
use crate::manifest::{write_json, RunManifest};

pub struct Opts {
    pub chain: String,
    pub table: Option<PathBuf>,
    pub bandmap: Option<PathBuf>,
    pub target: Option<String>,
    pub init: Option<String>,
    pub sweep_all: bool,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ProgramResult {
    target: ChainConfig,
    init: ChainConfig,
    pulses: usize,
    final_state: ChainConfig,
    readout: ChainConfig,
    verified: bool,
}

#[derive(Serialize)]
struct SweepSummary {
    targets: usize,
    successes: usize,
    results: Vec<ProgramResult>,
}

fn run_one(
    chain: &Chain,
    table: &ProgrammingTable,
    bands: &BandMap,
    reader: &ConfigReader,
    target: &ChainConfig,
    init: &ChainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ProgramResult> {
    let seq = plan_sequence(table, bands, target)?;
    let final_state = execute(chain, init, &seq, rng)?;
    let readout = reader.read_state(chain, &final_state)?;
    let verified = final_state == *target && readout == *target;
    Ok(ProgramResult {
        target: target.clone(),
        init: init.clone(),
        pulses: seq.len(),
        final_state,
        readout,
        verified,
    })
}

pub fn run(opts: Opts) -> Result<()> {
    fs::create_dir_all(&opts.out)?;
    let mut manifest = RunManifest::new("program");
    manifest.seed(opts.seed);

    let chain = load_chain(&opts.chain, &mut manifest)?;
    let n = chain.len();

    let (table, bands) = match (&opts.table, &opts.bandmap) {
        (Some(t), Some(b)) => (
            load_table(t, &mut manifest)?,
            load_bandmap(b, &mut manifest)?,
        ),
        (None, None) => {
            manifest.param("table", "nominal");
            (ProgrammingTable::nominal(&chain)?, BandMap::nominal(&chain)?)
        }
        _ => {
            return Err(Error::Domain(
                "provide --table and --bandmap together, or neither".into(),
            ))
        }
    };

    let grid = freq_grid(200.0, 700.0, 1.0)?;
    let reader = ConfigReader::new(&chain, &grid, -8.0)?;

    if opts.sweep_all {
        if opts.target.is_some() || opts.init.is_some() {
            return Err(Error::Domain(
                "--sweep-all enumerates every target; drop --target/--init".into(),
            ));
        }
        if n > DENSITY_ENUM_CAP {
            return Err(Error::EnumerationCap {
                n,
                cap: DENSITY_ENUM_CAP,
            });
        }
        manifest.param("sweep_all", true);
        let total = 1u64 << n;
        let results: Vec<Result<ProgramResult>> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(idx);
                let target = ChainConfig::from_index(idx, n);
                let init = ChainConfig::from_index(rng.gen_range(0..total), n);
                run_one(&chain, &table, &bands, &reader, &target, &init, &mut rng)
            })
            .collect();
        let results = results.into_iter().collect::<Result<Vec<_>>>()?;
        let successes = results.iter().filter(|r| r.verified).count();
        let summary = SweepSummary {
            targets: results.len(),
            successes,
            results,
        };
        write_json(&opts.out.join("summary.json"), &summary)?;
        println!(
            "program: {}/{} targets programmed successfully",
            successes, summary.targets
        );
        if successes != summary.targets {
            return Err(Error::UnreachableTarget(format!(
                "{} of {} targets failed verification",
                summary.targets - successes,
                summary.targets
            )));
        }
        manifest.write(&opts.out)
    } else {
        let target_str = opts
            .target
            .as_deref()
            .ok_or_else(|| Error::Domain("provide --target or --sweep-all".into()))?;
        let target = parse_config("target", target_str, n)?;
        manifest.param("target", target.to_bitstring());

        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let init = match &opts.init {
            Some(s) => parse_config("init", s, n)?,
            None => ChainConfig {
                bits: (0..n)
                    .map(|_| if rng.gen() { Polarity::Up } else { Polarity::Down })
                    .collect(),
            },
        };
        manifest.param("init", init.to_bitstring());

        let seq = plan_sequence(&table, &bands, &target)?;
        write_json(&opts.out.join("sequence.json"), &seq)?;
        let final_state = execute(&chain, &init, &seq, &mut rng)?;
        let readout = reader.read_state(&chain, &final_state)?;
        let verified = final_state == target && readout == target;
        let result = ProgramResult {
            target: target.clone(),
            init,
            pulses: seq.len(),
            final_state,
            readout,
            verified,
        };
        write_json(&opts.out.join("result.json"), &result)?;
        println!(
            "program: target {} reached={} readout={}",
            target.to_bitstring(),
            result.verified,
            result.readout.to_bitstring()
        );
        if !verified {
            return Err(Error::Readout(format!(
                "chain ended in {} but readout/target disagree",
                result.final_state.to_bitstring()
            )));
        }
        manifest.write(&opts.out)
    }
}
