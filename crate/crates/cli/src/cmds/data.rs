use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spinchain_core::{
    accuracy, encode_features, exhaustive_search, local_search, make_synthetic_digits_like,
    make_synthetic_drones_like, ChainConfig, EncodingParams, Network, Result, WaveformMeta,
    WaveformSpec,
};

use crate::inputs::{file_stem, load_dataset, load_network, load_s21, parse_config};
use crate::manifest::{write_json, RunManifest};
use crate::{Method, SyntheticKind};

pub fn dataset(kind: SyntheticKind, seed: u64, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("dataset");
    manifest.seed(seed);

    let (name, ds) = match kind {
        SyntheticKind::DigitsLike => ("digits-like", make_synthetic_digits_like(seed)),
        SyntheticKind::DronesLike => ("drones-like", make_synthetic_drones_like(seed)),
    };
    manifest.param("make_synthetic", name);
    ds.write_csv(BufWriter::new(fs::File::create(out.join("dataset.csv"))?))?;

    println!(
        "dataset: {} with {} examples x {} features",
        name,
        ds.examples.len(),
        ds.feature_count
    );

    manifest.write(out)
}

#[derive(Serialize)]
struct EncodedExample {
    label: u8,
    waveform: WaveformSpec,
}

pub fn encode(
    dataset_path: &Path,
    scale: f64,
    fmin: f64,
    fmax: f64,
    s21: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("encode");
    manifest.param("scale", scale);
    manifest.param("fmin", fmin);
    manifest.param("fmax", fmax);
    manifest.seed(seed);

    let ds = load_dataset(dataset_path, &mut manifest)?;
    let s21 = load_s21(s21, &mut manifest)?;
    let stem = file_stem(dataset_path);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut encoded = Vec::with_capacity(ds.examples.len());
    for (idx, ex) in ds.examples.iter().enumerate() {
        let tones = encode_features(&ex.features, scale, &s21, fmin, fmax, &mut rng)?;
        encoded.push(EncodedExample {
            label: ex.label,
            waveform: WaveformSpec {
                tones,
                metadata: WaveformMeta {
                    source: format!("{stem}#{idx}"),
                    scale_dbm: scale,
                    seed,
                },
            },
        });
    }
    write_json(&out.join("waveforms.json"), &encoded)?;

    println!(
        "encode: {} examples, {} tones each at scale {} dBm",
        encoded.len(),
        encoded.first().map_or(0, |e| e.waveform.tones.len()),
        scale
    );

    manifest.write(out)
}

pub struct TrainOpts {
    pub dataset: PathBuf,
    pub network: String,
    pub method: Method,
    pub scale: f64,
    pub fmin: f64,
    pub fmax: f64,
    pub s21: Option<PathBuf>,
    pub restarts: usize,
    pub cap: usize,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn train(opts: TrainOpts) -> Result<()> {
    fs::create_dir_all(&opts.out)?;
    let mut manifest = RunManifest::new("train");
    manifest.param("scale", opts.scale);
    manifest.param("fmin", opts.fmin);
    manifest.param("fmax", opts.fmax);
    manifest.seed(opts.seed);

    let ds = load_dataset(&opts.dataset, &mut manifest)?;
    let net = load_network(&opts.network, &mut manifest)?;
    let s21 = load_s21(opts.s21.as_deref(), &mut manifest)?;
    let enc = EncodingParams::new(opts.scale, opts.fmin, opts.fmax, s21);

    let result = match opts.method {
        Method::Exhaustive => {
            manifest.param("method", "exhaustive");
            manifest.param("cap", opts.cap);
            exhaustive_search(&net, &ds, &enc, opts.cap)?
        }
        Method::Greedy => {
            manifest.param("method", "greedy");
            manifest.param("restarts", opts.restarts);
            local_search(&net, &ds, &enc, opts.seed, opts.restarts)?
        }
    };
    write_json(&opts.out.join("search.json"), &result)?;

    println!(
        "train: best pair {} / {} at accuracy {:.4} ({} pairs evaluated)",
        result.best_cfg0.to_bitstring(),
        result.best_cfg1.to_bitstring(),
        result.best_accuracy,
        result.pairs_evaluated
    );

    manifest.write(&opts.out)
}

pub struct EvalOpts {
    pub dataset: PathBuf,
    pub network: String,
    pub cfg0: String,
    pub cfg1: String,
    pub repeats: usize,
    pub noise_uv: Option<f64>,
    pub scale: f64,
    pub fmin: f64,
    pub fmax: f64,
    pub s21: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Evaluation {
    cfg0: ChainConfig,
    cfg1: ChainConfig,
    repeats: usize,
    noise_uv: f64,
    accuracy_mean: f64,
    accuracy_std: f64,
}

pub fn evaluate(opts: EvalOpts) -> Result<()> {
    fs::create_dir_all(&opts.out)?;
    let mut manifest = RunManifest::new("evaluate");
    manifest.param("scale", opts.scale);
    manifest.param("fmin", opts.fmin);
    manifest.param("fmax", opts.fmax);
    manifest.param("repeats", opts.repeats);
    manifest.seed(opts.seed);

    let ds = load_dataset(&opts.dataset, &mut manifest)?;
    let mut net = load_network(&opts.network, &mut manifest)?;
    if let Some(sigma) = opts.noise_uv {
        net = Network::new(net.chain0, net.chain1, net.ref0, net.ref1, sigma)?;
        manifest.param("noise_uv", sigma);
    }
    let s21 = load_s21(opts.s21.as_deref(), &mut manifest)?;
    let enc = EncodingParams::new(opts.scale, opts.fmin, opts.fmax, s21);

    let cfg0 = parse_config("cfg0", &opts.cfg0, net.chain0.len())?;
    let cfg1 = parse_config("cfg1", &opts.cfg1, net.chain1.len())?;
    manifest.param("cfg0", cfg0.to_bitstring());
    manifest.param("cfg1", cfg1.to_bitstring());

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mean, std) = accuracy(&net, &cfg0, &cfg1, &ds, &enc, opts.repeats, &mut rng)?;
    let eval = Evaluation {
        cfg0,
        cfg1,
        repeats: opts.repeats,
        noise_uv: net.noise_sigma,
        accuracy_mean: mean,
        accuracy_std: std,
    };
    write_json(&opts.out.join("evaluation.json"), &eval)?;

    println!("evaluate: accuracy {mean:.4} (std {std:.4}) over {} repeats", opts.repeats);

    manifest.write(&opts.out)
}
