//! `spinchain`: calibration, programming, spectra, encoding, training,
//! and scaling runs over simulated synaptic chains, with reproducible
//! artifacts written to an output directory.

mod cmds;
mod inputs;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spinchain_core::Error;

#[derive(Parser)]
#[command(name = "spinchain", version, about = "Simulator for RF-programmable synaptic chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Directory for artifacts (created if missing); every run also
    /// writes a manifest.json there
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exhaustive,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum SyntheticKind {
    DigitsLike,
    DronesLike,
}

#[derive(Subcommand)]
enum Command {
    /// Write the built-in chains and the default two-chain network
    Preset {
        #[command(flatten)]
        out: OutArg,
    },
    /// Sweep write pulses over a chain and extract its band map and
    /// programming table
    Calibrate {
        /// Chain file, or preset:a / preset:b
        #[arg(long)]
        chain: String,
        /// Write-sweep start, MHz
        #[arg(long, default_value_t = 240.0)]
        fmin: f64,
        /// Write-sweep end, MHz
        #[arg(long, default_value_t = 600.0)]
        fmax: f64,
        /// Write-sweep step, MHz
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Plan and execute broadcast pulses toward a target configuration,
    /// then verify it by spectral readout
    Program {
        /// Chain file, or preset:a / preset:b
        #[arg(long)]
        chain: String,
        /// Programming table JSON (defaults to the table implied by the
        /// chain parameters; must be given together with --bandmap)
        #[arg(long)]
        table: Option<PathBuf>,
        /// Band map JSON
        #[arg(long)]
        bandmap: Option<PathBuf>,
        /// Target configuration bitstring, leftmost bit = device 1, 1 = Up
        #[arg(long)]
        target: Option<String>,
        /// Initial configuration bitstring (default: random from seed)
        #[arg(long)]
        init: Option<String>,
        /// Program every possible target once and report a success summary
        #[arg(long)]
        sweep_all: bool,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Reference-subtracted response spectra for one or more configurations
    Spectrum {
        /// Chain file, or preset:a / preset:b
        #[arg(long)]
        chain: String,
        /// Configuration bitstring; repeat for several spectra
        #[arg(long = "config", required = true)]
        configs: Vec<String>,
        /// Reference configuration (default all-Down)
        #[arg(long)]
        reference: Option<String>,
        #[arg(long, default_value_t = 200.0)]
        fmin: f64,
        #[arg(long, default_value_t = 700.0)]
        fmax: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Histogram of the response over every configuration, per frequency
    DensityMap {
        /// Chain file, or preset:a / preset:b
        #[arg(long)]
        chain: String,
        #[arg(long, default_value_t = 200.0)]
        fmin: f64,
        #[arg(long, default_value_t = 700.0)]
        fmax: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Number of voltage bins
        #[arg(long, default_value_t = 60)]
        bins: usize,
        /// Device-count cap for exhaustive enumeration
        #[arg(long, default_value_t = spinchain_core::DENSITY_ENUM_CAP)]
        cap: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Generate a deterministic synthetic two-class dataset
    Dataset {
        #[arg(long, value_enum)]
        make_synthetic: SyntheticKind,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Encode every dataset row into a multi-tone waveform
    Encode {
        /// Dataset CSV (label,f0,f1,...)
        #[arg(long)]
        dataset: PathBuf,
        /// Power of the strongest tone, dBm
        #[arg(long, default_value_t = -14.0, allow_negative_numbers = true)]
        scale: f64,
        #[arg(long, default_value_t = 240.0)]
        fmin: f64,
        #[arg(long, default_value_t = 600.0)]
        fmax: f64,
        /// Insertion-loss table CSV (freq_mhz,db); flat 0 dB when absent
        #[arg(long)]
        s21: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Search for the best configuration pair on a dataset
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Network file, or builtin:default
        #[arg(long, default_value = "builtin:default")]
        network: String,
        #[arg(long, value_enum, default_value_t = Method::Exhaustive)]
        method: Method,
        #[arg(long, default_value_t = -14.0, allow_negative_numbers = true)]
        scale: f64,
        #[arg(long, default_value_t = 240.0)]
        fmin: f64,
        #[arg(long, default_value_t = 600.0)]
        fmax: f64,
        #[arg(long)]
        s21: Option<PathBuf>,
        /// Restarts for the greedy method
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        /// Per-chain device cap for the exhaustive method
        #[arg(long, default_value_t = spinchain_core::SEARCH_ENUM_CAP)]
        cap: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Score one configuration pair on a dataset
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        /// Network file, or builtin:default
        #[arg(long, default_value = "builtin:default")]
        network: String,
        /// Chain-0 configuration bitstring
        #[arg(long)]
        cfg0: String,
        /// Chain-1 configuration bitstring
        #[arg(long)]
        cfg1: String,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        /// Readout noise std in µV (overrides the network file)
        #[arg(long)]
        noise_uv: Option<f64>,
        #[arg(long, default_value_t = -14.0, allow_negative_numbers = true)]
        scale: f64,
        #[arg(long, default_value_t = 240.0)]
        fmin: f64,
        #[arg(long, default_value_t = 600.0)]
        fmax: f64,
        #[arg(long)]
        s21: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Power, duration, energy, and field scaling over a frequency grid
    Scaling {
        #[arg(long, default_value_t = 100.0)]
        fmin: f64,
        #[arg(long, default_value_t = 1000.0)]
        fmax: f64,
        #[arg(long, default_value_t = 50.0)]
        step: f64,
        /// Anchor frequency, MHz
        #[arg(long, default_value_t = 250.0)]
        f_ref: f64,
        /// Anchor switching energy, pJ
        #[arg(long, default_value_t = 5.0)]
        e_ref_pj: f64,
        /// Anchor threshold power, dBm
        #[arg(long, default_value_t = -11.0, allow_negative_numbers = true)]
        p_ref_dbm: f64,
        /// Anchor pulse duration, ns
        #[arg(long, default_value_t = 50.0)]
        tau_ref_ns: f64,
        #[command(flatten)]
        out: OutArg,
    },
}

fn category(err: &Error) -> &'static str {
    match err {
        Error::Parse { .. } | Error::Json(_) => "parse",
        Error::Calibration(_) => "calibration",
        Error::UnreachableTarget(_) => "unreachable",
        Error::Domain(_)
        | Error::ConfigLength { .. }
        | Error::EnumerationCap { .. }
        | Error::EmptyDataset
        | Error::Encoding(_) => "usage",
        Error::Readout(_) => "readout",
        Error::Io(_) => "io",
    }
}

fn exit_code(err: &Error) -> i32 {
    match category(err) {
        "usage" => 2,
        "parse" => 3,
        "calibration" => 4,
        "unreachable" => 5,
        _ => 1,
    }
}

fn run(cli: Cli) -> spinchain_core::Result<()> {
    match cli.command {
        Command::Preset { out } => cmds::preset::run(&out.out),
        Command::Calibrate {
            chain,
            fmin,
            fmax,
            step,
            seed,
            out,
        } => cmds::calibrate::run(&chain, fmin, fmax, step, seed, &out.out),
        Command::Program {
            chain,
            table,
            bandmap,
            target,
            init,
            sweep_all,
            seed,
            out,
        } => cmds::program::run(cmds::program::Opts {
            chain,
            table,
            bandmap,
            target,
            init,
            sweep_all,
            seed,
            out: out.out,
        }),
        Command::Spectrum {
            chain,
            configs,
            reference,
            fmin,
            fmax,
            step,
            out,
        } => cmds::spectra::spectrum(&chain, &configs, reference.as_deref(), fmin, fmax, step, &out.out),
        Command::DensityMap {
            chain,
            fmin,
            fmax,
            step,
            bins,
            cap,
            out,
        } => cmds::spectra::density(&chain, fmin, fmax, step, bins, cap, &out.out),
        Command::Dataset {
            make_synthetic,
            seed,
            out,
        } => cmds::data::dataset(make_synthetic, seed, &out.out),
        Command::Encode {
            dataset,
            scale,
            fmin,
            fmax,
            s21,
            seed,
            out,
        } => cmds::data::encode(&dataset, scale, fmin, fmax, s21.as_deref(), seed, &out.out),
        Command::Train {
            dataset,
            network,
            method,
            scale,
            fmin,
            fmax,
            s21,
            restarts,
            cap,
            seed,
            out,
        } => cmds::data::train(cmds::data::TrainOpts {
            dataset,
            network,
            method,
            scale,
            fmin,
            fmax,
            s21,
            restarts,
            cap,
            seed,
            out: out.out,
        }),
        Command::Evaluate {
            dataset,
            network,
            cfg0,
            cfg1,
            repeats,
            noise_uv,
            scale,
            fmin,
            fmax,
            s21,
            seed,
            out,
        } => cmds::data::evaluate(cmds::data::EvalOpts {
            dataset,
            network,
            cfg0,
            cfg1,
            repeats,
            noise_uv,
            scale,
            fmin,
            fmax,
            s21,
            seed,
            out: out.out,
        }),
        Command::Scaling {
            fmin,
            fmax,
            step,
            f_ref,
            e_ref_pj,
            p_ref_dbm,
            tau_ref_ns,
            out,
        } => cmds::scaling_cmd::run(fmin, fmax, step, f_ref, e_ref_pj, p_ref_dbm, tau_ref_ns, &out.out),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}: {e}", category(&e));
        std::process::exit(exit_code(&e));
    }
}
