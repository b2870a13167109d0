//! Two-chain perceptron: reference-subtracted voltage readout, argmax
//! prediction, and dataset accuracy with optional readout noise.

pub mod search;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::chain::{multi_tone_response, Chain, ChainConfig};
use crate::dataset::LabeledSpectrumDataset;
use crate::device::{DeviceParams, Polarity};
use crate::encoding::{encode_features, S21Table, WaveformMeta, WaveformSpec};
use crate::error::{Error, Result};

/// Two synaptic chains with fixed reference configurations; the class
/// readout compares their reference-subtracted output voltages.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub chain0: Chain,
    pub chain1: Chain,
    pub ref0: ChainConfig,
    pub ref1: ChainConfig,
    /// Gaussian std of each voltage measurement, µV. 0 disables noise.
    pub noise_sigma: f64,
}

fn alternating(n: usize, first: Polarity) -> ChainConfig {
    let bits = (0..n)
        .map(|i| {
            if i % 2 == 0 {
                first
            } else {
                first.opposite()
            }
        })
        .collect();
    ChainConfig { bits }
}

impl Network {
    pub fn new(
        chain0: Chain,
        chain1: Chain,
        ref0: ChainConfig,
        ref1: ChainConfig,
        noise_sigma: f64,
    ) -> Result<Self> {
        chain0.validate()?;
        chain1.validate()?;
        if ref0.len() != chain0.len() {
            return Err(Error::ConfigLength {
                expected: chain0.len(),
                got: ref0.len(),
            });
        }
        if ref1.len() != chain1.len() {
            return Err(Error::ConfigLength {
                expected: chain1.len(),
                got: ref1.len(),
            });
        }
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(Error::Domain(format!(
                "noise sigma must be finite and >= 0, got {noise_sigma}"
            )));
        }
        Ok(Network {
            chain0,
            chain1,
            ref0,
            ref1,
            noise_sigma,
        })
    }

    /// Standard references: alternating patterns starting Up for chain 0
    /// ("1010...") and Down for chain 1 ("0101...").
    pub fn with_default_refs(chain0: Chain, chain1: Chain) -> Result<Self> {
        let r0 = alternating(chain0.len(), Polarity::Up);
        let r1 = alternating(chain1.len(), Polarity::Down);
        Network::new(chain0, chain1, r0, r1, 0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = NetworkFile {
            chain0: self.chain0.devices.clone(),
            chain1: self.chain1.devices.clone(),
            ref0: self.ref0.clone(),
            ref1: self.ref1.clone(),
            noise_sigma: self.noise_sigma,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(json)?;
        Network::new(
            Chain::new("chain0", file.chain0),
            Chain::new("chain1", file.chain1),
            file.ref0,
            file.ref1,
            file.noise_sigma,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    chain0: Vec<DeviceParams>,
    chain1: Vec<DeviceParams>,
    ref0: ChainConfig,
    ref1: ChainConfig,
    noise_sigma: f64,
}

/// Waveform-encoding settings shared by training and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingParams {
    pub scale_dbm: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub s21: S21Table,
}

impl EncodingParams {
    pub fn new(scale_dbm: f64, f_min: f64, f_max: f64, s21: S21Table) -> Self {
        EncodingParams {
            scale_dbm,
            f_min,
            f_max,
            s21,
        }
    }
}

fn noisy<R: Rng + ?Sized>(value: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("sigma validated non-negative");
        value + normal.sample(rng)
    } else {
        value
    }
}

/// Reference-subtracted output voltages of both chains for one waveform.
/// Each of the four underlying measurements picks up independent Gaussian
/// noise when the network's `noise_sigma` is positive.
pub fn chain_deltas<R: Rng + ?Sized>(
    net: &Network,
    cfg0: &ChainConfig,
    cfg1: &ChainConfig,
    waveform: &WaveformSpec,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let s = net.noise_sigma;
    let v0 = noisy(multi_tone_response(&net.chain0, cfg0, waveform)?, s, rng)
        - noisy(multi_tone_response(&net.chain0, &net.ref0, waveform)?, s, rng);
    let v1 = noisy(multi_tone_response(&net.chain1, cfg1, waveform)?, s, rng)
        - noisy(multi_tone_response(&net.chain1, &net.ref1, waveform)?, s, rng);
    Ok((v0, v1))
}

/// Class decision from the two voltage differences; exact ties go to
/// class 0.
pub fn predict_from_deltas(dv0: f64, dv1: f64) -> u8 {
    if dv0 >= dv1 {
        0
    } else {
        1
    }
}

pub fn predict<R: Rng + ?Sized>(
    net: &Network,
    cfg0: &ChainConfig,
    cfg1: &ChainConfig,
    waveform: &WaveformSpec,
    rng: &mut R,
) -> Result<u8> {
    let (dv0, dv1) = chain_deltas(net, cfg0, cfg1, waveform, rng)?;
    Ok(predict_from_deltas(dv0, dv1))
}

/// Whole-dataset accuracy, repeated with independent phase and noise
/// draws; returns the mean and population standard deviation over repeats.
pub fn accuracy<R: Rng + ?Sized>(
    net: &Network,
    cfg0: &ChainConfig,
    cfg1: &ChainConfig,
    dataset: &LabeledSpectrumDataset,
    enc: &EncodingParams,
    repeats: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if repeats == 0 {
        return Err(Error::Domain("repeats must be >= 1".into()));
    }
    dataset.validate()?;
    let mut accs = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let mut correct = 0usize;
        for ex in &dataset.examples {
            let tones = encode_features(
                &ex.features,
                enc.scale_dbm,
                &enc.s21,
                enc.f_min,
                enc.f_max,
                rng,
            )?;
            let waveform = WaveformSpec {
                tones,
                metadata: WaveformMeta {
                    source: dataset.name.clone(),
                    scale_dbm: enc.scale_dbm,
                    seed: 0,
                },
            };
            let pred = predict(net, cfg0, cfg1, &waveform, rng)?;
            if pred == ex.label {
                correct += 1;
            }
        }
        accs.push(correct as f64 / dataset.len() as f64);
    }
    let mean = accs.iter().sum::<f64>() / repeats as f64;
    let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / repeats as f64;
    Ok((mean, var.sqrt()))
}
