//! Series chain of junctions on one strip line: binary configurations,
//! additive spectral response, multi-tone weighted sums, and the
//! configuration-space density map.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{rectification, DeviceParams, Polarity};
use crate::encoding::{dbm_to_mw, WaveformSpec};
use crate::error::{Error, Result};

/// Largest chain size accepted for exhaustive configuration enumeration.
pub const DENSITY_ENUM_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub name: String,
    pub devices: Vec<DeviceParams>,
}

impl Chain {
    pub fn new(name: impl Into<String>, devices: Vec<DeviceParams>) -> Self {
        Chain {
            name: name.into(),
            devices,
        }
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    /// Checks structural invariants. Returns soft warnings (currently only
    /// non-monotone `f_center` ordering) that callers may surface.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.devices.is_empty() {
            return Err(Error::Domain(format!("chain {:?} has no devices", self.name)));
        }
        for (i, dev) in self.devices.iter().enumerate() {
            dev.validate()?;
            let want = (i + 1) as u32;
            if dev.id != want {
                return Err(Error::Domain(format!(
                    "chain {:?}: device at position {} has id {}, expected {}",
                    self.name,
                    i + 1,
                    dev.id,
                    want
                )));
            }
        }
        let mut warnings = Vec::new();
        for w in self.devices.windows(2) {
            if w[1].f_center < w[0].f_center {
                warnings.push(format!(
                    "chain {:?}: f_center decreases from device {} ({} MHz) to device {} ({} MHz)",
                    self.name, w[0].id, w[0].f_center, w[1].id, w[1].f_center
                ));
            }
        }
        Ok(warnings)
    }

    /// Chain files are bare JSON arrays of device records.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.devices)?)
    }

    pub fn from_json(name: impl Into<String>, json: &str) -> Result<Self> {
        let devices: Vec<DeviceParams> = serde_json::from_str(json)?;
        let chain = Chain::new(name, devices);
        chain.validate()?;
        Ok(chain)
    }
}

/// Binary state of a whole chain, one polarity per device.
///
/// The textual form writes device 1 leftmost, `'1'` for Up.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainConfig {
    pub bits: Vec<Polarity>,
}

impl ChainConfig {
    pub fn all_down(n: usize) -> Self {
        ChainConfig {
            bits: vec![Polarity::Down; n],
        }
    }

    pub fn all_up(n: usize) -> Self {
        ChainConfig {
            bits: vec![Polarity::Up; n],
        }
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(Polarity::from_bit_char)
            .collect::<Result<Vec<_>>>()?;
        if bits.is_empty() {
            return Err(Error::Domain("empty configuration bitstring".into()));
        }
        Ok(ChainConfig { bits })
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|p| p.to_bit_char()).collect()
    }

    /// Builds the configuration whose device `j+1` is Up iff bit `j` of
    /// `index` is set. This is the enumeration order used throughout:
    /// index 0 is all-Down, index 1 flips device 1, and so on.
    pub fn from_index(index: u64, n: usize) -> Self {
        let bits = (0..n)
            .map(|j| {
                if (index >> j) & 1 == 1 {
                    Polarity::Up
                } else {
                    Polarity::Down
                }
            })
            .collect();
        ChainConfig { bits }
    }

    pub fn to_index(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == Polarity::Up)
            .fold(0u64, |acc, (j, _)| acc | (1 << j))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_up(&self) -> usize {
        self.bits.iter().filter(|&&p| p == Polarity::Up).count()
    }

    fn check_len(&self, chain: &Chain) -> Result<()> {
        if self.len() != chain.len() {
            return Err(Error::ConfigLength {
                expected: chain.len(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for ChainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl Serialize for ChainConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for ChainConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ChainConfig::from_bitstring(&s).map_err(serde::de::Error::custom)
    }
}

/// Spectral response samples over a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSpectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
}

impl ResponseSpectrum {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "freq_mhz,value")?;
        for (f, v) in self.freqs.iter().zip(&self.values) {
            writeln!(w, "{f},{v}")?;
        }
        Ok(())
    }
}

/// Evenly spaced frequency grid from `f_min` to `f_max` inclusive.
pub fn freq_grid(f_min: f64, f_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("grid step must be > 0, got {step}")));
    }
    if f_max < f_min {
        return Ok(Vec::new());
    }
    let n = ((f_max - f_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| f_min + step * k as f64).collect())
}

/// Summed rectified sensitivity of the whole chain, µV/mW.
pub fn chain_sensitivity(chain: &Chain, cfg: &ChainConfig, f_mhz: f64) -> Result<f64> {
    cfg.check_len(chain)?;
    Ok(chain
        .devices
        .iter()
        .zip(&cfg.bits)
        .map(|(dev, &p)| rectification(dev, p, f_mhz))
        .sum())
}

/// Pointwise sensitivity difference between two configurations.
pub fn delta_spectrum(
    chain: &Chain,
    cfg: &ChainConfig,
    reference: &ChainConfig,
    grid: &[f64],
) -> Result<ResponseSpectrum> {
    cfg.check_len(chain)?;
    reference.check_len(chain)?;
    let values = grid
        .iter()
        .map(|&f| {
            let a = chain_sensitivity(chain, cfg, f)?;
            let b = chain_sensitivity(chain, reference, f)?;
            Ok(a - b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResponseSpectrum {
        freqs: grid.to_vec(),
        values,
    })
}

/// dc output in µV for a multi-tone input: Σ sensitivity(f_i) · p_i(mW).
/// Small-signal regime, so tones superpose and phases drop out.
pub fn multi_tone_response(chain: &Chain, cfg: &ChainConfig, w: &WaveformSpec) -> Result<f64> {
    cfg.check_len(chain)?;
    let mut total = 0.0;
    for tone in &w.tones {
        total += chain_sensitivity(chain, cfg, tone.freq_mhz)? * dbm_to_mw(tone.dbm);
    }
    Ok(total)
}

/// All `2^n` subset sums of `per_device`, where bit `j` of the output index
/// selects element `j`. Entry 0 is 0. Each sum adds elements in ascending
/// index order, so results are bit-identical to a direct loop.
pub fn config_sums(per_device: &[f64]) -> Vec<f64> {
    let n = per_device.len();
    assert!(n < 64, "config enumeration limited to < 64 devices");
    let mut out = vec![0.0f64; 1usize << n];
    for idx in 1..out.len() {
        let hb = usize::BITS - 1 - idx.leading_zeros();
        out[idx] = out[idx ^ (1 << hb)] + per_device[hb as usize];
    }
    out
}

/// Histogram of configuration responses at each frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMap {
    pub freqs: Vec<f64>,
    /// Bin edges; `counts[f][k]` covers `[bin_edges[k], bin_edges[k+1])`,
    /// except the last bin which also includes its upper edge. Values
    /// outside the edge range are counted in the nearest end bin, so every
    /// frequency column totals the full configuration count.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<Vec<u64>>,
}

impl DensityMap {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "freq_mhz,bin_lo,bin_hi,count")?;
        for (fi, f) in self.freqs.iter().enumerate() {
            for k in 0..self.counts[fi].len() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    f,
                    self.bin_edges[k],
                    self.bin_edges[k + 1],
                    self.counts[fi][k]
                )?;
            }
        }
        Ok(())
    }
}

fn bin_of(edges: &[f64], v: f64) -> usize {
    let nbins = edges.len() - 1;
    if v < edges[0] {
        return 0;
    }
    if v >= edges[nbins] {
        return nbins - 1;
    }
    edges.partition_point(|&e| e <= v).saturating_sub(1).min(nbins - 1)
}

/// Counts, per frequency, how many of the `2^N` configurations produce each
/// response value relative to the all-Down state.
pub fn density_map(
    chain: &Chain,
    grid: &[f64],
    bin_edges: &[f64],
    cap: usize,
) -> Result<DensityMap> {
    let n = chain.len();
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    if bin_edges.len() < 2 {
        return Err(Error::Domain("density map needs at least 2 bin edges".into()));
    }
    for w in bin_edges.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Domain(
                "density map bin edges must be strictly increasing".into(),
            ));
        }
    }
    let nbins = bin_edges.len() - 1;
    let counts: Vec<Vec<u64>> = grid
        .par_iter()
        .map(|&f| {
            let per_device: Vec<f64> = chain
                .devices
                .iter()
                .map(|dev| rectification(dev, Polarity::Up, f) - rectification(dev, Polarity::Down, f))
                .collect();
            let mut col = vec![0u64; nbins];
            for v in config_sums(&per_device) {
                col[bin_of(bin_edges, v)] += 1;
            }
            col
        })
        .collect();
    Ok(DensityMap {
        freqs: grid.to_vec(),
        bin_edges: bin_edges.to_vec(),
        counts,
    })
}

/// Smallest delta-response range of a chain over a grid, padded slightly;
/// convenient default edges for [`density_map`].
pub fn density_auto_edges(chain: &Chain, grid: &[f64], nbins: usize) -> Result<Vec<f64>> {
    if nbins == 0 {
        return Err(Error::Domain("density map needs at least 1 bin".into()));
    }
    // The extreme delta at each frequency is the sum of all negative (resp.
    // positive) per-device deltas there.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &f in grid {
        let mut neg = 0.0;
        let mut pos = 0.0;
        for dev in &chain.devices {
            let d = rectification(dev, Polarity::Up, f) - rectification(dev, Polarity::Down, f);
            if d < 0.0 {
                neg += d;
            } else {
                pos += d;
            }
        }
        lo = lo.min(neg);
        hi = hi.max(pos);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain("empty grid for density edges".into()));
    }
    let pad = 1e-9 + 1e-6 * (hi - lo).abs();
    let (lo, hi) = (lo - pad, hi + pad);
    let w = (hi - lo) / nbins as f64;
    Ok((0..=nbins).map(|k| lo + w * k as f64).collect())
}
