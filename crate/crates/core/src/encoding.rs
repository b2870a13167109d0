//! Feature-vector to multi-tone waveform conversion: dBm/mW arithmetic,
//! linear tone grids, transmission-loss correction, and power-proportional
//! amplitude assignment.

use std::f64::consts::TAU;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dbm_to_mw(x_dbm: f64) -> f64 {
    10f64.powf(x_dbm / 10.0)
}

pub fn mw_to_dbm(p_mw: f64) -> Result<f64> {
    if !(p_mw > 0.0) {
        return Err(Error::Domain(format!(
            "power must be > 0 mW for dBm conversion, got {p_mw}"
        )));
    }
    Ok(10.0 * p_mw.log10())
}

/// `n` frequencies linearly spaced over `[f_min, f_max]`, endpoints included.
pub fn tone_frequencies(n: usize, f_min: f64, f_max: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "tone grid needs at least 2 points, got {n}"
        )));
    }
    if !(f_min < f_max) {
        return Err(Error::Domain(format!(
            "tone grid needs f_min < f_max, got {f_min}..{f_max}"
        )));
    }
    let span = f_max - f_min;
    let last = (n - 1) as f64;
    Ok((0..n).map(|i| f_min + span * (i as f64) / last).collect())
}

/// Strip-line transmission loss versus frequency, in dB.
///
/// Lookups interpolate linearly between samples and clamp beyond the
/// sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S21Table {
    samples: Vec<(f64, f64)>,
}

impl S21Table {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Domain(format!(
                "S21 table needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for w in samples.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::Domain(format!(
                    "S21 table frequencies must be strictly increasing, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(S21Table { samples })
    }

    /// Lossless table covering `[f_lo, f_hi]`.
    pub fn flat(f_lo: f64, f_hi: f64) -> Self {
        S21Table {
            samples: vec![(f_lo, 0.0), (f_hi, 0.0)],
        }
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn lookup(&self, f_mhz: f64) -> f64 {
        let s = &self.samples;
        if f_mhz <= s[0].0 {
            return s[0].1;
        }
        if f_mhz >= s[s.len() - 1].0 {
            return s[s.len() - 1].1;
        }
        let hi = s.partition_point(|&(f, _)| f < f_mhz);
        let (f0, v0) = s[hi - 1];
        let (f1, v1) = s[hi];
        if f_mhz == f0 {
            return v0;
        }
        v0 + (v1 - v0) * (f_mhz - f0) / (f1 - f0)
    }

    /// Parses `freq_mhz,db` CSV with a header row.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut samples = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if idx == 0 {
                if line != "freq_mhz,db" {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected header 'freq_mhz,db', got {line:?}"),
                    });
                }
                continue;
            }
            let mut parts = line.split(',');
            let f = parse_field(parts.next(), lineno, "freq_mhz")?;
            let db = parse_field(parts.next(), lineno, "db")?;
            if parts.next().is_some() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected exactly 2 columns".into(),
                });
            }
            samples.push((f, db));
        }
        S21Table::new(samples)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "freq_mhz,db")?;
        for &(f, db) in &self.samples {
            writeln!(w, "{f},{db}")?;
        }
        Ok(())
    }
}

fn parse_field(field: Option<&str>, line: usize, name: &str) -> Result<f64> {
    let raw = field.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {name} column"),
    })?;
    raw.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        msg: format!("bad {name} value {raw:?}: {e}"),
    })
}

/// One RF tone of a multiplexed input signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub freq_mhz: f64,
    pub dbm: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformMeta {
    pub source: String,
    pub scale_dbm: f64,
    pub seed: u64,
}

/// A fully specified multi-tone input: the frequency-domain form of one
/// encoded example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    pub tones: Vec<Tone>,
    pub metadata: WaveformMeta,
}

impl WaveformSpec {
    /// Encodes a feature vector with a fresh rng seeded from `seed`.
    pub fn encode(
        features: &[f64],
        scale_dbm: f64,
        s21: &S21Table,
        f_min: f64,
        f_max: f64,
        source: &str,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tones = encode_features(features, scale_dbm, s21, f_min, f_max, &mut rng)?;
        Ok(WaveformSpec {
            tones,
            metadata: WaveformMeta {
                source: source.to_string(),
                scale_dbm,
                seed,
            },
        })
    }
}

/// Assigns each feature a tone on the linear grid: tone power in mW is
/// proportional to the feature value, the maximum feature landing at
/// `scale_dbm`. Each level is then shifted by the line loss at its
/// frequency, and zero features emit no tone at all. Phases are drawn
/// uniformly from `[0, 2π)` per emitted tone.
pub fn encode_features<R: Rng + ?Sized>(
    features: &[f64],
    scale_dbm: f64,
    s21: &S21Table,
    f_min: f64,
    f_max: f64,
    rng: &mut R,
) -> Result<Vec<Tone>> {
    if features.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Encoding(
            "features must be finite and non-negative".into(),
        ));
    }
    let max = features.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Err(Error::Encoding(
            "all-zero feature vector cannot be encoded".into(),
        ));
    }
    let freqs = tone_frequencies(features.len(), f_min, f_max)?;
    let mut tones = Vec::new();
    for (i, &v) in features.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let a = scale_dbm + 10.0 * (v / max).log10();
        let level = a + s21.lookup(freqs[i]);
        tones.push(Tone {
            freq_mhz: freqs[i],
            dbm: level,
            phase_rad: rng.gen::<f64>() * TAU,
        });
    }
    Ok(tones)
}
