//! Broadcast programming: calibration sweeps, band/table extraction,
//! pulse-sequence planning with static validation, execution against the
//! device model, and spectral configuration readout.

pub mod calibration;
pub mod planner;
pub mod readout;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{Chain, ChainConfig};
use crate::device::{apply_pulse, resonance_frequency, FreqBand, Polarity, PulseSpec};
use crate::error::{Error, Result};

/// Write direction of a band or pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    DownToUp,
    UpToDown,
}

/// One measured switching band: interval plus the minimum power that
/// activates it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEntry {
    pub f_lo: f64,
    pub f_hi: f64,
    pub power: f64,
}

impl BandEntry {
    pub fn band(&self) -> FreqBand {
        FreqBand {
            f_lo: self.f_lo,
            f_hi: self.f_hi,
        }
    }

    /// Whether a pulse at `(f, power)` falls inside this band with enough
    /// power to act.
    pub fn triggered_by(&self, f: f64, power: f64) -> bool {
        power >= self.power && self.band().contains(f)
    }
}

/// Both write bands of one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceBands {
    pub id: u32,
    pub down_to_up: BandEntry,
    pub up_to_down: BandEntry,
}

/// Measured switching bands for a whole chain, ordered by device id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMap {
    pub devices: Vec<DeviceBands>,
}

impl BandMap {
    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, d) in self.devices.iter().enumerate() {
            if d.id != (i + 1) as u32 {
                return Err(Error::Domain(format!(
                    "band map entry {} has id {}, expected {}",
                    i,
                    d.id,
                    i + 1
                )));
            }
            for e in [&d.down_to_up, &d.up_to_down] {
                if !(e.f_lo <= e.f_hi) {
                    return Err(Error::Domain(format!(
                        "device {}: band [{}, {}] is inverted",
                        d.id, e.f_lo, e.f_hi
                    )));
                }
            }
        }
        Ok(())
    }

    /// Band map implied directly by device parameters: each band is
    /// `band_width` wide, centered on the resonance of the polarity being
    /// written away from, active at the device's threshold power.
    pub fn nominal(chain: &Chain) -> Result<Self> {
        chain.validate()?;
        let devices = chain
            .devices
            .iter()
            .map(|d| {
                let half = d.band_width / 2.0;
                let up_res = resonance_frequency(d, Polarity::Up);
                let down_res = resonance_frequency(d, Polarity::Down);
                DeviceBands {
                    id: d.id,
                    down_to_up: BandEntry {
                        f_lo: down_res - half,
                        f_hi: down_res + half,
                        power: d.p_threshold,
                    },
                    up_to_down: BandEntry {
                        f_lo: up_res - half,
                        f_hi: up_res + half,
                        power: d.p_threshold,
                    },
                }
            })
            .collect();
        let map = BandMap { devices };
        map.validate()?;
        Ok(map)
    }
}

/// One row of the derived write table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub id: u32,
    pub freq_up_to_down: f64,
    pub freq_down_to_up: f64,
    pub power: f64,
}

/// Per-device write frequencies and powers, the compact programming recipe
/// derived from a [`BandMap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgrammingTable {
    pub entries: Vec<TableEntry>,
}

impl ProgrammingTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.id != (i + 1) as u32 {
                return Err(Error::Domain(format!(
                    "table entry {} has id {}, expected {}",
                    i,
                    e.id,
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Write table implied directly by device parameters: the resonance
    /// frequency of the polarity being left, at threshold power.
    pub fn nominal(chain: &Chain) -> Result<Self> {
        chain.validate()?;
        let entries = chain
            .devices
            .iter()
            .map(|d| TableEntry {
                id: d.id,
                freq_up_to_down: resonance_frequency(d, Polarity::Up),
                freq_down_to_up: resonance_frequency(d, Polarity::Down),
                power: d.p_threshold,
            })
            .collect();
        let table = ProgrammingTable { entries };
        table.validate()?;
        Ok(table)
    }

    /// Each write frequency must sit in its own device's band for the
    /// stated direction and in no other device's band of the SAME
    /// direction that is active at the listed power. Cross-direction
    /// collisions are legal; pulse ordering resolves them.
    pub fn verify_selectivity(&self, bands: &BandMap) -> Result<()> {
        if self.entries.len() != bands.devices.len() {
            return Err(Error::Calibration(format!(
                "table covers {} devices but band map has {}",
                self.entries.len(),
                bands.devices.len()
            )));
        }
        for e in &self.entries {
            let own = &bands.devices[(e.id - 1) as usize];
            for (f, dir) in [
                (e.freq_down_to_up, Direction::DownToUp),
                (e.freq_up_to_down, Direction::UpToDown),
            ] {
                let own_entry = match dir {
                    Direction::DownToUp => &own.down_to_up,
                    Direction::UpToDown => &own.up_to_down,
                };
                if !own_entry.triggered_by(f, e.power) {
                    return Err(Error::Calibration(format!(
                        "device {}: {:?} write frequency {} MHz misses its own band \
                         [{}, {}] at {} dBm",
                        e.id, dir, f, own_entry.f_lo, own_entry.f_hi, e.power
                    )));
                }
                for other in &bands.devices {
                    if other.id == e.id {
                        continue;
                    }
                    let other_entry = match dir {
                        Direction::DownToUp => &other.down_to_up,
                        Direction::UpToDown => &other.up_to_down,
                    };
                    if other_entry.triggered_by(f, e.power) {
                        return Err(Error::Calibration(format!(
                            "device {}: {:?} write frequency {} MHz also triggers \
                             device {} in the same direction",
                            e.id, dir, f, other.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A planned pulse: the raw RF parameters plus which device and transition
/// it is meant to drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedPulse {
    pub device: u32,
    pub direction: Direction,
    pub frequency: f64,
    pub power: f64,
    pub duration: f64,
}

impl PlannedPulse {
    pub fn to_spec(&self) -> PulseSpec {
        PulseSpec {
            frequency: self.frequency,
            power: self.power,
            duration: self.duration,
        }
    }
}

/// Ordered broadcast pulse program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub pulses: Vec<PlannedPulse>,
}

impl PulseSequence {
    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }
}

/// Applies every pulse of the sequence to every device of the chain, in
/// order, starting from `state`.
pub fn execute<R: Rng + ?Sized>(
    chain: &Chain,
    state: &ChainConfig,
    seq: &PulseSequence,
    rng: &mut R,
) -> Result<ChainConfig> {
    if state.len() != chain.len() {
        return Err(Error::ConfigLength {
            expected: chain.len(),
            got: state.len(),
        });
    }
    let mut cur = state.clone();
    for pulse in &seq.pulses {
        let spec = pulse.to_spec();
        for (dev, bit) in chain.devices.iter().zip(cur.bits.iter_mut()) {
            *bit = apply_pulse(*bit, dev, &spec, rng);
        }
    }
    Ok(cur)
}
