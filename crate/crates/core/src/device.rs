//! Single vortex-MTJ behavior: polarity-dependent resonance, spin-diode
//! rectification, and resonant polarity switching under an RF pulse.
//!
//! The rectified response is a mixed symmetric/antisymmetric Lorentzian
//! centered on the resonance of the stored polarity. Switching is modeled
//! as a fixed-width frequency window around the *current* polarity's
//! resonance that becomes active at or above a per-device power threshold.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vortex-core polarity; the stored binary state of one junction.
///
/// `'1'` denotes [`Polarity::Up`] and `'0'` denotes [`Polarity::Down`] in
/// every textual encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Up,
    Down,
}

impl Polarity {
    pub fn opposite(self) -> Self {
        match self {
            Polarity::Up => Polarity::Down,
            Polarity::Down => Polarity::Up,
        }
    }

    pub fn to_bit_char(self) -> char {
        match self {
            Polarity::Up => '1',
            Polarity::Down => '0',
        }
    }

    pub fn from_bit_char(c: char) -> Result<Self> {
        match c {
            '1' => Ok(Polarity::Up),
            '0' => Ok(Polarity::Down),
            other => Err(Error::Domain(format!(
                "invalid polarity character {other:?}, expected '0' or '1'"
            ))),
        }
    }
}

/// Phenomenological parameters of one vortex MTJ.
///
/// Frequencies are MHz, powers dBm, lengths nm, responsivity µV/mW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// 1-based index within a chain.
    pub id: u32,
    /// Dot diameter, nm.
    pub diameter: f64,
    /// Midpoint of the two polarity resonances at the operating field, MHz.
    pub f_center: f64,
    /// Splitting δ between the two polarity resonances, MHz.
    /// `f_res(Down) = f_center + δ/2`, `f_res(Up) = f_center − δ/2`.
    pub polarity_split: f64,
    /// Half-width Γ of the rectification lineshape, MHz.
    pub linewidth: f64,
    /// Peak rectified response per unit tone power, µV/mW.
    pub responsivity: f64,
    /// Dispersive/symmetric lineshape mix η ∈ [−1, 1].
    pub asym: f64,
    /// Overall sign of the rectified contribution, ±1.
    pub sign: f64,
    /// Switching-window width w, MHz.
    pub band_width: f64,
    /// Minimum pulse power that enables switching, dBm.
    pub p_threshold: f64,
}

impl DeviceParams {
    /// Checks field-level invariants. A `band_width` at or above
    /// `polarity_split` is *valid*: it puts the device in the overlap
    /// regime where switching outcomes randomize.
    pub fn validate(&self) -> Result<()> {
        if !(self.diameter > 0.0) {
            return Err(Error::Domain(format!(
                "device {}: diameter must be > 0, got {}",
                self.id, self.diameter
            )));
        }
        if !(self.linewidth > 0.0) {
            return Err(Error::Domain(format!(
                "device {}: linewidth must be > 0, got {}",
                self.id, self.linewidth
            )));
        }
        if !(self.band_width > 0.0) {
            return Err(Error::Domain(format!(
                "device {}: band_width must be > 0, got {}",
                self.id, self.band_width
            )));
        }
        if !(self.polarity_split >= 0.0) {
            return Err(Error::Domain(format!(
                "device {}: polarity_split must be >= 0, got {}",
                self.id, self.polarity_split
            )));
        }
        if !(self.asym >= -1.0 && self.asym <= 1.0) {
            return Err(Error::Domain(format!(
                "device {}: asym must be in [-1, 1], got {}",
                self.id, self.asym
            )));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::Domain(format!(
                "device {}: sign must be +1 or -1, got {}",
                self.id, self.sign
            )));
        }
        Ok(())
    }
}

/// One RF write attempt: frequency MHz, power dBm, duration seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub frequency: f64,
    pub power: f64,
    pub duration: f64,
}

/// Below this duration a pulse is treated as ineffective; above it the
/// switching outcome does not depend on duration at all (the underlying
/// core-reversal dynamics are ns-scale, far below any practical pulse).
pub const DEFAULT_MIN_PULSE_S: f64 = 1e-3;

/// A closed frequency interval `[f_lo, f_hi]` in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqBand {
    pub f_lo: f64,
    pub f_hi: f64,
}

impl FreqBand {
    pub fn contains(&self, f: f64) -> bool {
        self.f_lo <= f && f <= self.f_hi
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.f_lo + self.f_hi)
    }

    pub fn width(&self) -> f64 {
        self.f_hi - self.f_lo
    }

    pub fn overlaps(&self, other: &FreqBand) -> bool {
        self.f_lo <= other.f_hi && other.f_lo <= self.f_hi
    }
}

/// Resonance frequency of the given polarity, MHz.
pub fn resonance_frequency(dev: &DeviceParams, p: Polarity) -> f64 {
    match p {
        Polarity::Down => dev.f_center + 0.5 * dev.polarity_split,
        Polarity::Up => dev.f_center - 0.5 * dev.polarity_split,
    }
}

/// Gyrotropic frequency of a dot of diameter `diameter_nm`, anchored to a
/// reference dot (`anchor_d_nm` ↦ `anchor_f_mhz`); frequency scales as 1/R.
pub fn diameter_to_frequency(diameter_nm: f64, anchor_d_nm: f64, anchor_f_mhz: f64) -> Result<f64> {
    if !(diameter_nm > 0.0) {
        return Err(Error::Domain(format!(
            "diameter must be > 0, got {diameter_nm}"
        )));
    }
    if !(anchor_d_nm > 0.0) || !(anchor_f_mhz > 0.0) {
        return Err(Error::Domain(
            "anchor diameter and frequency must be > 0".into(),
        ));
    }
    Ok(anchor_f_mhz * anchor_d_nm / diameter_nm)
}

/// Spin-diode sensitivity of the device at drive frequency `f_mhz`, µV/mW.
///
/// Mixed lineshape: `(1−|η|)` of a symmetric Lorentzian plus `η` of the
/// antisymmetric (dispersive) component, both with half-width Γ around the
/// resonance of polarity `p`.
pub fn rectification(dev: &DeviceParams, p: Polarity, f_mhz: f64) -> f64 {
    let fp = resonance_frequency(dev, p);
    let det = f_mhz - fp;
    let g = dev.linewidth;
    let denom = det * det + g * g;
    let sym = (1.0 - dev.asym.abs()) * g * g / denom;
    let antisym = dev.asym * g * det / denom;
    dev.sign * dev.responsivity * (sym + antisym)
}

/// Switching window of the device while it stores polarity `p`.
///
/// Empty below the power threshold; otherwise a band of width `band_width`
/// centered on the *current* polarity's resonance (only the core that is
/// actually present can be driven to its critical velocity).
pub fn switching_band(dev: &DeviceParams, p: Polarity, power_dbm: f64) -> Option<FreqBand> {
    if power_dbm < dev.p_threshold {
        return None;
    }
    let fp = resonance_frequency(dev, p);
    let half = 0.5 * dev.band_width;
    Some(FreqBand {
        f_lo: fp - half,
        f_hi: fp + half,
    })
}

/// Final polarity after one RF pulse, with a configurable duration floor.
///
/// Inside the current polarity's window only: deterministic reversal.
/// Inside both windows (overlap regime): repeated reversals leave a fair
/// coin draw. Outside the current window: no change, even when the
/// frequency sits in the opposite polarity's window.
pub fn apply_pulse_with_floor<R: Rng + ?Sized>(
    state: Polarity,
    dev: &DeviceParams,
    pulse: &PulseSpec,
    min_duration_s: f64,
    rng: &mut R,
) -> Polarity {
    if pulse.duration < min_duration_s {
        return state;
    }
    let in_cur = switching_band(dev, state, pulse.power)
        .is_some_and(|b| b.contains(pulse.frequency));
    let in_opp = switching_band(dev, state.opposite(), pulse.power)
        .is_some_and(|b| b.contains(pulse.frequency));
    match (in_cur, in_opp) {
        (false, _) => state,
        (true, false) => state.opposite(),
        (true, true) => {
            if rng.gen_bool(0.5) {
                Polarity::Up
            } else {
                Polarity::Down
            }
        }
    }
}

/// [`apply_pulse_with_floor`] with the default 1 ms duration floor.
pub fn apply_pulse<R: Rng + ?Sized>(
    state: Polarity,
    dev: &DeviceParams,
    pulse: &PulseSpec,
    rng: &mut R,
) -> Polarity {
    apply_pulse_with_floor(state, dev, pulse, DEFAULT_MIN_PULSE_S, rng)
}
