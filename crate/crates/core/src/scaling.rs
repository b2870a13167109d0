//! Analytical size/frequency scaling: gyrotropic frequency, damping-limited
//! switching field, and anchored power/duration/energy relations.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::encoding::dbm_to_mw;
use crate::error::{Error, Result};

/// Material and geometry constants entering the closed-form scaling laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Dimensionless prefactor of the gyrotropic frequency; absorbs the
    /// permeability and mode-profile factors.
    pub c: f64,
    /// Gyromagnetic ratio, rad·s⁻¹·T⁻¹.
    pub gamma: f64,
    /// Saturation magnetization, A/m.
    pub ms: f64,
    /// Free-layer thickness, nm.
    pub l: f64,
    /// Gilbert damping.
    pub alpha: f64,
    /// Vortex-core radius, nm.
    pub rc: f64,
    /// Critical core velocity for polarity reversal, m/s.
    pub vc: f64,
}

impl MaterialParams {
    /// Parameters with `c` solved so that a dot of size `r_anchor_nm` sits
    /// at `f_anchor_mhz`. The critical velocity has no published value for
    /// these stacks; 320 m/s is a typical literature magnitude and should
    /// be treated as a tunable default.
    pub fn calibrated(f_anchor_mhz: f64, r_anchor_nm: f64) -> Result<Self> {
        if !(f_anchor_mhz > 0.0) || !(r_anchor_nm > 0.0) {
            return Err(Error::Domain(
                "calibration anchor frequency and size must be > 0".into(),
            ));
        }
        let gamma = 1.76e11;
        let ms = 8.0e5;
        let l = 9.0;
        let c = f_anchor_mhz * 1e6 * TAU * r_anchor_nm / (gamma * ms * l);
        let m = MaterialParams {
            c,
            gamma,
            ms,
            l,
            alpha: 0.01,
            rc: 25.0,
            vc: 320.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c", self.c),
            ("gamma", self.gamma),
            ("ms", self.ms),
            ("l", self.l),
            ("alpha", self.alpha),
            ("rc", self.rc),
            ("vc", self.vc),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "material parameter {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Dot size whose gyrotropic frequency equals `f_mhz`.
    pub fn size_for_frequency(&self, f_mhz: f64) -> Result<f64> {
        if !(f_mhz > 0.0) {
            return Err(Error::Domain(format!("frequency must be > 0, got {f_mhz}")));
        }
        Ok(self.c * self.gamma * self.ms * self.l / (TAU * f_mhz * 1e6))
    }
}

impl Default for MaterialParams {
    /// Calibrated so a 500 nm dot resonates at 250 MHz.
    fn default() -> Self {
        MaterialParams::calibrated(250.0, 500.0).expect("static anchor is valid")
    }
}

/// Gyrotropic frequency of a dot of size `r_nm`, MHz: `C·γ·Ms·(L/R)/2π`.
pub fn gyro_frequency(m: &MaterialParams, r_nm: f64) -> Result<f64> {
    if !(r_nm > 0.0) {
        return Err(Error::Domain(format!("dot size must be > 0, got {r_nm}")));
    }
    Ok(m.c * m.gamma * m.ms * (m.l / r_nm) / TAU / 1e6)
}

/// Energy-dissipation factor `d = α(1 + ln(R/Rc)/2)`.
pub fn damping_factor(m: &MaterialParams, r_nm: f64) -> Result<f64> {
    if !(r_nm > m.rc) {
        return Err(Error::Domain(format!(
            "dot size {r_nm} nm must exceed the core radius {} nm",
            m.rc
        )));
    }
    Ok(m.alpha * (1.0 + (r_nm / m.rc).ln() / 2.0))
}

/// Minimum quasi-static switching field `H = d·vc/(3γR)`, tesla.
pub fn min_switching_field(m: &MaterialParams, r_nm: f64) -> Result<f64> {
    let d = damping_factor(m, r_nm)?;
    Ok(d * m.vc / (3.0 * m.gamma * r_nm * 1e-9))
}

/// [`min_switching_field`] with the logarithmic size correction dropped,
/// i.e. `α·vc/(3γR)`; exposes the bare 1/R scaling.
pub fn min_switching_field_logfree(m: &MaterialParams, r_nm: f64) -> Result<f64> {
    if !(r_nm > 0.0) {
        return Err(Error::Domain(format!("dot size must be > 0, got {r_nm}")));
    }
    Ok(m.alpha * m.vc / (3.0 * m.gamma * r_nm * 1e-9))
}

/// Threshold write power at `f_mhz`, given an anchor power at `f_ref_mhz`.
/// Linear power grows with the square of frequency, hence +20 dB/decade.
pub fn threshold_power(p_ref_dbm: f64, f_ref_mhz: f64, f_mhz: f64) -> f64 {
    p_ref_dbm + 20.0 * (f_mhz / f_ref_mhz).log10()
}

/// Pulse duration shrinks inversely with frequency (a fixed number of
/// gyration cycles).
pub fn pulse_duration(tau_ref_ns: f64, f_ref_mhz: f64, f_mhz: f64) -> f64 {
    tau_ref_ns * f_ref_mhz / f_mhz
}

/// Switching energy grows linearly with frequency.
pub fn switching_energy(e_ref_pj: f64, f_ref_mhz: f64, f_mhz: f64) -> f64 {
    e_ref_pj * f_mhz / f_ref_mhz
}

/// Reference operating point tying the power, duration, and energy scalings
/// together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyAnchor {
    pub f_ref_mhz: f64,
    pub e_ref_pj: f64,
    pub p_ref_dbm: f64,
    pub tau_ref_ns: f64,
}

impl EnergyAnchor {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f_ref_mhz", self.f_ref_mhz),
            ("e_ref_pj", self.e_ref_pj),
            ("tau_ref_ns", self.tau_ref_ns),
        ] {
            if !(v > 0.0) {
                return Err(Error::Domain(format!(
                    "anchor {name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Energy implied by the power/duration pair alone. mW × ns is exactly
    /// pJ, no unit factor needed.
    pub fn implied_energy_pj(&self) -> f64 {
        dbm_to_mw(self.p_ref_dbm) * self.tau_ref_ns
    }

    /// Relative deviation between the stated and implied energies.
    pub fn consistency_deviation(&self) -> f64 {
        (self.implied_energy_pj() - self.e_ref_pj).abs() / self.e_ref_pj
    }

    /// The anchor triple is considered consistent within 20 %. When it is
    /// not, `e_ref_pj` stays authoritative for the energy column and
    /// callers should warn.
    pub fn is_consistent(&self) -> bool {
        self.consistency_deviation() <= 0.20
    }
}

impl Default for EnergyAnchor {
    /// 250 MHz device class: 5 pJ at −11 dBm, 50 ns.
    fn default() -> Self {
        EnergyAnchor {
            f_ref_mhz: 250.0,
            e_ref_pj: 5.0,
            p_ref_dbm: -11.0,
            tau_ref_ns: 50.0,
        }
    }
}

/// One row of the scaling table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub f_mhz: f64,
    pub p_dbm: f64,
    pub tau_ns: f64,
    pub e_pj: f64,
    pub h_t: f64,
}

/// Evaluates all scaling laws over a frequency grid. The field column maps
/// each frequency back to a dot size through the material anchor.
pub fn scaling_table(
    anchor: &EnergyAnchor,
    material: &MaterialParams,
    grid: &[f64],
) -> Result<Vec<ScalingRow>> {
    anchor.validate()?;
    material.validate()?;
    let mut rows = Vec::with_capacity(grid.len());
    for &f in grid {
        if !(f > 0.0) {
            return Err(Error::Domain(format!("grid frequency must be > 0, got {f}")));
        }
        let r = material.size_for_frequency(f)?;
        rows.push(ScalingRow {
            f_mhz: f,
            p_dbm: threshold_power(anchor.p_ref_dbm, anchor.f_ref_mhz, f),
            tau_ns: pulse_duration(anchor.tau_ref_ns, anchor.f_ref_mhz, f),
            e_pj: switching_energy(anchor.e_ref_pj, anchor.f_ref_mhz, f),
            h_t: min_switching_field(material, r)?,
        });
    }
    Ok(rows)
}

pub fn write_scaling_csv<W: Write>(rows: &[ScalingRow], mut w: W) -> Result<()> {
    writeln!(w, "f_mhz,p_dbm,tau_ns,e_pj,h_t")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.f_mhz, r.p_dbm, r.tau_ns, r.e_pj, r.h_t)?;
    }
    Ok(())
}
