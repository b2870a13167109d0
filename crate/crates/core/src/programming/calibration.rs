//! Write-frequency × read-frequency calibration maps and the band/table
//! extraction that turns them into a programming recipe without consulting
//! device ground truth.

use std::io::Write;

use rand::Rng;

use crate::chain::{freq_grid, Chain, ChainConfig};
use crate::device::{apply_pulse, rectification, Polarity, PulseSpec};
use crate::encoding::dbm_to_mw;
use crate::error::{Error, Result};
use crate::programming::{BandEntry, BandMap, DeviceBands, ProgrammingTable, TableEntry};

/// A read-spectrum column is "changed" when any sample exceeds this, µV.
const NONZERO_TOL_UV: f64 = 1e-9;
/// Two signatures are the same device when they agree to this relative
/// tolerance in max norm.
const SIG_REL_TOL: f64 = 1e-6;

/// Sweep geometry. Defaults mirror the measurement protocol: write
/// 240–600 MHz in 1 MHz steps at {2, 3, 5, 7, 10, 13} dBm, read
/// 200–700 MHz at −8 dBm, 0.5 s pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub write_f_min: f64,
    pub write_f_max: f64,
    pub write_step: f64,
    pub powers_dbm: Vec<f64>,
    pub read_f_min: f64,
    pub read_f_max: f64,
    pub read_step: f64,
    pub read_power_dbm: f64,
    pub pulse_duration_s: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            write_f_min: 240.0,
            write_f_max: 600.0,
            write_step: 1.0,
            powers_dbm: vec![2.0, 3.0, 5.0, 7.0, 10.0, 13.0],
            read_f_min: 200.0,
            read_f_max: 700.0,
            read_step: 1.0,
            read_power_dbm: -8.0,
            pulse_duration_s: 0.5,
        }
    }
}

/// Raw calibration data: for each programming power and write frequency,
/// the read-spectrum change (µV) relative to the reset state.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMap {
    /// State every device is forced to before each pulse (the field-reset
    /// abstraction; Down probes down→up switching).
    pub reset_polarity: Polarity,
    pub powers_dbm: Vec<f64>,
    pub write_freqs: Vec<f64>,
    pub read_freqs: Vec<f64>,
    pub read_power_dbm: f64,
    /// `data[power][write][read]`, µV.
    pub data: Vec<Vec<Vec<f64>>>,
}

impl RawMap {
    /// For each write frequency, the index of the lowest power at which the
    /// pulse changed anything.
    pub fn stitched_power_index(&self) -> Vec<Option<usize>> {
        (0..self.write_freqs.len())
            .map(|wi| {
                (0..self.powers_dbm.len()).find(|&pi| {
                    self.data[pi][wi].iter().any(|v| v.abs() > NONZERO_TOL_UV)
                })
            })
            .collect()
    }

    /// The stitched map: each write frequency's column at its lowest active
    /// power (zeros where no power switched anything), with that power.
    pub fn stitched(&self) -> (Vec<Option<f64>>, Vec<Vec<f64>>) {
        let idx = self.stitched_power_index();
        let powers = idx
            .iter()
            .map(|o| o.map(|pi| self.powers_dbm[pi]))
            .collect();
        let cols = idx
            .iter()
            .enumerate()
            .map(|(wi, o)| match o {
                Some(pi) => self.data[*pi][wi].clone(),
                None => vec![0.0; self.read_freqs.len()],
            })
            .collect();
        (powers, cols)
    }

    /// Long-format CSV of the stitched map:
    /// `write_mhz,power_dbm,read_mhz,dv_uv` (power empty when no switching
    /// occurred at any power).
    pub fn write_stitched_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let (powers, cols) = self.stitched();
        writeln!(w, "write_mhz,power_dbm,read_mhz,dv_uv")?;
        for (wi, wf) in self.write_freqs.iter().enumerate() {
            for (ri, rf) in self.read_freqs.iter().enumerate() {
                match powers[wi] {
                    Some(p) => writeln!(w, "{wf},{p},{rf},{}", cols[wi][ri])?,
                    None => writeln!(w, "{wf},,{rf},{}", cols[wi][ri])?,
                }
            }
        }
        Ok(())
    }
}

/// Runs the full calibration sweep: for every (power, write frequency)
/// cell, reset the chain to `reset_polarity`, fire one pulse, and record
/// the read-spectrum change against the reset state at read power.
pub fn calibration_sweep<R: Rng + ?Sized>(
    chain: &Chain,
    params: &SweepParams,
    reset_polarity: Polarity,
    rng: &mut R,
) -> Result<RawMap> {
    chain.validate()?;
    if params.powers_dbm.is_empty() {
        return Err(Error::Domain("sweep needs at least one power".into()));
    }
    for w in params.powers_dbm.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Domain(
                "sweep powers must be strictly increasing".into(),
            ));
        }
    }
    let write_freqs = freq_grid(params.write_f_min, params.write_f_max, params.write_step)?;
    let read_freqs = freq_grid(params.read_f_min, params.read_f_max, params.read_step)?;
    if write_freqs.is_empty() || read_freqs.is_empty() {
        return Err(Error::Domain("sweep grids must be non-empty".into()));
    }
    let n = chain.len();
    let reset = match reset_polarity {
        Polarity::Down => ChainConfig::all_down(n),
        Polarity::Up => ChainConfig::all_up(n),
    };
    let read_mw = dbm_to_mw(params.read_power_dbm);

    let mut data = Vec::with_capacity(params.powers_dbm.len());
    for &power in &params.powers_dbm {
        let mut per_power = Vec::with_capacity(write_freqs.len());
        for &wf in &write_freqs {
            let pulse = PulseSpec {
                frequency: wf,
                power,
                duration: params.pulse_duration_s,
            };
            let mut state = reset.clone();
            for (dev, bit) in chain.devices.iter().zip(state.bits.iter_mut()) {
                *bit = apply_pulse(*bit, dev, &pulse, rng);
            }
            // Only devices that actually switched contribute to the change.
            let flipped: Vec<usize> = (0..n).filter(|&j| state.bits[j] != reset.bits[j]).collect();
            let col = if flipped.is_empty() {
                vec![0.0; read_freqs.len()]
            } else {
                read_freqs
                    .iter()
                    .map(|&rf| {
                        flipped
                            .iter()
                            .map(|&j| {
                                let dev = &chain.devices[j];
                                (rectification(dev, state.bits[j], rf)
                                    - rectification(dev, reset.bits[j], rf))
                                    * read_mw
                            })
                            .sum()
                    })
                    .collect()
            };
            per_power.push(col);
        }
        data.push(per_power);
    }
    Ok(RawMap {
        reset_polarity,
        powers_dbm: params.powers_dbm.clone(),
        write_freqs,
        read_freqs,
        read_power_dbm: params.read_power_dbm,
        data,
    })
}

#[derive(Debug, Clone)]
struct Cluster {
    freqs: Vec<f64>,
    power: f64,
    sig: Vec<f64>,
}

impl Cluster {
    fn f_lo(&self) -> f64 {
        self.freqs[0]
    }

    fn f_hi(&self) -> f64 {
        *self.freqs.last().unwrap()
    }

    fn center(&self) -> f64 {
        0.5 * (self.f_lo() + self.f_hi())
    }
}

fn sig_scale(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .chain(b)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(NONZERO_TOL_UV)
}

fn sigs_equal(a: &[f64], b: &[f64]) -> bool {
    let scale = sig_scale(a, b);
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= SIG_REL_TOL * scale)
}

fn sig_is_sum(c: &[f64], a: &[f64], b: &[f64]) -> bool {
    let scale = sig_scale(c, a).max(sig_scale(c, b));
    c.iter()
        .zip(a.iter().zip(b))
        .all(|(x, (y, z))| (x - (y + z)).abs() <= SIG_REL_TOL * scale)
}

fn sigs_opposite(a: &[f64], b: &[f64]) -> bool {
    let scale = sig_scale(a, b);
    a.iter()
        .zip(b)
        .all(|(x, y)| (x + y).abs() <= SIG_REL_TOL * scale)
}

/// Groups nonzero stitched columns into per-device clusters by their read
/// signatures, then folds composite clusters (two devices switching on the
/// same pulse) back into their constituents' bands.
fn cluster_map(raw: &RawMap) -> Result<Vec<Cluster>> {
    let idx = raw.stitched_power_index();
    let mut clusters: Vec<Cluster> = Vec::new();
    for (wi, &wf) in raw.write_freqs.iter().enumerate() {
        let Some(pi) = idx[wi] else { continue };
        let sig = &raw.data[pi][wi];
        let power = raw.powers_dbm[pi];
        let matches: Vec<usize> = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| sigs_equal(&c.sig, sig))
            .map(|(k, _)| k)
            .collect();
        match matches.len() {
            0 => clusters.push(Cluster {
                freqs: vec![wf],
                power,
                sig: sig.clone(),
            }),
            1 => {
                let c = &mut clusters[matches[0]];
                c.freqs.push(wf);
                c.power = c.power.min(power);
            }
            _ => {
                return Err(Error::Calibration(format!(
                    "write frequency {wf} MHz matches multiple distinct response \
                     signatures; devices are indistinguishable on this read grid"
                )))
            }
        }
    }

    // Composite columns: a signature that equals the sum of two other
    // clusters' signatures marks frequencies where both devices switched.
    // Extend both constituent bands over those frequencies and drop the
    // composite cluster.
    let mut is_composite = vec![false; clusters.len()];
    let mut extend: Vec<(usize, Vec<f64>)> = Vec::new();
    for ci in 0..clusters.len() {
        'pairs: for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                if a == ci || b == ci {
                    continue;
                }
                if sig_is_sum(&clusters[ci].sig, &clusters[a].sig, &clusters[b].sig) {
                    is_composite[ci] = true;
                    extend.push((a, clusters[ci].freqs.clone()));
                    extend.push((b, clusters[ci].freqs.clone()));
                    break 'pairs;
                }
            }
        }
    }
    for (k, freqs) in extend {
        clusters[k].freqs.extend(freqs);
    }
    let mut result: Vec<Cluster> = clusters
        .into_iter()
        .zip(is_composite)
        .filter(|(_, comp)| !comp)
        .map(|(mut c, _)| {
            c.freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            c
        })
        .collect();
    result.sort_by(|a, b| a.center().partial_cmp(&b.center()).unwrap());
    Ok(result)
}

/// Largest subinterval of `own` not covered by any other same-direction
/// band active at `power`. Returns its midpoint.
fn exclusive_frequency(own: &BandEntry, others: &[BandEntry], power: f64) -> Option<f64> {
    let center = 0.5 * (own.f_lo + own.f_hi);
    let blocked = |f: f64| others.iter().any(|o| o.triggered_by(f, power));
    if !blocked(center) {
        return Some(center);
    }
    // Candidate subinterval boundaries: own edges and the edges of every
    // blocking band clipped to own.
    let mut cuts = vec![own.f_lo, own.f_hi];
    for o in others {
        if o.power <= power {
            if o.f_lo > own.f_lo && o.f_lo < own.f_hi {
                cuts.push(o.f_lo);
            }
            if o.f_hi > own.f_lo && o.f_hi < own.f_hi {
                cuts.push(o.f_hi);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best: Option<(f64, f64)> = None;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let len = w[1] - w[0];
        if len > 0.0 && !blocked(mid) && best.is_none_or(|(bl, _)| len > bl) {
            best = Some((len, mid));
        }
    }
    best.map(|(_, mid)| mid)
}

/// Derives the band map and programming table from the two calibration
/// sweeps. `expected_devices` is the chain length (known from the chain
/// file); device parameters themselves are never consulted.
pub fn extract_table(
    raw_down: &RawMap,
    raw_up: &RawMap,
    expected_devices: usize,
) -> Result<(ProgrammingTable, BandMap)> {
    if raw_down.reset_polarity != Polarity::Down || raw_up.reset_polarity != Polarity::Up {
        return Err(Error::Calibration(
            "extract_table needs one sweep reset to Down and one reset to Up".into(),
        ));
    }
    if raw_down.read_freqs != raw_up.read_freqs {
        return Err(Error::Calibration(
            "the two sweeps must share a read grid".into(),
        ));
    }
    let down_clusters = cluster_map(raw_down)?;
    let up_clusters = cluster_map(raw_up)?;
    for (dir, clusters) in [("down\u{2192}up", &down_clusters), ("up\u{2192}down", &up_clusters)] {
        if clusters.len() != expected_devices {
            return Err(Error::Calibration(format!(
                "{dir} sweep resolved {} switching bands, expected {} \
                 (indistinguishable or silent devices)",
                clusters.len(),
                expected_devices
            )));
        }
    }

    // Pair directions: flipping the same device from opposite start states
    // produces exactly opposite read signatures.
    let mut up_for_down: Vec<Option<usize>> = vec![None; expected_devices];
    let mut used = vec![false; expected_devices];
    for (di, dc) in down_clusters.iter().enumerate() {
        let mut found = None;
        for (ui, uc) in up_clusters.iter().enumerate() {
            if sigs_opposite(&dc.sig, &uc.sig) {
                if found.is_some() {
                    return Err(Error::Calibration(format!(
                        "down\u{2192}up band at {} MHz matches multiple up\u{2192}down bands",
                        dc.center()
                    )));
                }
                found = Some(ui);
            }
        }
        let ui = found.ok_or_else(|| {
            Error::Calibration(format!(
                "down\u{2192}up band at {} MHz has no matching up\u{2192}down band",
                dc.center()
            ))
        })?;
        if used[ui] {
            return Err(Error::Calibration(format!(
                "up\u{2192}down band at {} MHz claimed by two devices",
                up_clusters[ui].center()
            )));
        }
        used[ui] = true;
        up_for_down[di] = Some(ui);
    }

    let mut devices = Vec::with_capacity(expected_devices);
    for (di, dc) in down_clusters.iter().enumerate() {
        let uc = &up_clusters[up_for_down[di].unwrap()];
        devices.push(DeviceBands {
            id: (di + 1) as u32,
            down_to_up: BandEntry {
                f_lo: dc.f_lo(),
                f_hi: dc.f_hi(),
                power: dc.power,
            },
            up_to_down: BandEntry {
                f_lo: uc.f_lo(),
                f_hi: uc.f_hi(),
                power: uc.power,
            },
        });
    }
    let bands = BandMap { devices };

    let mut entries = Vec::with_capacity(expected_devices);
    for i in 0..expected_devices {
        let own = &bands.devices[i];
        let power = own.down_to_up.power.max(own.up_to_down.power);
        let others_down: Vec<BandEntry> = bands
            .devices
            .iter()
            .filter(|d| d.id != own.id)
            .map(|d| d.down_to_up)
            .collect();
        let others_up: Vec<BandEntry> = bands
            .devices
            .iter()
            .filter(|d| d.id != own.id)
            .map(|d| d.up_to_down)
            .collect();
        let f_du = exclusive_frequency(&own.down_to_up, &others_down, power).ok_or_else(|| {
            Error::Calibration(format!(
                "device {}: down\u{2192}up band [{}, {}] has no sub-interval free of \
                 other devices' down\u{2192}up bands",
                own.id, own.down_to_up.f_lo, own.down_to_up.f_hi
            ))
        })?;
        let f_ud = exclusive_frequency(&own.up_to_down, &others_up, power).ok_or_else(|| {
            Error::Calibration(format!(
                "device {}: up\u{2192}down band [{}, {}] has no sub-interval free of \
                 other devices' up\u{2192}down bands",
                own.id, own.up_to_down.f_lo, own.up_to_down.f_hi
            ))
        })?;
        entries.push(TableEntry {
            id: own.id,
            freq_up_to_down: f_ud,
            freq_down_to_up: f_du,
            power,
        });
    }
    let table = ProgrammingTable { entries };
    table.verify_selectivity(&bands)?;
    Ok((table, bands))
}
