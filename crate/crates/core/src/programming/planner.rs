//! Pulse-sequence planning: reset phase, set phase, and a static validator
//! that proves a plan reaches its target from every initial state.

use crate::chain::ChainConfig;
use crate::device::Polarity;
use crate::error::{Error, Result};
use crate::programming::{BandMap, Direction, PlannedPulse, ProgrammingTable, PulseSequence};

/// Duration stamped on every planned pulse, seconds.
pub const PLAN_PULSE_DURATION_S: f64 = 0.5;

/// Knowledge about one device while statically simulating a plan. The
/// simulation starts all-Unknown, so a valid plan must force every bit
/// regardless of where it began.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tracked {
    Unknown,
    Down,
    Up,
    Random,
}

/// Folds the band-map transition of a single broadcast pulse over every
/// device's tracked state.
pub fn track_pulse(bands: &BandMap, states: &mut [Tracked], frequency: f64, power: f64) {
    for (d, s) in bands.devices.iter().zip(states.iter_mut()) {
        let hits_down_band = d.down_to_up.triggered_by(frequency, power);
        let hits_up_band = d.up_to_down.triggered_by(frequency, power);
        *s = match (hits_down_band, hits_up_band) {
            (false, false) => *s,
            (true, false) => Tracked::Up,
            (false, true) => Tracked::Down,
            (true, true) => Tracked::Random,
        };
    }
}

/// Runs the static simulation of a whole sequence from all-Unknown.
pub fn track_sequence(bands: &BandMap, seq: &PulseSequence) -> Vec<Tracked> {
    let mut states = vec![Tracked::Unknown; bands.len()];
    for p in &seq.pulses {
        track_pulse(bands, &mut states, p.frequency, p.power);
    }
    states
}

/// Checks that the sequence provably ends in `target` from any start.
/// Returns the ids of devices whose final tracked state misses the target.
pub fn validate_sequence(bands: &BandMap, seq: &PulseSequence, target: &ChainConfig) -> Vec<u32> {
    let finals = track_sequence(bands, seq);
    finals
        .iter()
        .zip(&target.bits)
        .enumerate()
        .filter(|(_, (s, want))| {
            !matches!(
                (s, want),
                (Tracked::Up, Polarity::Up) | (Tracked::Down, Polarity::Down)
            )
        })
        .map(|(i, _)| (i + 1) as u32)
        .collect()
}

fn reset_phase(table: &ProgrammingTable) -> Vec<PlannedPulse> {
    let mut entries: Vec<_> = table.entries.iter().collect();
    entries.sort_by(|a, b| b.freq_up_to_down.partial_cmp(&a.freq_up_to_down).unwrap());
    entries
        .into_iter()
        .map(|e| PlannedPulse {
            device: e.id,
            direction: Direction::UpToDown,
            frequency: e.freq_up_to_down,
            power: e.power,
            duration: PLAN_PULSE_DURATION_S,
        })
        .collect()
}

fn set_pulse(table: &ProgrammingTable, id: u32) -> PlannedPulse {
    let e = &table.entries[(id - 1) as usize];
    PlannedPulse {
        device: e.id,
        direction: Direction::DownToUp,
        frequency: e.freq_down_to_up,
        power: e.power,
        duration: PLAN_PULSE_DURATION_S,
    }
}

/// Topological set-phase order under "j must fire before k" constraints:
/// j's set pulse knocks k back down whenever it lands in k's up→down band
/// with enough power, so k's own set pulse has to come later... unless k
/// precedes j, in which case j would undo k. Hence the edge j→k.
fn topological_set_order(
    table: &ProgrammingTable,
    bands: &BandMap,
    set_ids: &[u32],
) -> std::result::Result<Vec<u32>, Vec<(u32, u32)>> {
    let idx_of = |id: u32| set_ids.iter().position(|&x| x == id).unwrap();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); set_ids.len()];
    let mut indeg = vec![0usize; set_ids.len()];
    for &j in set_ids {
        let pj = set_pulse(table, j);
        for &k in set_ids {
            if j == k {
                continue;
            }
            let kb = &bands.devices[(k - 1) as usize].up_to_down;
            if kb.triggered_by(pj.frequency, pj.power) {
                succ[idx_of(j)].push(idx_of(k));
                indeg[idx_of(k)] += 1;
            }
        }
    }
    let mut ready: Vec<usize> = (0..set_ids.len()).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(set_ids.len());
    while !ready.is_empty() {
        // Highest write frequency first among the ready pulses, echoing the
        // descending-frequency reset convention.
        ready.sort_by(|&a, &b| {
            let fa = table.entries[(set_ids[a] - 1) as usize].freq_down_to_up;
            let fb = table.entries[(set_ids[b] - 1) as usize].freq_down_to_up;
            fb.partial_cmp(&fa).unwrap()
        });
        let i = ready.remove(0);
        order.push(set_ids[i]);
        for &k in &succ[i] {
            indeg[k] -= 1;
            if indeg[k] == 0 {
                ready.push(k);
            }
        }
    }
    if order.len() == set_ids.len() {
        Ok(order)
    } else {
        // Remaining nodes form cycles; report their edges.
        let mut cyc = Vec::new();
        for (ji, js) in succ.iter().enumerate() {
            if order.contains(&set_ids[ji]) {
                continue;
            }
            for &ki in js {
                if !order.contains(&set_ids[ki]) {
                    cyc.push((set_ids[ji], set_ids[ki]));
                }
            }
        }
        Err(cyc)
    }
}

/// Builds a broadcast plan for `target`: a full descending-frequency reset
/// phase, then one set pulse per target-Up device. The set phase tries the
/// descending-frequency convention first, then ascending, then a
/// dependency-derived order; whichever ordering the static validator
/// accepts first is returned. The plan never depends on the current state.
pub fn plan_sequence(
    table: &ProgrammingTable,
    bands: &BandMap,
    target: &ChainConfig,
) -> Result<PulseSequence> {
    table.validate()?;
    bands.validate()?;
    let n = table.entries.len();
    if bands.devices.len() != n {
        return Err(Error::Domain(format!(
            "table covers {} devices, band map {}",
            n,
            bands.devices.len()
        )));
    }
    if target.len() != n {
        return Err(Error::ConfigLength {
            expected: n,
            got: target.len(),
        });
    }

    let reset = reset_phase(table);
    let set_ids: Vec<u32> = target
        .bits
        .iter()
        .enumerate()
        .filter(|(_, &p)| p == Polarity::Up)
        .map(|(i, _)| (i + 1) as u32)
        .collect();

    let mut desc = set_ids.clone();
    desc.sort_by(|&a, &b| {
        let fa = table.entries[(a - 1) as usize].freq_down_to_up;
        let fb = table.entries[(b - 1) as usize].freq_down_to_up;
        fb.partial_cmp(&fa).unwrap()
    });
    let mut asc = desc.clone();
    asc.reverse();

    let mut candidates = vec![desc, asc];
    let topo_result = topological_set_order(table, bands, &set_ids);
    if let Ok(order) = &topo_result {
        candidates.push(order.clone());
    }

    for order in &candidates {
        let mut pulses = reset.clone();
        pulses.extend(order.iter().map(|&id| set_pulse(table, id)));
        let seq = PulseSequence { pulses };
        if validate_sequence(bands, &seq, target).is_empty() {
            return Ok(seq);
        }
    }

    // Nothing validates: explain why. Order-independent conflicts first.
    let mut conflicts = Vec::new();
    for &j in &set_ids {
        let pj = set_pulse(table, j);
        for d in &bands.devices {
            if d.id == j {
                continue;
            }
            let is_set = set_ids.contains(&d.id);
            if !is_set && d.down_to_up.triggered_by(pj.frequency, pj.power) {
                conflicts.push(format!(
                    "set pulse for device {j} ({} MHz @ {} dBm) also sets device {} up",
                    pj.frequency, pj.power, d.id
                ));
            }
            if d.down_to_up.triggered_by(pj.frequency, pj.power)
                && d.up_to_down.triggered_by(pj.frequency, pj.power)
            {
                conflicts.push(format!(
                    "set pulse for device {j} randomizes device {} (both bands hit)",
                    d.id
                ));
            }
        }
    }
    if let Err(cycle_edges) = &topo_result {
        for (a, b) in cycle_edges {
            conflicts.push(format!(
                "devices {a} and {b} are in a set-order dependency cycle"
            ));
        }
    }
    if conflicts.is_empty() {
        conflicts.push("no tried set-phase ordering validates".into());
    }
    Err(Error::UnreachableTarget(format!(
        "target {target}: {}",
        conflicts.join("; ")
    )))
}
