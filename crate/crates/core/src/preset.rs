//! Built-in 11-device chains with interleaved switching bands, plus the
//! default two-chain network built from them.

use crate::chain::Chain;
use crate::classifier::Network;
use crate::device::DeviceParams;

const F_CENTER_A: [f64; 11] = [
    267.5, 288.0, 301.5, 315.0, 337.0, 355.5, 388.0, 426.0, 449.0, 498.5, 541.0,
];
const SPLIT_A: [f64; 11] = [
    15.0, 20.0, 19.0, 20.0, 20.0, 19.0, 24.0, 32.0, 32.0, 27.0, 38.0,
];
const P_THRESHOLD_A: [f64; 11] = [2.0, 2.0, 2.0, 2.0, 5.0, 5.0, 5.0, 7.0, 7.0, 10.0, 10.0];

fn build(name: &str, f_shift: f64, asym_odd: f64) -> Chain {
    let devices = (0..11)
        .map(|k| DeviceParams {
            id: k as u32 + 1,
            diameter: 800.0 - 50.0 * k as f64,
            f_center: F_CENTER_A[k] + f_shift,
            polarity_split: SPLIT_A[k],
            linewidth: 15.0,
            responsivity: 100.0,
            asym: if k % 2 == 0 { asym_odd } else { -asym_odd },
            sign: 1.0,
            band_width: 10.0,
            p_threshold: P_THRESHOLD_A[k],
        })
        .collect();
    Chain::new(name, devices)
}

/// Eleven devices, 800 nm down to 300 nm, with disjoint per-direction
/// switching bands and power tiers rising from 2 to 10 dBm.
pub fn chain_a() -> Chain {
    build("chain-a", 0.0, 0.3)
}

/// Same geometry as `chain_a` with every resonance shifted up 4 MHz and
/// the asymmetry pattern inverted.
pub fn chain_b() -> Chain {
    build("chain-b", 4.0, -0.3)
}

/// Two-chain network over the built-in chains with alternating reference
/// configurations and no readout noise.
pub fn default_network() -> Network {
    Network::with_default_refs(chain_a(), chain_b()).expect("built-in chains are valid")
}
