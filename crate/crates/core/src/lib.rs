//! Behavioral simulator for chains of frequency-addressable spintronic
//! junctions: per-device rectification and switching, chain spectra and
//! configuration enumeration, broadcast write calibration and planning,
//! spectral readout, waveform encoding of feature vectors, a two-chain
//! binary classifier with configuration search, and size/energy scaling.

// `!(x > 0.0)` style checks are deliberate: they reject NaN together with
// the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod classifier;
pub mod dataset;
pub mod device;
pub mod encoding;
pub mod error;
pub mod preset;
pub mod programming;
pub mod scaling;

pub use chain::{
    chain_sensitivity, config_sums, delta_spectrum, density_auto_edges, density_map, freq_grid,
    multi_tone_response, Chain, ChainConfig, DensityMap, ResponseSpectrum, DENSITY_ENUM_CAP,
};
pub use classifier::search::{
    exhaustive_search, local_search, Histogram, SearchResult, SEARCH_ENUM_CAP,
};
pub use classifier::{accuracy, chain_deltas, predict, predict_from_deltas, EncodingParams, Network};
pub use dataset::{
    make_synthetic_digits_like, make_synthetic_drones_like, LabeledExample, LabeledSpectrumDataset,
};
pub use device::{
    apply_pulse, diameter_to_frequency, rectification, resonance_frequency, switching_band,
    DeviceParams, FreqBand, Polarity, PulseSpec, DEFAULT_MIN_PULSE_S,
};
pub use encoding::{
    dbm_to_mw, encode_features, mw_to_dbm, tone_frequencies, S21Table, Tone, WaveformMeta,
    WaveformSpec,
};
pub use error::{Error, Result};
pub use preset::{chain_a, chain_b, default_network};
pub use programming::calibration::{calibration_sweep, extract_table, RawMap, SweepParams};
pub use programming::planner::{plan_sequence, track_sequence, validate_sequence, Tracked};
pub use programming::readout::{readout_config, ConfigReader};
pub use programming::{
    execute, BandEntry, BandMap, DeviceBands, Direction, PlannedPulse, ProgrammingTable,
    PulseSequence, TableEntry,
};
pub use scaling::{scaling_table, write_scaling_csv, EnergyAnchor, MaterialParams, ScalingRow};
