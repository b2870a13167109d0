pub mod calibrate;
pub mod data;
pub mod preset;
pub mod program;
pub mod scaling_cmd;
pub mod spectra;
