//! Configuration inference from delta spectra: least-squares matching of a
//! measured spectrum against the per-device response signatures.

use nalgebra::{DMatrix, DVector};

use crate::chain::{Chain, ChainConfig};
use crate::device::{rectification, Polarity};
use crate::encoding::dbm_to_mw;
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest mark a rank
/// deficiency in the signature matrix.
const RANK_REL_TOL: f64 = 1e-9;
/// A solved coefficient must land within this distance of 0 or 1.
const ROUND_TOL: f64 = 0.25;
/// Residual bound, relative to the measurement scale.
const RESIDUAL_REL_TOL: f64 = 1e-6;

/// Precomputed readout operator for one chain and read grid.
///
/// The measured change of an unknown configuration against the all-Down
/// state is an additive combination of per-device up-minus-down
/// signatures; solving the least-squares system and rounding to {0, 1}
/// recovers the bits, with residual and rounding-margin checks rejecting
/// ambiguous matches.
#[derive(Debug, Clone)]
pub struct ConfigReader {
    grid: Vec<f64>,
    read_power_dbm: f64,
    sig: DMatrix<f64>,
    svd: nalgebra::linalg::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl ConfigReader {
    pub fn new(chain: &Chain, grid: &[f64], read_power_dbm: f64) -> Result<Self> {
        chain.validate()?;
        let n = chain.len();
        if grid.len() < n {
            return Err(Error::Readout(format!(
                "read grid has {} points for {} devices; the system is underdetermined",
                grid.len(),
                n
            )));
        }
        let read_mw = dbm_to_mw(read_power_dbm);
        let sig = DMatrix::from_fn(grid.len(), n, |r, j| {
            let dev = &chain.devices[j];
            (rectification(dev, Polarity::Up, grid[r])
                - rectification(dev, Polarity::Down, grid[r]))
                * read_mw
        });
        let svd = sig.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smax > 0.0) || smin < RANK_REL_TOL * smax {
            return Err(Error::Readout(
                "device signatures are linearly dependent on this read grid".into(),
            ));
        }
        Ok(ConfigReader {
            grid: grid.to_vec(),
            read_power_dbm,
            sig,
            svd,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Simulated measurement of `state`: its read-power spectrum minus the
    /// all-Down spectrum, in µV.
    pub fn measure(&self, chain: &Chain, state: &ChainConfig) -> Result<Vec<f64>> {
        let read_mw = dbm_to_mw(self.read_power_dbm);
        let reference = ChainConfig::all_down(chain.len());
        self.grid
            .iter()
            .map(|&f| {
                let a = crate::chain::chain_sensitivity(chain, state, f)?;
                let b = crate::chain::chain_sensitivity(chain, &reference, f)?;
                Ok((a - b) * read_mw)
            })
            .collect()
    }

    /// Infers the configuration behind a measured delta spectrum.
    pub fn read_measurement(&self, measured: &[f64]) -> Result<ChainConfig> {
        if measured.len() != self.grid.len() {
            return Err(Error::Readout(format!(
                "measurement has {} samples, read grid has {}",
                measured.len(),
                self.grid.len()
            )));
        }
        let b = DVector::from_column_slice(measured);
        let x = self
            .svd
            .solve(&b, 0.0)
            .map_err(|e| Error::Readout(format!("least-squares solve failed: {e}")))?;
        let n = x.len();
        let mut bits = Vec::with_capacity(n);
        for j in 0..n {
            let v = x[j];
            let rounded = if v >= 0.5 { 1.0 } else { 0.0 };
            if (v - rounded).abs() > ROUND_TOL {
                return Err(Error::Readout(format!(
                    "device {} coefficient {v:.4} is not close to 0 or 1",
                    j + 1
                )));
            }
            bits.push(if rounded == 1.0 {
                Polarity::Up
            } else {
                Polarity::Down
            });
        }
        let xr = DVector::from_fn(n, |j, _| match bits[j] {
            Polarity::Up => 1.0,
            Polarity::Down => 0.0,
        });
        let residual = (&self.sig * xr - b).abs().max();
        let scale = measured.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if residual > RESIDUAL_REL_TOL * scale {
            return Err(Error::Readout(format!(
                "rounded configuration misfits the spectrum (residual {residual:.3e})"
            )));
        }
        Ok(ChainConfig { bits })
    }

    /// Measures and infers in one step.
    pub fn read_state(&self, chain: &Chain, state: &ChainConfig) -> Result<ChainConfig> {
        let m = self.measure(chain, state)?;
        self.read_measurement(&m)
    }
}

/// One-shot configuration readout over a fresh reader.
pub fn readout_config(
    chain: &Chain,
    state: &ChainConfig,
    grid: &[f64],
    read_power_dbm: f64,
) -> Result<ChainConfig> {
    ConfigReader::new(chain, grid, read_power_dbm)?.read_state(chain, state)
}
