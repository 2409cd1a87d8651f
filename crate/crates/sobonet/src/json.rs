//! JSON formats: networks and architectures, patch sets and calibration
//! tables.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! network survives a write/read cycle bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sobonet_core::approximator::Calibration;
use sobonet_core::network::{architecture_of, Architecture};
use sobonet_core::taylor::PolynomialPatch;
use sobonet_core::{Layer, MultiIndex, Network};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerJson {
    pub rows: usize,
    pub cols: usize,
    /// `[i, j, v]` for every stored entry, row-major.
    pub triplets: Vec<(usize, usize, f64)>,
    /// `[i, b_i]` for every bias whose bits are not `+0.0`.
    pub bias: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkJson {
    pub input_dim: usize,
    pub layers: Vec<LayerJson>,
}

impl NetworkJson {
    pub fn from_network(net: &Network) -> Result<Self> {
        let layers = net
            .layers()
            .iter()
            .map(|l| {
                let triplets: Vec<_> = l.triplets().collect();
                let bias: Vec<_> = l.bias().iter().copied().enumerate().filter(|b| b.1.to_bits() != 0).collect();
                if triplets.iter().any(|t| !t.2.is_finite()) || bias.iter().any(|b| !b.1.is_finite()) {
                    return Err(CliError::usage("cannot serialize a network with non-finite weights"));
                }
                Ok(LayerJson {
                    rows: l.rows(),
                    cols: l.cols(),
                    triplets,
                    bias,
                })
            })
            .collect::<Result<_>>()?;
        Ok(NetworkJson {
            input_dim: net.input_dim(),
            layers,
        })
    }

    pub fn to_network(&self) -> Result<Network> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let mut bias = vec![0.0; l.rows];
            for &(i, v) in &l.bias {
                if i >= l.rows {
                    return Err(sobonet_core::Error::Malformed(format!("bias index {i} out of {} rows", l.rows)).into());
                }
                bias[i] = v;
            }
            layers.push(Layer::from_triplets(l.rows, l.cols, l.triplets.iter().copied(), bias)?);
        }
        Ok(Network::new(self.input_dim, layers)?)
    }
}

pub fn network_to_string(net: &Network) -> Result<String> {
    Ok(serde_json::to_string(&NetworkJson::from_network(net)?)?)
}

pub fn network_from_str(s: &str) -> Result<Network> {
    serde_json::from_str::<NetworkJson>(s)?.to_network()
}

pub fn write_network(path: &Path, net: &Network) -> Result<()> {
    fs::write(path, network_to_string(net)?).map_err(io_err(path))
}

pub fn read_network(path: &Path) -> Result<Network> {
    network_from_str(&fs::read_to_string(path).map_err(io_err(path))?)
}

/// Architectures use the network format with every entry equal to 1.
pub fn architecture_to_string(arch: &Architecture) -> Result<String> {
    network_to_string(arch.mask())
}

pub fn architecture_from_str(s: &str) -> Result<Architecture> {
    Ok(Architecture::from_mask(network_from_str(s)?)?)
}

pub fn write_architecture_of(path: &Path, net: &Network) -> Result<()> {
    fs::write(path, architecture_to_string(&architecture_of(net))?).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffJson {
    pub alpha: Vec<usize>,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchJson {
    pub m: Vec<usize>,
    pub coeffs: Vec<CoeffJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchesJson {
    #[serde(rename = "N")]
    pub n_grid: usize,
    pub n: usize,
    pub patches: Vec<PatchJson>,
}

impl PatchesJson {
    pub fn new(n_grid: usize, n: usize, patches: &[PolynomialPatch]) -> Self {
        PatchesJson {
            n_grid,
            n,
            patches: patches
                .iter()
                .map(|p| PatchJson {
                    m: p.m.clone(),
                    coeffs: p
                        .coeffs
                        .iter()
                        .map(|(a, c)| CoeffJson {
                            alpha: a.0.clone(),
                            c: *c,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_patches(&self) -> Vec<PolynomialPatch> {
        self.patches
            .iter()
            .map(|p| PolynomialPatch {
                m: p.m.clone(),
                coeffs: p.coeffs.iter().map(|c| (MultiIndex(c.alpha.clone()), c.c)).collect(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub d: usize,
    pub n: usize,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationJson {
    pub version: u32,
    pub entries: Vec<CalibrationEntry>,
}

impl From<&Calibration> for CalibrationJson {
    fn from(c: &Calibration) -> Self {
        CalibrationJson {
            version: c.version,
            entries: c.entries.iter().map(|&((d, n), c)| CalibrationEntry { d, n, c }).collect(),
        }
    }
}

impl CalibrationJson {
    pub fn to_calibration(&self) -> Result<Calibration> {
        if self.entries.iter().any(|e| !(e.c > 0.0 && e.c.is_finite())) {
            return Err(CliError::usage("calibration constants must be positive and finite"));
        }
        Ok(Calibration {
            version: self.version,
            entries: self.entries.iter().map(|e| ((e.d, e.n), e.c)).collect(),
        })
    }
}

pub const CALIBRATION_ENV: &str = "SOBONET_CALIBRATION";

pub fn read_calibration(path: &Path) -> Result<Calibration> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str::<CalibrationJson>(&text)?.to_calibration()
}

/// The file named by `SOBONET_CALIBRATION`, else the built-in table.
pub fn calibration_from_env() -> Result<Calibration> {
    match std::env::var_os(CALIBRATION_ENV) {
        Some(p) => read_calibration(Path::new(&p)),
        None => Ok(Calibration::default()),
    }
}
