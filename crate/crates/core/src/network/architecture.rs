use alloc::vec::Vec;

use super::{Layer, Network};
use crate::error::{check_dim, Error, Result};

/// Sparsity mask and widths of a network. Stored entries are all `1`.
///
/// Positions are ordered layer by layer; inside a layer, matrix entries come
/// row-major first, then the nonzero bias positions in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    mask: Network,
}

impl Architecture {
    /// Wraps a network whose stored entries are all `1`.
    pub fn from_mask(mask: Network) -> Result<Self> {
        let ok = mask.layers().iter().all(|l| {
            l.values().iter().all(|&v| v == 1.0) && l.bias().iter().all(|&b| b == 0.0 || b == 1.0)
        });
        if ok {
            Ok(Architecture { mask })
        } else {
            Err(Error::Malformed("architecture entries must be 0 or 1".into()))
        }
    }

    pub fn mask(&self) -> &Network {
        &self.mask
    }

    pub fn input_dim(&self) -> usize {
        self.mask.input_dim()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.mask.widths()
    }

    pub fn weight_count(&self) -> usize {
        self.mask.weight_count()
    }

    pub fn neuron_count(&self) -> usize {
        self.mask.neuron_count()
    }

    pub fn num_layers(&self) -> usize {
        self.mask.num_layers()
    }
}

pub fn architecture_of(net: &Network) -> Architecture {
    let layers = net.layers().iter().map(|l| l.map_values(|_| 1.0)).collect();
    Architecture {
        mask: Network::from_parts_unchecked(net.input_dim(), layers),
    }
}

/// The weight vector of `net` in the architecture ordering.
pub fn weights_of(net: &Network) -> Vec<f64> {
    let mut w = Vec::with_capacity(net.weight_count());
    for l in net.layers() {
        w.extend_from_slice(l.values());
        w.extend(l.bias().iter().copied().filter(|&b| b != 0.0));
    }
    w
}

/// `𝒜(w)`: the network with architecture `arch` and weight vector `w`.
/// Zero weights are not stored.
pub fn instantiate(arch: &Architecture, w: &[f64]) -> Result<Network> {
    check_dim(arch.weight_count(), w.len())?;
    let mut pos = 0;
    let mut layers = Vec::with_capacity(arch.num_layers());
    for l in arch.mask.layers() {
        let mut rows = Vec::with_capacity(l.rows());
        for i in 0..l.rows() {
            let (c, _) = l.row(i);
            let mut row = Vec::with_capacity(c.len());
            for &j in c {
                if w[pos] != 0.0 {
                    row.push((j, w[pos]));
                }
                pos += 1;
            }
            rows.push(row);
        }
        let mut bias = l.bias().to_vec();
        for b in &mut bias {
            if *b != 0.0 {
                *b = w[pos];
                pos += 1;
            }
        }
        layers.push(Layer::from_sorted_rows(l.cols(), rows, bias));
    }
    Ok(Network::from_parts_unchecked(arch.input_dim(), layers))
}

/// True iff widths agree and every nonzero of `net` sits on the mask.
pub fn has_architecture(net: &Network, arch: &Architecture) -> bool {
    if net.input_dim() != arch.input_dim() || net.widths() != arch.widths() {
        return false;
    }
    net.layers().iter().zip(arch.mask.layers()).all(|(l, m)| {
        (0..l.rows()).all(|i| {
            let (c, _) = l.row(i);
            let (mc, _) = m.row(i);
            let mut k = 0;
            c.iter().all(|&j| {
                while k < mc.len() && mc[k] < j {
                    k += 1;
                }
                k < mc.len() && mc[k] == j
            }) && (l.bias()[i] == 0.0 || m.bias()[i] != 0.0)
        })
    })
}
