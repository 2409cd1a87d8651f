use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Layer, Network};

/// Shape of a random sparse network: input dimension, widths `N_1..N_L`, and
/// the probability that any given matrix or bias entry is nonzero.
#[derive(Debug, Clone)]
pub struct RandomNetworkSpec {
    pub input_dim: usize,
    pub widths: Vec<usize>,
    pub density: f64,
}

impl RandomNetworkSpec {
    pub fn new(input_dim: usize, widths: Vec<usize>, density: f64) -> Self {
        RandomNetworkSpec {
            input_dim,
            widths,
            density,
        }
    }
}

/// Random network with entries uniform in `[-1, 1]`.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, spec: &RandomNetworkSpec) -> Network {
    assert!(spec.input_dim > 0 && !spec.widths.is_empty() && spec.widths.iter().all(|&w| w > 0));
    let mut cols = spec.input_dim;
    let mut layers = Vec::with_capacity(spec.widths.len());
    for &rows in &spec.widths {
        let mut t = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if rng.random_bool(spec.density) {
                    t.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        let mut bias = vec![0.0; rows];
        for b in &mut bias {
            if rng.random_bool(spec.density) {
                *b = rng.random_range(-1.0..1.0);
            }
        }
        layers.push(Layer::from_triplets(rows, cols, t, bias).expect("valid by construction"));
        cols += rows;
    }
    Network::new(spec.input_dim, layers).expect("valid by construction")
}
