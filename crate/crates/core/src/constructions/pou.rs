use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::multiindex::MultiIndex;
use crate::network::{parallelize, sparse_concatenate, Layer, Network};

/// Trapezoid `ψ`: `1` on `|t| ≤ 1`, `0` on `|t| ≥ 2`, linear in between,
/// as `ρ(t+2) − ρ(t+1) − ρ(t−1) + ρ(t−2)`.
pub fn hat_network() -> Network {
    let l1 = Layer::from_sorted_rows(
        1,
        vec![vec![(0, 1.0)], vec![(0, 1.0)], vec![(0, 1.0)], vec![(0, 1.0)]],
        vec![2.0, 1.0, -1.0, -2.0],
    );
    let l2 = Layer::from_sorted_rows(5, vec![vec![(1, 1.0), (2, -1.0), (3, -1.0), (4, 1.0)]], vec![0.0]);
    Network::new(1, vec![l1, l2]).expect("valid by construction")
}

/// `Φ_m`: output `l` realizes `ψ(3N(x_l − m_l/N))`, so the product of the
/// outputs is the partition-of-unity function `φ_m`.
pub fn pou_factor_network(m: &[usize], n_grid: usize) -> Result<Network> {
    if m.is_empty() {
        return Err(invalid("m", "grid index must have at least one coordinate"));
    }
    if n_grid == 0 || m.iter().any(|&mi| mi > n_grid) {
        return Err(invalid("m", "grid index must lie in {0,…,N}^d with N ≥ 1"));
    }
    let d = m.len();
    let hat = hat_network();
    let scale = 3.0 * n_grid as f64;
    let factors = (0..d)
        .map(|l| {
            let mut row = vec![0.0; d];
            row[l] = scale;
            let shift = Network::affine(d, 1, &row, vec![-3.0 * m[l] as f64])?;
            sparse_concatenate(&hat, &shift)
        })
        .collect::<Result<Vec<_>>>()?;
    parallelize(&factors)
}

/// `Φ_α`: one affine layer listing `x_i` repeated `α_i` times.
pub fn monomial_factor_network(alpha: &MultiIndex) -> Result<Network> {
    let k = alpha.order();
    if k == 0 {
        return Err(invalid("alpha", "|α| must be at least 1"));
    }
    let d = alpha.dim();
    let rows: Vec<Vec<(usize, f64)>> = alpha
        .0
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| core::iter::repeat_n(vec![(i, 1.0)], a))
        .collect();
    Network::new(d, vec![Layer::from_sorted_rows(d, rows, vec![0.0; k])])
}
