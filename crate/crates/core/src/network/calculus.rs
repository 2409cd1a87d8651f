use alloc::vec;
use alloc::vec::Vec;

use super::{Layer, Network};
use crate::error::{check_dim, invalid, Error, Result};

/// `Φ^{Id}_d`: `A_1 = [I; −I]`, `A_2 = [0 | I | −I]`, zero biases.
pub fn identity_network(d: usize) -> Result<Network> {
    if d == 0 {
        return Err(invalid("d", "must be positive"));
    }
    let first: Vec<Vec<(usize, f64)>> = (0..2 * d)
        .map(|r| if r < d { vec![(r, 1.0)] } else { vec![(r - d, -1.0)] })
        .collect();
    let second: Vec<Vec<(usize, f64)>> = (0..d).map(|i| vec![(d + i, 1.0), (2 * d + i, -1.0)]).collect();
    Ok(Network::from_parts_unchecked(
        d,
        vec![
            Layer::from_sorted_rows(d, first, vec![0.0; 2 * d]),
            Layer::from_sorted_rows(3 * d, second, vec![0.0; d]),
        ],
    ))
}

/// `Φ^f • Φ^g`: realizes `x ↦ R(f)(R(g)(x))` with `L_f + L_g − 1` layers.
///
/// The input block of every layer of `f` is multiplied into the affine
/// output layer of `g`; the remaining blocks are shifted behind the hidden
/// layers of `g`.
pub fn concatenate(f: &Network, g: &Network) -> Result<Network> {
    check_dim(f.input_dim(), g.output_dim())?;
    let lg = g.num_layers();
    let gl = &g.layers()[lg - 1];
    let base = gl.cols();
    let df = f.input_dim();
    let mut layers: Vec<Layer> = g.layers()[..lg - 1].to_vec();
    let mut acc = vec![0.0; base];
    let mut seen = vec![false; base];
    let mut touched: Vec<usize> = Vec::new();
    for layer in f.layers() {
        let cols = base + layer.cols() - df;
        let mut rows = Vec::with_capacity(layer.rows());
        let mut bias = Vec::with_capacity(layer.rows());
        for i in 0..layer.rows() {
            let (c, v) = layer.row(i);
            let split = c.partition_point(|&j| j < df);
            let mut b = 0.0;
            for (&j, &w) in c[..split].iter().zip(&v[..split]) {
                let (gc, gv) = gl.row(j);
                for (&k, &a) in gc.iter().zip(gv) {
                    if !seen[k] {
                        seen[k] = true;
                        touched.push(k);
                    }
                    acc[k] += w * a;
                }
                b += w * gl.bias()[j];
            }
            touched.sort_unstable();
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(touched.len() + c.len() - split);
            for &k in &touched {
                if acc[k] != 0.0 {
                    row.push((k, acc[k]));
                }
                acc[k] = 0.0;
                seen[k] = false;
            }
            touched.clear();
            for (&j, &w) in c[split..].iter().zip(&v[split..]) {
                row.push((base + j - df, w));
            }
            rows.push(row);
            bias.push(b + layer.bias()[i]);
        }
        layers.push(Layer::from_sorted_rows(cols, rows, bias));
    }
    Ok(Network::from_parts_unchecked(g.input_dim(), layers))
}

/// `Φ^f ⊙ Φ^g = Φ^f • Φ^{Id} • Φ^g`, with exactly `L_f + L_g` layers.
pub fn sparse_concatenate(f: &Network, g: &Network) -> Result<Network> {
    check_dim(f.input_dim(), g.output_dim())?;
    let id = identity_network(g.output_dim())?;
    concatenate(f, &concatenate(&id, g)?)
}

/// `P(Φ^1, …, Φ^n)`: stacks networks sharing one input.
///
/// Hidden layer `k` of each net sits in result layer `k`; every output layer
/// is placed in the final layer `max L_i` and reaches its own hidden layers
/// through skip connections.
pub fn parallelize(nets: &[Network]) -> Result<Network> {
    let first = nets.first().ok_or(Error::Empty("parallelize needs at least one network"))?;
    let d = first.input_dim();
    for n in nets {
        check_dim(d, n.input_dim())?;
    }
    let depth = nets.iter().map(Network::num_layers).max().unwrap_or(1);
    // block_width[k] for k = 1..depth, and each net's offset inside each block
    let mut block_width = vec![0usize; depth + 1];
    let mut inner = vec![vec![0usize; depth + 1]; nets.len()];
    for (i, n) in nets.iter().enumerate() {
        let ln = n.num_layers();
        for k in 1..ln {
            inner[i][k] = block_width[k];
            block_width[k] += n.layers()[k - 1].rows();
        }
        inner[i][depth] = block_width[depth];
        block_width[depth] += n.output_dim();
    }
    let mut block_start = vec![0usize; depth + 1];
    block_start[1] = d;
    for k in 2..=depth {
        block_start[k] = block_start[k - 1] + block_width[k - 1];
    }
    let mut layers = Vec::with_capacity(depth);
    for k in 1..=depth {
        let mut rows = Vec::with_capacity(block_width[k]);
        let mut bias = Vec::with_capacity(block_width[k]);
        for (i, n) in nets.iter().enumerate() {
            let ln = n.num_layers();
            let src = if k < ln {
                k
            } else if k == depth {
                ln
            } else {
                continue;
            };
            let layer = &n.layers()[src - 1];
            // local column -> result column
            let mut local_start = vec![0usize; src];
            for b in 1..src {
                local_start[b] = if b == 1 { d } else { local_start[b - 1] + n.layers()[b - 2].rows() };
            }
            for r in 0..layer.rows() {
                let (c, v) = layer.row(r);
                let mut row = Vec::with_capacity(c.len());
                let mut b = 0;
                for (&j, &w) in c.iter().zip(v) {
                    while b + 1 < src && j >= local_start[b + 1] {
                        b += 1;
                    }
                    let col = if b == 0 { j } else { block_start[b] + inner[i][b] + (j - local_start[b]) };
                    row.push((col, w));
                }
                rows.push(row);
                bias.push(layer.bias()[r]);
            }
        }
        layers.push(Layer::from_sorted_rows(block_start[k], rows, bias));
    }
    Ok(Network::from_parts_unchecked(d, layers))
}

/// Converts to a network without skip connections.
///
/// The first layer emits `ρ(x_0)`, `ρ(−x_0)` next to the original first
/// layer; every later hidden layer copies all previous activations and adds
/// the original rows rewritten against the copies (`x_0 = ρ(x_0) − ρ(−x_0)`).
pub fn to_standard(net: &Network) -> Result<Network> {
    let depth = net.num_layers();
    if depth == 1 {
        return Ok(net.clone());
    }
    let d = net.input_dim();
    let mut layers: Vec<Layer> = Vec::with_capacity(depth);
    // start column of the previous standardized layer and its width
    let mut prev_start = 0usize;
    let mut prev_width = d;
    for (l, layer) in net.layers().iter().enumerate() {
        let cols = prev_start + prev_width;
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut bias = Vec::new();
        if l == 0 {
            for i in 0..d {
                rows.push(vec![(i, 1.0)]);
                bias.push(0.0);
            }
            for i in 0..d {
                rows.push(vec![(i, -1.0)]);
                bias.push(0.0);
            }
            for r in 0..layer.rows() {
                let (c, v) = layer.row(r);
                rows.push(c.iter().copied().zip(v.iter().copied()).collect());
                bias.push(layer.bias()[r]);
            }
        } else {
            if l + 1 < depth {
                for r in 0..prev_width {
                    rows.push(vec![(prev_start + r, 1.0)]);
                    bias.push(0.0);
                }
            }
            for r in 0..layer.rows() {
                let (c, v) = layer.row(r);
                let split = c.partition_point(|&j| j < d);
                let mut row = Vec::with_capacity(c.len() + split);
                for (&j, &w) in c[..split].iter().zip(&v[..split]) {
                    row.push((prev_start + j, w));
                }
                for (&j, &w) in c[..split].iter().zip(&v[..split]) {
                    row.push((prev_start + d + j, -w));
                }
                for (&j, &w) in c[split..].iter().zip(&v[split..]) {
                    row.push((prev_start + 2 * d + (j - d), w));
                }
                rows.push(row);
                bias.push(layer.bias()[r]);
            }
        }
        let width = rows.len();
        layers.push(Layer::from_sorted_rows(cols, rows, bias));
        prev_start = cols;
        prev_width = width;
    }
    Ok(Network::from_parts_unchecked(d, layers))
}
