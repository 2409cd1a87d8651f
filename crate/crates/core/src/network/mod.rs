//! Skip-connection ReLU networks.
//!
//! Layer `l` reads the concatenation `[x_0; x_1; …; x_{l-1}]` of the input and
//! all earlier layer outputs. Hidden layers apply `ρ(t) = max(0, t)`, the last
//! layer is affine.

mod architecture;
mod calculus;
mod random;

pub use architecture::{architecture_of, has_architecture, instantiate, weights_of, Architecture};
pub use calculus::{concatenate, identity_network, parallelize, sparse_concatenate, to_standard};
pub use random::{random_network, RandomNetworkSpec};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};

/// One `(A_l, b_l)` pair. The matrix is kept in compressed-row form with
/// strictly increasing column indices per row and no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    /// Builds a layer from `(row, col, value)` triplets in any order.
    /// Zero values are dropped; duplicate positions are an error.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I, bias: Vec<f64>) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        check_dim(rows, bias.len())?;
        let mut t: Vec<(usize, usize, f64)> =
            triplets.into_iter().filter(|e| e.2 != 0.0).collect();
        for &(i, j, _) in &t {
            if i >= rows || j >= cols {
                return Err(Error::Malformed(format!(
                    "entry ({i}, {j}) outside {rows}x{cols} matrix"
                )));
            }
        }
        t.sort_unstable_by_key(|e| (e.0, e.1));
        for w in t.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::Malformed(format!(
                    "duplicate entry ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_ptr = vec![0usize; rows + 1];
        for &(i, _, _) in &t {
            row_ptr[i + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = t.iter().map(|e| e.1).collect();
        let vals = t.iter().map(|e| e.2).collect();
        Ok(Layer {
            rows,
            cols,
            row_ptr,
            col_idx,
            vals,
            bias,
        })
    }

    /// Builds a layer from a row-major dense matrix.
    pub fn from_dense(rows: usize, cols: usize, dense: &[f64], bias: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, dense.len())?;
        let t = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j, dense[i * cols + j])));
        Self::from_triplets(rows, cols, t, bias)
    }

    /// Assembles a layer row by row; each row is a list of `(col, value)` in
    /// strictly increasing column order with zeros already removed.
    pub(crate) fn from_sorted_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>, bias: Vec<f64>) -> Self {
        debug_assert_eq!(rows.len(), bias.len());
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for r in &rows {
            for &(j, v) in r {
                debug_assert!(j < cols && v != 0.0);
                debug_assert!(col_idx.len() == *row_ptr.last().unwrap() || *col_idx.last().unwrap() < j);
                col_idx.push(j);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Layer {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            vals,
            bias,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Stored entries of row `i` as parallel slices `(columns, values)`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.vals[a..b])
    }

    /// Row-major `(row, col, value)` iterator over stored nonzeros.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn matrix_nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn bias_nnz(&self) -> usize {
        self.bias.iter().filter(|&&b| b != 0.0).count()
    }

    pub fn nnz(&self) -> usize {
        self.matrix_nnz() + self.bias_nnz()
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.vals
    }

    pub(crate) fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Layer {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v = f(*v);
        }
        for b in &mut out.bias {
            if *b != 0.0 {
                *b = f(*b);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    /// Validates block shapes: layer `l` must have `d + N_1 + … + N_{l-1}`
    /// columns, and every layer must have at least one row.
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(crate::error::invalid("input_dim", "must be positive"));
        }
        if layers.is_empty() {
            return Err(Error::Empty("network layers"));
        }
        let mut expected_cols = input_dim;
        for (l, layer) in layers.iter().enumerate() {
            if layer.rows == 0 {
                return Err(Error::Malformed(format!("layer {} has no neurons", l + 1)));
            }
            if layer.cols != expected_cols {
                return Err(Error::Malformed(format!(
                    "layer {} has {} columns, expected {}",
                    l + 1,
                    layer.cols,
                    expected_cols
                )));
            }
            expected_cols += layer.rows;
        }
        Ok(Network { input_dim, layers })
    }

    pub(crate) fn from_parts_unchecked(input_dim: usize, layers: Vec<Layer>) -> Self {
        debug_assert!(Network::new(input_dim, layers.clone()).is_ok());
        Network { input_dim, layers }
    }

    /// The one-layer affine network `x ↦ A x + b`.
    pub fn affine(input_dim: usize, output_dim: usize, dense: &[f64], bias: Vec<f64>) -> Result<Self> {
        let layer = Layer::from_dense(output_dim, input_dim, dense, bias)?;
        Network::new(input_dim, vec![layer])
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.rows)
    }

    /// `L(Φ)`.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    /// Widths `N_1, …, N_L`.
    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.rows).collect()
    }

    /// `M(Φ)`: stored nonzeros of all matrices and biases.
    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(Layer::nnz).sum()
    }

    /// `N(Φ) = d + Σ N_l`.
    pub fn neuron_count(&self) -> usize {
        self.input_dim + self.layers.iter().map(|l| l.rows).sum::<usize>()
    }

    /// Column offset of block `x_k` inside any layer reading it.
    pub fn block_offset(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            self.input_dim + self.layers[..k - 1].iter().map(|l| l.rows).sum::<usize>()
        }
    }

    /// True when every layer only reads the immediately preceding block.
    pub fn is_standard(&self) -> bool {
        self.layers.iter().enumerate().all(|(l, layer)| {
            let lo = self.block_offset(l);
            layer.col_idx.iter().all(|&j| j >= lo)
        })
    }

    /// `R_ρ(Φ)(x)`.
    pub fn realize(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim, x.len())?;
        let mut buf = Vec::with_capacity(self.neuron_count());
        buf.extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            for i in 0..layer.rows {
                let (c, v) = layer.row(i);
                let mut acc = 0.0;
                for (&j, &w) in c.iter().zip(v) {
                    acc += w * buf[j];
                }
                acc += layer.bias[i];
                buf.push(if l < last { relu(acc) } else { acc });
            }
        }
        Ok(buf.split_off(buf.len() - self.output_dim()))
    }

    /// Scalar output convenience for single-output networks.
    pub fn realize_scalar(&self, x: &[f64]) -> Result<f64> {
        check_dim(1, self.output_dim())?;
        Ok(self.realize(x)?[0])
    }
}

#[inline]
pub(crate) fn relu(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_last_layer_has_no_activation() {
        let net = Network::affine(1, 1, &[2.0], vec![1.0]).unwrap();
        assert_eq!(net.realize(&[3.0]).unwrap(), vec![7.0]);
        assert_eq!(net.realize(&[-3.0]).unwrap(), vec![-5.0]);
    }

    #[test]
    fn relu_hidden_layer() {
        let l1 = Layer::from_dense(1, 1, &[1.0], vec![0.0]).unwrap();
        let l2 = Layer::from_dense(1, 2, &[0.0, 1.0], vec![0.0]).unwrap();
        let net = Network::new(1, vec![l1, l2]).unwrap();
        assert_eq!(net.realize(&[-1.0]).unwrap(), vec![0.0]);
        assert_eq!(net.realize(&[2.0]).unwrap(), vec![2.0]);
        assert_eq!(net.weight_count(), 2);
        assert_eq!(net.neuron_count(), 3);
    }

    #[test]
    fn zeros_are_not_stored() {
        let l = Layer::from_dense(2, 2, &[0.0, 1.0, 0.0, 0.0], vec![0.0, 3.0]).unwrap();
        assert_eq!(l.matrix_nnz(), 1);
        assert_eq!(l.bias_nnz(), 1);
    }

    #[test]
    fn shape_errors() {
        let l = Layer::from_dense(1, 2, &[1.0, 1.0], vec![0.0]).unwrap();
        assert!(matches!(Network::new(1, vec![l]), Err(Error::Malformed(_))));
        assert!(matches!(Network::new(1, vec![]), Err(Error::Empty(_))));
        let net = Network::affine(2, 1, &[1.0, 1.0], vec![0.0]).unwrap();
        assert_eq!(
            net.realize(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
        assert!(Layer::from_triplets(1, 1, [(0, 0, 1.0), (0, 0, 2.0)], vec![0.0]).is_err());
        assert!(Layer::from_triplets(1, 1, [(0, 1, 1.0)], vec![0.0]).is_err());
    }
}
