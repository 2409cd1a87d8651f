use alloc::vec;
use alloc::vec::Vec;

use super::sorted_row;
use crate::error::{invalid, Result};
use crate::network::{concatenate, parallelize, Layer, Network};

/// Sawtooth network realizing the piecewise linear interpolant of `x²` on
/// `[0, 1]` with `2^m + 1` uniform breakpoints.
///
/// With the tent `g(x) = 2ρ(x) − 4ρ(x − 1/2)` and `g_s = g ∘ … ∘ g` the
/// interpolant is `x − Σ_{s≤m} g_s(x)/4^s`. Layer `s` holds `ρ(g_{s-1})`,
/// `ρ(g_{s-1} − 1/2)` and a carry neuron with the running sum; one final
/// hidden neuron holds the sum itself and the output layer copies it.
/// All weights are dyadic. `L = m + 2`.
pub fn squaring_network(m: u32) -> Result<Network> {
    if m < 1 {
        return Err(invalid("m", "must be at least 1"));
    }
    let m = m as usize;
    let mut layers = Vec::with_capacity(m + 2);
    layers.push(Layer::from_sorted_rows(1, vec![vec![(0, 1.0)], vec![(0, 1.0)]], vec![0.0, -0.5]));
    // columns of a_{s-1}, b_{s-1} and the carry (if any) in the previous layer
    let (mut a, mut b, mut carry) = (1usize, 2usize, None::<usize>);
    let mut cols = 3;
    for s in 2..=m + 1 {
        let scale = libm::ldexp(1.0, -2 * (s as i32 - 1));
        let sum = match carry {
            None => vec![(a, 0.5), (b, 1.0)],
            Some(c) => sorted_row(vec![(c, 1.0), (a, -2.0 * scale), (b, 4.0 * scale)]),
        };
        let (rows, bias) = if s <= m {
            (
                vec![vec![(a, 2.0), (b, -4.0)], vec![(a, 2.0), (b, -4.0)], sum],
                vec![0.0, -0.5, 0.0],
            )
        } else {
            (vec![sum], vec![0.0])
        };
        let width = rows.len();
        layers.push(Layer::from_sorted_rows(cols, rows, bias));
        a = cols;
        b = cols + 1;
        carry = Some(cols + width - 1);
        cols += width;
    }
    layers.push(Layer::from_sorted_rows(cols, vec![vec![(cols - 1, 1.0)]], vec![0.0]));
    Network::new(1, layers)
}

/// `|x| = ρ(x) + ρ(−x)`.
pub fn abs_network() -> Network {
    let l1 = Layer::from_sorted_rows(1, vec![vec![(0, 1.0)], vec![(0, -1.0)]], vec![0.0, 0.0]);
    let l2 = Layer::from_sorted_rows(3, vec![vec![(1, 1.0), (2, 1.0)]], vec![0.0]);
    Network::new(1, vec![l1, l2]).expect("valid by construction")
}

/// Slack constant in the inner squaring accuracy `δ = eps / (6 M² C)`.
const INNER_C: f64 = 2.0;

/// Squaring depth `m = ⌈log₂(1/δ)⌉` used by [`multiplication_network`].
pub fn multiplication_depth(m_box: f64, eps: f64) -> u32 {
    let delta = eps / (6.0 * m_box * m_box * INNER_C);
    (libm::ceil(libm::log2(1.0 / delta)) as u32).max(1)
}

/// `×_eps`: approximates `xy` on `(−M, M)²` in `W^{1,∞}` via
/// `2M² (sq(|x+y|/2M) − sq(|x|/2M) − sq(|y|/2M))`.
///
/// When `x = 0` or `y = 0` two squaring branches see bit-identical inputs
/// and the third sees zero, so the output is exactly `0`.
pub fn multiplication_network(m_box: f64, eps: f64) -> Result<Network> {
    if !(m_box >= 1.0) || !m_box.is_finite() {
        return Err(invalid("M_box", "must be a finite value ≥ 1"));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid("eps", "must lie in (0, 1/2)"));
    }
    let sq = squaring_network(multiplication_depth(m_box, eps))?;
    let branches = (0..3)
        .map(|i| {
            let mut sel = [0.0; 3];
            sel[i] = 1.0;
            concatenate(&sq, &Network::affine(3, 1, &sel, vec![0.0])?)
        })
        .collect::<Result<Vec<_>>>()?;
    let squares = parallelize(&branches)?;
    // ρ(±(x+y)), ρ(±x), ρ(±y), then the three scaled absolute values
    let first = Layer::from_dense(
        6,
        2,
        &[1.0, 1.0, -1.0, -1.0, 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0],
        vec![0.0; 6],
    )?;
    let h = 1.0 / (2.0 * m_box);
    let second = Layer::from_sorted_rows(
        8,
        vec![vec![(2, h), (3, h)], vec![(4, h), (5, h)], vec![(6, h), (7, h)]],
        vec![0.0; 3],
    );
    let abs_in = Network::new(2, vec![first, second])?;
    let k = 2.0 * m_box * m_box;
    let out = Network::affine(3, 1, &[k, -k, -k], vec![0.0])?;
    concatenate(&out, &concatenate(&squares, &abs_in)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval_with_jacobian;

    fn interpolant(m: u32, x: f64) -> f64 {
        let h = libm::ldexp(1.0, -(m as i32));
        let k = libm::floor(x / h).min(1.0 / h - 1.0);
        (2.0 * k + 1.0) * h * (x - k * h) + (k * h) * (k * h)
    }

    #[test]
    fn small_values() {
        let sq = squaring_network(1).unwrap();
        assert_eq!(sq.realize(&[0.25]).unwrap(), vec![0.125]);
        assert_eq!(sq.realize(&[0.5]).unwrap(), vec![0.25]);
        for m in 1..=8 {
            let sq = squaring_network(m).unwrap();
            assert_eq!(sq.realize(&[0.0]).unwrap(), vec![0.0]);
            assert_eq!(sq.num_layers(), m as usize + 2);
        }
        assert!(squaring_network(0).is_err());
    }

    #[test]
    fn matches_interpolant_formula() {
        for m in 1..=10 {
            let sq = squaring_network(m).unwrap();
            for i in 0..=997 {
                let x = i as f64 / 997.0;
                let r = sq.realize(&[x]).unwrap()[0];
                assert!((r - interpolant(m, x)).abs() < 1e-14, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn size_linear_in_depth() {
        let m4 = squaring_network(4).unwrap().weight_count();
        let m5 = squaring_network(5).unwrap().weight_count();
        let m9 = squaring_network(9).unwrap().weight_count();
        assert_eq!(m9 - m5, 4 * (m5 - m4));
    }

    #[test]
    fn abs_values() {
        let a = abs_network();
        for (x, y) in [(-3.0, 3.0), (0.0, 0.0), (2.5, 2.5)] {
            assert_eq!(a.realize(&[x]).unwrap(), vec![y]);
        }
    }

    #[test]
    fn multiplication_zero_lines_and_accuracy() {
        for &mb in &[1.0, 5.0] {
            let net = multiplication_network(mb, 1e-3).unwrap();
            for i in 0..200 {
                let t = -mb + 2.0 * mb * (i as f64 + 0.37) / 200.0;
                assert_eq!(net.realize(&[0.0, t]).unwrap()[0], 0.0);
                assert_eq!(net.realize(&[t, 0.0]).unwrap()[0], 0.0);
            }
        }
        let net = multiplication_network(1.0, 1e-3).unwrap();
        assert!((net.realize(&[0.5, 0.5]).unwrap()[0] - 0.25).abs() <= 1e-3);
        let r = eval_with_jacobian(&net, &[0.31, -0.77]).unwrap();
        assert!((r.jacobian[0][0] + 0.77).abs() <= 1e-3);
        assert!((r.jacobian[0][1] - 0.31).abs() <= 1e-3);
    }

    #[test]
    fn multiplication_rejects_bad_parameters() {
        assert!(multiplication_network(0.5, 0.1).is_err());
        assert!(multiplication_network(1.0, 0.5).is_err());
        assert!(multiplication_network(1.0, 0.0).is_err());
    }
}
