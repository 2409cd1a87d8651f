use alloc::vec;
use alloc::vec::Vec;

use super::{monomial_factor_network, multiplication_network, pou_factor_network};
use crate::error::{invalid, Error, Result};
use crate::multiindex::{grid_indices, multi_indices, MultiIndex};
use crate::network::{architecture_of, parallelize, sparse_concatenate, Architecture, Layer, Network};

/// `Ψ_{ε,Φ}`: approximates the product of the outputs of `phi`.
///
/// The last output is peeled off, the remaining ones are multiplied
/// recursively, and both results are fed to one multiplication network. The
/// peeled row only reads the first `L(Φ) − 1` layers, which the recursive
/// result shares with `phi`, so it is appended to that result's output
/// layer unchanged. `n = 1` returns `phi` itself.
pub fn product_of_outputs_network(phi: &Network, eps: f64, m_max: usize) -> Result<Network> {
    let n = phi.output_dim();
    if n > m_max {
        return Err(invalid("phi", "more outputs than the configured m_max"));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid("eps", "must lie in (0, 1/2)"));
    }
    if n == 1 {
        return Ok(phi.clone());
    }
    let (head, last_row, last_bias) = split_last_output(phi);
    let rest = product_of_outputs_network(&head, eps, m_max)?;
    let mut layers = rest.into_layers();
    let out = layers.pop().expect("nonempty");
    let mut rows: Vec<Vec<(usize, f64)>> = (0..out.rows())
        .map(|i| {
            let (c, v) = out.row(i);
            c.iter().copied().zip(v.iter().copied()).collect()
        })
        .collect();
    let mut bias = out.bias().to_vec();
    rows.push(last_row);
    bias.push(last_bias);
    layers.push(Layer::from_sorted_rows(out.cols(), rows, bias));
    let pair = Network::new(phi.input_dim(), layers)?;
    sparse_concatenate(&multiplication_network(n as f64, eps)?, &pair)
}

fn split_last_output(phi: &Network) -> (Network, Vec<(usize, f64)>, f64) {
    let mut layers = phi.layers().to_vec();
    let out = layers.pop().expect("nonempty");
    let k = out.rows() - 1;
    let rows: Vec<Vec<(usize, f64)>> = (0..k)
        .map(|i| {
            let (c, v) = out.row(i);
            c.iter().copied().zip(v.iter().copied()).collect()
        })
        .collect();
    let (c, v) = out.row(k);
    let last: Vec<(usize, f64)> = c.iter().copied().zip(v.iter().copied()).collect();
    layers.push(Layer::from_sorted_rows(out.cols(), rows, out.bias()[..k].to_vec()));
    (
        Network::new(phi.input_dim(), layers).expect("same shape minus one output"),
        last,
        out.bias()[k],
    )
}

/// `Ψ_{ε,(m,α)}`: approximates `φ_m(x) x^α` and vanishes wherever a
/// partition factor or a monomial factor does.
pub fn localized_monomial_network(
    m: &[usize],
    alpha: &MultiIndex,
    n_grid: usize,
    eps: f64,
    m_max: usize,
) -> Result<Network> {
    if alpha.dim() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            found: alpha.dim(),
        });
    }
    let pou = pou_factor_network(m, n_grid)?;
    let phi = if alpha.order() == 0 {
        pou
    } else {
        parallelize(&[pou, monomial_factor_network(alpha)?])?
    };
    product_of_outputs_network(&phi, eps, m_max)
}

/// One term `c_{m,α} φ_m x^α` of the approximant.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchTerm {
    pub m: Vec<usize>,
    pub alpha: MultiIndex,
    pub coefficient: f64,
}

/// `Φ_{P,ε} = Φ^s ⊙ P(Ψ_{ε,(m,α)} : (m,α))` with `Φ^s` the row of
/// coefficients. Terms are assembled in lexicographic `(m, α)` order; the
/// coefficients only enter the final affine layer.
pub fn assemble_approximant(terms: &[PatchTerm], n_grid: usize, eps: f64, m_max: usize) -> Result<Network> {
    if terms.is_empty() {
        return Err(Error::Empty("assemble_approximant needs at least one patch term"));
    }
    if terms.iter().any(|t| !t.coefficient.is_finite()) {
        return Err(invalid("coefficient", "must be finite"));
    }
    let mut order: Vec<&PatchTerm> = terms.iter().collect();
    order.sort_by(|a, b| (&a.m, &a.alpha).cmp(&(&b.m, &b.alpha)));
    let nets = crate::exec::map_collect(&order, |t| {
        localized_monomial_network(&t.m, &t.alpha, n_grid, eps, m_max)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let stacked = parallelize(&nets)?;
    let coeffs: Vec<f64> = order.iter().map(|t| t.coefficient).collect();
    let sum = Network::new(coeffs.len(), vec![Layer::from_dense(1, coeffs.len(), &coeffs, vec![0.0])?])?;
    sparse_concatenate(&sum, &stacked)
}

/// All terms `(m, α)` with `m ∈ {0,…,N}^d`, `|α| ≤ n − 1`, with the given
/// coefficient function.
pub(crate) fn full_terms(d: usize, n: usize, n_grid: usize, mut c: impl FnMut(&[usize], &MultiIndex) -> f64) -> Vec<PatchTerm> {
    let alphas = multi_indices(d, n - 1);
    let mut out = Vec::with_capacity(alphas.len() * (n_grid + 1).pow(d as u32));
    for m in grid_indices(d, n_grid) {
        for a in &alphas {
            out.push(PatchTerm {
                coefficient: c(&m, a),
                m: m.clone(),
                alpha: a.clone(),
            });
        }
    }
    out
}

/// The architecture shared by every approximant with parameters
/// `(d, n, N, eps)`: any coefficient choice yields a network that
/// [`has_architecture`](crate::network::has_architecture) with respect to it.
pub fn assembly_architecture(d: usize, n: usize, n_grid: usize, eps: f64, m_max: usize) -> Result<Architecture> {
    if n < 1 {
        return Err(invalid("n", "must be at least 1"));
    }
    let terms = full_terms(d, n, n_grid, |_, _| 1.0);
    Ok(architecture_of(&assemble_approximant(&terms, n_grid, eps, m_max)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::has_architecture;

    #[test]
    fn single_output_is_unchanged() {
        let phi = pou_factor_network(&[1], 2).unwrap();
        assert_eq!(product_of_outputs_network(&phi, 1e-2, 3).unwrap(), phi);
    }

    #[test]
    fn cube_from_three_copies() {
        let phi = monomial_factor_network(&MultiIndex(vec![3])).unwrap();
        let eps = 1e-3;
        let psi = product_of_outputs_network(&phi, eps, 3).unwrap();
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            assert!((psi.realize(&[x]).unwrap()[0] - x * x * x).abs() <= 3.0 * eps);
        }
        assert_eq!(psi.realize(&[0.0]).unwrap()[0], 0.0);
        assert!(product_of_outputs_network(&phi, eps, 2).is_err());
    }

    #[test]
    fn localized_monomial_value_and_support() {
        let eps = 1e-3;
        let net = localized_monomial_network(&[1], &MultiIndex(vec![1]), 2, eps, 2).unwrap();
        assert!((net.realize(&[0.5]).unwrap()[0] - 0.5).abs() <= 2.0 * 2.0 * eps);
        // left of the support every partition factor is exactly zero
        for i in 0..50 {
            let x = i as f64 / 50.0 * 0.16;
            assert_eq!(net.realize(&[x]).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn assembly_basics() {
        let terms = full_terms(1, 2, 2, |_, _| 0.0);
        let z = assemble_approximant(&terms, 2, 1e-2, 2).unwrap();
        assert_eq!(z.realize(&[0.3]).unwrap()[0], 0.0);
        let arch = assembly_architecture(1, 2, 2, 1e-2, 2).unwrap();
        let a = assemble_approximant(&full_terms(1, 2, 2, |m, a| 1.0 + m[0] as f64 + a.0[0] as f64), 2, 1e-2, 2).unwrap();
        let b = assemble_approximant(&full_terms(1, 2, 2, |m, _| -0.5 - m[0] as f64), 2, 1e-2, 2).unwrap();
        assert_eq!(architecture_of(&a), arch);
        assert_eq!(architecture_of(&b), arch);
        assert!(has_architecture(&z, &arch));
        assert!(assemble_approximant(&[], 2, 1e-2, 2).is_err());
    }

    #[test]
    fn single_term_matches_localized_monomial() {
        let t = PatchTerm {
            m: vec![1],
            alpha: MultiIndex(vec![1]),
            coefficient: 1.0,
        };
        let a = assemble_approximant(&[t], 2, 1e-2, 2).unwrap();
        let l = localized_monomial_network(&[1], &MultiIndex(vec![1]), 2, 1e-2, 2).unwrap();
        for i in 0..100 {
            let x = (i as f64 + 0.41) / 100.0;
            let (u, v) = (a.realize(&[x]).unwrap()[0], l.realize(&[x]).unwrap()[0]);
            assert!((u - v).abs() <= 1e-14);
        }
    }
}
