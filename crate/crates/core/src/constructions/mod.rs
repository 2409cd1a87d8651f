//! Explicit approximation networks: squaring, absolute value,
//! multiplication, partition-of-unity factors, monomials, products of
//! outputs, localized monomials and the assembled approximant.

mod assemble;
mod pou;
mod squaring;

pub use assemble::{
    assemble_approximant, assembly_architecture, localized_monomial_network, product_of_outputs_network,
    PatchTerm,
};
pub use pou::{hat_network, monomial_factor_network, pou_factor_network};
pub use squaring::{abs_network, multiplication_depth, multiplication_network, squaring_network};

use alloc::vec::Vec;

pub(crate) fn sorted_row(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.retain(|e| e.1 != 0.0);
    entries.sort_unstable_by_key(|e| e.0);
    entries
}
