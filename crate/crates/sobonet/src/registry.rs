//! Built-in target functions, selected by name on the command line.

use sobonet_core::functions::{constant, gaussian_bump, polynomial, sin_cos, sin_wave, ExprFunction};
use sobonet_core::lb_probe::BumpFamily;
use sobonet_core::MultiIndex;

use crate::error::{CliError, Result};

/// Names accepted by [`lookup`], for help texts.
pub const NAMES: &[&str] = &[
    "sin (sin1 for d=1, sin2 for d=2)",
    "sin1",
    "sin2",
    "gaussian-bump",
    "square",
    "linear",
    "zero",
    "poly:c0,c1,...  (univariate, d=1)",
    "bump:<bits>  (lower-bound bump family; N = len^(1/d))",
];

/// Parameters some families need beyond the dimension.
#[derive(Debug, Clone, Copy)]
pub struct FamilyParams {
    pub n: usize,
    pub bound: f64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams { n: 2, bound: 1.0 }
    }
}

fn need_dim(name: &str, d: usize, want: usize) -> Result<()> {
    if d == want {
        Ok(())
    } else {
        Err(CliError::usage(format!("{name} is defined for d = {want}, got d = {d}")))
    }
}

/// Parses `bump:1011` into its bit vector and the grid `N` with `N^d` bits.
pub fn parse_bits(spec: &str, d: usize) -> Result<(Vec<bool>, usize)> {
    let bits = spec
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CliError::usage(format!("bump pattern must be 0/1 digits, got {c:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let n = (1..=bits.len())
        .find(|k| k.checked_pow(d as u32) == Some(bits.len()))
        .ok_or_else(|| CliError::usage(format!("{} bits is not N^{d} for any N", bits.len())))?;
    Ok((bits, n))
}

pub fn lookup(name: &str, d: usize, params: FamilyParams) -> Result<ExprFunction> {
    if d == 0 {
        return Err(CliError::usage("d must be positive"));
    }
    if let Some(rest) = name.strip_prefix("poly:") {
        need_dim("poly", d, 1)?;
        let coeffs = rest
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|e| CliError::usage(format!("poly coefficient {c:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let terms = coeffs.into_iter().enumerate().map(|(k, c)| (MultiIndex(vec![k]), c)).collect();
        return Ok(polynomial(1, terms));
    }
    if let Some(rest) = name.strip_prefix("bump:") {
        let (bits, grid) = parse_bits(rest, d)?;
        return Ok(BumpFamily::new(d, params.n, grid, params.bound)?.function(&bits)?);
    }
    match name {
        "sin" if d == 1 => Ok(sin_wave()),
        "sin" if d == 2 => Ok(sin_cos()),
        "sin" => Err(CliError::usage("sin is defined for d = 1 or 2")),
        "sin1" => need_dim(name, d, 1).map(|_| sin_wave()),
        "sin2" => need_dim(name, d, 2).map(|_| sin_cos()),
        "gaussian-bump" => Ok(gaussian_bump(d)),
        "square" => Ok(polynomial(d, (0..d).map(|i| (MultiIndex::unit(d, i).add(&MultiIndex::unit(d, i)), 1.0)).collect())),
        "linear" => Ok(polynomial(d, (0..d).map(|i| (MultiIndex::unit(d, i), 1.0)).collect())),
        "zero" => Ok(constant(d, 0.0)),
        _ => Err(CliError::usage(format!("unknown function {name:?}; known: {}", NAMES.join(", ")))),
    }
}
