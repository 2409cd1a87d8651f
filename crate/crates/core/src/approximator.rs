//! From a target `f` and accuracy `eps` to a network `Φ` with
//! `‖R(Φ) − f‖_{W^{s,p}} ≤ eps`, split as `‖f − f_N‖ ≤ eps/2` (grid density)
//! and `‖f_N − R(Φ)‖ ≤ eps/2` (inner network tolerance).

use alloc::vec::Vec;

use crate::constructions::{assemble_approximant, PatchTerm};
use crate::error::{invalid, Error, Result};
use crate::functions::DifferentiableFunction;
use crate::metrics::{wsp_norm, Difference, FunctionField, NetworkField, NormReport, Sampler};
use crate::network::Network;
use crate::taylor::{build_patches, default_quadrature_order, LocalizedSum, PolynomialPatch};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Grid density from `N = ⌈(eps/(2CB))^{−1/(n−s)}⌉` with the given `C`,
    /// built once and measured, without retries.
    Theoretical { constant: f64 },
    /// Smallest grid density whose measured localized-sum error is at most
    /// `eps/2`, inner tolerance from the calibration table, verified and
    /// retried until the measured total error is at most `eps`.
    Calibrated,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Theoretical { .. } => "theoretical",
            Mode::Calibrated => "calibrated",
        }
    }
}

/// Measured constants `Ĉ(d, n)` relating the inner tolerance to the
/// network-side error: `‖f_N − R(Φ)‖ ≈ Ĉ · B · N^s · eps'`.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub version: u32,
    pub entries: Vec<((usize, usize), f64)>,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            version: 1,
            entries: alloc::vec![((1, 2), 0.01), ((1, 3), 0.05), ((2, 2), 0.05), ((2, 3), 0.05)],
        }
    }
}

impl Calibration {
    /// `Ĉ(d, n)`; `1` when not tabulated.
    pub fn constant(&self, d: usize, n: usize) -> f64 {
        self.entries
            .iter()
            .find(|(k, _)| *k == (d, n))
            .map_or(1.0, |e| e.1)
    }
}

#[derive(Debug, Clone)]
pub struct ApproxConfig {
    pub n: usize,
    pub p: f64,
    pub s: f64,
    /// Bound `B ≥ ‖f‖_{W^{n,p}}`.
    pub bound: f64,
    pub mode: Mode,
    /// Norm-estimation budget (grid points / pairs).
    pub budget: usize,
    pub seed: u64,
    /// Quadrature order per axis; `None` for the dimension default.
    pub quadrature: Option<usize>,
    pub m_max: Option<usize>,
    pub max_retries: usize,
    pub max_grid: usize,
    pub calibration: Calibration,
    /// Extra order `θ ∈ (0, 1)` at which the total error is also measured,
    /// reusing the same network evaluations.
    pub interp_order: Option<f64>,
}

impl ApproxConfig {
    pub fn new(n: usize, s: f64, bound: f64) -> Self {
        ApproxConfig {
            n,
            p: f64::INFINITY,
            s,
            bound,
            mode: Mode::Calibrated,
            budget: 100_000,
            seed: 0,
            quadrature: None,
            m_max: None,
            max_retries: 8,
            max_grid: 4096,
            calibration: Calibration::default(),
            interp_order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityAudit {
    pub layers: usize,
    pub weights: usize,
    pub neurons: usize,
    pub eps: f64,
    pub n_grid: usize,
    pub inner_eps: f64,
    pub mode: Mode,
    /// `‖f − f_N‖_{W^{s,p}}`.
    pub error_local: f64,
    /// `‖f_N − R(Φ)‖_{W^{s,p}}`.
    pub error_network: f64,
    /// `‖f − R(Φ)‖_{W^{s,p}}`.
    pub error_total: f64,
    /// `‖f − R(Φ)‖_{L^p}` and `‖f − R(Φ)‖_{W^{1,p}}` on the same grid.
    pub error_s0: f64,
    pub error_s1: f64,
    /// `‖f − R(Φ)‖_{W^{θ,p}}` when `interp_order = Some(θ)`.
    pub error_interp: Option<f64>,
    pub attempts: usize,
}

impl ComplexityAudit {
    fn counts(net: &Network) -> (usize, usize, usize) {
        (net.num_layers(), net.weight_count(), net.neuron_count())
    }
}

/// `N = ⌈(eps/(2CB))^{−1/(n−s)}⌉`, at least 1.
pub fn select_grid_density(eps: f64, n: usize, s: f64, c_cal: f64, bound: f64) -> Result<usize> {
    if !(eps > 0.0) || !(c_cal > 0.0) || !(bound > 0.0) {
        return Err(invalid("eps", "eps, C and B must be positive"));
    }
    if !(n as f64 > s) {
        return Err(invalid("n", "need n > s"));
    }
    let base = eps / (2.0 * c_cal * bound);
    // guard against ⌈·⌉ of values like 2.0000000000000004
    let raw = libm::pow(base, -1.0 / (n as f64 - s));
    let r = libm::round(raw);
    let v = if (raw - r).abs() <= 1e-12 * r.max(1.0) { r } else { libm::ceil(raw) };
    Ok((v as usize).max(1))
}

fn validate(f: &dyn DifferentiableFunction, cfg: &ApproxConfig, eps: f64) -> Result<()> {
    if cfg.n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    if !(0.0..=1.0).contains(&cfg.s) {
        return Err(invalid("s", "must lie in [0, 1]"));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    if !(cfg.bound > 0.0) {
        return Err(invalid("B", "must be positive"));
    }
    if let Some(b) = f.sobolev_bound(cfg.n) {
        if b > cfg.bound * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter {
                name: "B",
                reason: alloc::format!("function norm bound {b} exceeds B = {}", cfg.bound),
            });
        }
    }
    Ok(())
}

fn quadrature(cfg: &ApproxConfig, d: usize) -> usize {
    cfg.quadrature.unwrap_or_else(|| default_quadrature_order(d))
}

/// Localized sum for grid density `N` and its measured error against `f`.
pub fn localized_error(
    f: &dyn DifferentiableFunction,
    cfg: &ApproxConfig,
    n_grid: usize,
) -> Result<(LocalizedSum, NormReport)> {
    let patches = build_patches(f, cfg.n, n_grid, quadrature(cfg, f.dim()))?;
    let sum = LocalizedSum::new(patches, n_grid)?;
    let rep = wsp_norm(&Difference(FunctionField(f), &sum), cfg.s, cfg.p, cfg.budget, cfg.seed)?;
    Ok((sum, rep))
}

/// Smallest `N` with `‖f − f_N‖_{W^{s,p}} ≤ target`: doubling search to
/// bracket it, then bisection inside the last bracket (exact when the
/// measured error is nonincreasing in `N`).
pub fn calibrated_grid_density(
    f: &dyn DifferentiableFunction,
    cfg: &ApproxConfig,
    target: f64,
) -> Result<(usize, f64)> {
    let mut lo = 0usize;
    let mut hi = 1usize;
    let mut err;
    loop {
        err = localized_error(f, cfg, hi)?.1.value;
        if err <= target {
            break;
        }
        if hi >= cfg.max_grid {
            return Err(Error::BudgetExceeded {
                budget: cfg.max_grid,
                context: "grid density search",
            });
        }
        lo = hi;
        hi = (hi * 2).min(cfg.max_grid);
    }
    // invariant: lo fails (or is 0), hi passes with error `err`
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let e = localized_error(f, cfg, mid)?.1.value;
        if e <= target {
            hi = mid;
            err = e;
        } else {
            lo = mid;
        }
    }
    Ok((hi, err))
}

/// Terms `c_{m,α} φ_m x^α` of the patches.
pub fn patch_terms(patches: &[PolynomialPatch]) -> Vec<PatchTerm> {
    patches
        .iter()
        .flat_map(|p| {
            p.coeffs.iter().map(move |(a, c)| PatchTerm {
                m: p.m.clone(),
                alpha: a.clone(),
                coefficient: *c,
            })
        })
        .collect()
}

/// Inner tolerance `eps' = eps / (2 Ĉ B N^s)`, kept inside `(0, 1/2)`.
pub fn inner_tolerance(eps: f64, c_hat: f64, bound: f64, n_grid: usize, s: f64) -> f64 {
    (eps / (2.0 * c_hat * bound * libm::pow(n_grid as f64, s))).min(0.25)
}

/// Builds `Φ_{P,eps'}` on a fixed grid and measures all three errors.
pub fn build_on_grid(
    f: &dyn DifferentiableFunction,
    cfg: &ApproxConfig,
    eps: f64,
    n_grid: usize,
    inner_eps: f64,
) -> Result<(Network, ComplexityAudit)> {
    let d = f.dim();
    let (sum, local) = localized_error(f, cfg, n_grid)?;
    let m_max = cfg.m_max.unwrap_or(cfg.n - 1 + d);
    let net = assemble_approximant(&patch_terms(sum.patches()), n_grid, inner_eps, m_max)?;
    // one sampling of the network serves every error below
    let pairs = match cfg.interp_order {
        Some(_) => cfg.budget,
        None if cfg.s > 0.0 && cfg.s < 1.0 => cfg.budget,
        None => 0,
    };
    let sampler = Sampler::new(d, cfg.p, cfg.budget, pairs, true, cfg.seed)?;
    let at_net = sampler.sample(&NetworkField::new(&net)?)?;
    let at_sum = sampler.sample(&sum)?;
    let at_f = sampler.sample(&FunctionField(f))?;
    let total = at_net.minus(&at_f);
    let network = sampler.wsp_norm(&at_net.minus(&at_sum), cfg.s)?;
    let error_interp = match cfg.interp_order {
        Some(t) => Some(sampler.wsp_norm(&total, t)?.value),
        None => None,
    };
    let error_s0 = sampler.lp_norm(&total).value;
    let error_s1 = sampler.w1p_norm(&total)?.value;
    let total = sampler.wsp_norm(&total, cfg.s)?;
    let (layers, weights, neurons) = ComplexityAudit::counts(&net);
    Ok((
        net,
        ComplexityAudit {
            layers,
            weights,
            neurons,
            eps,
            n_grid,
            inner_eps,
            mode: cfg.mode,
            error_local: local.value,
            error_network: network.value,
            error_total: total.value,
            error_s0,
            error_s1,
            error_interp,
            attempts: 1,
        },
    ))
}

/// The full pipeline. In calibrated mode a build that misses its budget is
/// retried: doubled `N` when the localized part exceeds `eps/2`, halved
/// inner tolerance when the network part does.
pub fn build_approximant(
    f: &dyn DifferentiableFunction,
    cfg: &ApproxConfig,
    eps: f64,
) -> Result<(Network, ComplexityAudit)> {
    validate(f, cfg, eps)?;
    let d = f.dim();
    match cfg.mode {
        Mode::Theoretical { constant } => {
            let n_grid = select_grid_density(eps, cfg.n, cfg.s, constant, cfg.bound)?;
            let inner = inner_tolerance(eps, constant, cfg.bound, n_grid, cfg.s);
            build_on_grid(f, cfg, eps, n_grid, inner)
        }
        Mode::Calibrated => {
            let (mut n_grid, _) = calibrated_grid_density(f, cfg, eps / 2.0)?;
            let c_hat = cfg.calibration.constant(d, cfg.n);
            let mut inner = inner_tolerance(eps, c_hat, cfg.bound, n_grid, cfg.s);
            let mut last = 0.0;
            for attempt in 1..=cfg.max_retries {
                let (net, mut audit) = build_on_grid(f, cfg, eps, n_grid, inner)?;
                audit.attempts = attempt;
                last = audit.error_total;
                if audit.error_local <= eps / 2.0 && audit.error_network <= eps / 2.0 && audit.error_total <= eps {
                    return Ok((net, audit));
                }
                if audit.error_local > eps / 2.0 {
                    n_grid = (n_grid * 2).min(cfg.max_grid);
                    inner = inner.min(inner_tolerance(eps, c_hat, cfg.bound, n_grid, cfg.s));
                } else {
                    inner /= 2.0;
                }
            }
            Err(Error::ToleranceNotMet {
                achieved: last,
                target: eps,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub error_s0: f64,
    pub error_s1: f64,
    pub error_target_s: f64,
    pub error_interp: Option<f64>,
    pub layers: usize,
    pub weights: usize,
    pub neurons: usize,
    pub n_grid: usize,
    pub inner_eps: f64,
}

/// One calibrated (or theoretical) build per `eps`, with `L^p` and `W^{1,p}`
/// errors alongside the target-`s` error.
pub fn scaling_sweep(f: &dyn DifferentiableFunction, cfg: &ApproxConfig, eps_list: &[f64]) -> Result<Vec<SweepRow>> {
    crate::exec::map_collect(eps_list, |&eps| {
        let (_, audit) = build_approximant(f, cfg, eps)?;
        Ok(SweepRow {
            eps,
            error_s0: audit.error_s0,
            error_s1: audit.error_s1,
            error_target_s: audit.error_total,
            error_interp: audit.error_interp,
            layers: audit.layers,
            weights: audit.weights,
            neurons: audit.neurons,
            n_grid: audit.n_grid,
            inner_eps: audit.inner_eps,
        })
    })
    .into_iter()
    .collect()
}

/// Least-squares slope of `log(M / L)` against `log(1/eps)` for rows
/// `(eps, M, L)`. The depth `L` is the construction's own
/// `O(log(1/eps))` factor, additive constants included, so this is the
/// exponent to compare with `d/(n−s)` at moderate `eps`.
pub fn fit_complexity_exponent(rows: &[(f64, usize, usize)]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|&(eps, m, l)| (libm::log(1.0 / eps), libm::log(m as f64 / l as f64)))
        .collect();
    least_squares_slope(&pts)
}

/// Same slope with the nominal factor `log₂(eps^{−n/(n−s)})` divided out.
pub fn fit_complexity_exponent_nominal(rows: &[(f64, usize)], n: usize, s: f64) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|&(eps, m)| {
            let logf = libm::log2(libm::pow(eps, -(n as f64) / (n as f64 - s)));
            (libm::log(1.0 / eps), libm::log(m as f64 / logf))
        })
        .collect();
    least_squares_slope(&pts)
}

/// Slope of the least-squares line through `(x, y)` points.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
