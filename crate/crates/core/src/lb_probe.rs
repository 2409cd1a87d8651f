//! Desk-scale probe of the lower-bound mechanism: bit patterns `y` are
//! encoded as bump families `f_y`, approximated in `W^{1,∞}`, and read back
//! from directional difference quotients of the approximants.

use alloc::vec;
use alloc::vec::Vec;

use crate::approximator::{build_on_grid, calibrated_grid_density, inner_tolerance, ApproxConfig};
use crate::constructions::assembly_architecture;
use crate::error::{check_dim, invalid, Error, Result};
use crate::eval::{line_breakpoints_with, LineOptions};
use crate::functions::{DifferentiableFunction, ExprFunction};
use crate::jet::{Jet, JetSpace};
use crate::multiindex::grid_indices;
use crate::network::{has_architecture, Network};

/// Below this value of `1 − 4|x|²` the bump and all its derivatives
/// underflow to zero.
const CUTOFF: f64 = 1.0 / 700.0;

/// `ψ(x) = exp(1 − 1/(1 − 4|x|²))` on `|x| < 1/2`, zero elsewhere.
pub fn psi_jet<'a>(space: &'a JetSpace, x: &[Jet<'a>]) -> Jet<'a> {
    let mut r2 = space.constant(0.0);
    for xi in x {
        r2 = r2 + xi * xi;
    }
    let u = (r2 * -4.0).add_const(1.0);
    if u.value() <= CUTOFF {
        return space.constant(0.0);
    }
    (-u.recip()).add_const(1.0).exp()
}

pub fn psi(x: &[f64]) -> f64 {
    let u = 1.0 - 4.0 * x.iter().map(|v| v * v).sum::<f64>();
    if u <= CUTOFF {
        0.0
    } else {
        libm::exp(1.0 - 1.0 / u)
    }
}

/// `‖ψ‖_{W^{n,∞}}`, the largest `|D^α ψ|` over `|α| ≤ n`, sampled on a grid
/// of the orthant `[0, 1/2)^d` (ψ is radial, so its derivatives agree up to
/// sign on all orthants).
pub fn psi_sobolev_norm(d: usize, n: usize) -> f64 {
    let per_axis = match d {
        1 => 100_000,
        2 => 400,
        3 => 60,
        _ => 12,
    };
    let space = JetSpace::new(d, n);
    let mut best = 0.0f64;
    for k in grid_indices(d, per_axis - 1) {
        let x: Vec<f64> = k.iter().map(|&i| 0.5 * i as f64 / per_axis as f64).collect();
        let vars = space.variables(&x);
        for v in psi_jet(&space, &vars).derivatives() {
            best = best.max(v.abs());
        }
    }
    best
}

/// `φ(1/4) / 4`: the derivative of ψ toward the origin at radius 1/4.
pub fn psi_slope_at_quarter() -> f64 {
    libm::exp(-1.0 / 3.0) * 32.0 / 9.0
}

/// Sample points `x_m = m/N`, `m ∈ {0,…,N−1}^d`, with probe directions and
/// probe points `x̃_m = x_m + ν(x_m)/(4N)`.
#[derive(Debug, Clone)]
pub struct BumpFamily {
    d: usize,
    n: usize,
    grid: usize,
    bound: f64,
    psi_norm: f64,
    points: Vec<Vec<f64>>,
    directions: Vec<Vec<f64>>,
    probes: Vec<Vec<f64>>,
}

/// `e_1` inside the open cube, otherwise the normalized inward sum of the
/// axes on whose faces `x` lies.
pub fn probe_direction(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    if x.iter().all(|&v| v > 0.0 && v < 1.0) {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        return e;
    }
    let raw: Vec<f64> = x
        .iter()
        .map(|&v| (v == 0.0) as i32 as f64 - (v == 1.0) as i32 as f64)
        .collect();
    let norm = libm::sqrt(raw.iter().map(|v| v * v).sum());
    raw.into_iter().map(|v| v / norm).collect()
}

impl BumpFamily {
    pub fn new(d: usize, n: usize, grid: usize, bound: f64) -> Result<Self> {
        if d == 0 || grid == 0 {
            return Err(invalid("d, N", "must be positive"));
        }
        if n < 2 {
            return Err(invalid("n", "must be at least 2"));
        }
        if !(bound > 0.0) {
            return Err(invalid("B", "must be positive"));
        }
        let mut points = Vec::new();
        let mut directions = Vec::new();
        let mut probes = Vec::new();
        for m in grid_indices(d, grid - 1) {
            let x: Vec<f64> = m.iter().map(|&k| k as f64 / grid as f64).collect();
            let nu = probe_direction(&x);
            let xt: Vec<f64> = x.iter().zip(&nu).map(|(a, v)| a + v / (4.0 * grid as f64)).collect();
            points.push(x);
            directions.push(nu);
            probes.push(xt);
        }
        Ok(BumpFamily {
            d,
            n,
            grid,
            bound,
            psi_norm: psi_sobolev_norm(d, n),
            points,
            directions,
            probes,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Number of sample points, `N^d`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn psi_norm(&self) -> f64 {
        self.psi_norm
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn probes(&self) -> &[Vec<f64>] {
        &self.probes
    }

    /// `c_1 = B φ(1/4) / (4 ‖ψ‖_{W^{n,∞}})`.
    pub fn c1(&self) -> f64 {
        self.bound * psi_slope_at_quarter() / self.psi_norm
    }

    /// The bump height `B N^{−n} / ‖ψ‖_{W^{n,∞}}`.
    pub fn amplitude(&self) -> f64 {
        self.bound * libm::pow(self.grid as f64, -(self.n as f64)) / self.psi_norm
    }

    /// `c_1 N^{−(n−1)}`, the directional slope a set bit produces.
    pub fn slope(&self) -> f64 {
        self.c1() * libm::pow(self.grid as f64, -(self.n as f64 - 1.0))
    }

    pub fn threshold(&self) -> f64 {
        self.slope() / 2.0
    }

    /// `c_1 N^{−(n−1)} / (6 √d)`, half the largest `W^{1,∞}` accuracy for
    /// which decoding is guaranteed.
    pub fn tolerance(&self) -> f64 {
        self.slope() / (6.0 * libm::sqrt(self.d as f64))
    }

    /// `f_y = Σ_m y_m B N^{−n}/‖ψ‖ ψ(N(x − x_m))`.
    pub fn function(&self, y: &[bool]) -> Result<ExprFunction> {
        check_dim(self.len(), y.len())?;
        let centers: Vec<Vec<f64>> = self
            .points
            .iter()
            .zip(y)
            .filter(|(_, &b)| b)
            .map(|(x, _)| x.clone())
            .collect();
        let amp = self.amplitude();
        let scale = self.grid as f64;
        let (bound, n) = (self.bound, self.n);
        let name = alloc::format!(
            "bump:{}",
            y.iter().map(|&b| if b { '1' } else { '0' }).collect::<alloc::string::String>()
        );
        Ok(ExprFunction::new(&name, self.d, move |x: &[Jet<'_>]| {
            let space = x[0].space();
            let mut acc = space.constant(0.0);
            for c in &centers {
                let near = x.iter().zip(c).map(|(xi, ci)| (xi.value() - ci) * scale).map(|t| t * t).sum::<f64>();
                if near >= 0.25 {
                    continue;
                }
                let local: Vec<Jet<'_>> = x.iter().zip(c).map(|(xi, &ci)| xi.clone().add_const(-ci).scale(scale)).collect();
                acc = acc + psi_jet(space, &local).scale(amp);
            }
            acc
        })
        .with_sobolev_bound(move |k| if k <= n { bound } else { f64::INFINITY }))
    }
}

/// `f_y` for the family `(d, n, N, B)`.
pub fn bump_family(d: usize, n: usize, grid: usize, bound: f64, y: &[bool]) -> Result<ExprFunction> {
    BumpFamily::new(d, n, grid, bound)?.function(y)
}

/// Outcome of [`decode`].
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub bits: Vec<bool>,
    /// Difference quotients `g_m`.
    pub quotients: Vec<f64>,
    /// The common step `δ`.
    pub delta: f64,
}

impl Decoded {
    /// `min_m |g_m − threshold|`.
    pub fn min_margin(&self, family: &BumpFamily) -> f64 {
        let t = family.threshold();
        self.quotients.iter().map(|g| (g - t).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Default search window for the first affine piece, relative to the probe
/// reach `1/(4N)`.
pub const DEFAULT_WINDOW: f64 = 1e-6;

/// Reads a bit per sample point: `δ` is the smallest first-piece length of
/// `t ↦ R(x̃_m − t ν_m)` over all `m` (halved to stay off the kink), and the
/// bit is `g_m = (R(x̃_m − δν_m) − R(x̃_m))/δ > c_1 N^{−(n−1)}/2`.
pub fn decode(net: &Network, family: &BumpFamily) -> Result<Decoded> {
    decode_with(net, family, DEFAULT_WINDOW)
}

/// [`decode`] with the first piece searched on `(0, window/(4N))` only. A
/// piece that reaches the end of the window is cut there, which is still a
/// valid `δ`; small windows keep the walk short on networks whose
/// activation pattern changes often without changing the slope.
pub fn decode_with(net: &Network, family: &BumpFamily, window: f64) -> Result<Decoded> {
    check_dim(family.dim(), net.input_dim())?;
    check_dim(1, net.output_dim())?;
    if !(window > 0.0 && window <= 1.0) {
        return Err(invalid("window", "must lie in (0, 1]"));
    }
    let reach = window / (4.0 * family.grid() as f64);
    let opts = LineOptions {
        max_breakpoints: 1,
        ..LineOptions::default()
    };
    let mut delta = reach;
    for (xt, nu) in family.probes().iter().zip(family.directions()) {
        if nu.iter().all(|&v| v == 0.0) {
            return Err(invalid("direction", "degenerate probe direction"));
        }
        let back: Vec<f64> = nu.iter().map(|v| -v).collect();
        if let Some(&t) = line_breakpoints_with(net, xt, &back, reach, opts)?.first() {
            delta = delta.min(t);
        }
    }
    let delta = delta / 2.0;
    let threshold = family.threshold();
    let mut bits = Vec::with_capacity(family.len());
    let mut quotients = Vec::with_capacity(family.len());
    for (xt, nu) in family.probes().iter().zip(family.directions()) {
        let shifted: Vec<f64> = xt.iter().zip(nu).map(|(a, v)| a - delta * v).collect();
        let g = (net.realize_scalar(&shifted)? - net.realize_scalar(xt)?) / delta;
        bits.push(g > threshold);
        quotients.push(g);
    }
    Ok(Decoded { bits, quotients, delta })
}

/// All `2^k` patterns of length `k`, pattern `i` having bit `j` equal to
/// bit `j` of `i`.
pub fn all_patterns(k: usize) -> Result<Vec<Vec<bool>>> {
    if k >= 20 {
        return Err(Error::BudgetExceeded {
            budget: 1 << 20,
            context: "pattern enumeration",
        });
    }
    Ok((0..1usize << k).map(|i| (0..k).map(|j| (i >> j) & 1 == 1).collect()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternOutcome {
    pub y: Vec<bool>,
    pub decoded: Vec<bool>,
    pub ok: bool,
    pub min_margin: f64,
    /// Measured `‖R(Φ_y) − f_y‖_{W^{1,∞}}` on the shared architecture.
    pub error: f64,
    pub on_architecture: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub eps: f64,
    pub threshold: f64,
    pub n_grid: usize,
    pub inner_eps: f64,
    pub weights: usize,
    pub outcomes: Vec<PatternOutcome>,
}

impl ProbeReport {
    pub fn all_decoded(&self) -> bool {
        self.outcomes.iter().all(|o| o.ok && o.on_architecture)
    }

    pub fn min_margin(&self) -> f64 {
        self.outcomes.iter().map(|o| o.min_margin).fold(f64::INFINITY, f64::min)
    }
}

/// Approximates every `f_y` at `eps = family.tolerance()` in `W^{1,∞}` on
/// one shared architecture and decodes each. The grid density is the
/// largest calibrated density any pattern needs; the inner tolerance comes
/// from the calibration table at that density. A pattern that misses its
/// error split triggers the retry policy for all patterns at once (doubled
/// grid for the localized part, halved inner tolerance for the network
/// part).
pub fn probe_lower_bound(family: &BumpFamily, base: &ApproxConfig, patterns: &[Vec<bool>]) -> Result<ProbeReport> {
    let mut cfg = base.clone();
    cfg.n = family.order();
    cfg.s = 1.0;
    cfg.p = f64::INFINITY;
    cfg.bound = family.bound();
    let eps = family.tolerance();
    let fs = patterns.iter().map(|y| family.function(y)).collect::<Result<Vec<_>>>()?;
    let grids = crate::exec::map_collect(&fs, |f| calibrated_grid_density(f, &cfg, eps / 2.0).map(|r| r.0))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut n_grid = grids.into_iter().max().ok_or(Error::Empty("no patterns"))?;
    let c_hat = cfg.calibration.constant(family.dim(), cfg.n);
    let mut inner = inner_tolerance(eps, c_hat, cfg.bound, n_grid, 1.0);
    let m_max = cfg.m_max.unwrap_or(cfg.n - 1 + family.dim());
    let idx: Vec<usize> = (0..fs.len()).collect();
    let mut worst = 0.0;
    for _ in 0..cfg.max_retries {
        let arch = assembly_architecture(family.dim(), cfg.n, n_grid, inner, m_max)?;
        let runs = crate::exec::map_collect(&idx, |&k| {
            let f: &dyn DifferentiableFunction = &fs[k];
            let (net, audit) = build_on_grid(f, &cfg, eps, n_grid, inner)?;
            let dec = decode(&net, family)?;
            Ok((
                PatternOutcome {
                    ok: dec.bits == patterns[k],
                    min_margin: dec.min_margin(family),
                    decoded: dec.bits,
                    y: patterns[k].clone(),
                    error: audit.error_total,
                    on_architecture: has_architecture(&net, &arch),
                },
                audit,
            ))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let local_miss = runs.iter().any(|r| r.1.error_local > eps / 2.0);
        let net_miss = runs.iter().any(|r| r.1.error_network > eps / 2.0 || r.1.error_total > eps);
        worst = runs.iter().map(|r| r.1.error_total).fold(0.0, f64::max);
        if !local_miss && !net_miss {
            return Ok(ProbeReport {
                eps,
                threshold: family.threshold(),
                n_grid,
                inner_eps: inner,
                weights: arch.weight_count(),
                outcomes: runs.into_iter().map(|r| r.0).collect(),
            });
        }
        if local_miss {
            n_grid = (n_grid * 2).min(cfg.max_grid);
            inner = inner.min(inner_tolerance(eps, c_hat, cfg.bound, n_grid, 1.0));
        } else {
            inner /= 2.0;
        }
    }
    Err(Error::ToleranceNotMet {
        achieved: worst,
        target: eps,
    })
}

/// Largest `|∂^α f|`, `|α| ≤ n`, over a grid of `[0,1]^d`; used to check
/// `‖f_y‖_{W^{n,∞}} ≤ B`.
pub fn sampled_sobolev_norm(f: &dyn DifferentiableFunction, n: usize, per_axis: usize) -> f64 {
    let d = f.dim();
    let space = JetSpace::new(d, n);
    let mut best = 0.0f64;
    for k in grid_indices(d, per_axis) {
        let x: Vec<f64> = k.iter().map(|&i| i as f64 / per_axis as f64).collect();
        for v in f.jet(&space, &x).derivatives() {
            best = best.max(v.abs());
        }
    }
    best
}
