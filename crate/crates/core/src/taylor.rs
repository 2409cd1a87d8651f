//! Averaged Taylor polynomials over balls, per-cell polynomial patches and
//! the partition-of-unity localized sum `f_N = Σ_m φ_m p_m`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::functions::DifferentiableFunction;
use crate::jet::JetSpace;
use crate::multiindex::{binomial, grid_indices, multi_indices, MultiIndex};
use crate::quadrature::TensorRule;

/// Lower and upper corner of the enlarged domain on which targets are defined.
pub const DOMAIN: (f64, f64) = (-1.0, 2.0);

/// Default tensor quadrature order per axis.
pub fn default_quadrature_order(d: usize) -> usize {
    if d <= 2 {
        40
    } else {
        20
    }
}

/// Normalized cut-off `exp(−1/(1 − (|y−c|/r)²)) / mass` supported on the
/// closed ball of radius `r`. The mass comes from the same tensor rule used
/// for the averaging integrals, so constants are reproduced exactly by the
/// discrete average.
#[derive(Debug, Clone)]
pub struct BumpCutoff {
    center: Vec<f64>,
    r: f64,
    mass: f64,
    q: usize,
}

impl BumpCutoff {
    pub fn new(center: &[f64], r: f64, q: usize) -> Result<Self> {
        if !(r > 0.0) {
            return Err(invalid("r", "radius must be positive"));
        }
        if q < 2 {
            return Err(invalid("q", "quadrature order must be at least 2"));
        }
        let mut b = BumpCutoff {
            center: center.to_vec(),
            r,
            mass: 1.0,
            q,
        };
        let rule = b.rule();
        b.mass = rule.integrate(|y| b.unnormalized(y));
        Ok(b)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// The tensor rule on the bounding box of the ball.
    pub fn rule(&self) -> TensorRule {
        let lo: Vec<f64> = self.center.iter().map(|c| c - self.r).collect();
        let hi: Vec<f64> = self.center.iter().map(|c| c + self.r).collect();
        TensorRule::on_box(&lo, &hi, self.q)
    }

    pub fn unnormalized(&self, y: &[f64]) -> f64 {
        let rho2: f64 = y
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / (self.r * self.r);
        if rho2 < 1.0 {
            libm::exp(-1.0 / (1.0 - rho2))
        } else {
            0.0
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.unnormalized(y) / self.mass
    }
}

/// Cut-off with the default quadrature order for its dimension.
pub fn bump_cutoff(center: &[f64], r: f64) -> Result<BumpCutoff> {
    BumpCutoff::new(center, r, default_quadrature_order(center.len()))
}

/// `p_m(x) = Σ_{|α| ≤ n−1} c_{m,α} x^α` attached to grid point `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPatch {
    pub m: Vec<usize>,
    pub coeffs: Vec<(MultiIndex, f64)>,
}

impl PolynomialPatch {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(a, c)| c * a.monomial(x)).sum()
    }

    pub fn eval_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut g = vec![0.0; x.len()];
        grad.iter_mut().for_each(|v| *v = 0.0);
        let mut v = 0.0;
        for (a, c) in &self.coeffs {
            v += c * a.monomial_with_gradient(x, &mut g);
            for (gi, &ai) in grad.iter_mut().zip(&g) {
                *gi += c * ai;
            }
        }
        v
    }
}

/// Monomial coefficients of `Q^n f`, the degree-`(n−1)` Taylor polynomial
/// averaged over `B_r(center)` against the normalized bump:
///
/// `c_γ = Σ_{|γ+β| ≤ n−1} a_{(γ,β)}/(γ+β)! ∫ D^{γ+β} f(y) y^β φ(y) dy`,
/// with `(x − y)^α = Σ a_{(γ,β)} x^γ y^β`,
/// `a_{(γ,β)} = Π_i C(γ_i+β_i, γ_i) (−1)^{β_i}`.
pub fn averaged_taylor_coefficients(
    f: &dyn DifferentiableFunction,
    n: usize,
    center: &[f64],
    r: f64,
    q: usize,
) -> Result<Vec<(MultiIndex, f64)>> {
    let d = f.dim();
    check_dim(d, center.len())?;
    if n < 1 {
        return Err(invalid("n", "must be at least 1"));
    }
    if center.iter().any(|&c| c - r < DOMAIN.0 || c + r > DOMAIN.1) {
        return Err(Error::InvalidParameter {
            name: "center",
            reason: "ball leaves the enlarged domain [-1, 2]^d".into(),
        });
    }
    let bump = BumpCutoff::new(center, r, q)?;
    let space = JetSpace::new(d, n - 1);
    let gammas = multi_indices(d, n - 1);
    // (γ index, β, jet index of γ+β, a/(γ+β)!)
    let mut terms: Vec<(usize, MultiIndex, usize, f64)> = Vec::new();
    for (gi, g) in gammas.iter().enumerate() {
        for b in multi_indices(d, n - 1 - g.order()) {
            let s = g.add(&b);
            let a: f64 = g
                .0
                .iter()
                .zip(&b.0)
                .map(|(&gk, &bk)| binomial(gk + bk, gk) * if bk % 2 == 1 { -1.0 } else { 1.0 })
                .product();
            let k = space.index_of(&s).expect("within order");
            terms.push((gi, b, k, a / s.factorial()));
        }
    }
    let rule = bump.rule();
    let mut c = vec![0.0; gammas.len()];
    for (y, &w) in rule.points.iter().zip(&rule.weights) {
        let phi = bump.value(y);
        if phi == 0.0 {
            continue;
        }
        let derivs = f.jet(&space, y).derivatives();
        for (gi, b, k, a) in &terms {
            c[*gi] += a * derivs[*k] * b.monomial(y) * phi * w;
        }
    }
    Ok(gammas.into_iter().zip(c).collect())
}

/// One patch per `m ∈ {0,…,N}^d`, averaging over `B_{3/(4N)}(m/N)`.
pub fn build_patches(
    f: &dyn DifferentiableFunction,
    n: usize,
    n_grid: usize,
    q: usize,
) -> Result<Vec<PolynomialPatch>> {
    if n_grid == 0 {
        return Err(invalid("N", "must be at least 1"));
    }
    let d = f.dim();
    let r = 0.75 / n_grid as f64;
    let grid = grid_indices(d, n_grid);
    crate::exec::map_collect(&grid, |m| {
        let center: Vec<f64> = m.iter().map(|&k| k as f64 / n_grid as f64).collect();
        averaged_taylor_coefficients(f, n, &center, r, q).map(|coeffs| PolynomialPatch { m: m.clone(), coeffs })
    })
    .into_iter()
    .collect()
}

/// Trapezoid `ψ(t)`: `1` for `|t| ≤ 1`, `0` for `|t| ≥ 2`, linear between.
pub fn hat(t: f64) -> f64 {
    (2.0 - t.abs()).clamp(0.0, 1.0)
}

fn hat_slope(t: f64) -> f64 {
    let a = t.abs();
    if a > 1.0 && a < 2.0 {
        -t.signum()
    } else {
        0.0
    }
}

/// `φ_m(x) = Π_l ψ(3N(x_l − m_l/N))`.
pub fn pou_weight(m: &[usize], n_grid: usize, x: &[f64]) -> f64 {
    let nf = n_grid as f64;
    m.iter()
        .zip(x)
        .map(|(&ml, &xl)| hat(3.0 * nf * xl - 3.0 * ml as f64))
        .product()
}

/// `f_N`, evaluated from the closed-form partition of unity.
#[derive(Debug, Clone)]
pub struct LocalizedSum {
    d: usize,
    n_grid: usize,
    patches: Vec<PolynomialPatch>,
}

impl LocalizedSum {
    /// `patches` must hold exactly one patch per grid index, in
    /// lexicographic order (as produced by [`build_patches`]).
    pub fn new(patches: Vec<PolynomialPatch>, n_grid: usize) -> Result<Self> {
        let first = patches.first().ok_or(Error::Empty("localized sum needs patches"))?;
        let d = first.m.len();
        let grid = grid_indices(d, n_grid);
        if grid.len() != patches.len() || grid.iter().zip(&patches).any(|(g, p)| *g != p.m) {
            return Err(invalid("patches", "expected one patch per grid index in lexicographic order"));
        }
        Ok(LocalizedSum { d, n_grid, patches })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    pub fn patches(&self) -> &[PolynomialPatch] {
        &self.patches
    }

    /// Grid indices whose `φ_m` may be nonzero at `x`, as linear indices.
    fn active(&self, x: &[f64], mut visit: impl FnMut(usize, &[usize])) {
        let nf = self.n_grid as f64;
        let mut ranges = Vec::with_capacity(self.d);
        for &xl in x {
            let c = libm::floor(xl * nf) as i64;
            let lo = (c - 1).max(0) as usize;
            let hi = ((c + 2).max(0) as usize).min(self.n_grid);
            ranges.push((lo, hi.max(lo)));
        }
        let mut m: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            let lin = m.iter().fold(0usize, |acc, &k| acc * (self.n_grid + 1) + k);
            visit(lin, &m);
            let mut i = self.d;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                if m[i] < ranges[i].1 {
                    m[i] += 1;
                    break;
                }
                m[i] = ranges[i].0;
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        self.active(x, |lin, m| {
            let w = pou_weight(m, self.n_grid, x);
            if w != 0.0 {
                v += w * self.patches[lin].eval(x);
            }
        });
        v
    }

    pub fn eval_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.d;
        let nf = self.n_grid as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut pg = vec![0.0; d];
        let mut v = 0.0;
        self.active(x, |lin, m| {
            let t: Vec<f64> = m.iter().zip(x).map(|(&ml, &xl)| 3.0 * nf * xl - 3.0 * ml as f64).collect();
            let h: Vec<f64> = t.iter().map(|&ti| hat(ti)).collect();
            let w: f64 = h.iter().product();
            let dw: Vec<f64> = (0..d)
                .map(|i| {
                    let rest: f64 = (0..d).filter(|&j| j != i).map(|j| h[j]).product();
                    3.0 * nf * hat_slope(t[i]) * rest
                })
                .collect();
            if w == 0.0 && dw.iter().all(|&g| g == 0.0) {
                return;
            }
            let p = self.patches[lin].eval_with_gradient(x, &mut pg);
            v += w * p;
            for i in 0..d {
                grad[i] += dw[i] * p + w * pg[i];
            }
        });
        v
    }
}

/// `f_N(x)` for patches on grid density `N`.
pub fn evaluate_localized_sum(patches: &[PolynomialPatch], n_grid: usize, x: &[f64]) -> Result<f64> {
    let s = LocalizedSum::new(patches.to_vec(), n_grid)?;
    check_dim(s.dim(), x.len())?;
    Ok(s.eval(x))
}
