//! Sampled `L^p`, `W^{1,p}` and Slobodeckij `W^{s,p}` norms on `[0,1]^d`.
//!
//! Grids are shifted per axis by `frac((seed + j + 1) √2)` so that dyadic
//! kinks of constructed networks are never hit. `p = ∞` values are maxima
//! over the samples, hence lower bounds of the true norms.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, invalid, Result};
use crate::eval::BatchEvaluator;
use crate::functions::DifferentiableFunction;
use crate::network::Network;
use crate::taylor::LocalizedSum;

/// A scalar function on `[0,1]^d` with an a.e. gradient, evaluated in bulk.
pub trait GradientField: Sync {
    fn dim(&self) -> usize;

    /// `xs` holds points row-major. `grads`, when given, receives `d`
    /// partials per point.
    fn sample(&self, xs: &[f64], values: &mut [f64], grads: Option<&mut [f64]>);
}

/// Single-output network as a field, gradients by forward mode (`ρ'(0) = 0`).
pub struct NetworkField<'a>(&'a Network);

impl<'a> NetworkField<'a> {
    pub fn new(net: &'a Network) -> Result<Self> {
        check_dim(1, net.output_dim())?;
        Ok(NetworkField(net))
    }
}

impl GradientField for NetworkField<'_> {
    fn dim(&self) -> usize {
        self.0.input_dim()
    }

    fn sample(&self, xs: &[f64], values: &mut [f64], grads: Option<&mut [f64]>) {
        let mut ev = BatchEvaluator::new(self.0);
        match grads {
            Some(g) => ev.values_and_jacobians(xs, values, g),
            None => ev.values(xs, values),
        }
        .expect("shapes checked by the estimators");
    }
}

pub struct FunctionField<'a>(pub &'a dyn DifferentiableFunction);

impl GradientField for FunctionField<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn sample(&self, xs: &[f64], values: &mut [f64], grads: Option<&mut [f64]>) {
        let d = self.0.dim();
        match grads {
            Some(g) => {
                for (i, x) in xs.chunks_exact(d).enumerate() {
                    values[i] = self.0.value_and_gradient(x, &mut g[i * d..(i + 1) * d]);
                }
            }
            None => {
                for (i, x) in xs.chunks_exact(d).enumerate() {
                    values[i] = self.0.value(x);
                }
            }
        }
    }
}

impl GradientField for LocalizedSum {
    fn dim(&self) -> usize {
        LocalizedSum::dim(self)
    }

    fn sample(&self, xs: &[f64], values: &mut [f64], grads: Option<&mut [f64]>) {
        let d = LocalizedSum::dim(self);
        match grads {
            Some(g) => {
                for (i, x) in xs.chunks_exact(d).enumerate() {
                    values[i] = self.eval_with_gradient(x, &mut g[i * d..(i + 1) * d]);
                }
            }
            None => {
                for (i, x) in xs.chunks_exact(d).enumerate() {
                    values[i] = self.eval(x);
                }
            }
        }
    }
}

/// Closure-backed field: `value(x)` and `gradient(x, out)`.
pub struct FnField<F, G> {
    pub dim: usize,
    pub value: F,
    pub gradient: G,
}

impl<F, G> GradientField for FnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, xs: &[f64], values: &mut [f64], grads: Option<&mut [f64]>) {
        let d = self.dim;
        for (i, x) in xs.chunks_exact(d).enumerate() {
            values[i] = (self.value)(x);
        }
        if let Some(g) = grads {
            for (i, x) in xs.chunks_exact(d).enumerate() {
                (self.gradient)(x, &mut g[i * d..(i + 1) * d]);
            }
        }
    }
}

/// `a − b`.
pub struct Difference<A, B>(pub A, pub B);

impl<A: GradientField, B: GradientField> GradientField for Difference<A, B> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn sample(&self, xs: &[f64], values: &mut [f64], grads: Option<&mut [f64]>) {
        let mut other = vec![0.0; values.len()];
        match grads {
            Some(g) => {
                let mut og = vec![0.0; g.len()];
                self.0.sample(xs, values, Some(g));
                self.1.sample(xs, &mut other, Some(&mut og));
                g.iter_mut().zip(&og).for_each(|(a, b)| *a -= b);
            }
            None => {
                self.0.sample(xs, values, None);
                self.1.sample(xs, &mut other, None);
            }
        }
        values.iter_mut().zip(&other).for_each(|(a, b)| *a -= b);
    }
}

impl<T: GradientField + ?Sized> GradientField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn sample(&self, xs: &[f64], values: &mut [f64], grads: Option<&mut [f64]>) {
        (**self).sample(xs, values, grads)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Grid,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Grid => "grid",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    /// Integrability index; `f64::INFINITY` for `p = ∞`.
    pub p: f64,
    pub s: f64,
    pub value: f64,
    pub samples: usize,
    pub seed: u64,
    pub method: Method,
    /// Grid spacing per axis (`0` for pure Monte Carlo).
    pub spacing: f64,
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(invalid("p", "must lie in [1, ∞]"))
    }
}

const CHUNK: usize = 2048;

/// Evaluates `g` on all points, chunked (and parallel with the `parallel`
/// feature). Results do not depend on the chunking.
fn sample_all<G: GradientField + ?Sized>(g: &G, xs: &[f64], with_grad: bool) -> (Vec<f64>, Vec<f64>) {
    let d = g.dim();
    let n = xs.len() / d;
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let parts = crate::exec::map_collect(&starts, |&s| {
        let e = (s + CHUNK).min(n);
        let mut v = vec![0.0; e - s];
        let mut gr = if with_grad { vec![0.0; (e - s) * d] } else { Vec::new() };
        g.sample(&xs[s * d..e * d], &mut v, if with_grad { Some(&mut gr) } else { None });
        (v, gr)
    });
    let mut values = Vec::with_capacity(n);
    let mut grads = Vec::with_capacity(if with_grad { n * d } else { 0 });
    for (v, gr) in parts {
        values.extend(v);
        grads.extend(gr);
    }
    (values, grads)
}

/// Axis shift `frac((seed + j + 1) √2)`.
pub fn axis_shift(seed: u64, j: usize) -> f64 {
    let t = (seed as f64 + j as f64 + 1.0) * core::f64::consts::SQRT_2;
    t - libm::floor(t)
}

/// Points per axis for a total budget of `resolution` points.
pub fn points_per_axis(d: usize, resolution: usize) -> usize {
    let mut k = libm::floor(libm::pow(resolution as f64, 1.0 / d as f64)) as usize;
    while (k + 1).pow(d as u32) <= resolution {
        k += 1;
    }
    while k > 1 && k.pow(d as u32) > resolution {
        k -= 1;
    }
    k.max(1)
}

/// The shifted tensor grid `((k_j + θ_j)/n)_j`, row-major.
pub fn shifted_grid(d: usize, resolution: usize, seed: u64) -> (Vec<f64>, f64) {
    let n = points_per_axis(d, resolution);
    let shifts: Vec<f64> = (0..d).map(|j| axis_shift(seed, j)).collect();
    let total = n.pow(d as u32);
    let mut xs = Vec::with_capacity(total * d);
    for mut lin in 0..total {
        let start = xs.len();
        xs.resize(start + d, 0.0);
        for j in (0..d).rev() {
            let k = lin % n;
            lin /= n;
            xs[start + j] = (k as f64 + shifts[j]) / n as f64;
        }
    }
    (xs, 1.0 / n as f64)
}

fn combine(values: impl Iterator<Item = f64>, p: f64) -> (f64, usize) {
    let mut count = 0;
    if p.is_infinite() {
        let mut m = 0.0f64;
        for v in values {
            m = m.max(v.abs());
            count += 1;
        }
        (m, count)
    } else {
        let mut s = 0.0;
        for v in values {
            s += libm::pow(v.abs(), p);
            count += 1;
        }
        (s / count.max(1) as f64, count)
    }
}

fn root(v: f64, p: f64) -> f64 {
    if p.is_infinite() {
        v
    } else {
        libm::pow(v, 1.0 / p)
    }
}

/// Random pairs in `[0,1]^d`: the first half independent uniform, the
/// second half at log-uniform distances in `[1e-6, 1/2]` from a uniform
/// anchor (reflected back into the cube).
fn sample_pairs(d: usize, pairs: usize, seed: u64, near: bool) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(pairs * d);
    let mut ys = Vec::with_capacity(pairs * d);
    let far = if near { pairs / 2 } else { pairs };
    let mut dir = vec![0.0; d];
    for k in 0..pairs {
        for _ in 0..d {
            xs.push(rng.random::<f64>());
        }
        if k < far {
            for _ in 0..d {
                ys.push(rng.random::<f64>());
            }
        } else {
            let r = libm::pow(10.0, rng.random_range(-6.0..libm::log10(0.5)));
            let mut norm = 0.0;
            for v in dir.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
                norm += *v * *v;
            }
            let norm = libm::sqrt(norm).max(1e-300);
            let x = &xs[k * d..(k + 1) * d];
            for j in 0..d {
                let mut y = x[j] + r * dir[j] / norm;
                if y < 0.0 {
                    y = -y;
                }
                if y > 1.0 {
                    y = 2.0 - y;
                }
                ys.push(y.clamp(0.0, 1.0));
            }
        }
    }
    (xs, ys)
}

/// Fixed sample points for one family of estimates: a shifted grid for the
/// `L^p`/`W^{1,p}` parts and random pairs for Slobodeckij quotients
/// (stratified for `p = ∞`, uniform otherwise). Sampling several fields
/// through one sampler lets differences reuse each field's evaluations.
#[derive(Debug, Clone)]
pub struct Sampler {
    d: usize,
    p: f64,
    seed: u64,
    gradients: bool,
    grid: Vec<f64>,
    spacing: f64,
    pair_x: Vec<f64>,
    pair_y: Vec<f64>,
}

impl Sampler {
    /// `pairs = 0` disables the fractional part.
    pub fn new(d: usize, p: f64, resolution: usize, pairs: usize, gradients: bool, seed: u64) -> Result<Self> {
        check_p(p)?;
        if d == 0 {
            return Err(invalid("d", "must be positive"));
        }
        let (grid, spacing) = shifted_grid(d, resolution, seed);
        let (pair_x, pair_y) = sample_pairs(d, pairs, seed, p.is_infinite());
        Ok(Sampler {
            d,
            p,
            seed,
            gradients,
            grid,
            spacing,
            pair_x,
            pair_y,
        })
    }

    /// Sampler for a single `W^{s,p}` estimate with `budget` points and pairs.
    pub fn for_order(d: usize, s: f64, p: f64, budget: usize, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(invalid("s", "must lie in [0, 1]"));
        }
        let frac = s > 0.0 && s < 1.0;
        Sampler::new(d, p, budget, if frac { budget } else { 0 }, s == 1.0, seed)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sample<G: GradientField + ?Sized>(&self, g: &G) -> Result<Samples> {
        check_dim(self.d, g.dim())?;
        let (values, grads) = sample_all(g, &self.grid, self.gradients);
        let (at_x, _) = sample_all(g, &self.pair_x, false);
        let (at_y, _) = sample_all(g, &self.pair_y, false);
        Ok(Samples {
            values,
            grads,
            at_x,
            at_y,
        })
    }

    fn lp(&self, s: &Samples) -> (f64, usize) {
        combine(s.values.iter().copied(), self.p)
    }

    fn w1(&self, s: &Samples) -> Result<f64> {
        if !self.gradients {
            return Err(invalid("s", "sampler was built without gradients"));
        }
        let d = self.d;
        Ok(if self.p.is_infinite() {
            combine(s.grads.iter().copied(), self.p).0
        } else {
            (0..d).map(|i| combine(s.grads.iter().skip(i).step_by(d).copied(), self.p).0).sum()
        })
    }

    fn slobodeckij(&self, smp: &Samples, s: f64) -> Result<f64> {
        if self.pair_x.is_empty() {
            return Err(invalid("s", "sampler was built without pairs"));
        }
        let d = self.d;
        let p = self.p;
        let quotients = (0..smp.at_x.len()).filter_map(|k| {
            let dist2: f64 = (0..d)
                .map(|j| {
                    let t = self.pair_x[k * d + j] - self.pair_y[k * d + j];
                    t * t
                })
                .sum();
            if dist2 == 0.0 {
                return None;
            }
            let dist = libm::sqrt(dist2);
            let diff = (smp.at_x[k] - smp.at_y[k]).abs();
            Some(if p.is_infinite() {
                diff / libm::pow(dist, s)
            } else {
                diff / libm::pow(dist, s + d as f64 / p)
            })
        });
        Ok(root(combine(quotients, p).0, p))
    }

    fn report(&self, s: f64, value: f64, samples: usize, method: Method) -> NormReport {
        NormReport {
            p: self.p,
            s,
            value,
            samples,
            seed: self.seed,
            method,
            spacing: if method == Method::Grid { self.spacing } else { 0.0 },
        }
    }

    /// `‖g‖_{L^p}`: midpoint-type rule on the shifted grid (`p < ∞`) or its
    /// maximum (`p = ∞`).
    pub fn lp_norm(&self, smp: &Samples) -> NormReport {
        let (v, n) = self.lp(smp);
        self.report(0.0, root(v, self.p), n, Method::Grid)
    }

    /// `|g|_{W^{1,p}}`: max of the partials' sup norms (`p = ∞`), else the
    /// `p`-sum of their `L^p` norms.
    pub fn w1p_seminorm(&self, smp: &Samples) -> Result<NormReport> {
        let w = self.w1(smp)?;
        Ok(self.report(1.0, root(w, self.p), smp.values.len(), Method::Grid))
    }

    pub fn w1p_norm(&self, smp: &Samples) -> Result<NormReport> {
        let (l, n) = self.lp(smp);
        let w = self.w1(smp)?;
        let value = if self.p.is_infinite() { l.max(w) } else { libm::pow(l + w, 1.0 / self.p) };
        Ok(self.report(1.0, value, n, Method::Grid))
    }

    /// Slobodeckij seminorm. `p = ∞`: the largest Hölder quotient
    /// `|g(x) − g(y)| / |x − y|^s` over the pairs; `p < ∞`: Monte Carlo
    /// estimate of `(∫∫ |g(x) − g(y)|^p / |x − y|^{sp + d})^{1/p}`.
    pub fn slobodeckij_seminorm(&self, smp: &Samples, s: f64) -> Result<NormReport> {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid("s", "must lie in (0, 1)"));
        }
        let v = self.slobodeckij(smp, s)?;
        Ok(self.report(s, v, smp.at_x.len(), Method::MonteCarlo))
    }

    /// `‖g‖_{W^{s,p}}` for `s ∈ [0, 1]`.
    pub fn wsp_norm(&self, smp: &Samples, s: f64) -> Result<NormReport> {
        if s == 0.0 {
            Ok(self.lp_norm(smp))
        } else if s == 1.0 {
            self.w1p_norm(smp)
        } else if s > 0.0 && s < 1.0 {
            let l = self.lp_norm(smp);
            let h = self.slobodeckij_seminorm(smp, s)?;
            let p = self.p;
            let value = if p.is_infinite() {
                l.value.max(h.value)
            } else {
                libm::pow(libm::pow(l.value, p) + libm::pow(h.value, p), 1.0 / p)
            };
            Ok(NormReport {
                value,
                s,
                samples: l.samples + h.samples,
                method: Method::MonteCarlo,
                ..l
            })
        } else {
            Err(invalid("s", "must lie in [0, 1]"))
        }
    }
}

/// A field's values at a [`Sampler`]'s points.
#[derive(Debug, Clone)]
pub struct Samples {
    values: Vec<f64>,
    grads: Vec<f64>,
    at_x: Vec<f64>,
    at_y: Vec<f64>,
}

impl Samples {
    /// Samples of `self − other` (same sampler).
    pub fn minus(&self, other: &Samples) -> Samples {
        fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x - y).collect()
        }
        Samples {
            values: sub(&self.values, &other.values),
            grads: sub(&self.grads, &other.grads),
            at_x: sub(&self.at_x, &other.at_x),
            at_y: sub(&self.at_y, &other.at_y),
        }
    }
}

pub fn lp_norm<G: GradientField + ?Sized>(g: &G, p: f64, resolution: usize, seed: u64) -> Result<NormReport> {
    let sm = Sampler::new(g.dim(), p, resolution, 0, false, seed)?;
    Ok(sm.lp_norm(&sm.sample(g)?))
}

pub fn w1p_seminorm<G: GradientField + ?Sized>(g: &G, p: f64, resolution: usize, seed: u64) -> Result<NormReport> {
    let sm = Sampler::new(g.dim(), p, resolution, 0, true, seed)?;
    sm.w1p_seminorm(&sm.sample(g)?)
}

/// `‖g‖_{W^{1,p}}` from one sampling pass.
pub fn w1p_norm<G: GradientField + ?Sized>(g: &G, p: f64, resolution: usize, seed: u64) -> Result<NormReport> {
    let sm = Sampler::new(g.dim(), p, resolution, 0, true, seed)?;
    sm.w1p_norm(&sm.sample(g)?)
}

pub fn slobodeckij_seminorm<G: GradientField + ?Sized>(
    g: &G,
    s: f64,
    p: f64,
    pairs: usize,
    seed: u64,
) -> Result<NormReport> {
    let sm = Sampler::new(g.dim(), p, 1, pairs, false, seed)?;
    sm.slobodeckij_seminorm(&sm.sample(g)?, s)
}

/// `‖g‖_{W^{s,p}}` for `s ∈ [0, 1]`. `budget` is the grid resolution for
/// the `L^p`/`W^{1,p}` parts and the pair count for the fractional part.
pub fn wsp_norm<G: GradientField + ?Sized>(g: &G, s: f64, p: f64, budget: usize, seed: u64) -> Result<NormReport> {
    let sm = Sampler::for_order(g.dim(), s, p, budget, seed)?;
    sm.wsp_norm(&sm.sample(g)?, s)
}

/// `‖R(net) − f‖_{W^{s,p}((0,1)^d)}`.
pub fn wsp_error(
    net: &Network,
    f: &dyn DifferentiableFunction,
    s: f64,
    p: f64,
    budget: usize,
    seed: u64,
) -> Result<NormReport> {
    check_dim(f.dim(), net.input_dim())?;
    let diff = Difference(NetworkField::new(net)?, FunctionField(f));
    wsp_norm(&diff, s, p, budget, seed)
}
