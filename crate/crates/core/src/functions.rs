//! Target functions with partial derivatives, evaluated through jets.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::jet::{Jet, JetSpace};
use crate::multiindex::{multi_indices, MultiIndex};

/// A target `f` with all partial derivatives available on the enlarged
/// domain `[-1, 2]^d`.
pub trait DifferentiableFunction: Send + Sync {
    fn dim(&self) -> usize;

    /// Taylor jet of `f` at `x` in the given space (whose order bounds the
    /// available derivatives).
    fn jet<'a>(&self, space: &'a JetSpace, x: &[f64]) -> Jet<'a>;

    fn value(&self, x: &[f64]) -> f64 {
        let s = JetSpace::new(self.dim(), 0);
        self.jet(&s, x).value()
    }

    /// Value, writing `∇f(x)` into `grad`.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let s = JetSpace::new(self.dim(), 1);
        let j = self.jet(&s, x);
        let c = j.coefficients();
        for (i, a) in s.indices().iter().enumerate().skip(1) {
            let axis = a.0.iter().position(|&k| k == 1).expect("first-order index");
            grad[axis] = c[i];
        }
        c[0]
    }

    /// A known upper bound for `‖f‖_{W^{n,∞}((0,1)^d)}`, if any.
    fn sobolev_bound(&self, _n: usize) -> Option<f64> {
        None
    }

    fn name(&self) -> &str {
        "f"
    }
}

type JetFn = dyn for<'a> Fn(&[Jet<'a>]) -> Jet<'a> + Send + Sync;
type BoundFn = dyn Fn(usize) -> f64 + Send + Sync;

/// A function given by a closure over coordinate jets.
#[derive(Clone)]
pub struct ExprFunction {
    name: String,
    dim: usize,
    f: Arc<JetFn>,
    bound: Option<Arc<BoundFn>>,
    first: Arc<(JetSpace, JetSpace)>,
}

impl core::fmt::Debug for ExprFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ExprFunction").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

impl ExprFunction {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        f: impl for<'a> Fn(&[Jet<'a>]) -> Jet<'a> + Send + Sync + 'static,
    ) -> Self {
        ExprFunction {
            name: name.into(),
            dim,
            f: Arc::new(f),
            bound: None,
            first: Arc::new((JetSpace::new(dim, 0), JetSpace::new(dim, 1))),
        }
    }

    pub fn with_sobolev_bound(mut self, b: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        self.bound = Some(Arc::new(b));
        self
    }
}

impl DifferentiableFunction for ExprFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet<'a>(&self, space: &'a JetSpace, x: &[f64]) -> Jet<'a> {
        (self.f)(&space.variables(x))
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.jet(&self.first.0, x).value()
    }

    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let s = &self.first.1;
        let j = self.jet(s, x);
        let c = j.coefficients();
        for (i, a) in s.indices().iter().enumerate().skip(1) {
            let axis = a.0.iter().position(|&k| k == 1).expect("first-order index");
            grad[axis] = c[i];
        }
        c[0]
    }

    fn sobolev_bound(&self, n: usize) -> Option<f64> {
        self.bound.as_ref().map(|b| b(n))
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// `sin(2π x)` on `d = 1`; `‖·‖_{W^{n,∞}} = (2π)^n`.
pub fn sin_wave() -> ExprFunction {
    ExprFunction::new("sin1", 1, |x| x[0].clone().scale(2.0 * PI).sin())
        .with_sobolev_bound(|n| libm::pow(2.0 * PI, n as f64))
}

/// `sin(2π x₁) cos(2π x₂)` on `d = 2`; all derivatives of order `k` are
/// bounded by `(2π)^k`.
pub fn sin_cos() -> ExprFunction {
    ExprFunction::new("sin2", 2, |x| {
        x[0].clone().scale(2.0 * PI).sin() * x[1].clone().scale(2.0 * PI).cos()
    })
    .with_sobolev_bound(|n| libm::pow(2.0 * PI, n as f64))
}

/// `exp(−8 |x − ½|²)` in any dimension.
pub fn gaussian_bump(d: usize) -> ExprFunction {
    ExprFunction::new("gaussian-bump", d, |x| {
        let mut r2 = x[0].space().constant(0.0);
        for xi in x {
            let c = xi.clone().add_const(-0.5);
            r2 = r2 + &c * &c;
        }
        r2.scale(-8.0).exp()
    })
}

/// `Σ c_β x^β`. The Sobolev bound uses `|D^α x^β| ≤ β!/(β−α)!` on `[0,1]^d`.
pub fn polynomial(d: usize, terms: Vec<(MultiIndex, f64)>) -> ExprFunction {
    let terms = Arc::new(terms);
    let t2 = terms.clone();
    let name = if terms.iter().all(|(b, _)| b.order() == 0) { "constant" } else { "polynomial" };
    ExprFunction::new(name.to_string(), d, move |x| {
        let mut acc = x[0].space().constant(0.0);
        for (beta, c) in terms.iter() {
            let mut m = x[0].space().constant(*c);
            for (xi, &k) in x.iter().zip(&beta.0) {
                if k > 0 {
                    m = &m * &xi.powi(k as u32);
                }
            }
            acc = acc + m;
        }
        acc
    })
    .with_sobolev_bound(move |n| {
        multi_indices(d, n)
            .iter()
            .map(|alpha| {
                t2.iter()
                    .filter(|(b, _)| b.0.iter().zip(&alpha.0).all(|(bi, ai)| bi >= ai))
                    .map(|(b, c)| {
                        let falling: f64 = b
                            .0
                            .iter()
                            .zip(&alpha.0)
                            .map(|(&bi, &ai)| ((bi - ai + 1)..=bi).map(|k| k as f64).product::<f64>())
                            .product();
                        c.abs() * falling
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    })
}

pub fn constant(d: usize, c: f64) -> ExprFunction {
    polynomial(d, alloc::vec![(MultiIndex::zero(d), c)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fd_check(f: &dyn DifferentiableFunction, x: &[f64]) {
        let s = JetSpace::new(f.dim(), 2);
        let j = f.jet(&s, x);
        let h = 1e-5;
        for i in 0..f.dim() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
            assert!((fd - j.derivative(&MultiIndex::unit(f.dim(), i))).abs() < 1e-7);
            // second derivative from first-derivative differences
            let mut gp = vec![0.0; f.dim()];
            let mut gm = vec![0.0; f.dim()];
            f.value_and_gradient(&xp, &mut gp);
            f.value_and_gradient(&xm, &mut gm);
            let mut a = MultiIndex::zero(f.dim());
            a.0[i] = 2;
            assert!(((gp[i] - gm[i]) / (2.0 * h) - j.derivative(&a)).abs() < 1e-5);
        }
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        fd_check(&sin_wave(), &[0.3]);
        fd_check(&sin_cos(), &[0.3, -0.7]);
        fd_check(&gaussian_bump(2), &[0.1, 0.9]);
        fd_check(&polynomial(2, vec![(MultiIndex(vec![2, 1]), 1.5), (MultiIndex(vec![0, 0]), -1.0)]), &[0.4, 1.3]);
    }

    #[test]
    fn metadata() {
        assert!((sin_wave().sobolev_bound(2).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
        let p = polynomial(1, vec![(MultiIndex(vec![2]), 1.0)]);
        assert_eq!(p.sobolev_bound(2), Some(2.0));
        assert_eq!(p.sobolev_bound(3), Some(2.0));
        assert_eq!(constant(2, 5.0).value(&[0.3, 0.2]), 5.0);
        assert!(gaussian_bump(1).sobolev_bound(2).is_none());
    }
}
