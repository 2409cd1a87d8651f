//! Truncated multivariate Taylor arithmetic. A [`Jet`] stores the Taylor
//! coefficients `D^α f(x0) / α!` for `|α| ≤ K`, so one evaluation yields every
//! partial derivative up to order `K`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::multiindex::{multi_indices, MultiIndex};

/// Index set `{α : |α| ≤ K}` in `d` variables with its product table.
#[derive(Debug, Clone)]
pub struct JetSpace {
    d: usize,
    order: usize,
    indices: Vec<MultiIndex>,
    /// `(i, j, k)` with `α_i + α_j = α_k`.
    products: Vec<(u32, u32, u32)>,
}

impl JetSpace {
    pub fn new(d: usize, order: usize) -> Self {
        let indices = multi_indices(d, order);
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if a.order() + b.order() <= order {
                    let s = a.add(b);
                    let k = indices.iter().position(|c| *c == s).expect("closed under addition");
                    products.push((i as u32, j as u32, k as u32));
                }
            }
        }
        JetSpace {
            d,
            order,
            indices,
            products,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The multi-indices in storage order (lexicographic).
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.indices.iter().position(|a| a == alpha)
    }

    pub fn constant(&self, c: f64) -> Jet<'_> {
        let mut v = vec![0.0; self.len()];
        v[0] = c;
        Jet { space: self, c: v }
    }

    /// The coordinate function `x_i` expanded at `value`.
    pub fn variable(&self, i: usize, value: f64) -> Jet<'_> {
        let mut j = self.constant(value);
        if self.order >= 1 {
            let e = MultiIndex::unit(self.d, i);
            let k = self.index_of(&e).expect("order ≥ 1");
            j.c[k] = 1.0;
        }
        j
    }

    /// All coordinate functions expanded at `x`.
    pub fn variables(&self, x: &[f64]) -> Vec<Jet<'_>> {
        x.iter().enumerate().map(|(i, &xi)| self.variable(i, xi)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Jet<'a> {
    space: &'a JetSpace,
    c: Vec<f64>,
}

impl<'a> Jet<'a> {
    pub fn space(&self) -> &'a JetSpace {
        self.space
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Raw Taylor coefficients in [`JetSpace::indices`] order.
    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// `D^α f` at the expansion point.
    pub fn derivative(&self, alpha: &MultiIndex) -> f64 {
        let k = self.space.index_of(alpha).expect("α within jet order");
        self.c[k] * alpha.factorial()
    }

    /// All partial derivatives, in [`JetSpace::indices`] order.
    pub fn derivatives(&self) -> Vec<f64> {
        self.c
            .iter()
            .zip(self.space.indices())
            .map(|(c, a)| c * a.factorial())
            .collect()
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.c.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn add_const(mut self, s: f64) -> Self {
        self.c[0] += s;
        self
    }

    fn mul_ref(&self, other: &Jet<'a>) -> Jet<'a> {
        let mut out = vec![0.0; self.c.len()];
        for &(i, j, k) in &self.space.products {
            out[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        Jet {
            space: self.space,
            c: out,
        }
    }

    /// `g(self)` from the derivatives `g(u0), g'(u0), …, g^{(K)}(u0)`.
    pub fn compose(&self, derivs: &[f64]) -> Jet<'a> {
        let k = self.space.order;
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut acc = self.space.constant(derivs[k] / crate::multiindex::factorial(k));
        for j in (0..k).rev() {
            acc = acc.mul_ref(&h);
            acc.c[0] += derivs[j] / crate::multiindex::factorial(j);
        }
        acc
    }

    pub fn exp(&self) -> Jet<'a> {
        let e = libm::exp(self.c[0]);
        self.compose(&vec![e; self.space.order + 1])
    }

    pub fn sin(&self) -> Jet<'a> {
        let (s, c) = (libm::sin(self.c[0]), libm::cos(self.c[0]));
        let d: Vec<f64> = (0..=self.space.order).map(|k| [s, c, -s, -c][k % 4]).collect();
        self.compose(&d)
    }

    pub fn cos(&self) -> Jet<'a> {
        let (s, c) = (libm::sin(self.c[0]), libm::cos(self.c[0]));
        let d: Vec<f64> = (0..=self.space.order).map(|k| [c, -s, -c, s][k % 4]).collect();
        self.compose(&d)
    }

    pub fn recip(&self) -> Jet<'a> {
        let u = self.c[0];
        let mut d = Vec::with_capacity(self.space.order + 1);
        let mut v = 1.0 / u;
        for k in 0..=self.space.order {
            d.push(v);
            v *= -((k + 1) as f64) / u;
        }
        self.compose(&d)
    }

    pub fn powi(&self, k: u32) -> Jet<'a> {
        let mut acc = self.space.constant(1.0);
        for _ in 0..k {
            acc = acc.mul_ref(self);
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }
}

impl<'a> Add for Jet<'a> {
    type Output = Jet<'a>;
    fn add(mut self, rhs: Jet<'a>) -> Jet<'a> {
        self.c.iter_mut().zip(&rhs.c).for_each(|(a, b)| *a += b);
        self
    }
}

impl<'a> Add<&Jet<'a>> for Jet<'a> {
    type Output = Jet<'a>;
    fn add(mut self, rhs: &Jet<'a>) -> Jet<'a> {
        self.c.iter_mut().zip(&rhs.c).for_each(|(a, b)| *a += b);
        self
    }
}

impl<'a> Sub for Jet<'a> {
    type Output = Jet<'a>;
    fn sub(mut self, rhs: Jet<'a>) -> Jet<'a> {
        self.c.iter_mut().zip(&rhs.c).for_each(|(a, b)| *a -= b);
        self
    }
}

impl<'a> Sub<&Jet<'a>> for Jet<'a> {
    type Output = Jet<'a>;
    fn sub(mut self, rhs: &Jet<'a>) -> Jet<'a> {
        self.c.iter_mut().zip(&rhs.c).for_each(|(a, b)| *a -= b);
        self
    }
}

impl<'a> Mul for Jet<'a> {
    type Output = Jet<'a>;
    fn mul(self, rhs: Jet<'a>) -> Jet<'a> {
        self.mul_ref(&rhs)
    }
}

impl<'a> Mul<&Jet<'a>> for &Jet<'a> {
    type Output = Jet<'a>;
    fn mul(self, rhs: &Jet<'a>) -> Jet<'a> {
        self.mul_ref(rhs)
    }
}

impl<'a> Mul<f64> for Jet<'a> {
    type Output = Jet<'a>;
    fn mul(self, rhs: f64) -> Jet<'a> {
        self.scale(rhs)
    }
}

impl<'a> Add<f64> for Jet<'a> {
    type Output = Jet<'a>;
    fn add(self, rhs: f64) -> Jet<'a> {
        self.add_const(rhs)
    }
}

impl<'a> Neg for Jet<'a> {
    type Output = Jet<'a>;
    fn neg(self) -> Jet<'a> {
        self.scale(-1.0)
    }
}
