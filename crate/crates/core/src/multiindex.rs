//! Multi-indices `α ∈ ℕ^d` and grid indices `m ∈ {0,…,N}^d`.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, i: usize) -> Self {
        let mut a = vec![0; d];
        a[i] = 1;
        MultiIndex(a)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total order `|α|`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| factorial(k)).product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `x^α`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (&k, &xi) in self.0.iter().zip(x) {
            for _ in 0..k {
                v *= xi;
            }
        }
        v
    }

    /// `x^α` together with its gradient.
    pub fn monomial_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let v = self.monomial(x);
        for (i, (gi, &k)) in grad.iter_mut().zip(&self.0).enumerate() {
            *gi = if k == 0 {
                0.0
            } else {
                let mut g = k as f64;
                for (j, (&kj, &xj)) in self.0.iter().zip(x).enumerate() {
                    let e = if j == i { kj - 1 } else { kj };
                    for _ in 0..e {
                        g *= xj;
                    }
                }
                g
            };
        }
        v
    }
}

/// All `α ∈ ℕ^d` with `|α| ≤ max_order`, lexicographically ascending.
pub fn multi_indices(d: usize, max_order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; d];
    fill(&mut out, &mut cur, 0, max_order);
    out
}

fn fill(out: &mut Vec<MultiIndex>, cur: &mut Vec<usize>, pos: usize, budget: usize) {
    if pos == cur.len() {
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for k in 0..=budget {
        cur[pos] = k;
        fill(out, cur, pos + 1, budget - k);
    }
    cur[pos] = 0;
}

/// All grid indices `m ∈ {0,…,n_grid}^d`, lexicographically ascending.
pub fn grid_indices(d: usize, n_grid: usize) -> Vec<Vec<usize>> {
    let total = (n_grid + 1).pow(d as u32);
    (0..total)
        .map(|mut lin| {
            let mut m = vec![0; d];
            for i in (0..d).rev() {
                m[i] = lin % (n_grid + 1);
                lin /= n_grid + 1;
            }
            m
        })
        .collect()
}

/// `k!`, exact in integers up to 20 and as a float product beyond.
pub fn factorial(k: usize) -> f64 {
    if k <= 20 {
        (1..=k as u64).product::<u64>() as f64
    } else {
        (21..=k).fold(factorial(20), |acc, j| acc * j as f64)
    }
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 60 {
        let mut c: u128 = 1;
        for j in 0..k as u128 {
            c = c * (n as u128 - j) / (j + 1);
        }
        c as f64
    } else {
        (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
    }
}
