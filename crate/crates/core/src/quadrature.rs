//! Gauss–Legendre rules and their tensor products on boxes.

use alloc::vec;
use alloc::vec::Vec;

/// Nodes and weights of the `q`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on the three-term recurrence.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let pi = core::f64::consts::PI;
    for i in 0..q.div_ceil(2) {
        let mut x = libm::cos(pi * (i as f64 + 0.75) / (q as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_q(x), P_q'(x))`.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss–Legendre rule on `Π [lo_i, hi_i]`.
#[derive(Debug, Clone)]
pub struct TensorRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TensorRule {
    pub fn on_box(lo: &[f64], hi: &[f64], q: usize) -> Self {
        let (x, w) = gauss_legendre(q);
        let d = lo.len();
        let total = q.pow(d as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for mut lin in 0..total {
            let mut p = vec![0.0; d];
            let mut wt = 1.0;
            for i in (0..d).rev() {
                let k = lin % q;
                lin /= q;
                let half = 0.5 * (hi[i] - lo[i]);
                p[i] = lo[i] + half * (x[k] + 1.0);
                wt *= half * w[k];
            }
            points.push(p);
            weights.push(wt);
        }
        TensorRule { points, weights }
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, &w)| w * f(p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        for q in 1..=24 {
            let (x, w) = gauss_legendre(q);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..2 * q {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let approx: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * libm::pow(xi, deg as f64)).sum();
                assert!((approx - exact).abs() < 1e-13, "q={q} deg={deg}");
            }
        }
    }

    #[test]
    fn tensor_box() {
        let r = TensorRule::on_box(&[0.0, 1.0], &[2.0, 4.0], 3);
        let v = r.integrate(|p| p[0] * p[1] * p[1]);
        // ∫0^2 x dx ∫1^4 y² dy = 2 · 21
        assert!((v - 42.0).abs() < 1e-12);
    }
}
