//! Realizations with weak gradients, batched evaluation and affine pieces
//! along lines.
//!
//! Kink convention: `ρ'(0) := 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::network::{relu, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: Vec<f64>,
    /// `output_dim × input_dim`.
    pub jacobian: Vec<Vec<f64>>,
    /// Some hidden pre-activation was exactly zero.
    pub on_kink: bool,
}

/// Value and Jacobian by forward-mode propagation through the layers.
pub fn eval_with_jacobian(net: &Network, x: &[f64]) -> Result<EvalResult> {
    let d = net.input_dim();
    check_dim(d, x.len())?;
    let total = net.neuron_count();
    let mut val = Vec::with_capacity(total);
    let mut der = vec![0.0; total * d];
    val.extend_from_slice(x);
    for i in 0..d {
        der[i * d + i] = 1.0;
    }
    let last = net.num_layers() - 1;
    let mut on_kink = false;
    let mut grad = vec![0.0; d];
    for (l, layer) in net.layers().iter().enumerate() {
        for r in 0..layer.rows() {
            let (c, v) = layer.row(r);
            let mut acc = 0.0;
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (&j, &w) in c.iter().zip(v) {
                acc += w * val[j];
                for (g, &dj) in grad.iter_mut().zip(&der[j * d..(j + 1) * d]) {
                    *g += w * dj;
                }
            }
            acc += layer.bias()[r];
            let idx = val.len();
            if l < last {
                if acc == 0.0 {
                    on_kink = true;
                }
                if acc > 0.0 {
                    der[idx * d..(idx + 1) * d].copy_from_slice(&grad);
                }
                val.push(relu(acc));
            } else {
                der[idx * d..(idx + 1) * d].copy_from_slice(&grad);
                val.push(acc);
            }
        }
    }
    let out = net.output_dim();
    let start = total - out;
    Ok(EvalResult {
        value: val[start..].to_vec(),
        jacobian: (start..total).map(|i| der[i * d..(i + 1) * d].to_vec()).collect(),
        on_kink,
    })
}

/// Central differences `(R(x + h e_j) − R(x − h e_j)) / 2h`, one column per input.
pub fn finite_difference_jacobian(net: &Network, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    check_dim(net.input_dim(), x.len())?;
    if !(h > 0.0) {
        return Err(invalid("h", "step must be positive"));
    }
    let mut jac = vec![vec![0.0; x.len()]; net.output_dim()];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let fp = net.realize(&xp)?;
        xp[j] = x[j] - h;
        let fm = net.realize(&xp)?;
        xp[j] = x[j];
        for (row, (a, b)) in jac.iter_mut().zip(fp.iter().zip(&fm)) {
            row[j] = (a - b) / (2.0 * h);
        }
    }
    Ok(jac)
}

const LANE_BUDGET: usize = 1 << 22;

/// Evaluates many points at once, neuron-major, so the inner loops run over
/// contiguous lanes. Per point, results are bit-identical to
/// [`Network::realize`] and [`eval_with_jacobian`].
pub struct BatchEvaluator<'a> {
    net: &'a Network,
    buf: Vec<f64>,
}

impl<'a> BatchEvaluator<'a> {
    pub fn new(net: &'a Network) -> Self {
        BatchEvaluator {
            net,
            buf: Vec::new(),
        }
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    fn lanes(&self, channels: usize) -> usize {
        (LANE_BUDGET / (self.net.neuron_count() * channels)).clamp(1, 32)
    }

    /// `xs` holds points row-major (`input_dim` each); `out` receives
    /// `output_dim` values per point.
    pub fn values(&mut self, xs: &[f64], out: &mut [f64]) -> Result<()> {
        self.run(xs, out, None)
    }

    /// Like [`values`](Self::values), additionally writing each point's
    /// Jacobian row-major into `jac` (`output_dim × input_dim` per point).
    pub fn values_and_jacobians(&mut self, xs: &[f64], out: &mut [f64], jac: &mut [f64]) -> Result<()> {
        self.run(xs, out, Some(jac))
    }

    fn run(&mut self, xs: &[f64], out: &mut [f64], mut jac: Option<&mut [f64]>) -> Result<()> {
        let net = self.net;
        let d = net.input_dim();
        let od = net.output_dim();
        if !xs.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: xs.len() % d,
            });
        }
        let npts = xs.len() / d;
        check_dim(npts * od, out.len())?;
        let ch = if jac.is_some() { 1 + d } else { 1 };
        if let Some(j) = jac.as_deref() {
            check_dim(npts * od * d, j.len())?;
        }
        let lanes = self.lanes(ch);
        let stride = ch * lanes;
        let total = net.neuron_count();
        self.buf.clear();
        self.buf.resize(total * stride, 0.0);
        let last = net.num_layers() - 1;
        let mut p0 = 0;
        while p0 < npts {
            let b = lanes.min(npts - p0);
            for i in 0..d {
                let base = i * stride;
                for p in 0..lanes {
                    self.buf[base + p] = if p < b { xs[(p0 + p) * d + i] } else { 0.0 };
                }
                for k in 1..ch {
                    let off = base + k * lanes;
                    let one = if k - 1 == i { 1.0 } else { 0.0 };
                    self.buf[off..off + lanes].iter_mut().for_each(|v| *v = one);
                }
            }
            let mut row_at = d;
            for (l, layer) in net.layers().iter().enumerate() {
                for r in 0..layer.rows() {
                    let (c, v) = layer.row(r);
                    // Sources always precede the row being written.
                    let (src_all, rest) = self.buf.split_at_mut(row_at * stride);
                    let acc = &mut rest[..stride];
                    acc.iter_mut().for_each(|a| *a = 0.0);
                    for (&j, &w) in c.iter().zip(v) {
                        let src = &src_all[j * stride..(j + 1) * stride];
                        for (a, &s) in acc.iter_mut().zip(src) {
                            *a += w * s;
                        }
                    }
                    let bias = layer.bias()[r];
                    for a in acc[..lanes].iter_mut() {
                        *a += bias;
                    }
                    if l < last {
                        for p in 0..lanes {
                            if !(acc[p] > 0.0) {
                                for k in 0..ch {
                                    acc[k * lanes + p] = 0.0;
                                }
                            }
                        }
                    }
                    row_at += 1;
                }
            }
            let first_out = total - od;
            for o in 0..od {
                let base = (first_out + o) * stride;
                for p in 0..b {
                    out[(p0 + p) * od + o] = self.buf[base + p];
                }
                if let Some(jm) = jac.as_deref_mut() {
                    for i in 0..d {
                        let off = base + (1 + i) * lanes;
                        for p in 0..b {
                            jm[((p0 + p) * od + o) * d + i] = self.buf[off + p];
                        }
                    }
                }
            }
            p0 += b;
        }
        Ok(())
    }
}

/// Limits for [`line_breakpoints_with`].
#[derive(Debug, Clone, Copy)]
pub struct LineOptions {
    /// Maximum number of activation-pattern changes walked.
    pub budget: usize,
    /// Stop once this many breakpoints were found.
    pub max_breakpoints: usize,
}

impl Default for LineOptions {
    fn default() -> Self {
        LineOptions {
            budget: 1_000_000,
            max_breakpoints: usize::MAX,
        }
    }
}

/// Parameters `t ∈ (0, t_max)` where `t ↦ R(x0 + t v)` switches affine piece.
pub fn line_restriction_breakpoints(net: &Network, x0: &[f64], v: &[f64], t_max: f64) -> Result<Vec<f64>> {
    line_breakpoints_with(net, x0, v, t_max, LineOptions::default())
}

/// Walks the line piece by piece. On each piece the activation pattern is
/// fixed, so every pre-activation is affine in `t` and the next pattern change
/// is the nearest root. Only changes that alter the output slope are
/// reported.
pub fn line_breakpoints_with(
    net: &Network,
    x0: &[f64],
    v: &[f64],
    t_max: f64,
    opts: LineOptions,
) -> Result<Vec<f64>> {
    let d = net.input_dim();
    check_dim(d, x0.len())?;
    check_dim(d, v.len())?;
    if !(t_max > 0.0) {
        return Err(invalid("t_max", "must be positive"));
    }
    if v.iter().all(|&c| c == 0.0) {
        return Err(invalid("v", "direction must be nonzero"));
    }
    let total = net.neuron_count();
    let od = net.output_dim();
    let last = net.num_layers() - 1;
    let mut z = vec![0.0; total];
    let mut dz = vec![0.0; total];
    let mut breaks = Vec::new();
    let mut prev_slope: Option<Vec<f64>> = None;
    let mut t = 0.0;
    for _ in 0..opts.budget {
        for i in 0..d {
            z[i] = x0[i] + t * v[i];
            dz[i] = v[i];
        }
        let mut step = f64::INFINITY;
        let mut at = d;
        for (l, layer) in net.layers().iter().enumerate() {
            for r in 0..layer.rows() {
                let (c, w) = layer.row(r);
                let (mut a, mut da, mut scale) = (0.0, 0.0, layer.bias()[r].abs());
                for (&j, &wj) in c.iter().zip(w) {
                    a += wj * z[j];
                    da += wj * dz[j];
                    scale += (wj * z[j]).abs();
                }
                a += layer.bias()[r];
                if l < last {
                    let tol = 1e-11 * (1.0 + scale);
                    let active = a > tol || (a.abs() <= tol && da > 0.0);
                    if active {
                        if da < 0.0 {
                            step = step.min(a / -da);
                        }
                        z[at] = a;
                        dz[at] = da;
                    } else {
                        if a < -tol && da > 0.0 {
                            step = step.min(-a / da);
                        }
                        z[at] = 0.0;
                        dz[at] = 0.0;
                    }
                } else {
                    z[at] = a;
                    dz[at] = da;
                }
                at += 1;
            }
        }
        let slope = &dz[total - od..];
        let changed = match &prev_slope {
            None => false,
            Some(p) => p
                .iter()
                .zip(slope)
                .any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs()))),
        };
        if changed {
            breaks.push(t);
            if breaks.len() >= opts.max_breakpoints {
                return Ok(breaks);
            }
        }
        if prev_slope.is_none() || changed {
            prev_slope = Some(slope.to_vec());
        }
        let next = t + step.max(1e-15 * (1.0 + t.abs()));
        if !(next < t_max) {
            return Ok(breaks);
        }
        t = next;
    }
    Err(Error::BudgetExceeded {
        budget: opts.budget,
        context: "line restriction walk",
    })
}
