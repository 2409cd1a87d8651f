//! Acceptance run: one PASS/FAIL line per criterion, run sequentially so the
//! wall-clock limits are measured without contention.
//!
//! A failing criterion is reported but only fails the process when
//! `SOBONET_STRICT_ACCEPTANCE` is set, so a workspace test run still reaches
//! the other targets.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sobonet::json::{network_from_str, network_to_string};
use sobonet_core::approximator::{
    build_approximant, fit_complexity_exponent, fit_complexity_exponent_nominal, least_squares_slope, ApproxConfig,
};
use sobonet_core::constructions::{multiplication_network, squaring_network};
use sobonet_core::eval::eval_with_jacobian;
use sobonet_core::functions::{sin_cos, sin_wave, DifferentiableFunction};
use sobonet_core::lb_probe::{all_patterns, probe_lower_bound, BumpFamily};
use sobonet_core::metrics::{FunctionField, Sampler};
use sobonet_core::network::{random_network, RandomNetworkSpec};
use sobonet_core::network::{concatenate, parallelize, sparse_concatenate, to_standard};
use sobonet_core::taylor::{build_patches, default_quadrature_order, LocalizedSum};
use sobonet_core::Network;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn squaring() -> Outcome {
    let mut worst_val = 0.0f64;
    let mut worst_der = 0.0f64;
    for m in 1..=12u32 {
        let net = squaring_network(m).map_err(|e| e.to_string())?;
        let h = 0.5f64.powi(m as i32);
        let mut max_err = 0.0f64;
        for k in 0..(1usize << m) {
            let x = (k as f64 + 0.5) * h;
            max_err = max_err.max((net.realize_scalar(&[x]).unwrap() - x * x).abs());
        }
        let last = 1.0 - h / 2.0;
        let slope = eval_with_jacobian(&net, &[last]).unwrap().jacobian[0][0];
        let der_err = (slope - 2.0).abs();
        worst_val = worst_val.max((max_err - 0.25 * h * h).abs());
        worst_der = worst_der.max((der_err - h).abs());
    }
    check(
        worst_val <= 1e-12 && worst_der <= 1e-12,
        format!("max deviation from 2^(-2-2m): {worst_val:.1e}, from 2^(-m): {worst_der:.1e}"),
    )
}

fn multiplication() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let eps_list = [1e-1, 1e-2, 1e-3];
    let mut notes = Vec::new();
    let mut ok = true;
    for &mb in &[1.0, 5.0] {
        let mut sizes = Vec::new();
        let mut worst = 0.0f64;
        let mut worst_zero = 0.0f64;
        for &eps in &eps_list {
            let net = multiplication_network(mb, eps).map_err(|e| e.to_string())?;
            let mut val = 0.0f64;
            let mut grad = 0.0f64;
            for _ in 0..10_000 {
                let x = rng.random_range(-mb..mb);
                let y = rng.random_range(-mb..mb);
                let r = eval_with_jacobian(&net, &[x, y]).unwrap();
                val = val.max((r.value[0] - x * y).abs());
                grad = grad.max((r.jacobian[0][0] - y).abs()).max((r.jacobian[0][1] - x).abs());
                let t = rng.random_range(-mb..mb);
                worst_zero = worst_zero
                    .max(net.realize_scalar(&[0.0, t]).unwrap().abs())
                    .max(net.realize_scalar(&[t, 0.0]).unwrap().abs());
            }
            ok &= val <= eps && grad <= eps;
            worst = worst.max(val.max(grad) / eps);
            sizes.push((f64::log2(1.0 / eps), net.weight_count() as f64));
        }
        // increments of M per bit of accuracy on consecutive eps pairs
        let b1 = least_squares_slope(&sizes[0..2]);
        let b2 = least_squares_slope(&sizes[1..3]);
        let stable = b1 > 0.0 && b2 > 0.0 && b1.max(b2) / b1.min(b2) <= 2.0;
        ok &= worst_zero <= 1e-12 && stable;
        notes.push(format!(
            "M_box={mb}: worst err/eps {worst:.3}, zero-line {worst_zero:.0e}, M={:?}, b={b1:.1}/{b2:.1}",
            sizes.iter().map(|s| s.1 as usize).collect::<Vec<_>>()
        ));
    }
    check(ok, notes.join("; "))
}

fn random_spec<R: Rng>(rng: &mut R, d: usize, out: usize) -> RandomNetworkSpec {
    let depth = rng.random_range(1..=4usize);
    let mut widths: Vec<usize> = (0..depth - 1).map(|_| rng.random_range(1..=5)).collect();
    widths.push(out);
    RandomNetworkSpec::new(d, widths, rng.random_range(0.3..1.0))
}

fn random_net<R: Rng>(rng: &mut R, d: usize, out: usize) -> Network {
    let spec = random_spec(rng, d, out);
    random_network(rng, &spec)
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + y.abs()))
}

fn random_point<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn calculus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut fails = Vec::new();
    for trial in 0..200 {
        let d = rng.random_range(1..=3);
        let k = rng.random_range(1..=3);
        let e = rng.random_range(1..=3);
        let g = random_net(&mut rng, d, k);
        let f = random_net(&mut rng, k, e);
        let h = {
            let out = rng.random_range(1..=3);
            random_net(&mut rng, d, out)
        };
        let fg = concatenate(&f, &g).map_err(|e| e.to_string())?;
        let sfg = sparse_concatenate(&f, &g).map_err(|e| e.to_string())?;
        let par = parallelize(&[g.clone(), h.clone()]).map_err(|e| e.to_string())?;
        let mut ok = fg.num_layers() == f.num_layers() + g.num_layers() - 1
            && sfg.num_layers() == f.num_layers() + g.num_layers()
            && sfg.weight_count() <= 2 * f.weight_count() + 2 * g.weight_count()
            && sfg.neuron_count() <= 2 * f.neuron_count() + 2 * g.neuron_count()
            && par.num_layers() == g.num_layers().max(h.num_layers())
            && par.weight_count() == g.weight_count() + h.weight_count()
            && par.neuron_count() == g.neuron_count() + h.neuron_count() - d;
        for _ in 0..10 {
            let x = random_point(&mut rng, d);
            let inner = g.realize(&x).unwrap();
            let want = f.realize(&inner).unwrap();
            let mut stacked = inner.clone();
            stacked.extend(h.realize(&x).unwrap());
            ok &= close(&fg.realize(&x).unwrap(), &want)
                && close(&sfg.realize(&x).unwrap(), &want)
                && close(&par.realize(&x).unwrap(), &stacked);
        }
        if !ok {
            fails.push(trial);
        }
    }
    check(fails.is_empty(), format!("200 pairs, failing trials {fails:?}"))
}

fn standardization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut fails = Vec::new();
    let mut worst_n = 0.0f64;
    for trial in 0..100 {
        let d = rng.random_range(1..=3);
        let out = rng.random_range(1..=3);
        let net = random_net(&mut rng, d, out);
        let st = to_standard(&net).map_err(|e| e.to_string())?;
        let (l, n, m) = (net.num_layers(), net.neuron_count(), net.weight_count());
        let mut ok = st.is_standard()
            && st.num_layers() == l
            && st.neuron_count() <= 2 * l * n
            && st.weight_count() <= 2 * (l * n + m);
        worst_n = worst_n.max(st.neuron_count() as f64 / (2 * l * n) as f64);
        for _ in 0..100 {
            let x = random_point(&mut rng, d);
            ok &= close(&st.realize(&x).unwrap(), &net.realize(&x).unwrap());
        }
        if !ok {
            fails.push(trial);
        }
    }
    check(
        fails.is_empty(),
        format!("100 networks, max N_st/(2LN) = {worst_n:.3}, failing trials {fails:?}"),
    )
}

/// Sup error and sup gradient error of the localized sum for each grid.
fn decay_errors(f: &dyn DifferentiableFunction, n: usize, grids: &[usize]) -> Result<Vec<(f64, f64)>, String> {
    let d = f.dim();
    let sampler = Sampler::new(d, f64::INFINITY, 40_000, 0, true, 5).map_err(|e| e.to_string())?;
    let at_f = sampler.sample(&FunctionField(f)).map_err(|e| e.to_string())?;
    grids
        .iter()
        .map(|&g| {
            let patches = build_patches(f, n, g, default_quadrature_order(d)).map_err(|e| e.to_string())?;
            let sum = LocalizedSum::new(patches, g).map_err(|e| e.to_string())?;
            let diff = sampler.sample(&sum).map_err(|e| e.to_string())?.minus(&at_f);
            let e0 = sampler.lp_norm(&diff).value;
            let e1 = sampler.w1p_seminorm(&diff).map_err(|e| e.to_string())?.value;
            Ok((e0, e1))
        })
        .collect()
}

fn taylor_decay() -> Outcome {
    let grids = [2usize, 4, 8, 16, 32];
    let mut ok = true;
    let mut notes = Vec::new();
    let fs: [(&str, Box<dyn DifferentiableFunction>); 2] = [("d=1", Box::new(sin_wave())), ("d=2", Box::new(sin_cos()))];
    for (label, f) in &fs {
        for n in [2usize, 3] {
            let errs = decay_errors(f.as_ref(), n, &grids)?;
            let fit = |from: usize, pick: fn(&(f64, f64)) -> f64| {
                let pts: Vec<(f64, f64)> =
                    grids.iter().zip(&errs).skip(from).map(|(&g, e)| ((g as f64).ln(), pick(e).ln())).collect();
                least_squares_slope(&pts)
            };
            let s0 = fit(0, |e| e.0);
            let s1 = fit(0, |e| e.1);
            let n = n as f64;
            ok &= (s0 + n).abs() <= 0.15 * n && (s1 + n - 1.0).abs() <= 0.15 * (n - 1.0);
            // slopes over N >= 8 only, for diagnosing pre-asymptotic grids
            let t0 = fit(2, |e| e.0);
            let t1 = fit(2, |e| e.1);
            notes.push(format!("{label} n={n}: {s0:.2}/{s1:.2} (N>=8: {t0:.2}/{t1:.2})"));
        }
    }
    check(ok, format!("slopes s=0/s=1: {}", notes.join(", ")))
}

struct EndToEnd {
    runs: Vec<(f64, f64, f64, f64, f64, usize, usize)>,
}

fn end_to_end(s: f64) -> Result<EndToEnd, String> {
    let f = sin_wave();
    let n = 3;
    let mut cfg = ApproxConfig::new(n, s, f.sobolev_bound(n).unwrap());
    cfg.budget = 20_000;
    cfg.interp_order = Some(0.5);
    let mut runs = Vec::new();
    for k in 0..5 {
        let eps = 10f64.powf(-1.0 - 0.5 * k as f64);
        let (_, a) = build_approximant(&f, &cfg, eps).map_err(|e| format!("s={s} eps={eps:e}: {e}"))?;
        runs.push((eps, a.error_total, a.error_s0, a.error_s1, a.error_interp.unwrap(), a.weights, a.layers));
    }
    Ok(EndToEnd { runs })
}

fn complexity_and_interpolation() -> (Outcome, Outcome) {
    let mut notes6 = Vec::new();
    let mut notes7 = Vec::new();
    let mut ok6 = true;
    let mut ok7 = true;
    for s in [0.0, 1.0] {
        let e2e = match end_to_end(s) {
            Ok(r) => r,
            Err(e) => return (Err(e.clone()), Err(e)),
        };
        let rows: Vec<_> = e2e.runs.iter().map(|r| (r.0, r.5, r.6)).collect();
        let nominal: Vec<_> = e2e.runs.iter().map(|r| (r.0, r.5)).collect();
        let target = 1.0 / (3.0 - s);
        let slope = fit_complexity_exponent(&rows);
        let slope_nominal = fit_complexity_exponent_nominal(&nominal, 3, s);
        let within = e2e.runs.iter().all(|r| r.1 <= r.0);
        ok6 &= within && slope >= 0.5 * target && slope <= 1.5 * target;
        notes6.push(format!(
            "s={s}: err/eps max {:.2}, exponent {slope:.3} in [{:.3},{:.3}] (nominal log factor: {slope_nominal:.3}), M={:?}",
            e2e.runs.iter().map(|r| r.1 / r.0).fold(0.0, f64::max),
            0.5 * target,
            1.5 * target,
            e2e.runs.iter().map(|r| r.5).collect::<Vec<_>>()
        ));
        let ratio = e2e.runs.iter().map(|r| r.4 / (3.0 * (r.2 * r.3).sqrt())).fold(0.0, f64::max);
        ok7 &= ratio <= 1.0;
        notes7.push(format!("s={s}: max W^(1/2) err / 3 sqrt(e0 e1) = {ratio:.3}"));
    }
    (check(ok6, notes6.join("; ")), check(ok7, notes7.join("; ")))
}

fn lower_bound() -> Outcome {
    let family = BumpFamily::new(1, 2, 4, 1.0).map_err(|e| e.to_string())?;
    let mut cfg = ApproxConfig::new(2, 1.0, 1.0);
    cfg.budget = 2000;
    let report = probe_lower_bound(&family, &cfg, &all_patterns(family.len()).unwrap()).map_err(|e| e.to_string())?;
    let decoded = report.outcomes.iter().filter(|o| o.ok && o.on_architecture).count();
    check(
        report.all_decoded() && report.outcomes.iter().all(|o| o.on_architecture) && report.min_margin() > 0.0,
        format!(
            "{decoded}/16 decoded at eps={:.3e}, min margin {:.3e}, N={}, M={}",
            report.eps,
            report.min_margin(),
            report.n_grid,
            report.weights
        ),
    )
}

fn bits(net: &Network) -> Vec<u64> {
    net.layers()
        .iter()
        .flat_map(|l| {
            let t: Vec<u64> = l.triplets().flat_map(|(i, j, v)| [i as u64, j as u64, v.to_bits()]).collect();
            t.into_iter().chain(l.bias().iter().map(|b| b.to_bits()))
        })
        .collect()
}

fn serialization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut fails = 0;
    for _ in 0..1000 {
        let d = rng.random_range(1..=4);
        let out = rng.random_range(1..=3);
        let base = random_net(&mut rng, d, out);
        // reinterpret weights with random exponents so subnormals and huge values appear
        let layers = base
            .layers()
            .iter()
            .map(|l| {
                let mut scale = |v: f64| {
                    let e = rng.random_range(-1070..1000);
                    let w = v * 2f64.powi(e);
                    if w.is_finite() && w != 0.0 {
                        w
                    } else {
                        v
                    }
                };
                let t: Vec<_> = l.triplets().map(|(i, j, v)| (i, j, scale(v))).collect();
                let b: Vec<f64> = l.bias().iter().map(|&v| if v == 0.0 { v } else { scale(v) }).collect();
                sobonet_core::Layer::from_triplets(l.rows(), l.cols(), t, b).unwrap()
            })
            .collect();
        let net = Network::new(d, layers).unwrap();
        let back = network_from_str(&network_to_string(&net).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        if bits(&back) != bits(&net) || back.input_dim() != net.input_dim() {
            fails += 1;
        }
    }
    check(fails == 0, format!("1000 networks, {fails} mismatches"))
}

fn report(k: usize, name: &str, limit: Duration, elapsed: Duration, outcome: &Outcome) -> bool {
    let in_time = elapsed <= limit;
    let (ok, detail) = match outcome {
        Ok(d) => (in_time, d.as_str()),
        Err(d) => (false, d.as_str()),
    };
    println!(
        "{} [{k}] {name}: {detail} ({:.2}s, limit {}s{})",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", over time" }
    );
    ok
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed())
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut passed = Vec::new();
    let (o, t) = timed(squaring);
    passed.push(report(1, "squaring exactness", secs(1), t, &o));
    let (o, t) = timed(multiplication);
    passed.push(report(2, "multiplication contract", secs(10), t, &o));
    let (o, t) = timed(calculus);
    passed.push(report(3, "calculus identities", secs(10), t, &o));
    let (o, t) = timed(standardization);
    passed.push(report(4, "standardization", secs(10), t, &o));
    let (o, t) = timed(taylor_decay);
    passed.push(report(5, "averaged Taylor decay", secs(120), t, &o));
    let ((o6, o7), t) = timed(complexity_and_interpolation);
    passed.push(report(6, "end-to-end error and complexity exponent", secs(600), t, &o6));
    passed.push(report(7, "fractional interpolation", secs(600), t, &o7));
    let (o, t) = timed(lower_bound);
    passed.push(report(8, "lower-bound decoding", secs(120), t, &o));
    let (o, t) = timed(serialization);
    passed.push(report(9, "JSON round trip", secs(5), t, &o));
    let ok = passed.iter().filter(|&&p| p).count();
    println!("acceptance: {ok}/{} criteria passed", passed.len());
    if ok < passed.len() && std::env::var_os("SOBONET_STRICT_ACCEPTANCE").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
