#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sobonet::error::{CliError, Result};
use sobonet::json::{calibration_from_env, read_calibration, read_network, write_network, PatchesJson};
use sobonet::registry::{lookup, FamilyParams};
use sobonet::report::{write_norm_reports, write_probe, write_sweep};
use sobonet_core::approximator::{build_approximant, ApproxConfig, ComplexityAudit, Mode, SweepRow};
use sobonet_core::constructions::{multiplication_network, squaring_network};
use sobonet_core::functions::DifferentiableFunction;
use sobonet_core::lb_probe::{all_patterns, probe_lower_bound, BumpFamily};
use sobonet_core::metrics::{wsp_error, wsp_norm, NetworkField};
use sobonet_core::network::to_standard;
use sobonet_core::taylor::{build_patches, default_quadrature_order};
use sobonet_core::Network;

#[derive(Parser)]
#[command(name = "sobonet", version, about = "ReLU networks approximating smooth functions in Sobolev norms")]
struct Cli {
    /// Worker threads (default: all cores). 1 gives the canonical reduction order.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Calibration table; overrides SOBONET_CALIBRATION.
    #[arg(long, global = true)]
    calibration: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Squaring network on [0,1] with m sawtooth levels.
    BuildSquare {
        #[arg(long)]
        m: u32,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Multiplication network on [-M, M]^2 with accuracy eps.
    BuildMult {
        #[arg(long = "M", alias = "m-box")]
        m_box: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Approximant of a registry function with W^{s,p} error <= eps.
    BuildApprox {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        approx: ApproxArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long, short)]
        out: PathBuf,
        /// Also write the patch set as JSON.
        #[arg(long)]
        patches: Option<PathBuf>,
    },
    /// Evaluates a network at one point.
    Eval {
        #[arg(long)]
        net: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Sampled W^{s,p} norm of a network, or of its error against --fn.
    Norms {
        #[arg(long)]
        net: PathBuf,
        #[arg(long = "fn")]
        function: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value = "inf")]
        p: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exit with status 2 if the value exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// One approximant per eps, as CSV.
    Sweep {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        approx: ApproxArgs,
        /// Comma-separated accuracies.
        #[arg(long, value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
        /// Fill the seconds column (makes output machine dependent).
        #[arg(long)]
        timing: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Equivalent network without skip connections.
    ToStandard {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Prints L, M, N and the layer widths.
    Audit {
        #[arg(long)]
        net: PathBuf,
    },
    /// Decodes every bit pattern of a bump family from its approximants.
    ProbeLb {
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long = "N")]
        grid: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long = "B", default_value_t = 1.0)]
        bound: f64,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Target {
    /// Registry name: sin, sin1, sin2, gaussian-bump, square, linear, zero,
    /// poly:c0,c1,..., bump:<bits>.
    #[arg(long = "fn")]
    function: String,
    #[arg(long, default_value_t = 1)]
    d: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Calibrated,
    Theoretical,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    #[arg(long, default_value = "inf")]
    p: f64,
    /// Bound B on the W^{n,p} norm (default: the function's own bound).
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long, value_enum, default_value = "calibrated")]
    mode: ModeArg,
    /// Constant C for theoretical mode.
    #[arg(long, default_value_t = 1.0)]
    constant: f64,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn default_budget(d: usize) -> usize {
    match d {
        1 => 100_000,
        2 => 40_000,
        _ => 20_000,
    }
}

fn make_config(args: &ApproxArgs, f: &dyn DifferentiableFunction, cal: &Option<PathBuf>) -> Result<ApproxConfig> {
    if !(args.p >= 1.0) {
        return Err(CliError::usage("p must lie in [1, inf]"));
    }
    let bound = match (args.bound, f.sobolev_bound(args.n)) {
        (Some(b), _) => b,
        (None, Some(b)) if b.is_finite() => b,
        _ => return Err(CliError::usage(format!("{} has no known W^{{n,p}} bound; pass --bound", f.name()))),
    };
    let mut cfg = ApproxConfig::new(args.n, args.s, bound);
    cfg.p = args.p;
    cfg.seed = args.seed;
    cfg.budget = args.budget.unwrap_or_else(|| default_budget(f.dim()));
    cfg.mode = match args.mode {
        ModeArg::Calibrated => Mode::Calibrated,
        ModeArg::Theoretical => Mode::Theoretical { constant: args.constant },
    };
    cfg.calibration = match cal {
        Some(p) => read_calibration(p)?,
        None => calibration_from_env()?,
    };
    Ok(cfg)
}

fn family_params(args: &ApproxArgs) -> FamilyParams {
    FamilyParams {
        n: args.n,
        bound: args.bound.unwrap_or(1.0),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|source| CliError::Io { path: p.clone(), source })?),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_audit(a: &ComplexityAudit) {
    eprintln!(
        "L={} M={} N={} N_grid={} eps={} inner_eps={:e} mode={} error_local={:e} error_network={:e} error_total={:e} attempts={}",
        a.layers,
        a.weights,
        a.neurons,
        a.n_grid,
        a.eps,
        a.inner_eps,
        a.mode.as_str(),
        a.error_local,
        a.error_network,
        a.error_total,
        a.attempts
    );
}

fn parse_point(x: &str) -> Result<Vec<f64>> {
    x.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::usage(format!("coordinate {v:?}: {e}"))))
        .collect()
}

fn fmt_values(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn read(path: &Path) -> Result<Network> {
    read_network(path)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildSquare { m, out } => {
            let net = squaring_network(m)?;
            write_network(&out, &net)
        }
        Command::BuildMult { m_box, eps, out } => {
            let net = multiplication_network(m_box, eps)?;
            write_network(&out, &net)
        }
        Command::BuildApprox {
            target,
            approx,
            eps,
            out,
            patches,
        } => {
            let f = lookup(&target.function, target.d, family_params(&approx))?;
            let cfg = make_config(&approx, &f, &cli.calibration)?;
            let (net, audit) = build_approximant(&f, &cfg, eps)?;
            print_audit(&audit);
            write_network(&out, &net)?;
            if let Some(p) = patches {
                let q = cfg.quadrature.unwrap_or_else(|| default_quadrature_order(f.dim()));
                let set = build_patches(&f, cfg.n, audit.n_grid, q)?;
                let json = serde_json::to_string(&PatchesJson::new(audit.n_grid, cfg.n, &set))?;
                std::fs::write(&p, json).map_err(|source| CliError::Io { path: p.clone(), source })?;
            }
            if audit.error_total > eps {
                return Err(CliError::Tolerance {
                    achieved: audit.error_total,
                    target: eps,
                });
            }
            Ok(())
        }
        Command::Eval { net, x } => {
            let net = read(&net)?;
            let x = parse_point(&x)?;
            println!("{}", fmt_values(&net.realize(&x)?));
            Ok(())
        }
        Command::Norms {
            net,
            function,
            s,
            p,
            n,
            bound,
            budget,
            seed,
            tolerance,
            out,
        } => {
            let net = read(&net)?;
            let budget = budget.unwrap_or_else(|| default_budget(net.input_dim()));
            let report = match function {
                Some(name) => {
                    let f = lookup(&name, net.input_dim(), FamilyParams { n, bound })?;
                    wsp_error(&net, &f, s, p, budget, seed)?
                }
                None => wsp_norm(&NetworkField::new(&net)?, s, p, budget, seed)?,
            };
            write_norm_reports(output(&out)?, &[report])?;
            match tolerance {
                Some(t) if report.value > t => Err(CliError::Tolerance {
                    achieved: report.value,
                    target: t,
                }),
                _ => Ok(()),
            }
        }
        Command::Sweep {
            target,
            approx,
            eps_list,
            timing,
            out,
        } => {
            let f = lookup(&target.function, target.d, family_params(&approx))?;
            let cfg = make_config(&approx, &f, &cli.calibration)?;
            let mut rows: Vec<SweepRow> = Vec::with_capacity(eps_list.len());
            let mut seconds = Vec::with_capacity(eps_list.len());
            for &eps in &eps_list {
                let t = Instant::now();
                let row = sobonet_core::approximator::scaling_sweep(&f, &cfg, &[eps])?.remove(0);
                seconds.push(t.elapsed().as_secs_f64());
                rows.push(row);
            }
            write_sweep(output(&out)?, &rows, timing.then_some(&seconds[..]))?;
            match rows.iter().find(|r| r.error_target_s > r.eps) {
                Some(r) => Err(CliError::Tolerance {
                    achieved: r.error_target_s,
                    target: r.eps,
                }),
                None => Ok(()),
            }
        }
        Command::ToStandard { net, out } => {
            let net = read(&net)?;
            write_network(&out, &to_standard(&net)?)
        }
        Command::Audit { net } => {
            let net = read(&net)?;
            let widths = net.widths().iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",");
            println!("L={} M={} N={} d={} widths={}", net.num_layers(), net.weight_count(), net.neuron_count(), net.input_dim(), widths);
            Ok(())
        }
        Command::ProbeLb {
            d,
            grid,
            n,
            bound,
            budget,
            seed,
            out,
        } => {
            let family = BumpFamily::new(d, n, grid, bound)?;
            let mut cfg = ApproxConfig::new(n, 1.0, bound);
            cfg.budget = budget;
            cfg.seed = seed;
            cfg.calibration = match &cli.calibration {
                Some(p) => read_calibration(p)?,
                None => calibration_from_env()?,
            };
            let report = probe_lower_bound(&family, &cfg, &all_patterns(family.len())?)?;
            write_probe(output(&out)?, &report)?;
            eprintln!(
                "eps={:e} threshold={:e} N_grid={} inner_eps={:e} M={} min_margin={:e}",
                report.eps,
                report.threshold,
                report.n_grid,
                report.inner_eps,
                report.weights,
                report.min_margin()
            );
            if report.all_decoded() {
                Ok(())
            } else {
                Err(CliError::Tolerance {
                    achieved: report.min_margin(),
                    target: 0.0,
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
