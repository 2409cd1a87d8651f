//! CSV outputs. Floats use Rust's shortest round-trip formatting so equal
//! runs produce byte-identical files.

use std::io::Write;

use sobonet_core::approximator::SweepRow;
use sobonet_core::lb_probe::ProbeReport;
use sobonet_core::metrics::NormReport;

use crate::error::Result;

fn num(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

pub fn write_norm_reports<W: Write>(out: W, reports: &[NormReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "s", "value", "samples", "seed", "method"])?;
    for r in reports {
        w.write_record([
            num(r.p),
            num(r.s),
            num(r.value),
            r.samples.to_string(),
            r.seed.to_string(),
            r.method.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `seconds` is left empty unless wall-clock times are supplied, keeping
/// untimed output reproducible.
pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow], seconds: Option<&[f64]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "error_s0", "error_s1", "error_target_s", "L", "M", "N", "N_grid", "seconds"])?;
    for (k, r) in rows.iter().enumerate() {
        let secs = seconds.and_then(|s| s.get(k)).map(|s| format!("{s:.3}")).unwrap_or_default();
        w.write_record([
            num(r.eps),
            num(r.error_s0),
            num(r.error_s1),
            num(r.error_target_s),
            r.layers.to_string(),
            r.weights.to_string(),
            r.neurons.to_string(),
            r.n_grid.to_string(),
            secs,
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row per pattern: its index (bit `j` of the id is `y_j`), whether it
/// was decoded exactly and its smallest margin `|g − threshold|`.
pub fn write_probe<W: Write>(out: W, report: &ProbeReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pattern", "ok", "margin"])?;
    for o in &report.outcomes {
        let id: usize = o.y.iter().enumerate().map(|(j, &b)| (b as usize) << j).sum();
        let ok = o.ok && o.on_architecture;
        w.write_record([id.to_string(), (ok as u8).to_string(), num(o.min_margin)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
