//! CSV emission. Floats are written with 17 significant digits so that
//! every value parses back to the same `f64`.

use std::io::Write;

use crate::bandit::{CalibrationResult, RunResult};
use crate::error::Result;

pub const RUN_HEADER: &str = "seed,round,method,action,regret,cum_regret,threshold,weight,covered";
pub const BOUND_COLUMNS: &str = ",bound_t4,bound_t6";
pub const CALIBRATION_HEADER: &str = "method,alpha,scenario,runs,covered_fraction";

/// Round-trip exact float formatting (`1.0000000000000000e0`).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_runs<W: Write>(out: &mut W, runs: &[&RunResult], report_bounds: bool) -> Result<()> {
    let bounds = if report_bounds { BOUND_COLUMNS } else { "" };
    writeln!(out, "{RUN_HEADER}{bounds}")?;
    for run in runs {
        for r in &run.rounds {
            write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                run.seed,
                r.round,
                run.method,
                r.action,
                fmt_f64(r.regret),
                fmt_f64(r.cum_regret),
                fmt_f64(r.threshold),
                fmt_f64(r.weight),
                r.covered as u8
            )?;
            if report_bounds {
                let f = |v: Option<f64>| fmt_f64(v.unwrap_or(f64::NAN));
                write!(out, ",{},{}", f(r.bound_t4), f(r.bound_t6))?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn write_calibration<W: Write>(out: &mut W, rows: &[CalibrationResult]) -> Result<()> {
    writeln!(out, "{CALIBRATION_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.method,
            fmt_f64(r.alpha),
            r.scenario,
            r.runs,
            fmt_f64(r.covered_fraction())
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }
}
