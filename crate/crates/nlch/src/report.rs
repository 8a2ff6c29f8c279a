//! Serialization of solve reports: the per-iterate CSV ledger and the
//! human-readable summary. Floats are written with the shortest
//! round-trip representation, so identical runs produce byte-identical
//! files and every number parses back exactly.

use crate::coupled::{SolveReport, SystemSolution};
use crate::error::Result;
use crate::scalar::Real;
use std::fmt::Write as _;
use std::path::Path;

pub const LEDGER_HEADER: &str =
    "iterate,residual,mu_norm_m,mu_min,clip,membership,picard_iterations,energy_slack,omega";

/// One row per outer iterate.
pub fn ledger_csv(report: &SolveReport) -> String {
    let mut out = String::new();
    out.push_str(LEDGER_HEADER);
    out.push('\n');
    for row in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.k,
            row.residual,
            row.mu_norm_m,
            row.mu_min,
            row.clip,
            row.membership_pass,
            row.picard_iterations,
            row.energy_slack,
            row.omega
        )
        .expect("writing to String cannot fail");
    }
    out
}

pub fn write_ledger(path: &Path, report: &SolveReport) -> Result<()> {
    std::fs::write(path, ledger_csv(report))?;
    Ok(())
}

/// Re-parse a ledger produced by [`ledger_csv`].
pub fn parse_ledger(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != LEDGER_HEADER {
                return Err(crate::error::Error::SnapshotFormat(format!(
                    "unexpected ledger header {line:?}"
                )));
            }
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| match cell {
                "true" => Ok(1.0),
                "false" => Ok(0.0),
                other => other.parse::<f64>().map_err(|_| {
                    crate::error::Error::SnapshotFormat(format!("bad ledger cell {other:?}"))
                }),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Final norms and bound checks in plain text.
pub fn summary_text<S: Real>(solution: &SystemSolution<S>) -> String {
    let rep = &solution.report;
    let mut out = String::new();
    let _ = writeln!(out, "converged: {}", rep.converged);
    let _ = writeln!(out, "outer iterations: {}", rep.rows.len());
    if let Some(last) = rep.rows.last() {
        let _ = writeln!(out, "final residual: {}", last.residual);
    }
    let _ = writeln!(out, "mu: norm_M = {}", solution.mu.norm_m().as_f64());
    let _ = writeln!(out, "mu: min over Q = {}", solution.mu.min_value().as_f64());
    let _ = writeln!(
        out,
        "membership radius ({}): {}",
        rep.radius_source, rep.radius
    );
    let _ = writeln!(
        out,
        "energy slack (max (E+D)/E0 - 1): {}",
        rep.mu_ledger.energy_slack()
    );
    let _ = writeln!(out, "rho: norm_R = {}", rep.rho_report.rho_norm_r);
    let _ = writeln!(out, "xi: L^{{10/3}}(Q) = {}", rep.rho_report.xi_norm_l103);
    let _ = writeln!(out, "a priori constant c = {}", rep.rho_report.apriori_c);
    let _ = writeln!(
        out,
        "eps stages: {} (total Picard sweeps {})",
        rep.rho_report.stages.len(),
        rep.rho_report.total_picard_iterations()
    );
    for s in &rep.rho_report.stages {
        let _ = writeln!(
            out,
            "  eps = {}: {} sweeps, |xi|_10/3 = {}{}",
            s.eps,
            s.picard_iterations,
            s.xi_norm_l103,
            match s.sup_constraint_dist {
                Some(d) => format!(", sup dist to [-1,1] = {d}"),
                None => String::new(),
            }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::OuterRow;
    use crate::mu::MuLedger;
    use crate::rho::RhoReport;

    fn fake_report() -> SolveReport {
        SolveReport {
            rows: vec![
                OuterRow {
                    k: 1,
                    residual: 0.125,
                    mu_norm_m: 1.5,
                    mu_min: 0.0,
                    clip: 0.0,
                    membership_pass: true,
                    picard_iterations: 7,
                    energy_slack: -1e-3,
                    omega: 1.0,
                },
                OuterRow {
                    k: 2,
                    residual: 1e-9,
                    mu_norm_m: 1.5,
                    mu_min: 1e-16,
                    clip: 0.0,
                    membership_pass: true,
                    picard_iterations: 7,
                    energy_slack: -1e-3,
                    omega: 1.0,
                },
            ],
            converged: true,
            radius: 3.0,
            radius_source: "surrogate",
            mu_ledger: MuLedger::default(),
            rho_report: RhoReport {
                stages: vec![],
                apriori_c: 1.0,
                rho_norm_r: 1.0,
                xi_norm_l103: 0.5,
                rho_norm_linf_l2: 0.7,
            },
        }
    }

    #[test]
    fn ledger_round_trips_through_parser() {
        let csv = ledger_csv(&fake_report());
        let rows = parse_ledger(&csv).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0][0], 1.0);
        assert_eq!(rows[0][1], 0.125);
        assert_eq!(rows[1][1], 1e-9);
        assert_eq!(rows[0][5], 1.0); // membership flag
    }

    #[test]
    fn identical_reports_produce_identical_bytes() {
        assert_eq!(ledger_csv(&fake_report()), ledger_csv(&fake_report()));
    }
}
