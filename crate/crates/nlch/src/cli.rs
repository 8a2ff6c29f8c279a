//! Command orchestration: each command maps a parsed [`RunConfig`] to
//! solver calls and writes its artifacts (ledger, snapshots, summary)
//! into the output directory. All reductions run in a fixed order, so
//! identical configurations produce byte-identical files.

use crate::config::{PerturbTarget, RunConfig, SnapshotFormat};
use crate::coupled::{self, SystemConfig, SystemSolution};
use crate::domain::{Field, Trajectory};
use crate::error::{Error, Result};
use crate::report;
use crate::snapshot;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliCommand {
    Solve,
    Perturb,
    ConvergenceStudy,
    ValidateKernel,
    ProbeRegularity,
}

impl CliCommand {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "solve" => Some(Self::Solve),
            "perturb" => Some(Self::Perturb),
            "convergence-study" => Some(Self::ConvergenceStudy),
            "validate-kernel" => Some(Self::ValidateKernel),
            "probe-regularity" => Some(Self::ProbeRegularity),
            _ => None,
        }
    }
}

/// What a command produced: the text shown on stdout and the files
/// written.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Execute one command. `out_override` replaces the configured output
/// directory.
pub fn run(
    command: CliCommand,
    config: &RunConfig,
    out_override: Option<&Path>,
) -> Result<RunArtifacts> {
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.out_dir));
    match command {
        CliCommand::Solve => cmd_solve(config, &out_dir),
        CliCommand::Perturb => cmd_perturb(config, &out_dir),
        CliCommand::ConvergenceStudy => cmd_convergence_study(config, &out_dir),
        CliCommand::ValidateKernel => cmd_validate_kernel(config),
        CliCommand::ProbeRegularity => cmd_probe_regularity(config, &out_dir),
    }
}

fn snapshot_index(config: &RunConfig, t: f64) -> usize {
    let dt = config.final_time / config.num_steps as f64;
    ((t / dt).round() as usize).min(config.num_steps)
}

fn write_snapshots(
    config: &RunConfig,
    out_dir: &Path,
    solution: &SystemSolution<f64>,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let fields: [(&str, &Trajectory<f64>); 3] = [
        ("mu", &solution.mu),
        ("rho", &solution.rho),
        ("xi", &solution.xi),
    ];
    for &t in &config.snapshot_times {
        let n = snapshot_index(config, t);
        let time = solution.mu.domain().time(n);
        for (name, traj) in fields {
            let snap = traj.snapshot(n);
            if matches!(config.format, SnapshotFormat::Binary | SnapshotFormat::Both) {
                let path = out_dir.join(format!("{name}_t{t}.bin"));
                snapshot::write_field_binary(&path, snap, time)?;
                files.push(path);
            }
            if matches!(config.format, SnapshotFormat::Csv | SnapshotFormat::Both) {
                let path = out_dir.join(format!("{name}_t{t}.csv"));
                snapshot::write_field_csv(&path, snap, time)?;
                files.push(path);
            }
        }
    }
    Ok(())
}

fn cmd_solve(config: &RunConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let system = config.to_system_config()?;
    let solution = coupled::outer_solve(&system)?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();

    let ledger_path = out_dir.join("ledger.csv");
    report::write_ledger(&ledger_path, &solution.report)?;
    files.push(ledger_path);

    write_snapshots(config, out_dir, &solution, &mut files)?;

    let summary = report::summary_text(&solution);
    let summary_path = out_dir.join("summary.txt");
    std::fs::write(&summary_path, &summary)?;
    files.push(summary_path);

    Ok(RunArtifacts { summary, files })
}

/// The perturbation profile: sign-varying first cosine mode for the
/// order parameter, nonnegative raised cosine for the chemical
/// potential (which must stay nonnegative).
fn perturbation_fields(
    config: &RunConfig,
    system: &SystemConfig<f64>,
    scale: f64,
) -> (Option<Field<f64>>, Option<Field<f64>>) {
    let domain = system.domain();
    let l0 = domain.extent(0);
    let mode = Field::from_fn(domain.clone(), move |x| {
        (std::f64::consts::PI * x[0] / l0).cos()
    });
    let delta_rho = mode.scale(scale);
    let delta_mu = mode.map(|v| scale * 0.5 * (1.0 + v));
    match config.perturb_target {
        PerturbTarget::Rho0 => (None, Some(delta_rho)),
        PerturbTarget::Mu0 => (Some(delta_mu), None),
        PerturbTarget::Both => (Some(delta_mu), Some(delta_rho)),
    }
}

fn cmd_perturb(config: &RunConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let system = config.to_system_config()?;
    let (dmu, drho) = perturbation_fields(config, &system, config.perturb_delta);
    let rep = coupled::perturbation_experiment(&system, dmu.as_ref(), drho.as_ref())?;

    std::fs::create_dir_all(out_dir)?;
    let mut csv = String::from("step,t,rho_distance,mu_distance_sq\n");
    let domain = system.domain();
    for (n, (d, m)) in rep.rho_distance.iter().zip(&rep.mu_distance_sq).enumerate() {
        let _ = writeln!(csv, "{n},{},{d},{m}", domain.time(n));
    }
    let envelope_path = out_dir.join("envelope.csv");
    std::fs::write(&envelope_path, csv)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "perturbation delta: {}", config.perturb_delta);
    let _ = writeln!(summary, "fitted amplitude a: {}", rep.amplitude);
    let _ = writeln!(summary, "fitted exponent lambda: {}", rep.exponent);
    let _ = writeln!(
        summary,
        "final rho distance: {}",
        rep.rho_distance.last().copied().unwrap_or(0.0)
    );
    let summary_path = out_dir.join("perturb_summary.txt");
    std::fs::write(&summary_path, &summary)?;

    Ok(RunArtifacts {
        summary,
        files: vec![envelope_path, summary_path],
    })
}

fn cmd_convergence_study(config: &RunConfig, out_dir: &Path) -> Result<RunArtifacts> {
    // three dyadic levels solved concurrently, merged in config order
    let base = config.to_system_config()?;
    let mid = base.refined(2)?;
    let fine = base.refined(4)?;
    let solutions: Vec<Result<SystemSolution<f64>>> = std::thread::scope(|scope| {
        let handles = [
            scope.spawn(|| coupled::outer_solve(&base)),
            scope.spawn(|| coupled::outer_solve(&mid)),
            scope.spawn(|| coupled::outer_solve(&fine)),
        ];
        handles
            .map(|h| h.join().expect("solver thread panicked"))
            .into()
    });
    let mut sols = Vec::with_capacity(3);
    for s in solutions {
        sols.push(s?);
    }

    std::fs::create_dir_all(out_dir)?;
    let mut csv = String::from("level,cells,steps,outer_iterations,mu_norm_m,rho_norm_r\n");
    for (lvl, sol) in sols.iter().enumerate() {
        let d = sol.mu.domain();
        let _ = writeln!(
            csv,
            "{lvl},{},{},{},{},{}",
            d.n_cells(),
            d.num_steps(),
            sol.report.rows.len(),
            sol.mu.norm_m(),
            sol.report.rho_report.rho_norm_r
        );
    }

    // inter-level differences on the next-coarser grid
    let mut summary = String::new();
    let mut diffs_mu = Vec::new();
    let mut diffs_rho = Vec::new();
    for lvl in 0..2 {
        let coarse_domain = sols[lvl].mu.domain();
        let mu_f = sols[lvl + 1].mu.restrict(coarse_domain, 2)?;
        let rho_f = sols[lvl + 1].rho.restrict(coarse_domain, 2)?;
        diffs_mu.push(mu_f.zip(&sols[lvl].mu, |a, b| a - b)?.norm_l2_q());
        diffs_rho.push(rho_f.zip(&sols[lvl].rho, |a, b| a - b)?.norm_l2_q());
    }
    let order_mu = (diffs_mu[0] / diffs_mu[1]).log2();
    let order_rho = (diffs_rho[0] / diffs_rho[1]).log2();
    let _ = writeln!(summary, "mu inter-level L2(Q) differences: {diffs_mu:?}");
    let _ = writeln!(summary, "rho inter-level L2(Q) differences: {diffs_rho:?}");
    let _ = writeln!(summary, "observed order (mu): {order_mu}");
    let _ = writeln!(summary, "observed order (rho): {order_rho}");
    let _ = writeln!(csv, "# order_mu = {order_mu}");
    let _ = writeln!(csv, "# order_rho = {order_rho}");

    let study_path = out_dir.join("study.csv");
    std::fs::write(&study_path, csv)?;
    let summary_path = out_dir.join("study_summary.txt");
    std::fs::write(&summary_path, &summary)?;

    Ok(RunArtifacts {
        summary,
        files: vec![study_path, summary_path],
    })
}

fn cmd_validate_kernel(config: &RunConfig) -> Result<RunArtifacts> {
    let domain = config.domain()?;
    let spec = config.kernel_spec();
    let report = spec.validate_admissible(domain.min_spacing(), domain.diameter())?;
    let summary = format!("{report}\n");
    if !report.admissible() {
        return Err(Error::KernelInadmissible(summary));
    }
    Ok(RunArtifacts {
        summary,
        files: vec![],
    })
}

fn cmd_probe_regularity(config: &RunConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let system = config.to_system_config()?;
    let rep = coupled::regularity_probe(&system)?;
    std::fs::create_dir_all(out_dir)?;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "coarse: sup|mu| = {}, |dt rho|_L6 = {}, |xi|_L6 = {}",
        rep.coarse.0, rep.coarse.1, rep.coarse.2
    );
    let _ = writeln!(
        summary,
        "fine:   sup|mu| = {}, |dt rho|_L6 = {}, |xi|_L6 = {}",
        rep.fine.0, rep.fine.1, rep.fine.2
    );
    let _ = writeln!(
        summary,
        "ratios: {} {} {}",
        rep.ratio.0, rep.ratio.1, rep.ratio.2
    );
    let path = out_dir.join("regularity.txt");
    std::fs::write(&path, &summary)?;
    Ok(RunArtifacts {
        summary,
        files: vec![path],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("nlch-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn fast_config() -> RunConfig {
        parse_config(
            "[domain]\ncells = 12\nnum_steps = 20\nfinal_time = 0.2\n\
             [solver]\neps_schedule = 1e-1 1e-2\npicard_max_iter = 500\n",
        )
        .unwrap()
    }

    #[test]
    fn solve_writes_ledger_snapshots_summary() {
        let dir = tmp_dir("solve");
        let cfg = fast_config();
        let art = run(CliCommand::Solve, &cfg, Some(&dir)).unwrap();
        assert!(art.files.iter().any(|f| f.ends_with("ledger.csv")));
        assert!(art.files.iter().any(|f| f.ends_with("summary.txt")));
        // snapshots for all three fields in both formats at both times
        let bins = art
            .files
            .iter()
            .filter(|f| f.extension().is_some_and(|e| e == "bin"))
            .count();
        assert_eq!(bins, 6);
        // ledger and snapshots re-parse through our own readers
        let ledger = std::fs::read_to_string(dir.join("ledger.csv")).unwrap();
        let rows = report::parse_ledger(&ledger).unwrap();
        assert!(!rows.is_empty());
        let (_, vals) = snapshot::read_field_binary::<f64>(&dir.join("mu_t0.bin")).unwrap();
        assert_eq!(vals.len(), 12);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn validate_kernel_reports_gates() {
        let cfg = parse_config("").unwrap(); // default: newtonian kernel
        let art = run(CliCommand::ValidateKernel, &cfg, None).unwrap();
        assert!(art.summary.contains("alpha_k=1 pass"));
        assert!(art.summary.contains("beta_k=2 pass"));
        assert!(art.summary.contains("admissible: pass"));
    }

    #[test]
    fn validate_kernel_flags_bad_envelope() {
        // admissible exponents but an envelope claim the kernel violates
        let cfg = parse_config(
            "[kernel]\nkind = gaussian\namplitude = 2.0\nwidth = 0.3\n\
             c1 = 0.001\nalpha_k = 0.0\nc2 = 10.0\nbeta_k = 0.0\n",
        )
        .unwrap();
        match run(CliCommand::ValidateKernel, &cfg, None) {
            Err(Error::KernelInadmissible(msg)) => assert!(msg.contains("fail")),
            other => panic!("expected KernelInadmissible, got {other:?}"),
        }
    }

    #[test]
    fn perturb_writes_envelope_and_fit() {
        let dir = tmp_dir("perturb");
        let cfg = fast_config();
        let art = run(CliCommand::Perturb, &cfg, Some(&dir)).unwrap();
        assert!(art.summary.contains("fitted amplitude"));
        let csv = std::fs::read_to_string(dir.join("envelope.csv")).unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), cfg.num_steps + 1);
        // every distance cell parses back as a finite number
        for row in rows {
            let d: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
            assert!(d.is_finite() && d >= 0.0);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn convergence_study_reports_orders() {
        let dir = tmp_dir("study");
        // integrable kernel so the operator itself converges with the grid
        let cfg = parse_config(
            "[domain]\ncells = 8\nnum_steps = 10\nfinal_time = 0.1\n\
             [kernel]\nkind = power_law\namplitude = 0.2\nalpha = 0.5\n\
             [solver]\neps_schedule = 1e-1 1e-2\npicard_max_iter = 500\n",
        )
        .unwrap();
        let art = run(CliCommand::ConvergenceStudy, &cfg, Some(&dir)).unwrap();
        assert!(art.summary.contains("observed order"));
        let csv = std::fs::read_to_string(dir.join("study.csv")).unwrap();
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 4);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn probe_regularity_writes_ratios() {
        let dir = tmp_dir("reg");
        let cfg = fast_config();
        let art = run(CliCommand::ProbeRegularity, &cfg, Some(&dir)).unwrap();
        assert!(art.summary.contains("ratios:"));
        assert!(dir.join("regularity.txt").exists());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn solve_with_no_outer_budget_fails_with_category() {
        let dir = tmp_dir("noconv");
        let mut cfg = fast_config();
        cfg.params.outer_max_iter = 0;
        let err = run(CliCommand::Solve, &cfg, Some(&dir)).unwrap_err();
        assert_eq!(err.category(), "outer-non-convergence");
        assert_eq!(err.exit_code(), 3);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn identical_configs_produce_identical_ledgers() {
        let d1 = tmp_dir("repro1");
        let d2 = tmp_dir("repro2");
        let cfg = fast_config();
        run(CliCommand::Solve, &cfg, Some(&d1)).unwrap();
        run(CliCommand::Solve, &cfg, Some(&d2)).unwrap();
        let a = std::fs::read(d1.join("ledger.csv")).unwrap();
        let b = std::fs::read(d2.join("ledger.csv")).unwrap();
        assert_eq!(a, b);
        let a = std::fs::read(d1.join("mu_t0.2.bin")).unwrap();
        let b = std::fs::read(d2.join("mu_t0.2.bin")).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(&d1).ok();
        std::fs::remove_dir_all(&d2).ok();
    }
}
