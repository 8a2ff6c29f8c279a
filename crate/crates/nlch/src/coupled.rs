//! The outer fixed-point loop coupling the two maps: iterate
//! `mu <- F2(F1(mu))` from the constant-in-time initial datum, with
//! optional relaxation, until successive iterates are close in the
//! fixed-point norm. Also hosts the membership check on the candidate
//! set, the continuous-dependence (perturbation) experiment, and the
//! regularity probe.
//!
//! The underlying theory guarantees a fixed point exists, not that this
//! iteration converges; non-convergence is therefore surfaced as an
//! error carrying the residual history, never asserted away.

use crate::domain::{Domain, Field, Lp, Trajectory};
use crate::error::{Error, Result};
use crate::mu::{self, m0_radius, surrogate_radius, MuLedger, MuProblem};
use crate::nonlocal::NonlocalOp;
use crate::potential::{CouplingG, LipschitzPi, MonotoneGraph};
use crate::rho::{self, RhoProblem, RhoReport, NONNEG_TOL};
use crate::scalar::Real;
use std::sync::Arc;

/// Solver tolerances and iteration limits, bundled so configurations
/// stay one value.
#[derive(Debug, Clone)]
pub struct SolverParams<S: Real> {
    pub eps_schedule: Vec<S>,
    pub picard_tol: S,
    pub picard_max_iter: usize,
    pub eps_continuation_tol: S,
    pub outer_tol: S,
    pub outer_max_iter: usize,
    /// relaxation weight for the outer update (1 = plain iteration)
    pub omega: S,
    pub cg_tol: S,
    pub cg_max_iter: usize,
    pub max_halvings: u32,
    pub tol_energy: S,
    /// embedding constant; when present the membership radius comes from
    /// the embedding formula instead of the energy-bound surrogate
    pub c0: Option<S>,
}

impl<S: Real> Default for SolverParams<S> {
    fn default() -> Self {
        Self {
            eps_schedule: vec![
                S::of(1e-1),
                S::of(3e-2),
                S::of(1e-2),
                S::of(3e-3),
                S::of(1e-3),
            ],
            picard_tol: S::of(1e-8),
            picard_max_iter: 400,
            eps_continuation_tol: S::of(1e-6),
            outer_tol: S::of(1e-6),
            outer_max_iter: 40,
            omega: S::one(),
            cg_tol: S::of(1e-10),
            cg_max_iter: 10_000,
            max_halvings: 20,
            tol_energy: S::of(1e-6),
            c0: None,
        }
    }
}

/// A complete problem instance: operators, nonlinearities, initial data
/// and solver parameters on one space-time grid.
#[derive(Debug, Clone)]
pub struct SystemConfig<S: Real> {
    pub op: Arc<NonlocalOp<S>>,
    pub graph: MonotoneGraph<S>,
    pub pi: LipschitzPi<S>,
    pub g: CouplingG<S>,
    pub mu0: Field<S>,
    pub rho0: Field<S>,
    pub params: SolverParams<S>,
}

impl<S: Real> SystemConfig<S> {
    pub fn new(
        op: Arc<NonlocalOp<S>>,
        graph: MonotoneGraph<S>,
        pi: LipschitzPi<S>,
        g: CouplingG<S>,
        mu0: Field<S>,
        rho0: Field<S>,
        params: SolverParams<S>,
    ) -> Result<Self> {
        let cfg = Self {
            op,
            graph,
            pi,
            g,
            mu0,
            rho0,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn domain(&self) -> &Arc<Domain<S>> {
        self.mu0.domain()
    }

    pub fn validate(&self) -> Result<()> {
        if self.op.domain() != self.mu0.domain() || self.rho0.domain() != self.mu0.domain() {
            return Err(Error::DomainMismatch);
        }
        let min = self.mu0.min();
        if min < -S::of(NONNEG_TOL) {
            return Err(Error::PositivityViolation {
                min: min.as_f64(),
                tol: NONNEG_TOL,
            });
        }
        let (lo, hi) = self.graph.domain_closure();
        if let Some(v) = self.rho0.values().iter().find(|v| **v < lo || **v > hi) {
            return Err(Error::OutsideGraphDomain {
                arg: v.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        // integrability of rho0 |beta^o(rho0)|^{7/3}: finiteness of the
        // discrete sum; for the logarithmic graph this rejects initial
        // data touching the endpoints
        self.initial_graph_integral(S::of(7.0 / 3.0)).map_err(|_| {
            Error::InvalidField(
                "rho0 |beta_min(rho0)|^{7/3} is not summable: initial datum touches the \
                 singular set of the graph"
                    .into(),
            )
        })?;
        Ok(())
    }

    /// Discrete `integral rho0 |beta^o(rho0)|^p`.
    pub fn initial_graph_integral(&self, p: S) -> Result<S> {
        let vol = self.rho0.domain().cell_volume();
        let mut acc = S::zero();
        for &r in self.rho0.values() {
            let m = self.graph.minimal_section(r)?;
            acc += r.abs() * m.abs().powf(p);
        }
        let total = acc * vol;
        if !total.is_finite() {
            return Err(Error::InvalidField("non-summable graph integral".into()));
        }
        Ok(total)
    }

    /// The same problem on a `factor`-times finer space-time grid, with
    /// the initial data injected (piecewise-constant) and the nonlocal
    /// operator reassembled.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let fine = self.domain().refined(factor)?;
        let op = Arc::new(NonlocalOp::build(
            self.op.form(),
            self.op.kernel().clone(),
            fine.clone(),
        )?);
        Self::new(
            op,
            self.graph.clone(),
            self.pi,
            self.g.clone(),
            self.mu0.prolong(&fine, factor)?,
            self.rho0.prolong(&fine, factor)?,
            self.params.clone(),
        )
    }
}

/// Membership of a trajectory in the candidate set: fixed-point norm at
/// most `radius` and nonnegativity up to round-off.
#[derive(Debug, Clone, Copy)]
pub struct MembershipReport {
    pub norm_m: f64,
    pub radius: f64,
    pub min_value: f64,
    pub norm_ok: bool,
    pub positivity_ok: bool,
}

impl MembershipReport {
    pub fn pass(&self) -> bool {
        self.norm_ok && self.positivity_ok
    }
}

pub fn check_membership<S: Real>(mu: &Trajectory<S>, radius: S) -> MembershipReport {
    let norm_m = mu.norm_m();
    let min_value = mu.min_value();
    MembershipReport {
        norm_m: norm_m.as_f64(),
        radius: radius.as_f64(),
        min_value: min_value.as_f64(),
        norm_ok: norm_m <= radius,
        positivity_ok: min_value >= -S::of(NONNEG_TOL),
    }
}

/// One row of the outer-iteration ledger.
#[derive(Debug, Clone, Copy)]
pub struct OuterRow {
    pub k: usize,
    /// `|mu^{k} - mu^{k-1}|` in the fixed-point norm
    pub residual: f64,
    pub mu_norm_m: f64,
    pub mu_min: f64,
    /// magnitude of the round-off clip applied before the first map
    pub clip: f64,
    pub membership_pass: bool,
    pub picard_iterations: usize,
    pub energy_slack: f64,
    pub omega: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub rows: Vec<OuterRow>,
    pub converged: bool,
    /// membership radius used for every iterate
    pub radius: f64,
    /// "surrogate" (energy bound) or "embedding" (supplied constant)
    pub radius_source: &'static str,
    /// ledger of the final inner parabolic solve
    pub mu_ledger: MuLedger,
    /// report of the final order-parameter solve
    pub rho_report: RhoReport,
}

#[derive(Debug, Clone)]
pub struct SystemSolution<S: Real> {
    pub mu: Trajectory<S>,
    pub rho: Trajectory<S>,
    pub xi: Trajectory<S>,
    pub dt_rho: Trajectory<S>,
    pub report: SolveReport,
}

/// Flush round-off negatives to zero; genuine negativity is an error.
/// Returns the clipped trajectory and the clip magnitude.
fn clip_negative<S: Real>(mu: &Trajectory<S>) -> Result<(Trajectory<S>, f64)> {
    let min = mu.min_value();
    if min < -S::of(NONNEG_TOL) {
        return Err(Error::PositivityViolation {
            min: min.as_f64(),
            tol: NONNEG_TOL,
        });
    }
    if min >= S::zero() {
        return Ok((mu.clone(), 0.0));
    }
    Ok((mu.map(|v| v.max(S::zero())), (-min).as_f64()))
}

fn apply_both_maps<S: Real>(
    config: &SystemConfig<S>,
    mu_k: &Trajectory<S>,
) -> Result<(rho::RhoSolution<S>, mu::MuSolution<S>, f64)> {
    let p = &config.params;
    let (mu_in, clip) = clip_negative(mu_k)?;
    let rho_problem = RhoProblem::new(
        mu_in,
        config.rho0.clone(),
        config.op.clone(),
        config.graph.clone(),
        config.pi,
        config.g.clone(),
        p.eps_schedule.clone(),
        p.picard_tol,
        p.picard_max_iter,
        p.eps_continuation_tol,
    )?;
    let rho_sol = rho::solve(&rho_problem)?;
    let mu_problem = MuProblem::new(
        rho_sol.rho.clone(),
        rho_sol.dt_rho.clone(),
        config.mu0.clone(),
        config.g.clone(),
    )?
    .with_tolerances(p.cg_tol, p.cg_max_iter, p.max_halvings, p.tol_energy);
    let mu_sol = mu::solve(&mu_problem)?;
    Ok((rho_sol, mu_sol, clip))
}

/// Iterate the composed map from `mu == mu0` (constant in time) until
/// the fixed-point residual drops below `outer_tol`. On detected
/// oscillation (residual increasing twice in a row) the relaxation
/// weight drops to half its configured value, once.
pub fn outer_solve<S: Real>(config: &SystemConfig<S>) -> Result<SystemSolution<S>> {
    let p = &config.params;
    let (radius, radius_source) = match p.c0 {
        Some(c0) => (m0_radius(&config.g, &config.mu0, c0), "embedding"),
        None => (surrogate_radius(&config.g, &config.mu0), "surrogate"),
    };

    let mut mu_k = Trajectory::constant_in_time(&config.mu0);
    let mut rows: Vec<OuterRow> = Vec::new();
    let mut omega = p.omega;
    let mut prev_residual = S::infinity();
    let mut rises = 0usize;

    for k in 1..=p.outer_max_iter {
        let (rho_sol, mu_sol, clip) = apply_both_maps(config, &mu_k)?;
        let residual = mu_sol.mu.zip(&mu_k, |a, b| a - b)?.norm_m();
        let membership = check_membership(&mu_sol.mu, radius);
        rows.push(OuterRow {
            k,
            residual: residual.as_f64(),
            mu_norm_m: membership.norm_m,
            mu_min: membership.min_value,
            clip,
            membership_pass: membership.pass(),
            picard_iterations: rho_sol.report.total_picard_iterations(),
            energy_slack: mu_sol.ledger.energy_slack(),
            omega: omega.as_f64(),
        });
        if residual <= p.outer_tol {
            return Ok(SystemSolution {
                mu: mu_sol.mu,
                rho: rho_sol.rho,
                xi: rho_sol.xi,
                dt_rho: rho_sol.dt_rho,
                report: SolveReport {
                    rows,
                    converged: true,
                    radius: radius.as_f64(),
                    radius_source,
                    mu_ledger: mu_sol.ledger,
                    rho_report: rho_sol.report,
                },
            });
        }
        if residual > prev_residual {
            rises += 1;
        } else {
            rises = 0;
        }
        if rises >= 2 && omega == p.omega {
            omega = p.omega * S::of(0.5);
        }
        prev_residual = residual;
        mu_k = mu_k.zip(&mu_sol.mu, |old, new| {
            (S::one() - omega) * old + omega * new
        })?;
    }

    Err(Error::OuterNoConvergence {
        tol: p.outer_tol.as_f64(),
        max_iter: p.outer_max_iter,
        last: rows.last().map(|r| r.residual).unwrap_or(f64::NAN),
        residuals: rows.iter().map(|r| r.residual).collect(),
    })
}

/// Re-apply the composed map to a solution's chemical potential and
/// measure the fixed-point defect (at most twice the outer tolerance on
/// a converged run).
pub fn fixed_point_defect<S: Real>(
    config: &SystemConfig<S>,
    solution: &SystemSolution<S>,
) -> Result<S> {
    let (_, mu_sol, _) = apply_both_maps(config, &solution.mu)?;
    Ok(mu_sol.mu.zip(&solution.mu, |a, b| a - b)?.norm_m())
}

/// Result of the continuous-dependence experiment: the per-snapshot
/// order-parameter distance, the accumulated chemical-potential
/// distance, and the fitted exponential envelope `d(t) ~ a e^{lambda t}`.
#[derive(Debug, Clone)]
pub struct PerturbationReport {
    pub amplitude: f64,
    pub exponent: f64,
    /// `|rho_1 - rho_2|_{L^2}(t_n)` for every snapshot
    pub rho_distance: Vec<f64>,
    /// `int_{Q_{t_n}} |mu_1 - mu_2|^2` (cumulative, squared)
    pub mu_distance_sq: Vec<f64>,
}

/// Run the solve twice, from the given data and from data shifted by
/// the perturbations, and fit the growth envelope of the difference.
pub fn perturbation_experiment<S: Real>(
    config: &SystemConfig<S>,
    delta_mu0: Option<&Field<S>>,
    delta_rho0: Option<&Field<S>>,
) -> Result<PerturbationReport> {
    let base = outer_solve(config)?;
    let mut perturbed = config.clone();
    if let Some(d) = delta_mu0 {
        perturbed.mu0 = perturbed.mu0.axpy(S::one(), d)?;
    }
    if let Some(d) = delta_rho0 {
        perturbed.rho0 = perturbed.rho0.axpy(S::one(), d)?;
    }
    perturbed.validate()?;
    let other = outer_solve(&perturbed)?;

    let domain = config.domain();
    let n_steps = domain.num_steps();
    let dt = domain.dt();
    let mut rho_distance = Vec::with_capacity(n_steps + 1);
    let mut mu_distance_sq = Vec::with_capacity(n_steps + 1);
    let mut acc = S::zero();
    for n in 0..=n_steps {
        let d = base
            .rho
            .snapshot(n)
            .zip(other.rho.snapshot(n), |a, b| a - b)?
            .norm_l2();
        rho_distance.push(d.as_f64());
        mu_distance_sq.push(acc.as_f64());
        if n < n_steps {
            let dmu = base
                .mu
                .snapshot(n)
                .zip(other.mu.snapshot(n), |a, b| a - b)?
                .norm_l2_sq();
            acc += dt * dmu;
        }
    }

    let (amplitude, exponent) = fit_exponential(domain, &rho_distance);
    Ok(PerturbationReport {
        amplitude,
        exponent,
        rho_distance,
        mu_distance_sq,
    })
}

/// Least-squares fit of `ln d = ln a + lambda t` over the positive
/// entries; identically zero distances fit `(0, 0)`.
fn fit_exponential<S: Real>(domain: &Arc<Domain<S>>, d: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = d
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(n, v)| (domain.time(n).as_f64(), v.ln()))
        .collect();
    if pts.is_empty() {
        return (0.0, 0.0);
    }
    if pts.len() == 1 {
        return (pts[0].1.exp(), 0.0);
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return (pts[0].1.exp(), 0.0);
    }
    let lambda = (n * sxy - sx * sy) / denom;
    let ln_a = (sy - lambda * sx) / n;
    (ln_a.exp(), lambda)
}

/// The three regularity surrogates of a solution:
/// `(sup |mu|, |d rho/dt|_{L^6(Q)}, |xi|_{L^6(Q)})`.
pub fn regularity_stats<S: Real>(solution: &SystemSolution<S>) -> (f64, f64, f64) {
    (
        solution.mu.max_abs().as_f64(),
        solution.dt_rho.norm_lp_q(Lp::Six).as_f64(),
        solution.xi.norm_lp_q(Lp::Six).as_f64(),
    )
}

#[derive(Debug, Clone, Copy)]
pub struct RegularityReport {
    pub coarse: (f64, f64, f64),
    pub fine: (f64, f64, f64),
    /// fine over coarse, entrywise (0 when the coarse value is 0)
    pub ratio: (f64, f64, f64),
}

/// Solve the configuration and its dyadic refinement and compare the
/// regularity surrogates. Requires the stronger initial-data
/// hypothesis: `rho0 (beta^o(rho0))^5` summable.
pub fn regularity_probe<S: Real>(config: &SystemConfig<S>) -> Result<RegularityReport> {
    config.initial_graph_integral(S::of(5.0)).map_err(|_| {
        Error::InvalidField(
            "rho0 (beta_min(rho0))^5 is not summable: regularity hypothesis violated".into(),
        )
    })?;
    let coarse_sol = outer_solve(config)?;
    let fine_sol = outer_solve(&config.refined(2)?)?;
    let coarse = regularity_stats(&coarse_sol);
    let fine = regularity_stats(&fine_sol);
    let ratio_of = |c: f64, f: f64| if c == 0.0 { 0.0 } else { f / c };
    Ok(RegularityReport {
        coarse,
        fine,
        ratio: (
            ratio_of(coarse.0, fine.0),
            ratio_of(coarse.1, fine.1),
            ratio_of(coarse.2, fine.2),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::nonlocal::OpForm;
    use std::f64::consts::PI;

    fn small_params() -> SolverParams<f64> {
        SolverParams {
            eps_schedule: vec![1e-1, 1e-2],
            picard_max_iter: 500,
            ..SolverParams::default()
        }
    }

    fn decoupled_config() -> SystemConfig<f64> {
        let d = Domain::line(16, 0.25, 25).unwrap();
        let op = Arc::new(
            NonlocalOp::build(OpForm::SpatialConv, KernelSpec::newtonian(0.1), d.clone()).unwrap(),
        );
        SystemConfig::new(
            op,
            MonotoneGraph::logarithmic(),
            LipschitzPi::linear(-4.0),
            CouplingG::constant(0.2).unwrap(),
            Field::from_fn(d.clone(), |x| 1.0 + 0.5 * (PI * x[0]).cos()),
            Field::constant(d.clone(), 0.2),
            small_params(),
        )
        .unwrap()
    }

    #[test]
    fn decoupled_system_converges_at_second_iterate() {
        let cfg = decoupled_config();
        let sol = outer_solve(&cfg).unwrap();
        assert!(sol.report.converged);
        assert_eq!(sol.report.rows.len(), 2);
        assert!(sol.report.rows[1].residual <= cfg.params.outer_tol);
        // with g' = 0 the first map ignores mu entirely: re-solving with
        // the converged mu reproduces rho bit-exactly
        let p = &cfg.params;
        let again = rho::solve(
            &RhoProblem::new(
                sol.mu.clone(),
                cfg.rho0.clone(),
                cfg.op.clone(),
                cfg.graph.clone(),
                cfg.pi,
                cfg.g.clone(),
                p.eps_schedule.clone(),
                p.picard_tol,
                p.picard_max_iter,
                p.eps_continuation_tol,
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(again.rho, sol.rho);
    }

    #[test]
    fn zero_initial_potential_is_a_fixed_point() {
        let d = Domain::line(8, 0.25, 10).unwrap();
        let op = Arc::new(
            NonlocalOp::build(OpForm::SpatialConv, KernelSpec::zero(), d.clone()).unwrap(),
        );
        let cfg = SystemConfig::new(
            op,
            MonotoneGraph::logarithmic(),
            LipschitzPi::linear(-4.0),
            CouplingG::parabolic(0.5).unwrap(),
            Field::zeros(d.clone()),
            Field::constant(d.clone(), 0.3),
            small_params(),
        )
        .unwrap();
        let sol = outer_solve(&cfg).unwrap();
        assert_eq!(sol.report.rows.len(), 1);
        assert_eq!(sol.report.rows[0].residual, 0.0);
        assert_eq!(sol.mu.max_abs(), 0.0);
    }

    #[test]
    fn coupled_solve_fixed_point_defect_small() {
        let d = Domain::line(16, 0.25, 25).unwrap();
        let op = Arc::new(
            NonlocalOp::build(OpForm::SpatialConv, KernelSpec::newtonian(0.1), d.clone()).unwrap(),
        );
        let cfg = SystemConfig::new(
            op,
            MonotoneGraph::logarithmic(),
            LipschitzPi::linear(-4.0),
            CouplingG::parabolic(0.5).unwrap(),
            Field::from_fn(d.clone(), |x| 1.0 + 0.5 * (PI * x[0]).cos()),
            Field::from_fn(d.clone(), |x| 0.3 * (2.0 * x[0] - 1.0)),
            small_params(),
        )
        .unwrap();
        let sol = outer_solve(&cfg).unwrap();
        assert!(sol.report.converged);
        // every iterate is nonnegative and inside the candidate set
        for row in &sol.report.rows {
            assert!(row.mu_min >= -1e-12, "iterate {} min {}", row.k, row.mu_min);
            assert!(
                row.membership_pass,
                "iterate {} left the candidate set",
                row.k
            );
        }
        let defect = fixed_point_defect(&cfg, &sol).unwrap();
        assert!(
            defect <= 2.0 * cfg.params.outer_tol,
            "fixed-point defect {defect}"
        );
    }

    #[test]
    fn membership_examples() {
        let d = Domain::line(6, 1.0, 5).unwrap();
        let zero = Trajectory::zeros(d.clone());
        assert!(check_membership(&zero, 1.0).pass());
        // one slightly negative cell fails positivity
        let mut vals = vec![0.5; 6];
        vals[3] = -1e-3;
        let bad = Trajectory::constant_in_time(&Field::new(d.clone(), vals).unwrap());
        let rep = check_membership(&bad, 10.0);
        assert!(!rep.positivity_ok && rep.norm_ok);
        assert!(!rep.pass());
    }

    #[test]
    fn zero_perturbation_gives_identical_runs() {
        let cfg = decoupled_config();
        let rep = perturbation_experiment(&cfg, None, None).unwrap();
        assert!(rep.rho_distance.iter().all(|&d| d == 0.0));
        assert_eq!(rep.amplitude, 0.0);
        assert_eq!(rep.exponent, 0.0);
    }

    #[test]
    fn outer_iteration_budget_zero_reports_non_convergence() {
        let mut cfg = decoupled_config();
        cfg.params.outer_max_iter = 0;
        match outer_solve(&cfg) {
            Err(Error::OuterNoConvergence { residuals, .. }) => assert!(residuals.is_empty()),
            other => panic!("expected OuterNoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn log_graph_rejects_endpoint_initial_data() {
        let d = Domain::line(8, 0.25, 10).unwrap();
        let op = Arc::new(
            NonlocalOp::build(OpForm::SpatialConv, KernelSpec::zero(), d.clone()).unwrap(),
        );
        let err = SystemConfig::new(
            op,
            MonotoneGraph::logarithmic(),
            LipschitzPi::linear(-4.0),
            CouplingG::constant(0.0).unwrap(),
            Field::constant(d.clone(), 1.0),
            Field::constant(d.clone(), 1.0), // touches the singular set
            small_params(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn supplied_embedding_constant_switches_the_radius() {
        let mut cfg = decoupled_config();
        cfg.params.c0 = Some(1.0);
        let sol = outer_solve(&cfg).unwrap();
        assert_eq!(sol.report.radius_source, "embedding");
        let expected = crate::mu::m0_radius(&cfg.g, &cfg.mu0, 1.0);
        assert_eq!(sol.report.radius, expected);
        cfg.params.c0 = None;
        let sol = outer_solve(&cfg).unwrap();
        assert_eq!(sol.report.radius_source, "surrogate");
        assert_eq!(
            sol.report.radius,
            crate::mu::surrogate_radius(&cfg.g, &cfg.mu0)
        );
    }

    #[test]
    fn refinement_preserves_initial_data_in_the_mean() {
        let cfg = decoupled_config();
        let fine = cfg.refined(2).unwrap();
        assert_eq!(fine.domain().n_cells(), 32);
        assert_eq!(fine.domain().num_steps(), 50);
        let back = fine.mu0.restrict(cfg.domain(), 2).unwrap();
        let diff = back.zip(&cfg.mu0, |a, b| a - b).unwrap().max_abs();
        assert!(diff < 1e-15);
    }
}
