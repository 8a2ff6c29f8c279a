//! The order-parameter map: given a nonnegative chemical potential
//! `mu`, solve
//!
//! ```text
//! d/dt rho + beta_eps(rho) + pi(rho) + B[rho] = T_eps(mu) g'(rho),
//! rho(0) = rho0
//! ```
//!
//! by Picard iteration of the integral operator
//! `S[v](t) = rho0 + int_0^t (T_eps(mu) g'(v) - beta_eps(v) - pi(v) - B[v]) ds`
//! with the left rectangle rule (discretely causal, explicit in time),
//! then drive `eps` to zero along a decreasing schedule with a
//! Cauchy-in-schedule stop. The truncation and the Yosida
//! regularization share the same `eps`. The coupling function enters
//! through extension A (globally concave, bounded derivative).

use crate::domain::{Field, Lp, Trajectory};
use crate::error::{Error, Result};
use crate::nonlocal::NonlocalOp;
use crate::potential::{truncate, CouplingG, GraphKind, LipschitzPi, MonotoneGraph};
use crate::scalar::Real;
use std::sync::Arc;

/// Slack below zero tolerated in "nonnegative" data (round-off guard).
pub const NONNEG_TOL: f64 = 1e-12;

/// Guard against runaway Picard iterates before they reach infinity.
const DIVERGENCE_GUARD: f64 = 1e120;

#[derive(Debug, Clone)]
pub struct RhoProblem<S: Real> {
    pub mu: Trajectory<S>,
    pub rho0: Field<S>,
    pub op: Arc<NonlocalOp<S>>,
    pub graph: MonotoneGraph<S>,
    pub pi: LipschitzPi<S>,
    pub g: CouplingG<S>,
    pub eps_schedule: Vec<S>,
    pub picard_tol: S,
    pub picard_max_iter: usize,
    pub eps_continuation_tol: S,
}

impl<S: Real> RhoProblem<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu: Trajectory<S>,
        rho0: Field<S>,
        op: Arc<NonlocalOp<S>>,
        graph: MonotoneGraph<S>,
        pi: LipschitzPi<S>,
        g: CouplingG<S>,
        eps_schedule: Vec<S>,
        picard_tol: S,
        picard_max_iter: usize,
        eps_continuation_tol: S,
    ) -> Result<Self> {
        if mu.domain() != rho0.domain() || op.domain() != rho0.domain() {
            return Err(Error::DomainMismatch);
        }
        let mu_min = mu.min_value();
        if mu_min < -S::of(NONNEG_TOL) {
            return Err(Error::PositivityViolation {
                min: mu_min.as_f64(),
                tol: NONNEG_TOL,
            });
        }
        let (lo, hi) = graph.domain_closure();
        if let Some(v) = rho0.values().iter().find(|v| **v < lo || **v > hi) {
            return Err(Error::OutsideGraphDomain {
                arg: v.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        if eps_schedule.is_empty() {
            return Err(Error::InvalidCoupling("empty eps schedule".into()));
        }
        for w in eps_schedule.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidCoupling(
                    "eps schedule must be strictly decreasing".into(),
                ));
            }
        }
        if !(*eps_schedule.last().unwrap() > S::zero()) {
            return Err(Error::InvalidCoupling(
                "eps schedule must stay positive".into(),
            ));
        }
        if !(picard_tol > S::zero()) || eps_continuation_tol < S::zero() {
            return Err(Error::InvalidCoupling("invalid solver tolerances".into()));
        }
        Ok(Self {
            mu,
            rho0,
            op,
            graph,
            pi,
            g,
            eps_schedule,
            picard_tol,
            picard_max_iter,
            eps_continuation_tol,
        })
    }
}

/// Report of one `eps` stage of the continuation.
#[derive(Debug, Clone)]
pub struct EpsStage {
    pub eps: f64,
    pub picard_iterations: usize,
    pub picard_residuals: Vec<f64>,
    /// `|rho_eps - rho_{previous eps}|_{L^2(Q)}`
    pub diff_from_prev: Option<f64>,
    pub xi_norm_l103: f64,
    /// `sup_Q dist(rho, [-1,1])` for the obstacle graph
    pub sup_constraint_dist: Option<f64>,
    /// `eps * sup_Q |beta_eps(rho)|` (equals the distance, pointwise)
    pub eps_sup_yosida: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RhoReport {
    pub stages: Vec<EpsStage>,
    /// empirical constant of the a priori estimate
    /// `|rho|_R + |xi|_{10/3} <= c (1 + |mu|_M)`
    pub apriori_c: f64,
    pub rho_norm_r: f64,
    pub xi_norm_l103: f64,
    pub rho_norm_linf_l2: f64,
}

impl RhoReport {
    pub fn total_picard_iterations(&self) -> usize {
        self.stages.iter().map(|s| s.picard_iterations).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RhoSolution<S: Real> {
    pub rho: Trajectory<S>,
    /// `beta_eps(rho)` at the final regularization level: the
    /// approximation of the section `xi` of `beta(rho)`
    pub xi: Trajectory<S>,
    /// forward differences, constant-extended at the final step
    pub dt_rho: Trajectory<S>,
    pub report: RhoReport,
}

/// One application of the integral operator `S` at level `eps`:
/// `u(t_n) = rho0 + dt sum_{m<n} [T_eps(mu) g'(v) - beta_eps(v) - pi(v) - B[v]](t_m)`.
pub fn picard_map<S: Real>(
    problem: &RhoProblem<S>,
    eps: S,
    v: &Trajectory<S>,
) -> Result<Trajectory<S>> {
    let bv = problem.op.apply(v)?;
    let domain = problem.rho0.domain().clone();
    let dt = domain.dt();
    let n_cells = domain.n_cells();
    let guard = S::of(DIVERGENCE_GUARD);

    let mut snaps = Vec::with_capacity(domain.num_steps() + 1);
    snaps.push(problem.rho0.clone());
    let mut current = problem.rho0.values().to_vec();
    for n in 0..domain.num_steps() {
        let vn = v.snapshot(n).values();
        let mun = problem.mu.snapshot(n).values();
        let bn = bv.snapshot(n).values();
        for i in 0..n_cells {
            let forcing = truncate(eps, mun[i]) * problem.g.ext_a_prime(vn[i])
                - problem.graph.yosida(eps, vn[i])?
                - problem.pi.eval(vn[i])
                - bn[i];
            current[i] += dt * forcing;
        }
        if current.iter().any(|x| !x.is_finite() || x.abs() > guard) {
            return Err(Error::PicardDiverged { sweep: 0 });
        }
        snaps.push(Field::new(domain.clone(), current.clone())?);
    }
    Trajectory::from_snapshots(snaps)
}

#[derive(Debug, Clone)]
pub struct PicardOutcome<S: Real> {
    pub trajectory: Trajectory<S>,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

/// Iterate `picard_map` from the constant-in-time initial datum until
/// successive sweeps differ by at most `picard_tol` in `L^2(Q)`.
pub fn solve_fixed_eps<S: Real>(problem: &RhoProblem<S>, eps: S) -> Result<PicardOutcome<S>> {
    let mut v = Trajectory::constant_in_time(&problem.rho0);
    let mut residuals: Vec<f64> = Vec::new();
    for sweep in 1..=problem.picard_max_iter {
        let u = picard_map(problem, eps, &v).map_err(|e| match e {
            Error::PicardDiverged { .. } => Error::PicardDiverged { sweep },
            other => other,
        })?;
        let diff = u.zip(&v, |a, b| a - b)?.norm_l2_q();
        residuals.push(diff.as_f64());
        if diff <= problem.picard_tol {
            return Ok(PicardOutcome {
                trajectory: u,
                iterations: sweep,
                residuals,
            });
        }
        v = u;
    }
    Err(Error::PicardMaxIter {
        tol: problem.picard_tol.as_f64(),
        max_iter: problem.picard_max_iter,
        last: residuals.last().copied().unwrap_or(f64::NAN),
        residuals,
    })
}

fn yosida_trajectory<S: Real>(
    problem: &RhoProblem<S>,
    eps: S,
    rho: &Trajectory<S>,
) -> Result<Trajectory<S>> {
    let snaps = rho
        .snapshots()
        .iter()
        .map(|f| {
            let vals = f
                .values()
                .iter()
                .map(|&r| problem.graph.yosida(eps, r))
                .collect::<Result<Vec<_>>>()?;
            Field::new(f.domain().clone(), vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_snapshots(snaps)
}

fn constraint_distance<S: Real>(rho: &Trajectory<S>) -> S {
    rho.snapshots().iter().fold(S::zero(), |acc, f| {
        f.values()
            .iter()
            .fold(acc, |m, &v| m.max((v.abs() - S::one()).max(S::zero())))
    })
}

/// Run the `eps` continuation and assemble the solution triplet.
pub fn solve<S: Real>(problem: &RhoProblem<S>) -> Result<RhoSolution<S>> {
    let mut stages: Vec<EpsStage> = Vec::new();
    let mut prev: Option<Trajectory<S>> = None;
    let mut xi_last: Option<Trajectory<S>> = None;
    let mut xi_norm_first: Option<f64> = None;
    let is_obstacle = matches!(problem.graph.kind(), GraphKind::Obstacle);

    for &eps in &problem.eps_schedule {
        let outcome = solve_fixed_eps(problem, eps)?;
        let xi = yosida_trajectory(problem, eps, &outcome.trajectory)?;
        let xi_norm = xi.norm_lp_q(Lp::TenThirds).as_f64();
        let first = *xi_norm_first.get_or_insert(xi_norm);
        if xi_norm > 1e8 * (1.0 + first) {
            return Err(Error::ConstraintBlowup(xi_norm));
        }
        let diff_from_prev = match &prev {
            Some(p) => Some(
                outcome
                    .trajectory
                    .zip(p, |a, b| a - b)?
                    .norm_l2_q()
                    .as_f64(),
            ),
            None => None,
        };
        let (dist, eps_sup) = if is_obstacle {
            let d = constraint_distance(&outcome.trajectory);
            let sup_beta = xi.max_abs();
            (Some(d.as_f64()), Some((eps * sup_beta).as_f64()))
        } else {
            (None, None)
        };
        stages.push(EpsStage {
            eps: eps.as_f64(),
            picard_iterations: outcome.iterations,
            picard_residuals: outcome.residuals,
            diff_from_prev,
            xi_norm_l103: xi_norm,
            sup_constraint_dist: dist,
            eps_sup_yosida: eps_sup,
        });
        prev = Some(outcome.trajectory);
        xi_last = Some(xi);
        if let Some(d) = diff_from_prev {
            if S::of(d) <= problem.eps_continuation_tol {
                break;
            }
        }
    }

    let rho = prev.expect("schedule is nonempty");
    let xi = xi_last.expect("schedule is nonempty");
    let dt_rho = rho.forward_dt();
    let rho_norm_r = rho.norm_r();
    let xi_norm = xi.norm_lp_q(Lp::TenThirds);
    let apriori_c = (rho_norm_r + xi_norm) / (S::one() + problem.mu.norm_m());
    let report = RhoReport {
        stages,
        apriori_c: apriori_c.as_f64(),
        rho_norm_r: rho_norm_r.as_f64(),
        xi_norm_l103: xi_norm.as_f64(),
        rho_norm_linf_l2: rho.norm_linf_l2().as_f64(),
    };
    Ok(RhoSolution {
        rho,
        xi,
        dt_rho,
        report,
    })
}
