//! The chemical-potential map: given the order parameter `rho` and its
//! discrete time derivative, solve the linear uniformly parabolic
//! problem
//!
//! ```text
//! (1 + 2 g(rho)) d/dt mu + mu g'(rho) d/dt rho - lap mu = 0,
//! zero-flux boundary, mu(0) = mu0 >= 0,
//! ```
//!
//! with coefficients frozen at the step start and the step fully
//! implicit in `mu`:
//!
//! ```text
//! [(1 + 2 g(rho^n))/dt + g'(rho^n) dt_rho^n] mu^{n+1} - lap mu^{n+1}
//!     = (1 + 2 g(rho^n))/dt mu^n.
//! ```
//!
//! The coupling function enters through extension B, whose floor
//! `1 + 2 g >= 1/3` makes the mass coefficient uniformly positive. When
//! the reaction term would destroy the M-matrix row sums the step is
//! re-run with halved sub-steps, which preserves inverse positivity and
//! hence `mu >= 0`. Each step is one symmetric positive definite solve
//! by diagonally preconditioned conjugate gradients.

use crate::domain::{Domain, Field, Trajectory};
use crate::error::{Error, Result};
use crate::potential::CouplingG;
use crate::rho::NONNEG_TOL;
use crate::scalar::Real;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct MuProblem<S: Real> {
    pub rho: Trajectory<S>,
    pub dt_rho: Trajectory<S>,
    pub mu0: Field<S>,
    pub g: CouplingG<S>,
    pub cg_tol: S,
    pub cg_max_iter: usize,
    pub max_halvings: u32,
    pub tol_energy: S,
}

impl<S: Real> MuProblem<S> {
    pub fn new(
        rho: Trajectory<S>,
        dt_rho: Trajectory<S>,
        mu0: Field<S>,
        g: CouplingG<S>,
    ) -> Result<Self> {
        if rho.domain() != mu0.domain() || dt_rho.domain() != mu0.domain() {
            return Err(Error::DomainMismatch);
        }
        let min = mu0.min();
        if min < -S::of(NONNEG_TOL) {
            return Err(Error::PositivityViolation {
                min: min.as_f64(),
                tol: NONNEG_TOL,
            });
        }
        // round-off negatives are flushed to zero
        let mu0 = if min < S::zero() {
            mu0.map(|v| v.max(S::zero()))
        } else {
            mu0
        };
        // uniform parabolicity from the extension-B floor
        let third = S::of(1.0 / 3.0) - S::of(1e-12);
        for snap in rho.snapshots() {
            for &r in snap.values() {
                if S::one() + S::of(2.0) * g.ext_b(r) < third {
                    return Err(Error::InvalidCoupling(format!(
                        "1 + 2 g(rho) fell below 1/3 at rho = {r}"
                    )));
                }
            }
        }
        Ok(Self {
            rho,
            dt_rho,
            mu0,
            g,
            cg_tol: S::of(1e-10),
            cg_max_iter: 10_000,
            max_halvings: 20,
            tol_energy: S::of(1e-6),
        })
    }

    pub fn with_tolerances(
        mut self,
        cg_tol: S,
        cg_max_iter: usize,
        max_halvings: u32,
        tol_energy: S,
    ) -> Self {
        self.cg_tol = cg_tol;
        self.cg_max_iter = cg_max_iter;
        self.max_halvings = max_halvings;
        self.tol_energy = tol_energy;
        self
    }
}

/// Per-run diagnostics: the discrete energy, cumulative dissipation,
/// minimum value, and step costs.
#[derive(Debug, Clone, Default)]
pub struct MuLedger {
    /// `E^n = int (1 + 2 g(rho^n)) |mu^n|^2`, n = 0..=N
    pub energy: Vec<f64>,
    /// cumulative `D^n = sum dt int |grad mu|^2`, n = 0..=N
    pub dissipation: Vec<f64>,
    /// min cell value per snapshot
    pub min_value: Vec<f64>,
    /// halvings used per step (0 = plain step)
    pub halvings: Vec<u32>,
    /// conjugate-gradient iterations per step (summed over sub-steps)
    pub cg_iterations: Vec<usize>,
    /// `max_n |mu^n|_V` (the `L^inf(0,T;V)` surrogate)
    pub norm_linf_v: f64,
    /// `|d mu/dt|_{L^2(Q)}` by forward differences (the `H^1(0,T;L^2)`
    /// surrogate)
    pub dt_mu_l2: f64,
}

impl MuLedger {
    /// Largest relative overshoot of `E^n + D^n` above `E^0`.
    pub fn energy_slack(&self) -> f64 {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        if e0 == 0.0 {
            return 0.0;
        }
        self.energy
            .iter()
            .zip(&self.dissipation)
            .map(|(e, d)| (e + d) / e0 - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_over_run(&self) -> f64 {
        self.min_value.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct MuSolution<S: Real> {
    pub mu: Trajectory<S>,
    pub ledger: MuLedger,
}

#[derive(Debug, Clone, Copy)]
pub struct StepStats<S: Real> {
    pub halvings: u32,
    pub cg_iterations: usize,
    /// `sum dt_sub int |grad mu_sub|^2` accumulated within the step
    pub dissipation_increment: S,
}

/// Advance one outer time step `t_n -> t_{n+1}` from `mu_n`.
pub fn step<S: Real>(
    problem: &MuProblem<S>,
    mu_n: &Field<S>,
    n: usize,
) -> Result<(Field<S>, StepStats<S>)> {
    let domain = problem.mu0.domain();
    let dt = domain.dt();
    let n_cells = domain.n_cells();

    // coefficients frozen at t_n
    let rho_n = problem.rho.snapshot(n).values();
    let dtr_n = problem.dt_rho.snapshot(n).values();
    let mut mass = vec![S::zero(); n_cells]; // 1 + 2 g(rho^n)
    let mut reaction = vec![S::zero(); n_cells]; // g'(rho^n) dt_rho^n
    for i in 0..n_cells {
        mass[i] = S::one() + S::of(2.0) * problem.g.ext_b(rho_n[i]);
        reaction[i] = problem.g.ext_b_prime(rho_n[i]) * dtr_n[i];
    }

    // sub-step until the M-matrix row sums mass/dt_sub + reaction stay
    // positive (the Laplacian rows sum to zero, so row sums are exactly
    // the mass/reaction part)
    let mut halvings = 0u32;
    let mut dt_sub = dt;
    let mut substeps = 1usize;
    loop {
        let ok = (0..n_cells).all(|i| mass[i] / dt_sub + reaction[i] > S::zero());
        if ok {
            break;
        }
        if halvings >= problem.max_halvings {
            return Err(Error::DtHalvingLimit {
                step: n,
                limit: problem.max_halvings,
            });
        }
        halvings += 1;
        dt_sub /= S::of(2.0);
        substeps *= 2;
    }

    let mut stats = StepStats {
        halvings,
        cg_iterations: 0,
        dissipation_increment: S::zero(),
    };
    let mut current = mu_n.clone();
    for _ in 0..substeps {
        let mut rhs = vec![S::zero(); n_cells];
        for i in 0..n_cells {
            rhs[i] = mass[i] / dt_sub * current.values()[i];
        }
        let diag: Vec<S> = (0..n_cells)
            .map(|i| mass[i] / dt_sub + reaction[i])
            .collect();
        let (sol, iters) = cg_solve(domain, &diag, &rhs, problem.cg_tol, problem.cg_max_iter)
            .map_err(|e| match e {
                Error::LinearSolveFailure {
                    iters, residual, ..
                } => Error::LinearSolveFailure {
                    step: n,
                    iters,
                    residual,
                },
                other => other,
            })?;
        stats.cg_iterations += iters;
        let next = Field::new(domain.clone(), sol)?;
        stats.dissipation_increment += dt_sub * next.grad_sq_norm();
        current = next;
    }
    Ok((current, stats))
}

/// Matrix-free CG on `A x = b` with `A = diag + (-lap)`, Jacobi
/// preconditioned. `A` is symmetric positive definite: the diagonal
/// part is positive and the Neumann Laplacian is negative semidefinite.
fn cg_solve<S: Real>(
    domain: &Arc<Domain<S>>,
    diag: &[S],
    b: &[S],
    tol: S,
    max_iter: usize,
) -> Result<(Vec<S>, usize)> {
    let n = b.len();
    let apply = |x: &[S]| -> Vec<S> {
        let fx = Field::new(domain.clone(), x.to_vec()).expect("finite CG iterate");
        let lap = fx.laplacian_neumann();
        (0..n).map(|i| diag[i] * x[i] - lap.values()[i]).collect()
    };
    // Jacobi preconditioner: diagonal of A includes the stencil diagonal
    let mut precond = vec![S::zero(); n];
    for i in 0..n {
        let idx = domain.multi_index(i);
        let mut lap_diag = S::zero();
        for a in 0..domain.dim() {
            let h2 = domain.spacing(a) * domain.spacing(a);
            let sides = (idx[a] > 0) as usize + (idx[a] + 1 < domain.cells(a)) as usize;
            lap_diag += S::of(sides as f64) / h2;
        }
        precond[i] = S::one() / (diag[i] + lap_diag);
    }

    let norm_b = b.iter().fold(S::zero(), |s, v| s + *v * *v).sqrt();
    if norm_b == S::zero() {
        return Ok((vec![S::zero(); n], 0));
    }
    let mut x = vec![S::zero(); n];
    let mut r = b.to_vec();
    let mut z: Vec<S> = r.iter().zip(&precond).map(|(ri, pi)| *ri * *pi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for iter in 1..=max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let norm_r = r.iter().fold(S::zero(), |s, v| s + *v * *v).sqrt();
        if norm_r <= tol * norm_b {
            return Ok((x, iter));
        }
        for i in 0..n {
            z[i] = r[i] * precond[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let norm_r = r.iter().fold(S::zero(), |s, v| s + *v * *v).sqrt();
    Err(Error::LinearSolveFailure {
        step: 0,
        iters: max_iter,
        residual: (norm_r / norm_b).as_f64(),
    })
}

fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |s, (x, y)| s + *x * *y)
}

fn energy_at<S: Real>(problem: &MuProblem<S>, mu: &Field<S>, n: usize) -> S {
    let vol = mu.domain().cell_volume();
    let rho_n = problem.rho.snapshot(n).values();
    mu.values()
        .iter()
        .zip(rho_n)
        .fold(S::zero(), |s, (&m, &r)| {
            s + (S::one() + S::of(2.0) * problem.g.ext_b(r)) * m * m
        })
        * vol
}

/// March the implicit scheme over `[0, T]`, fill the ledgers, and
/// enforce the discrete energy bound and nonnegativity.
pub fn solve<S: Real>(problem: &MuProblem<S>) -> Result<MuSolution<S>> {
    let domain = problem.mu0.domain().clone();
    let n_steps = domain.num_steps();
    let mut ledger = MuLedger::default();
    let mut snaps = Vec::with_capacity(n_steps + 1);
    snaps.push(problem.mu0.clone());
    ledger
        .energy
        .push(energy_at(problem, &problem.mu0, 0).as_f64());
    ledger.dissipation.push(0.0);
    ledger.min_value.push(problem.mu0.min().as_f64());

    let mut dissipation = S::zero();
    for n in 0..n_steps {
        let (next, stats) = step(problem, &snaps[n], n)?;
        dissipation += stats.dissipation_increment;
        ledger
            .energy
            .push(energy_at(problem, &next, n + 1).as_f64());
        ledger.dissipation.push(dissipation.as_f64());
        ledger.min_value.push(next.min().as_f64());
        ledger.halvings.push(stats.halvings);
        ledger.cg_iterations.push(stats.cg_iterations);
        snaps.push(next);
    }
    let mu = Trajectory::from_snapshots(snaps)?;
    ledger.norm_linf_v = mu.norm_linf_v().as_f64();
    ledger.dt_mu_l2 = mu.forward_dt().norm_l2_q().as_f64();

    // nonnegativity (inverse positivity of the M-matrix steps)
    let min = mu.min_value();
    if min < -S::of(NONNEG_TOL) {
        return Err(Error::PositivityViolation {
            min: min.as_f64(),
            tol: NONNEG_TOL,
        });
    }

    // discrete dissipativity: E^n + D^n <= E^0 (1 + tol)
    let tol = problem.tol_energy.as_f64();
    let e0 = ledger.energy[0];
    for n in 0..=n_steps {
        let lhs = ledger.energy[n] + ledger.dissipation[n];
        if lhs > e0 * (1.0 + tol) {
            return Err(Error::EnergyBoundViolation {
                step: n,
                lhs,
                rhs: e0 * (1.0 + tol),
            });
        }
    }
    // energy bound: max_n max(|mu^n|_2^2, D^n) <= 3 (1 + 2 sup g) |mu0|_2^2
    let bound = 3.0 * (1.0 + 2.0 * problem.g.sup().as_f64()) * problem.mu0.norm_l2_sq().as_f64();
    for n in 0..=n_steps {
        let norm_sq = mu.snapshot(n).norm_l2_sq().as_f64();
        let lhs = norm_sq.max(ledger.dissipation[n]);
        if lhs > bound * (1.0 + tol) {
            return Err(Error::EnergyBoundViolation {
                step: n,
                lhs,
                rhs: bound * (1.0 + tol),
            });
        }
    }

    Ok(MuSolution { mu, ledger })
}

/// The fixed-point radius `M0 = C0 (3 + 6 sup g)^{1/2} |mu0|_{L^2}`,
/// available when the embedding constant `C0` is supplied.
pub fn m0_radius<S: Real>(g: &CouplingG<S>, mu0: &Field<S>, c0: S) -> S {
    c0 * (S::of(3.0) + S::of(6.0) * g.sup()).sqrt() * mu0.norm_l2()
}

/// Embedding-constant-free surrogate radius
/// `((1 + T) 3 (1 + 2 sup g))^{1/2} |mu0|_2`, derived from the energy
/// bound: `T max_n |mu^n|_2^2` dominates the zero-order part of the
/// `L^2(0,T;V)` constituent and the dissipation ledger its gradient
/// part (up to the one `dt`-weighted initial-gradient term).
pub fn surrogate_radius<S: Real>(g: &CouplingG<S>, mu0: &Field<S>) -> S {
    let t = mu0.domain().final_time();
    ((S::one() + t) * S::of(3.0) * (S::one() + S::of(2.0) * g.sup())).sqrt() * mu0.norm_l2()
}
