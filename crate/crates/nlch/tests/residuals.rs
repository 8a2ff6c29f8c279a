//! Consistency of converged triplets: substitute `(mu, rho, xi)` into
//! the two discrete equations, re-evaluating every term independently
//! of the solver's internal path, and check the residuals against
//! budgets derived from the sub-solver tolerances.

use nlch::coupled::{self, SolverParams, SystemConfig};
use nlch::domain::{Domain, Field};
use nlch::kernel::KernelSpec;
use nlch::nonlocal::{NonlocalOp, OpForm};
use nlch::potential::{truncate, CouplingG, LipschitzPi, MonotoneGraph};
use std::f64::consts::PI;
use std::sync::Arc;

fn fixture(cells: usize, steps: usize) -> SystemConfig<f64> {
    let domain = Domain::line(cells, 0.25, steps).unwrap();
    let op = Arc::new(
        NonlocalOp::build(
            OpForm::SpatialConv,
            KernelSpec::newtonian(0.1),
            domain.clone(),
        )
        .unwrap(),
    );
    SystemConfig::new(
        op,
        MonotoneGraph::logarithmic(),
        LipschitzPi::linear(-4.0),
        CouplingG::parabolic(0.5).unwrap(),
        Field::from_fn(domain.clone(), |x| 1.0 + 0.5 * (PI * x[0]).cos()),
        Field::constant(domain.clone(), 0.2),
        SolverParams {
            eps_schedule: vec![1e-1, 1e-2],
            picard_max_iter: 800,
            ..SolverParams::default()
        },
    )
    .unwrap()
}

#[test]
fn converged_triplet_satisfies_both_discrete_equations() {
    let cfg = fixture(64, 50);
    let sol = coupled::outer_solve(&cfg).unwrap();
    assert!(sol.report.converged);
    let domain = cfg.domain();
    let dt = domain.dt();
    let n_cells = domain.n_cells();
    let vol = domain.cell_volume();
    let eps_final = sol.report.rho_report.stages.last().unwrap().eps;

    // order-parameter equation: d/dt rho + beta_eps(rho) + pi(rho) +
    // B[rho] = T_eps(mu) g'(rho), with every term recomputed here
    let b_rho = cfg.op.apply(&sol.rho).unwrap();
    let mu_clipped = sol.mu.map(|v| v.max(0.0));
    let mut max_res_rho = 0.0f64;
    for n in 0..domain.num_steps() {
        let rn = sol.rho.snapshot(n).values();
        let rn1 = sol.rho.snapshot(n + 1).values();
        let mun = mu_clipped.snapshot(n).values();
        let bn = b_rho.snapshot(n).values();
        let mut sq = 0.0;
        for i in 0..n_cells {
            let res = (rn1[i] - rn[i]) / dt
                + cfg.graph.yosida(eps_final, rn[i]).unwrap()
                + cfg.pi.eval(rn[i])
                + bn[i]
                - truncate(eps_final, mun[i]) * cfg.g.ext_a_prime(rn[i]);
            sq += res * res;
        }
        max_res_rho = max_res_rho.max((sq * vol).sqrt());
    }
    // budget: the Picard stop and the outer fixed-point gap, amplified
    // by the integrand's Lipschitz constant, spread over one step slice
    let lip = 1.0 / eps_final + cfg.pi.lipschitz() + cfg.op.c_b() + sol.mu.max_abs();
    let budget_rho =
        10.0 * (lip * cfg.params.picard_tol + sol.mu.max_abs() * cfg.params.outer_tol) / dt.sqrt();
    assert!(
        max_res_rho <= budget_rho,
        "rho-equation residual {max_res_rho} > budget {budget_rho}"
    );

    // chemical-potential equation: each implicit step solved the linear
    // system to the CG tolerance and took no sub-steps on this fixture
    assert!(sol.report.mu_ledger.halvings.iter().all(|&h| h == 0));
    let mut max_res_mu = 0.0f64;
    let mut max_rhs = 0.0f64;
    for n in 0..domain.num_steps() {
        let rn = sol.rho.snapshot(n).values();
        let dtr = sol.dt_rho.snapshot(n).values();
        let lap = sol.mu.snapshot(n + 1).laplacian_neumann();
        let mu_n = sol.mu.snapshot(n).values();
        let mu_n1 = sol.mu.snapshot(n + 1).values();
        let mut sq = 0.0;
        let mut rhs_sq = 0.0;
        for i in 0..n_cells {
            let mass = 1.0 + 2.0 * cfg.g.ext_b(rn[i]);
            let reaction = cfg.g.ext_b_prime(rn[i]) * dtr[i];
            let res = (mass / dt + reaction) * mu_n1[i] - lap.values()[i] - mass / dt * mu_n[i];
            sq += res * res;
            rhs_sq += (mass / dt * mu_n[i]).powi(2);
        }
        max_res_mu = max_res_mu.max((sq * vol).sqrt());
        max_rhs = max_rhs.max((rhs_sq * vol).sqrt());
    }
    let budget_mu = 10.0 * cfg.params.cg_tol * max_rhs;
    assert!(
        max_res_mu <= budget_mu,
        "mu-equation residual {max_res_mu} > budget {budget_mu}"
    );
    println!(
        "pde residuals: rho {max_res_rho:.3e} (budget {budget_rho:.3e}), \
         mu {max_res_mu:.3e} (budget {budget_mu:.3e})"
    );
}

#[test]
fn apriori_constant_stable_under_refinement() {
    // the a priori monitor |rho|_R + |xi|_{10/3} <= c (1 + |mu|_M):
    // the recorded empirical constant stays of the same size when the
    // grid is refined dyadically
    let coarse = coupled::outer_solve(&fixture(32, 50)).unwrap();
    let fine = coupled::outer_solve(&fixture(64, 100)).unwrap();
    let (cc, cf) = (
        coarse.report.rho_report.apriori_c,
        fine.report.rho_report.apriori_c,
    );
    assert!(cc > 0.0 && cf > 0.0);
    let ratio = cf / cc;
    assert!(
        (0.5..=2.0).contains(&ratio),
        "a priori constant drifted under refinement: {cc} -> {cf}"
    );
}

#[test]
fn residuals_vanish_under_simultaneous_tightening() {
    // first-order consistency: tightening dt and the Picard tolerance
    // together shrinks the rho-equation residual
    let residual_for = |steps: usize, tol: f64| {
        let mut cfg = fixture(32, steps);
        cfg.params.picard_tol = tol;
        let sol = coupled::outer_solve(&cfg).unwrap();
        let domain = cfg.domain();
        let dt = domain.dt();
        let eps_final = sol.report.rho_report.stages.last().unwrap().eps;
        let b_rho = cfg.op.apply(&sol.rho).unwrap();
        let mu_clipped = sol.mu.map(|v: f64| v.max(0.0));
        let mut max_res = 0.0f64;
        for n in 0..domain.num_steps() {
            let rn = sol.rho.snapshot(n).values();
            let rn1 = sol.rho.snapshot(n + 1).values();
            let mun = mu_clipped.snapshot(n).values();
            let bn = b_rho.snapshot(n).values();
            let mut sq = 0.0;
            for i in 0..domain.n_cells() {
                let res = (rn1[i] - rn[i]) / dt
                    + cfg.graph.yosida(eps_final, rn[i]).unwrap()
                    + cfg.pi.eval(rn[i])
                    + bn[i]
                    - truncate(eps_final, mun[i]) * cfg.g.ext_a_prime(rn[i]);
                sq += res * res;
            }
            max_res = max_res.max((sq * domain.cell_volume()).sqrt());
        }
        max_res
    };
    let loose = residual_for(25, 1e-6);
    let tight = residual_for(100, 1e-10);
    assert!(tight < loose, "residual did not shrink: {loose} -> {tight}");
}
