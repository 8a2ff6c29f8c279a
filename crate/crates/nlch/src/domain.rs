//! Spatial domain, discrete fields, trajectories, and the discrete
//! function-space norms used by the solvers.
//!
//! The grid is uniform and cell-centered. The Laplacian closes the
//! boundary with mirror ghost cells, which reproduces the zero-flux
//! (homogeneous Neumann) condition and makes the discrete divergence
//! theorem exact: the Laplacian of any field sums to zero over the grid.
//! Space-time integrals use cell volume times `dt` with the left
//! rectangle rule in time, matching the causal update of the
//! order-parameter solver.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::sync::Arc;

pub const MAX_DIM: usize = 3;

/// Uniform cell-centered grid on a box, plus the time grid on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain<S: Real> {
    dim: usize,
    cells: [usize; MAX_DIM],
    extent: [S; MAX_DIM],
    spacing: [S; MAX_DIM],
    final_time: S,
    num_steps: usize,
    dt: S,
}

impl<S: Real> Domain<S> {
    pub fn new(
        dim: usize,
        cells: &[usize],
        extent: &[S],
        final_time: S,
        num_steps: usize,
    ) -> Result<Arc<Self>> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidDomain(format!(
                "dim must be 1, 2 or 3, got {dim}"
            )));
        }
        if cells.len() != dim || extent.len() != dim {
            return Err(Error::InvalidDomain(format!(
                "expected {dim} cell counts and extents, got {} and {}",
                cells.len(),
                extent.len()
            )));
        }
        let mut c = [1usize; MAX_DIM];
        let mut e = [S::one(); MAX_DIM];
        let mut h = [S::one(); MAX_DIM];
        for a in 0..dim {
            if cells[a] == 0 {
                return Err(Error::InvalidDomain(format!("cells[{a}] must be positive")));
            }
            if !(extent[a] > S::zero()) || !extent[a].is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "extent[{a}] must be positive and finite, got {}",
                    extent[a]
                )));
            }
            c[a] = cells[a];
            e[a] = extent[a];
            h[a] = extent[a] / S::of(cells[a] as f64);
        }
        if !(final_time > S::zero()) || !final_time.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "final time must be positive and finite, got {final_time}"
            )));
        }
        if num_steps == 0 {
            return Err(Error::InvalidDomain("num_steps must be positive".into()));
        }
        let dt = final_time / S::of(num_steps as f64);
        Ok(Arc::new(Self {
            dim,
            cells: c,
            extent: e,
            spacing: h,
            final_time,
            num_steps,
            dt,
        }))
    }

    /// Convenience constructor for the unit interval `(0, 1)`.
    pub fn line(cells: usize, final_time: S, num_steps: usize) -> Result<Arc<Self>> {
        Self::new(1, &[cells], &[S::one()], final_time, num_steps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn extent(&self, axis: usize) -> S {
        self.extent[axis]
    }

    pub fn spacing(&self, axis: usize) -> S {
        self.spacing[axis]
    }

    pub fn min_spacing(&self) -> S {
        (0..self.dim)
            .map(|a| self.spacing[a])
            .fold(S::infinity(), S::min)
    }

    pub fn final_time(&self) -> S {
        self.final_time
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn dt(&self) -> S {
        self.dt
    }

    pub fn n_cells(&self) -> usize {
        (0..self.dim).map(|a| self.cells[a]).product()
    }

    pub fn cell_volume(&self) -> S {
        (0..self.dim)
            .map(|a| self.spacing[a])
            .fold(S::one(), |p, h| p * h)
    }

    pub fn diameter(&self) -> S {
        (0..self.dim)
            .map(|a| self.extent[a] * self.extent[a])
            .fold(S::zero(), |s, x| s + x)
            .sqrt()
    }

    /// Row-major strides for flat cell indexing.
    fn strides(&self) -> [usize; MAX_DIM] {
        let mut s = [0usize; MAX_DIM];
        let mut acc = 1;
        for a in 0..self.dim {
            s[a] = acc;
            acc *= self.cells[a];
        }
        s
    }

    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        let mut rest = flat;
        for a in 0..self.dim {
            idx[a] = rest % self.cells[a];
            rest /= self.cells[a];
        }
        idx
    }

    /// Center coordinates of a cell, `x_a = (i_a + 1/2) h_a`.
    pub fn cell_center(&self, flat: usize) -> [S; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut x = [S::zero(); MAX_DIM];
        for a in 0..self.dim {
            x[a] = (S::of(idx[a] as f64) + S::of(0.5)) * self.spacing[a];
        }
        x
    }

    pub fn cell_distance(&self, i: usize, j: usize) -> S {
        let xi = self.cell_center(i);
        let xj = self.cell_center(j);
        let mut d2 = S::zero();
        for a in 0..self.dim {
            let d = xi[a] - xj[a];
            d2 += d * d;
        }
        d2.sqrt()
    }

    pub fn time(&self, step: usize) -> S {
        S::of(step as f64) * self.dt
    }

    /// Same spatial grid, `factor`-times refined in every axis and in time.
    pub fn refined(&self, factor: usize) -> Result<Arc<Self>> {
        let cells: Vec<usize> = (0..self.dim).map(|a| self.cells[a] * factor).collect();
        let extent: Vec<S> = (0..self.dim).map(|a| self.extent[a]).collect();
        Domain::new(
            self.dim,
            &cells,
            &extent,
            self.final_time,
            self.num_steps * factor,
        )
    }
}

/// Scalar function on the grid at one time level (cell-centered values).
#[derive(Debug, Clone, PartialEq)]
pub struct Field<S: Real> {
    domain: Arc<Domain<S>>,
    values: Vec<S>,
}

impl<S: Real> Field<S> {
    pub fn new(domain: Arc<Domain<S>>, values: Vec<S>) -> Result<Self> {
        if values.len() != domain.n_cells() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                domain.n_cells(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value {v}")));
        }
        Ok(Self { domain, values })
    }

    pub fn constant(domain: Arc<Domain<S>>, value: S) -> Self {
        let n = domain.n_cells();
        Self {
            domain,
            values: vec![value; n],
        }
    }

    pub fn zeros(domain: Arc<Domain<S>>) -> Self {
        Self::constant(domain, S::zero())
    }

    /// Build a field by evaluating `f` at every cell center.
    pub fn from_fn(domain: Arc<Domain<S>>, f: impl Fn(&[S]) -> S) -> Self {
        let n = domain.n_cells();
        let dim = domain.dim();
        let values = (0..n)
            .map(|i| {
                let x = domain.cell_center(i);
                f(&x[..dim])
            })
            .collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<Domain<S>> {
        &self.domain
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> S {
        self.values.iter().copied().fold(S::infinity(), S::min)
    }

    pub fn max(&self) -> S {
        self.values.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn max_abs(&self) -> S {
        self.values.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        self.check_same_domain(other)?;
        Ok(Self {
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same_domain(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    /// `self + alpha * other`, elementwise.
    pub fn axpy(&self, alpha: S, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + alpha * b)
    }

    pub fn scale(&self, alpha: S) -> Self {
        self.map(|v| alpha * v)
    }

    /// Second-order centered Laplacian with mirror ghost cells
    /// (homogeneous Neumann closure). Output sums to zero over the grid
    /// up to round-off.
    pub fn laplacian_neumann(&self) -> Self {
        let dom = &self.domain;
        let strides = dom.strides();
        let n = dom.n_cells();
        let mut out = vec![S::zero(); n];
        for flat in 0..n {
            let idx = dom.multi_index(flat);
            let center = self.values[flat];
            let mut acc = S::zero();
            for a in 0..dom.dim() {
                let h2 = dom.spacing(a) * dom.spacing(a);
                // mirror ghost: the value beyond the wall equals the wall cell
                let left = if idx[a] > 0 {
                    self.values[flat - strides[a]]
                } else {
                    center
                };
                let right = if idx[a] + 1 < dom.cells(a) {
                    self.values[flat + strides[a]]
                } else {
                    center
                };
                acc += (left - (center + center) + right) / h2;
            }
            out[flat] = acc;
        }
        Self {
            domain: self.domain.clone(),
            values: out,
        }
    }

    /// Discrete `integral of |grad f|^2` via forward differences on
    /// interior faces; zero iff `f` is constant.
    pub fn grad_sq_norm(&self) -> S {
        self.grad_dot(self).expect("same field shares its domain")
    }

    /// Discrete `integral of grad a . grad b` on interior faces. This is
    /// the exact summation-by-parts dual of [`Field::laplacian_neumann`]:
    /// `sum_i (-lap a)_i b_i vol = grad_dot(a, b)`.
    pub fn grad_dot(&self, other: &Self) -> Result<S> {
        self.check_same_domain(other)?;
        let dom = &self.domain;
        let strides = dom.strides();
        let vol = dom.cell_volume();
        let mut acc = S::zero();
        for flat in 0..dom.n_cells() {
            let idx = dom.multi_index(flat);
            for a in 0..dom.dim() {
                if idx[a] + 1 < dom.cells(a) {
                    let h = dom.spacing(a);
                    let da = (self.values[flat + strides[a]] - self.values[flat]) / h;
                    let db = (other.values[flat + strides[a]] - other.values[flat]) / h;
                    acc += da * db * vol;
                }
            }
        }
        Ok(acc)
    }

    /// `integral over Omega of f^2` with the cell-volume quadrature.
    pub fn norm_l2_sq(&self) -> S {
        let vol = self.domain.cell_volume();
        self.values.iter().fold(S::zero(), |s, &v| s + v * v) * vol
    }

    pub fn norm_l2(&self) -> S {
        self.norm_l2_sq().sqrt()
    }

    /// Squared `H^1` norm: `|f|_2^2 + |grad f|_2^2`.
    pub fn norm_v_sq(&self) -> S {
        self.norm_l2_sq() + self.grad_sq_norm()
    }

    fn integral_abs_pow(&self, p: S) -> S {
        let vol = self.domain.cell_volume();
        self.values
            .iter()
            .fold(S::zero(), |s, &v| s + v.abs().powf(p))
            * vol
    }

    /// Inject onto a `factor`-times finer grid by block replication
    /// (piecewise-constant prolongation).
    pub fn prolong(&self, fine: &Arc<Domain<S>>, factor: usize) -> Result<Self> {
        let coarse = &self.domain;
        if fine.dim() != coarse.dim()
            || (0..coarse.dim()).any(|a| fine.cells(a) != coarse.cells(a) * factor)
        {
            return Err(Error::DomainMismatch);
        }
        let values = (0..fine.n_cells())
            .map(|flat| {
                let idx = fine.multi_index(flat);
                let mut coarse_flat = 0;
                let mut stride = 1;
                for a in 0..coarse.dim() {
                    coarse_flat += (idx[a] / factor) * stride;
                    stride *= coarse.cells(a);
                }
                self.values[coarse_flat]
            })
            .collect();
        Field::new(fine.clone(), values)
    }

    /// Restrict onto a `factor`-times coarser grid by block averaging.
    pub fn restrict(&self, coarse: &Arc<Domain<S>>, factor: usize) -> Result<Self> {
        let fine = &self.domain;
        if fine.dim() != coarse.dim()
            || (0..coarse.dim()).any(|a| fine.cells(a) != coarse.cells(a) * factor)
        {
            return Err(Error::DomainMismatch);
        }
        let block = S::of((factor.pow(coarse.dim() as u32)) as f64);
        let mut sums = vec![S::zero(); coarse.n_cells()];
        for flat in 0..fine.n_cells() {
            let idx = fine.multi_index(flat);
            let mut coarse_flat = 0;
            let mut stride = 1;
            for a in 0..coarse.dim() {
                coarse_flat += (idx[a] / factor) * stride;
                stride *= coarse.cells(a);
            }
            sums[coarse_flat] += self.values[flat];
        }
        for s in &mut sums {
            *s /= block;
        }
        Field::new(coarse.clone(), sums)
    }
}

/// Supported Lebesgue exponents for space-time norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lp {
    One,
    Two,
    TenThirds,
    Six,
    Infinity,
}

impl Lp {
    pub fn exponent<S: Real>(self) -> Option<S> {
        match self {
            Lp::One => Some(S::one()),
            Lp::Two => Some(S::of(2.0)),
            Lp::TenThirds => Some(S::of(10.0) / S::of(3.0)),
            Lp::Six => Some(S::of(6.0)),
            Lp::Infinity => None,
        }
    }

    /// Accepts exactly the supported set {1, 2, 10/3, 6, inf}.
    pub fn try_from_scalar<S: Real>(p: S) -> Result<Self> {
        let candidates = [Lp::One, Lp::Two, Lp::TenThirds, Lp::Six];
        if p == S::infinity() {
            return Ok(Lp::Infinity);
        }
        for c in candidates {
            let e: S = c.exponent().expect("finite exponent");
            if (p - e).abs() <= S::of(1e-12) * e {
                return Ok(c);
            }
        }
        Err(Error::UnsupportedExponent(p.as_f64()))
    }
}

/// Time-indexed sequence of fields: snapshots at `t_n = n dt`, n = 0..=N.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S: Real> {
    domain: Arc<Domain<S>>,
    snapshots: Vec<Field<S>>,
}

impl<S: Real> Trajectory<S> {
    pub fn from_snapshots(snapshots: Vec<Field<S>>) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::InvalidField("trajectory needs at least one snapshot".into()))?;
        let domain = first.domain().clone();
        if snapshots.len() != domain.num_steps() + 1 {
            return Err(Error::InvalidField(format!(
                "expected {} snapshots, got {}",
                domain.num_steps() + 1,
                snapshots.len()
            )));
        }
        for s in &snapshots {
            if *s.domain() != domain {
                return Err(Error::DomainMismatch);
            }
        }
        Ok(Self { domain, snapshots })
    }

    /// The trajectory holding `field` at every time level.
    pub fn constant_in_time(field: &Field<S>) -> Self {
        let domain = field.domain().clone();
        let n = domain.num_steps();
        Self {
            domain,
            snapshots: vec![field.clone(); n + 1],
        }
    }

    pub fn zeros(domain: Arc<Domain<S>>) -> Self {
        Self::constant_in_time(&Field::zeros(domain))
    }

    pub fn domain(&self) -> &Arc<Domain<S>> {
        &self.domain
    }

    pub fn snapshots(&self) -> &[Field<S>] {
        &self.snapshots
    }

    pub fn snapshot(&self, n: usize) -> &Field<S> {
        &self.snapshots[n]
    }

    pub fn num_steps(&self) -> usize {
        self.domain.num_steps()
    }

    pub fn min_value(&self) -> S {
        self.snapshots
            .iter()
            .map(Field::min)
            .fold(S::infinity(), S::min)
    }

    pub fn max_abs(&self) -> S {
        self.snapshots
            .iter()
            .map(Field::max_abs)
            .fold(S::zero(), S::max)
    }

    pub fn is_finite(&self) -> bool {
        self.snapshots.iter().all(Field::is_finite)
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            domain: self.domain.clone(),
            snapshots: self.snapshots.iter().map(|s| s.map(&f)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        let snapshots = self
            .snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| a.zip(b, &f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            domain: self.domain.clone(),
            snapshots,
        })
    }

    pub fn scale(&self, alpha: S) -> Self {
        self.map(|v| alpha * v)
    }

    /// `L^p(Q_t)` norm over the prefix `t = steps * dt`. Integral norms
    /// use the left rectangle rule (snapshots `0..steps`); the sup norm
    /// takes the max over snapshots `0..=steps`.
    pub fn norm_lp_q_prefix(&self, p: Lp, steps: usize) -> S {
        assert!(steps <= self.num_steps(), "prefix beyond final time");
        match p.exponent::<S>() {
            None => self.snapshots[..=steps]
                .iter()
                .map(Field::max_abs)
                .fold(S::zero(), S::max),
            Some(e) => {
                let dt = self.domain.dt();
                let sum = self.snapshots[..steps]
                    .iter()
                    .fold(S::zero(), |s, f| s + f.integral_abs_pow(e));
                (sum * dt).powf(S::one() / e)
            }
        }
    }

    pub fn norm_lp_q(&self, p: Lp) -> S {
        self.norm_lp_q_prefix(p, self.num_steps())
    }

    /// `L^p(Q)` norm with the exponent given as a scalar; rejects
    /// unsupported exponents.
    pub fn norm_lp_q_scalar(&self, p: S) -> Result<S> {
        Ok(self.norm_lp_q(Lp::try_from_scalar(p)?))
    }

    pub fn norm_l2_q_prefix(&self, steps: usize) -> S {
        self.norm_lp_q_prefix(Lp::Two, steps)
    }

    pub fn norm_l2_q(&self) -> S {
        self.norm_lp_q(Lp::Two)
    }

    /// `L^2(0, t; V)` norm over the prefix: rectangle rule over the
    /// squared `H^1` norms per time level.
    pub fn norm_l2_v_prefix(&self, steps: usize) -> S {
        assert!(steps <= self.num_steps(), "prefix beyond final time");
        let dt = self.domain.dt();
        let sum = self.snapshots[..steps]
            .iter()
            .fold(S::zero(), |s, f| s + f.norm_v_sq());
        (sum * dt).sqrt()
    }

    pub fn norm_l2_v(&self) -> S {
        self.norm_l2_v_prefix(self.num_steps())
    }

    /// Norm of the fixed-point space: max of the `L^{10/3}(Q)` and
    /// `L^2(0,T;V)` constituents.
    pub fn norm_m(&self) -> S {
        self.norm_lp_q(Lp::TenThirds).max(self.norm_l2_v())
    }

    /// `max_n |u^n|_{L^2}` (discrete `L^inf(0,T;H)`).
    pub fn norm_linf_l2(&self) -> S {
        self.snapshots
            .iter()
            .map(Field::norm_l2)
            .fold(S::zero(), S::max)
    }

    /// `max_n |u^n|_V`.
    pub fn norm_linf_v(&self) -> S {
        self.snapshots
            .iter()
            .map(|f| f.norm_v_sq().sqrt())
            .fold(S::zero(), S::max)
    }

    /// Discrete surrogate of the order-parameter solution space: the max
    /// of `|u|_{L^{10/3}(Q)}`, `|du/dt|_{L^{10/3}(Q)}` (forward
    /// differences) and `max_n |u^n|_V`.
    pub fn norm_r(&self) -> S {
        let dt_traj = self.forward_dt();
        self.norm_lp_q(Lp::TenThirds)
            .max(dt_traj.norm_lp_q(Lp::TenThirds))
            .max(self.norm_linf_v())
    }

    /// Restrict to a dyadically coarser space-time grid: block-averaged
    /// snapshots at every `factor`-th time level.
    pub fn restrict(&self, coarse: &Arc<Domain<S>>, factor: usize) -> Result<Self> {
        if self.domain.num_steps() != coarse.num_steps() * factor {
            return Err(Error::DomainMismatch);
        }
        let snaps = (0..=coarse.num_steps())
            .map(|n| self.snapshots[n * factor].restrict(coarse, factor))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::from_snapshots(snaps)
    }

    /// Forward time differences `(u^{n+1} - u^n)/dt`, constant-extended
    /// at the final snapshot.
    pub fn forward_dt(&self) -> Self {
        let dt = self.domain.dt();
        let n = self.num_steps();
        let mut snaps = Vec::with_capacity(n + 1);
        for m in 0..n {
            let d = self.snapshots[m + 1]
                .zip(&self.snapshots[m], |a, b| (a - b) / dt)
                .expect("snapshots share the domain");
            snaps.push(d);
        }
        snaps.push(snaps[n - 1].clone());
        Self {
            domain: self.domain.clone(),
            snapshots: snaps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit_line(cells: usize) -> Arc<Domain<f64>> {
        Domain::line(cells, 1.0, 10).unwrap()
    }

    #[test]
    fn domain_rejects_bad_input() {
        assert!(Domain::<f64>::new(0, &[], &[], 1.0, 1).is_err());
        assert!(Domain::<f64>::new(1, &[0], &[1.0], 1.0, 1).is_err());
        assert!(Domain::<f64>::new(1, &[4], &[-1.0], 1.0, 1).is_err());
        assert!(Domain::<f64>::new(1, &[4], &[1.0], 0.0, 1).is_err());
        assert!(Domain::<f64>::new(1, &[4], &[1.0], 1.0, 0).is_err());
        assert!(Domain::<f64>::new(2, &[4], &[1.0], 1.0, 1).is_err());
    }

    #[test]
    fn spacing_consistent_with_extent() {
        let d = Domain::<f64>::new(2, &[8, 4], &[2.0, 1.0], 1.0, 5).unwrap();
        assert_eq!(d.spacing(0), 0.25);
        assert_eq!(d.spacing(1), 0.25);
        assert_eq!(d.n_cells(), 32);
        assert_eq!(d.cell_volume(), 0.0625);
        assert_eq!(d.dt(), 0.2);
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let d = unit_line(16);
        let f = Field::constant(d, 3.7);
        let lap = f.laplacian_neumann();
        assert!(lap.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_cosine_second_order() {
        // cos(pi x) is a Neumann-compatible eigenmode; the discrete
        // eigenvalue converges to -pi^2 at second order.
        let mut errs = Vec::new();
        for cells in [16, 32, 64] {
            let d = unit_line(cells);
            let f = Field::from_fn(d.clone(), |x| (PI * x[0]).cos());
            let lap = f.laplacian_neumann();
            let err = lap
                .values()
                .iter()
                .zip(f.values())
                .map(|(&l, &v)| (l + PI * PI * v).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 1.9 && order2 > 1.9, "orders {order1} {order2}");
    }

    #[test]
    fn laplacian_zero_flux_conservation() {
        // deterministic pseudo-random field
        let d = Domain::<f64>::new(2, &[9, 7], &[1.0, 2.0], 1.0, 4).unwrap();
        let f = Field::from_fn(d, |x| (13.0 * x[0] + 7.0 * x[1]).sin() * 2.5 + 0.3);
        let lap = f.laplacian_neumann();
        let total: f64 = lap.values().iter().sum();
        let scale: f64 = f.norm_l2();
        assert!(total.abs() <= 1e-10 * scale.max(1.0), "total {total}");
    }

    #[test]
    fn grad_sq_norm_examples() {
        let d = unit_line(64);
        assert_eq!(Field::constant(d.clone(), 5.0).grad_sq_norm(), 0.0);
        // f(x) = x: exact forward differences give (cells-1) faces * h
        let f = Field::from_fn(d.clone(), |x| x[0]);
        let h = d.spacing(0);
        assert!((f.grad_sq_norm() - (1.0 - h)).abs() < 1e-13);
        // value tends to 1 under refinement
        let fine = Domain::<f64>::line(4096, 1.0, 10).unwrap();
        let f = Field::from_fn(fine, |x| x[0]);
        assert!((f.grad_sq_norm() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn grad_sq_norm_quadratic_scaling() {
        let d = unit_line(32);
        let f = Field::from_fn(d, |x| (4.0 * x[0]).sin() + x[0]);
        let base = f.grad_sq_norm();
        for alpha in [0.5, -2.0, 3.5] {
            let scaled = f.scale(alpha).grad_sq_norm();
            assert!((scaled - alpha * alpha * base).abs() <= 1e-12 * base);
        }
    }

    #[test]
    fn summation_by_parts_identity() {
        let d = Domain::<f64>::new(2, &[6, 5], &[1.0, 1.5], 1.0, 4).unwrap();
        let a = Field::from_fn(d.clone(), |x| (3.0 * x[0]).cos() + x[1] * x[1]);
        let b = Field::from_fn(d.clone(), |x| x[0] * x[1] + 0.5 * (2.0 * x[1]).sin());
        let lap_a = a.laplacian_neumann();
        let vol = d.cell_volume();
        let lhs: f64 = lap_a
            .values()
            .iter()
            .zip(b.values())
            .map(|(&l, &v)| -l * v * vol)
            .sum();
        let rhs = a.grad_dot(&b).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn unit_constant_trajectory_has_unit_norms() {
        let d = Domain::<f64>::line(8, 1.0, 20).unwrap();
        let u = Trajectory::constant_in_time(&Field::constant(d, 1.0));
        for p in [Lp::One, Lp::Two, Lp::TenThirds, Lp::Six, Lp::Infinity] {
            let n = u.norm_lp_q(p);
            assert!((n - 1.0).abs() < 1e-12, "p {p:?} -> {n}");
        }
        assert!((u.norm_l2_v() - 1.0).abs() < 1e-12);
        assert!((u.norm_m() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_trajectory_all_norms_zero() {
        let d = Domain::<f64>::line(8, 1.0, 5).unwrap();
        let u = Trajectory::zeros(d);
        for p in [Lp::One, Lp::Two, Lp::TenThirds, Lp::Six, Lp::Infinity] {
            assert_eq!(u.norm_lp_q(p), 0.0);
        }
        assert_eq!(u.norm_l2_v(), 0.0);
        assert_eq!(u.norm_m(), 0.0);
        assert_eq!(u.norm_r(), 0.0);
    }

    #[test]
    fn norm_m_matches_constituents() {
        let d = Domain::<f64>::line(12, 0.7, 9).unwrap();
        let snaps: Vec<_> = (0..=9)
            .map(|n| {
                Field::from_fn(d.clone(), |x| {
                    (2.0 * PI * x[0]).cos() * (0.3 + 0.1 * n as f64)
                })
            })
            .collect();
        let u = Trajectory::from_snapshots(snaps).unwrap();
        let a = u.norm_lp_q(Lp::TenThirds);
        let b = u.norm_l2_v();
        assert_eq!(u.norm_m(), a.max(b));
        assert!(a > 0.0 && b > 0.0);
    }

    #[test]
    fn unsupported_exponent_rejected() {
        let d = Domain::<f64>::line(4, 1.0, 2).unwrap();
        let u = Trajectory::zeros(d);
        assert!(matches!(
            u.norm_lp_q_scalar(3.0),
            Err(Error::UnsupportedExponent(_))
        ));
        assert!(u.norm_lp_q_scalar(10.0 / 3.0).is_ok());
        assert!(u.norm_lp_q_scalar(f64::INFINITY).is_ok());
    }

    #[test]
    fn forward_dt_constant_extension() {
        let d = Domain::<f64>::line(4, 1.0, 4).unwrap();
        let snaps: Vec<_> = (0..=4)
            .map(|n| Field::constant(d.clone(), (n * n) as f64))
            .collect();
        let u = Trajectory::from_snapshots(snaps).unwrap();
        let du = u.forward_dt();
        // (u^{n+1}-u^n)/dt with dt = 0.25
        assert_eq!(du.snapshot(0).values()[0], 4.0);
        assert_eq!(du.snapshot(1).values()[0], 12.0);
        assert_eq!(du.snapshot(3).values()[0], 28.0);
        assert_eq!(du.snapshot(4).values()[0], 28.0); // extended
    }

    proptest! {
        #[test]
        fn norm_homogeneity(alpha in -3.0f64..3.0, seed in 0u64..1000) {
            let d = Domain::<f64>::line(6, 0.5, 4).unwrap();
            let snaps: Vec<_> = (0..=4).map(|n| Field::from_fn(d.clone(), |x| {
                ((seed as f64 + 1.0) * 3.1 * x[0] + n as f64).sin()
            })).collect();
            let u = Trajectory::from_snapshots(snaps).unwrap();
            let scaled = u.scale(alpha);
            for p in [Lp::One, Lp::Two, Lp::TenThirds, Lp::Six, Lp::Infinity] {
                let lhs = scaled.norm_lp_q(p);
                let rhs = alpha.abs() * u.norm_lp_q(p);
                prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0));
            }
        }

        #[test]
        fn prefix_norms_nondecreasing(seed in 0u64..1000) {
            let d = Domain::<f64>::line(5, 1.0, 8).unwrap();
            let snaps: Vec<_> = (0..=8).map(|n| Field::from_fn(d.clone(), |x| {
                (seed as f64 * 0.37 + 5.0 * x[0] - n as f64 * 0.9).cos()
            })).collect();
            let u = Trajectory::from_snapshots(snaps).unwrap();
            for p in [Lp::One, Lp::Two, Lp::TenThirds, Lp::Six, Lp::Infinity] {
                let mut prev = 0.0f64;
                for steps in 0..=8 {
                    let n = u.norm_lp_q_prefix(p, steps);
                    prop_assert!(n + 1e-14 >= prev);
                    prev = n;
                }
            }
            let mut prev = 0.0f64;
            for steps in 0..=8 {
                let n = u.norm_l2_v_prefix(steps);
                prop_assert!(n + 1e-14 >= prev);
                prev = n;
            }
        }

        #[test]
        fn conservation_random_fields(seed in 0u64..500) {
            let d = Domain::<f64>::line(32, 1.0, 2).unwrap();
            let f = Field::from_fn(d, |x| {
                (x[0] * (seed as f64 + 2.0)).sin() + 0.25 * (9.0 * x[0]).cos()
            });
            let total: f64 = f.laplacian_neumann().values().iter().sum();
            prop_assert!(total.abs() <= 1e-10 * f.norm_l2().max(1.0));
        }
    }
}
