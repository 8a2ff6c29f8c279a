//! The local potential machinery: maximal monotone graphs with their
//! minimal sections and Yosida regularizations, the Lipschitz
//! perturbation `pi`, the truncation map, and the coupling function `g`
//! with its two global extensions.
//!
//! Shipped double-well splits `F' = beta + pi`:
//! - regular:     `beta(r) = r^3`,                `pi(r) = -r`
//! - logarithmic: `beta(r) = ln((1+r)/(1-r))`,    `pi(r) = -2 c r`  (c > 1)
//! - obstacle:    `beta = subdifferential of the indicator of [-1, 1]`,
//!   `pi(r) = -2 c r`  (c > 0)

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `T_eps(r) = max(-1/eps, min(1/eps, r))`.
pub fn truncate<S: Real>(eps: S, r: S) -> S {
    let cap = S::one() / eps;
    r.min(cap).max(-cap)
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind<S: Real> {
    /// `beta(r) = cubic r^3 + linear r` on all of R (both coefficients
    /// nonnegative; the regular double-well uses `cubic = 1, linear = 0`)
    Polynomial { cubic: S, linear: S },
    /// `beta(r) = ln((1+r)/(1-r))` on `(-1, 1)`
    Logarithmic,
    /// `beta = subdifferential of the indicator of [-1, 1]`
    Obstacle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneGraph<S: Real> {
    kind: GraphKind<S>,
    resolvent_tol: S,
}

const RESOLVENT_MAX_ITER: usize = 200;

impl<S: Real> MonotoneGraph<S> {
    pub fn new(kind: GraphKind<S>) -> Result<Self> {
        if let GraphKind::Polynomial { cubic, linear } = &kind {
            if *cubic < S::zero() || *linear < S::zero() {
                return Err(Error::InvalidCoupling(
                    "polynomial graph coefficients must be nonnegative (monotonicity)".into(),
                ));
            }
        }
        Ok(Self {
            kind,
            resolvent_tol: S::of(1e-12),
        })
    }

    pub fn polynomial_cubic() -> Self {
        Self::new(GraphKind::Polynomial {
            cubic: S::one(),
            linear: S::zero(),
        })
        .expect("nonnegative coefficients")
    }

    pub fn logarithmic() -> Self {
        Self::new(GraphKind::Logarithmic).expect("no parameters")
    }

    pub fn obstacle() -> Self {
        Self::new(GraphKind::Obstacle).expect("no parameters")
    }

    pub fn kind(&self) -> &GraphKind<S> {
        &self.kind
    }

    pub fn with_resolvent_tol(mut self, tol: S) -> Self {
        self.resolvent_tol = tol;
        self
    }

    /// Closure of the effective domain `D(beta)`.
    pub fn domain_closure(&self) -> (S, S) {
        match self.kind {
            GraphKind::Polynomial { .. } => (S::neg_infinity(), S::infinity()),
            GraphKind::Logarithmic | GraphKind::Obstacle => (-S::one(), S::one()),
        }
    }

    pub fn closure_contains(&self, r: S) -> bool {
        let (lo, hi) = self.domain_closure();
        r >= lo && r <= hi
    }

    fn effective_domain_contains(&self, r: S) -> bool {
        match self.kind {
            GraphKind::Polynomial { .. } => true,
            GraphKind::Logarithmic => r.abs() < S::one(),
            GraphKind::Obstacle => r.abs() <= S::one(),
        }
    }

    /// Minimal section `beta^o(r)`: the element of `beta(r)` of smallest
    /// modulus. Errors outside the effective domain.
    pub fn minimal_section(&self, r: S) -> Result<S> {
        if !self.effective_domain_contains(r) {
            let (lo, hi) = self.domain_closure();
            return Err(Error::OutsideGraphDomain {
                arg: r.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        Ok(match self.kind {
            GraphKind::Polynomial { cubic, linear } => cubic * r * r * r + linear * r,
            GraphKind::Logarithmic => ((S::one() + r) / (S::one() - r)).ln(),
            // on [-1, 1] every value set contains 0
            GraphKind::Obstacle => S::zero(),
        })
    }

    /// Resolvent `J_eps(r)`: the unique solution of `J + eps beta(J) = r`
    /// (`contains r` for the multivalued obstacle graph), found by
    /// safeguarded Newton-bisection to the configured absolute tolerance.
    pub fn resolvent(&self, eps: S, r: S) -> Result<S> {
        assert!(eps > S::zero(), "Yosida parameter must be positive");
        match self.kind {
            GraphKind::Obstacle => {
                // closed form: project onto [-1, 1]
                Ok(r.min(S::one()).max(-S::one()))
            }
            GraphKind::Polynomial { cubic, linear } => {
                let beta = |x: S| cubic * x * x * x + linear * x;
                let dbeta = |x: S| S::of(3.0) * cubic * x * x + linear;
                // sign(J) = sign(r) and |J| <= |r|
                let (lo, hi) = if r >= S::zero() {
                    (S::zero(), r)
                } else {
                    (r, S::zero())
                };
                self.solve_resolvent(eps, r, lo, hi, beta, dbeta)
            }
            GraphKind::Logarithmic => {
                let beta = |x: S| ((S::one() + x) / (S::one() - x)).ln();
                let dbeta = |x: S| S::of(2.0) / ((S::one() - x) * (S::one() + x));
                let cap = S::one() - S::epsilon();
                let (lo, hi) = if r >= S::zero() {
                    (S::zero(), r.min(cap))
                } else {
                    (r.max(-cap), S::zero())
                };
                self.solve_resolvent(eps, r, lo, hi, beta, dbeta)
            }
        }
    }

    fn solve_resolvent(
        &self,
        eps: S,
        r: S,
        mut lo: S,
        mut hi: S,
        beta: impl Fn(S) -> S,
        dbeta: impl Fn(S) -> S,
    ) -> Result<S> {
        let phi = |x: S| x + eps * beta(x) - r;
        // phi is strictly increasing; the bracket may already pin the root
        if lo == hi {
            return Ok(lo);
        }
        let flo = phi(lo);
        if flo >= S::zero() {
            return Ok(lo);
        }
        let fhi = phi(hi);
        if fhi <= S::zero() {
            return Ok(hi);
        }
        let tol = self.resolvent_tol;
        let mut x = (lo + hi) / S::of(2.0);
        for _ in 0..RESOLVENT_MAX_ITER {
            let fx = phi(x);
            if fx == S::zero() {
                return Ok(x);
            }
            if fx > S::zero() {
                hi = x;
            } else {
                lo = x;
            }
            let mid = (lo + hi) / S::of(2.0);
            if hi - lo <= tol || mid <= lo || mid >= hi {
                // tolerance reached, or the bracket hit float resolution
                return Ok(mid);
            }
            let dfx = S::one() + eps * dbeta(x);
            let newton = x - fx / dfx;
            x = if newton > lo && newton < hi {
                newton
            } else {
                mid
            };
        }
        Err(Error::ResolventNoConvergence((hi - lo).as_f64()))
    }

    /// Yosida regularization `beta_eps(r) = (r - J_eps(r)) / eps`:
    /// monotone, `1/eps`-Lipschitz, and `|beta_eps(r)| <= |beta^o(r)|`
    /// on the effective domain.
    pub fn yosida(&self, eps: S, r: S) -> Result<S> {
        if let GraphKind::Obstacle = self.kind {
            // exact closed form keeps the resolvent identity bit-sharp
            return Ok(if r > S::one() {
                (r - S::one()) / eps
            } else if r < -S::one() {
                (r + S::one()) / eps
            } else {
                S::zero()
            });
        }
        let j = self.resolvent(eps, r)?;
        Ok((r - j) / eps)
    }
}

/// Lipschitz perturbation `pi(r) = slope * r` (the shipped double-well
/// splits are all linear in the non-monotone part).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzPi<S: Real> {
    slope: S,
}

impl<S: Real> LipschitzPi<S> {
    pub fn linear(slope: S) -> Self {
        Self { slope }
    }

    pub fn zero() -> Self {
        Self { slope: S::zero() }
    }

    pub fn eval(&self, r: S) -> S {
        self.slope * r
    }

    pub fn lipschitz(&self) -> S {
        self.slope.abs()
    }
}

/// The base shapes of the coupling function.
#[derive(Debug, Clone, Copy, PartialEq)]
enum GBase<S: Real> {
    Constant {
        value: S,
    },
    /// `g0 (1 - r^2)` on `[-1, 1]`
    Parabolic {
        g0: S,
    },
}

/// Coupling function `g` on its base interval together with the two
/// global extensions used by the solvers:
///
/// - extension A (order-parameter equation): concave and twice
///   continuously differentiable on all of R with bounded Lipschitz
///   derivative. Tangent-line continuation, with the curvature ramped
///   to zero over a band of width `delta_ext` inside each endpoint; the
///   ramp polynomial is chosen so that value and slope at the endpoint
///   are untouched, hence the extension equals the endpoint tangent
///   line exactly outside the band.
/// - extension B (chemical-potential equation): equals the base exactly
///   on the base interval, follows the endpoint tangents outside, and
///   flattens them smoothly once they reach -1/6 so that
///   `1 + 2 g(r) >= 1/3` everywhere (the plateaus sit at -7/24).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingG<S: Real> {
    base: GBase<S>,
    lo: S,
    hi: S,
    sup_g: S,
    delta_ext: S,
}

impl<S: Real> CouplingG<S> {
    pub fn constant(value: S) -> Result<Self> {
        if !(value >= S::zero()) || !value.is_finite() {
            return Err(Error::InvalidCoupling(format!(
                "constant g must be nonnegative and finite, got {value}"
            )));
        }
        Ok(Self {
            base: GBase::Constant { value },
            lo: -S::one(),
            hi: S::one(),
            sup_g: value,
            delta_ext: S::of(0.02),
        })
    }

    pub fn parabolic(g0: S) -> Result<Self> {
        if !(g0 > S::zero()) || !g0.is_finite() {
            return Err(Error::InvalidCoupling(format!(
                "parabolic g requires g0 > 0, got {g0}"
            )));
        }
        Ok(Self {
            base: GBase::Parabolic { g0 },
            lo: -S::one(),
            hi: S::one(),
            // mollification band: 1e-2 of the base interval length
            sup_g: g0,
            delta_ext: S::of(0.02),
        })
    }

    pub fn sup(&self) -> S {
        self.sup_g
    }

    pub fn base_interval(&self) -> (S, S) {
        (self.lo, self.hi)
    }

    /// True iff `g' = 0`, which decouples the system.
    pub fn is_constant(&self) -> bool {
        matches!(self.base, GBase::Constant { .. })
    }

    fn base_eval(&self, r: S) -> S {
        match self.base {
            GBase::Constant { value } => value,
            GBase::Parabolic { g0 } => g0 * (S::one() - r * r),
        }
    }

    fn base_prime(&self, r: S) -> S {
        match self.base {
            GBase::Constant { .. } => S::zero(),
            GBase::Parabolic { g0 } => -S::of(2.0) * g0 * r,
        }
    }

    /// Extension A value.
    pub fn ext_a(&self, r: S) -> S {
        match self.base {
            GBase::Constant { value } => value,
            GBase::Parabolic { g0 } => {
                // even function: fold onto the right half
                let x = r.abs();
                let hi = self.hi;
                let d = self.delta_ext;
                let b = hi - d;
                if x <= b {
                    self.base_eval(x)
                } else if x < hi {
                    let s = (x - b) / d;
                    self.base_eval(b) + self.base_prime(b) * d * s
                        - S::of(2.0) * g0 * d * d * psi_int2(s)
                } else {
                    // exact endpoint tangent line
                    self.base_eval(hi) + self.base_prime(hi) * (x - hi)
                }
            }
        }
    }

    /// Extension A derivative.
    pub fn ext_a_prime(&self, r: S) -> S {
        match self.base {
            GBase::Constant { .. } => S::zero(),
            GBase::Parabolic { g0 } => {
                let sign = if r < S::zero() { -S::one() } else { S::one() };
                let x = r.abs();
                let hi = self.hi;
                let d = self.delta_ext;
                let b = hi - d;
                let slope = if x <= b {
                    self.base_prime(x)
                } else if x < hi {
                    let s = (x - b) / d;
                    self.base_prime(b) - S::of(2.0) * g0 * d * psi_int1(s)
                } else {
                    self.base_prime(hi)
                };
                sign * slope
            }
        }
    }

    /// Extension B value: base on the interval, smoothly clipped
    /// tangents outside, floor `1 + 2g >= 1/3`.
    pub fn ext_b(&self, r: S) -> S {
        match self.base {
            GBase::Constant { value } => value,
            GBase::Parabolic { .. } => {
                let x = r.abs();
                if x <= self.hi {
                    self.base_eval(x)
                } else {
                    clipped_tangent(
                        self.base_eval(self.hi),
                        self.base_prime(self.hi),
                        x - self.hi,
                    )
                    .0
                }
            }
        }
    }

    /// Extension B derivative.
    pub fn ext_b_prime(&self, r: S) -> S {
        match self.base {
            GBase::Constant { .. } => S::zero(),
            GBase::Parabolic { .. } => {
                let sign = if r < S::zero() { -S::one() } else { S::one() };
                let x = r.abs();
                let slope = if x <= self.hi {
                    self.base_prime(x)
                } else {
                    clipped_tangent(
                        self.base_eval(self.hi),
                        self.base_prime(self.hi),
                        x - self.hi,
                    )
                    .1
                };
                sign * slope
            }
        }
    }
}

/// Curvature ramp for extension A: `psi(0) = 1`, `psi(1) = 0`,
/// `int psi = 1` and `int (1-s) psi = 1/2`, so that integrating the
/// ramped curvature reproduces the endpoint value and slope exactly.
/// `psi(s) = 1 - 3s + 12s^2 - 10s^3 >= 0` on `[0, 1]`.
fn psi_int1<S: Real>(s: S) -> S {
    // int_0^s psi
    s * (S::one() + s * (S::of(-1.5) + s * (S::of(4.0) + s * S::of(-2.5))))
}

fn psi_int2<S: Real>(s: S) -> S {
    // int_0^s int psi
    s * s * (S::of(0.5) + s * (S::of(-0.5) + s * (S::one() + s * S::of(-0.5))))
}

/// Follow the tangent `v0 + m u` (descending, `m < 0`) from the
/// endpoint; once it reaches -1/6, ramp the slope linearly to zero over
/// a window `w = -1/(4m)`, landing on the plateau -7/24 > -1/3.
/// Returns `(value, slope)` at offset `u >= 0` past the endpoint.
fn clipped_tangent<S: Real>(v0: S, m: S, u: S) -> (S, S) {
    if m == S::zero() {
        return (v0, S::zero());
    }
    let level = S::of(-1.0 / 6.0);
    let u_star = (level - v0) / m; // > 0 since v0 >= 0 > level, m < 0
    if u <= u_star {
        return (v0 + m * u, m);
    }
    let w = -S::one() / (S::of(4.0) * m);
    let t = u - u_star;
    if t < w {
        let value = level + m * t * (S::one() - t / (S::of(2.0) * w));
        let slope = m * (S::one() - t / w);
        (value, slope)
    } else {
        (S::of(-7.0 / 24.0), S::zero())
    }
}
