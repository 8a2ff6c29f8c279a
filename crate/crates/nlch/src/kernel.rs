//! Radial interaction kernels and the admissibility gates for weakly
//! singular kernels.
//!
//! A kernel is admissible for the spatial convolution operators when its
//! singularity exponent satisfies `alpha_k < 3/2` (the `L^2` theory) and
//! its derivative exponent satisfies `beta_k < 5/2` (the gradient
//! estimate). The looser threshold `alpha_k < 3`, under which the
//! operator maps into continuous functions, is reported informationally.
//! Envelope bounds `|k(r)| <= C1 r^-alpha_k` and `|k'(r)| <= C2 r^-beta_k`
//! are checked by a sampled sweep, not symbolically.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const ALPHA_L2_GATE: f64 = 1.5;
pub const ALPHA_COMPACT_GATE: f64 = 3.0;
pub const BETA_GATE: f64 = 2.5;

/// Kernel family; kind-specific shape parameters live in the variant.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind<S: Real> {
    /// `k(r) = a / r`
    Newtonian,
    /// `k(r) = a r^-alpha`
    PowerLaw { alpha: S },
    /// `k(r) = a exp(-r^2 / (2 w^2))`
    Gaussian { width: S },
    /// `k(r) = 0`
    Zero,
    /// log-log linear interpolation through positive `(r_i, k_i)` nodes
    CustomTable { radii: Vec<S>, values: Vec<S> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec<S: Real> {
    kind: KernelKind<S>,
    amplitude: S,
    /// envelope amplitude for `|k|`
    c1: S,
    /// singularity exponent of the `|k|` envelope
    alpha_k: S,
    /// envelope amplitude for `|k'|`
    c2: S,
    /// singularity exponent of the `|k'|` envelope
    beta_k: S,
}

impl<S: Real> KernelSpec<S> {
    pub fn newtonian(amplitude: S) -> Self {
        Self {
            kind: KernelKind::Newtonian,
            amplitude,
            c1: amplitude,
            alpha_k: S::one(),
            c2: amplitude,
            beta_k: S::of(2.0),
        }
    }

    pub fn power_law(amplitude: S, alpha: S) -> Self {
        // k'(r) = -a alpha r^-(alpha+1)
        Self {
            kind: KernelKind::PowerLaw { alpha },
            amplitude,
            c1: amplitude,
            alpha_k: alpha,
            c2: (amplitude * alpha.abs()).max(S::of(f64::MIN_POSITIVE)),
            beta_k: alpha + S::one(),
        }
    }

    pub fn gaussian(amplitude: S, width: S) -> Self {
        // |k'| peaks at r = w with value (a/w) e^{-1/2}
        Self {
            kind: KernelKind::Gaussian { width },
            amplitude,
            c1: amplitude,
            alpha_k: S::zero(),
            c2: amplitude / width * S::of((-0.5f64).exp()),
            beta_k: S::zero(),
        }
    }

    pub fn zero() -> Self {
        Self {
            kind: KernelKind::Zero,
            amplitude: S::zero(),
            c1: S::of(1.0),
            alpha_k: S::zero(),
            c2: S::of(1.0),
            beta_k: S::zero(),
        }
    }

    pub fn custom_table(
        radii: Vec<S>,
        values: Vec<S>,
        c1: S,
        alpha_k: S,
        c2: S,
        beta_k: S,
    ) -> Result<Self> {
        if radii.len() < 2 || radii.len() != values.len() {
            return Err(Error::InvalidKernel(
                "custom table needs at least two (r, k) nodes".into(),
            ));
        }
        for w in radii.windows(2) {
            if !(w[0] > S::zero() && w[1] > w[0]) {
                return Err(Error::InvalidKernel(
                    "custom table radii must be positive and strictly increasing".into(),
                ));
            }
        }
        if values.iter().any(|v| !(*v > S::zero()) || !v.is_finite()) {
            return Err(Error::InvalidKernel(
                "custom table values must be positive and finite (log-log interpolation)".into(),
            ));
        }
        Ok(Self {
            kind: KernelKind::CustomTable { radii, values },
            amplitude: S::one(),
            c1,
            alpha_k,
            c2,
            beta_k,
        })
    }

    /// Override the envelope parameters (used by the config layer when
    /// the run file pins its own constants).
    pub fn with_envelope(mut self, c1: S, alpha_k: S, c2: S, beta_k: S) -> Self {
        self.c1 = c1;
        self.alpha_k = alpha_k;
        self.c2 = c2;
        self.beta_k = beta_k;
        self
    }

    pub fn kind(&self) -> &KernelKind<S> {
        &self.kind
    }

    pub fn amplitude(&self) -> S {
        self.amplitude
    }

    pub fn alpha_k(&self) -> S {
        self.alpha_k
    }

    pub fn beta_k(&self) -> S {
        self.beta_k
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, KernelKind::Zero)
    }

    /// Kernel value at radius `r > 0`.
    pub fn eval(&self, r: S) -> Result<S> {
        if !(r > S::zero()) {
            return Err(Error::NonPositiveRadius(r.as_f64()));
        }
        Ok(match &self.kind {
            KernelKind::Newtonian => self.amplitude / r,
            KernelKind::PowerLaw { alpha } => self.amplitude * r.powf(-*alpha),
            KernelKind::Gaussian { width } => {
                let s = r / *width;
                self.amplitude * (-(s * s) / S::of(2.0)).exp()
            }
            KernelKind::Zero => S::zero(),
            KernelKind::CustomTable { radii, values } => table_eval(radii, values, r),
        })
    }

    /// Analytic derivative `k'(r)`, `None` for kinds without one
    /// (tabulated kernels).
    pub fn eval_deriv(&self, r: S) -> Result<Option<S>> {
        if !(r > S::zero()) {
            return Err(Error::NonPositiveRadius(r.as_f64()));
        }
        Ok(match &self.kind {
            KernelKind::Newtonian => Some(-self.amplitude / (r * r)),
            KernelKind::PowerLaw { alpha } => {
                Some(-self.amplitude * *alpha * r.powf(-(*alpha + S::one())))
            }
            KernelKind::Gaussian { width } => {
                let w2 = *width * *width;
                let s = r / *width;
                Some(-self.amplitude * r / w2 * (-(s * s) / S::of(2.0)).exp())
            }
            KernelKind::Zero => Some(S::zero()),
            KernelKind::CustomTable { .. } => None,
        })
    }

    /// Run the full admissibility sweep against the exponent gates and
    /// the sampled envelope bounds on `r in {h/2, h, 2h, ..., diameter}`.
    pub fn validate_admissible(&self, min_spacing: S, diameter: S) -> Result<AdmissibilityReport> {
        if matches!(self.kind, KernelKind::Zero) {
            // trivially admissible, whatever the exponents say
            return Ok(AdmissibilityReport {
                alpha_k: self.alpha_k.as_f64(),
                beta_k: self.beta_k.as_f64(),
                alpha_gate: true,
                alpha_compact: true,
                beta_gate: true,
                envelope_value: true,
                envelope_deriv: Some(true),
                samples: 0,
            });
        }

        let alpha = self.alpha_k.as_f64();
        let beta = self.beta_k.as_f64();
        let radii: Vec<S> = match &self.kind {
            KernelKind::CustomTable { radii, .. } => radii.clone(),
            _ => {
                let mut rs = Vec::new();
                let mut r = min_spacing / S::of(2.0);
                while r <= diameter {
                    rs.push(r);
                    r *= S::of(2.0);
                }
                rs.push(diameter);
                rs
            }
        };

        // round-off slack for exact-equality envelopes, scaled to the
        // scalar's precision
        let slack = S::one() + S::of(1e-9).max(S::epsilon() * S::of(64.0));
        let mut envelope_value = true;
        let mut envelope_deriv: Option<bool> = None;
        for &r in &radii {
            let k = self.eval(r)?;
            if !k.is_finite() {
                return Err(Error::InvalidKernel(format!(
                    "non-finite kernel value at r = {r}"
                )));
            }
            if k.abs() > self.c1 * r.powf(-self.alpha_k) * slack {
                envelope_value = false;
            }
            if let Some(dk) = self.eval_deriv(r)? {
                if !dk.is_finite() {
                    return Err(Error::InvalidKernel(format!(
                        "non-finite kernel derivative at r = {r}"
                    )));
                }
                let ok = dk.abs() <= self.c2 * r.powf(-self.beta_k) * slack;
                envelope_deriv = Some(envelope_deriv.unwrap_or(true) && ok);
            }
        }

        Ok(AdmissibilityReport {
            alpha_k: alpha,
            beta_k: beta,
            alpha_gate: alpha < ALPHA_L2_GATE,
            alpha_compact: alpha < ALPHA_COMPACT_GATE,
            beta_gate: beta < BETA_GATE,
            envelope_value,
            envelope_deriv,
            samples: radii.len(),
        })
    }
}

fn table_eval<S: Real>(radii: &[S], values: &[S], r: S) -> S {
    let n = radii.len();
    let lr = r.ln();
    // segment selection, extrapolating with the end segments
    let seg = if r <= radii[0] {
        0
    } else if r >= radii[n - 1] {
        n - 2
    } else {
        radii
            .partition_point(|&x| x < r)
            .saturating_sub(1)
            .min(n - 2)
    };
    let (r0, r1) = (radii[seg].ln(), radii[seg + 1].ln());
    let (v0, v1) = (values[seg].ln(), values[seg + 1].ln());
    let t = (lr - r0) / (r1 - r0);
    (v0 + t * (v1 - v0)).exp()
}

/// Outcome of the admissibility sweep; exponents reported as `f64` for
/// uniform logging.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub alpha_k: f64,
    pub beta_k: f64,
    /// `alpha_k < 3/2`: the gate for the `L^2` mapping, Lipschitz and
    /// boundedness properties.
    pub alpha_gate: bool,
    /// `alpha_k < 3`: informational (compact mapping into continuous
    /// functions).
    pub alpha_compact: bool,
    /// `beta_k < 5/2`: the gate for the gradient estimate.
    pub beta_gate: bool,
    pub envelope_value: bool,
    /// `None` when the kind has no derivative evaluator.
    pub envelope_deriv: Option<bool>,
    pub samples: usize,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.alpha_gate
            && self.beta_gate
            && self.envelope_value
            && self.envelope_deriv.unwrap_or(true)
    }
}

impl std::fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pf = |b: bool| if b { "pass" } else { "fail" };
        writeln!(
            f,
            "alpha_k={} {} (gate alpha < 3/2); informational alpha < 3: {}",
            self.alpha_k,
            pf(self.alpha_gate),
            pf(self.alpha_compact)
        )?;
        writeln!(
            f,
            "beta_k={} {} (gate beta < 5/2)",
            self.beta_k,
            pf(self.beta_gate)
        )?;
        writeln!(
            f,
            "envelope |k| {} over {} samples",
            pf(self.envelope_value),
            self.samples
        )?;
        match self.envelope_deriv {
            Some(ok) => writeln!(f, "envelope |k'| {}", pf(ok))?,
            None => writeln!(f, "envelope |k'| skipped (no derivative evaluator)")?,
        }
        write!(f, "admissible: {}", pf(self.admissible()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let k = KernelSpec::newtonian(1.0);
        assert_eq!(k.eval(2.0).unwrap(), 0.5);
        let z = KernelSpec::<f64>::zero();
        assert_eq!(z.eval(0.1).unwrap(), 0.0);
        assert_eq!(z.eval(100.0).unwrap(), 0.0);
        let p = KernelSpec::<f64>::power_law(3.0, 0.5);
        assert!((p.eval(4.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(k.eval(0.0).is_err());
        assert!(k.eval(-1.0).is_err());
    }

    #[test]
    fn newtonian_passes_both_gates() {
        let k = KernelSpec::newtonian(2.0);
        let rep = k.validate_admissible(1.0 / 64.0, 1.0).unwrap();
        assert_eq!(rep.alpha_k, 1.0);
        assert_eq!(rep.beta_k, 2.0);
        assert!(rep.alpha_gate && rep.beta_gate);
        assert!(rep.envelope_value && rep.envelope_deriv == Some(true));
        assert!(rep.admissible());
    }

    #[test]
    fn steep_power_law_fails_alpha_gate() {
        let k = KernelSpec::power_law(1.0, 2.0);
        let rep = k.validate_admissible(1.0 / 32.0, 1.0).unwrap();
        assert!(!rep.alpha_gate);
        assert!(!rep.admissible());
        // still below the compact-mapping threshold
        assert!(rep.alpha_compact);
    }

    #[test]
    fn zero_kernel_trivially_admissible() {
        let k = KernelSpec::<f64>::zero();
        let rep = k.validate_admissible(0.01, 2.0).unwrap();
        assert!(rep.admissible());
    }

    #[test]
    fn gaussian_envelope_holds() {
        let k = KernelSpec::gaussian(1.5, 0.3);
        let rep = k.validate_admissible(1.0 / 128.0, 4.0).unwrap();
        assert!(rep.admissible());
    }

    #[test]
    fn envelope_violation_detected() {
        // claim a decaying envelope for a flat kernel
        let k = KernelSpec::power_law(1.0, 0.0).with_envelope(0.01, 1.0, 1.0, 1.0);
        let rep = k.validate_admissible(1.0 / 16.0, 2.0).unwrap();
        assert!(!rep.envelope_value);
        assert!(!rep.admissible());
    }

    #[test]
    fn custom_table_log_log_interpolation() {
        // table sampled from r^-1; interpolation must reproduce it
        let radii: Vec<f64> = (0..20).map(|i| 0.01 * 1.5f64.powi(i)).collect();
        let values: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
        let k = KernelSpec::custom_table(radii, values, 1.0, 1.0, 1.0, 2.0).unwrap();
        for r in [0.02, 0.3, 1.7] {
            assert!((k.eval(r).unwrap() - 1.0 / r).abs() < 1e-10 / r);
        }
        let rep = k.validate_admissible(0.01, 2.0).unwrap();
        assert!(rep.admissible());
        assert_eq!(rep.envelope_deriv, None);
    }

    #[test]
    fn envelope_sweep_all_shipped_kinds() {
        let h = 1.0 / 64.0;
        let diam = 3.0f64.sqrt();
        for k in [
            KernelSpec::newtonian(0.7),
            KernelSpec::power_law(2.0, 1.2),
            KernelSpec::gaussian(1.0, 0.5),
            KernelSpec::zero(),
        ] {
            let rep = k.validate_admissible(h, diam).unwrap();
            assert!(rep.envelope_value, "kind {:?}", k.kind());
        }
    }
}
