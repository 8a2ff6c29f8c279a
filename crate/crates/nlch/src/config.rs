//! Plain-text run configuration: INI-like sections, `key = value`
//! lines, `#`/`;` comments. Every key has a documented default, every
//! value is validated with a line-numbered diagnostic, and unknown
//! sections or keys are rejected.
//!
//! ```text
//! [domain]
//! dim = 1
//! cells = 64            # per axis (single value broadcasts)
//! extent = 1.0
//! final_time = 0.5
//! num_steps = 200
//!
//! [kernel]
//! kind = newtonian      # newtonian | power_law | gaussian | zero
//! form = spatial        # spatial | affine | time
//! amplitude = 0.1
//! # alpha = 0.5         # power_law exponent
//! # width = 0.25        # gaussian width
//! # c1 / alpha_k / c2 / beta_k: envelope overrides
//!
//! [potential]
//! kind = logarithmic    # regular | logarithmic | obstacle
//! c = 2.0               # log: c > 1; obstacle: c > 0
//!
//! [g]
//! kind = parabolic      # constant | parabolic
//! g0 = 0.5
//!
//! [initial]
//! mu0 = cosine 1.0 0.5  # constant <v> | cosine <base> <amplitude>
//! rho0 = constant 0.2
//!
//! [solver]
//! eps_schedule = 1e-1 3e-2 1e-2 3e-3 1e-3
//! picard_tol = 1e-8
//! picard_max_iter = 400
//! eps_continuation_tol = 1e-6
//! outer_tol = 1e-6
//! outer_max_iter = 40
//! omega = 1.0
//! cg_tol = 1e-10
//! cg_max_iter = 10000
//! max_halvings = 20
//! tol_energy = 1e-6
//! # c0 = 1.0            # embedding constant (optional)
//!
//! [output]
//! dir = out
//! snapshot_times = 0.0 0.5
//! format = both         # binary | csv | both
//!
//! [perturb]
//! delta = 1e-2
//! target = rho0         # rho0 | mu0 | both
//! ```

use crate::coupled::{SolverParams, SystemConfig};
use crate::domain::{Domain, Field};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, ALPHA_L2_GATE, BETA_GATE};
use crate::nonlocal::{NonlocalOp, OpForm};
use crate::potential::{CouplingG, GraphKind, LipschitzPi, MonotoneGraph};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKindName {
    Newtonian,
    PowerLaw,
    Gaussian,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Regular,
    Logarithmic,
    Obstacle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GKind {
    Constant,
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    Constant(f64),
    /// `base + amp * prod_a cos(pi x_a / L_a)`
    Cosine {
        base: f64,
        amp: f64,
    },
}

impl Generator {
    pub fn build(&self, domain: &Arc<Domain<f64>>) -> Field<f64> {
        let dim = domain.dim();
        let extents: Vec<f64> = (0..dim).map(|a| domain.extent(a)).collect();
        match *self {
            Generator::Constant(v) => Field::constant(domain.clone(), v),
            Generator::Cosine { base, amp } => Field::from_fn(domain.clone(), move |x| {
                let mut m = 1.0;
                for a in 0..dim {
                    m *= (std::f64::consts::PI * x[a] / extents[a]).cos();
                }
                base + amp * m
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Binary,
    Csv,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbTarget {
    Rho0,
    Mu0,
    Both,
}

/// Fully validated run configuration (the `f64` lane of the solver).
#[derive(Debug, Clone)]
pub struct RunConfig {
    // [domain]
    pub dim: usize,
    pub cells: Vec<usize>,
    pub extent: Vec<f64>,
    pub final_time: f64,
    pub num_steps: usize,
    // [kernel]
    pub kernel_kind: KernelKindName,
    pub form: OpForm,
    pub amplitude: f64,
    pub power_alpha: Option<f64>,
    pub gaussian_width: Option<f64>,
    pub envelope_override: Option<(f64, f64, f64, f64)>,
    // [potential]
    pub potential: PotentialKind,
    pub c: f64,
    // [g]
    pub g_kind: GKind,
    pub g0: f64,
    // [initial]
    pub mu0: Generator,
    pub rho0: Generator,
    // [solver]
    pub params: SolverParams<f64>,
    // [output]
    pub out_dir: String,
    pub snapshot_times: Vec<f64>,
    pub format: SnapshotFormat,
    // [perturb]
    pub perturb_delta: f64,
    pub perturb_target: PerturbTarget,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            cells: vec![64],
            extent: vec![1.0],
            final_time: 0.5,
            num_steps: 200,
            kernel_kind: KernelKindName::Newtonian,
            form: OpForm::SpatialConv,
            amplitude: 0.1,
            power_alpha: None,
            gaussian_width: None,
            envelope_override: None,
            potential: PotentialKind::Logarithmic,
            c: 2.0,
            g_kind: GKind::Parabolic,
            g0: 0.5,
            mu0: Generator::Cosine {
                base: 1.0,
                amp: 0.5,
            },
            rho0: Generator::Constant(0.2),
            params: SolverParams::default(),
            out_dir: "out".into(),
            snapshot_times: vec![0.0, 0.5],
            format: SnapshotFormat::Both,
            perturb_delta: 1e-2,
            perturb_target: PerturbTarget::Rho0,
        }
    }
}

fn cfg_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| cfg_err(line, format!("cannot parse value {v:?} for key {key:?}")))
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    v.split_whitespace()
        .map(|tok| parse_num(line, key, tok))
        .collect()
}

fn parse_generator(line: usize, key: &str, v: &str) -> Result<Generator> {
    let toks: Vec<&str> = v.split_whitespace().collect();
    match toks.as_slice() {
        ["constant", val] => Ok(Generator::Constant(parse_num(line, key, val)?)),
        ["cosine", base, amp] => Ok(Generator::Cosine {
            base: parse_num(line, key, base)?,
            amp: parse_num(line, key, amp)?,
        }),
        _ => Err(cfg_err(
            line,
            format!("{key:?} expects 'constant <v>' or 'cosine <base> <amp>', got {v:?}"),
        )),
    }
}

/// Parse and validate a configuration file. The first violated
/// constraint is reported with its line number; file-level constraints
/// (cross-key consistency, admissibility gates) are reported with
/// line 0.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut snapshot_times_set = false;
    let mut c_set = false;
    let mut section = String::new();
    // envelope overrides filled piecewise
    let (mut c1o, mut alpha_o, mut c2o, mut beta_o) = (None, None, None, None);

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        // strip trailing comments
        let content = trimmed
            .split_once('#')
            .map(|(a, _)| a.trim())
            .unwrap_or(trimmed);
        if content.starts_with('[') {
            let name = content
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| cfg_err(line, format!("malformed section header {content:?}")))?;
            match name {
                "domain" | "kernel" | "potential" | "g" | "initial" | "solver" | "output"
                | "perturb" => section = name.to_string(),
                other => return Err(cfg_err(line, format!("unknown section [{other}]"))),
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| cfg_err(line, format!("expected 'key = value', got {content:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(cfg_err(line, format!("empty value for key {key:?}")));
        }

        match (section.as_str(), key) {
            ("domain", "dim") => cfg.dim = parse_num(line, key, value)?,
            ("domain", "cells") => cfg.cells = parse_list(line, key, value)?,
            ("domain", "extent") => cfg.extent = parse_list(line, key, value)?,
            ("domain", "final_time") => {
                cfg.final_time = parse_num(line, key, value)?;
                if !(cfg.final_time > 0.0) {
                    return Err(cfg_err(line, "final_time must be positive"));
                }
            }
            ("domain", "num_steps") => {
                cfg.num_steps = parse_num(line, key, value)?;
                if cfg.num_steps == 0 {
                    return Err(cfg_err(line, "num_steps must be positive"));
                }
            }
            ("kernel", "kind") => {
                cfg.kernel_kind = match value {
                    "newtonian" => KernelKindName::Newtonian,
                    "power_law" => KernelKindName::PowerLaw,
                    "gaussian" => KernelKindName::Gaussian,
                    "zero" => KernelKindName::Zero,
                    other => return Err(cfg_err(line, format!("unknown kernel kind {other:?}"))),
                }
            }
            ("kernel", "form") => {
                cfg.form = match value {
                    "spatial" => OpForm::SpatialConv,
                    "affine" => OpForm::AffineConv,
                    "time" => OpForm::TimeConv,
                    other => return Err(cfg_err(line, format!("unknown operator form {other:?}"))),
                }
            }
            ("kernel", "amplitude") => {
                cfg.amplitude = parse_num(line, key, value)?;
                if !(cfg.amplitude >= 0.0) {
                    return Err(cfg_err(line, "amplitude must be nonnegative"));
                }
            }
            ("kernel", "alpha") => cfg.power_alpha = Some(parse_num(line, key, value)?),
            ("kernel", "width") => {
                let w: f64 = parse_num(line, key, value)?;
                if !(w > 0.0) {
                    return Err(cfg_err(line, "width must be positive"));
                }
                cfg.gaussian_width = Some(w);
            }
            ("kernel", "c1") => c1o = Some(parse_num::<f64>(line, key, value)?),
            ("kernel", "alpha_k") => alpha_o = Some(parse_num::<f64>(line, key, value)?),
            ("kernel", "c2") => c2o = Some(parse_num::<f64>(line, key, value)?),
            ("kernel", "beta_k") => beta_o = Some(parse_num::<f64>(line, key, value)?),
            ("potential", "kind") => {
                cfg.potential = match value {
                    "regular" => PotentialKind::Regular,
                    "logarithmic" => PotentialKind::Logarithmic,
                    "obstacle" => PotentialKind::Obstacle,
                    other => {
                        return Err(cfg_err(line, format!("unknown potential kind {other:?}")))
                    }
                };
                // keep the default coupling constant consistent with the
                // kind, unless the file pinned it explicitly
                if !c_set {
                    cfg.c = match cfg.potential {
                        PotentialKind::Obstacle => 1.0,
                        _ => 2.0,
                    };
                }
            }
            ("potential", "c") => {
                cfg.c = parse_num(line, key, value)?;
                c_set = true;
            }
            ("g", "kind") => {
                cfg.g_kind = match value {
                    "constant" => GKind::Constant,
                    "parabolic" => GKind::Parabolic,
                    other => return Err(cfg_err(line, format!("unknown g kind {other:?}"))),
                }
            }
            ("g", "g0") => cfg.g0 = parse_num(line, key, value)?,
            ("initial", "mu0") => cfg.mu0 = parse_generator(line, key, value)?,
            ("initial", "rho0") => cfg.rho0 = parse_generator(line, key, value)?,
            ("solver", "eps_schedule") => cfg.params.eps_schedule = parse_list(line, key, value)?,
            ("solver", "picard_tol") => cfg.params.picard_tol = parse_num(line, key, value)?,
            ("solver", "picard_max_iter") => {
                cfg.params.picard_max_iter = parse_num(line, key, value)?
            }
            ("solver", "eps_continuation_tol") => {
                cfg.params.eps_continuation_tol = parse_num(line, key, value)?
            }
            ("solver", "outer_tol") => cfg.params.outer_tol = parse_num(line, key, value)?,
            ("solver", "outer_max_iter") => {
                cfg.params.outer_max_iter = parse_num(line, key, value)?
            }
            ("solver", "omega") => {
                cfg.params.omega = parse_num(line, key, value)?;
                if !(cfg.params.omega > 0.0 && cfg.params.omega <= 1.0) {
                    return Err(cfg_err(line, "omega must lie in (0, 1]"));
                }
            }
            ("solver", "cg_tol") => cfg.params.cg_tol = parse_num(line, key, value)?,
            ("solver", "cg_max_iter") => cfg.params.cg_max_iter = parse_num(line, key, value)?,
            ("solver", "max_halvings") => cfg.params.max_halvings = parse_num(line, key, value)?,
            ("solver", "tol_energy") => cfg.params.tol_energy = parse_num(line, key, value)?,
            ("solver", "c0") => {
                let c0: f64 = parse_num(line, key, value)?;
                if !(c0 > 0.0) {
                    return Err(cfg_err(line, "c0 must be positive"));
                }
                cfg.params.c0 = Some(c0);
            }
            ("output", "dir") => cfg.out_dir = value.to_string(),
            ("output", "snapshot_times") => {
                cfg.snapshot_times = parse_list(line, key, value)?;
                snapshot_times_set = true;
            }
            ("output", "format") => {
                cfg.format = match value {
                    "binary" => SnapshotFormat::Binary,
                    "csv" => SnapshotFormat::Csv,
                    "both" => SnapshotFormat::Both,
                    other => {
                        return Err(cfg_err(line, format!("unknown snapshot format {other:?}")))
                    }
                }
            }
            ("perturb", "delta") => {
                cfg.perturb_delta = parse_num(line, key, value)?;
                if !(cfg.perturb_delta > 0.0) {
                    return Err(cfg_err(line, "delta must be positive"));
                }
            }
            ("perturb", "target") => {
                cfg.perturb_target = match value {
                    "rho0" => PerturbTarget::Rho0,
                    "mu0" => PerturbTarget::Mu0,
                    "both" => PerturbTarget::Both,
                    other => {
                        return Err(cfg_err(line, format!("unknown perturb target {other:?}")))
                    }
                }
            }
            ("", k) => {
                return Err(cfg_err(
                    line,
                    format!("key {k:?} appears before any [section] header"),
                ))
            }
            (s, k) => return Err(cfg_err(line, format!("unknown key {k:?} in section [{s}]"))),
        }
    }

    if let (Some(c1), Some(a), Some(c2), Some(b)) = (c1o, alpha_o, c2o, beta_o) {
        cfg.envelope_override = Some((c1, a, c2, b));
    } else if c1o.is_some() || alpha_o.is_some() || c2o.is_some() || beta_o.is_some() {
        // partial overrides: fill the missing pieces from the derived
        // spec so a single alpha_k line is enough to probe the gate
        let derived = cfg.kernel_spec_unchecked();
        cfg.envelope_override = Some((
            c1o.unwrap_or_else(|| derived.amplitude().max(f64::MIN_POSITIVE)),
            alpha_o.unwrap_or_else(|| derived.alpha_k()),
            c2o.unwrap_or_else(|| derived.amplitude().max(f64::MIN_POSITIVE)),
            beta_o.unwrap_or_else(|| derived.beta_k()),
        ));
    }
    if !snapshot_times_set {
        cfg.snapshot_times = vec![0.0, cfg.final_time];
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Kernel from the kind and parameters, before any envelope
    /// override or gate check.
    fn kernel_spec_unchecked(&self) -> KernelSpec<f64> {
        match self.kernel_kind {
            KernelKindName::Newtonian => KernelSpec::newtonian(self.amplitude),
            KernelKindName::PowerLaw => {
                KernelSpec::power_law(self.amplitude, self.power_alpha.unwrap_or(1.0))
            }
            KernelKindName::Gaussian => {
                KernelSpec::gaussian(self.amplitude, self.gaussian_width.unwrap_or(0.25))
            }
            KernelKindName::Zero => KernelSpec::zero(),
        }
    }

    pub fn kernel_spec(&self) -> KernelSpec<f64> {
        let spec = self.kernel_spec_unchecked();
        match self.envelope_override {
            Some((c1, a, c2, b)) => spec.with_envelope(c1, a, c2, b),
            None => spec,
        }
    }

    fn validate(&self) -> Result<()> {
        let err = |msg: String| cfg_err(0, msg);
        if !(1..=3).contains(&self.dim) {
            return Err(err(format!("dim must be 1, 2 or 3, got {}", self.dim)));
        }
        for (name, list) in [("cells", self.cells.len()), ("extent", self.extent.len())] {
            if list != 1 && list != self.dim {
                return Err(err(format!(
                    "{name} must carry one value or one per axis ({})",
                    self.dim
                )));
            }
        }
        if self.cells.contains(&0) {
            return Err(err("cells must be positive".into()));
        }
        if self.extent.iter().any(|&e| !(e > 0.0)) {
            return Err(err("extent must be positive".into()));
        }
        if self.kernel_kind != KernelKindName::PowerLaw && self.power_alpha.is_some() {
            return Err(err("key 'alpha' applies to power_law kernels only".into()));
        }
        if self.kernel_kind != KernelKindName::Gaussian && self.gaussian_width.is_some() {
            return Err(err("key 'width' applies to gaussian kernels only".into()));
        }
        // admissibility exponent gates for spatial forms
        if self.form.is_spatial() && self.kernel_kind != KernelKindName::Zero {
            let spec = self.kernel_spec();
            if spec.alpha_k() >= ALPHA_L2_GATE {
                return Err(err(format!(
                    "kernel exponent alpha_k = {} violates the alpha_k < 3/2 admissibility \
                     gate for spatial operator forms",
                    spec.alpha_k()
                )));
            }
            if spec.beta_k() >= BETA_GATE {
                return Err(err(format!(
                    "kernel derivative exponent beta_k = {} violates the beta_k < 5/2 \
                     admissibility gate for spatial operator forms",
                    spec.beta_k()
                )));
            }
        }
        match self.potential {
            PotentialKind::Logarithmic if !(self.c > 1.0) => {
                return Err(err(format!(
                    "the logarithmic potential requires c > 1, got {}",
                    self.c
                )))
            }
            PotentialKind::Obstacle if !(self.c > 0.0) => {
                return Err(err(format!(
                    "the obstacle potential requires c > 0, got {}",
                    self.c
                )))
            }
            _ => {}
        }
        match self.g_kind {
            GKind::Parabolic if !(self.g0 > 0.0 && self.g0 <= 0.5) => {
                return Err(err(format!(
                    "parabolic g requires g0 in (0, 1/2], got {}",
                    self.g0
                )))
            }
            GKind::Constant if !(self.g0 >= 0.0) => {
                return Err(err(format!("constant g requires g0 >= 0, got {}", self.g0)))
            }
            _ => {}
        }
        for tol in [
            self.params.picard_tol,
            self.params.outer_tol,
            self.params.cg_tol,
            self.params.tol_energy,
        ] {
            if !(tol > 0.0) {
                return Err(err("tolerances must be positive".into()));
            }
        }
        if self.params.eps_continuation_tol < 0.0 {
            return Err(err("eps_continuation_tol must be nonnegative".into()));
        }
        if self.params.eps_schedule.is_empty()
            || self.params.eps_schedule.windows(2).any(|w| !(w[1] < w[0]))
            || !(self.params.eps_schedule[self.params.eps_schedule.len() - 1] > 0.0)
        {
            return Err(err(
                "eps_schedule must be strictly decreasing and positive".into()
            ));
        }
        for &t in &self.snapshot_times {
            if !(0.0..=self.final_time).contains(&t) {
                return Err(err(format!(
                    "snapshot time {t} outside [0, {}]",
                    self.final_time
                )));
            }
        }
        Ok(())
    }

    fn broadcast(&self, list: &[f64]) -> Vec<f64> {
        if list.len() == 1 {
            vec![list[0]; self.dim]
        } else {
            list.to_vec()
        }
    }

    pub fn domain(&self) -> Result<Arc<Domain<f64>>> {
        let cells = if self.cells.len() == 1 {
            vec![self.cells[0]; self.dim]
        } else {
            self.cells.clone()
        };
        Domain::new(
            self.dim,
            &cells,
            &self.broadcast(&self.extent),
            self.final_time,
            self.num_steps,
        )
    }

    /// Assemble the solver-facing configuration: domain, operator,
    /// potential split, coupling function and initial data.
    pub fn to_system_config(&self) -> Result<SystemConfig<f64>> {
        let domain = self.domain()?;
        let op = Arc::new(NonlocalOp::build(
            self.form,
            self.kernel_spec(),
            domain.clone(),
        )?);
        let (graph, pi) = match self.potential {
            PotentialKind::Regular => {
                (MonotoneGraph::polynomial_cubic(), LipschitzPi::linear(-1.0))
            }
            PotentialKind::Logarithmic => (
                MonotoneGraph::logarithmic(),
                LipschitzPi::linear(-2.0 * self.c),
            ),
            PotentialKind::Obstacle => (
                MonotoneGraph::new(GraphKind::Obstacle)?,
                LipschitzPi::linear(-2.0 * self.c),
            ),
        };
        let g = match self.g_kind {
            GKind::Constant => CouplingG::constant(self.g0)?,
            GKind::Parabolic => CouplingG::parabolic(self.g0)?,
        };
        SystemConfig::new(
            op,
            graph,
            pi,
            g,
            self.mu0.build(&domain),
            self.rho0.build(&domain),
            self.params.clone(),
        )
    }
}
