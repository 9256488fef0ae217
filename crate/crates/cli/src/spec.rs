//! System and run configuration files (`.cfg`, TOML syntax).

use std::path::Path;

use serde::Deserialize;

use orbitflag::linalg::{diag_real, unit};
use orbitflag::{CMatrix, LindbladSystem, SeededRng, C64};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n: usize,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default, rename = "operator")]
    pub operators: Vec<OperatorSpec>,
    #[serde(default)]
    pub drift: Option<MatrixSpec>,
    #[serde(default)]
    pub rng: Option<RngSpec>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub plan: Option<PlanSpec>,
}

/// One Lindblad operator. Indices are one-based.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OperatorSpec {
    /// `sqrt(rate) e_{to, from}`; give either `rate` or `amplitude = sqrt(rate)`.
    Jump {
        from: usize,
        to: usize,
        rate: Option<f64>,
        amplitude: Option<f64>,
    },
    /// `diag(re + i im)`.
    Dephasing {
        re: Vec<f64>,
        im: Option<Vec<f64>>,
    },
    Dense {
        re: Vec<Vec<f64>>,
        im: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    pub im: Option<Vec<Vec<f64>>>,
}

/// `count` dense operators with real and imaginary parts uniform on `[0, magnitude)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngSpec {
    pub seed: u64,
    pub count: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub crossing_tol: f64,
    pub membership_tol: f64,
    pub hermiticity_tol: f64,
    pub step: f64,
    pub resolution: usize,
    /// Points per facet edge for boundary candidates; 0 picks the dimension default.
    pub facet_samples: usize,
    pub dedup: bool,
    /// Extra random flags (each with all its permutations) added to the iota flags.
    pub extra_random_flags: usize,
    pub flag_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            crossing_tol: orbitflag::model::DEFAULT_CROSSING_TOL,
            membership_tol: orbitflag::slc::DEFAULT_MEMBERSHIP_TOL,
            hermiticity_tol: orbitflag::model::DEFAULT_HERMITICITY_TOL,
            step: 1e-3,
            resolution: 100,
            facet_samples: 0,
            dedup: true,
            extra_random_flags: 0,
            flag_seed: 1,
        }
    }
}

impl RunConfig {
    pub fn facet_samples_for(&self, n: usize) -> usize {
        match (self.facet_samples, n) {
            (0, 3) => orbitflag::slc::DEFAULT_FACET_SAMPLES_N3,
            (0, _) => orbitflag::slc::DEFAULT_FACET_SAMPLES_N4,
            (s, _) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    /// Eigenvalue ODE only.
    Lambda,
    /// Reconstruct the Hamiltonian and simulate the full equation.
    Roundtrip,
    /// Book-ended transport between rotated endpoints.
    Bookend,
    /// Book-ended transport for each `delta`.
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagSource {
    Identity,
    Iota,
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    pub mode: PlanMode,
    pub lambda0: Vec<f64>,
    pub duration: f64,
    #[serde(default = "default_flag")]
    pub flag: FlagSource,
    /// Scale of a random anti-Hermitian geodesic generator; 0 keeps the flag constant.
    #[serde(default)]
    pub generator_scale: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_every")]
    pub checkpoint_every: usize,
}

fn default_flag() -> FlagSource {
    FlagSource::Identity
}

fn default_seed() -> u64 {
    7
}

fn default_deltas() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

fn default_every() -> usize {
    10
}

/// A parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub spec: SystemSpec,
    pub system: LindbladSystem,
    /// Every operator is a jump or a de-phasing operator.
    pub jump_dephasing_only: bool,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_spec(text: &str, origin: &str) -> Result<SystemSpec, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse {
        origin: origin.to_string(),
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })
}

/// Command-line values that replace config entries before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
}

pub fn load_spec(path: &Path) -> Result<LoadedSpec, CliError> {
    load_spec_with(path, &Overrides::default())
}

pub fn load_spec_with(path: &Path, overrides: &Overrides) -> Result<LoadedSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse {
        origin: path.display().to_string(),
        line: None,
        message: e.to_string(),
    })?;
    let mut spec = parse_spec(&text, &path.display().to_string())?;
    if let Some(seed) = overrides.seed {
        if let Some(rng) = spec.rng.as_mut() {
            rng.seed = seed;
        }
        if let Some(plan) = spec.plan.as_mut() {
            plan.seed = seed;
        }
    }
    if let Some(res) = overrides.resolution {
        spec.run.resolution = res;
    }
    build(spec)
}

fn invalid(msg: String) -> CliError {
    CliError::Validation(msg)
}

fn matrix(n: usize, re: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>, what: &str) -> Result<CMatrix, CliError> {
    let check = |m: &[Vec<f64>], part: &str| {
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(invalid(format!("{what}: {part} part must be {n}x{n}")));
        }
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid(format!("{what}: {part} part has non-finite entries")));
        }
        Ok(())
    };
    check(re, "real")?;
    if let Some(im) = im {
        check(im, "imaginary")?;
    }
    Ok(CMatrix::from_fn(n, n, |a, b| C64::new(re[a][b], im.map_or(0.0, |m| m[a][b]))))
}

pub fn build(spec: SystemSpec) -> Result<LoadedSpec, CliError> {
    let n = spec.n;
    if n < 2 {
        return Err(invalid(format!("n = {n}: need at least two levels")));
    }
    let mut ops = Vec::with_capacity(spec.operators.len());
    let mut jump_dephasing_only = true;
    for (k, op) in spec.operators.iter().enumerate() {
        let what = format!("operator {}", k + 1);
        match op {
            OperatorSpec::Jump { from, to, rate, amplitude } => {
                for (name, idx) in [("from", from), ("to", to)] {
                    if !(1..=n).contains(idx) {
                        return Err(invalid(format!("{what}: {name} = {idx} is outside 1..{n}")));
                    }
                }
                let gamma = match (rate, amplitude) {
                    (Some(r), None) => *r,
                    (None, Some(a)) if *a >= 0.0 => a * a,
                    (None, Some(a)) => return Err(invalid(format!("{what}: amplitude {a} is negative"))),
                    _ => return Err(invalid(format!("{what}: give exactly one of rate or amplitude"))),
                };
                if !(gamma >= 0.0) || !gamma.is_finite() {
                    return Err(invalid(format!("{what}: rate {gamma} must be finite and >= 0")));
                }
                ops.push(unit(n, to - 1, from - 1).scale(gamma.sqrt()));
            }
            OperatorSpec::Dephasing { re, im } => {
                if re.len() != n || im.as_ref().is_some_and(|v| v.len() != n) {
                    return Err(invalid(format!("{what}: de-phasing entries must have length {n}")));
                }
                let mut d = diag_real(re);
                if let Some(im) = im {
                    for (j, v) in im.iter().enumerate() {
                        d[(j, j)].im = *v;
                    }
                }
                ops.push(d);
            }
            OperatorSpec::Dense { re, im } => {
                jump_dephasing_only = false;
                ops.push(matrix(n, re, im.as_ref(), &what)?);
            }
        }
    }
    if let Some(rng) = &spec.rng {
        if !(rng.magnitude > 0.0) {
            return Err(invalid(format!("rng: magnitude {} must be > 0", rng.magnitude)));
        }
        if rng.count > 0 {
            jump_dephasing_only = false;
        }
        let mut r = SeededRng::new(rng.seed);
        ops.extend((0..rng.count).map(|_| r.uniform_matrix(n, rng.magnitude)));
    }
    let mut system = LindbladSystem::new(n, ops).map_err(|e| invalid(e.to_string()))?;
    if let Some(d) = &spec.drift {
        let h = matrix(n, &d.re, d.im.as_ref(), "drift")?;
        system = system.with_drift(h).map_err(|e| invalid(format!("drift: {e}")))?;
    }
    let run = &spec.run;
    for (name, v) in [
        ("crossing_tol", run.crossing_tol),
        ("membership_tol", run.membership_tol),
        ("hermiticity_tol", run.hermiticity_tol),
        ("step", run.step),
    ] {
        if !(v > 0.0) {
            return Err(invalid(format!("run.{name} = {v} must be > 0")));
        }
    }
    if run.resolution < orbitflag::slc::MIN_RESOLUTION {
        return Err(invalid(format!(
            "run.resolution = {} must be >= {}",
            run.resolution,
            orbitflag::slc::MIN_RESOLUTION
        )));
    }
    if let Some(plan) = &spec.plan {
        if plan.lambda0.len() != n {
            return Err(invalid(format!("plan.lambda0 must have {n} entries")));
        }
        if plan.lambda0.iter().any(|&v| v < 0.0) || (plan.lambda0.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("plan.lambda0 must be non-negative and sum to 1".into()));
        }
        if !(plan.duration >= 0.0) {
            return Err(invalid(format!("plan.duration = {} must be >= 0", plan.duration)));
        }
        if plan.deltas.iter().any(|&d| !(d > 0.0)) {
            return Err(invalid("plan.deltas must all be > 0".into()));
        }
    }
    Ok(LoadedSpec { spec, system, jump_dephasing_only })
}
