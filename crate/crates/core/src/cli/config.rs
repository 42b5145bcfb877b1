//! Strict JSON experiment configuration.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::{EstimatorSpec, Grid};
use crate::error::{Error, Result};
use crate::exprparse::CoefficientField;
use crate::fpe::{InitialCondition, JumpVariant, SolverSettings, SpatialOperatorConfig, TimeScheme};
use crate::kernels::MemoryScheme;
use crate::levy::{JumpNoiseSpec, LevyMeasureSpec, SubordinatorSpec};
use crate::paths::SdeModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubordinatorConfig {
    /// `stable`, `tempered` or `drift`.
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// `symmetric_stable`, `truncated_symmetric_stable`, `one_sided_stable`
    /// or `tempered_stable`.
    pub family: String,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default = "one")]
    pub jump_cutoff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub small_jump_cutoff: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientConfig {
    pub drift: String,
    pub sigma: String,
    pub jump: String,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self {
            drift: "0".into(),
            sigma: "1".into(),
            jump: "0".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: i64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_min: -10.0,
            x_max: 10.0,
            n_x: 1001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Empty means `[t_end]`.
    pub observation_times: Vec<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: 1e-3,
            observation_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub paths: i64,
    pub seed: u64,
    pub dgamma: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            paths: 10_000,
            seed: 0,
            dgamma: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// `no_jump`, `stable_jump`, `symmetric_jump` or `general_series`.
    pub variant: String,
    pub terms: i64,
    /// `explicit` or `imex`.
    pub scheme: String,
    /// `delta` or `gaussian`.
    pub initial: String,
    /// `auto`, `grunwald_letnikov` or `convolution_quadrature`.
    pub memory: String,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            variant: "no_jump".into(),
            terms: 8,
            scheme: "explicit".into(),
            initial: "delta".into(),
            memory: "auto".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityConfig {
    /// `kde` or `histogram`.
    pub estimator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            estimator: "kde".into(),
            bandwidth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted key of a numeric field, e.g. `subordinator.alpha`.
    pub key: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subordinator: SubordinatorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
}

/// One failed check, keyed by the dotted config path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Every violation found in a config, not just the first.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct Violations(pub Vec<Violation>);

impl From<Violations> for Error {
    fn from(v: Violations) -> Self {
        Error::Configuration(v.to_string())
    }
}

struct Checker(Vec<Violation>);

impl Checker {
    fn push(&mut self, key: &str, message: impl Into<String>) {
        self.0.push(Violation {
            key: key.into(),
            message: message.into(),
        });
    }

    fn positive(&mut self, key: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(key, format!("must be positive, got {v}"));
        }
    }

    fn one_of(&mut self, key: &str, v: &str, allowed: &[&str]) {
        if !allowed.contains(&v) {
            self.push(key, format!("must be one of {}, got {v:?}", allowed.join(", ")));
        }
    }

    fn keep<T>(&mut self, key: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(key, e.to_string());
                None
            }
        }
    }
}

/// Resolved model pieces, built once the config validates.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub subordinator: SubordinatorSpec,
    pub noise: Option<JumpNoiseSpec>,
    pub coeffs: CoefficientField,
    pub grid: Grid,
    pub times: Vec<f64>,
    pub operator: Option<SpatialOperatorConfig>,
    pub settings: SolverSettings,
    pub estimator: EstimatorSpec,
}

impl Experiment {
    pub fn sde_model(&self) -> Result<SdeModel> {
        SdeModel::new(
            self.coeffs.clone(),
            self.subordinator,
            self.noise,
            self.config.monte_carlo.dgamma,
        )
    }

    pub fn operator(&self) -> Result<&SpatialOperatorConfig> {
        self.operator
            .as_ref()
            .ok_or_else(|| Error::Configuration("solver section does not describe a valid operator".into()))
    }

    pub fn paths(&self) -> usize {
        self.config.monte_carlo.paths as usize
    }
}

fn subordinator_spec(c: &SubordinatorConfig, chk: &mut Checker) -> Option<SubordinatorSpec> {
    chk.one_of("subordinator.family", &c.family, &["stable", "tempered", "drift"]);
    let alpha_ok = |chk: &mut Checker| -> Option<f64> {
        match c.alpha {
            Some(a) if a > 0.0 && a < 1.0 => Some(a),
            Some(_) => {
                chk.push("subordinator.alpha", "subordinator α must lie in (0,1)");
                None
            }
            None => {
                chk.push("subordinator.alpha", "required for this family");
                None
            }
        }
    };
    match c.family.as_str() {
        "stable" => {
            let a = alpha_ok(chk)?;
            chk.keep("subordinator", SubordinatorSpec::stable(a))
        }
        "tempered" => {
            let a = alpha_ok(chk);
            let l = match c.lambda {
                Some(l) if l > 0.0 && l.is_finite() => Some(l),
                _ => {
                    chk.push("subordinator.lambda", "tempering λ must be positive");
                    None
                }
            };
            chk.keep("subordinator", SubordinatorSpec::tempered(a?, l?))
        }
        "drift" => Some(SubordinatorSpec::unit_drift()),
        _ => None,
    }
}

fn noise_spec(c: &NoiseConfig, chk: &mut Checker) -> Option<JumpNoiseSpec> {
    let families = ["symmetric_stable", "truncated_symmetric_stable", "one_sided_stable", "tempered_stable"];
    chk.one_of("noise.family", &c.family, &families);
    let measure = match c.family.as_str() {
        "symmetric_stable" => chk.keep("noise.alpha", LevyMeasureSpec::symmetric_stable(c.alpha)),
        "truncated_symmetric_stable" => match c.r_max {
            Some(r) => chk.keep("noise", LevyMeasureSpec::truncated_symmetric_stable(c.alpha, r)),
            None => {
                chk.push("noise.r_max", "required for truncated_symmetric_stable");
                None
            }
        },
        "one_sided_stable" => chk.keep("noise.alpha", LevyMeasureSpec::one_sided_stable(c.alpha)),
        "tempered_stable" => match c.lambda {
            Some(l) => chk.keep("noise", LevyMeasureSpec::tempered_stable(c.alpha, l)),
            None => {
                chk.push("noise.lambda", "required for tempered_stable");
                None
            }
        },
        _ => None,
    }?;
    let mut spec = chk.keep("noise.jump_cutoff", JumpNoiseSpec::with_cutoff(measure, c.jump_cutoff))?;
    if let Some(eps) = c.small_jump_cutoff {
        if !(eps > 0.0 && eps.is_finite()) {
            chk.push("noise.small_jump_cutoff", format!("must be positive, got {eps}"));
            return None;
        }
        spec.small_jump_cutoff = Some(eps);
    }
    Some(spec)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Configuration(format!("invalid config: {e}")))
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        serde_json::from_value(v).map_err(|e| Error::Configuration(format!("invalid config: {e}")))
    }

    /// Compact JSON with defaults filled in; stable byte-for-byte.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Fills defaults that depend on other fields.
    pub fn canonicalize(mut self) -> Self {
        if self.time.observation_times.is_empty() {
            self.time.observation_times = vec![self.time.t_end];
        }
        self
    }

    /// Checks every field and builds the model, or lists all violations.
    pub fn resolve(self) -> std::result::Result<Experiment, Violations> {
        let config = self.canonicalize();
        let mut chk = Checker(Vec::new());
        let subordinator = subordinator_spec(&config.subordinator, &mut chk);
        let noise = config.noise.as_ref().and_then(|n| noise_spec(n, &mut chk));
        let c = &config.coefficients;
        let coeffs = chk.keep("coefficients", CoefficientField::parse(&c.drift, &c.sigma, &c.jump));

        let g = &config.grid;
        if g.n_x < 5 {
            chk.push("grid.n_x", format!("must be at least 5, got {}", g.n_x));
        }
        if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_max > g.x_min) {
            chk.push("grid.x_max", "grid needs finite x_min < x_max");
        } else if !(g.x_min <= 0.0 && g.x_max >= 0.0) {
            chk.push("grid.x_min", "grid must contain the starting point 0");
        }
        let grid = if chk.0.iter().any(|v| v.key.starts_with("grid.")) {
            None
        } else {
            chk.keep("grid", Grid::new(g.x_min, g.x_max, g.n_x as usize))
        };

        let t = &config.time;
        chk.positive("time.t_end", t.t_end);
        chk.positive("time.dt", t.dt);
        for (k, &s) in t.observation_times.iter().enumerate() {
            if !(s > 0.0 && s <= t.t_end) {
                chk.push(
                    &format!("time.observation_times[{k}]"),
                    format!("must lie in (0, t_end], got {s}"),
                );
            }
        }

        if t.dt > 0.0 && t.t_end > 0.0 {
            let off_grid = |s: f64| ((s / t.dt).round() * t.dt - s).abs() > 1e-9 * s.max(1.0);
            if off_grid(t.t_end) {
                chk.push("time.t_end", format!("must be a multiple of dt = {}", t.dt));
            }
            for (k, &s) in t.observation_times.iter().enumerate() {
                if s > 0.0 && off_grid(s) {
                    chk.push(
                        &format!("time.observation_times[{k}]"),
                        format!("must be a multiple of dt = {}", t.dt),
                    );
                }
            }
        }

        let mc = &config.monte_carlo;
        if mc.paths < 1 {
            chk.push("monte_carlo.paths", format!("must be at least 1, got {}", mc.paths));
        }
        chk.positive("monte_carlo.dgamma", mc.dgamma);

        let s = &config.solver;
        chk.one_of("solver.variant", &s.variant, &["no_jump", "stable_jump", "symmetric_jump", "general_series"]);
        chk.one_of("solver.scheme", &s.scheme, &["explicit", "imex"]);
        chk.one_of("solver.initial", &s.initial, &["delta", "gaussian"]);
        chk.one_of("solver.memory", &s.memory, &["auto", "grunwald_letnikov", "convolution_quadrature"]);
        let jump_active = coeffs.as_ref().is_some_and(|c| !c.jump.is_zero_literal());
        if s.variant == "no_jump" && jump_active && config.noise.is_some() {
            chk.push("solver.variant", "no_jump ignores the configured jump noise; pick a jump variant");
        }
        if s.variant != "no_jump" && config.noise.is_none() {
            chk.push("noise", format!("solver variant {} needs a noise section", s.variant));
        }
        let variant = match (s.variant.as_str(), &noise) {
            ("no_jump", _) => Some(JumpVariant::NoJump),
            ("stable_jump", Some(n)) => match n.measure.family() {
                crate::levy::LevyFamily::SymmetricStable { alpha } => Some(JumpVariant::StableJump { alpha }),
                _ => {
                    chk.push("noise.family", "stable_jump needs symmetric_stable noise");
                    None
                }
            },
            ("symmetric_jump", Some(n)) => Some(JumpVariant::SymmetricJump(n.measure)),
            ("general_series", Some(n)) => {
                if !(2..=12).contains(&s.terms) {
                    chk.push("solver.terms", format!("must lie in [2, 12], got {}", s.terms));
                    None
                } else {
                    Some(JumpVariant::GeneralSeriesJump {
                        noise: *n,
                        terms: s.terms as usize,
                    })
                }
            }
            _ => None,
        };
        let operator = match (variant, &coeffs) {
            (Some(v), Some(c)) => chk.keep("solver", SpatialOperatorConfig::new(v, c.clone())),
            _ => None,
        };

        let d = &config.density;
        chk.one_of("density.estimator", &d.estimator, &["kde", "histogram"]);
        if let Some(b) = d.bandwidth {
            chk.positive("density.bandwidth", b);
        }
        if let Some(th) = config.compare.l1_threshold {
            chk.positive("compare.l1_threshold", th);
        }
        for (k, axis) in config.sweep.iter().enumerate() {
            if axis.values.is_empty() {
                chk.push(&format!("sweep[{k}].values"), "needs at least one value");
            }
            if axis.key.is_empty() || axis.key.starts_with("sweep") {
                chk.push(&format!("sweep[{k}].key"), format!("cannot sweep {:?}", axis.key));
            }
        }

        if !chk.0.is_empty() {
            return Err(Violations(chk.0));
        }
        let settings = SolverSettings {
            dt: t.dt,
            t_end: t.t_end,
            scheme: if s.scheme == "imex" { TimeScheme::Imex } else { TimeScheme::Explicit },
            initial: if s.initial == "gaussian" {
                InitialCondition::Gaussian
            } else {
                InitialCondition::Delta
            },
            memory: match s.memory.as_str() {
                "grunwald_letnikov" => MemoryScheme::GrunwaldLetnikov,
                "convolution_quadrature" => MemoryScheme::ConvolutionQuadrature,
                _ => MemoryScheme::Auto,
            },
        };
        let estimator = if d.estimator == "histogram" {
            EstimatorSpec::Histogram
        } else {
            EstimatorSpec::GaussianKde { bandwidth: d.bandwidth }
        };
        Ok(Experiment {
            times: config.time.observation_times.clone(),
            subordinator: subordinator.expect("checked"),
            noise,
            coeffs: coeffs.expect("checked"),
            grid: grid.expect("checked"),
            operator,
            settings,
            estimator,
            config,
        })
    }
}

pub fn parse_config(text: &str) -> Result<Experiment> {
    Ok(ExperimentConfig::from_json(text)?.resolve()?)
}

pub fn load_config(path: &Path) -> std::result::Result<Experiment, super::CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| super::CliError::Io(path.display().to_string(), e))?;
    Ok(parse_config(&text)?)
}

/// Sets a dotted numeric key in a JSON config, creating objects on the way.
pub fn set_dotted(value: &mut serde_json::Value, key: &str, v: f64) -> Result<()> {
    let mut cur = value;
    let parts: Vec<&str> = key.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Configuration(format!("sweep key {key} does not name an object path")))?;
        if k + 1 == parts.len() {
            let num = if v.fract() == 0.0 && v.abs() < 9e15 && is_integer_key(part) {
                serde_json::Value::from(v as i64)
            } else {
                serde_json::Value::from(v)
            };
            obj.insert(part.to_string(), num);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    Ok(())
}

fn is_integer_key(k: &str) -> bool {
    matches!(k, "n_x" | "paths" | "seed" | "terms")
}
