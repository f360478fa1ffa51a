//! Run configuration: defaults, JSON file, then dotted command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use ssm_core::cohomology::{OuterPolicy, Style, Tolerances};
use ssm_core::model::{NChoice, Variant};
use ssm_core::spectrum::{EigenMethod, Selection, SpectrumOptions};
use ssm_core::SsmError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub master: MasterConfig,
    pub order: usize,
    pub style: StyleName,
    pub tolerances: ToleranceConfig,
    pub forcing: ForcingConfig,
    pub backbone: BackboneConfig,
    pub verify: VerifyConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            master: MasterConfig::default(),
            order: 3,
            style: StyleName::NormalForm,
            tolerances: ToleranceConfig::default(),
            forcing: ForcingConfig::default(),
            backbone: BackboneConfig::default(),
            verify: VerifyConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Chain,
    Duffing,
    Lorenz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Built-in model; ignored when `manifest` is set.
    pub builtin: Builtin,
    pub manifest: Option<PathBuf>,
    /// Number of masses (chain).
    pub n: usize,
    pub mass: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub beta: f64,
    pub variant: Option<Variant>,
    pub n_choice: Option<NChoice>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            builtin: Builtin::Chain,
            manifest: None,
            n: 10,
            mass: 1.0,
            stiffness: 1.0,
            damping: 0.1,
            kappa: 0.3,
            sigma: 1.0,
            beta: 1.0,
            variant: None,
            n_choice: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectBy {
    Smallest,
    Slowest,
    Indices,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MasterConfig {
    pub select: SelectBy,
    pub count: usize,
    /// 1-based positions in the eigenvalue ordering.
    pub indices: Vec<usize>,
    pub method: MethodName,
    pub shift: [f64; 2],
    pub krylov_dim: usize,
    pub n_outer: usize,
}

impl Default for MasterConfig {
    fn default() -> Self {
        Self {
            select: SelectBy::Smallest,
            count: 2,
            indices: vec![],
            method: MethodName::Dense,
            shift: [0.0, 0.0],
            krylov_dim: 40,
            n_outer: 10,
        }
    }
}

impl MasterConfig {
    pub fn selection(&self) -> Result<Selection, SsmError> {
        Ok(match self.select {
            SelectBy::Smallest => Selection::SmallestMagnitude(self.count),
            SelectBy::Slowest => Selection::SlowestDecay(self.count),
            SelectBy::Indices => {
                if self.indices.is_empty() || self.indices.contains(&0) {
                    return Err(SsmError::Validation("master.indices must be nonempty and 1-based".into()));
                }
                Selection::Indices(self.indices.iter().map(|i| i - 1).collect())
            }
        })
    }

    pub fn options(&self) -> SpectrumOptions {
        let method = match self.method {
            MethodName::Dense => EigenMethod::Dense,
            MethodName::ShiftInvert => EigenMethod::ShiftInvert {
                shift_re: self.shift[0],
                shift_im: self.shift[1],
                krylov_dim: self.krylov_dim,
            },
        };
        SpectrumOptions { n_outer: self.n_outer, method }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleName {
    NormalForm,
    Graph,
}

impl StyleName {
    pub fn style(self) -> Style {
        match self {
            StyleName::NormalForm => Style::NormalForm,
            StyleName::Graph => Style::Graph,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterName {
    Error,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub abs: Option<f64>,
    pub rel: f64,
    pub light_damping: f64,
    pub cond_limit: f64,
    pub outer: Option<OuterName>,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { abs: t.abs, rel: t.rel, light_damping: t.light_damping, cond_limit: t.cond_limit, outer: None }
    }
}

impl ToleranceConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            abs: self.abs,
            rel: self.rel,
            light_damping: self.light_damping,
            cond_limit: self.cond_limit,
            outer_policy: self.outer.map(|o| match o {
                OuterName::Error => OuterPolicy::Error,
                OuterName::Warn => OuterPolicy::Warn,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    /// Forcing amplitude; overrides the manifest value when set.
    pub epsilon: Option<f64>,
    /// Cosine load shape `f0` over the displacements of a built-in mechanical model.
    pub shape: Option<Vec<f64>>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub samples: usize,
    pub eta: Option<i32>,
    pub eta_max: i32,
    pub phase_samples: usize,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            shape: None,
            omega_min: None,
            omega_max: None,
            samples: 200,
            eta: None,
            eta_max: 3,
            phase_samples: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackboneConfig {
    pub rho_max: f64,
    pub samples: usize,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        Self { rho_max: 0.5, samples: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub radii: Vec<f64>,
    pub directions: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { radii: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4], directions: 16, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// 1-based state indices; for mechanical models these are the displacement DOFs.
    pub dofs: Vec<usize>,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), dofs: vec![1], svg: false }
    }
}

/// Sets `path` (dotted) in `root` to `value`, creating objects along the way.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), SsmError> {
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(SsmError::Validation(format!("malformed option name '--{path}'")));
    }
    for key in &keys[..keys.len() - 1] {
        if !cur.is_object() {
            *cur = Value::Object(Default::default());
        }
        cur = cur.as_object_mut().unwrap().entry(key.to_string()).or_insert(Value::Null);
    }
    if !cur.is_object() {
        *cur = Value::Object(Default::default());
    }
    cur.as_object_mut().unwrap().insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, t) => *b = t,
    }
}

/// Parses `--a.b value` / `--a.b=value` pairs; values are read as JSON when possible, else as strings.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, Value)>, SsmError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let name = arg
            .strip_prefix("--")
            .ok_or_else(|| SsmError::Validation(format!("unexpected argument '{arg}'; options look like --order 5")))?;
        let (key, raw) = match name.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| SsmError::Validation(format!("option '--{name}' needs a value")))?;
                (name.to_string(), v.clone())
            }
        };
        let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        out.push((key, value));
    }
    Ok(out)
}

/// Builds the configuration with precedence flag > file > default.
pub fn resolve(file: Option<&Path>, overrides: &[(String, Value)]) -> Result<RunConfig, SsmError> {
    let mut value = serde_json::to_value(RunConfig::default()).expect("default config serializes");
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| SsmError::Io { path: path.display().to_string(), source: e })?;
        let from_file: Value = serde_json::from_str(&text).map_err(|e| SsmError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        merge(&mut value, from_file);
    }
    for (key, v) in overrides {
        set_path(&mut value, key, v.clone())?;
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| SsmError::Validation(format!("configuration: {e}")))?;
    if cfg.order < 1 {
        return Err(SsmError::Validation("order must be at least 1".into()));
    }
    if cfg.output.dofs.is_empty() || cfg.output.dofs.contains(&0) {
        return Err(SsmError::Validation("output.dofs must be nonempty and 1-based".into()));
    }
    Ok(cfg)
}
