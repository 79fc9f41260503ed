//! Experiment configuration: a TOML document with one section per model.
//!
//! ```toml
//! model = "wave_heat"        # wave_heat | lshape | scalar_demo | custom
//! t_final = 2.0              # model default if absent
//! steps = 200
//! lambda = [0.1, 1.0, 10.0]  # default [1.0]
//! omega = [0.0, 0.25]        # default [1 / (2 t_final)]
//! seed = 7
//! out = "results"
//!
//! [stop]
//! max_iter = 500
//! tol = 1e-10
//!
//! [wave_heat]
//! damping = 1.0
//! left = "force"
//! input = { kind = "sine", amplitude = 1.0, frequency = 0.5 }
//! ```
//!
//! Every field except `model` is optional. [`parse_config`] applies the
//! defaults, so the resulting [`ExperimentConfig`] is fully resolved and
//! [`ExperimentConfig::to_toml`] writes it back out in the same schema.

use std::path::{Path, PathBuf};

use dyniter::models::{InputSignal, LeftBoundary};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    fn from_toml(text: &str, err: toml::de::Error) -> Self {
        let line = err.span().map_or(1, |s| 1 + text[..s.start.min(text.len())].matches('\n').count());
        ConfigError::Parse {
            line,
            message: err.message().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    WaveHeat,
    Lshape,
    ScalarDemo,
    Custom,
}

/// Time signal fed to every external port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputConfig {
    Zero,
    Constant { value: f64 },
    Sine { amplitude: f64, frequency: f64 },
}

impl From<InputConfig> for InputSignal {
    fn from(c: InputConfig) -> Self {
        match c {
            InputConfig::Zero => InputSignal::Zero,
            InputConfig::Constant { value } => InputSignal::Constant(value),
            InputConfig::Sine { amplitude, frequency } => InputSignal::Sine { amplitude, frequency },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeftEnd {
    Clamped,
    Velocity,
    Force,
}

impl From<LeftEnd> for LeftBoundary {
    fn from(l: LeftEnd) -> Self {
        match l {
            LeftEnd::Clamped => LeftBoundary::Clamped,
            LeftEnd::Velocity => LeftBoundary::ExternalVelocity,
            LeftEnd::Force => LeftBoundary::ExternalForce,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveHeatConfig {
    pub wave_cells: usize,
    pub heat_nodes: usize,
    pub rho: f64,
    pub tension: f64,
    pub damping: f64,
    pub left: LeftEnd,
    pub input: InputConfig,
}

impl Default for WaveHeatConfig {
    fn default() -> Self {
        Self {
            wave_cells: 16,
            heat_nodes: 16,
            rho: 1.0,
            tension: 1.0,
            damping: 0.0,
            left: LeftEnd::Clamped,
            input: InputConfig::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LshapeConfig {
    pub cells_per_unit: usize,
    pub rho: f64,
    pub tension: f64,
    pub damping: f64,
    pub input: InputConfig,
}

impl Default for LshapeConfig {
    fn default() -> Self {
        Self {
            cells_per_unit: 4,
            rho: 1.0,
            tension: 1.0,
            damping: 0.0,
            input: InputConfig::Sine {
                amplitude: 1.0,
                frequency: 0.5,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalarDemoConfig {
    pub x0: f64,
}

impl Default for ScalarDemoConfig {
    fn default() -> Self {
        Self { x0: 1.0 }
    }
}

/// Points at a matrix file, see [`crate::experiment::CustomMatrices`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConfig {
    /// Relative paths are taken relative to the configuration file.
    pub path: PathBuf,
    #[serde(default = "zero_input")]
    pub input: InputConfig,
}

fn zero_input() -> InputConfig {
    InputConfig::Zero
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    WaveHeat(WaveHeatConfig),
    Lshape(LshapeConfig),
    ScalarDemo(ScalarDemoConfig),
    Custom(CustomConfig),
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::WaveHeat => "wave_heat",
            ModelKind::Lshape => "lshape",
            ModelKind::ScalarDemo => "scalar_demo",
            ModelKind::Custom => "custom",
        }
    }
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::WaveHeat(_) => ModelKind::WaveHeat,
            ModelConfig::Lshape(_) => ModelKind::Lshape,
            ModelConfig::ScalarDemo(_) => ModelKind::ScalarDemo,
            ModelConfig::Custom(_) => ModelKind::Custom,
        }
    }

    /// `(t_final, steps)` used when the document does not set them.
    fn default_grid(kind: ModelKind) -> (f64, usize) {
        match kind {
            ModelKind::WaveHeat => (2.0, 200),
            ModelKind::Lshape => (1.0, 100),
            ModelKind::ScalarDemo => (1.0, 20),
            ModelKind::Custom => (1.0, 100),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-10,
        }
    }
}

pub const DEFAULT_OUT: &str = "dyniter-out";

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub t_final: f64,
    pub steps: usize,
    pub lambda: Vec<f64>,
    pub omega: Vec<f64>,
    pub stop: StopConfig,
    pub out: PathBuf,
    pub seed: u64,
}

/// The document as written, before defaults.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    model: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop: Option<StopConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wave_heat: Option<WaveHeatConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lshape: Option<LshapeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scalar_demo: Option<ScalarDemoConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    custom: Option<CustomConfig>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError::from_toml(text, e))?;
    let kind = doc.model.ok_or_else(|| ConfigError::invalid("model", "missing model selector"))?;

    let sections = [
        (ModelKind::WaveHeat, "wave_heat", doc.wave_heat.is_some()),
        (ModelKind::Lshape, "lshape", doc.lshape.is_some()),
        (ModelKind::ScalarDemo, "scalar_demo", doc.scalar_demo.is_some()),
        (ModelKind::Custom, "custom", doc.custom.is_some()),
    ];
    for (k, name, present) in sections {
        if present && k != kind {
            return Err(ConfigError::invalid(name, "section does not belong to the selected model"));
        }
    }
    let model = match kind {
        ModelKind::WaveHeat => ModelConfig::WaveHeat(doc.wave_heat.unwrap_or_default()),
        ModelKind::Lshape => ModelConfig::Lshape(doc.lshape.unwrap_or_default()),
        ModelKind::ScalarDemo => ModelConfig::ScalarDemo(doc.scalar_demo.unwrap_or_default()),
        ModelKind::Custom => ModelConfig::Custom(
            doc.custom
                .ok_or_else(|| ConfigError::invalid("custom", "model `custom` needs a [custom] section with `path`"))?,
        ),
    };

    let (t_default, steps_default) = ModelConfig::default_grid(kind);
    let t_final = doc.t_final.unwrap_or(t_default);
    let config = ExperimentConfig {
        model,
        t_final,
        steps: doc.steps.unwrap_or(steps_default),
        lambda: doc.lambda.unwrap_or_else(|| vec![1.0]),
        omega: doc.omega.unwrap_or_else(|| vec![0.5 / t_final]),
        stop: doc.stop.unwrap_or_default(),
        out: doc.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        seed: doc.seed.unwrap_or(0),
    };
    config.validate()?;
    Ok(config)
}

/// Reads and parses a configuration file; a relative custom matrix path is
/// resolved against the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    if let ModelConfig::Custom(c) = &mut config.model {
        if c.path.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            c.path = base.join(&c.path);
        }
    }
    Ok(config)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(ConfigError::invalid("t_final", "must be positive"));
        }
        if self.steps < 1 {
            return Err(ConfigError::invalid("steps", "must be at least 1"));
        }
        if self.lambda.is_empty() {
            return Err(ConfigError::invalid("lambda", "list is empty"));
        }
        if let Some(l) = self.lambda.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(ConfigError::invalid("lambda", format!("{l} is not positive")));
        }
        if self.omega.is_empty() {
            return Err(ConfigError::invalid("omega", "list is empty"));
        }
        if let Some(w) = self.omega.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(ConfigError::invalid("omega", format!("{w} is negative")));
        }
        if self.stop.max_iter < 1 {
            return Err(ConfigError::invalid("stop.max_iter", "must be at least 1"));
        }
        if !(self.stop.tol >= 0.0) {
            return Err(ConfigError::invalid("stop.tol", "must be non-negative"));
        }
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("{v} is not positive")))
            }
        };
        let damping = |field: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("{v} is negative")))
            }
        };
        match &self.model {
            ModelConfig::WaveHeat(p) => {
                if p.wave_cells < 2 {
                    return Err(ConfigError::invalid("wave_heat.wave_cells", "needs at least 2 cells"));
                }
                if p.heat_nodes < 2 {
                    return Err(ConfigError::invalid("wave_heat.heat_nodes", "needs at least 2 nodes"));
                }
                positive("wave_heat.rho", p.rho)?;
                positive("wave_heat.tension", p.tension)?;
                damping("wave_heat.damping", p.damping)?;
            }
            ModelConfig::Lshape(p) => {
                if p.cells_per_unit < 2 {
                    return Err(ConfigError::invalid("lshape.cells_per_unit", "needs at least 2"));
                }
                positive("lshape.rho", p.rho)?;
                positive("lshape.tension", p.tension)?;
                damping("lshape.damping", p.damping)?;
            }
            ModelConfig::ScalarDemo(p) => {
                if !p.x0.is_finite() {
                    return Err(ConfigError::invalid("scalar_demo.x0", "must be finite"));
                }
            }
            ModelConfig::Custom(_) => {}
        }
        Ok(())
    }

    /// The resolved configuration in the input schema.
    pub fn to_toml(&self) -> String {
        let mut doc = Document {
            model: Some(self.model.kind()),
            t_final: Some(self.t_final),
            steps: Some(self.steps),
            lambda: Some(self.lambda.clone()),
            omega: Some(self.omega.clone()),
            seed: Some(self.seed),
            out: Some(self.out.clone()),
            stop: Some(self.stop),
            ..Document::default()
        };
        match &self.model {
            ModelConfig::WaveHeat(p) => doc.wave_heat = Some(p.clone()),
            ModelConfig::Lshape(p) => doc.lshape = Some(p.clone()),
            ModelConfig::ScalarDemo(p) => doc.scalar_demo = Some(p.clone()),
            ModelConfig::Custom(p) => doc.custom = Some(p.clone()),
        }
        toml::to_string(&doc).expect("configuration is representable in TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("model = \"wave_heat\"\n").unwrap();
        assert_eq!(c.model, ModelConfig::WaveHeat(WaveHeatConfig::default()));
        assert_eq!((c.t_final, c.steps), (2.0, 200));
        assert_eq!(c.lambda, vec![1.0]);
        assert_eq!(c.omega, vec![0.25]);
        assert_eq!(c.stop, StopConfig { max_iter: 500, tol: 1e-10 });
        assert_eq!(c.out, PathBuf::from(DEFAULT_OUT));
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn omega_default_follows_t_final() {
        let c = parse_config("model = \"lshape\"\nt_final = 4.0\n").unwrap();
        assert_eq!(c.omega, vec![0.125]);
        assert_eq!(c.steps, 100);
    }

    #[test]
    fn negative_lambda_names_the_field() {
        let err = parse_config("model = \"wave_heat\"\nlambda = [1.0, -1.0]\n").unwrap_err();
        match err {
            ConfigError::Validation { field, .. } => assert_eq!(field, "lambda"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn other_invalid_fields() {
        for (text, want) in [
            ("model = \"wave_heat\"\nomega = [-0.5]\n", "omega"),
            ("model = \"wave_heat\"\nsteps = 0\n", "steps"),
            ("model = \"wave_heat\"\n[wave_heat]\nrho = 0.0\n", "wave_heat.rho"),
            ("model = \"scalar_demo\"\n[lshape]\n", "lshape"),
            ("model = \"custom\"\n", "custom"),
            ("steps = 3\n", "model"),
        ] {
            match parse_config(text).unwrap_err() {
                ConfigError::Validation { field, .. } => assert_eq!(field, want, "{text}"),
                other => panic!("{text}: {other}"),
            }
        }
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let err = parse_config("model = \"wave_heat\"\nsteps = 10\nlambda = [1.0,\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line, .. } if line >= 3), "{err}");
        let err = parse_config("model = \"wave_heat\"\n\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err}");
        let err = parse_config("model = \"heat\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn defaults_round_trip() {
        for text in [
            "model = \"wave_heat\"",
            "model = \"lshape\"",
            "model = \"scalar_demo\"",
            "model = \"custom\"\n[custom]\npath = \"node.toml\"",
        ] {
            let c = parse_config(text).unwrap();
            let again = parse_config(&c.to_toml()).unwrap();
            assert_eq!(c, again, "{}", c.to_toml());
        }
    }

    #[test]
    fn explicit_sections_round_trip() {
        let text = r#"
            model = "wave_heat"
            lambda = [0.1, 1.0, 10.0]
            omega = [0.0, 0.25]
            seed = 9
            [stop]
            max_iter = 50
            [wave_heat]
            damping = 1.0
            left = "force"
            input = { kind = "sine", amplitude = 2.0, frequency = 0.5 }
        "#;
        let c = parse_config(text).unwrap();
        let ModelConfig::WaveHeat(p) = &c.model else { panic!() };
        assert_eq!(p.left, LeftEnd::Force);
        assert_eq!(c.stop.tol, 1e-10);
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }
}
