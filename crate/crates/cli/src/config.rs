//! Experiment configuration: a sectioned plain-text (TOML) file with
//! explicit schema validation. Unknown keys are rejected, every default is
//! echoed back into the resolved manifest, and all numeric fields are
//! range-checked before a run starts.

use serde::{Deserialize, Serialize};

use semiprox::{MarkLaw, Modulation, ScalarGraph};

use crate::CliError;

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Worker threads for ensemble fan-out; 0 means available parallelism.
    pub workers: usize,
    pub operator: OperatorBlock,
    pub graph: GraphBlock,
    pub potential: PotentialBlock,
    pub noise: NoiseBlock,
    pub scheme: SchemeBlock,
    pub study: StudyBlock,
    pub output: OutputBlock,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorBlock {
    pub n: usize,
    pub length: f64,
    /// Smoothing power of the resolvent family.
    pub m: u32,
}

impl Default for OperatorBlock {
    fn default() -> Self {
        OperatorBlock { n: 32, length: 1.0, m: 2 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphBlock {
    pub name: String,
    pub scale: f64,
    pub mod_amp: f64,
    pub mod_freq: f64,
    pub mod_phase: f64,
}

impl Default for GraphBlock {
    fn default() -> Self {
        GraphBlock { name: "exponential".into(), scale: 1.0, mod_amp: 0.0, mod_freq: 0.0, mod_phase: 0.0 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialBlock {
    /// Window for the growth-comparability diagnostic.
    pub x_big: f64,
    pub x_max: f64,
}

impl Default for PotentialBlock {
    fn default() -> Self {
        PotentialBlock { x_big: 5.0, x_max: 50.0 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseBlock {
    pub k_dim: usize,
    pub wiener_var: f64,
    pub jump_rate: f64,
    /// `point`, `gaussian-iso`, or `uniform-sym`.
    pub mark_law: String,
    pub mark_value: Vec<f64>,
    pub mark_sigma: f64,
    pub mark_half_width: f64,
    pub drift: Vec<f64>,
}

impl Default for NoiseBlock {
    fn default() -> Self {
        NoiseBlock {
            k_dim: 1,
            wiener_var: 1.0,
            jump_rate: 0.0,
            mark_law: "point".into(),
            mark_value: vec![1.0],
            mark_sigma: 0.5,
            mark_half_width: 1.0,
            drift: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeBlock {
    /// `regularized`, `limit`, or `multiplicative`.
    pub kind: String,
    pub lambda: f64,
    pub n_steps: usize,
    pub t_end: f64,
    pub alpha: f64,
    pub picard_tol: f64,
    pub max_picard: usize,
    /// Multiplicative coefficient rule: `constant` or `diag-sin`.
    pub coeff: String,
    pub coeff_amp: f64,
    /// Amplitude of the additive smooth-column coefficient.
    pub noise_amp: f64,
}

impl Default for SchemeBlock {
    fn default() -> Self {
        SchemeBlock {
            kind: "limit".into(),
            lambda: 1e-2,
            n_steps: 1 << 10,
            t_end: 1.0,
            alpha: 0.25,
            picard_tol: 1e-10,
            max_picard: 25,
            coeff: "diag-sin".into(),
            coeff_amp: 0.1,
            noise_amp: 0.3,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyBlock {
    pub kind: String,
    pub n_paths: usize,
    pub seed_base: u64,
    pub samples: usize,
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub levels: Vec<usize>,
    pub kappa: f64,
    pub n_pairs: usize,
}

impl Default for StudyBlock {
    fn default() -> Self {
        StudyBlock {
            kind: "solve".into(),
            n_paths: 200,
            seed_base: 42,
            samples: 10_000,
            lambdas: vec![1e-1, 1e-2, 1e-3, 1e-4],
            deltas: vec![1e-1, 1e-2, 1e-3],
            levels: vec![256, 512, 1024],
            kappa: 64.0,
            n_pairs: 1000,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: String,
    pub verbosity: u32,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { directory: "out".into(), verbosity: 1 }
    }
}

pub const STUDY_KINDS: [&str; 11] = [
    "acceptance",
    "apriori",
    "dependence",
    "energy-refinement",
    "fixed-point",
    "gronwall",
    "heat-oracle",
    "lambda",
    "monotone-suite",
    "mp-audit",
    "solve",
];

pub const SCHEME_KINDS: [&str; 3] = ["limit", "multiplicative", "regularized"];
pub const MARK_LAWS: [&str; 3] = ["gaussian-iso", "point", "uniform-sym"];
pub const COEFF_RULES: [&str; 2] = ["constant", "diag-sin"];

impl ExperimentConfig {
    /// Parses and validates a config file.
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.operator.n < 2 {
            return fail(format!("operator block: n must be >= 2, got {}", self.operator.n));
        }
        if !(self.operator.length > 0.0) {
            return fail("operator block: length must be positive".into());
        }
        if self.operator.m == 0 {
            return fail("operator block: m must be >= 1".into());
        }
        if ScalarGraph::from_name(&self.graph.name).is_err() {
            return fail(format!("graph block: unknown name {:?}", self.graph.name));
        }
        if !(self.graph.scale > 0.0) {
            return fail("graph block: scale must be positive".into());
        }
        if self.graph.mod_amp.abs() >= 1.0 {
            return fail("graph block: |mod_amp| must be < 1".into());
        }
        if !(self.potential.x_big > 0.0 && self.potential.x_max > self.potential.x_big) {
            return fail("potential block: need 0 < x_big < x_max".into());
        }
        if self.noise.k_dim == 0 {
            return fail("noise block: k_dim must be >= 1".into());
        }
        if self.noise.wiener_var < 0.0 {
            return fail("noise block: wiener_var must be >= 0".into());
        }
        if self.noise.jump_rate < 0.0 {
            return fail("noise block: jump_rate must be >= 0".into());
        }
        if !MARK_LAWS.contains(&self.noise.mark_law.as_str()) {
            return fail(format!("noise block: unknown mark law {:?}", self.noise.mark_law));
        }
        if !self.noise.drift.is_empty() && self.noise.drift.len() != self.noise.k_dim {
            return fail("noise block: drift dimension must match k_dim".into());
        }
        if !SCHEME_KINDS.contains(&self.scheme.kind.as_str()) {
            return fail(format!("scheme block: unknown kind {:?}", self.scheme.kind));
        }
        if !(self.scheme.lambda > 0.0) {
            return fail("scheme block: lambda must be positive".into());
        }
        if self.scheme.n_steps == 0 {
            return fail("scheme block: n_steps must be >= 1".into());
        }
        if !(self.scheme.t_end > 0.0) {
            return fail("scheme block: t_end must be positive".into());
        }
        if !(self.scheme.alpha > 0.0 && self.scheme.alpha < 1.0) {
            return fail("scheme block: alpha must lie in (0, 1)".into());
        }
        if !(self.scheme.picard_tol > 0.0) {
            return fail("scheme block: picard_tol must be positive".into());
        }
        if self.scheme.max_picard == 0 {
            return fail("scheme block: max_picard must be >= 1".into());
        }
        if !COEFF_RULES.contains(&self.scheme.coeff.as_str()) {
            return fail(format!("scheme block: unknown coefficient {:?}", self.scheme.coeff));
        }
        if !STUDY_KINDS.contains(&self.study.kind.as_str()) {
            return fail(format!("study block: unknown kind {:?}", self.study.kind));
        }
        if self.study.kind != "solve" && self.study.n_paths == 0 {
            return fail("study block: n_paths must be >= 1".into());
        }
        if self.study.lambdas.iter().any(|l| *l <= 0.0) {
            return fail("study block: lambdas must be positive".into());
        }
        if self.study.levels.contains(&0) {
            return fail("study block: levels must be >= 1".into());
        }
        if !(self.study.kappa > 0.0) {
            return fail("study block: kappa must be positive".into());
        }
        if self.output.directory.is_empty() {
            return fail("output block: directory must be non-empty".into());
        }
        Ok(())
    }

    /// Builds the configured scalar graph.
    pub fn build_graph(&self) -> Result<ScalarGraph, CliError> {
        let mut g = ScalarGraph::from_name(&self.graph.name)
            .map_err(|e| CliError::Config(format!("graph block: {e}")))?
            .with_scale(self.graph.scale)
            .map_err(|e| CliError::Config(format!("graph block: {e}")))?;
        if self.graph.mod_amp != 0.0 {
            let m = Modulation::new(self.graph.mod_amp, self.graph.mod_freq, self.graph.mod_phase)
                .map_err(|e| CliError::Config(format!("graph block: {e}")))?;
            g = g.with_modulation(m);
        }
        Ok(g)
    }

    /// Builds the configured mark law.
    pub fn build_mark_law(&self) -> MarkLaw {
        match self.noise.mark_law.as_str() {
            "gaussian-iso" => MarkLaw::GaussianIso {
                mean: self.noise.mark_value.clone(),
                sigma: self.noise.mark_sigma,
            },
            "uniform-sym" => MarkLaw::UniformSym {
                half_width: self.noise.mark_half_width,
                dim: self.noise.k_dim,
            },
            _ => MarkLaw::Point(self.noise.mark_value.clone()),
        }
    }

    /// Canonical serialized form of the resolved config (defaults included).
    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }
}
