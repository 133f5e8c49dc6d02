//! Run configuration: JSON schema, defaults and validation.

use std::fmt;
use std::path::Path;

use residue_index_core::foliated_groupoid::Rational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config error at {path}: {message}")]
    Schema { path: String, message: String },
}

impl ConfigError {
    fn field(path: &str, message: impl Into<String>) -> Self {
        ConfigError::Schema { path: path.into(), message: message.into() }
    }

    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Schema { path, .. } => Some(path),
            ConfigError::Io { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    TraceSuite,
    ResidueCrosscheck,
    IndexPairing,
    #[default]
    All,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::TraceSuite => "trace-suite",
            Task::ResidueCrosscheck => "residue-crosscheck",
            Task::IndexPairing => "index-pairing",
            Task::All => "all",
        }
    }

    pub fn expand(self) -> Vec<Task> {
        match self {
            Task::All => vec![Task::ResidueCrosscheck, Task::TraceSuite, Task::IndexPairing],
            t => vec![t],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Real matrix rows, with an optional imaginary part of the same shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn real(rows: Vec<Vec<f64>>) -> Self {
        MatrixSpec { re: rows, im: None }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.re.len(), self.re.first().map_or(0, Vec::len))
    }
}

/// One Fourier mode `c_k e^{2πikθ}` of a matrix-valued coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub mode: i64,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl ModeSpec {
    pub fn value(&self) -> MatrixSpec {
        MatrixSpec { re: self.re.clone(), im: self.im.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSpec {
    pub period: f64,
    pub h_prime: MatrixSpec,
    pub j_plus: MatrixSpec,
    pub j_minus: MatrixSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointSpec {
    pub kappa: MatrixSpec,
    pub j_plus: MatrixSpec,
    pub j_minus: MatrixSpec,
}

/// `V = S¹ × B` with flow `(θ + ωt, b + t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct S1Spec {
    #[serde(default = "defaults::period")]
    pub period: f64,
    /// Exact decimal string.
    #[serde(default = "defaults::omega")]
    pub omega: String,
    /// Grid points on the transversal circle.
    #[serde(default = "defaults::points")]
    pub points: usize,
}

impl Default for S1Spec {
    fn default() -> Self {
        S1Spec { period: defaults::period(), omega: defaults::omega(), points: defaults::points() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclarativeSpec {
    pub orbits: Vec<OrbitSpec>,
    pub fixed_points: Vec<FixedPointSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SystemSpec {
    S1(S1Spec),
    Declarative(DeclarativeSpec),
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec::S1(S1Spec::default())
    }
}

impl SystemSpec {
    /// The S1 product with unit period and the golden slope.
    pub fn is_golden(&self) -> bool {
        matches!(self, SystemSpec::S1(s) if s.period == 1.0 && s.omega == defaults::omega())
    }

    /// Tagged content is buffered, so errors inside it lose their path;
    /// re-reading the body against its variant recovers it.
    fn refine(value: &serde_json::Value) -> Option<ConfigError> {
        let mut body = value.as_object()?.clone();
        let family = body.remove("family")?;
        let body = serde_json::Value::Object(body);
        let err = match family.as_str()? {
            "s1" => serde_path_to_error::deserialize::<_, S1Spec>(body).err()?,
            "declarative" => serde_path_to_error::deserialize::<_, DeclarativeSpec>(body).err()?,
            _ => return None,
        };
        let inner = err.path().to_string();
        Some(ConfigError::field(&format!("system.{inner}"), err.into_inner().to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSpec {
    #[default]
    Abs,
    Bracket,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectorSpec {
    /// Projector onto `E⁺`.
    Plus,
    Matrix(MatrixSpec),
}

/// `D_± = a_±(θ)(2πi)^{-1} d/dθ + b_±(θ)`; omitted `D₋` is the formal adjoint of `D₊`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    #[serde(default = "defaults::rank")]
    pub rank: usize,
    #[serde(default = "defaults::a_plus")]
    pub a_plus: Vec<ModeSpec>,
    #[serde(default)]
    pub b_plus: Vec<ModeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_minus: Option<Vec<ModeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_minus: Option<Vec<ModeSpec>>,
    #[serde(default = "defaults::projector")]
    pub j: ProjectorSpec,
    /// Winding of the Bott element `e^{2πikx}`.
    #[serde(default = "defaults::winding")]
    pub bott_winding: i64,
    #[serde(default)]
    pub weight: WeightSpec,
}

impl Default for OperatorSpec {
    fn default() -> Self {
        OperatorSpec {
            rank: defaults::rank(),
            a_plus: defaults::a_plus(),
            b_plus: Vec::new(),
            a_minus: None,
            b_minus: None,
            j: defaults::projector(),
            bott_winding: defaults::winding(),
            weight: WeightSpec::Abs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Symbol truncation depth.
    pub depth: usize,
    /// Matrix cutoff `N` of the pairing oracle.
    pub truncation: usize,
    /// Cutoff of the closed-form Mellin validation.
    pub mellin_modes: usize,
    /// Cutoff of the fixed-point cross-checks.
    pub crosscheck_modes: usize,
    pub crosscheck_cases: usize,
    pub trace_pairs: usize,
    pub kernel_samples: usize,
    pub quadrature_panels: usize,
    pub quadrature_order: usize,
    pub n_max: i64,
    pub word_length: usize,
    pub degeneracy_floor: f64,
    pub seed: u64,
    pub idempotent_max_iterations: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            depth: 6,
            truncation: 512,
            mellin_modes: 1024,
            crosscheck_modes: 512,
            crosscheck_cases: 10,
            trace_pairs: 20,
            kernel_samples: 10,
            quadrature_panels: 16,
            quadrature_order: 16,
            n_max: 1000,
            word_length: 8,
            degeneracy_floor: 1e-9,
            seed: 20_240_601,
            idempotent_max_iterations: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub residue: f64,
    pub mellin: f64,
    pub fit_residual: f64,
    pub crosscheck: f64,
    pub trace: f64,
    pub kernel: f64,
    pub dirac: f64,
    pub symbol: f64,
    pub pairing: f64,
    pub idempotent: f64,
    pub geometric: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residue: 1e-6,
            mellin: 1e-3,
            fit_residual: 1e-4,
            crosscheck: 5e-3,
            trace: 1e-8,
            kernel: 1e-6,
            dirac: 1e-4,
            symbol: 1e-12,
            pairing: 1e-2,
            idempotent: 1e-8,
            geometric: 1e-6,
        }
    }
}

/// Seed `χ ⊗ χ` projection with `χ` a bump at `center` of half-width
/// `halfwidth` (fractions of the period), plus a perturbation of size
/// `perturbation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdempotentSpec {
    pub center: f64,
    pub halfwidth: f64,
    pub perturbation: f64,
}

impl Default for IdempotentSpec {
    fn default() -> Self {
        IdempotentSpec { center: 0.5, halfwidth: 0.4, perturbation: 1e-3 }
    }
}

/// `e(v, t) = (t - t_lo)²(t_hi - t)² (1 + ½ cos 2πv/p)` on orbits and fixed points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometricSpec {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Default for GeometricSpec {
    fn default() -> Self {
        GeometricSpec { t_lo: 0.5, t_hi: 3.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub task: Task,
    #[serde(default)]
    pub system: SystemSpec,
    #[serde(default)]
    pub operator: OperatorSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub idempotent: IdempotentSpec,
    #[serde(default)]
    pub geometric: GeometricSpec,
}

mod defaults {
    use super::{ModeSpec, ProjectorSpec};

    pub fn period() -> f64 {
        1.0
    }
    pub fn omega() -> String {
        "0.6180339887".into()
    }
    pub fn points() -> usize {
        64
    }
    pub fn rank() -> usize {
        1
    }
    pub fn a_plus() -> Vec<ModeSpec> {
        vec![ModeSpec { mode: 0, re: vec![vec![1.0]], im: None }]
    }
    pub fn projector() -> ProjectorSpec {
        ProjectorSpec::Plus
    }
    pub fn winding() -> i64 {
        1
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "system" {
                let refined = serde_json::from_str::<serde_json::Value>(text).ok().and_then(|v| SystemSpec::refine(&v["system"]));
                if let Some(r) = refined {
                    return r;
                }
            }
            ConfigError::Schema { path: if path == "." { "<root>".into() } else { path }, message: e.into_inner().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical JSON with all defaults filled.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.tolerances;
        for (name, v) in [
            ("residue", t.residue),
            ("mellin", t.mellin),
            ("fit_residual", t.fit_residual),
            ("crosscheck", t.crosscheck),
            ("trace", t.trace),
            ("kernel", t.kernel),
            ("dirac", t.dirac),
            ("symbol", t.symbol),
            ("pairing", t.pairing),
            ("idempotent", t.idempotent),
            ("geometric", t.geometric),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::field(&format!("tolerances.{name}"), format!("must be positive, got {v}")));
            }
        }
        let n = &self.numerics;
        for (name, v) in [("truncation", n.truncation), ("mellin_modes", n.mellin_modes), ("crosscheck_modes", n.crosscheck_modes)] {
            if !v.is_power_of_two() || v < 8 {
                return Err(ConfigError::field(&format!("numerics.{name}"), format!("must be a power of two ≥ 8, got {v}")));
            }
        }
        for (name, v) in [
            ("trace_pairs", n.trace_pairs),
            ("kernel_samples", n.kernel_samples),
            ("crosscheck_cases", n.crosscheck_cases),
            ("quadrature_panels", n.quadrature_panels),
            ("quadrature_order", n.quadrature_order),
            ("word_length", n.word_length),
            ("idempotent_max_iterations", n.idempotent_max_iterations),
        ] {
            if v == 0 {
                return Err(ConfigError::field(&format!("numerics.{name}"), "must be positive"));
            }
        }
        if n.depth < 2 {
            return Err(ConfigError::field("numerics.depth", format!("must be at least 2, got {}", n.depth)));
        }
        if n.n_max < 1 {
            return Err(ConfigError::field("numerics.n_max", "must be positive"));
        }
        if !(n.degeneracy_floor > 0.0) {
            return Err(ConfigError::field("numerics.degeneracy_floor", "must be positive"));
        }
        match &self.system {
            SystemSpec::S1(S1Spec { period, omega, points }) => {
                if !(*period > 0.0 && period.is_finite()) {
                    return Err(ConfigError::field("system.period", "must be positive"));
                }
                Rational::parse_decimal(omega).map_err(|e| ConfigError::field("system.omega", e.to_string()))?;
                if *points < 8 {
                    return Err(ConfigError::field("system.points", "must be at least 8"));
                }
            }
            SystemSpec::Declarative(DeclarativeSpec { orbits, fixed_points }) => {
                for (i, o) in orbits.iter().enumerate() {
                    let p = format!("system.orbits[{i}]");
                    if !(o.period > 0.0) {
                        return Err(ConfigError::field(&format!("{p}.period"), "must be positive"));
                    }
                    square(&o.h_prime, &format!("{p}.h_prime"))?;
                    square(&o.j_plus, &format!("{p}.j_plus"))?;
                    square(&o.j_minus, &format!("{p}.j_minus"))?;
                }
                for (i, f) in fixed_points.iter().enumerate() {
                    let p = format!("system.fixed_points[{i}]");
                    square(&f.kappa, &format!("{p}.kappa"))?;
                    square(&f.j_plus, &format!("{p}.j_plus"))?;
                    square(&f.j_minus, &format!("{p}.j_minus"))?;
                }
            }
        }
        let op = &self.operator;
        if op.rank == 0 {
            return Err(ConfigError::field("operator.rank", "must be positive"));
        }
        for (name, modes) in [("a_plus", Some(&op.a_plus)), ("b_plus", Some(&op.b_plus)), ("a_minus", op.a_minus.as_ref()), ("b_minus", op.b_minus.as_ref())] {
            for (i, m) in modes.into_iter().flatten().enumerate() {
                let p = format!("operator.{name}[{i}]");
                let v = m.value();
                rectangular(&v, &p)?;
                if v.shape() != (op.rank, op.rank) {
                    return Err(ConfigError::field(&p, format!("expected {0}×{0} coefficients", op.rank)));
                }
            }
        }
        if op.a_minus.is_some() != op.b_minus.is_some() {
            return Err(ConfigError::field("operator.a_minus", "a_minus and b_minus are given together"));
        }
        if let ProjectorSpec::Matrix(m) = &op.j {
            rectangular(m, "operator.j")?;
            if m.shape() != (2 * op.rank, 2 * op.rank) {
                return Err(ConfigError::field("operator.j", format!("expected {0}×{0}", 2 * op.rank)));
            }
        }
        let i = &self.idempotent;
        if !(i.halfwidth > 0.0 && i.halfwidth < 0.5) {
            return Err(ConfigError::field("idempotent.halfwidth", "must lie in (0, 0.5)"));
        }
        if !(0.0..=1.0).contains(&i.center) {
            return Err(ConfigError::field("idempotent.center", "must lie in [0, 1]"));
        }
        if !(i.perturbation >= 0.0 && i.perturbation < 0.1) {
            return Err(ConfigError::field("idempotent.perturbation", "must lie in [0, 0.1)"));
        }
        let g = &self.geometric;
        if !(g.t_lo > 0.0 && g.t_hi > g.t_lo) {
            return Err(ConfigError::field("geometric.t_lo", "need 0 < t_lo < t_hi"));
        }
        Ok(())
    }
}

fn rectangular(m: &MatrixSpec, path: &str) -> Result<(), ConfigError> {
    let (r, c) = m.shape();
    if m.re.iter().any(|row| row.len() != c) {
        return Err(ConfigError::field(&format!("{path}.re"), "rows differ in length"));
    }
    if let Some(im) = &m.im {
        if im.len() != r || im.iter().any(|row| row.len() != c) {
            return Err(ConfigError::field(&format!("{path}.im"), "shape differs from re"));
        }
    }
    Ok(())
}

fn square(m: &MatrixSpec, path: &str) -> Result<(), ConfigError> {
    rectangular(m, path)?;
    let (r, c) = m.shape();
    if r != c {
        return Err(ConfigError::field(path, format!("expected a square matrix, got {r}×{c}")));
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    RunConfig::from_json(&text)
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
