use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use volterra_core::dynamics::{DEFAULT_CONVERGENCE_WINDOW, DEFAULT_TOL};
use volterra_core::operator::OperatorHandle;
use volterra_core::skew::{linear_induced_tensor, DeterminingTensor, SkewSpec};
use volterra_core::{FaceIndexSet, SimplexPoint};

use crate::CliError;

/// Operators accepted in a config: any coefficient matrix kind, plus the
/// non-Volterra shift and general tensors.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum OperatorConfig {
    Volterra(SkewSpec),
    Other(OtherOperator),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OtherOperator {
    Shift,
    /// `values[((i-1) dim + (j-1)) dim + (k-1)] = p_{ij,k}`.
    Tensor {
        dim: usize,
        values: Vec<f64>,
        #[serde(default)]
        max_support: Option<usize>,
    },
    /// Quadratic operator induced by a row-stochastic matrix.
    Linear {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        max_support: Option<usize>,
    },
}

impl<'de> Deserialize<'de> for OperatorConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        let kind = value.get("kind").and_then(Value::as_str).unwrap_or_default();
        if matches!(kind, "shift" | "tensor" | "linear") {
            OtherOperator::deserialize(value)
                .map(OperatorConfig::Other)
                .map_err(D::Error::custom)
        } else {
            SkewSpec::deserialize(value)
                .map(OperatorConfig::Volterra)
                .map_err(D::Error::custom)
        }
    }
}

impl OperatorConfig {
    pub fn handle(&self) -> Result<OperatorHandle, CliError> {
        let invalid = |e: &dyn std::fmt::Display| CliError::Config(format!("operator: {e}"));
        match self {
            OperatorConfig::Volterra(spec) => OperatorHandle::volterra(spec.clone()).map_err(|e| invalid(&e)),
            OperatorConfig::Other(OtherOperator::Shift) => Ok(OperatorHandle::shift()),
            OperatorConfig::Other(OtherOperator::Tensor {
                dim,
                values,
                max_support,
            }) => {
                let t = DeterminingTensor::new(*dim, values.clone()).map_err(|e| invalid(&e))?;
                Ok(OperatorHandle::tensor(t, max_support.unwrap_or(*dim)))
            }
            OperatorConfig::Other(OtherOperator::Linear { matrix, max_support }) => {
                let t = linear_induced_tensor(matrix).map_err(|e| invalid(&e))?;
                let dim = t.dim();
                Ok(OperatorHandle::tensor(t, max_support.unwrap_or(dim)))
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            OperatorConfig::Volterra(spec) => spec.kind_name(),
            OperatorConfig::Other(OtherOperator::Shift) => "shift",
            OperatorConfig::Other(OtherOperator::Tensor { .. }) => "tensor",
            OperatorConfig::Other(OtherOperator::Linear { .. }) => "linear",
        }
    }
}

/// An explicit point `[[index, weight], ...]` or a named construction.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum InitialConfig {
    Explicit(SimplexPoint),
    Named(NamedInitial),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NamedInitial {
    Uniform(usize),
    Extreme(usize),
    Geometric {
        n: usize,
        ratio: f64,
    },
    /// Drawn from the run seed.
    Interior {
        face: FaceIndexSet,
    },
}

impl<'de> Deserialize<'de> for InitialConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        if value.is_array() {
            SimplexPoint::deserialize(value)
                .map(InitialConfig::Explicit)
                .map_err(D::Error::custom)
        } else {
            NamedInitial::deserialize(value)
                .map(InitialConfig::Named)
                .map_err(D::Error::custom)
        }
    }
}

impl InitialConfig {
    pub fn point(&self, seed: u64, field: &str) -> Result<SimplexPoint, CliError> {
        let invalid = |e: volterra_core::simplex::SimplexError| CliError::Config(format!("{field}: {e}"));
        match self {
            InitialConfig::Explicit(p) => Ok(p.clone()),
            InitialConfig::Named(NamedInitial::Uniform(n)) => SimplexPoint::uniform(*n).map_err(invalid),
            InitialConfig::Named(NamedInitial::Extreme(n)) => SimplexPoint::extreme(*n).map_err(invalid),
            InitialConfig::Named(NamedInitial::Geometric { n, ratio }) => {
                SimplexPoint::geometric_profile(*n, *ratio).map_err(invalid)
            }
            InitialConfig::Named(NamedInitial::Interior { face }) => {
                Ok(SimplexPoint::sample_interior(face, seed))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmptinessRange {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub base: SkewSpec,
    /// Two tails compared in the tail-replacement check.
    pub tails: (SkewSpec, SkewSpec),
    pub profile: InitialConfig,
    pub m: Vec<usize>,
    pub n: Vec<usize>,
    pub p: Vec<usize>,
    /// Truncation orders for the tail-replacement check.
    #[serde(default)]
    pub w_n: Vec<usize>,
    /// Tolerance for the adaptive power approximation.
    #[serde(default)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvgConfig {
    pub coords: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    /// Second argument of the conjugate operator in `apply`.
    #[serde(default)]
    pub second: Option<InitialConfig>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    /// Tolerance for checking a converged limit against the fixed-point region.
    #[serde(default = "default_q_tol")]
    pub q_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub face: Option<FaceIndexSet>,
    #[serde(default)]
    pub emptiness: Option<EmptinessRange>,
    #[serde(default)]
    pub study: Option<StudyConfig>,
    #[serde(default)]
    pub svg: Option<SvgConfig>,
}

fn default_stride() -> usize {
    1
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_window() -> usize {
    DEFAULT_CONVERGENCE_WINDOW
}

fn default_q_tol() -> f64 {
    1e-6
}

impl ScenarioConfig {
    fn empty() -> Self {
        Self {
            operator: None,
            initial: None,
            second: None,
            steps: None,
            stride: default_stride(),
            tol: default_tol(),
            window: default_window(),
            q_tol: default_q_tol(),
            seed: 0,
            face: None,
            emptiness: None,
            study: None,
            svg: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Built-in configurations for the reference runs.
    pub fn scenario(name: &str) -> Result<Self, CliError> {
        let mut c = Self::empty();
        match name {
            "example-5.1" => {
                c.operator = Some(OperatorConfig::Volterra(pair_spec(20)));
                c.initial = Some(InitialConfig::Named(NamedInitial::Uniform(40)));
                c.steps = Some(5000);
                c.stride = 10;
                c.face = Some(FaceIndexSet::initial(2).expect("nonempty"));
                c.svg = Some(SvgConfig { coords: vec![1, 2] });
            }
            "example-5.2" => {
                c.operator = Some(OperatorConfig::Volterra(SkewSpec::AlternatingSign));
                c.initial = Some(InitialConfig::Named(NamedInitial::Uniform(40)));
                c.steps = Some(10_000);
                c.stride = 100;
                c.emptiness = Some(EmptinessRange { from: 5, to: 20 });
                c.svg = Some(SvgConfig {
                    coords: vec![38, 39, 40],
                });
            }
            "shift" => {
                c.operator = Some(OperatorConfig::Other(OtherOperator::Shift));
                c.initial = Some(InitialConfig::Named(NamedInitial::Extreme(1)));
                c.steps = Some(100);
            }
            "rps" => {
                c.operator = Some(OperatorConfig::Volterra(rps_spec()));
                c.initial = Some(InitialConfig::Explicit(
                    SimplexPoint::new([(1, 0.5), (2, 0.3), (3, 0.2)]).expect("normalized"),
                ));
                c.steps = Some(100_000);
                c.stride = 100;
                c.face = Some(FaceIndexSet::initial(3).expect("nonempty"));
                c.svg = Some(SvgConfig {
                    coords: vec![1, 2, 3],
                });
            }
            "transitive" => {
                c.operator = Some(OperatorConfig::Volterra(transitive_spec()));
                c.initial = Some(InitialConfig::Named(NamedInitial::Uniform(3)));
                c.second = Some(InitialConfig::Named(NamedInitial::Extreme(3)));
                c.steps = Some(200);
                c.face = Some(FaceIndexSet::initial(3).expect("nonempty"));
            }
            "geometric" => {
                c.study = Some(StudyConfig {
                    base: SkewSpec::AlternatingSign,
                    tails: (SkewSpec::AlternatingSign, SkewSpec::Zero),
                    profile: InitialConfig::Named(NamedInitial::Geometric { n: 2000, ratio: 0.99 }),
                    m: (1..=5).collect(),
                    n: vec![100, 300, 500, 1000, 1500],
                    p: vec![100, 500],
                    w_n: vec![50, 500, 1000, 1999],
                    eps: Some(1e-6),
                });
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown scenario `{other}` (expected one of: {})",
                    SCENARIOS.join(", ")
                )))
            }
        }
        Ok(c)
    }

    /// SHA-256 of the resolved configuration in canonical JSON.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configs serialize");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn require<'a, T>(value: &'a Option<T>, field: &str) -> Result<&'a T, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{field}: missing field `{field}`")))
    }
}

pub const SCENARIOS: [&str; 6] = [
    "example-5.1",
    "example-5.2",
    "shift",
    "rps",
    "transitive",
    "geometric",
];

fn pair_spec(pairs: usize) -> SkewSpec {
    SkewSpec::pair_sequence(vec![1.0; pairs]).expect("unit coefficients are valid")
}

fn rps_spec() -> SkewSpec {
    SkewSpec::dense_from_rows(&[vec![0.0, 1.0, -1.0], vec![-1.0, 0.0, 1.0], vec![1.0, -1.0, 0.0]])
        .expect("square rows")
}

fn transitive_spec() -> SkewSpec {
    SkewSpec::dense_from_rows(&[vec![0.0, 1.0, 1.0], vec![-1.0, 0.0, 1.0], vec![-1.0, -1.0, 0.0]])
        .expect("square rows")
}
