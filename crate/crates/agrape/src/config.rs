//! Declarative experiment configuration: problem selection (preset or
//! custom), algorithm choice, and parameter validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{tensor_operator, CMatrix, UnitaryMatrix};
use crate::model::{
    cnot_gate, preset, toffoli_gate, ControlTerm, DriftTerm, GateSynthesisProblem,
    HamiltonianModel, UncertaintyDomain,
};
use crate::optim::{AgrapeConfig, AgrapeMode, BgrapeConfig, GaConfig, GrapeConfig};

/// Which optimizer a run uses. String forms are the CLI contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    BestResponse,
    BetterResponse,
    RelaxedBest,
    RelaxedBetter,
    Bgrape,
    NominalGrape,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "best_response" => Ok(Self::BestResponse),
            "better_response" => Ok(Self::BetterResponse),
            "relaxed_best" => Ok(Self::RelaxedBest),
            "relaxed_better" => Ok(Self::RelaxedBetter),
            "bgrape" => Ok(Self::Bgrape),
            "nominal_grape" => Ok(Self::NominalGrape),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm '{other}' (expected best_response, better_response, \
                 relaxed_best, relaxed_better, bgrape, or nominal_grape)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BestResponse => "best_response",
            Self::BetterResponse => "better_response",
            Self::RelaxedBest => "relaxed_best",
            Self::RelaxedBetter => "relaxed_better",
            Self::Bgrape => "bgrape",
            Self::NominalGrape => "nominal_grape",
        }
    }
}

/// One Hamiltonian term in a custom problem file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermSpec {
    /// Pauli-label string, e.g. "ZZ" or "XII".
    pub operator: String,
    #[serde(default)]
    pub coefficient: Option<f64>,
    #[serde(default)]
    pub channel: Option<usize>,
    #[serde(default)]
    pub uncertainty: Option<usize>,
}

/// Target gate: a named gate or an explicit [re, im] entry matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Named(String),
    Matrix { matrix: Vec<Vec<[f64; 2]>> },
}

/// A custom gate-synthesis problem, loadable from a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CustomProblemSpec {
    pub drift: Vec<TermSpec>,
    pub control: Vec<TermSpec>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub slice_count: usize,
    pub total_time: f64,
    pub target: TargetSpec,
    #[serde(default)]
    pub amplitude_bound: Option<f64>,
}

/// Preset name or inline custom problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Preset(String),
    Custom { custom: CustomProblemSpec },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<GateSynthesisProblem> {
        match self {
            ProblemSpec::Preset(name) => preset(name),
            ProblemSpec::Custom { custom } => build_custom(custom),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ProblemSpec::Preset(name) => name.clone(),
            ProblemSpec::Custom { .. } => "custom".to_string(),
        }
    }
}

fn build_target(spec: &TargetSpec, dim: usize) -> Result<UnitaryMatrix> {
    match spec {
        TargetSpec::Named(name) => match name.as_str() {
            "cnot" => Ok(cnot_gate()),
            "toffoli" => Ok(toffoli_gate()),
            "identity" => Ok(UnitaryMatrix::identity(dim)),
            other => Err(Error::InvalidConfig(format!(
                "unknown target gate '{other}' (expected cnot, toffoli, or identity)"
            ))),
        },
        TargetSpec::Matrix { matrix } => {
            let n = matrix.len();
            if matrix.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidConfig("target matrix must be square".into()));
            }
            let mut m = CMatrix::zeros(n, n);
            for (i, row) in matrix.iter().enumerate() {
                for (j, &[re, im]) in row.iter().enumerate() {
                    m[(i, j)] = num_complex::Complex64::new(re, im);
                }
            }
            UnitaryMatrix::new(m)
        }
    }
}

fn build_custom(spec: &CustomProblemSpec) -> Result<GateSynthesisProblem> {
    let domain = UncertaintyDomain::new(spec.lower.clone(), spec.upper.clone())?;
    let d = domain.dim();

    let mut drift = Vec::new();
    let mut dim = None;
    for t in &spec.drift {
        let op = tensor_operator(&t.operator)?;
        dim.get_or_insert(op.dim());
        drift.push(DriftTerm {
            coefficient: t.coefficient.ok_or_else(|| {
                Error::InvalidConfig(format!("drift term '{}' needs a coefficient", t.operator))
            })?,
            operator: op,
            uncertainty: t.uncertainty,
        });
    }
    let mut control = Vec::new();
    let mut max_channel = 0usize;
    for t in &spec.control {
        let op = tensor_operator(&t.operator)?;
        dim.get_or_insert(op.dim());
        let channel = t.channel.ok_or_else(|| {
            Error::InvalidConfig(format!("control term '{}' needs a channel", t.operator))
        })?;
        max_channel = max_channel.max(channel);
        control.push(ControlTerm {
            channel,
            operator: op,
            uncertainty: t.uncertainty,
        });
    }
    let dim = dim.ok_or_else(|| {
        Error::InvalidConfig("custom problem needs at least one Hamiltonian term".into())
    })?;
    let channels = if control.is_empty() { 1 } else { max_channel + 1 };
    let model = HamiltonianModel::new(dim, channels, d, drift, control)?;
    let target = build_target(&spec.target, dim)?;
    GateSynthesisProblem::new(
        model,
        target,
        domain,
        spec.slice_count,
        spec.total_time,
        spec.amplitude_bound,
    )
}

/// Flat parameter bag for a run; validated against the chosen algorithm.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct AlgorithmParams {
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(rename = "M", default)]
    pub batch: Option<usize>,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub m_samples: Option<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub n_mb: Option<usize>,
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub target_infidelity: Option<f64>,
    #[serde(default)]
    pub init_amplitude: Option<f64>,
}

/// Full declarative description of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    #[serde(flatten)]
    pub params: AlgorithmParams,
    pub seed: u64,
}

fn require<T: Copy>(v: Option<T>, field: &str, algo: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidConfig(format!("{algo} requires parameter '{field}'")))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Rounds for outer-loop algorithms, iterations for b-GRAPE.
    pub fn rounds(&self) -> Result<usize> {
        match self.algorithm {
            Algorithm::Bgrape => require(
                self.params.iterations.or(self.params.rounds),
                "iterations",
                "bgrape",
            ),
            Algorithm::NominalGrape => Ok(1),
            _ => require(
                self.params.rounds.or(self.params.iterations),
                "rounds",
                self.algorithm.as_str(),
            ),
        }
    }

    /// Typed outer-loop config for the a-GRAPE family.
    pub fn agrape_config(&self) -> Result<AgrapeConfig> {
        let p = &self.params;
        let mode = match self.algorithm {
            Algorithm::BestResponse => AgrapeMode::BestResponse {
                s: require(p.s, "s", "best_response")?,
            },
            Algorithm::BetterResponse => AgrapeMode::BetterResponse {
                batch: require(p.batch, "M", "better_response")?,
                ratio: require(p.r, "r", "better_response")?,
            },
            Algorithm::RelaxedBest => AgrapeMode::RelaxedBest {
                s: require(p.s, "s", "relaxed_best")?,
                n: require(p.n, "n", "relaxed_best")?,
                m_samples: require(p.m_samples, "m_samples", "relaxed_best")?,
            },
            Algorithm::RelaxedBetter => AgrapeMode::RelaxedBetter {
                ratio: require(p.r, "r", "relaxed_better")?,
                n: require(p.n, "n", "relaxed_better")?,
                m_samples: require(p.m_samples, "m_samples", "relaxed_better")?,
            },
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "{} is not an a-GRAPE outer loop",
                    self.algorithm.as_str()
                )))
            }
        };
        let mut cfg = AgrapeConfig::new(mode, self.rounds()?, self.seed);
        cfg.target_infidelity = p.target_infidelity;
        if let Some(a) = p.alpha {
            cfg.learning_rate = a;
        }
        if let Some(a) = p.init_amplitude {
            cfg.init_amplitude = a;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn bgrape_config(&self) -> Result<BgrapeConfig> {
        let p = &self.params;
        let mut cfg = BgrapeConfig {
            iterations: self.rounds()?,
            ..Default::default()
        };
        if let Some(v) = p.n_mb {
            cfg.minibatch = v;
        }
        if let Some(v) = p.alpha {
            cfg.learning_rate = v;
        }
        if let Some(v) = p.lambda {
            cfg.momentum = v;
        }
        if let Some(v) = p.init_amplitude {
            cfg.init_amplitude = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grape_config(&self) -> GrapeConfig {
        GrapeConfig::default()
    }

    pub fn ga_config(&self) -> GaConfig {
        GaConfig::default()
    }

    pub fn init_amplitude(&self) -> f64 {
        self.params.init_amplitude.unwrap_or(1.0)
    }

    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_preset_config() {
        let text = r#"{
            "problem": "two_qubit_cnot",
            "algorithm": "best_response",
            "s": 10,
            "rounds": 30,
            "seed": 7
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.algorithm, Algorithm::BestResponse);
        let a = cfg.agrape_config().unwrap();
        assert!(matches!(a.mode, AgrapeMode::BestResponse { s: 10 }));
        assert_eq!(a.max_rounds, 30);
        let p = cfg.problem.build().unwrap();
        assert_eq!(p.dim(), 4);
    }

    #[test]
    fn missing_parameter_is_field_level_error() {
        let text = r#"{
            "problem": "two_qubit_cnot",
            "algorithm": "better_response",
            "rounds": 5,
            "seed": 1
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let err = cfg.agrape_config().unwrap_err();
        assert!(err.to_string().contains("'M'"));
    }

    #[test]
    fn custom_problem_round_trip() {
        let text = r#"{
            "problem": {"custom": {
                "drift": [{"operator": "ZZ", "coefficient": 10.0, "uncertainty": 0}],
                "control": [
                    {"operator": "XI", "channel": 0},
                    {"operator": "IX", "channel": 1}
                ],
                "lower": [-0.2],
                "upper": [0.2],
                "slice_count": 50,
                "total_time": 0.3,
                "target": "cnot"
            }},
            "algorithm": "bgrape",
            "iterations": 100,
            "seed": 3
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let p = cfg.problem.build().unwrap();
        assert_eq!(p.dim(), 4);
        assert_eq!(p.model.channels, 2);
        assert_eq!(p.slice_count, 50);
        assert_eq!(cfg.bgrape_config().unwrap().iterations, 100);
    }

    #[test]
    fn explicit_matrix_target() {
        let spec = TargetSpec::Matrix {
            matrix: vec![
                vec![[1.0, 0.0], [0.0, 0.0]],
                vec![[0.0, 0.0], [0.0, 1.0]],
            ],
        };
        let u = build_target(&spec, 2).unwrap();
        assert_eq!(u.dim(), 2);
        // non-unitary matrix rejected
        let bad = TargetSpec::Matrix {
            matrix: vec![
                vec![[1.0, 0.0], [0.0, 0.0]],
                vec![[0.0, 0.0], [2.0, 0.0]],
            ],
        };
        assert!(build_target(&bad, 2).is_err());
    }

    #[test]
    fn unknown_algorithm_rejected() {
        assert!(Algorithm::parse("simulated_annealing").is_err());
        assert_eq!(Algorithm::parse("bgrape").unwrap(), Algorithm::Bgrape);
    }
}
