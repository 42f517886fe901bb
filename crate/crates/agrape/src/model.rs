//! Parameterized Hamiltonian models with multiplicative uncertainties, the
//! box uncertainty domain, and the benchmark gate-synthesis problems.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{tensor_operator, CMatrix, HermitianOperator, UnitaryMatrix};

/// Piecewise-constant multi-channel control field over [0, T].
///
/// `values` is K×m (slices × channels), in rad/μs; `total_time` in μs.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPulse {
    pub values: DMatrix<f64>,
    pub total_time: f64,
}

impl ControlPulse {
    pub fn new(values: DMatrix<f64>, total_time: f64) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidConfig(
                "control pulse needs K ≥ 1 slices and m ≥ 1 channels".into(),
            ));
        }
        if !(total_time > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "total_time must be positive, got {total_time}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("control pulse has non-finite values".into()));
        }
        Ok(Self { values, total_time })
    }

    pub fn zeros(slices: usize, channels: usize, total_time: f64) -> Self {
        Self {
            values: DMatrix::zeros(slices, channels),
            total_time,
        }
    }

    /// Componentwise uniform in [-amplitude, amplitude].
    pub fn random(
        slices: usize,
        channels: usize,
        total_time: f64,
        amplitude: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let values = DMatrix::from_fn(slices, channels, |_, _| {
            rng.gen_range(-amplitude..=amplitude)
        });
        Self { values, total_time }
    }

    pub fn slice_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.slice_count() as f64
    }

    /// Projects every component onto [-bound, bound].
    pub fn clip(&mut self, bound: f64) {
        for v in self.values.iter_mut() {
            *v = v.clamp(-bound, bound);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// A point in the uncertainty parameter space (dimensionless).
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyVector(pub Vec<f64>);

impl UncertaintyVector {
    pub fn zero(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Box domain for the uncertainty vector, sampled uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl UncertaintyDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch(format!(
                "domain bounds of lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidConfig(
                "domain lower bound exceeds upper bound".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// The symmetric box |ε_i| ≤ bound.
    pub fn symmetric(dim: usize, bound: f64) -> Self {
        Self {
            lower: vec![-bound; dim],
            upper: vec![bound; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, eps: &UncertaintyVector) -> bool {
        eps.dim() == self.dim()
            && eps
                .0
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(e, (l, u))| *e >= *l && *e <= *u)
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn clip(&self, eps: &mut UncertaintyVector) {
        for (e, (l, u)) in eps.0.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *e = e.clamp(*l, *u);
        }
    }
}

/// Componentwise uniform sample over the box; deterministic given the stream.
pub fn sample_uniform(domain: &UncertaintyDomain, rng: &mut impl Rng) -> UncertaintyVector {
    UncertaintyVector(
        domain
            .lower
            .iter()
            .zip(&domain.upper)
            .map(|(&l, &u)| if l == u { l } else { rng.gen_range(l..=u) })
            .collect(),
    )
}

/// A drift term (1 + ε_a) c H, with ε_a optional.
#[derive(Debug, Clone)]
pub struct DriftTerm {
    pub coefficient: f64,
    pub operator: HermitianOperator,
    pub uncertainty: Option<usize>,
}

/// A control term (1 + ε_b) u_j(t) H on pulse channel j, with ε_b optional.
#[derive(Debug, Clone)]
pub struct ControlTerm {
    pub channel: usize,
    pub operator: HermitianOperator,
    pub uncertainty: Option<usize>,
}

/// H(t) = Σ_i (1+ε_{a_i}) c_i H_i + Σ_j (1+ε_{b_j}) u_j(t) H_j.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    pub dim: usize,
    pub channels: usize,
    pub uncertainty_dim: usize,
    pub drift: Vec<DriftTerm>,
    pub control: Vec<ControlTerm>,
}

impl HamiltonianModel {
    pub fn new(
        dim: usize,
        channels: usize,
        uncertainty_dim: usize,
        drift: Vec<DriftTerm>,
        control: Vec<ControlTerm>,
    ) -> Result<Self> {
        for (i, t) in drift.iter().enumerate() {
            if t.operator.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "drift term {i} has dimension {} but the model is {dim}-dimensional",
                    t.operator.dim()
                )));
            }
            if let Some(a) = t.uncertainty {
                if a >= uncertainty_dim {
                    return Err(Error::IndexOutOfRange(format!(
                        "drift term {i} uncertainty index {a} ≥ d = {uncertainty_dim}"
                    )));
                }
            }
        }
        for (j, t) in control.iter().enumerate() {
            if t.operator.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "control term {j} has dimension {} but the model is {dim}-dimensional",
                    t.operator.dim()
                )));
            }
            if t.channel >= channels {
                return Err(Error::IndexOutOfRange(format!(
                    "control term {j} channel {} ≥ m = {channels}",
                    t.channel
                )));
            }
            if let Some(b) = t.uncertainty {
                if b >= uncertainty_dim {
                    return Err(Error::IndexOutOfRange(format!(
                        "control term {j} uncertainty index {b} ≥ d = {uncertainty_dim}"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            channels,
            uncertainty_dim,
            drift,
            control,
        })
    }
}

/// The Hamiltonian for one pulse slice.
pub fn hamiltonian_slice(
    model: &HamiltonianModel,
    controls: &[f64],
    eps: &UncertaintyVector,
) -> Result<HermitianOperator> {
    if controls.len() != model.channels {
        return Err(Error::DimensionMismatch(format!(
            "slice has {} control values but the model has {} channels",
            controls.len(),
            model.channels
        )));
    }
    if eps.dim() != model.uncertainty_dim {
        return Err(Error::DimensionMismatch(format!(
            "uncertainty vector has dimension {} but the model expects {}",
            eps.dim(),
            model.uncertainty_dim
        )));
    }
    let mut h = CMatrix::zeros(model.dim, model.dim);
    for t in &model.drift {
        let scale = t.coefficient * (1.0 + t.uncertainty.map_or(0.0, |a| eps.0[a]));
        h += t.operator.entries().map(|x| x * C64::new(scale, 0.0));
    }
    for t in &model.control {
        let scale = controls[t.channel] * (1.0 + t.uncertainty.map_or(0.0, |b| eps.0[b]));
        h += t.operator.entries().map(|x| x * C64::new(scale, 0.0));
    }
    HermitianOperator::new(h)
}

/// Hamiltonian model + uncertainty domain + target unitary + pulse template.
#[derive(Debug, Clone)]
pub struct GateSynthesisProblem {
    pub model: HamiltonianModel,
    pub target: UnitaryMatrix,
    pub domain: UncertaintyDomain,
    pub slice_count: usize,
    pub total_time: f64,
    /// Optional control amplitude bound |u| ≤ u_max, enforced by projection.
    pub amplitude_bound: Option<f64>,
}

impl GateSynthesisProblem {
    pub fn new(
        model: HamiltonianModel,
        target: UnitaryMatrix,
        domain: UncertaintyDomain,
        slice_count: usize,
        total_time: f64,
        amplitude_bound: Option<f64>,
    ) -> Result<Self> {
        if target.dim() != model.dim {
            return Err(Error::DimensionMismatch(format!(
                "target is {}-dimensional but the model is {}-dimensional",
                target.dim(),
                model.dim
            )));
        }
        if domain.dim() != model.uncertainty_dim {
            return Err(Error::DimensionMismatch(format!(
                "domain has dimension {} but the model expects d = {}",
                domain.dim(),
                model.uncertainty_dim
            )));
        }
        if slice_count == 0 {
            return Err(Error::InvalidConfig("slice count must be ≥ 1".into()));
        }
        Ok(Self {
            model,
            target,
            domain,
            slice_count,
            total_time,
            amplitude_bound,
        })
    }

    pub fn dim(&self) -> usize {
        self.model.dim
    }

    pub fn uncertainty_dim(&self) -> usize {
        self.model.uncertainty_dim
    }

    pub fn zero_uncertainty(&self) -> UncertaintyVector {
        UncertaintyVector::zero(self.model.uncertainty_dim)
    }

    /// A seeded random initial pulse matching this problem's template.
    pub fn random_pulse(&self, amplitude: f64, rng: &mut impl Rng) -> ControlPulse {
        let mut p = ControlPulse::random(
            self.slice_count,
            self.model.channels,
            self.total_time,
            amplitude,
            rng,
        );
        if let Some(b) = self.amplitude_bound {
            p.clip(b);
        }
        p
    }

    /// Upper bound 4/N of the infidelity for this problem's dimension.
    pub fn infidelity_bound(&self) -> f64 {
        4.0 / self.dim() as f64
    }
}

/// CNOT in the computational basis, qubit 1 (most significant factor)
/// controlling qubit 2.
pub fn cnot_gate() -> UnitaryMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, c)] = C64::new(1.0, 0.0);
    }
    UnitaryMatrix::new(m).unwrap()
}

/// Toffoli in the computational basis, qubits 1 and 2 controlling qubit 3.
pub fn toffoli_gate() -> UnitaryMatrix {
    let mut m = CMatrix::zeros(8, 8);
    for i in 0..6 {
        m[(i, i)] = C64::new(1.0, 0.0);
    }
    m[(6, 7)] = C64::new(1.0, 0.0);
    m[(7, 6)] = C64::new(1.0, 0.0);
    UnitaryMatrix::new(m).unwrap()
}

/// The determinant-one representative e^{iφ}·U of a unitary.
///
/// Traceless Hamiltonians (every Pauli tensor product here) generate only
/// SU(N), so a target with det ≠ 1 — CNOT and Toffoli both have det −1 —
/// sits at a fixed phase-sensitive infidelity floor no control can beat
/// ((2−√2)/4 for CNOT). The presets therefore aim at the SU(N)
/// representative of the named gate, which is the same physical operation.
pub fn special_unitary_representative(u: &UnitaryMatrix) -> UnitaryMatrix {
    let n = u.dim();
    let det: C64 = u.entries().clone().lu().determinant();
    let correction = C64::from_polar(1.0, -det.arg() / n as f64);
    UnitaryMatrix::new(u.entries().map(|x| x * correction)).unwrap()
}

/// Two-qubit CNOT synthesis benchmark: drift g σ_z⊗σ_z with g = 10 rad/μs
/// (uncertainty 0), four control channels {σ_1x, σ_1y, σ_2x, σ_2y} with the
/// channels of qubit i scaled by (1+ε_i); |ε| ≤ 0.2, T = 0.3 μs, K = 100.
pub fn two_qubit_problem() -> GateSynthesisProblem {
    let drift = vec![DriftTerm {
        coefficient: 10.0,
        operator: tensor_operator("ZZ").unwrap(),
        uncertainty: Some(0),
    }];
    let control = vec![
        ControlTerm {
            channel: 0,
            operator: tensor_operator("XI").unwrap(),
            uncertainty: Some(1),
        },
        ControlTerm {
            channel: 1,
            operator: tensor_operator("YI").unwrap(),
            uncertainty: Some(1),
        },
        ControlTerm {
            channel: 2,
            operator: tensor_operator("IX").unwrap(),
            uncertainty: Some(2),
        },
        ControlTerm {
            channel: 3,
            operator: tensor_operator("IY").unwrap(),
            uncertainty: Some(2),
        },
    ];
    let model = HamiltonianModel::new(4, 4, 3, drift, control).unwrap();
    GateSynthesisProblem::new(
        model,
        special_unitary_representative(&cnot_gate()),
        UncertaintyDomain::symmetric(3, 0.2),
        100,
        0.3,
        None,
    )
    .unwrap()
}

/// Three-qubit Toffoli synthesis benchmark: drifts J₁₂ σ_1z σ_2z and
/// J₂₃ σ_2z σ_3z with J = 10 rad/μs (uncertainties 0 and 1), six
/// uncertainty-free control channels {σ_kx, σ_ky}; |ε| ≤ 0.2, T = 1 μs, K = 100.
pub fn three_qubit_problem() -> GateSynthesisProblem {
    let drift = vec![
        DriftTerm {
            coefficient: 10.0,
            operator: tensor_operator("ZZI").unwrap(),
            uncertainty: Some(0),
        },
        DriftTerm {
            coefficient: 10.0,
            operator: tensor_operator("IZZ").unwrap(),
            uncertainty: Some(1),
        },
    ];
    let mut control = Vec::new();
    for (k, prefix) in ["XII", "YII", "IXI", "IYI", "IIX", "IIY"].iter().enumerate() {
        control.push(ControlTerm {
            channel: k,
            operator: tensor_operator(prefix).unwrap(),
            uncertainty: None,
        });
    }
    let model = HamiltonianModel::new(8, 6, 2, drift, control).unwrap();
    GateSynthesisProblem::new(
        model,
        special_unitary_representative(&toffoli_gate()),
        UncertaintyDomain::symmetric(2, 0.2),
        100,
        1.0,
        None,
    )
    .unwrap()
}

/// Look up a problem preset by name.
pub fn preset(name: &str) -> Result<GateSynthesisProblem> {
    match name {
        "two_qubit_cnot" => Ok(two_qubit_problem()),
        "three_qubit_toffoli" => Ok(three_qubit_problem()),
        other => Err(Error::InvalidConfig(format!(
            "unknown problem preset '{other}' (expected two_qubit_cnot or three_qubit_toffoli)"
        ))),
    }
}
