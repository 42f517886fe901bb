//! The game engine: inner GRAPE minimization over batch objectives,
//! adversary maximizers, and the outer adversarial training loops.

mod adversary;
mod bgrape;
mod grape;
mod outer;

pub use adversary::{
    genetic_maximize, genetic_maximize_detailed, gradient_ascent_maximize, worst_of_batch,
    worst_of_batch_detailed, GaRun,
};
pub use bgrape::run_bgrape;
pub use grape::{
    batch_objective, batch_objective_and_gradient, grape_minimize, GrapeRun, GrapeTermination,
};
pub use outer::{run_best_response, run_better_response, run_nominal, run_relaxed};

use crate::error::{Error, Result};
use crate::model::{ControlPulse, UncertaintyVector};

/// Bounded-memory ordered set of adversarial uncertainty samples, oldest
/// first. The empirical mixed strategy the control trains against.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialSampleSet {
    samples: Vec<UncertaintyVector>,
    capacity: usize,
}

impl AdversarialSampleSet {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("sample set capacity must be ≥ 1".into()));
        }
        Ok(Self {
            samples: Vec::new(),
            capacity,
        })
    }

    pub fn with_samples(capacity: usize, samples: Vec<UncertaintyVector>) -> Result<Self> {
        if samples.len() > capacity {
            return Err(Error::InvalidConfig(format!(
                "{} samples exceed capacity {capacity}",
                samples.len()
            )));
        }
        let mut set = Self::new(capacity)?;
        set.samples = samples;
        Ok(set)
    }

    /// Sliding-window update: append, dropping the oldest once full.
    pub fn update_memory(&mut self, eps: UncertaintyVector) {
        if self.samples.len() == self.capacity {
            self.samples.remove(0);
        }
        self.samples.push(eps);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &UncertaintyVector> {
        self.samples.iter()
    }

    pub fn samples(&self) -> &[UncertaintyVector] {
        &self.samples
    }
}

/// Inner GRAPE loop settings.
#[derive(Debug, Clone)]
pub struct GrapeConfig {
    pub max_iterations: usize,
    /// Stop when the gradient max-norm falls below this.
    pub gradient_tolerance: f64,
    /// Stop when the objective falls below this.
    pub objective_threshold: f64,
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub armijo_constant: f64,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-8,
            objective_threshold: 1e-10,
            initial_step: 0.1,
            backtrack_factor: 0.5,
            armijo_constant: 1e-4,
        }
    }
}

impl GrapeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gradient_tolerance <= 0.0
            || self.objective_threshold <= 0.0
            || self.initial_step <= 0.0
            || !(0.0 < self.backtrack_factor && self.backtrack_factor < 1.0)
            || self.armijo_constant <= 0.0
        {
            return Err(Error::InvalidConfig("GRAPE settings must be positive".into()));
        }
        Ok(())
    }
}

/// Genetic adversary settings.
#[derive(Debug, Clone)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub elite_fraction: f64,
    /// Gaussian mutation stddev as a fraction of the box width per component.
    pub mutation_stddev: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 30,
            elite_fraction: 0.1,
            mutation_stddev: 0.05,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidConfig("GA population must be ≥ 2".into()));
        }
        if !(0.0 < self.elite_fraction && self.elite_fraction < 1.0) {
            return Err(Error::InvalidConfig("elite fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Which maximizer realizes the adversary's "arg max".
#[derive(Debug, Clone)]
pub enum AdversaryKind {
    Genetic,
    MultiStartGradient {
        starts: usize,
        iterations: usize,
        step: f64,
    },
}

/// Outer-loop mode and its parameters.
#[derive(Debug, Clone)]
pub enum AgrapeMode {
    /// Algorithm with memory size s: GA adversary, sliding-window memory.
    BestResponse { s: usize },
    /// Batch adversary: draw M samples, retain the worst ceil(rM).
    BetterResponse { batch: usize, ratio: f64 },
    /// Fixed-step inner loop: n iterations, m samples per round, memory s.
    RelaxedBest { s: usize, n: usize, m_samples: usize },
    /// Fixed-step inner loop with batch retention ratio r.
    RelaxedBetter { ratio: f64, n: usize, m_samples: usize },
}

/// Outer adversarial-training loop settings.
#[derive(Debug, Clone)]
pub struct AgrapeConfig {
    pub mode: AgrapeMode,
    pub max_rounds: usize,
    /// Optional early stop once the worst-case estimate falls below this.
    pub target_infidelity: Option<f64>,
    pub master_seed: u64,
    /// Fixed learning rate for the relaxed modes.
    pub learning_rate: f64,
    /// Amplitude of the seeded random initial pulse, rad/μs.
    pub init_amplitude: f64,
    pub adversary: AdversaryKind,
}

impl AgrapeConfig {
    pub fn new(mode: AgrapeMode, max_rounds: usize, master_seed: u64) -> Self {
        Self {
            mode,
            max_rounds,
            target_infidelity: None,
            master_seed,
            learning_rate: 0.002,
            init_amplitude: 1.0,
            adversary: AdversaryKind::Genetic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.mode {
            AgrapeMode::BestResponse { s } | AgrapeMode::RelaxedBest { s, .. } => {
                if *s == 0 {
                    return Err(Error::InvalidConfig("memory size s must be ≥ 1".into()));
                }
            }
            AgrapeMode::BetterResponse { batch, ratio } => {
                if *batch == 0 {
                    return Err(Error::InvalidConfig("batch size M must be ≥ 1".into()));
                }
                if !(0.0 < *ratio && *ratio <= 1.0) {
                    return Err(Error::InvalidConfig("ratio r must be in (0, 1]".into()));
                }
            }
            AgrapeMode::RelaxedBetter { ratio, .. } => {
                if !(0.0 < *ratio && *ratio <= 1.0) {
                    return Err(Error::InvalidConfig("ratio r must be in (0, 1]".into()));
                }
            }
        }
        if let AgrapeMode::RelaxedBest { m_samples, .. } | AgrapeMode::RelaxedBetter { m_samples, .. } =
            &self.mode
        {
            if *m_samples == 0 {
                return Err(Error::InvalidConfig("sample count m must be ≥ 1".into()));
            }
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Momentum stochastic-gradient baseline settings.
#[derive(Debug, Clone)]
pub struct BgrapeConfig {
    pub minibatch: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub iterations: usize,
    pub init_amplitude: f64,
    /// Record every iteration instead of every `trace_stride`-th.
    pub full_trace: bool,
    pub trace_stride: usize,
}

impl Default for BgrapeConfig {
    fn default() -> Self {
        Self {
            minibatch: 1,
            learning_rate: 0.002,
            momentum: 0.9,
            iterations: 1000,
            init_amplitude: 1.0,
            full_trace: false,
            trace_stride: 100,
        }
    }
}

impl BgrapeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.minibatch == 0 {
            return Err(Error::InvalidConfig("mini-batch size must be ≥ 1".into()));
        }
        if !(0.0 <= self.momentum && self.momentum < 1.0) {
            return Err(Error::InvalidConfig("momentum must be in [0, 1)".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the per-round trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub j_min: f64,
    pub l_max_estimate: f64,
    pub gap: f64,
    pub inner_iters: usize,
    pub elapsed_s: f64,
    /// |B| after this round's sample update; not part of the trace schema.
    pub batch_size: usize,
}

/// Why an outer run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxRounds,
    TargetReached,
    Interrupted,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::MaxRounds => "max_rounds",
            Termination::TargetReached => "target_reached",
            Termination::Interrupted => "interrupted",
        }
    }
}

/// How `l_max_estimate` was produced in each trace row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmaxSemantics {
    /// GA (or gradient-ascent) result, together with the memory samples.
    Adversary,
    /// Max over the round's random batch.
    BatchMax,
    /// Max over the round's m drawn samples.
    SampleMax,
    /// Objective at ε = 0 (nominal training).
    Nominal,
    /// Max over the mini-batch.
    Minibatch,
}

impl LmaxSemantics {
    pub fn as_str(&self) -> &'static str {
        match self {
            LmaxSemantics::Adversary => "adversary_max",
            LmaxSemantics::BatchMax => "batch_max",
            LmaxSemantics::SampleMax => "sample_max",
            LmaxSemantics::Nominal => "nominal",
            LmaxSemantics::Minibatch => "minibatch_max",
        }
    }
}

/// Final pulse plus the full per-round trace.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub pulse: ControlPulse,
    pub trace: Vec<RoundRecord>,
    pub samples: AdversarialSampleSet,
    pub termination: Termination,
    pub l_max_semantics: LmaxSemantics,
}

/// Per-round callback. Return `false` to stop the run (recorded as
/// interrupted); rows are handed over as soon as they are complete so
/// callers can flush them incrementally.
pub trait RoundObserver {
    fn on_round(&mut self, record: &RoundRecord) -> bool;
}

impl<F: FnMut(&RoundRecord) -> bool> RoundObserver for F {
    fn on_round(&mut self, record: &RoundRecord) -> bool {
        self(record)
    }
}

/// Observer that keeps going and discards rows.
pub fn no_observer() -> impl RoundObserver {
    |_: &RoundRecord| true
}
