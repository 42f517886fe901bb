//! Batch objective J[u, B] and the inner GRAPE minimizer (gradient descent
//! with Armijo backtracking).

use crate::dynamics::{infidelity_and_gradient, infidelity_of, GradientField};
use crate::error::{Error, Result};
use crate::model::{ControlPulse, GateSynthesisProblem};
use crate::optim::{AdversarialSampleSet, GrapeConfig};

const MIN_STEP: f64 = 1e-12;

/// J[u, B] = (1/|B|) Σ L[u, ε], summed in insertion order.
pub fn batch_objective(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    batch: &AdversarialSampleSet,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut acc = 0.0;
    for eps in batch.iter() {
        acc += infidelity_of(problem, u, eps)?;
    }
    Ok(acc / batch.len() as f64)
}

/// J[u, B] and its gradient (mean of per-sample gradients, fixed order).
pub fn batch_objective_and_gradient(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    batch: &AdversarialSampleSet,
) -> Result<(f64, GradientField)> {
    if batch.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut value = 0.0;
    let mut grad = GradientField::zeros(u.slice_count(), u.channels());
    for eps in batch.iter() {
        let (l, g) = infidelity_and_gradient(problem, u, eps)?;
        value += l;
        grad.values += g.values;
    }
    let inv = 1.0 / batch.len() as f64;
    grad.values *= inv;
    Ok((value * inv, grad))
}

/// How the inner minimization stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrapeTermination {
    MaxIterations,
    GradientTolerance,
    ObjectiveThreshold,
    /// No Armijo decrease down to the minimum step.
    Stalled,
}

impl GrapeTermination {
    pub fn as_str(&self) -> &'static str {
        match self {
            GrapeTermination::MaxIterations => "max_iterations",
            GrapeTermination::GradientTolerance => "gradient_tolerance",
            GrapeTermination::ObjectiveThreshold => "objective_threshold",
            GrapeTermination::Stalled => "stalled",
        }
    }
}

/// Per-iteration record of one inner minimization.
#[derive(Debug, Clone)]
pub struct GrapeRun {
    /// Objective at each visited iterate, including the start.
    pub objectives: Vec<f64>,
    pub accepted_steps: usize,
    pub termination: GrapeTermination,
}

impl GrapeRun {
    pub fn final_objective(&self) -> f64 {
        *self.objectives.last().unwrap()
    }
}

/// Gradient descent with Armijo backtracking on J[·, B], warm-started at `u0`.
///
/// The accepted-objective sequence is non-increasing. The trial step doubles
/// after each accepted iteration, so the line search adapts to local scale.
pub fn grape_minimize(
    problem: &GateSynthesisProblem,
    batch: &AdversarialSampleSet,
    u0: &ControlPulse,
    cfg: &GrapeConfig,
) -> Result<(ControlPulse, GrapeRun)> {
    cfg.validate()?;
    let mut u = u0.clone();
    let mut step = cfg.initial_step;
    let mut objectives = Vec::new();
    let mut accepted = 0usize;

    let mut termination = GrapeTermination::MaxIterations;
    for _ in 0..cfg.max_iterations {
        let (j, grad) = batch_objective_and_gradient(problem, &u, batch)?;
        objectives.push(j);
        if j < cfg.objective_threshold {
            termination = GrapeTermination::ObjectiveThreshold;
            break;
        }
        if grad.max_norm() < cfg.gradient_tolerance {
            termination = GrapeTermination::GradientTolerance;
            break;
        }

        let gnorm2 = grad.norm_sqr();
        let mut t = step;
        let mut accepted_trial = None;
        while t >= MIN_STEP {
            let mut trial = u.clone();
            trial.values -= grad.values.map(|g| t * g);
            if let Some(bound) = problem.amplitude_bound {
                trial.clip(bound);
            }
            let j_trial = batch_objective(problem, &trial, batch)?;
            if j_trial <= j - cfg.armijo_constant * t * gnorm2 {
                accepted_trial = Some((trial, t));
                break;
            }
            t *= cfg.backtrack_factor;
        }
        match accepted_trial {
            Some((trial, t)) => {
                u = trial;
                accepted += 1;
                step = (t * 2.0).min(1e6);
            }
            None => {
                termination = GrapeTermination::Stalled;
                break;
            }
        }
    }
    // On the max-iterations path the last recorded objective predates the
    // final accepted step; refresh it so final_objective is exact.
    if termination == GrapeTermination::MaxIterations {
        objectives.push(batch_objective(problem, &u, batch)?);
    }
    if objectives.is_empty() {
        objectives.push(batch_objective(problem, &u, batch)?);
    }

    Ok((
        u,
        GrapeRun {
            objectives,
            accepted_steps: accepted,
            termination,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{two_qubit_problem, UncertaintyVector};
    use crate::optim::GrapeConfig;
    use crate::rng::stream;
    use crate::model::sample_uniform;

    fn singleton(eps: UncertaintyVector) -> AdversarialSampleSet {
        AdversarialSampleSet::with_samples(1, vec![eps]).unwrap()
    }

    #[test]
    fn batch_objective_singleton_equals_pointwise() {
        let p = two_qubit_problem();
        let mut rng = stream(2, &[0]);
        let u = p.random_pulse(3.0, &mut rng);
        let eps = sample_uniform(&p.domain, &mut rng);
        let b = singleton(eps.clone());
        let (j, g) = batch_objective_and_gradient(&p, &u, &b).unwrap();
        let (l, gl) = crate::dynamics::infidelity_and_gradient(&p, &u, &eps).unwrap();
        assert_eq!(j, l);
        assert_eq!(g.values, gl.values);
    }

    #[test]
    fn batch_objective_duplicate_equals_singleton() {
        let p = two_qubit_problem();
        let mut rng = stream(4, &[0]);
        let u = p.random_pulse(3.0, &mut rng);
        let eps = sample_uniform(&p.domain, &mut rng);
        let single = batch_objective(&p, &u, &singleton(eps.clone())).unwrap();
        let dup =
            AdversarialSampleSet::with_samples(2, vec![eps.clone(), eps]).unwrap();
        let double = batch_objective(&p, &u, &dup).unwrap();
        assert!((single - double).abs() < 1e-15);
    }

    #[test]
    fn batch_objective_matches_loop_average_oracle() {
        let p = two_qubit_problem();
        let mut rng = stream(6, &[0]);
        let u = p.random_pulse(3.0, &mut rng);
        let samples: Vec<_> = (0..5).map(|_| sample_uniform(&p.domain, &mut rng)).collect();
        let b = AdversarialSampleSet::with_samples(5, samples.clone()).unwrap();
        let j = batch_objective(&p, &u, &b).unwrap();
        let mut acc = 0.0;
        for eps in &samples {
            acc += crate::dynamics::infidelity_of(&p, &u, eps).unwrap();
        }
        assert!((j - acc / 5.0).abs() < 1e-14);
    }

    #[test]
    fn batch_objective_rejects_empty() {
        let p = two_qubit_problem();
        let u = ControlPulse::zeros(100, 4, 0.3);
        let b = AdversarialSampleSet::new(3).unwrap();
        assert!(matches!(
            batch_objective(&p, &u, &b),
            Err(Error::EmptySampleSet)
        ));
    }

    #[test]
    fn grape_objectives_are_non_increasing() {
        let p = two_qubit_problem();
        let mut rng = stream(8, &[0]);
        let u0 = p.random_pulse(3.0, &mut rng);
        let b = singleton(p.zero_uncertainty());
        let cfg = GrapeConfig {
            max_iterations: 40,
            ..Default::default()
        };
        let (u, run) = grape_minimize(&p, &b, &u0, &cfg).unwrap();
        for w in run.objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        assert!(run.final_objective() <= run.objectives[0]);
        assert_eq!(u.slice_count(), u0.slice_count());
    }

    #[test]
    fn grape_converges_on_nominal_two_qubit() {
        let p = two_qubit_problem();
        let mut rng = stream(10, &[0]);
        let u0 = p.random_pulse(3.0, &mut rng);
        let b = singleton(p.zero_uncertainty());
        let cfg = GrapeConfig::default();
        let (_, run) = grape_minimize(&p, &b, &u0, &cfg).unwrap();
        assert!(
            run.final_objective() < 1e-8,
            "terminal J = {}",
            run.final_objective()
        );
        assert!(run.objectives.len() <= 500);
    }

    #[test]
    fn grape_returns_immediately_at_optimum() {
        let p = two_qubit_problem();
        let mut rng = stream(12, &[0]);
        let u0 = p.random_pulse(3.0, &mut rng);
        let b = singleton(p.zero_uncertainty());
        let (u_star, _) = grape_minimize(&p, &b, &u0, &GrapeConfig::default()).unwrap();
        let (same, run) = grape_minimize(&p, &b, &u_star, &GrapeConfig::default()).unwrap();
        assert_eq!(run.accepted_steps, 0);
        assert_eq!(same.values, u_star.values);
    }
}
