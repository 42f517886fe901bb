//! The outer adversarial training loops: best-response, better-response,
//! relaxed best/better, and plain nominal GRAPE.

use std::time::Instant;

use crate::dynamics::infidelity_of;
use crate::error::{Error, Result};
use crate::model::{sample_uniform, GateSynthesisProblem, UncertaintyVector};
use crate::optim::{
    batch_objective, batch_objective_and_gradient, genetic_maximize_detailed,
    gradient_ascent_maximize, grape_minimize, worst_of_batch_detailed, AdversarialSampleSet,
    AdversaryKind, AgrapeConfig, AgrapeMode, GaConfig, GrapeConfig, LmaxSemantics,
    OptimizationResult, RoundObserver, RoundRecord, Termination,
};

// Stream tag roots: 0 = initial pulse, 1 = per-round adversary draws.
const TAG_INIT: u64 = 0;
const TAG_ROUND: u64 = 1;

fn record_round(
    trace: &mut Vec<RoundRecord>,
    observer: &mut impl RoundObserver,
    round: usize,
    j_min: f64,
    l_max: f64,
    inner_iters: usize,
    started: Instant,
    batch_size: usize,
) -> bool {
    let rec = RoundRecord {
        round,
        j_min,
        l_max_estimate: l_max,
        gap: l_max - j_min,
        inner_iters,
        elapsed_s: started.elapsed().as_secs_f64(),
        batch_size,
    };
    let keep_going = observer.on_round(&rec);
    trace.push(rec);
    keep_going
}

fn target_hit(cfg: &AgrapeConfig, l_max: f64) -> bool {
    cfg.target_infidelity.map_or(false, |t| l_max <= t)
}

/// Best-response loop: GRAPE against the memory B, then a full adversary
/// search, then the sliding-window memory update. B starts as {0}.
pub fn run_best_response(
    problem: &GateSynthesisProblem,
    cfg: &AgrapeConfig,
    grape: &GrapeConfig,
    ga: &GaConfig,
    observer: &mut impl RoundObserver,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let s = match cfg.mode {
        AgrapeMode::BestResponse { s } => s,
        _ => {
            return Err(Error::InvalidConfig(
                "run_best_response requires best_response mode".into(),
            ))
        }
    };

    let mut u = problem.random_pulse(
        cfg.init_amplitude,
        &mut crate::rng::stream(cfg.master_seed, &[TAG_INIT]),
    );
    let mut memory = AdversarialSampleSet::with_samples(
        s,
        vec![problem.zero_uncertainty()],
    )?;

    let mut trace = Vec::new();
    let mut termination = Termination::MaxRounds;
    for round in 1..=cfg.max_rounds {
        let started = Instant::now();
        let (next_u, run) = grape_minimize(problem, &memory, &u, grape)?;
        u = next_u;
        let j_min = run.final_objective();

        let mut adv_rng = crate::rng::stream(cfg.master_seed, &[TAG_ROUND, round as u64]);
        let (eps_new, adv_value) = match &cfg.adversary {
            AdversaryKind::Genetic => {
                let ga_run = genetic_maximize_detailed(problem, &u, ga, &mut adv_rng)?;
                (ga_run.best, ga_run.value)
            }
            AdversaryKind::MultiStartGradient {
                starts,
                iterations,
                step,
            } => {
                let eps =
                    gradient_ascent_maximize(problem, &u, *starts, *iterations, *step, &mut adv_rng)?;
                let v = infidelity_of(problem, &u, &eps)?;
                (eps, v)
            }
        };

        // Worst-case estimate also covers the memory the control just
        // minimized against, so the row always satisfies mean ≤ max.
        let mut l_max = adv_value;
        for eps in memory.iter() {
            l_max = l_max.max(infidelity_of(problem, &u, eps)?);
        }

        memory.update_memory(eps_new);

        if !record_round(
            &mut trace,
            observer,
            round,
            j_min,
            l_max,
            run.objectives.len(),
            started,
            memory.len(),
        ) {
            termination = Termination::Interrupted;
            break;
        }
        if target_hit(cfg, l_max) {
            termination = Termination::TargetReached;
            break;
        }
    }

    Ok(OptimizationResult {
        pulse: u,
        trace,
        samples: memory,
        termination,
        l_max_semantics: LmaxSemantics::Adversary,
    })
}

/// Better-response loop: batch-worst sampling rebuilds B each round, then
/// GRAPE warm-started from the previous control.
pub fn run_better_response(
    problem: &GateSynthesisProblem,
    cfg: &AgrapeConfig,
    grape: &GrapeConfig,
    observer: &mut impl RoundObserver,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let (batch, ratio) = match cfg.mode {
        AgrapeMode::BetterResponse { batch, ratio } => (batch, ratio),
        _ => {
            return Err(Error::InvalidConfig(
                "run_better_response requires better_response mode".into(),
            ))
        }
    };

    let mut u = problem.random_pulse(
        cfg.init_amplitude,
        &mut crate::rng::stream(cfg.master_seed, &[TAG_INIT]),
    );
    let mut memory = AdversarialSampleSet::with_samples(1, vec![problem.zero_uncertainty()])?;

    let mut trace = Vec::new();
    let mut termination = Termination::MaxRounds;
    for round in 1..=cfg.max_rounds {
        let started = Instant::now();
        let mut rng = crate::rng::stream(cfg.master_seed, &[TAG_ROUND, round as u64]);
        let (set, batch_max) = worst_of_batch_detailed(problem, &u, batch, ratio, &mut rng)?;
        memory = set;

        let (next_u, run) = grape_minimize(problem, &memory, &u, grape)?;
        u = next_u;
        let j_min = run.final_objective();

        if !record_round(
            &mut trace,
            observer,
            round,
            j_min,
            batch_max,
            run.objectives.len(),
            started,
            memory.len(),
        ) {
            termination = Termination::Interrupted;
            break;
        }
        if target_hit(cfg, batch_max) {
            termination = Termination::TargetReached;
            break;
        }
    }

    Ok(OptimizationResult {
        pulse: u,
        trace,
        samples: memory,
        termination,
        l_max_semantics: LmaxSemantics::BatchMax,
    })
}

/// Relaxed loop: the sample set updates each round as in the best- or
/// better-response scheme, but the control takes exactly n fixed-step
/// gradient iterations instead of minimizing to convergence.
pub fn run_relaxed(
    problem: &GateSynthesisProblem,
    cfg: &AgrapeConfig,
    observer: &mut impl RoundObserver,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let (n_iters, m_samples) = match cfg.mode {
        AgrapeMode::RelaxedBest { n, m_samples, .. }
        | AgrapeMode::RelaxedBetter { n, m_samples, .. } => (n, m_samples),
        _ => {
            return Err(Error::InvalidConfig(
                "run_relaxed requires a relaxed mode".into(),
            ))
        }
    };

    let mut u = problem.random_pulse(
        cfg.init_amplitude,
        &mut crate::rng::stream(cfg.master_seed, &[TAG_INIT]),
    );
    let mut memory = match cfg.mode {
        AgrapeMode::RelaxedBest { s, .. } => {
            AdversarialSampleSet::with_samples(s, vec![problem.zero_uncertainty()])?
        }
        _ => AdversarialSampleSet::with_samples(1, vec![problem.zero_uncertainty()])?,
    };

    let mut trace = Vec::new();
    let mut termination = Termination::MaxRounds;
    for round in 1..=cfg.max_rounds {
        let started = Instant::now();
        let mut rng = crate::rng::stream(cfg.master_seed, &[TAG_ROUND, round as u64]);

        let sample_max = match cfg.mode {
            AgrapeMode::RelaxedBest { .. } => {
                let draws: Vec<UncertaintyVector> = (0..m_samples)
                    .map(|_| sample_uniform(&problem.domain, &mut rng))
                    .collect();
                let mut worst = None;
                let mut max_l = f64::NEG_INFINITY;
                for eps in draws {
                    let l = infidelity_of(problem, &u, &eps)?;
                    if l > max_l {
                        max_l = l;
                        worst = Some(eps);
                    }
                }
                memory.update_memory(worst.unwrap());
                max_l
            }
            AgrapeMode::RelaxedBetter { ratio, .. } => {
                let (set, max_l) =
                    worst_of_batch_detailed(problem, &u, m_samples, ratio, &mut rng)?;
                memory = set;
                max_l
            }
            _ => unreachable!(),
        };

        // fixed steps along the functional derivative δJ/δu = (1/Δt) ∂J/∂u_kj,
        // so the learning rate is independent of the time discretization
        let step = cfg.learning_rate / u.dt();
        for _ in 0..n_iters {
            let (_, grad) = batch_objective_and_gradient(problem, &u, &memory)?;
            u.values -= grad.values.map(|g| step * g);
            if let Some(bound) = problem.amplitude_bound {
                u.clip(bound);
            }
        }
        let j_after = batch_objective(problem, &u, &memory)?;

        if !record_round(
            &mut trace,
            observer,
            round,
            j_after,
            sample_max,
            n_iters,
            started,
            memory.len(),
        ) {
            termination = Termination::Interrupted;
            break;
        }
        if target_hit(cfg, sample_max) {
            termination = Termination::TargetReached;
            break;
        }
    }

    Ok(OptimizationResult {
        pulse: u,
        trace,
        samples: memory,
        termination,
        l_max_semantics: LmaxSemantics::SampleMax,
    })
}

/// Plain GRAPE at ε = 0: the unhardened baseline.
pub fn run_nominal(
    problem: &GateSynthesisProblem,
    grape: &GrapeConfig,
    master_seed: u64,
    init_amplitude: f64,
    observer: &mut impl RoundObserver,
) -> Result<OptimizationResult> {
    let u0 = problem.random_pulse(
        init_amplitude,
        &mut crate::rng::stream(master_seed, &[TAG_INIT]),
    );
    let nominal = AdversarialSampleSet::with_samples(1, vec![problem.zero_uncertainty()])?;
    let started = Instant::now();
    let (u, run) = grape_minimize(problem, &nominal, &u0, grape)?;
    let j = run.final_objective();
    let mut trace = Vec::new();
    record_round(&mut trace, observer, 1, j, j, run.objectives.len(), started, 1);
    Ok(OptimizationResult {
        pulse: u,
        trace,
        samples: nominal,
        termination: Termination::MaxRounds,
        l_max_semantics: LmaxSemantics::Nominal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{three_qubit_problem, two_qubit_problem};
    use crate::optim::no_observer;

    fn quick_grape() -> GrapeConfig {
        GrapeConfig {
            max_iterations: 60,
            ..Default::default()
        }
    }

    fn quick_ga() -> GaConfig {
        GaConfig {
            population: 10,
            generations: 5,
            ..Default::default()
        }
    }

    #[test]
    fn zero_rounds_returns_initial_pulse() {
        let p = two_qubit_problem();
        let cfg = AgrapeConfig::new(AgrapeMode::BestResponse { s: 3 }, 0, 42);
        let res =
            run_best_response(&p, &cfg, &quick_grape(), &quick_ga(), &mut no_observer()).unwrap();
        assert!(res.trace.is_empty());
        let expected = p.random_pulse(1.0, &mut crate::rng::stream(42, &[TAG_INIT]));
        assert_eq!(res.pulse.values, expected.values);
        assert_eq!(res.termination, Termination::MaxRounds);
    }

    #[test]
    fn best_response_rows_satisfy_mean_le_max() {
        let p = two_qubit_problem();
        let cfg = AgrapeConfig::new(AgrapeMode::BestResponse { s: 3 }, 4, 7);
        let res =
            run_best_response(&p, &cfg, &quick_grape(), &quick_ga(), &mut no_observer()).unwrap();
        assert_eq!(res.trace.len(), 4);
        for row in &res.trace {
            assert!(row.j_min <= row.l_max_estimate + 1e-12);
            assert!((row.gap - (row.l_max_estimate - row.j_min)).abs() < 1e-15);
        }
        assert!(res.samples.len() <= 3);
    }

    #[test]
    fn best_response_memory_bound_holds() {
        let p = two_qubit_problem();
        let cfg = AgrapeConfig::new(AgrapeMode::BestResponse { s: 2 }, 5, 13);
        let res =
            run_best_response(&p, &cfg, &quick_grape(), &quick_ga(), &mut no_observer()).unwrap();
        assert_eq!(res.samples.len(), 2);
        assert_eq!(res.samples.capacity(), 2);
    }

    #[test]
    fn better_response_single_sample_boundary() {
        // M = 1, r = 1: single-sample retraining each round
        let p = two_qubit_problem();
        let cfg = AgrapeConfig::new(
            AgrapeMode::BetterResponse {
                batch: 1,
                ratio: 1.0,
            },
            3,
            19,
        );
        let res = run_better_response(&p, &cfg, &quick_grape(), &mut no_observer()).unwrap();
        assert_eq!(res.trace.len(), 3);
        assert_eq!(res.samples.len(), 1);
        for row in &res.trace {
            assert!(row.j_min <= row.l_max_estimate + 1e-12);
        }
    }

    #[test]
    fn relaxed_zero_inner_iterations_keeps_control() {
        let p = two_qubit_problem();
        let mut cfg = AgrapeConfig::new(
            AgrapeMode::RelaxedBest {
                s: 3,
                n: 0,
                m_samples: 4,
            },
            3,
            23,
        );
        cfg.init_amplitude = 2.0;
        let res = run_relaxed(&p, &cfg, &mut no_observer()).unwrap();
        let init = p.random_pulse(2.0, &mut crate::rng::stream(23, &[TAG_INIT]));
        assert_eq!(res.pulse.values, init.values);
        // B still updated each round: {0} plus three worst samples, capacity 3
        assert_eq!(res.samples.len(), 3);
    }

    #[test]
    fn relaxed_better_retains_ceil_rm() {
        let p = three_qubit_problem();
        let cfg = AgrapeConfig::new(
            AgrapeMode::RelaxedBetter {
                ratio: 0.25,
                n: 2,
                m_samples: 20,
            },
            2,
            29,
        );
        let res = run_relaxed(&p, &cfg, &mut no_observer()).unwrap();
        assert_eq!(res.samples.len(), 5); // ceil(0.25·20)
        assert_eq!(res.trace.len(), 2);
    }

    #[test]
    fn observer_can_interrupt() {
        let p = two_qubit_problem();
        let cfg = AgrapeConfig::new(AgrapeMode::BestResponse { s: 2 }, 10, 31);
        let mut seen = 0usize;
        let mut obs = |_: &RoundRecord| {
            seen += 1;
            seen < 2
        };
        let res = run_best_response(&p, &cfg, &quick_grape(), &quick_ga(), &mut obs).unwrap();
        assert_eq!(res.termination, Termination::Interrupted);
        assert_eq!(res.trace.len(), 2);
    }

    #[test]
    fn deterministic_across_repeat_runs() {
        let p = two_qubit_problem();
        let cfg = AgrapeConfig::new(
            AgrapeMode::BetterResponse {
                batch: 10,
                ratio: 0.3,
            },
            3,
            37,
        );
        let a = run_better_response(&p, &cfg, &quick_grape(), &mut no_observer()).unwrap();
        let b = run_better_response(&p, &cfg, &quick_grape(), &mut no_observer()).unwrap();
        assert_eq!(a.pulse.values, b.pulse.values);
        assert_eq!(a.trace.len(), b.trace.len());
        for (x, y) in a.trace.iter().zip(&b.trace) {
            assert_eq!(x.j_min, y.j_min);
            assert_eq!(x.l_max_estimate, y.l_max_estimate);
        }
    }
}
