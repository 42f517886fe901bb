//! Batch-stochastic GRAPE baseline: momentum SGD over uniformly drawn
//! uncertainty samples, minimizing the average infidelity.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::dynamics::infidelity_and_gradient;
use crate::error::Result;
use crate::model::{sample_uniform, GateSynthesisProblem};
use crate::optim::{
    AdversarialSampleSet, BgrapeConfig, LmaxSemantics, OptimizationResult, RoundObserver,
    RoundRecord, Termination,
};

const TAG_INIT: u64 = 0;
const TAG_SAMPLES: u64 = 2;

/// Momentum SGD: v ← λv - (α/n_mb) Σ δL/δu, u ← u + v, with S_k drawn
/// uniformly from the box. The update uses the functional derivative
/// δL/δu(t_k) = (1/Δt) ∂L/∂u_kj, so the learning rate is independent of
/// the time discretization. The trace keeps every `trace_stride`-th
/// iteration (plus the first and last) unless `full_trace` is set.
pub fn run_bgrape(
    problem: &GateSynthesisProblem,
    cfg: &BgrapeConfig,
    master_seed: u64,
    observer: &mut impl RoundObserver,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let mut u = problem.random_pulse(
        cfg.init_amplitude,
        &mut crate::rng::stream(master_seed, &[TAG_INIT]),
    );
    let mut sample_rng = crate::rng::stream(master_seed, &[TAG_SAMPLES]);
    let mut velocity: DMatrix<f64> = DMatrix::zeros(u.slice_count(), u.channels());

    let mut trace = Vec::new();
    let mut termination = Termination::MaxRounds;
    let started = Instant::now();
    for iter in 1..=cfg.iterations {
        let mut grad_sum: DMatrix<f64> = DMatrix::zeros(u.slice_count(), u.channels());
        let mut batch_mean = 0.0;
        let mut batch_max = f64::NEG_INFINITY;
        for _ in 0..cfg.minibatch {
            let eps = sample_uniform(&problem.domain, &mut sample_rng);
            let (l, g) = infidelity_and_gradient(problem, &u, &eps)?;
            grad_sum += g.values;
            batch_mean += l;
            batch_max = batch_max.max(l);
        }
        batch_mean /= cfg.minibatch as f64;

        let scale = cfg.learning_rate / (cfg.minibatch as f64 * u.dt());
        velocity = velocity.map(|v| cfg.momentum * v) - grad_sum.map(|g| scale * g);
        u.values += &velocity;
        if let Some(bound) = problem.amplitude_bound {
            u.clip(bound);
        }

        let keep = cfg.full_trace
            || iter == 1
            || iter == cfg.iterations
            || iter % cfg.trace_stride == 0;
        if keep {
            let rec = RoundRecord {
                round: iter,
                j_min: batch_mean,
                l_max_estimate: batch_max,
                gap: batch_max - batch_mean,
                inner_iters: 1,
                elapsed_s: started.elapsed().as_secs_f64(),
                batch_size: cfg.minibatch,
            };
            let keep_going = observer.on_round(&rec);
            trace.push(rec);
            if !keep_going {
                termination = Termination::Interrupted;
                break;
            }
        }
    }

    Ok(OptimizationResult {
        pulse: u,
        trace,
        samples: AdversarialSampleSet::with_samples(1, vec![problem.zero_uncertainty()])?,
        termination,
        l_max_semantics: LmaxSemantics::Minibatch,
    })
}
