//! Adversary maximizers over the uncertainty box: a genetic algorithm, a
//! multi-start gradient-ascent alternative, and batch-worst selection.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dynamics::infidelity_of;
use crate::error::{Error, Result};
use crate::model::{sample_uniform, ControlPulse, GateSynthesisProblem, UncertaintyVector};
use crate::optim::{AdversarialSampleSet, GaConfig};

/// Outcome of one GA search, with the per-generation best for diagnostics.
#[derive(Debug, Clone)]
pub struct GaRun {
    pub best: UncertaintyVector,
    pub value: f64,
    /// Best fitness after each generation (elitism makes this non-decreasing).
    pub generation_best: Vec<f64>,
}

/// Genetic maximization of L[u, ε] over the box. Elitist, blend crossover,
/// Gaussian mutation clipped to the box.
pub fn genetic_maximize(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    cfg: &GaConfig,
    rng: &mut impl Rng,
) -> Result<UncertaintyVector> {
    Ok(genetic_maximize_detailed(problem, u, cfg, rng)?.best)
}

pub fn genetic_maximize_detailed(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    cfg: &GaConfig,
    rng: &mut impl Rng,
) -> Result<GaRun> {
    cfg.validate()?;
    let domain = &problem.domain;
    let d = domain.dim();

    let mut population: Vec<UncertaintyVector> = (0..cfg.population)
        .map(|_| sample_uniform(domain, rng))
        .collect();
    let mut fitness: Vec<f64> = population
        .iter()
        .map(|eps| infidelity_of(problem, u, eps))
        .collect::<Result<_>>()?;

    let elite_count = ((cfg.elite_fraction * cfg.population as f64).ceil() as usize)
        .clamp(1, cfg.population - 1);
    let sigmas: Vec<f64> = (0..d)
        .map(|i| cfg.mutation_stddev * domain.width(i))
        .collect();

    let mut generation_best = Vec::with_capacity(cfg.generations);
    for _ in 0..cfg.generations {
        // rank descending by fitness, earlier index wins ties
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| fitness[b].partial_cmp(&fitness[a]).unwrap().then(a.cmp(&b)));

        let mut next_pop: Vec<UncertaintyVector> = Vec::with_capacity(cfg.population);
        let mut next_fit: Vec<f64> = Vec::with_capacity(cfg.population);
        for &i in order.iter().take(elite_count) {
            next_pop.push(population[i].clone());
            next_fit.push(fitness[i]);
        }
        while next_pop.len() < cfg.population {
            // parents from the top half, blend crossover, Gaussian mutation
            let half = (population.len() / 2).max(1);
            let p1 = &population[order[rng.gen_range(0..half)]];
            let p2 = &population[order[rng.gen_range(0..half)]];
            let blend: f64 = rng.gen_range(0.0..=1.0);
            let mut child = UncertaintyVector(
                p1.0.iter()
                    .zip(&p2.0)
                    .map(|(a, b)| blend * a + (1.0 - blend) * b)
                    .collect(),
            );
            for (i, c) in child.0.iter_mut().enumerate() {
                if sigmas[i] > 0.0 {
                    let noise: f64 = Normal::new(0.0, sigmas[i]).unwrap().sample(rng);
                    *c += noise;
                }
            }
            domain.clip(&mut child);
            let f = infidelity_of(problem, u, &child)?;
            next_pop.push(child);
            next_fit.push(f);
        }
        population = next_pop;
        fitness = next_fit;
        let best = fitness.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        generation_best.push(best);
    }

    let (best_idx, _) = fitness
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    Ok(GaRun {
        best: population[best_idx].clone(),
        value: fitness[best_idx],
        generation_best,
    })
}

/// Multi-start projected gradient ascent on L[u, ·], with central
/// finite-difference gradients in ε. Same adversary surface as the GA.
pub fn gradient_ascent_maximize(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    starts: usize,
    iterations: usize,
    step: f64,
    rng: &mut impl Rng,
) -> Result<UncertaintyVector> {
    let domain = &problem.domain;
    let d = domain.dim();
    let fd_step = 1e-6;

    let mut best: Option<(UncertaintyVector, f64)> = None;
    for _ in 0..starts.max(1) {
        let mut eps = sample_uniform(domain, rng);
        let mut value = infidelity_of(problem, u, &eps)?;
        for _ in 0..iterations {
            let mut grad = vec![0.0; d];
            for i in 0..d {
                let mut up = eps.clone();
                up.0[i] += fd_step;
                let mut dn = eps.clone();
                dn.0[i] -= fd_step;
                grad[i] = (infidelity_of(problem, u, &up)?
                    - infidelity_of(problem, u, &dn)?)
                    / (2.0 * fd_step);
            }
            let mut trial = eps.clone();
            for i in 0..d {
                trial.0[i] += step * grad[i];
            }
            domain.clip(&mut trial);
            let trial_value = infidelity_of(problem, u, &trial)?;
            if trial_value > value {
                eps = trial;
                value = trial_value;
            } else {
                break;
            }
        }
        if best.as_ref().map_or(true, |(_, v)| value > *v) {
            best = Some((eps, value));
        }
    }
    Ok(best.unwrap().0)
}

/// Draws M uniform samples and retains the ceil(rM) with largest L, in
/// descending-L order, ties broken by draw order. Also reports the batch max.
pub fn worst_of_batch_detailed(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    batch_size: usize,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<(AdversarialSampleSet, f64)> {
    let keep = (ratio * batch_size as f64).ceil() as usize;
    if keep == 0 || keep > batch_size {
        return Err(Error::InvalidConfig(format!(
            "ceil(rM) = {keep} must be in [1, M = {batch_size}]"
        )));
    }
    let draws: Vec<UncertaintyVector> = (0..batch_size)
        .map(|_| sample_uniform(&problem.domain, rng))
        .collect();
    let values: Vec<f64> = draws
        .iter()
        .map(|eps| infidelity_of(problem, u, eps))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..batch_size).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    let retained: Vec<UncertaintyVector> =
        order.iter().take(keep).map(|&i| draws[i].clone()).collect();
    let batch_max = values[order[0]];
    Ok((
        AdversarialSampleSet::with_samples(keep, retained)?,
        batch_max,
    ))
}

pub fn worst_of_batch(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    batch_size: usize,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<AdversarialSampleSet> {
    Ok(worst_of_batch_detailed(problem, u, batch_size, ratio, rng)?.0)
}
