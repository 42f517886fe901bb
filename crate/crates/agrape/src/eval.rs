//! Post-hoc robustness quantification of a fixed control: empirical CDF of
//! the infidelity, confidence at thresholds, worst-case estimation, and 2-D
//! uncertainty landscapes.

use rand::Rng;

use crate::dynamics::infidelity_of;
use crate::error::{Error, Result};
use crate::model::{sample_uniform, ControlPulse, GateSynthesisProblem, UncertaintyVector};

/// Sorted infidelity samples under uniform uncertainty sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    /// Takes unsorted samples; stores them ascending.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidConfig("CDF needs at least one sample".into()));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Ascending samples.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        *self.samples.last().unwrap()
    }
}

/// Right-continuous empirical CDF: the fraction of samples ≤ l0, so samples
/// exactly at the threshold count as successes.
pub fn confidence_at(cdf: &EmpiricalCdf, l0: f64) -> f64 {
    // first index with sample > l0
    let count = cdf.samples.partition_point(|&s| s <= l0);
    count as f64 / cdf.len() as f64
}

/// Control A dominates B at level l iff F_A(l) ≥ F_B(l).
pub fn dominates_at(a: &EmpiricalCdf, b: &EmpiricalCdf, l0: f64) -> bool {
    confidence_at(a, l0) >= confidence_at(b, l0)
}

/// Infidelity at n uniform uncertainty draws, in draw order.
pub fn infidelity_samples(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample count must be ≥ 1".into()));
    }
    (0..n)
        .map(|_| {
            let eps = sample_uniform(&problem.domain, rng);
            infidelity_of(problem, u, &eps)
        })
        .collect()
}

/// Empirical CDF of L[u, ε] over n uniform draws.
pub fn sample_cdf(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    n: usize,
    rng: &mut impl Rng,
) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(infidelity_samples(problem, u, n, rng)?)
}

/// Max L over n uniform draws: a lower bound on the true worst case.
pub fn estimate_worst_case(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    n: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    Ok(infidelity_samples(problem, u, n, rng)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Infidelity on a uniform grid over two uncertainty components, endpoints
/// included; remaining components held at `fixed`.
#[derive(Debug, Clone)]
pub struct LandscapeGrid {
    pub component_a: usize,
    pub component_b: usize,
    pub axis_a: Vec<f64>,
    pub axis_b: Vec<f64>,
    /// values[i][j] = L at (axis_a[i], axis_b[j])
    pub values: Vec<Vec<f64>>,
}

impl LandscapeGrid {
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |a, &v| a.max(v))
    }
}

fn grid_axis(lower: f64, upper: f64, resolution: usize) -> Vec<f64> {
    (0..resolution)
        .map(|i| lower + (upper - lower) * i as f64 / (resolution - 1) as f64)
        .collect()
}

pub fn landscape(
    problem: &GateSynthesisProblem,
    u: &ControlPulse,
    components: (usize, usize),
    resolution: usize,
    fixed: &UncertaintyVector,
) -> Result<LandscapeGrid> {
    let (a, b) = components;
    let d = problem.uncertainty_dim();
    if a >= d || b >= d {
        return Err(Error::IndexOutOfRange(format!(
            "landscape components ({a}, {b}) for a d = {d} domain"
        )));
    }
    if a == b {
        return Err(Error::InvalidConfig("landscape components must differ".into()));
    }
    if resolution < 2 {
        return Err(Error::InvalidConfig("landscape resolution must be ≥ 2".into()));
    }
    if fixed.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "fixed uncertainty has dimension {} but the domain is {d}-dimensional",
            fixed.dim()
        )));
    }

    let axis_a = grid_axis(problem.domain.lower[a], problem.domain.upper[a], resolution);
    let axis_b = grid_axis(problem.domain.lower[b], problem.domain.upper[b], resolution);
    let mut values = Vec::with_capacity(resolution);
    for &ea in &axis_a {
        let mut row = Vec::with_capacity(resolution);
        for &eb in &axis_b {
            let mut eps = fixed.clone();
            eps.0[a] = ea;
            eps.0[b] = eb;
            row.push(infidelity_of(problem, u, &eps)?);
        }
        values.push(row);
    }
    Ok(LandscapeGrid {
        component_a: a,
        component_b: b,
        axis_a,
        axis_b,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{two_qubit_problem, UncertaintyDomain};
    use crate::rng::stream;

    #[test]
    fn confidence_at_step_function() {
        let cdf = EmpiricalCdf::new(vec![0.3, 0.1, 0.2]).unwrap();
        assert!((confidence_at(&cdf, 0.2) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(confidence_at(&cdf, 0.05), 0.0);
        assert_eq!(confidence_at(&cdf, 0.3), 1.0);
        assert_eq!(confidence_at(&cdf, 1.0), 1.0);
    }

    #[test]
    fn cdf_is_monotone_and_reaches_one() {
        let p = two_qubit_problem();
        let mut rng = stream(1, &[0]);
        let u = p.random_pulse(3.0, &mut rng);
        let cdf = sample_cdf(&p, &u, 50, &mut rng).unwrap();
        for w in cdf.samples().windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert!(cdf.max() <= p.infidelity_bound());
        assert!(cdf.min() >= 0.0);
        assert_eq!(confidence_at(&cdf, p.infidelity_bound()), 1.0);
    }

    #[test]
    fn degenerate_domain_gives_constant_samples() {
        let mut p = two_qubit_problem();
        p.domain = UncertaintyDomain::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
        let mut rng = stream(2, &[0]);
        let u = p.random_pulse(3.0, &mut rng);
        let l0 = crate::dynamics::infidelity_of(&p, &u, &p.zero_uncertainty()).unwrap();
        let cdf = sample_cdf(&p, &u, 10, &mut rng).unwrap();
        assert!(cdf.samples().iter().all(|&l| (l - l0).abs() < 1e-15));
    }

    #[test]
    fn worst_case_consistent_with_cdf_on_same_stream() {
        let p = two_qubit_problem();
        let mut rng = stream(3, &[0]);
        let u = p.random_pulse(3.0, &mut rng);
        let cdf = sample_cdf(&p, &u, 40, &mut stream(3, &[1])).unwrap();
        let wc = estimate_worst_case(&p, &u, 40, &mut stream(3, &[1])).unwrap();
        assert_eq!(wc, cdf.max());
    }

    #[test]
    fn worst_case_monotone_in_sample_count() {
        let p = two_qubit_problem();
        let mut rng = stream(4, &[0]);
        let u = p.random_pulse(3.0, &mut rng);
        let small = estimate_worst_case(&p, &u, 10, &mut stream(4, &[1])).unwrap();
        let large = estimate_worst_case(&p, &u, 30, &mut stream(4, &[1])).unwrap();
        assert!(small <= large);
    }

    #[test]
    fn landscape_corners_and_center() {
        let p = two_qubit_problem();
        let mut rng = stream(5, &[0]);
        let u = p.random_pulse(3.0, &mut rng);
        let fixed = p.zero_uncertainty();
        let grid = landscape(&p, &u, (0, 1), 2, &fixed).unwrap();
        assert_eq!(grid.values.len(), 2);
        assert_eq!(grid.values[0].len(), 2);
        assert_eq!(grid.axis_a, vec![-0.2, 0.2]);

        let grid3 = landscape(&p, &u, (0, 1), 3, &fixed).unwrap();
        let center = grid3.values[1][1];
        let l0 = crate::dynamics::infidelity_of(&p, &u, &fixed).unwrap();
        assert!((center - l0).abs() < 1e-15);
    }

    #[test]
    fn landscape_rejects_bad_arguments() {
        let p = two_qubit_problem();
        let u = ControlPulse::zeros(10, 4, 0.3);
        let fixed = p.zero_uncertainty();
        assert!(landscape(&p, &u, (0, 0), 5, &fixed).is_err());
        assert!(landscape(&p, &u, (0, 7), 5, &fixed).is_err());
        assert!(landscape(&p, &u, (0, 1), 1, &fixed).is_err());
    }
}
