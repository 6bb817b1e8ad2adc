//! Fisher randomization tests.
//!
//! Under the sharp null every potential outcome equals the observed one, so
//! the randomization distribution of any statistic is obtained by keeping
//! the outcomes fixed and redrawing the treatment labels.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::DEFAULT_ENUMERATION_CAP;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::stats::{GroupMoments, ObservedDataset, Statistic};

pub const DEFAULT_REPLICATIONS: u64 = 2000;

/// Relative slack below the observed value within which a replicate still
/// counts as a tie.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every assignment of the design.
    Exact,
    /// `replications` uniformly drawn assignments.
    MonteCarlo,
}

/// What to do with a replicate whose statistic is undefined, for instance
/// an `X²` replicate where one arm received identical outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneratePolicy {
    #[default]
    CountAsExtreme,
    /// Drop the replicate from numerator and denominator.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrtConfig {
    pub statistic: Statistic,
    pub mode: Mode,
    pub replications: u64,
    pub seed: u64,
    #[serde(default)]
    pub degenerate_policy: DegeneratePolicy,
    pub enumeration_cap: u64,
}

impl FrtConfig {
    pub fn monte_carlo(statistic: Statistic, replications: u64, seed: u64) -> Self {
        Self {
            statistic,
            mode: Mode::MonteCarlo,
            replications,
            seed,
            degenerate_policy: DegeneratePolicy::default(),
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn exact(statistic: Statistic) -> Self {
        Self { mode: Mode::Exact, ..Self::monte_carlo(statistic, DEFAULT_REPLICATIONS, 0) }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: Statistic,
    pub observed: f64,
    /// Exact: tail proportion. Monte Carlo: `(1 + count) / (1 + M)`.
    pub p_value: f64,
    /// Unadjusted tail proportion `count / M`.
    pub p_value_raw: f64,
    pub mode: Mode,
    /// Assignments evaluated, degenerate ones included.
    pub replications: u64,
    pub extreme_count: u64,
    pub degenerate_replicates: u64,
    pub seed: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Observed data and statistic actually rerandomized. A pairwise
/// comparison is tested inside the sub-experiment formed by its two arms.
fn reduce(data: &ObservedDataset, statistic: Statistic) -> Result<(ObservedDataset, Statistic)> {
    match statistic {
        Statistic::Pairwise(a, b) => Ok((data.restrict_to_pair(a, b)?, Statistic::Pairwise(0, 1))),
        s => Ok((data.clone(), s)),
    }
}

fn threshold(observed: f64) -> f64 {
    observed - TIE_TOLERANCE * observed.abs()
}

#[derive(Debug, Default)]
struct Tally {
    evaluated: u64,
    extreme: u64,
    degenerate: u64,
}

impl Tally {
    fn record(&mut self, value: Result<f64>, cutoff: f64) {
        self.evaluated += 1;
        match value {
            Ok(t) if t >= cutoff => self.extreme += 1,
            Ok(_) => {}
            Err(_) => self.degenerate += 1,
        }
    }

    /// `(numerator, denominator)` after applying the degenerate policy.
    fn counts(&self, policy: DegeneratePolicy) -> (u64, u64) {
        match policy {
            DegeneratePolicy::CountAsExtreme => (self.extreme + self.degenerate, self.evaluated),
            DegeneratePolicy::Skip => (self.extreme, self.evaluated - self.degenerate),
        }
    }
}

pub fn run_frt(data: &ObservedDataset, config: &FrtConfig) -> Result<TestResult> {
    let start = Instant::now();
    let (data, statistic) = reduce(data, config.statistic)?;
    let observed = statistic.evaluate(&data)?;
    let cutoff = threshold(observed);
    let mut moments = GroupMoments::of(&data);
    let outcomes = data.outcomes();
    let mut tally = Tally::default();
    match config.mode {
        Mode::Exact => {
            let assignments = data.design().enumerate_with_cap(config.enumeration_cap)?;
            assignments.visit(|labels| {
                moments.compute(outcomes, labels);
                tally.record(statistic.evaluate_moments(&moments), cutoff);
            });
        }
        Mode::MonteCarlo => {
            if config.replications == 0 {
                return Err(Error::InvalidConfig("Monte Carlo needs at least one replication".into()));
            }
            let mut rng = stream(config.seed);
            let mut labels = data.treatments().to_vec();
            for _ in 0..config.replications {
                labels.shuffle(&mut rng);
                moments.compute(outcomes, &labels);
                tally.record(statistic.evaluate_moments(&moments), cutoff);
            }
        }
    }
    let (count, total) = tally.counts(config.degenerate_policy);
    if total == 0 {
        return Err(Error::Numerical("every randomization replicate was degenerate".into()));
    }
    let raw = count as f64 / total as f64;
    let p_value = match config.mode {
        Mode::Exact => raw,
        Mode::MonteCarlo => (1 + count) as f64 / (1 + total) as f64,
    };
    Ok(TestResult {
        statistic: config.statistic,
        observed,
        p_value,
        p_value_raw: raw,
        mode: config.mode,
        replications: tally.evaluated,
        extreme_count: count,
        degenerate_replicates: tally.degenerate,
        seed: config.seed,
        elapsed: start.elapsed(),
    })
}

/// Runs the same test on many datasets in parallel. Item `i` uses seed
/// `derive_seed(config.seed, i)`, so results do not depend on scheduling.
pub fn run_frt_batch(datasets: &[ObservedDataset], config: &FrtConfig) -> Vec<Result<TestResult>> {
    datasets
        .par_iter()
        .enumerate()
        .map(|(i, d)| run_frt(d, &config.with_seed(derive_seed(config.seed, i as u64))))
        .collect()
}

/// Sampled randomization distribution of a statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationSample {
    /// Defined replicate values in draw order.
    pub values: Vec<f64>,
    pub degenerate: u64,
}

impl RandomizationSample {
    /// Unadjusted tail proportion of the defined values at `observed`.
    pub fn tail(&self, observed: f64) -> f64 {
        let cutoff = threshold(observed);
        self.values.iter().filter(|&&t| t >= cutoff).count() as f64 / self.values.len() as f64
    }
}

/// Draws `draws` assignments and records the statistic on each, using the
/// same stream as a Monte Carlo [`run_frt`] with this seed.
pub fn randomization_distribution(
    data: &ObservedDataset,
    statistic: Statistic,
    draws: u64,
    seed: u64,
) -> Result<RandomizationSample> {
    let (data, statistic) = reduce(data, statistic)?;
    let mut moments = GroupMoments::of(&data);
    let mut rng = stream(seed);
    let mut labels = data.treatments().to_vec();
    let mut values = Vec::with_capacity(draws as usize);
    let mut degenerate = 0;
    for _ in 0..draws {
        labels.shuffle(&mut rng);
        moments.compute(data.outcomes(), &labels);
        match statistic.evaluate_moments(&moments) {
            Ok(t) => values.push(t),
            Err(_) => degenerate += 1,
        }
    }
    Ok(RandomizationSample { values, degenerate })
}

/// Statistic over every assignment, in lexicographic order; `None` marks a
/// degenerate assignment.
pub fn exact_distribution(data: &ObservedDataset, statistic: Statistic, cap: u64) -> Result<Vec<Option<f64>>> {
    let (data, statistic) = reduce(data, statistic)?;
    let mut moments = GroupMoments::of(&data);
    let assignments = data.design().enumerate_with_cap(cap)?;
    let mut out = Vec::with_capacity(assignments.len() as usize);
    assignments.visit(|labels| {
        moments.compute(data.outcomes(), labels);
        out.push(statistic.evaluate_moments(&moments).ok());
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ObservedDataset {
        ObservedDataset::new(vec![1.0, 2.0, 3.0, 4.0], vec![0, 0, 1, 1]).unwrap()
    }

    #[test]
    fn toy_exact_difference_in_means() {
        let r = run_frt(&toy(), &FrtConfig::exact(Statistic::DifferenceInMeans)).unwrap();
        assert_eq!(r.observed, 2.0);
        assert_eq!(r.replications, 6);
        assert_eq!(r.extreme_count, 2);
        assert_eq!(r.p_value, 2.0 / 6.0);
        let t2 = run_frt(&toy(), &FrtConfig::exact(Statistic::T2)).unwrap();
        assert_eq!(t2.p_value, r.p_value);
    }

    #[test]
    fn constant_outcomes_give_one() {
        let d = ObservedDataset::new(vec![5.0; 6], vec![0, 0, 0, 1, 1, 1]).unwrap();
        let r = run_frt(&d, &FrtConfig::exact(Statistic::DifferenceInMeans)).unwrap();
        assert_eq!(r.p_value, 1.0);
        let r = run_frt(&d, &FrtConfig::monte_carlo(Statistic::DifferenceInMeans, 100, 3)).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(matches!(run_frt(&d, &FrtConfig::exact(Statistic::F)), Err(Error::ZeroResidual)));
    }

    #[test]
    fn monte_carlo_bounds_and_reproducibility() {
        let d = ObservedDataset::from_groups(&[vec![1.0, 2.5, 3.0, 0.2], vec![4.0, 5.5, 3.9], vec![2.0, 2.2, 7.0]])
            .unwrap();
        let cfg = FrtConfig::monte_carlo(Statistic::F, 500, 42);
        let a = run_frt(&d, &cfg).unwrap();
        let b = run_frt(&d, &cfg).unwrap();
        assert_eq!(a.p_value, b.p_value);
        assert!(a.p_value >= 1.0 / 501.0 && a.p_value <= 1.0);
        assert_eq!(a.p_value, (1 + a.extreme_count) as f64 / 501.0);
        let zero = FrtConfig::monte_carlo(Statistic::F, 0, 1);
        assert!(matches!(run_frt(&d, &zero), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn degenerate_policies() {
        // Pairing two of the tied 1s in one arm leaves X² undefined.
        let d = ObservedDataset::new(vec![1.0, 2.0, 1.0, 3.0, 1.0, 4.0], vec![0, 0, 1, 1, 2, 2]).unwrap();
        let count = run_frt(&d, &FrtConfig::exact(Statistic::X2)).unwrap();
        assert!(count.degenerate_replicates > 0);
        let skip = FrtConfig { degenerate_policy: DegeneratePolicy::Skip, ..FrtConfig::exact(Statistic::X2) };
        let skip = run_frt(&d, &skip).unwrap();
        assert_eq!(skip.degenerate_replicates, count.degenerate_replicates);
        assert!(skip.p_value <= count.p_value);
        let dist = exact_distribution(&d, Statistic::X2, 1000).unwrap();
        assert_eq!(dist.iter().filter(|v| v.is_none()).count() as u64, count.degenerate_replicates);
    }

    #[test]
    fn exact_cap_is_enforced() {
        let d = ObservedDataset::new((0..20).map(f64::from).collect(), [0, 1].repeat(10)).unwrap();
        let cfg = FrtConfig { enumeration_cap: 1000, ..FrtConfig::exact(Statistic::T2) };
        assert!(matches!(run_frt(&d, &cfg), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn batch_matches_single_runs() {
        let sets: Vec<_> = (0..5)
            .map(|k| {
                ObservedDataset::from_groups(&[vec![1.0 + k as f64, 2.0, 3.5], vec![0.5, 4.0, 2.0 * k as f64]]).unwrap()
            })
            .collect();
        let cfg = FrtConfig::monte_carlo(Statistic::X2, 200, 7);
        let batch = run_frt_batch(&sets, &cfg);
        for (i, (d, r)) in sets.iter().zip(&batch).enumerate() {
            let single = run_frt(d, &cfg.with_seed(derive_seed(7, i as u64))).unwrap();
            assert_eq!(r.as_ref().unwrap().p_value, single.p_value);
        }
    }

    #[test]
    fn pairwise_tests_within_two_arms() {
        let d = ObservedDataset::from_groups(&[vec![1.0, 2.0], vec![9.0, 9.5, 10.0], vec![3.0, 4.0]]).unwrap();
        let r = run_frt(&d, &FrtConfig::exact(Statistic::Pairwise(0, 2))).unwrap();
        assert_eq!(r.replications, 6);
        assert_eq!(r.p_value, 2.0 / 6.0);
    }

    #[test]
    fn sample_matches_monte_carlo_stream() {
        let d = ObservedDataset::from_groups(&[vec![1.0, 2.5, 3.0], vec![4.0, 5.5, 3.9, 6.1]]).unwrap();
        let s = randomization_distribution(&d, Statistic::T2, 300, 11).unwrap();
        let r = run_frt(&d, &FrtConfig::monte_carlo(Statistic::T2, 300, 11)).unwrap();
        assert_eq!(s.tail(r.observed), r.p_value_raw);
    }
}
