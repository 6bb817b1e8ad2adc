//! Sample summaries and test statistics of an observed dataset.
//!
//! Variances use the two-pass algorithm (mean first, then centered squares).
//! A sum of squares is treated as zero when it is below the rounding floor
//! implied by the magnitude of the data, so constant groups are reported as
//! degenerate instead of producing huge ratios of rounding noise.

use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedDataset {
    outcomes: Vec<f64>,
    treatments: Vec<usize>,
    design: Design,
}

impl ObservedDataset {
    /// `treatments[i]` is the zero-based arm received by unit `i`.
    pub fn new(outcomes: Vec<f64>, treatments: Vec<usize>) -> Result<Self> {
        if outcomes.len() != treatments.len() {
            return Err(Error::InvalidDataset(format!(
                "{} outcomes but {} treatment labels",
                outcomes.len(),
                treatments.len()
            )));
        }
        if let Some(i) = outcomes.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidDataset(format!("outcome {i} is not finite")));
        }
        let arms = treatments.iter().max().map_or(0, |&m| m + 1);
        if arms < 2 {
            return Err(Error::InvalidDataset("J >= 2 required".into()));
        }
        let mut sizes = vec![0usize; arms];
        for &t in &treatments {
            sizes[t] += 1;
        }
        if let Some(j) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidDataset(format!("arm {j} has no units")));
        }
        let design = Design::new(sizes)?;
        Ok(Self { outcomes, treatments, design })
    }

    /// Builds a dataset from per-arm outcome lists, arm `j` taking the
    /// `j`-th slice.
    pub fn from_groups<G: AsRef<[f64]>>(groups: &[G]) -> Result<Self> {
        let mut outcomes = Vec::new();
        let mut treatments = Vec::new();
        for (j, g) in groups.iter().enumerate() {
            outcomes.extend_from_slice(g.as_ref());
            treatments.extend(std::iter::repeat_n(j, g.as_ref().len()));
        }
        Self::new(outcomes, treatments)
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn treatments(&self) -> &[usize] {
        &self.treatments
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn units(&self) -> usize {
        self.outcomes.len()
    }

    pub fn arms(&self) -> usize {
        self.design.arms()
    }

    /// Same outcomes under a different label vector (which must match the
    /// design).
    pub fn relabeled(&self, treatments: Vec<usize>) -> Result<Self> {
        let next = Self::new(self.outcomes.clone(), treatments)?;
        if next.design != self.design {
            return Err(Error::InvalidAssignment("arm sizes changed".into()));
        }
        Ok(next)
    }

    /// The units in arms `a` and `b` only, with `a` relabeled 0 and `b` 1.
    pub fn restrict_to_pair(&self, a: usize, b: usize) -> Result<Self> {
        check_pair(self.arms(), a, b)?;
        let (outcomes, treatments) = self
            .outcomes
            .iter()
            .zip(&self.treatments)
            .filter_map(|(&y, &t)| match t {
                t if t == a => Some((y, 0)),
                t if t == b => Some((y, 1)),
                _ => None,
            })
            .unzip();
        Self::new(outcomes, treatments)
    }

    pub(crate) fn scale(&self) -> f64 {
        self.outcomes.iter().fold(0.0f64, |m, y| m.max(y.abs()))
    }
}

fn check_pair(arms: usize, a: usize, b: usize) -> Result<()> {
    if a == b || a >= arms || b >= arms {
        return Err(Error::InvalidConfig(format!("pair ({a}, {b}) is not two distinct arms out of {arms}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub sizes: Vec<usize>,
    pub means: Vec<f64>,
    /// Sample variances with divisor `N_j - 1`; `None` for single-unit arms.
    pub variances: Vec<Option<f64>>,
    pub grand_mean: f64,
    /// Total sample variance with divisor `N - 1`.
    pub total_variance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaDecomposition {
    pub ss_treatment: f64,
    pub ss_residual: f64,
    pub ss_total: f64,
    pub ms_treatment: f64,
    pub ms_residual: f64,
}

/// Per-arm counts, means and centered sums of squares, with reusable
/// buffers so the randomization engine can recompute them without
/// allocating.
#[derive(Debug, Clone, Default)]
pub(crate) struct GroupMoments {
    pub count: Vec<usize>,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
    pub grand_mean: f64,
    pub total_m2: f64,
    /// Largest `|y|`, used for the rounding floor.
    pub scale: f64,
}

impl GroupMoments {
    pub fn with_arms(arms: usize, scale: f64) -> Self {
        Self { count: vec![0; arms], mean: vec![0.0; arms], m2: vec![0.0; arms], grand_mean: 0.0, total_m2: 0.0, scale }
    }

    pub fn of(data: &ObservedDataset) -> Self {
        let mut m = Self::with_arms(data.arms(), data.scale());
        m.compute(data.outcomes(), data.treatments());
        m
    }

    pub fn compute(&mut self, outcomes: &[f64], labels: &[usize]) {
        self.count.fill(0);
        self.mean.fill(0.0);
        self.m2.fill(0.0);
        let mut total = 0.0;
        for (&y, &l) in outcomes.iter().zip(labels) {
            self.count[l] += 1;
            self.mean[l] += y;
            total += y;
        }
        for (s, &c) in self.mean.iter_mut().zip(&self.count) {
            *s /= c as f64;
        }
        self.grand_mean = total / outcomes.len() as f64;
        let mut total_m2 = 0.0;
        for (&y, &l) in outcomes.iter().zip(labels) {
            let d = y - self.mean[l];
            self.m2[l] += d * d;
            let e = y - self.grand_mean;
            total_m2 += e * e;
        }
        self.total_m2 = total_m2;
    }

    pub fn units(&self) -> usize {
        self.count.iter().sum()
    }

    /// Whether a centered sum of squares over `count` values is
    /// indistinguishable from zero.
    fn negligible(&self, ss: f64, count: usize) -> bool {
        let floor = 64.0 * f64::EPSILON * self.scale;
        ss <= count as f64 * floor * floor
    }

    pub fn ss_treatment(&self) -> f64 {
        self.count.iter().zip(&self.mean).map(|(&c, &m)| c as f64 * (m - self.grand_mean).powi(2)).sum()
    }

    pub fn ss_residual(&self) -> f64 {
        self.m2.iter().sum()
    }

    pub fn f(&self) -> Result<f64> {
        let n = self.units();
        let arms = self.count.len();
        if n <= arms {
            return Err(Error::DegreesOfFreedom { n, arms });
        }
        let ssres = self.ss_residual();
        if self.negligible(ssres, n) {
            return Err(Error::ZeroResidual);
        }
        let mstre = self.ss_treatment() / (arms - 1) as f64;
        Ok(mstre / (ssres / (n - arms) as f64))
    }

    fn checked_variance(&self, j: usize) -> Result<f64> {
        let c = self.count[j];
        if c < 2 {
            return Err(Error::GroupTooSmall { group: j, size: c });
        }
        if self.negligible(self.m2[j], c) {
            return Err(Error::ZeroGroupVariance { group: j });
        }
        Ok(self.m2[j] / (c - 1) as f64)
    }

    pub fn x2(&self) -> Result<f64> {
        let arms = self.count.len();
        let mut weights = [0.0f64; 16];
        let mut heap;
        let q: &mut [f64] = if arms <= weights.len() {
            &mut weights[..arms]
        } else {
            heap = vec![0.0; arms];
            &mut heap
        };
        for (j, w) in q.iter_mut().enumerate() {
            *w = self.count[j] as f64 / self.checked_variance(j)?;
        }
        let qsum: f64 = q.iter().sum();
        let weighted_mean = q.iter().zip(&self.mean).map(|(w, m)| w * m).sum::<f64>() / qsum;
        Ok(q.iter().zip(&self.mean).map(|(w, m)| w * (m - weighted_mean).powi(2)).sum())
    }

    pub fn pairwise(&self, a: usize, b: usize) -> Result<f64> {
        check_pair(self.count.len(), a, b)?;
        let va = self.checked_variance(a)? / self.count[a] as f64;
        let vb = self.checked_variance(b)? / self.count[b] as f64;
        Ok((self.mean[a] - self.mean[b]).powi(2) / (va + vb))
    }

    fn require_two_arms(&self) -> Result<()> {
        match self.count.len() {
            2 => Ok(()),
            found => Err(Error::WrongArity { expected: 2, found }),
        }
    }

    pub fn t2(&self) -> Result<f64> {
        self.require_two_arms()?;
        let n = self.units();
        if self.negligible(self.total_m2, n) {
            return Err(Error::ZeroTotalVariance);
        }
        let s2 = self.total_m2 / (n - 1) as f64;
        let tau = self.mean[0] - self.mean[1];
        let n1 = self.count[0] as f64;
        let n2 = self.count[1] as f64;
        Ok(tau * tau / (n as f64 * s2 / (n1 * n2)))
    }

    pub fn difference_in_means(&self) -> Result<f64> {
        self.require_two_arms()?;
        Ok(self.mean[0] - self.mean[1])
    }
}

pub fn summarize(data: &ObservedDataset) -> GroupSummary {
    let m = GroupMoments::of(data);
    let n = data.units();
    GroupSummary {
        sizes: m.count.clone(),
        means: m.mean.clone(),
        variances: m.m2.iter().zip(&m.count).map(|(&ss, &c)| (c > 1).then(|| ss / (c - 1) as f64)).collect(),
        grand_mean: m.grand_mean,
        total_variance: (n > 1).then(|| m.total_m2 / (n - 1) as f64),
    }
}

pub fn anova(data: &ObservedDataset) -> Result<AnovaDecomposition> {
    let m = GroupMoments::of(data);
    let n = data.units();
    let arms = data.arms();
    if n <= arms {
        return Err(Error::DegreesOfFreedom { n, arms });
    }
    let ss_treatment = m.ss_treatment();
    let ss_residual = m.ss_residual();
    Ok(AnovaDecomposition {
        ss_treatment,
        ss_residual,
        ss_total: m.total_m2,
        ms_treatment: ss_treatment / (arms - 1) as f64,
        ms_residual: ss_residual / (n - arms) as f64,
    })
}

/// `MSTre / MSRes`.
pub fn f_statistic(data: &ObservedDataset) -> Result<f64> {
    GroupMoments::of(data).f()
}

/// Between-arm sum of squares with each arm weighted by `N_j / s²_obs(j)`,
/// centered at the weighted grand mean.
pub fn x2_statistic(data: &ObservedDataset) -> Result<f64> {
    GroupMoments::of(data).x2()
}

/// Two-arm `τ̂² / (N s²_obs / (N_1 N_2))`, the square of the pooled
/// difference in means.
pub fn t2_statistic(data: &ObservedDataset) -> Result<f64> {
    GroupMoments::of(data).t2()
}

/// Studentized squared difference `τ̂²(a,b) / (s²(a)/N_a + s²(b)/N_b)`.
pub fn pairwise_statistic(data: &ObservedDataset, a: usize, b: usize) -> Result<f64> {
    GroupMoments::of(data).pairwise(a, b)
}

/// Signed `τ̂(1,2) = Ȳ(1) - Ȳ(2)` for two-arm data.
pub fn difference_in_means(data: &ObservedDataset) -> Result<f64> {
    GroupMoments::of(data).difference_in_means()
}

/// Test statistics the randomization engine can use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    F,
    X2,
    T2,
    /// Studentized comparison of two arms, zero-based.
    Pairwise(usize, usize),
    /// Absolute difference in means `|τ̂(1,2)|` (two-sided), two arms only.
    DifferenceInMeans,
}

impl Statistic {
    pub fn evaluate(&self, data: &ObservedDataset) -> Result<f64> {
        self.evaluate_moments(&GroupMoments::of(data))
    }

    pub(crate) fn evaluate_moments(&self, m: &GroupMoments) -> Result<f64> {
        match *self {
            Statistic::F => m.f(),
            Statistic::X2 => m.x2(),
            Statistic::T2 => m.t2(),
            Statistic::Pairwise(a, b) => m.pairwise(a, b),
            Statistic::DifferenceInMeans => m.difference_in_means().map(f64::abs),
        }
    }

    /// Short name: `f`, `x2`, `t2`, `dim`, or `pairwise-a-b` (zero-based).
    pub fn name(&self) -> String {
        match self {
            Statistic::F => "f".into(),
            Statistic::X2 => "x2".into(),
            Statistic::T2 => "t2".into(),
            Statistic::Pairwise(a, b) => format!("pairwise-{a}-{b}"),
            Statistic::DifferenceInMeans => "dim".into(),
        }
    }

    /// Inverse of [`name`](Self::name).
    pub fn from_name(name: &str) -> Result<Self> {
        let unknown = || Error::UnknownStatistic(name.to_string());
        match name.to_ascii_lowercase().as_str() {
            "f" => Ok(Statistic::F),
            "x2" => Ok(Statistic::X2),
            "t2" => Ok(Statistic::T2),
            "dim" => Ok(Statistic::DifferenceInMeans),
            other => {
                let rest = other.strip_prefix("pairwise-").ok_or_else(unknown)?;
                let (a, b) = rest.split_once('-').ok_or_else(unknown)?;
                let a = a.parse().map_err(|_| unknown())?;
                let b = b.parse().map_err(|_| unknown())?;
                Ok(Statistic::Pairwise(a, b))
            }
        }
    }
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}
