//! Simulation populations, rejection-rate studies and bundled examples.

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::finitepop::PotentialOutcomeTable;
use crate::frt::{run_frt, FrtConfig};
use crate::rng::{derive_seed, mix64, stream, Stream};
use crate::stats::{ObservedDataset, Statistic};

pub const HISTOGRAM_BINS: usize = 20;

/// How one column of potential outcomes is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ColumnGenerator {
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Exponential with the given rate, so `Exp(1) / 0.7` has rate 0.7.
    Exponential {
        rate: f64,
    },
    /// `exp(N(mu, sigma²))`.
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// `slope · Y(source) + intercept`, computed after standardization of
    /// the drawn columns and never standardized itself.
    Linear {
        source: usize,
        slope: f64,
        intercept: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Standardization {
    #[default]
    None,
    /// Subtract the column mean (divisor `N`).
    Center,
    /// Center, then divide by the column standard deviation (divisor `N-1`).
    CenterAndScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// One population per design, fresh assignments per replicate.
    #[default]
    FixedPopulation,
    /// A new population and assignment per replicate.
    FreshPopulation,
}

/// A published rejection rate to compare a study against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRate {
    pub statistic: String,
    /// Index into [`ScenarioSpec::designs`].
    pub design: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub designs: Vec<Vec<usize>>,
    pub columns: Vec<ColumnGenerator>,
    #[serde(default)]
    pub standardization: Standardization,
    /// Added to each column last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference: Vec<ReferenceRate>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("scenario `{}`: {msg}", self.id)));
        let j = self.columns.len();
        if j < 2 {
            return bad("at least two columns are required".into());
        }
        if self.designs.is_empty() {
            return bad("no designs".into());
        }
        for d in &self.designs {
            if d.len() != j {
                return bad(format!("design {d:?} has {} arms but there are {j} columns", d.len()));
            }
            Design::new(d.clone()).map_err(|e| Error::InvalidConfig(format!("scenario `{}`: {e}", self.id)))?;
        }
        for (k, c) in self.columns.iter().enumerate() {
            let ok = match *c {
                ColumnGenerator::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
                ColumnGenerator::Exponential { rate } => rate.is_finite() && rate > 0.0,
                ColumnGenerator::LogNormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
                ColumnGenerator::Linear { source, slope, intercept } => {
                    if source >= k {
                        return bad(format!("column {k} must reference an earlier column, got {source}"));
                    }
                    slope.is_finite() && intercept.is_finite()
                }
            };
            if !ok {
                return bad(format!("column {k} has invalid parameters"));
            }
        }
        if let Some(s) = &self.shift {
            if s.len() != j {
                return bad(format!("shift has {} entries, expected {j}", s.len()));
            }
        }
        for r in &self.reference {
            Statistic::from_name(&r.statistic)?;
            if r.design >= self.designs.len() {
                return bad(format!("reference rate points at missing design {}", r.design));
            }
        }
        Ok(())
    }

    pub fn design(&self, index: usize) -> Result<Design> {
        let sizes = self
            .designs
            .get(index)
            .ok_or_else(|| Error::InvalidConfig(format!("scenario `{}` has no design {index}", self.id)))?;
        Design::new(sizes.clone())
    }

    pub fn reference_rate(&self, statistic: Statistic, design: usize) -> Option<f64> {
        let name = statistic.name();
        self.reference.iter().find(|r| r.design == design && r.statistic == name).map(|r| r.rate)
    }
}

fn draw_column<R: Rng + ?Sized>(g: &ColumnGenerator, n: usize, rng: &mut R) -> Vec<f64> {
    match *g {
        ColumnGenerator::Normal { mean, sd } => {
            let d = Normal::new(mean, sd).expect("validated");
            d.sample_iter(rng).take(n).collect()
        }
        ColumnGenerator::Exponential { rate } => {
            let d = Exp::new(rate).expect("validated");
            d.sample_iter(rng).take(n).collect()
        }
        ColumnGenerator::LogNormal { mu, sigma } => {
            let d = LogNormal::new(mu, sigma).expect("validated");
            d.sample_iter(rng).take(n).collect()
        }
        ColumnGenerator::Linear { .. } => unreachable!("derived columns are not drawn"),
    }
}

fn standardize(column: &mut [f64], how: Standardization) {
    if how == Standardization::None {
        return;
    }
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    column.iter_mut().for_each(|y| *y -= mean);
    if how == Standardization::CenterAndScale {
        let sd = (column.iter().map(|y| y * y).sum::<f64>() / (n - 1.0)).sqrt();
        column.iter_mut().for_each(|y| *y /= sd);
    }
}

/// Draws an `n`-unit population. Drawn columns are generated in order from
/// `rng`, standardized, then linear columns are derived and shifts added.
pub fn generate_population_with<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    n: usize,
    rng: &mut R,
) -> Result<PotentialOutcomeTable> {
    spec.validate()?;
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(spec.columns.len());
    for g in &spec.columns {
        let col = match *g {
            ColumnGenerator::Linear { source, slope, intercept } => {
                columns[source].iter().map(|y| slope * y + intercept).collect()
            }
            _ => {
                let mut c = draw_column(g, n, rng);
                standardize(&mut c, spec.standardization);
                c
            }
        };
        columns.push(col);
    }
    if let Some(shift) = &spec.shift {
        for (c, s) in columns.iter_mut().zip(shift) {
            c.iter_mut().for_each(|y| *y += s);
        }
    }
    PotentialOutcomeTable::from_columns(&columns)
}

/// Population of design `design` of the scenario from a seed.
pub fn generate_population(spec: &ScenarioSpec, design: usize, seed: u64) -> Result<PotentialOutcomeTable> {
    let n = spec.design(design)?.units();
    generate_population_with(spec, n, &mut stream(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    /// Simulated experiments `R`.
    pub replications: usize,
    /// Randomization draws `M` inside each test.
    pub draws: u64,
    pub alpha: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { replications: 2000, draws: 2000, alpha: 0.05 }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 || self.draws == 0 {
            return Err(Error::InvalidConfig("replications and draws must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Bin of `p` among 20 equal bins that are closed on the right, so
/// `(0.95, 1]` is the last and `[0, 0.05]` the first.
pub fn histogram_bin(p: f64) -> usize {
    let k = (p * HISTOGRAM_BINS as f64).ceil() as isize - 1;
    k.clamp(0, HISTOGRAM_BINS as isize - 1) as usize
}

pub fn histogram(p_values: &[f64]) -> Vec<u64> {
    let mut h = vec![0; HISTOGRAM_BINS];
    for &p in p_values {
        h[histogram_bin(p)] += 1;
    }
    h
}

/// Rejection summary for one convention of p-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub rate: f64,
    /// `√(r(1-r)/R)`.
    pub std_error: f64,
    pub histogram: Vec<u64>,
}

impl Rejection {
    fn of(p_values: &[f64], alpha: f64) -> Self {
        let r = p_values.len() as f64;
        let rate = p_values.iter().filter(|&&p| p <= alpha).count() as f64 / r;
        Self { rate, std_error: (rate * (1.0 - rate) / r).sqrt(), histogram: histogram(p_values) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub scenario: String,
    pub design: Vec<usize>,
    pub statistic: Statistic,
    pub replications: usize,
    pub draws: u64,
    pub alpha: f64,
    pub seed: u64,
    /// Add-one Monte Carlo p-values.
    pub add_one: Rejection,
    /// Unadjusted `count / M` p-values.
    pub raw: Rejection,
    pub degenerate_replicates: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_rate: Option<f64>,
    pub p_values: Vec<f64>,
}

/// Per-replicate p-values for each statistic, `(add_one, raw, degenerate)`.
type ReplicateOutcome = Vec<(f64, f64, u64)>;

fn replicate(
    pop: &PotentialOutcomeTable,
    design: &Design,
    statistics: &[Statistic],
    draws: u64,
    rng: &mut Stream,
) -> Result<ReplicateOutcome> {
    let assignment = design.sample_assignment(rng);
    let frt_seed: u64 = rng.random();
    let data = pop.observe(&assignment)?;
    statistics
        .iter()
        .map(|&s| {
            let r = run_frt(&data, &FrtConfig::monte_carlo(s, draws, frt_seed))?;
            Ok((r.p_value, r.p_value_raw, r.degenerate_replicates))
        })
        .collect()
}

/// Runs the rejection-rate study for one design of a scenario.
///
/// Replicate `r` draws from the stream `derive_seed(seed, r)`: a fresh
/// population first when the protocol asks for one, then the assignment,
/// then the seed shared by every statistic's randomization test. A fixed
/// population comes from `derive_seed(seed, u64::MAX)`.
pub fn run_study(
    spec: &ScenarioSpec,
    design_index: usize,
    statistics: &[Statistic],
    config: &StudyConfig,
    seed: u64,
) -> Result<Vec<StudyResult>> {
    spec.validate()?;
    config.validate()?;
    if statistics.is_empty() {
        return Err(Error::InvalidConfig("no statistics requested".into()));
    }
    let design = spec.design(design_index)?;
    let fixed = match spec.protocol {
        Protocol::FixedPopulation => {
            Some(generate_population_with(spec, design.units(), &mut stream(derive_seed(seed, u64::MAX)))?)
        }
        Protocol::FreshPopulation => None,
    };
    let outcomes: Vec<ReplicateOutcome> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(derive_seed(seed, r as u64));
            let fresh;
            let pop = match &fixed {
                Some(p) => p,
                None => {
                    fresh = generate_population_with(spec, design.units(), &mut rng)?;
                    &fresh
                }
            };
            replicate(pop, &design, statistics, config.draws, &mut rng)
                .map_err(|e| Error::Replicate { index: r, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    Ok(statistics
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let add_one: Vec<f64> = outcomes.iter().map(|o| o[k].0).collect();
            let raw: Vec<f64> = outcomes.iter().map(|o| o[k].1).collect();
            StudyResult {
                scenario: spec.id.clone(),
                design: design.group_sizes().to_vec(),
                statistic: s,
                replications: config.replications,
                draws: config.draws,
                alpha: config.alpha,
                seed,
                add_one: Rejection::of(&add_one, config.alpha),
                raw: Rejection::of(&raw, config.alpha),
                degenerate_replicates: outcomes.iter().map(|o| o[k].2).sum(),
                reference_rate: spec.reference_rate(s, design_index),
                p_values: add_one,
            }
        })
        .collect())
}

/// Seed used for design `index` when a whole scenario is run from one seed.
pub fn design_seed(seed: u64, index: usize) -> u64 {
    derive_seed(mix64(seed), index as u64)
}

/// [`run_study`] over every design of the scenario.
pub fn run_scenario(
    spec: &ScenarioSpec,
    statistics: &[Statistic],
    config: &StudyConfig,
    seed: u64,
) -> Result<Vec<StudyResult>> {
    let mut out = Vec::new();
    for d in 0..spec.designs.len() {
        out.extend(run_study(spec, d, statistics, config, design_seed(seed, d))?);
    }
    Ok(out)
}

/// A dataset shipped with the catalog rather than generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedDataset {
    pub id: String,
    pub description: String,
    pub groups: Vec<Vec<f64>>,
    /// Published `(statistic, p-value)` pairs.
    pub reported: Vec<(String, f64)>,
}

impl FixedDataset {
    pub fn dataset(&self) -> Result<ObservedDataset> {
        ObservedDataset::from_groups(&self.groups)
    }
}

/// Group summaries without unit-level data; randomization tests cannot be
/// run from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOnly {
    pub id: String,
    pub labels: Vec<String>,
    pub sizes: Vec<usize>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub reported: Vec<(String, f64)>,
}

impl SummaryOnly {
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// `F` and `X²` from the summaries alone.
    pub fn statistics(&self) -> (f64, f64) {
        let n = self.total() as f64;
        let j = self.sizes.len() as f64;
        let w: Vec<f64> = self.sizes.iter().map(|&s| s as f64).collect();
        let grand = w.iter().zip(&self.means).map(|(n, m)| n * m).sum::<f64>() / n;
        let sstre: f64 = w.iter().zip(&self.means).map(|(n, m)| n * (m - grand).powi(2)).sum();
        let ssres: f64 = w.iter().zip(&self.variances).map(|(n, v)| (n - 1.0) * v).sum();
        let f = (sstre / (j - 1.0)) / (ssres / (n - j));
        let q: Vec<f64> = w.iter().zip(&self.variances).map(|(n, v)| n / v).collect();
        let qsum: f64 = q.iter().sum();
        let wmean = q.iter().zip(&self.means).map(|(q, m)| q * m).sum::<f64>() / qsum;
        let x2 = q.iter().zip(&self.means).map(|(q, m)| q * (m - wmean).powi(2)).sum();
        (f, x2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogEntry {
    Generated(ScenarioSpec),
    Fixed(FixedDataset),
}

impl CatalogEntry {
    pub fn id(&self) -> &str {
        match self {
            CatalogEntry::Generated(s) => &s.id,
            CatalogEntry::Fixed(d) => &d.id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Example {
    Dataset(ObservedDataset),
    Summary(SummaryOnly),
}

fn montgomery() -> FixedDataset {
    FixedDataset {
        id: "montgomery".into(),
        description: "Four-arm experiment with unequal sizes and variances".into(),
        groups: vec![
            vec![58.2, 57.2, 58.4, 55.8, 54.9],
            vec![56.3, 54.5, 57.0, 55.3],
            vec![50.1, 54.2, 55.4],
            vec![52.9, 49.9, 50.0, 51.7],
        ],
        reported: vec![("f".into(), 0.003), ("x2".into(), 0.010)],
    }
}

fn angrist() -> SummaryOnly {
    SummaryOnly {
        id: "angrist-summary".into(),
        labels: ["control", "sfp", "ssp", "sfsp"].map(String::from).to_vec(),
        sizes: vec![854, 219, 212, 119],
        means: vec![63.86, 65.83, 64.13, 66.10],
        variances: vec![144.97, 124.45, 159.76, 114.33],
        reported: vec![("f".into(), 0.058), ("x2".into(), 0.045)],
    }
}

pub fn load_example(name: &str) -> Result<Example> {
    match name {
        "montgomery" => Ok(Example::Dataset(montgomery().dataset()?)),
        "angrist-summary" => Ok(Example::Summary(angrist())),
        _ => Err(Error::UnknownExample(name.to_string())),
    }
}

fn normal(sd: f64) -> ColumnGenerator {
    ColumnGenerator::Normal { mean: 0.0, sd }
}

fn exp_rate(rate: f64) -> ColumnGenerator {
    ColumnGenerator::Exponential { rate }
}

fn linear(slope: f64, intercept: f64) -> ColumnGenerator {
    ColumnGenerator::Linear { source: 0, slope, intercept }
}

fn rates(pairs: &[(&str, usize, f64)]) -> Vec<ReferenceRate> {
    pairs.iter().map(|&(s, design, rate)| ReferenceRate { statistic: s.into(), design, rate }).collect()
}

struct Entry {
    id: &'static str,
    description: &'static str,
    designs: Vec<Vec<usize>>,
    columns: Vec<ColumnGenerator>,
    standardization: Standardization,
    shift: Option<Vec<f64>>,
    protocol: Protocol,
    reference: Vec<ReferenceRate>,
}

impl From<Entry> for ScenarioSpec {
    fn from(e: Entry) -> Self {
        ScenarioSpec {
            id: e.id.into(),
            description: e.description.into(),
            designs: e.designs,
            columns: e.columns,
            standardization: e.standardization,
            shift: e.shift,
            protocol: e.protocol,
            reference: e.reference,
        }
    }
}

fn null_entry(
    id: &'static str,
    description: &'static str,
    designs: Vec<Vec<usize>>,
    columns: Vec<ColumnGenerator>,
    reference: &[(&str, usize, f64)],
) -> ScenarioSpec {
    Entry {
        id,
        description,
        designs,
        columns,
        standardization: Standardization::Center,
        shift: None,
        protocol: Protocol::FixedPopulation,
        reference: rates(reference),
    }
    .into()
}

fn power_entry(
    id: &'static str,
    description: &'static str,
    designs: Vec<Vec<usize>>,
    columns: Vec<ColumnGenerator>,
    shift: Option<Vec<f64>>,
    reference: &[(&str, usize, f64)],
) -> ScenarioSpec {
    Entry {
        id,
        description,
        designs,
        columns,
        standardization: Standardization::Center,
        shift,
        protocol: Protocol::FreshPopulation,
        reference: rates(reference),
    }
    .into()
}

/// Every generated scenario plus the fixed datasets.
pub fn builtin_scenarios() -> Vec<CatalogEntry> {
    let balanced_null = || vec![vec![15, 15, 15], vec![40, 40, 40]];
    let balanced_power = || vec![vec![10, 10, 10], vec![15, 15, 15]];
    let increasing = || vec![vec![10, 20, 30], vec![20, 30, 50]];
    let decreasing = || vec![vec![30, 20, 10], vec![50, 30, 20]];
    let e = exp_rate(1.0);
    let mut specs = vec![
        null_entry(
            "case-1.1",
            "balanced, independent normals with sd 1, 1.2, 1.5",
            balanced_null(),
            vec![normal(1.0), normal(1.2), normal(1.5)],
            &[("f", 0, 0.010), ("f", 1, 0.018), ("x2", 0, 0.016), ("x2", 1, 0.012)],
        ),
        null_entry(
            "case-1.2",
            "balanced, independent normals with sd 1, 2, 3",
            balanced_null(),
            vec![normal(1.0), normal(2.0), normal(3.0)],
            &[("f", 0, 0.023), ("f", 1, 0.016), ("x2", 0, 0.014), ("x2", 1, 0.010)],
        ),
        null_entry(
            "case-2.1",
            "sizes increasing in variance, Y2 = 2 Y1, Y3 = 3 Y1",
            increasing(),
            vec![normal(1.0), linear(2.0, 0.0), linear(3.0, 0.0)],
            &[("f", 0, 0.016), ("f", 1, 0.014), ("x2", 0, 0.032), ("x2", 1, 0.038)],
        ),
        null_entry(
            "case-2.2",
            "sizes increasing in variance, Y2 = 3 Y1, Y3 = 5 Y1",
            increasing(),
            vec![normal(1.0), linear(3.0, 0.0), linear(5.0, 0.0)],
            &[("f", 0, 0.015), ("f", 1, 0.011), ("x2", 0, 0.026), ("x2", 1, 0.030)],
        ),
        null_entry(
            "case-3.1",
            "sizes decreasing in variance, Y2 = 2 Y1, Y3 = 3 Y1",
            decreasing(),
            vec![normal(1.0), linear(2.0, 0.0), linear(3.0, 0.0)],
            &[("f", 0, 0.133), ("f", 1, 0.126), ("x2", 0, 0.052), ("x2", 1, 0.042)],
        ),
        null_entry(
            "case-3.2",
            "sizes decreasing in variance, Y2 = 3 Y1, Y3 = 5 Y1",
            decreasing(),
            vec![normal(1.0), linear(3.0, 0.0), linear(5.0, 0.0)],
            &[("f", 0, 0.189), ("f", 1, 0.146), ("x2", 0, 0.048), ("x2", 1, 0.040)],
        ),
        power_entry(
            "case-4",
            "balanced, independent normals with sd 1, 2, 3 shifted to means 0, 1, 2",
            balanced_power(),
            vec![normal(1.0), normal(2.0), normal(3.0)],
            Some(vec![0.0, 1.0, 2.0]),
            &[("x2", 0, 0.290), ("f", 0, 0.376), ("x2", 1, 0.576), ("f", 1, 0.692)],
        ),
        power_entry(
            "case-5",
            "sizes increasing in variance, Y2 = 3 Y1 + 1, Y3 = 5 Y1 + 2",
            increasing(),
            vec![normal(1.0), linear(3.0, 1.0), linear(5.0, 2.0)],
            None,
            &[("x2", 0, 0.178), ("f", 0, 0.634), ("x2", 1, 0.288), ("f", 1, 0.794)],
        ),
        power_entry(
            "case-6",
            "sizes decreasing in variance, Y2 = 3 Y1 + 1, Y3 = 5 Y1 + 2",
            decreasing(),
            vec![normal(1.0), linear(3.0, 1.0), linear(5.0, 2.0)],
            None,
            &[("x2", 0, 0.494), ("f", 0, 0.355), ("x2", 1, 0.642), ("f", 1, 0.576)],
        ),
        null_entry(
            "case-S1.1",
            "balanced, independent exponentials E, E/0.7, E/0.5",
            balanced_null(),
            vec![e.clone(), exp_rate(0.7), exp_rate(0.5)],
            &[("f", 0, 0.022), ("f", 1, 0.014), ("x2", 0, 0.034), ("x2", 1, 0.018)],
        ),
        null_entry(
            "case-S1.2",
            "balanced, independent exponentials E, E/0.5, E/0.3",
            balanced_null(),
            vec![e.clone(), exp_rate(0.5), exp_rate(0.3)],
            &[("f", 0, 0.030), ("f", 1, 0.030), ("x2", 0, 0.048), ("x2", 1, 0.029)],
        ),
        null_entry(
            "case-S2.1",
            "sizes increasing in variance, exponential Y1, Y2 = 2 Y1, Y3 = 3 Y1",
            increasing(),
            vec![e.clone(), linear(2.0, 0.0), linear(3.0, 0.0)],
            &[("f", 0, 0.018), ("f", 1, 0.024), ("x2", 0, 0.032), ("x2", 1, 0.035)],
        ),
        null_entry(
            "case-S2.2",
            "sizes increasing in variance, exponential Y1, Y2 = 3 Y1, Y3 = 5 Y1",
            increasing(),
            vec![e.clone(), linear(3.0, 0.0), linear(5.0, 0.0)],
            &[("f", 0, 0.026), ("f", 1, 0.018), ("x2", 0, 0.025), ("x2", 1, 0.036)],
        ),
        null_entry(
            "case-S3.1",
            "sizes decreasing in variance, exponential Y1, Y2 = 1.2 Y1, Y3 = 1.5 Y1",
            decreasing(),
            vec![e.clone(), linear(1.2, 0.0), linear(1.5, 0.0)],
            &[("f", 0, 0.076), ("f", 1, 0.086), ("x2", 0, 0.060), ("x2", 1, 0.062)],
        ),
        null_entry(
            "case-S3.2",
            "sizes decreasing in variance, exponential Y1, Y2 = 1.5 Y1, Y3 = 2 Y1",
            decreasing(),
            vec![e.clone(), linear(1.5, 0.0), linear(2.0, 0.0)],
            &[("f", 0, 0.108), ("f", 1, 0.109), ("x2", 0, 0.054), ("x2", 1, 0.044)],
        ),
        power_entry(
            "case-S4",
            "balanced, independent exponentials E, E/0.7, E/0.5 shifted to means 0, 0.5, 1",
            balanced_power(),
            vec![e.clone(), exp_rate(0.7), exp_rate(0.5)],
            Some(vec![0.0, 0.5, 1.0]),
            &[("x2", 0, 0.087), ("f", 0, 0.066), ("x2", 1, 0.207), ("f", 1, 0.198)],
        ),
        power_entry(
            "case-S5",
            "sizes increasing in variance, exponential Y1, Y2 = 3 Y1 + 1, Y3 = 5 Y1 + 2",
            increasing(),
            vec![e.clone(), linear(3.0, 1.0), linear(5.0, 2.0)],
            None,
            &[("x2", 0, 0.044), ("f", 0, 0.106), ("x2", 1, 0.293), ("f", 1, 0.729)],
        ),
        power_entry(
            "case-S6",
            "sizes decreasing in variance, exponential Y1, Y2 = 3 Y1 + 1, Y3 = 5 Y1 + 2",
            decreasing(),
            vec![e.clone(), linear(3.0, 1.0), linear(5.0, 2.0)],
            None,
            &[("x2", 0, 0.211), ("f", 0, 0.037), ("x2", 1, 0.578), ("f", 1, 0.274)],
        ),
    ];
    let lognormal = || {
        vec![
            ColumnGenerator::LogNormal { mu: 0.0, sigma: 1.0 },
            ColumnGenerator::LogNormal { mu: 1.0, sigma: 1.0 },
            ColumnGenerator::LogNormal { mu: 2.0, sigma: 1.0 },
        ]
    };
    specs.push(
        Entry {
            id: "lognormal-homo",
            description: "log-normal columns standardized to mean 0 and variance 1",
            designs: vec![vec![10, 10, 10], vec![10, 15, 20], vec![20, 15, 10]],
            columns: lognormal(),
            standardization: Standardization::CenterAndScale,
            shift: None,
            protocol: Protocol::FixedPopulation,
            reference: rates(&[
                ("x2", 0, 0.012),
                ("f", 0, 0.016),
                ("x2", 1, 0.016),
                ("f", 1, 0.028),
                ("x2", 2, 0.006),
                ("f", 2, 0.015),
            ]),
        }
        .into(),
    );
    specs.push(
        Entry {
            id: "lognormal-homo-shift-balanced",
            description: "standardized log-normal columns shifted by 0, 0.5, 1",
            designs: vec![vec![10, 10, 10]],
            columns: lognormal(),
            standardization: Standardization::CenterAndScale,
            shift: Some(vec![0.0, 0.5, 1.0]),
            protocol: Protocol::FreshPopulation,
            reference: rates(&[("x2", 0, 0.514), ("f", 0, 0.512)]),
        }
        .into(),
    );
    specs.push(
        Entry {
            id: "lognormal-homo-shift",
            description: "standardized log-normal columns shifted by 0, 0.2, 0.5",
            designs: vec![vec![10, 15, 20], vec![20, 15, 10]],
            columns: lognormal(),
            standardization: Standardization::CenterAndScale,
            shift: Some(vec![0.0, 0.2, 0.5]),
            protocol: Protocol::FreshPopulation,
            reference: rates(&[("x2", 0, 0.164), ("f", 0, 0.215), ("x2", 1, 0.256), ("f", 1, 0.179)]),
        }
        .into(),
    );
    specs.push(null_entry(
        "example-s1-correlated",
        "sizes 120, 80, 40 with Y2 = 3 Y1 and Y3 = 5 Y1, centered",
        vec![vec![120, 80, 40]],
        vec![normal(1.0), linear(3.0, 0.0), linear(5.0, 0.0)],
        &[],
    ));
    specs.push(null_entry(
        "example-s1-independent",
        "sizes 120, 80, 40 with independent normals of sd 1, 3, 5, centered",
        vec![vec![120, 80, 40]],
        vec![normal(1.0), normal(3.0), normal(5.0)],
        &[],
    ));
    let mut catalog: Vec<CatalogEntry> = specs.into_iter().map(CatalogEntry::Generated).collect();
    catalog.push(CatalogEntry::Fixed(montgomery()));
    catalog
}

/// Looks up a generated scenario by id.
pub fn find_scenario(id: &str) -> Result<ScenarioSpec> {
    builtin_scenarios()
        .into_iter()
        .find_map(|e| match e {
            CatalogEntry::Generated(s) if s.id == id => Some(s),
            _ => None,
        })
        .ok_or_else(|| Error::UnknownScenario(id.to_string()))
}
