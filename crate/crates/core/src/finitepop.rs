//! The science table of potential outcomes and its finite-population
//! summaries.
//!
//! All variances use divisor `N - 1`. Effect variances `S²(j-j')` and the
//! heterogeneity measure `Δ` are functions of the full table and cannot be
//! estimated from observed data; they are computed here for theory and
//! simulation only.

use serde::{Deserialize, Serialize};

use crate::design::{Assignment, Design};
use crate::error::{Error, Result};
use crate::stats::ObservedDataset;

/// Potential outcomes `Y_i(j)` for `N` units and `J` arms, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOutcomeTable {
    units: usize,
    arms: usize,
    values: Vec<f64>,
}

impl PotentialOutcomeTable {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let units = rows.len();
        let arms = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(units * arms);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != arms {
                return Err(Error::DimensionMismatch(format!("row {i} has {} entries, expected {arms}", r.len())));
            }
            values.extend_from_slice(r);
        }
        Self::from_row_major(units, arms, values)
    }

    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let arms = columns.len();
        let units = columns.first().map_or(0, |c| c.as_ref().len());
        if let Some(j) = columns.iter().position(|c| c.as_ref().len() != units) {
            return Err(Error::DimensionMismatch(format!("column {j} length differs from column 0 ({units})")));
        }
        let mut values = vec![0.0; units * arms];
        for (j, c) in columns.iter().enumerate() {
            for (i, &y) in c.as_ref().iter().enumerate() {
                values[i * arms + j] = y;
            }
        }
        Self::from_row_major(units, arms, values)
    }

    fn from_row_major(units: usize, arms: usize, values: Vec<f64>) -> Result<Self> {
        if units < 2 || arms < 2 {
            return Err(Error::DimensionMismatch(format!("table must be at least 2x2, got {units}x{arms}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("potential outcomes must be finite".into()));
        }
        Ok(Self { units, arms, values })
    }

    /// The sharp-null table where every arm equals `outcomes`.
    pub fn constant_effects(outcomes: &[f64], arms: usize) -> Result<Self> {
        Self::from_columns(&vec![outcomes; arms])
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn get(&self, unit: usize, arm: usize) -> f64 {
        self.values[unit * self.arms + arm]
    }

    pub fn column(&self, arm: usize) -> Vec<f64> {
        (0..self.units).map(|i| self.get(i, arm)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.arms).map(|j| self.column(j)).collect()
    }

    pub fn row(&self, unit: usize) -> &[f64] {
        &self.values[unit * self.arms..(unit + 1) * self.arms]
    }

    pub fn check_design(&self, design: &Design) -> Result<()> {
        if design.arms() != self.arms || design.units() != self.units {
            return Err(Error::DimensionMismatch(format!(
                "design {:?} does not fit a {}x{} table",
                design.group_sizes(),
                self.units,
                self.arms
            )));
        }
        Ok(())
    }

    /// Observed outcomes `Y_i^obs = Y_i(W_i)` under `assignment`.
    pub fn observe(&self, assignment: &Assignment) -> Result<ObservedDataset> {
        self.observe_labels(assignment.labels())
    }

    pub fn observe_labels(&self, labels: &[usize]) -> Result<ObservedDataset> {
        if labels.len() != self.units {
            return Err(Error::DimensionMismatch(format!("{} labels for {} units", labels.len(), self.units)));
        }
        let outcomes = labels.iter().enumerate().map(|(i, &l)| self.get(i, l)).collect();
        ObservedDataset::new(outcomes, labels.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub proportions: Vec<f64>,
    /// Column means `Ȳ(j)`.
    pub means: Vec<f64>,
    /// Column variances `S²(j)`.
    pub variances: Vec<f64>,
    /// `S²(j-j')`, symmetric with zero diagonal.
    pub effect_variances: Vec<Vec<f64>>,
    /// Finite-population covariances `S_{jj'}` (diagonal equals `S²(j)`).
    pub covariances: Vec<Vec<f64>>,
    /// Correlations `ρ_{jk}`; `None` where a column has zero variance.
    pub correlations: Vec<Vec<Option<f64>>>,
    /// `Δ = ΣΣ_{j<j'} p_j p_j' S²(j-j')`.
    pub delta: f64,
    /// `Δ_j = Σ_{j'≠j} p_j' S²(j-j')`.
    pub delta_by_arm: Vec<f64>,
    /// `Σ p_j Ȳ(j)`.
    pub weighted_mean: f64,
    /// `S² = Σ p_j S²(j)`.
    pub weighted_variance: f64,
}

impl PopulationSummary {
    /// Largest pairwise difference between column means.
    pub fn max_mean_gap(&self) -> f64 {
        let (lo, hi) =
            self.means.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| (lo.min(m), hi.max(m)));
        hi - lo
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn covariance(a: &[f64], ma: f64, b: &[f64], mb: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() - 1) as f64
}

pub fn summarize_population(pop: &PotentialOutcomeTable, design: &Design) -> Result<PopulationSummary> {
    pop.check_design(design)?;
    let arms = pop.arms();
    let p = design.proportions();
    let cols = pop.columns();
    let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();

    let mut cov = vec![vec![0.0; arms]; arms];
    let mut effect = vec![vec![0.0; arms]; arms];
    for j in 0..arms {
        for k in j..arms {
            let c = covariance(&cols[j], means[j], &cols[k], means[k]);
            cov[j][k] = c;
            cov[k][j] = c;
            if k != j {
                // Direct variance of the unit-level effects.
                let diff: Vec<f64> = cols[j].iter().zip(&cols[k]).map(|(a, b)| a - b).collect();
                let md = mean(&diff);
                let v = covariance(&diff, md, &diff, md);
                effect[j][k] = v;
                effect[k][j] = v;
            }
        }
    }
    let variances: Vec<f64> = (0..arms).map(|j| cov[j][j]).collect();
    let correlations = (0..arms)
        .map(|j| {
            (0..arms)
                .map(|k| {
                    let denom = (variances[j] * variances[k]).sqrt();
                    (denom > 0.0).then(|| if j == k { 1.0 } else { (cov[j][k] / denom).clamp(-1.0, 1.0) })
                })
                .collect()
        })
        .collect();

    let delta_by_arm: Vec<f64> =
        (0..arms).map(|j| (0..arms).filter(|&k| k != j).map(|k| p[k] * effect[j][k]).sum()).collect();
    let mut delta = 0.0;
    for j in 0..arms {
        for k in j + 1..arms {
            delta += p[j] * p[k] * effect[j][k];
        }
    }

    Ok(PopulationSummary {
        weighted_mean: p.iter().zip(&means).map(|(a, b)| a * b).sum(),
        weighted_variance: p.iter().zip(&variances).map(|(a, b)| a * b).sum(),
        proportions: p,
        means,
        variances,
        effect_variances: effect,
        covariances: cov,
        correlations,
        delta,
        delta_by_arm,
    })
}

/// Exact randomization expectations of the sums of squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedSums {
    pub ss_treatment: f64,
    pub ss_residual: f64,
}

impl ExpectedSums {
    pub fn ms_treatment(&self, design: &Design) -> f64 {
        self.ss_treatment / (design.arms() - 1) as f64
    }

    pub fn ms_residual(&self, design: &Design) -> f64 {
        self.ss_residual / (design.units() - design.arms()) as f64
    }
}

/// `E(SSRes) = Σ (N_j - 1) S²(j)` and
/// `E(SSTre) = Σ N_j (Ȳ(j) - Ȳ(·))² + Σ (1 - p_j) S²(j) - Δ`.
pub fn expected_ss(pop: &PotentialOutcomeTable, design: &Design) -> Result<ExpectedSums> {
    let s = summarize_population(pop, design)?;
    Ok(expected_ss_from_summary(&s, design))
}

pub fn expected_ss_from_summary(s: &PopulationSummary, design: &Design) -> ExpectedSums {
    let sizes = design.group_sizes();
    let ss_residual = sizes.iter().zip(&s.variances).map(|(&nj, v)| (nj - 1) as f64 * v).sum();
    let between: f64 = sizes.iter().zip(&s.means).map(|(&nj, m)| nj as f64 * (m - s.weighted_mean).powi(2)).sum();
    let spread: f64 = s.proportions.iter().zip(&s.variances).map(|(p, v)| (1.0 - p) * v).sum();
    ExpectedSums { ss_treatment: between + spread - s.delta, ss_residual }
}

/// Absolute tolerance on the largest column-mean difference for treating a
/// table as satisfying the weak null.
pub const NEYMAN_NULL_TOLERANCE: f64 = 1e-9;

/// `E(MSRes - MSTre)` under the weak null:
/// `(N-1)J / ((J-1)(N-J)) Σ (p_j - 1/J) S²(j) + Δ / (J-1)`.
pub fn ms_gap(pop: &PotentialOutcomeTable, design: &Design) -> Result<f64> {
    let s = summarize_population(pop, design)?;
    let max_diff = s.max_mean_gap();
    if max_diff > NEYMAN_NULL_TOLERANCE {
        return Err(Error::NotNeymanNull { max_diff });
    }
    let n = design.units() as f64;
    let j = design.arms() as f64;
    if design.units() <= design.arms() {
        return Err(Error::DegreesOfFreedom { n: design.units(), arms: design.arms() });
    }
    let tilt: f64 = s.proportions.iter().zip(&s.variances).map(|(p, v)| (p - 1.0 / j) * v).sum();
    Ok((n - 1.0) * j / ((j - 1.0) * (n - j)) * tilt + s.delta / (j - 1.0))
}

/// Finite-`N` scale factors for two arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTreatmentConstants {
    /// Scale of the `χ²_1` law of `F` (and `T²`).
    pub c1: f64,
    /// Scale of the `χ²_1` law of `X²`; never above 1.
    pub c2: f64,
    /// `var{τ̂(1,2)} = S²(1)/N_1 + S²(2)/N_2 - S²(1-2)/N`.
    pub var_tau: f64,
}

pub fn two_treatment_constants(pop: &PotentialOutcomeTable, design: &Design) -> Result<TwoTreatmentConstants> {
    if design.arms() != 2 || pop.arms() != 2 {
        return Err(Error::WrongArity { expected: 2, found: pop.arms() });
    }
    let s = summarize_population(pop, design)?;
    let n1 = design.group_sizes()[0] as f64;
    let n2 = design.group_sizes()[1] as f64;
    let n = n1 + n2;
    let (v1, v2) = (s.variances[0], s.variances[1]);
    let var_tau = v1 / n1 + v2 / n2 - s.effect_variances[0][1] / n;
    let c1 = var_tau / (v1 / n2 + v2 / n1);
    let c2 = var_tau / (v1 / n1 + v2 / n2);
    debug_assert!(c2 <= 1.0 + 1e-12);
    Ok(TwoTreatmentConstants { c1, c2, var_tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, StandardNormal};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn standardized(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed);
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = mean(&v);
        v.iter_mut().for_each(|x| *x -= m);
        let sd = (v.iter().map(|x| x * x).sum::<f64>() / (n - 1) as f64).sqrt();
        v.iter_mut().for_each(|x| *x /= sd);
        v
    }

    #[test]
    fn table_shape_checks() {
        assert!(PotentialOutcomeTable::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(PotentialOutcomeTable::from_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(PotentialOutcomeTable::from_rows(&[vec![1.0, f64::INFINITY], vec![0.0, 0.0]]).is_err());
        let t = PotentialOutcomeTable::from_columns(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(t.row(1), &[2.0, 5.0]);
        let d = Design::new(vec![2, 2]).unwrap();
        assert!(matches!(summarize_population(&t, &d), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn additive_table_has_no_heterogeneity() {
        let b = [0.3, -1.2, 2.0, 0.7, 1.1, -0.4];
        let c = [0.0, 2.0, -1.0];
        let rows: Vec<Vec<f64>> = b.iter().map(|bi| c.iter().map(|cj| bi + cj).collect()).collect();
        let t = PotentialOutcomeTable::from_rows(&rows).unwrap();
        let d = Design::new(vec![2, 2, 2]).unwrap();
        let s = summarize_population(&t, &d).unwrap();
        assert!(s.delta.abs() < 1e-14);
        for row in &s.effect_variances {
            for v in row {
                assert!(v.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_transform_table() {
        let y1 = standardized(30, 1);
        let cols = vec![
            y1.clone(),
            y1.iter().map(|y| 3.0 * y).collect::<Vec<_>>(),
            y1.iter().map(|y| 5.0 * y).collect::<Vec<_>>(),
        ];
        let t = PotentialOutcomeTable::from_columns(&cols).unwrap();
        let d = Design::new(vec![10, 10, 10]).unwrap();
        let s = summarize_population(&t, &d).unwrap();
        for (v, e) in s.variances.iter().zip([1.0, 9.0, 25.0]) {
            assert!(rel(*v, e) < 1e-12);
        }
        assert!(rel(s.effect_variances[0][1], 4.0) < 1e-12);
        assert!(rel(s.effect_variances[0][2], 16.0) < 1e-12);
        assert!(rel(s.effect_variances[1][2], 4.0) < 1e-12);
        for row in &s.correlations {
            for r in row {
                assert!((r.unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn effect_variance_covariance_relation() {
        let t = PotentialOutcomeTable::from_columns(&[standardized(20, 2), standardized(20, 3), standardized(20, 4)])
            .unwrap();
        let d = Design::new(vec![5, 7, 8]).unwrap();
        let s = summarize_population(&t, &d).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                if j != k {
                    let direct = s.effect_variances[j][k];
                    let via = s.variances[j] + s.variances[k] - 2.0 * s.covariances[j][k];
                    assert!(rel(direct, via) < 1e-10);
                }
            }
        }
        // Δ decomposition.
        let two_delta: f64 = s.proportions.iter().zip(&s.delta_by_arm).map(|(p, d)| p * d).sum();
        assert!(rel(2.0 * s.delta, two_delta) < 1e-10);
    }

    #[test]
    fn independent_columns_are_nearly_uncorrelated() {
        let n = 4000;
        let t = PotentialOutcomeTable::from_columns(&[standardized(n, 10), standardized(n, 11), standardized(n, 12)])
            .unwrap();
        let d = Design::new(vec![1000, 1000, 2000]).unwrap();
        let s = summarize_population(&t, &d).unwrap();
        let mut approx = 0.0;
        for j in 0..3 {
            for k in j + 1..3 {
                assert!(s.correlations[j][k].unwrap().abs() < 0.1);
                approx += s.proportions[j] * s.proportions[k] * (s.variances[j] + s.variances[k]);
            }
        }
        assert!(rel(s.delta, approx) < 0.1);
    }

    #[test]
    fn zero_variance_column_flags_correlation() {
        let t = PotentialOutcomeTable::from_columns(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]).unwrap();
        let d = Design::new(vec![1, 2]).unwrap();
        let s = summarize_population(&t, &d).unwrap();
        assert_eq!(s.correlations[0][1], None);
        assert_eq!(s.correlations[0][0], Some(1.0));
        assert!(s.delta > 0.0);
    }

    #[test]
    fn additive_two_arm_reductions() {
        // Additive with equal means: E(SSTre) = (J-1) S², E(SSRes) = (N-J) S².
        let base = standardized(12, 20);
        let t = PotentialOutcomeTable::constant_effects(&base, 3).unwrap();
        let d = Design::new(vec![3, 4, 5]).unwrap();
        let e = expected_ss(&t, &d).unwrap();
        let s2 = summarize_population(&t, &d).unwrap().weighted_variance;
        assert!(rel(e.ss_treatment, 2.0 * s2) < 1e-12);
        assert!(rel(e.ss_residual, 9.0 * s2) < 1e-12);

        // Balanced, equal means: E(SSTre) = (J-1)S² - Δ and gap = Δ/(J-1).
        let t =
            PotentialOutcomeTable::from_columns(&[standardized(12, 21), standardized(12, 22), standardized(12, 23)])
                .unwrap();
        let d = Design::new(vec![4, 4, 4]).unwrap();
        let s = summarize_population(&t, &d).unwrap();
        let e = expected_ss(&t, &d).unwrap();
        assert!(rel(e.ss_treatment, 2.0 * s.weighted_variance - s.delta) < 1e-12);
        assert!(rel(e.ss_residual, 9.0 * s.weighted_variance) < 1e-12);
        let gap = ms_gap(&t, &d).unwrap();
        assert!(rel(gap, s.delta / 2.0) < 1e-12);
        assert!(gap >= 0.0);
    }

    #[test]
    fn unbalanced_negative_association_gives_negative_gap() {
        let n = 60;
        let cols = [
            standardized(n, 30),
            standardized(n, 31).iter().map(|y| 2.0 * y).collect::<Vec<_>>(),
            standardized(n, 32).iter().map(|y| 3.0 * y).collect::<Vec<_>>(),
        ];
        let t = PotentialOutcomeTable::from_columns(&cols).unwrap();
        let d = Design::new(vec![30, 20, 10]).unwrap();
        assert!(ms_gap(&t, &d).unwrap() < 0.0);
    }

    #[test]
    fn gap_requires_weak_null() {
        let t = PotentialOutcomeTable::from_columns(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 4.0]]).unwrap();
        let d = Design::new(vec![1, 2]).unwrap();
        assert!(matches!(ms_gap(&t, &d), Err(Error::NotNeymanNull { .. })));
    }

    #[test]
    fn two_treatment_constants_cases() {
        // Constant effect, balanced: both constants are 1.
        let base = standardized(20, 40);
        let shifted: Vec<f64> = base.iter().map(|y| y + 1.0).collect();
        let t = PotentialOutcomeTable::from_columns(&[base.clone(), shifted]).unwrap();
        let d = Design::new(vec![10, 10]).unwrap();
        let c = two_treatment_constants(&t, &d).unwrap();
        assert!((c.c1 - 1.0).abs() < 1e-12 && (c.c2 - 1.0).abs() < 1e-12);

        // Perfectly correlated columns with variance ratio 25, large arm on
        // the low-variance side: C1 > 1.
        let base = standardized(40, 41);
        let t = PotentialOutcomeTable::from_columns(&[base.clone(), base.iter().map(|y| 5.0 * y).collect()]).unwrap();
        let d = Design::new(vec![30, 10]).unwrap();
        let c = two_treatment_constants(&t, &d).unwrap();
        assert!(c.c1 > 1.0, "{c:?}");
        assert!(c.c2 <= 1.0 + 1e-12);

        let t3 = PotentialOutcomeTable::from_columns(&vec![vec![1.0, 2.0, 3.0]; 3]).unwrap();
        let d3 = Design::new(vec![1, 1, 1]).unwrap();
        assert!(matches!(two_treatment_constants(&t3, &d3), Err(Error::WrongArity { .. })));
    }

    #[test]
    fn observe_picks_assigned_column() {
        let t = PotentialOutcomeTable::from_rows(&[[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]]).unwrap();
        let d = Design::new(vec![2, 1]).unwrap();
        let a = Assignment::new(&d, vec![0, 1, 0]).unwrap();
        let obs = t.observe(&a).unwrap();
        assert_eq!(obs.outcomes(), &[1.0, 20.0, 3.0]);
    }
}
