//! Reference distributions and large-sample theory.
//!
//! Under the weak null, `X²` behaves like `V₀ᵀ P_w V₀` where `V₀` is
//! approximately `N(0, P∗R)`. Its limit law is the chi-square mixture
//! `Σ λ_j ξ_j` whose weights are the nonzero eigenvalues of `P_w (P∗R)`.
//! Because `P_w` is idempotent those coincide with the eigenvalues of the
//! symmetric matrix `P_w (P∗R) P_w`, which is what gets diagonalized.

pub mod linalg;
pub mod special;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::finitepop::{summarize_population, PotentialOutcomeTable};
use crate::rng::{derive_seed, stream};
use crate::stats::{ObservedDataset, Statistic};

pub use linalg::{jacobi_eigen, Matrix, SymmetricEigen, JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE};

/// Monte Carlo sample count used when callers do not choose one.
pub const DEFAULT_MIXTURE_DRAWS: u64 = 1_000_000;

/// Eigenvalues below this fraction of the largest are structural zeros.
pub const ZERO_EIGENVALUE_RATIO: f64 = 1e-8;

const EIGEN_BOUND_SLACK: f64 = 1e-9;
const BLOCK: u64 = 1 << 14;

pub fn chisq_cdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        special::gamma_p(0.5 * df, 0.5 * x)
    }
}

/// Upper tail `P(χ²_df ≥ x)`.
pub fn chisq_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        special::gamma_q(0.5 * df, 0.5 * x)
    }
}

pub fn f_cdf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    special::beta_inc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2))
}

/// Upper tail `P(F_{d1,d2} ≥ x)`.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    special::beta_inc(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x))
}

/// The matrices of the `X²` limit theory for one population and design.
#[derive(Debug, Clone)]
pub struct AsymptoticContext {
    /// `q = (√p_1, …, √p_J)`.
    pub q: Vec<f64>,
    /// `P = I - q qᵀ`.
    pub projector: Matrix,
    /// `Q_j = N_j / S²(j)`.
    pub precision_weights: Vec<f64>,
    /// `q_w = (√Q_1, …, √Q_J) / √ΣQ_j`.
    pub q_weighted: Vec<f64>,
    /// `P_w = I - q_w q_wᵀ`.
    pub weighted_projector: Matrix,
    /// Correlation matrix of the potential-outcome columns.
    pub correlation: Matrix,
}

impl AsymptoticContext {
    /// The randomization (sharp-null) context: equal variances and
    /// perfectly correlated columns, so `q_w = q` and `R = 1 1ᵀ`.
    pub fn sharp_null(design: &Design) -> Self {
        let sizes: Vec<f64> = design.group_sizes().iter().map(|&s| s as f64).collect();
        Self::assemble(design, sizes, Matrix::from_fn(design.arms(), |_, _| 1.0))
    }

    fn assemble(design: &Design, precision_weights: Vec<f64>, correlation: Matrix) -> Self {
        let q: Vec<f64> = design.proportions().iter().map(|p| p.sqrt()).collect();
        let total: f64 = precision_weights.iter().sum();
        let q_weighted: Vec<f64> = precision_weights.iter().map(|w| (w / total).sqrt()).collect();
        Self {
            projector: Matrix::complement_projector(&q),
            weighted_projector: Matrix::complement_projector(&q_weighted),
            q,
            precision_weights,
            q_weighted,
            correlation,
        }
    }

    pub fn arms(&self) -> usize {
        self.q.len()
    }

    /// `P∗R`, the covariance of the standardized arm means.
    pub fn mean_covariance(&self) -> Matrix {
        self.projector.hadamard(&self.correlation)
    }
}

pub fn build_context(pop: &PotentialOutcomeTable, design: &Design) -> Result<AsymptoticContext> {
    let s = summarize_population(pop, design)?;
    if let Some(group) = s.variances.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroVariance { group });
    }
    let weights = design.group_sizes().iter().zip(&s.variances).map(|(&n, v)| n as f64 / v).collect();
    let j = design.arms();
    let correlation = Matrix::from_fn(j, |a, b| s.correlations[a][b].expect("positive variances"));
    Ok(AsymptoticContext::assemble(design, weights, correlation))
}

/// `Σ λ_k ξ_k` with `ξ_k` independent `χ²_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareMixture {
    pub weights: Vec<f64>,
}

impl ChiSquareMixture {
    /// Plain `χ²_df`.
    pub fn chi_square(df: usize) -> Self {
        Self { weights: vec![1.0; df] }
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.weights
            .iter()
            .map(|w| {
                let z: f64 = rng.sample(StandardNormal);
                w * z * z
            })
            .sum()
    }
}

/// Nonzero eigenvalues of `P_w (P∗R)`, sorted descending.
pub fn x2_null_mixture(ctx: &AsymptoticContext) -> Result<ChiSquareMixture> {
    let pw = &ctx.weighted_projector;
    let sym = pw.matmul(&ctx.mean_covariance()).matmul(pw);
    // Exact symmetry for the solver; the product is symmetric up to rounding.
    let sym = Matrix::from_fn(sym.dim(), |i, j| 0.5 * (sym[(i, j)] + sym[(j, i)]));
    let eig = jacobi_eigen(&sym, JACOBI_TOLERANCE, JACOBI_MAX_SWEEPS)?;
    let mut values = eig.values;
    let largest = values[0].abs().max(f64::MIN_POSITIVE);
    let dropped = values.pop().expect("J >= 2");
    if dropped.abs() > ZERO_EIGENVALUE_RATIO * largest.max(1.0) {
        return Err(Error::Numerical(format!("expected a structural zero eigenvalue, smallest is {dropped:e}")));
    }
    for v in &mut values {
        if *v > 1.0 + EIGEN_BOUND_SLACK {
            return Err(Error::Numerical(format!("mixture weight {v} exceeds 1")));
        }
        *v = v.max(0.0);
    }
    Ok(ChiSquareMixture { weights: values })
}

/// Monte Carlo estimate of a probability with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub threshold: f64,
    pub probability: f64,
    pub std_error: f64,
    pub draws: u64,
}

impl TailEstimate {
    fn from_count(threshold: f64, count: u64, draws: u64) -> Self {
        let p = count as f64 / draws as f64;
        Self { threshold, probability: p, std_error: (p * (1.0 - p) / draws as f64).sqrt(), draws }
    }
}

/// Runs `draws` samples in fixed-size blocks, block `b` on the stream
/// `derive_seed(seed, b)`, and sums the per-block count vectors.
fn blocked_counts<F>(draws: u64, seed: u64, width: usize, sample: F) -> Vec<u64>
where
    F: Fn(&mut crate::rng::Stream, &mut [u64]) + Sync,
{
    let blocks = draws.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(derive_seed(seed, b));
            let mut counts = vec![0u64; width];
            let n = BLOCK.min(draws - b * BLOCK);
            for _ in 0..n {
                sample(&mut rng, &mut counts);
            }
            counts
        })
        .reduce(
            || vec![0u64; width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// `P(Σ λ_k ξ_k ≥ a)` by simulation.
pub fn mixture_tail(mix: &ChiSquareMixture, a: f64, draws: u64, seed: u64) -> TailEstimate {
    mixture_tails(mix, &[a], draws, seed)[0]
}

/// Tail probabilities at several thresholds from one set of draws.
pub fn mixture_tails(mix: &ChiSquareMixture, thresholds: &[f64], draws: u64, seed: u64) -> Vec<TailEstimate> {
    assert!(draws > 0);
    let counts = blocked_counts(draws, seed, thresholds.len(), |rng, counts| {
        let x = mix.draw(rng);
        for (c, &a) in counts.iter_mut().zip(thresholds) {
            if x >= a {
                *c += 1;
            }
        }
    });
    thresholds.iter().zip(counts).map(|(&a, c)| TailEstimate::from_count(a, c, draws)).collect()
}

/// Histogram density estimate of the mixture on `[0, upper)` with equal
/// bins. Mass beyond `upper` is dropped from the bins but still counts in
/// the normalization.
pub fn mixture_density(mix: &ChiSquareMixture, bins: usize, upper: f64, draws: u64, seed: u64) -> Vec<f64> {
    let width = upper / bins as f64;
    let counts = blocked_counts(draws, seed, bins, |rng, counts| {
        let x = mix.draw(rng);
        let k = (x / width) as usize;
        if k < bins {
            counts[k] += 1;
        }
    });
    counts.into_iter().map(|c| c as f64 / (draws as f64 * width)).collect()
}

/// Tail probabilities of `V₀ᵀ P_w V₀` with `V₀ ~ N(0, P∗R)` sampled
/// directly, bypassing the eigenvalues of the product.
pub fn quadratic_form_tails(
    ctx: &AsymptoticContext,
    thresholds: &[f64],
    draws: u64,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    let cov = ctx.mean_covariance();
    let eig = jacobi_eigen(&cov, JACOBI_TOLERANCE, JACOBI_MAX_SWEEPS)?;
    let j = ctx.arms();
    // Square-root factor L = U diag(√λ), so L z ~ N(0, P∗R).
    let root = Matrix::from_fn(j, |r, c| eig.vectors[(r, c)] * eig.values[c].max(0.0).sqrt());
    let pw = &ctx.weighted_projector;
    let counts = blocked_counts(draws, seed, thresholds.len(), |rng, counts| {
        let z: Vec<f64> = (0..j).map(|_| rng.sample(StandardNormal)).collect();
        let v = root.apply(&z);
        let pv = pw.apply(&v);
        let x: f64 = v.iter().zip(&pv).map(|(a, b)| a * b).sum();
        for (c, &a) in counts.iter_mut().zip(thresholds) {
            if x >= a {
                *c += 1;
            }
        }
    });
    Ok(thresholds.iter().zip(counts).map(|(&a, c)| TailEstimate::from_count(a, c, draws)).collect())
}

/// Large-sample p-value of an observed statistic.
///
/// `F` is referred to `F_{J-1,N-J}`, `X²` to `χ²_{J-1}`, and the pairwise
/// and two-arm statistics to `χ²_1`. For the absolute difference in means
/// the equivalent `T²` is computed from `data` and referred to `χ²_1`.
pub fn asymptotic_pvalue(statistic: Statistic, value: f64, data: &ObservedDataset) -> Result<f64> {
    let n = data.units() as f64;
    let j = data.arms() as f64;
    Ok(match statistic {
        Statistic::F => f_sf(value, j - 1.0, n - j),
        Statistic::X2 => chisq_sf(value, j - 1.0),
        Statistic::Pairwise(..) | Statistic::T2 => chisq_sf(value, 1.0),
        Statistic::DifferenceInMeans => chisq_sf(Statistic::T2.evaluate(data)?, 1.0),
    })
}

/// Name-based variant of [`asymptotic_pvalue`].
pub fn asymptotic_pvalue_named(name: &str, value: f64, data: &ObservedDataset) -> Result<f64> {
    asymptotic_pvalue(Statistic::from_name(name)?, value, data)
}
