//! Closed-form finite-population results checked by full enumeration.

use nalgebra::DMatrix;
use rand::Rng;
use randex::asymptotics::{
    build_context, chisq_sf, jacobi_eigen, mixture_tails, quadratic_form_tails, x2_null_mixture, Matrix,
    JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE,
};
use randex::finitepop::{expected_ss, ms_gap, summarize_population, two_treatment_constants};
use randex::rng::stream;
use randex::scenarios::{find_scenario, generate_population};
use randex::stats::{anova, difference_in_means};
use randex::{Design, PotentialOutcomeTable};

fn small_designs() -> Vec<Design> {
    [
        vec![1, 1],
        vec![2, 1],
        vec![2, 2],
        vec![3, 2],
        vec![1, 5],
        vec![4, 4],
        vec![1, 1, 1],
        vec![2, 2, 2],
        vec![1, 2, 3],
        vec![3, 3, 2],
        vec![2, 2, 2, 2],
        vec![1, 1, 2, 1, 3],
    ]
    .into_iter()
    .map(|s| Design::new(s).unwrap())
    .collect()
}

fn all_labels(d: &Design) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    d.enumerate().unwrap().visit(|l| out.push(l.to_vec()));
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cov(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64
}

fn random_population(rng: &mut impl Rng, n: usize, arms: usize) -> PotentialOutcomeTable {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..arms).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    PotentialOutcomeTable::from_rows(&rows).unwrap()
}

#[test]
fn indicator_moments_match_closed_forms() {
    for d in small_designs() {
        let labels = all_labels(&d);
        let n = d.units();
        let nf = n as f64;
        let p = d.proportions();
        // W[(i, j)] over assignments.
        let w = |i: usize, j: usize| -> Vec<f64> { labels.iter().map(|l| if l[i] == j { 1.0 } else { 0.0 }).collect() };
        for j in 0..d.arms() {
            for i in 0..n {
                let wij = w(i, j);
                assert!((mean(&wij) - p[j]).abs() < 1e-10);
                assert!((cov(&wij, &wij) - p[j] * (1.0 - p[j])).abs() < 1e-10);
                for k in 0..d.arms() {
                    for i2 in 0..n {
                        let c = cov(&wij, &w(i2, k));
                        let expected = match (i == i2, j == k) {
                            (true, true) => p[j] * (1.0 - p[j]),
                            (false, true) => -p[j] * (1.0 - p[j]) / (nf - 1.0),
                            (true, false) => -p[j] * p[k],
                            (false, false) => p[j] * p[k] / (nf - 1.0),
                        };
                        assert!((c - expected).abs() < 1e-10, "{:?} i={i} i'={i2} j={j} k={k}", d.group_sizes());
                    }
                }
            }
        }
    }
}

#[test]
fn group_mean_moments_match_closed_forms() {
    let mut rng = stream(2024);
    for d in small_designs() {
        let n = d.units();
        if n < 2 {
            continue;
        }
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..5.0)).collect();
        let dv: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..5.0)).collect();
        let s2 = |v: &[f64]| cov(v, v) * n as f64 / (n - 1) as f64;
        let diff: Vec<f64> = c.iter().zip(&dv).map(|(a, b)| a - b).collect();
        let s_cd = (s2(&c) + s2(&dv) - s2(&diff)) / 2.0;
        let labels = all_labels(&d);
        let sizes = d.group_sizes();
        let group_mean = |v: &[f64], l: &[usize], j: usize| {
            v.iter().zip(l).filter(|(_, &t)| t == j).map(|(y, _)| y).sum::<f64>() / sizes[j] as f64
        };
        for (j, &nj) in sizes.iter().enumerate() {
            let mj: Vec<f64> = labels.iter().map(|l| group_mean(&c, l, j)).collect();
            let pj = nj as f64 / n as f64;
            assert!((mean(&mj) - mean(&c)).abs() < 1e-10);
            assert!((cov(&mj, &mj) - (1.0 - pj) / nj as f64 * s2(&c)).abs() < 1e-10);
            for k in 0..d.arms() {
                if k == j {
                    continue;
                }
                let mk: Vec<f64> = labels.iter().map(|l| group_mean(&dv, l, k)).collect();
                assert!((cov(&mj, &mk) + s_cd / n as f64).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn expected_sums_of_squares_are_exact() {
    let mut rng = stream(77);
    let designs: Vec<Design> = small_designs().into_iter().filter(|d| d.arms() <= 3 && d.units() > d.arms()).collect();
    for trial in 0..50 {
        let d = &designs[trial % designs.len()];
        let pop = random_population(&mut rng, d.units(), d.arms());
        let closed = expected_ss(&pop, d).unwrap();
        let labels = all_labels(d);
        let (mut tre, mut res) = (0.0, 0.0);
        for l in &labels {
            let a = anova(&pop.observe_labels(l).unwrap()).unwrap();
            tre += a.ss_treatment;
            res += a.ss_residual;
        }
        tre /= labels.len() as f64;
        res /= labels.len() as f64;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        assert!(rel(tre, closed.ss_treatment) < 1e-10, "{trial}: {tre} vs {}", closed.ss_treatment);
        assert!(rel(res, closed.ss_residual) < 1e-10, "{trial}: {res} vs {}", closed.ss_residual);
    }
}

#[test]
fn mean_square_gap_is_exact_under_weak_null() {
    let mut rng = stream(5);
    for sizes in [vec![3, 2, 1], vec![1, 2, 3], vec![2, 2, 3], vec![3, 4]] {
        let d = Design::new(sizes).unwrap();
        let raw = random_population(&mut rng, d.units(), d.arms());
        let centered: Vec<Vec<f64>> = raw
            .columns()
            .into_iter()
            .map(|c| {
                let m = mean(&c);
                c.iter().map(|y| y - m).collect()
            })
            .collect();
        let pop = PotentialOutcomeTable::from_columns(&centered).unwrap();
        let labels = all_labels(&d);
        let j = d.arms() as f64;
        let n = d.units() as f64;
        let enumerated = labels
            .iter()
            .map(|l| {
                let a = anova(&pop.observe_labels(l).unwrap()).unwrap();
                a.ss_residual / (n - j) - a.ss_treatment / (j - 1.0)
            })
            .sum::<f64>()
            / labels.len() as f64;
        let closed = ms_gap(&pop, &d).unwrap();
        assert!((enumerated - closed).abs() < 1e-10 * closed.abs().max(1.0), "{enumerated} vs {closed}");
    }
}

#[test]
fn difference_in_means_variance_is_exact() {
    let mut rng = stream(9);
    for sizes in [vec![2, 3], vec![4, 4], vec![1, 6]] {
        let d = Design::new(sizes).unwrap();
        let pop = random_population(&mut rng, d.units(), 2);
        let k = two_treatment_constants(&pop, &d).unwrap();
        let taus: Vec<f64> =
            all_labels(&d).iter().map(|l| difference_in_means(&pop.observe_labels(l).unwrap()).unwrap()).collect();
        assert!((cov(&taus, &taus) - k.var_tau).abs() < 1e-10);
        assert!(k.c2 <= 1.0 + 1e-12);
    }
}

fn general_spectrum(m: &Matrix) -> Vec<f64> {
    let j = m.dim();
    let dm = DMatrix::from_fn(j, j, |r, c| m[(r, c)]);
    let mut ev: Vec<f64> = dm.complex_eigenvalues().iter().map(|z| z.re).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn contexts() -> Vec<(PotentialOutcomeTable, Design)> {
    let mut out = Vec::new();
    let mut rng = stream(31);
    for sizes in [vec![5, 9], vec![10, 20, 30], vec![30, 20, 10], vec![8, 8, 8, 8], vec![4, 7, 2, 9, 5]] {
        let d = Design::new(sizes).unwrap();
        let mut pop = random_population(&mut rng, d.units(), d.arms());
        out.push((pop.clone(), d.clone()));
        // Strongly correlated variant: shared component plus noise.
        let rows: Vec<Vec<f64>> = (0..d.units())
            .map(|i| {
                let base = pop.get(i, 0);
                (0..d.arms()).map(|j| (j + 1) as f64 * base + 0.1 * pop.get(i, j)).collect()
            })
            .collect();
        pop = PotentialOutcomeTable::from_rows(&rows).unwrap();
        out.push((pop, d));
    }
    out
}

#[test]
fn mixture_weights_match_general_eigenvalues() {
    for (pop, d) in contexts() {
        let ctx = build_context(&pop, &d).unwrap();
        let mix = x2_null_mixture(&ctx).unwrap();
        let m = ctx.weighted_projector.matmul(&ctx.mean_covariance());
        let general = general_spectrum(&m);
        assert!(general.last().unwrap().abs() < 1e-9);
        for (a, b) in mix.weights.iter().zip(&general) {
            assert!((a - b).abs() < 1e-9, "{:?}: {a} vs {b}", d.group_sizes());
        }
        assert!(mix.weights.iter().all(|&w| (0.0..=1.0 + 1e-9).contains(&w)));
    }
}

#[test]
fn symmetrized_product_is_not_isospectral() {
    // (M + Mᵀ)/2 is not a valid substitute for the weighted product.
    let (pop, d) = contexts().swap_remove(3);
    let ctx = build_context(&pop, &d).unwrap();
    let m = ctx.weighted_projector.matmul(&ctx.mean_covariance());
    let sym = Matrix::from_fn(m.dim(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let naive = jacobi_eigen(&sym, JACOBI_TOLERANCE, JACOBI_MAX_SWEEPS).unwrap().values;
    let exact = x2_null_mixture(&ctx).unwrap().weights;
    let gap = naive.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap > 1e-6, "{gap}");
}

#[test]
fn two_arm_mixture_weight_is_c2() {
    let mut rng = stream(12);
    for sizes in [vec![3, 9], vec![20, 5], vec![7, 7], vec![40, 13]] {
        let d = Design::new(sizes).unwrap();
        let pop = random_population(&mut rng, d.units(), 2);
        let ctx = build_context(&pop, &d).unwrap();
        let mix = x2_null_mixture(&ctx).unwrap();
        let c2 = two_treatment_constants(&pop, &d).unwrap().c2;
        assert_eq!(mix.weights.len(), 1);
        assert!((mix.weights[0] - c2).abs() < 1e-9, "{} vs {c2}", mix.weights[0]);
    }
}

#[test]
fn schur_bound_holds() {
    for (pop, d) in contexts() {
        let ctx = build_context(&pop, &d).unwrap();
        let top = jacobi_eigen(&ctx.mean_covariance(), JACOBI_TOLERANCE, JACOBI_MAX_SWEEPS).unwrap().values[0];
        assert!(top <= 1.0 + 1e-9, "{top}");
        for p in [&ctx.projector, &ctx.weighted_projector] {
            assert!(p.matmul(p).sub(p).max_abs() < 1e-10);
            assert!((p.trace() - (d.arms() - 1) as f64).abs() < 1e-10);
        }
    }
}

#[test]
fn mixture_is_dominated_and_matches_quadratic_form() {
    let grid: Vec<f64> = (1..=24).map(|k| 0.5 * k as f64).collect();
    for (idx, (pop, d)) in contexts().into_iter().enumerate().filter(|(_, (_, d))| d.arms() <= 4) {
        let ctx = build_context(&pop, &d).unwrap();
        let mix = x2_null_mixture(&ctx).unwrap();
        let draws = 200_000;
        let tails = mixture_tails(&mix, &grid, draws, idx as u64);
        let quad = quadratic_form_tails(&ctx, &grid, draws, 1000 + idx as u64).unwrap();
        let df = (d.arms() - 1) as f64;
        for (t, q) in tails.iter().zip(&quad) {
            assert!(t.probability <= chisq_sf(t.threshold, df) + 3.0 * t.std_error, "{t:?}");
            let se = (t.std_error.powi(2) + q.std_error.powi(2)).sqrt();
            assert!((t.probability - q.probability).abs() <= 3.0 * se.max(1e-4), "{t:?} vs {q:?}");
        }
    }
}

#[test]
fn example_populations_have_expected_correlations() {
    let corr = find_scenario("example-s1-correlated").unwrap();
    let ind = find_scenario("example-s1-independent").unwrap();
    let d = corr.design(0).unwrap();
    let pc = generate_population(&corr, 0, 1).unwrap();
    let pi = generate_population(&ind, 0, 1).unwrap();
    let sc = summarize_population(&pc, &d).unwrap();
    let si = summarize_population(&pi, &d).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            assert!((sc.correlations[a][b].unwrap() - 1.0).abs() < 1e-12);
            if a != b {
                // Sample correlation of 240 independent draws.
                assert!(si.correlations[a][b].unwrap().abs() < 0.25);
            }
        }
    }
    let mix_c = x2_null_mixture(&build_context(&pc, &d).unwrap()).unwrap();
    let mix_i = x2_null_mixture(&build_context(&pi, &d).unwrap()).unwrap();
    assert!(mix_i.weights.iter().all(|&w| w < 1.0));
    assert!(mix_c.mean() > mix_i.mean());
}

#[test]
fn balanced_equal_variance_context_has_equal_directions() {
    let d = Design::balanced(3, 4).unwrap();
    let cols = vec![vec![1.0, -1.0, 2.0, -2.0, 0.5, -0.5, 3.0, -3.0, 0.0, 0.0, 1.0, -1.0]; 3];
    let mut cols = cols;
    cols[1].reverse();
    cols[2].rotate_left(2);
    let pop = PotentialOutcomeTable::from_columns(&cols).unwrap();
    let ctx = build_context(&pop, &d).unwrap();
    for (a, b) in ctx.q.iter().zip(&ctx.q_weighted) {
        assert!((a - b).abs() < 1e-12);
    }
}
