//! Completely randomized designs.
//!
//! A [`Design`] fixes the arm sizes `(N_1, …, N_J)`. Every assignment of
//! labels with exactly `N_j` units in arm `j` has probability
//! `Π N_j! / N!`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of assignments [`Design::enumerate`]
/// will visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Design {
    sizes: Vec<usize>,
    total: usize,
}

impl Design {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidDesign(format!("J >= 2 required, got {} arm(s)", sizes.len())));
        }
        if let Some(j) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidDesign(format!("arm {j} is empty")));
        }
        let total = sizes.iter().sum();
        Ok(Self { sizes, total })
    }

    /// Balanced design with `arms` groups of `per_arm` units.
    pub fn balanced(arms: usize, per_arm: usize) -> Result<Self> {
        Self::new(vec![per_arm; arms])
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Total number of units `N`.
    pub fn units(&self) -> usize {
        self.total
    }

    /// Number of treatment arms `J`.
    pub fn arms(&self) -> usize {
        self.sizes.len()
    }

    /// Arm proportions `p_j = N_j / N`.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.sizes.iter().map(|&s| s as f64 / n).collect()
    }

    pub fn is_balanced(&self) -> bool {
        self.sizes.windows(2).all(|w| w[0] == w[1])
    }

    /// The sorted label vector: arm 0 repeated `N_0` times, then arm 1, ….
    pub fn base_labels(&self) -> Vec<usize> {
        self.sizes.iter().enumerate().flat_map(|(j, &s)| std::iter::repeat_n(j, s)).collect()
    }

    /// Draws an assignment uniformly by Fisher–Yates shuffling the label
    /// vector.
    pub fn sample_assignment<R: Rng + ?Sized>(&self, rng: &mut R) -> Assignment {
        let mut labels = self.base_labels();
        labels.shuffle(rng);
        Assignment { labels }
    }

    /// Number of distinct assignments, `N! / Π N_j!`.
    pub fn assignment_count(&self) -> BigUint {
        // Product of binomials C(n_1, n_1) C(n_1 + n_2, n_2) ..., each built
        // incrementally so every intermediate division is exact.
        let mut count = BigUint::one();
        let mut filled = 0usize;
        for &s in &self.sizes {
            for k in 1..=s {
                count *= BigUint::from(filled + k);
                count /= BigUint::from(k);
            }
            filled += s;
        }
        count
    }

    /// [`assignment_count`](Self::assignment_count) as a `u64`.
    pub fn assignment_count_u64(&self) -> Result<u64> {
        let c = self.assignment_count();
        c.to_u64().ok_or_else(|| Error::Overflow(c.to_string()))
    }

    /// All assignments in lexicographic order, if there are at most
    /// [`DEFAULT_ENUMERATION_CAP`] of them.
    pub fn enumerate(&self) -> Result<Assignments> {
        self.enumerate_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn enumerate_with_cap(&self, cap: u64) -> Result<Assignments> {
        let count = self.assignment_count();
        match count.to_u64() {
            Some(c) if c <= cap => Ok(Assignments { current: self.base_labels(), remaining: c }),
            _ => Err(Error::CapExceeded { count: count.to_string(), cap }),
        }
    }
}

impl TryFrom<Vec<usize>> for Design {
    type Error = Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<Design> for Vec<usize> {
    fn from(d: Design) -> Self {
        d.sizes
    }
}

/// A vector of arm labels, one per unit, consistent with some [`Design`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    labels: Vec<usize>,
}

impl Assignment {
    pub fn new(design: &Design, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != design.units() {
            return Err(Error::InvalidAssignment(format!("{} labels for {} units", labels.len(), design.units())));
        }
        let mut counts = vec![0usize; design.arms()];
        for &l in &labels {
            if l >= design.arms() {
                return Err(Error::InvalidAssignment(format!("label {l} out of range")));
            }
            counts[l] += 1;
        }
        if counts != design.group_sizes() {
            return Err(Error::InvalidAssignment(format!(
                "arm counts {counts:?} differ from design {:?}",
                design.group_sizes()
            )));
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }
}

/// Lexicographic enumeration of all assignments of a design.
///
/// Besides the owning [`Iterator`] impl, [`Assignments::visit`] walks the
/// label vectors without allocating.
#[derive(Debug, Clone)]
pub struct Assignments {
    current: Vec<usize>,
    remaining: u64,
}

impl Assignments {
    pub fn len(&self) -> u64 {
        self.remaining
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0
    }

    pub fn visit<F: FnMut(&[usize])>(mut self, mut f: F) {
        while self.remaining > 0 {
            f(&self.current);
            self.step();
        }
    }

    fn step(&mut self) {
        self.remaining -= 1;
        if self.remaining > 0 {
            let advanced = next_permutation(&mut self.current);
            debug_assert!(advanced);
        }
    }
}

impl Iterator for Assignments {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.remaining == 0 {
            return None;
        }
        let out = Assignment { labels: self.current.clone() };
        self.step();
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// Rearranges `v` into the next lexicographically greater permutation of its
/// multiset. Returns false (leaving `v` sorted descending) at the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use std::collections::{HashMap, HashSet};

    #[test]
    fn rejects_degenerate_designs() {
        assert!(Design::new(vec![3]).is_err());
        assert!(Design::new(vec![]).is_err());
        assert!(Design::new(vec![2, 0, 1]).is_err());
        let d = Design::new(vec![2, 3, 5]).unwrap();
        assert_eq!(d.units(), 10);
        assert_eq!(d.arms(), 3);
        assert!((d.proportions().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn counts() {
        let c = |s: &[usize]| Design::new(s.to_vec()).unwrap().assignment_count();
        assert_eq!(c(&[2, 2]), BigUint::from(6u32));
        assert_eq!(c(&[2, 2, 2]), BigUint::from(90u32));
        assert_eq!(c(&[1, 1, 1, 1, 1]), BigUint::from(120u32));
        assert_eq!(c(&[5, 4, 3, 4]), BigUint::from(50_450_400u64));
        assert_eq!(c(&[10, 10, 10]), BigUint::from(5_550_996_791_340u64));
    }

    #[test]
    fn count_overflow_is_reported() {
        let d = Design::new(vec![40, 40, 40]).unwrap();
        assert!(matches!(d.assignment_count_u64(), Err(Error::Overflow(_))));
        assert_eq!(Design::new(vec![5, 4, 3, 4]).unwrap().assignment_count_u64(), Ok(50_450_400));
    }

    #[test]
    fn enumeration_is_lexicographic_and_exhaustive() {
        let d = Design::new(vec![2, 2]).unwrap();
        let all: Vec<Vec<usize>> = d.enumerate().unwrap().map(|a| a.into_labels()).collect();
        assert_eq!(
            all,
            vec![
                vec![0, 0, 1, 1],
                vec![0, 1, 0, 1],
                vec![0, 1, 1, 0],
                vec![1, 0, 0, 1],
                vec![1, 0, 1, 0],
                vec![1, 1, 0, 0],
            ]
        );
        for sizes in [vec![2, 2, 2], vec![1, 1, 1, 1, 1], vec![3, 1, 2], vec![1, 4]] {
            let d = Design::new(sizes).unwrap();
            let set: HashSet<Vec<usize>> = d.enumerate().unwrap().map(|a| a.into_labels()).collect();
            assert_eq!(set.len() as u64, d.assignment_count_u64().unwrap());
            for labels in &set {
                assert!(Assignment::new(&d, labels.clone()).is_ok());
            }
        }
    }

    #[test]
    fn visit_matches_iterator() {
        let d = Design::new(vec![2, 1, 2]).unwrap();
        let mut visited = Vec::new();
        d.enumerate().unwrap().visit(|l| visited.push(l.to_vec()));
        let iterated: Vec<_> = d.enumerate().unwrap().map(|a| a.into_labels()).collect();
        assert_eq!(visited, iterated);
    }

    #[test]
    fn cap_is_enforced() {
        let d = Design::new(vec![10, 10, 10]).unwrap();
        assert!(matches!(d.enumerate(), Err(Error::CapExceeded { .. })));
        let d = Design::new(vec![2, 2]).unwrap();
        assert!(d.enumerate_with_cap(5).is_err());
        assert_eq!(d.enumerate_with_cap(6).unwrap().len(), 6);
    }

    #[test]
    fn two_unit_design_draws_both_assignments() {
        let d = Design::new(vec![1, 1]).unwrap();
        let mut rng = stream(3);
        let mut first = 0usize;
        let draws = 20_000;
        for _ in 0..draws {
            if d.sample_assignment(&mut rng).labels()[0] == 0 {
                first += 1;
            }
        }
        let freq = first as f64 / draws as f64;
        assert!((freq - 0.5).abs() < 0.02, "{freq}");
    }

    #[test]
    fn sampled_assignments_are_uniform_over_classes() {
        let d = Design::new(vec![2, 2]).unwrap();
        let mut rng = stream(11);
        let draws = 60_000;
        let mut freq: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..draws {
            *freq.entry(d.sample_assignment(&mut rng).into_labels()).or_default() += 1;
        }
        assert_eq!(freq.len(), 6);
        for (labels, c) in freq {
            let f = c as f64 / draws as f64;
            assert!((f - 1.0 / 6.0).abs() < 0.01, "{labels:?}: {f}");
        }
    }

    #[test]
    fn sampled_marginals_are_uniform() {
        let d = Design::new(vec![3, 3, 3]).unwrap();
        assert_eq!(d.assignment_count_u64().unwrap(), 1680);
        let mut rng = stream(5);
        let draws = 90_000;
        let mut counts = vec![[0usize; 3]; 9];
        for _ in 0..draws {
            for (i, &l) in d.sample_assignment(&mut rng).labels().iter().enumerate() {
                counts[i][l] += 1;
            }
        }
        // Exact marginals from enumeration.
        let mut exact = vec![[0usize; 3]; 9];
        d.enumerate().unwrap().visit(|l| {
            for (i, &x) in l.iter().enumerate() {
                exact[i][x] += 1;
            }
        });
        for i in 0..9 {
            for j in 0..3 {
                let e = exact[i][j] as f64 / 1680.0;
                assert!((e - 1.0 / 3.0).abs() < 1e-12);
                let f = counts[i][j] as f64 / draws as f64;
                assert!((f - e).abs() < 0.01, "unit {i} arm {j}: {f}");
            }
        }
    }

    /// Pearson goodness of fit of sampled assignment classes must not reject
    /// uniformity at level 1e-4.
    #[test]
    fn sampling_passes_goodness_of_fit() {
        use crate::asymptotics::chisq_sf;
        for sizes in [vec![2, 2], vec![2, 2, 1], vec![3, 2], vec![2, 1, 1, 1]] {
            let d = Design::new(sizes).unwrap();
            let classes = d.assignment_count_u64().unwrap() as usize;
            assert!(classes <= 100);
            let index: HashMap<Vec<usize>, usize> =
                d.enumerate().unwrap().enumerate().map(|(k, a)| (a.into_labels(), k)).collect();
            let draws = 50_000;
            let mut counts = vec![0usize; classes];
            let mut rng = stream(classes as u64);
            for _ in 0..draws {
                counts[index[d.sample_assignment(&mut rng).labels()]] += 1;
            }
            let expected = draws as f64 / classes as f64;
            let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
            let p = chisq_sf(chi2, (classes - 1) as f64);
            assert!(p > 1e-4, "{:?}: chi2 = {chi2}, p = {p}", d.group_sizes());
        }
    }

    #[test]
    fn assignment_validation() {
        let d = Design::new(vec![2, 1]).unwrap();
        assert!(Assignment::new(&d, vec![0, 1, 0]).is_ok());
        assert!(Assignment::new(&d, vec![0, 1, 1]).is_err());
        assert!(Assignment::new(&d, vec![0, 1]).is_err());
        assert!(Assignment::new(&d, vec![0, 2, 0]).is_err());
    }
}
