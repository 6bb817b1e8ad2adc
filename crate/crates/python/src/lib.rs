//! Python bindings: `import randex_py`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use randex::asymptotics::{build_context, mixture_tail, x2_null_mixture, DEFAULT_MIXTURE_DRAWS};
use randex::finitepop::{expected_ss, ms_gap, summarize_population, two_treatment_constants};
use randex::frt::{DegeneratePolicy, Mode};
use randex::scenarios::{self, Example, StudyConfig};
use randex::Statistic;

create_exception!(randex_py, RandexError, PyValueError);

fn err(e: randex::Error) -> PyErr {
    RandexError::new_err(e.to_string())
}

fn statistic(name: &str) -> PyResult<Statistic> {
    Statistic::from_name(name).map_err(err)
}

/// Group sizes of a completely randomized experiment.
#[pyclass(frozen, module = "randex_py")]
struct Design(randex::Design);

#[pymethods]
impl Design {
    #[new]
    fn new(sizes: Vec<usize>) -> PyResult<Self> {
        randex::Design::new(sizes).map(Design).map_err(err)
    }

    #[getter]
    fn group_sizes(&self) -> Vec<usize> {
        self.0.group_sizes().to_vec()
    }

    #[getter]
    fn units(&self) -> usize {
        self.0.units()
    }

    #[getter]
    fn arms(&self) -> usize {
        self.0.arms()
    }

    /// Number of distinct assignments, as a decimal string when it does not
    /// fit in 64 bits.
    fn assignment_count(&self) -> String {
        self.0.assignment_count().to_string()
    }

    fn __repr__(&self) -> String {
        format!("Design({:?})", self.0.group_sizes())
    }
}

/// Observed outcomes with zero-based arm labels.
#[pyclass(frozen, module = "randex_py")]
struct ObservedDataset(randex::ObservedDataset);

#[pymethods]
impl ObservedDataset {
    #[new]
    fn new(outcomes: Vec<f64>, treatments: Vec<usize>) -> PyResult<Self> {
        randex::ObservedDataset::new(outcomes, treatments).map(ObservedDataset).map_err(err)
    }

    #[staticmethod]
    fn from_groups(groups: Vec<Vec<f64>>) -> PyResult<Self> {
        randex::ObservedDataset::from_groups(&groups).map(ObservedDataset).map_err(err)
    }

    #[getter]
    fn outcomes(&self) -> Vec<f64> {
        self.0.outcomes().to_vec()
    }

    #[getter]
    fn treatments(&self) -> Vec<usize> {
        self.0.treatments().to_vec()
    }

    #[getter]
    fn design(&self) -> Design {
        Design(self.0.design().clone())
    }

    /// Value of `f`, `x2`, `t2`, `dim` or `pairwise-a-b` (zero-based).
    fn statistic(&self, name: &str) -> PyResult<f64> {
        statistic(name)?.evaluate(&self.0).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.units()
    }
}

/// Potential outcomes, one row per unit.
#[pyclass(frozen, module = "randex_py")]
struct PotentialOutcomeTable(randex::PotentialOutcomeTable);

#[pymethods]
impl PotentialOutcomeTable {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        randex::PotentialOutcomeTable::from_rows(&rows).map(PotentialOutcomeTable).map_err(err)
    }

    #[getter]
    fn units(&self) -> usize {
        self.0.units()
    }

    #[getter]
    fn arms(&self) -> usize {
        self.0.arms()
    }

    fn observe(&self, labels: Vec<usize>) -> PyResult<ObservedDataset> {
        self.0.observe_labels(&labels).map(ObservedDataset).map_err(err)
    }

    /// `(E(SSTre), E(SSRes))` over all assignments of `design`.
    fn expected_ss(&self, design: &Design) -> PyResult<(f64, f64)> {
        let e = expected_ss(&self.0, &design.0).map_err(err)?;
        Ok((e.ss_treatment, e.ss_residual))
    }

    /// `E(MSRes) - E(MSTre)`; requires equal column means.
    fn ms_gap(&self, design: &Design) -> PyResult<f64> {
        ms_gap(&self.0, &design.0).map_err(err)
    }

    /// `Δ`, the weighted spread of unit-level effects.
    fn delta(&self, design: &Design) -> PyResult<f64> {
        summarize_population(&self.0, &design.0).map(|s| s.delta).map_err(err)
    }

    /// `(C1, C2, var τ̂)` for two arms.
    fn two_arm_constants(&self, design: &Design) -> PyResult<(f64, f64, f64)> {
        let k = two_treatment_constants(&self.0, &design.0).map_err(err)?;
        Ok((k.c1, k.c2, k.var_tau))
    }

    /// Weights of the chi-square mixture limiting `X²`.
    fn mixture_weights(&self, design: &Design) -> PyResult<Vec<f64>> {
        let ctx = build_context(&self.0, &design.0).map_err(err)?;
        x2_null_mixture(&ctx).map(|m| m.weights).map_err(err)
    }

    /// Simulated `P(mixture ≥ a)` and its standard error.
    #[pyo3(signature = (design, a, seed, draws = DEFAULT_MIXTURE_DRAWS))]
    fn mixture_tail(&self, design: &Design, a: f64, seed: u64, draws: u64) -> PyResult<(f64, f64)> {
        let ctx = build_context(&self.0, &design.0).map_err(err)?;
        let mix = x2_null_mixture(&ctx).map_err(err)?;
        let t = mixture_tail(&mix, a, draws, seed);
        Ok((t.probability, t.std_error))
    }
}

#[pyclass(frozen, get_all, module = "randex_py")]
struct TestResult {
    statistic: String,
    observed: f64,
    p_value: f64,
    p_value_raw: f64,
    mode: String,
    replications: u64,
    extreme_count: u64,
    degenerate_replicates: u64,
    seed: u64,
}

#[pymethods]
impl TestResult {
    fn __repr__(&self) -> String {
        format!(
            "TestResult(statistic={:?}, observed={}, p_value={}, mode={:?}, replications={})",
            self.statistic, self.observed, self.p_value, self.mode, self.replications
        )
    }
}

/// Fisher randomization test. `mode` is `"mc"` or `"exact"`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (data, statistic_name, mode = "mc", replications = 2000, seed = None, degenerate = "count", cap = randex::design::DEFAULT_ENUMERATION_CAP))]
fn run_frt(
    py: Python<'_>,
    data: &ObservedDataset,
    statistic_name: &str,
    mode: &str,
    replications: u64,
    seed: Option<u64>,
    degenerate: &str,
    cap: u64,
) -> PyResult<TestResult> {
    let stat = statistic(statistic_name)?;
    let mut config = match mode {
        "mc" => {
            let seed = seed.ok_or_else(|| RandexError::new_err("Monte Carlo mode needs a seed"))?;
            randex::FrtConfig::monte_carlo(stat, replications, seed)
        }
        "exact" => randex::FrtConfig::exact(stat),
        other => return Err(RandexError::new_err(format!("unknown mode `{other}`"))),
    };
    config.enumeration_cap = cap;
    config.degenerate_policy = match degenerate {
        "count" => DegeneratePolicy::CountAsExtreme,
        "skip" => DegeneratePolicy::Skip,
        other => return Err(RandexError::new_err(format!("unknown degenerate policy `{other}`"))),
    };
    let r = py.detach(|| randex::run_frt(&data.0, &config)).map_err(err)?;
    Ok(TestResult {
        statistic: r.statistic.name(),
        observed: r.observed,
        p_value: r.p_value,
        p_value_raw: r.p_value_raw,
        mode: match r.mode {
            Mode::Exact => "exact".into(),
            Mode::MonteCarlo => "mc".into(),
        },
        replications: r.replications,
        extreme_count: r.extreme_count,
        degenerate_replicates: r.degenerate_replicates,
        seed: r.seed,
    })
}

/// Bundled observed dataset, e.g. `"montgomery"`.
#[pyfunction]
fn load_example(name: &str) -> PyResult<ObservedDataset> {
    match scenarios::load_example(name).map_err(err)? {
        Example::Dataset(d) => Ok(ObservedDataset(d)),
        Example::Summary(_) => Err(RandexError::new_err(format!("`{name}` has group summaries only"))),
    }
}

/// Ids of the built-in scenarios.
#[pyfunction]
fn scenario_ids() -> Vec<String> {
    scenarios::builtin_scenarios().iter().map(|e| e.id().to_string()).collect()
}

/// Rejection rates for one design of a built-in scenario, as
/// `(statistic, rate, std_error)` triples from add-one p-values.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (scenario, design_index, statistics, seed, replications = 2000, draws = 2000, alpha = 0.05))]
fn rejection_rates(
    py: Python<'_>,
    scenario: &str,
    design_index: usize,
    statistics: Vec<String>,
    seed: u64,
    replications: usize,
    draws: u64,
    alpha: f64,
) -> PyResult<Vec<(String, f64, f64)>> {
    let spec = scenarios::find_scenario(scenario).map_err(err)?;
    let stats = statistics.iter().map(|s| statistic(s)).collect::<PyResult<Vec<_>>>()?;
    let config = StudyConfig { replications, draws, alpha };
    let results = py.detach(|| scenarios::run_study(&spec, design_index, &stats, &config, seed)).map_err(err)?;
    Ok(results.into_iter().map(|r| (r.statistic.name(), r.add_one.rate, r.add_one.std_error)).collect())
}

#[pymodule]
fn randex_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RandexError", m.py().get_type::<RandexError>())?;
    m.add_class::<Design>()?;
    m.add_class::<ObservedDataset>()?;
    m.add_class::<PotentialOutcomeTable>()?;
    m.add_class::<TestResult>()?;
    m.add_function(wrap_pyfunction!(run_frt, m)?)?;
    m.add_function(wrap_pyfunction!(load_example, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_ids, m)?)?;
    m.add_function(wrap_pyfunction!(rejection_rates, m)?)?;
    Ok(())
}
