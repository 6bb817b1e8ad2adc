use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use randex::asymptotics::{asymptotic_pvalue, build_context, chisq_sf, f_sf, mixture_tails, x2_null_mixture};
use randex::finitepop::{expected_ss, ms_gap, summarize_population, two_treatment_constants};
use randex::frt::{run_frt, DegeneratePolicy, FrtConfig};
use randex::scenarios::{
    builtin_scenarios, design_seed, find_scenario, load_example, run_study, CatalogEntry, Example, ScenarioSpec,
    StudyConfig, StudyResult, HISTOGRAM_BINS,
};
use randex::stats::anova;
use randex::{Design, PotentialOutcomeTable, Statistic};
use serde::{Deserialize, Serialize};

use crate::args::{CatalogArgs, DegenerateArg, ModeArg, ReportArg, SimulateArgs, TestArgs, TheoryArgs};
use crate::document::{ResultDocument, SummaryDetails, TailRow, TestDetails, TheoryReport, Verification};
use crate::error::{CliError, Result};
use crate::input::{parse_dataset, parse_population, parse_sizes, read_file, LabeledDataset};

/// Relative tolerance for `--verify-enumerate`.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| CliError::Config("a seed is required: pass --seed or set RANDEX_SEED".into()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Resolves `f`, `x2`, `t2`, `dim` or `pairwise A B`, where `A` and `B`
/// are arm labels or 1-based arm numbers.
pub fn parse_statistic(words: &[String], labels: &[String]) -> Result<Statistic> {
    let name = words[0].to_ascii_lowercase();
    let arm = |w: &str| -> Result<usize> {
        if let Some(i) = labels.iter().position(|l| l == w) {
            return Ok(i);
        }
        match w.parse::<usize>() {
            Ok(k) if (1..=labels.len()).contains(&k) => Ok(k - 1),
            _ => Err(CliError::Config(format!("`{w}` is neither an arm label nor an arm number 1..{}", labels.len()))),
        }
    };
    match (name.as_str(), words.len()) {
        ("pairwise", 3) => {
            let (a, b) = (arm(&words[1])?, arm(&words[2])?);
            if a == b {
                return Err(CliError::Config("pairwise needs two different arms".into()));
            }
            Ok(Statistic::Pairwise(a, b))
        }
        ("pairwise", _) => Err(CliError::Config("usage: --statistic pairwise A B".into())),
        (_, 1) => match Statistic::from_name(&name)? {
            Statistic::Pairwise(..) => Err(CliError::Config("usage: --statistic pairwise A B".into())),
            s => Ok(s),
        },
        _ => Err(CliError::Config(format!("statistic `{name}` takes no arguments"))),
    }
}

fn display_statistic(s: Statistic) -> String {
    match s {
        Statistic::Pairwise(a, b) => format!("pairwise {} {}", a + 1, b + 1),
        s => s.name(),
    }
}

pub fn cmd_test(a: &TestArgs) -> Result<ResultDocument> {
    let source = match (&a.example, &a.input) {
        (Some(e), _) => format!("--example {e}"),
        (None, Some(p)) => p.display().to_string(),
        (None, None) => unreachable!("clap requires one"),
    };
    let dataset = match &a.example {
        Some(name) => match load_example(name)? {
            Example::Dataset(data) => {
                LabeledDataset { labels: (1..=data.arms()).map(|k| k.to_string()).collect(), data }
            }
            Example::Summary(s) => return summary_document(&format!("test {source}"), s),
        },
        None => parse_dataset(&read_file(a.input.as_deref().expect("clap requires one"))?)?,
    };
    let statistic = parse_statistic(&a.statistic, &dataset.labels)?;
    let policy = match a.degenerate {
        DegenerateArg::Count => DegeneratePolicy::CountAsExtreme,
        DegenerateArg::Skip => DegeneratePolicy::Skip,
    };
    let policy_word = match a.degenerate {
        DegenerateArg::Count => "count",
        DegenerateArg::Skip => "skip",
    };
    let (config, command, seed) = match a.mode {
        ModeArg::Mc => {
            let seed = require_seed(a.seed)?;
            let command = format!(
                "test {source} --statistic {} --mode mc --reps {} --degenerate {policy_word}",
                display_statistic(statistic),
                a.reps
            );
            let mut c = FrtConfig::monte_carlo(statistic, a.reps, seed);
            c.degenerate_policy = policy;
            (c, command, Some(seed))
        }
        ModeArg::Exact => {
            let command = format!(
                "test {source} --statistic {} --mode exact --cap {} --degenerate {policy_word}",
                display_statistic(statistic),
                a.cap
            );
            let c = FrtConfig { degenerate_policy: policy, enumeration_cap: a.cap, ..FrtConfig::exact(statistic) };
            (c, command, None)
        }
    };
    let result = run_frt(&dataset.data, &config)?;

    let mut doc = ResultDocument::new(command, seed);
    doc.statistic = Some(display_statistic(statistic));
    doc.observed_value = doc.finite("observed_value", result.observed);
    doc.p_frt = doc.finite("p_frt", result.p_value);
    // |τ̂| is referred to T², which can be undefined even when |τ̂| is not.
    doc.p_asymptotic = match asymptotic_pvalue(statistic, result.observed, &dataset.data) {
        Ok(p) => doc.finite("p_asymptotic", p),
        Err(e) => {
            doc.warnings.push(format!("no asymptotic p-value: {e}"));
            None
        }
    };
    doc.replications = Some(result.replications);
    doc.degenerate_replicates = Some(result.degenerate_replicates);
    if result.degenerate_replicates > 0 {
        let how = match policy {
            DegeneratePolicy::CountAsExtreme => "counted as extreme",
            DegeneratePolicy::Skip => "skipped",
        };
        doc.warnings.push(format!(
            "{} of {} replicates had an undefined statistic and were {how}",
            result.degenerate_replicates, result.replications
        ));
    }
    doc.labels = Some(dataset.labels);
    doc.test = Some(TestDetails {
        mode: result.mode,
        degenerate_policy: policy,
        group_sizes: dataset.data.design().group_sizes().to_vec(),
        extreme_count: result.extreme_count,
        p_frt_raw: result.p_value_raw,
    });
    Ok(doc)
}

fn summary_document(command: &str, s: randex::scenarios::SummaryOnly) -> Result<ResultDocument> {
    let (f, x2) = s.statistics();
    let n = s.total() as f64;
    let j = s.sizes.len() as f64;
    let mut doc = ResultDocument::new(command.to_string(), None);
    doc.warnings.push(format!(
        "`{}` is summary-only data: the randomization test needs unit-level outcomes, so p_frt is null",
        s.id
    ));
    doc.labels = Some(s.labels.clone());
    doc.summary = Some(SummaryDetails {
        group_sizes: s.sizes,
        means: s.means,
        variances: s.variances,
        f,
        x2,
        p_asymptotic_f: f_sf(f, j - 1.0, n - j),
        p_asymptotic_x2: chisq_sf(x2, j - 1.0),
        reported: s.reported,
    });
    Ok(doc)
}

fn verification(closed: &[f64], enumerated: Vec<f64>, assignments: u64) -> Verification {
    let max_relative_error = closed
        .iter()
        .zip(&enumerated)
        .map(|(c, e)| (c - e).abs() / c.abs().max(e.abs()).max(1e-300))
        .fold(0.0, f64::max);
    Verification {
        status: if max_relative_error <= VERIFY_TOLERANCE { "match" } else { "mismatch" }.into(),
        assignments,
        enumerated,
        max_relative_error,
    }
}

/// Averages of `f` over every assignment.
fn enumerate_means(
    pop: &PotentialOutcomeTable,
    design: &Design,
    cap: u64,
    width: usize,
    mut f: impl FnMut(&randex::ObservedDataset) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, u64)> {
    let assignments = design.enumerate_with_cap(cap)?;
    let total = assignments.len();
    let mut sums = vec![0.0; width];
    let mut failure = None;
    assignments.visit(|labels| {
        if failure.is_some() {
            return;
        }
        match pop.observe_labels(labels).map_err(CliError::from).and_then(|d| f(&d)) {
            Ok(v) => sums.iter_mut().zip(v).for_each(|(s, x)| *s += x),
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((sums.into_iter().map(|s| s / total as f64).collect(), total))
}

pub fn cmd_theory(a: &TheoryArgs) -> Result<ResultDocument> {
    let pop = parse_population(&read_file(&a.population)?)?;
    let design = Design::new(parse_sizes(&a.design)?)?;
    pop.check_design(&design)?;
    let sizes = design.group_sizes().to_vec();
    let report_word = match a.report {
        ReportArg::Expectations => "expectations",
        ReportArg::Msgap => "msgap",
        ReportArg::Constants => "constants",
        ReportArg::Mixture => "mixture",
    };
    let mut command = format!("theory {} --design {} --report {report_word}", a.population.display(), a.design);
    if a.verify_enumerate {
        write!(command, " --verify-enumerate --cap {}", a.cap).unwrap();
    }
    let seed = match a.report {
        ReportArg::Mixture => {
            write!(command, " --draws {}", a.draws).unwrap();
            Some(require_seed(a.seed)?)
        }
        _ => None,
    };
    let mut doc = ResultDocument::new(command, seed);
    let summary = summarize_population(&pop, &design)?;
    let report = match a.report {
        ReportArg::Expectations => {
            let e = expected_ss(&pop, &design)?;
            let verification = if a.verify_enumerate {
                let (avg, total) = enumerate_means(&pop, &design, a.cap, 2, |d| {
                    let an = anova(d)?;
                    Ok(vec![an.ss_treatment, an.ss_residual])
                })?;
                Some(verification(&[e.ss_treatment, e.ss_residual], avg, total))
            } else {
                None
            };
            TheoryReport::Expectations {
                design: sizes,
                means: summary.means.clone(),
                variances: summary.variances.clone(),
                delta: summary.delta,
                e_ss_treatment: e.ss_treatment,
                e_ss_residual: e.ss_residual,
                e_ms_treatment: e.ms_treatment(&design),
                e_ms_residual: e.ms_residual(&design),
                verification,
            }
        }
        ReportArg::Msgap => {
            let gap = ms_gap(&pop, &design)?;
            let verification = if a.verify_enumerate {
                let (avg, total) = enumerate_means(&pop, &design, a.cap, 1, |d| {
                    let an = anova(d)?;
                    Ok(vec![an.ms_residual - an.ms_treatment])
                })?;
                Some(verification(&[gap], avg, total))
            } else {
                None
            };
            if gap < 0.0 {
                doc.warnings
                    .push("negative gap: the F test is anti-conservative for this population and design".into());
            }
            TheoryReport::Msgap { design: sizes, delta: summary.delta, gap, verification }
        }
        ReportArg::Constants => {
            let k = two_treatment_constants(&pop, &design)?;
            let verification = if a.verify_enumerate {
                let (moments, total) = enumerate_means(&pop, &design, a.cap, 2, |d| {
                    let t = randex::stats::difference_in_means(d)?;
                    Ok(vec![t, t * t])
                })?;
                let var = moments[1] - moments[0] * moments[0];
                Some(verification(&[k.var_tau], vec![var], total))
            } else {
                None
            };
            TheoryReport::Constants { design: sizes, c1: k.c1, c2: k.c2, var_tau: k.var_tau, verification }
        }
        ReportArg::Mixture => {
            if a.verify_enumerate {
                doc.warnings.push("--verify-enumerate has no closed form to check for the mixture report".into());
            }
            let ctx = build_context(&pop, &design)?;
            let mix = x2_null_mixture(&ctx)?;
            let grid: Vec<f64> = (1..=24).map(|k| 0.5 * k as f64).collect();
            let df = (design.arms() - 1) as f64;
            let tails = mixture_tails(&mix, &grid, a.draws, seed.expect("mixture has a seed"));
            let rows: Vec<TailRow> = tails
                .iter()
                .map(|t| TailRow {
                    a: t.threshold,
                    chi_square: chisq_sf(t.threshold, df),
                    mixture: t.probability,
                    std_error: t.std_error,
                })
                .collect();
            doc.statistic = Some("x2".into());
            TheoryReport::Mixture {
                design: sizes,
                dominated: rows.iter().all(|r| r.mixture <= r.chi_square + 3.0 * r.std_error),
                weights: mix.weights,
                draws: a.draws,
                tails: rows,
            }
        }
    };
    doc.theory = Some(report);
    Ok(doc)
}

/// Scenario file: a `[scenario]` table and an optional `[study]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub study: StudyConfig,
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioFile> {
    let text = read_file(path)?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }?;
    Ok(parsed)
}

/// One simulated study with its document and histogram CSV.
#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub stem: String,
    pub document: ResultDocument,
    pub histogram_csv: String,
}

pub fn histogram_csv(counts: &[u64]) -> String {
    let mut s = String::from("bin_low,bin_high,count\n");
    let width = 1.0 / HISTOGRAM_BINS as f64;
    for (k, c) in counts.iter().enumerate() {
        writeln!(s, "{:.2},{:.2},{c}", k as f64 * width, (k + 1) as f64 * width).unwrap();
    }
    s
}

fn study_document(command: &str, seed: u64, r: StudyResult) -> ResultDocument {
    let mut doc = ResultDocument::new(command.to_string(), Some(seed));
    doc.statistic = Some(display_statistic(r.statistic));
    doc.replications = Some(r.replications as u64);
    doc.degenerate_replicates = Some(r.degenerate_replicates);
    if r.degenerate_replicates > 0 {
        doc.warnings.push(format!(
            "{} randomization replicates across the study had an undefined statistic and were counted as extreme",
            r.degenerate_replicates
        ));
    }
    doc.study = Some(r);
    doc
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<Vec<StudyOutput>> {
    let (file, source) = match (&a.scenario, &a.config) {
        (Some(id), _) => {
            (ScenarioFile { scenario: find_scenario(id)?, study: StudyConfig::default() }, format!("--scenario {id}"))
        }
        (None, Some(p)) => (load_scenario_file(p)?, format!("--config {}", p.display())),
        (None, None) => unreachable!("clap requires one"),
    };
    let spec = file.scenario;
    spec.validate()?;
    let mut cfg = file.study;
    if let Some(r) = a.reps {
        cfg.replications = r;
    }
    if let Some(d) = a.draws {
        cfg.draws = d;
    }
    if let Some(al) = a.alpha {
        cfg.alpha = al;
    }
    cfg.validate()?;
    let statistics = a
        .stats
        .split(',')
        .map(|s| Statistic::from_name(s.trim()).map_err(CliError::from))
        .collect::<Result<Vec<_>>>()?;
    let seed = require_seed(a.seed)?;
    let designs: Vec<usize> =
        (0..spec.designs.len()).filter(|&d| a.n.is_none_or(|n| spec.designs[d].iter().sum::<usize>() == n)).collect();
    if designs.is_empty() {
        return Err(CliError::Config(format!(
            "scenario `{}` has no design with N = {}",
            spec.id,
            a.n.unwrap_or_default()
        )));
    }
    let mut command = format!(
        "simulate {source} --stats {} --reps {} --draws {} --alpha {}",
        statistics.iter().map(Statistic::name).collect::<Vec<_>>().join(","),
        cfg.replications,
        cfg.draws,
        cfg.alpha
    );
    if let Some(n) = a.n {
        write!(command, " --n {n}").unwrap();
    }
    let mut out = Vec::new();
    for d in designs {
        let results = run_study(&spec, d, &statistics, &cfg, design_seed(seed, d))?;
        for r in results {
            let sizes: Vec<String> = r.design.iter().map(usize::to_string).collect();
            let stem = format!("{}_{}_{}", spec.id, sizes.join("-"), r.statistic.name());
            let histogram_csv = histogram_csv(&r.add_one.histogram);
            out.push(StudyOutput { stem, document: study_document(&command, seed, r), histogram_csv });
        }
    }
    Ok(out)
}

/// Writes `<stem>.json` and `<stem>_hist.csv` for every study.
pub fn write_study_outputs(dir: &Path, outputs: &[StudyOutput]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    let mut written = Vec::new();
    for o in outputs {
        let json = dir.join(format!("{}.json", o.stem));
        write_text(&json, &o.document.to_json())?;
        let csv = dir.join(format!("{}_hist.csv", o.stem));
        write_text(&csv, &o.histogram_csv)?;
        written.push(json);
        written.push(csv);
    }
    Ok(written)
}

pub fn cmd_catalog(a: &CatalogArgs) -> Result<String> {
    let catalog = builtin_scenarios();
    match &a.id {
        None => {
            let mut s = String::new();
            for e in &catalog {
                match e {
                    CatalogEntry::Generated(spec) => {
                        let designs: Vec<String> = spec
                            .designs
                            .iter()
                            .map(|d| d.iter().map(usize::to_string).collect::<Vec<_>>().join("-"))
                            .collect();
                        writeln!(s, "{:<32} {:<24} {}", spec.id, designs.join(" "), spec.description).unwrap();
                    }
                    CatalogEntry::Fixed(d) => {
                        writeln!(s, "{:<32} {:<24} {} (fixed dataset)", d.id, "-", d.description).unwrap();
                    }
                }
            }
            Ok(s)
        }
        Some(id) => {
            let file = ScenarioFile { scenario: find_scenario(id)?, study: StudyConfig::default() };
            toml::to_string(&file).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

pub fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
