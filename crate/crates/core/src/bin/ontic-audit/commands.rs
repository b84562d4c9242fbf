use std::path::Path;

use serde::Serialize;

use ontic::distinguish::{
    is_antidistinguishing, pbr_measurement, pbr_states, perturbation_robustness, single_shot_discrimination,
    PerturbationReport,
};
use ontic::gudder::{
    build_gudder, canonical_modification, overlap_trajectory, ModifiedMeasure, TrajectoryRow,
};
use ontic::mkc::{
    finite_precision_report, generate_mkc, tail_diagnostic, theorem3_set, Coverage, FinitePrecisionReport,
    IncompatibilityScan, MkcContextSet, TailRow, Theorem3Report,
};
use ontic::ontic::{
    check_psi_determinate, is_psi_ontic_with, sample_born_frequencies, validate_model_with, DistanceMethod,
    EpistemicModel, EpistemicRef, OnticModel, OnticVerdict, Residual,
};
use ontic::par::Execution;
use ontic::product::{ContextList, ProductModel};
use ontic::quantum::{
    fidelity, random_context, CMatrix, Observable, Povm, Preparation, PureState, Tolerances, C64,
};
use ontic::seed::{self, stream};

use crate::config::{self, GudderFile, Measurement, ModelSpec, RunConfig};
use crate::output::Outputs;
use crate::Failure;

/// Largest ontic space materialized for Born-rule validation.
const MATERIALIZE_LIMIT: u64 = 6561;

/// Slack for comparisons between quantities equal in exact arithmetic.
const SLACK: f64 = 1e-12;

pub struct Run<'a> {
    pub config: &'a RunConfig,
    pub config_path: &'a Path,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub exec: Execution,
}

pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub outputs: Outputs,
}

impl Run<'_> {
    fn seed(&self) -> Result<u64, Failure> {
        self.seed.or(self.config.seed).ok_or_else(|| {
            Failure::Usage("this command is stochastic: pass --seed or set `seed` in the config".into())
        })
    }

    fn tol(&self, default: f64) -> Result<f64, Failure> {
        let tol = self.tol.or(self.config.tol).unwrap_or(default);
        if tol > 0.0 && tol.is_finite() {
            Ok(tol)
        } else {
            Err(Failure::Usage(format!("tolerance must be positive, got {tol}")))
        }
    }

    fn section<'c, T>(&self, s: &'c Option<T>, name: &str) -> Result<&'c T, Failure> {
        s.as_ref()
            .ok_or_else(|| Failure::Usage(format!("config has no `{name}` section")))
    }
}

enum Built {
    Product(ProductModel),
    Ontic(OnticModel),
}

impl Built {
    fn ontic(self) -> Result<OnticModel, Failure> {
        match self {
            Built::Product(p) => Ok(p.materialize(MATERIALIZE_LIMIT)?),
            Built::Ontic(o) => Ok(o),
        }
    }
}

fn random_targets(dim: usize, count: usize, seed: u64) -> Result<Vec<ontic::quantum::Context>, Failure> {
    (0..count)
        .map(|i| {
            Ok(
                random_context(dim, seed::derive(seed, &[stream::CONTEXTS, i as u64]))?
                    .relabel(format!("target-{i}")),
            )
        })
        .collect()
}

fn build_model(run: &Run, spec: &ModelSpec, index: u64) -> Result<Built, Failure> {
    match spec {
        ModelSpec::Gudder {
            dim,
            preparations,
            contexts_per_state,
        } => {
            let seed = run.seed()?;
            let preps = config::named_states(preparations)?;
            let mut list = ContextList::empty(*dim)?;
            for (i, (_, psi)) in preps.iter().enumerate() {
                list.ensure_containing(psi, *contexts_per_state, seed::derive(seed, &[index, i as u64]))?;
            }
            Ok(Built::Product(
                build_gudder(list, preps)?.with_execution(run.exec),
            ))
        }
        ModelSpec::GudderFile { path } => {
            let path = config::resolve(run.config_path, path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
            let file: GudderFile = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("malformed model {}: {e}", path.display())))?;
            let list = file.context_list()?;
            let preps = config::named_states(&file.preparations)?;
            Ok(Built::Product(
                build_gudder(list, preps)?.with_execution(run.exec),
            ))
        }
        ModelSpec::OnticFile { path } => {
            let path = config::resolve(run.config_path, path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
            let model = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("malformed model {}: {e}", path.display())))?;
            Ok(Built::Ontic(model))
        }
        ModelSpec::Mkc {
            dim,
            preparations,
            targets,
            epsilon,
            tau,
            budget,
        } => {
            let seed = seed::derive(run.seed()?, &[index]);
            let set = generate_mkc(
                &random_targets(*dim, *targets, seed)?,
                *epsilon,
                *tau,
                seed,
                *budget,
            )?;
            let preps = config::named_states(preparations)?;
            Ok(Built::Product(
                build_gudder(set.context_list()?, preps)?.with_execution(run.exec),
            ))
        }
    }
}

#[derive(Serialize)]
struct ValidationSummary<'a> {
    tol: f64,
    max_residual: f64,
    passed: bool,
    worst: Option<&'a Residual>,
    ontic_states: usize,
    frequency_shots: Option<u64>,
    frequencies_passed: Option<bool>,
}

pub fn validate(run: &Run) -> Result<Outcome, Failure> {
    let section = run.section(&run.config.validate, "validate")?;
    let tol = run.tol(1e-10)?;
    let model = build_model(run, &section.model, stream::CONTEXTS)?.ontic()?;
    let report = validate_model_with(run.exec, &model, tol)?;
    let mut outputs = Outputs::default();
    outputs.csv("residuals.csv", &report.residuals)?;
    let frequencies = match section.shots {
        Some(shots) => {
            let f = sample_born_frequencies(
                run.exec,
                &model,
                shots,
                seed::derive(run.seed()?, &[stream::SAMPLING]),
            )?;
            outputs.csv("frequencies.csv", &f.rows)?;
            Some(f)
        }
        None => None,
    };
    let frequencies_passed = frequencies.as_ref().map(|f| f.passed);
    outputs.json(
        "validation.json",
        &ValidationSummary {
            tol,
            max_residual: report.max_residual,
            passed: report.passed,
            worst: report.worst(),
            ontic_states: model.space.len(),
            frequency_shots: section.shots,
            frequencies_passed,
        },
    )?;
    let passed = report.passed && frequencies_passed.unwrap_or(true);
    let worst = report
        .worst()
        .map(|r| format!(" (worst: {}/{}/{})", r.preparation, r.measurement, r.outcome))
        .unwrap_or_default();
    Ok(Outcome {
        passed,
        summary: format!(
            "max residual {:.3e} against tol {tol:.1e}{worst}",
            report.max_residual
        ),
        outputs,
    })
}

#[derive(Serialize)]
struct TrajectorySummary {
    fidelity: f64,
    rows: Vec<TrajectoryCheck>,
    final_k: usize,
    final_distance: f64,
    gap: f64,
    verdict: OnticVerdict,
    checks_passed: bool,
}

#[derive(Serialize)]
struct TrajectoryCheck {
    k: usize,
    exact_tv: Option<f64>,
    /// `1 - F^k`.
    closed_form_floor: f64,
    floor_holds: Option<bool>,
    bound_below_exact: Option<bool>,
}

#[derive(Serialize)]
struct Theorem3Summary {
    scan: IncompatibilityScan,
    reports: Vec<Theorem3Report>,
    checks_passed: bool,
}

pub fn onticity(run: &Run) -> Result<Outcome, Failure> {
    let section = run.section(&run.config.onticity, "onticity")?;
    if section.gudder.is_none() && section.mkc.is_none() {
        return Err(Failure::Usage("`onticity` needs a `gudder` or `mkc` grid".into()));
    }
    let tol = run.tol(1e-12)?;
    let seed = run.seed()?;
    let mut outputs = Outputs::default();
    let mut passed = true;
    let mut summary = Vec::new();
    if let Some(g) = &section.gudder {
        let (psi, phi) = (g.psi.state()?, g.phi.state()?);
        let f = fidelity(&psi, &phi)?;
        let mut list = ContextList::empty(g.dim)?;
        let rows: Vec<TrajectoryRow> = overlap_trajectory(
            run.exec,
            &psi,
            &phi,
            &g.ks,
            &mut list,
            seed::derive(seed, &[stream::CONTEXTS]),
        )?;
        let checks: Vec<TrajectoryCheck> = rows
            .iter()
            .map(|r| {
                let floor = 1.0 - f.powi(r.k as i32);
                TrajectoryCheck {
                    k: r.k,
                    exact_tv: r.exact_tv,
                    closed_form_floor: floor,
                    floor_holds: r.exact_tv.map(|tv| tv >= floor - SLACK),
                    bound_below_exact: r.exact_tv.map(|tv| r.tv_lower_bound <= tv + SLACK),
                }
            })
            .collect();
        let ok = checks
            .iter()
            .all(|c| c.floor_holds != Some(false) && c.bound_below_exact != Some(false));
        let last = rows
            .iter()
            .max_by_key(|r| r.k)
            .ok_or_else(|| Failure::Usage("`ks` is empty".into()))?;
        let distance = last.exact_tv.unwrap_or(last.tv_lower_bound);
        let verdict = if distance >= 1.0 - tol {
            OnticVerdict::PsiOntic
        } else {
            OnticVerdict::PsiEpistemic
        };
        summary.push(format!(
            "gudder k={} distance {distance:.6} ({verdict:?})",
            last.k
        ));
        outputs.csv("trajectory.csv", &rows)?;
        outputs.json(
            "onticity.json",
            &TrajectorySummary {
                fidelity: f,
                rows: checks,
                final_k: last.k,
                final_distance: distance,
                gap: 1.0 - distance,
                verdict,
                checks_passed: ok,
            },
        )?;
        passed &= ok;
    }
    if let Some(m) = &section.mkc {
        let (psi, phi) = (m.psi.state()?, m.phi.state()?);
        let mkc_seed = seed::derive(seed, &[stream::MKC]);
        let mut set = generate_mkc(
            &random_targets(m.dim, m.targets, mkc_seed)?,
            m.epsilon,
            m.tau,
            mkc_seed,
            m.budget,
        )?;
        let t3_seed = seed::derive(seed, &[stream::THEOREM3]);
        let rows: Vec<TailRow> = tail_diagnostic(&psi, &phi, &m.ns, &m.depths, &mut set, t3_seed, m.budget)?;
        let depth = m.depths.iter().copied().max().unwrap_or(0);
        let reports = if depth == 0 {
            Vec::new()
        } else {
            m.ns.iter()
                .map(|&n| theorem3_set(&psi, n, depth, &mut set, Some(&phi), t3_seed, m.budget))
                .collect::<ontic::Result<Vec<_>>>()?
        };
        let scan = set.incompatibility_scan(run.exec);
        let ok = scan.passed && reports.iter().all(|r| r.bound_holds && r.exceeds_euler_product);
        summary.push(format!(
            "theorem3 {} grid rows, {} contexts, bounds {}",
            rows.len(),
            set.len(),
            if ok { "hold" } else { "FAIL" }
        ));
        outputs.csv("theorem3.csv", &rows)?;
        outputs.json(
            "theorem3.json",
            &Theorem3Summary {
                scan,
                reports,
                checks_passed: ok,
            },
        )?;
        passed &= ok;
    }
    Ok(Outcome {
        passed,
        summary: summary.join("; "),
        outputs,
    })
}

#[derive(Serialize)]
struct SupportRow<'a> {
    label: &'a str,
    measure: f64,
    union_bound: f64,
}

#[derive(Serialize)]
struct DeterminateSummary<'a> {
    k: usize,
    tol: f64,
    contexts: usize,
    measures: &'a [ModifiedMeasure],
    report: ontic::ontic::DeterminacyReport,
    onticity_tol: f64,
    min_distance: Option<f64>,
    onticity_verdict: OnticVerdict,
    implication_holds: bool,
}

pub fn determinate(run: &Run) -> Result<Outcome, Failure> {
    let section = run.section(&run.config.determinate, "determinate")?;
    let seed = run.seed()?;
    let mut states = config::named_states(&section.states)?;
    let mut rng = seed::rng(seed::derive(seed, &[stream::PREPARATIONS]));
    for i in 0..section.random_states {
        states.push((format!("psi{i}"), PureState::random(section.dim, &mut rng)?));
    }
    let mut list = ContextList::empty(section.dim)?;
    let cm = canonical_modification(
        &states,
        section.k,
        &mut list,
        seed::derive(seed, &[stream::CONTEXTS]),
        None,
    )?;
    let default_tol = cm
        .measures
        .iter()
        .map(|m| 1.0 - m.union_bound)
        .fold(0.0, f64::max);
    let tol = run.tol(default_tol.max(f64::MIN_POSITIVE))?;
    let contexts = list.len();
    let model = build_gudder(list, states)?.with_execution(run.exec);
    let report = check_psi_determinate(&model, &cm.assignment, tol)?;
    let ontic = is_psi_ontic_with(run.exec, &model, 2.0 * tol)?;
    let implication_holds = !report.passed || ontic.verdict == OnticVerdict::PsiOntic;
    let passed = report.passed && implication_holds;
    let mut outputs = Outputs::default();
    let rows: Vec<SupportRow> = cm
        .measures
        .iter()
        .map(|m| SupportRow {
            label: &m.label,
            measure: m.measure,
            union_bound: m.union_bound,
        })
        .collect();
    outputs.csv("supports.csv", &rows)?;
    let summary = format!(
        "{} states, k={}, determinate at tol {tol:.3e}: {}, ontic at {:.3e}: {:?}",
        cm.measures.len(),
        cm.k,
        report.passed,
        2.0 * tol,
        ontic.verdict
    );
    outputs.json(
        "determinate.json",
        &DeterminateSummary {
            k: cm.k,
            tol,
            contexts,
            measures: &cm.measures,
            report,
            onticity_tol: 2.0 * tol,
            min_distance: ontic.min_distance,
            onticity_verdict: ontic.verdict,
            implication_holds,
        },
    )?;
    Ok(Outcome {
        passed,
        summary,
        outputs,
    })
}

#[derive(Serialize)]
struct MkcSummary {
    members: usize,
    epsilon: f64,
    tau: f64,
    max_defect: f64,
    scan: IncompatibilityScan,
    finite_precision: Option<FiniteSummary>,
}

#[derive(Serialize)]
struct FiniteSummary {
    bound: f64,
    max_analytic_l1: f64,
    max_sampled_l1: Option<f64>,
    within_analytic: bool,
    within_sampled: Option<bool>,
    ontic_states: Option<u64>,
    psi_determinate: bool,
    shots: Option<u64>,
}

pub fn mkc_gen(run: &Run) -> Result<Outcome, Failure> {
    let section = run.section(&run.config.mkc_gen, "mkc-gen")?;
    let seed = run.seed()?;
    let mkc_seed = seed::derive(seed, &[stream::MKC]);
    let targets = random_targets(section.dim, section.targets, mkc_seed)?;
    let set: MkcContextSet = generate_mkc(&targets, section.epsilon, section.tau, mkc_seed, section.budget)?;
    let scan = set.incompatibility_scan(run.exec);
    let mut outputs = Outputs::default();
    outputs.json("mkc_set.json", &set)?;
    outputs.csv::<Coverage>("coverage.csv", set.coverage())?;
    let report: Option<FinitePrecisionReport> = if section.preparations > 0 {
        let mut rng = seed::rng(seed::derive(seed, &[stream::PREPARATIONS]));
        let preps = (0..section.preparations)
            .map(|i| {
                Ok(Preparation::pure(
                    format!("p{i}"),
                    PureState::random(section.dim, &mut rng)?,
                ))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let spectrum: Vec<f64> = (0..section.dim).map(|v| v as f64).collect();
        let observables = targets
            .iter()
            .map(|t| {
                Ok((
                    format!("A-{}", t.label()),
                    Observable::from_spectrum(&spectrum, t)?,
                ))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let r = finite_precision_report(
            run.exec,
            &set,
            &preps,
            &observables,
            section.shots,
            seed::derive(seed, &[stream::SAMPLING]),
        )?;
        outputs.csv("deviation.csv", &r.rows)?;
        Some(r)
    } else {
        None
    };
    let max_defect = set.coverage().iter().map(|c| c.defect).fold(0.0, f64::max);
    let passed = scan.passed
        && report
            .as_ref()
            .is_none_or(|r| r.within_analytic && r.within_sampled != Some(false));
    let summary = format!(
        "{} contexts, max defect {max_defect:.3e}, incompatibility scan {}",
        set.len(),
        if scan.passed { "passed" } else { "FAILED" }
    );
    outputs.json(
        "mkc_report.json",
        &MkcSummary {
            members: set.len(),
            epsilon: set.epsilon(),
            tau: set.tau(),
            max_defect,
            scan,
            finite_precision: report.as_ref().map(|r| FiniteSummary {
                bound: r.bound,
                max_analytic_l1: r.max_analytic_l1,
                max_sampled_l1: r.max_sampled_l1,
                within_analytic: r.within_analytic,
                within_sampled: r.within_sampled,
                ontic_states: r.ontic_states,
                psi_determinate: r.psi_determinate,
                shots: r.shots,
            }),
        },
    )?;
    Ok(Outcome {
        passed,
        summary,
        outputs,
    })
}

#[derive(Serialize)]
struct PerturbationRow {
    eta: f64,
    trial: usize,
    max_residual: f64,
}

#[derive(Serialize)]
struct PerturbationSummary {
    eta: f64,
    median: Option<f64>,
    min: Option<f64>,
    max: Option<f64>,
    slope: Option<f64>,
    all_positive: Option<bool>,
    error: Option<String>,
}

fn measurement(spec: &Measurement) -> Result<(Povm, Vec<PureState>), Failure> {
    match spec {
        Measurement::Pbr => Ok((pbr_measurement(), pbr_states())),
        Measurement::Custom { states, effects } => {
            let states = states.iter().map(|s| s.state()).collect::<Result<Vec<_>, _>>()?;
            let effects = effects
                .iter()
                .map(|rows| {
                    let n = rows.len();
                    if rows.iter().any(|r| r.len() != n) {
                        return Err(Failure::Usage("effect matrices must be square".into()));
                    }
                    Ok(CMatrix::from_fn(n, n, |i, j| {
                        C64::new(rows[i][j][0], rows[i][j][1])
                    }))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let outcomes = (0..effects.len()).map(|i| format!("a{i}")).collect();
            let povm = Povm::new("custom", outcomes, effects, &Tolerances::default())?;
            Ok((povm, states))
        }
    }
}

pub fn antidistinguish(run: &Run) -> Result<Outcome, Failure> {
    let section = run.section(&run.config.antidistinguish, "antidistinguish")?;
    let tol = run.tol(1e-10)?;
    let (povm, states) = measurement(&section.measurement)?;
    let cert = is_antidistinguishing(&povm, &states, tol)?;
    let mut outputs = Outputs::default();
    outputs.json("certificate.json", &cert)?;
    let mut passed = cert.valid;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    if !section.etas.is_empty() {
        let seed = run.seed()?;
        for (e, &eta) in section.etas.iter().enumerate() {
            let s = seed::derive(seed, &[stream::PERTURBATION, e as u64]);
            match perturbation_robustness(run.exec, &cert, eta, section.trials, s) {
                Ok(PerturbationReport {
                    max_residuals,
                    median,
                    min,
                    max,
                    slope,
                    all_positive,
                    ..
                }) => {
                    rows.extend(
                        max_residuals
                            .iter()
                            .enumerate()
                            .map(|(trial, &r)| PerturbationRow {
                                eta,
                                trial,
                                max_residual: r,
                            }),
                    );
                    if eta > 0.0 {
                        passed &= all_positive;
                    }
                    summaries.push(PerturbationSummary {
                        eta,
                        median: Some(median),
                        min: Some(min),
                        max: Some(max),
                        slope: Some(slope),
                        all_positive: Some(all_positive),
                        error: None,
                    });
                }
                Err(err @ ontic::Error::NonPhysicalPerturbation { .. }) => {
                    passed = false;
                    summaries.push(PerturbationSummary {
                        eta,
                        median: None,
                        min: None,
                        max: None,
                        slope: None,
                        all_positive: None,
                        error: Some(err.to_string()),
                    });
                }
                Err(err) => return Err(err.into()),
            }
        }
        outputs.csv("perturbation.csv", &rows)?;
        outputs.json("perturbation.json", &summaries)?;
    }
    Ok(Outcome {
        passed,
        summary: format!(
            "certificate {} (max residual {:.3e}), {} noise levels",
            if cert.valid { "valid" } else { "INVALID" },
            cert.max_residual,
            summaries.len()
        ),
        outputs,
    })
}

#[derive(Serialize)]
struct DiscriminationRow<'a> {
    model: usize,
    psi: &'a str,
    phi: &'a str,
    run: usize,
    method: DistanceMethod,
    shots: u64,
    empirical_rate: f64,
    analytic_rate: f64,
    band: f64,
}

fn discriminate_on<'a, M: EpistemicModel>(
    run: &Run,
    model: &M,
    index: usize,
    pairs: &'a [[String; 2]],
    shots: u64,
    runs: usize,
    seed: u64,
) -> Result<(Vec<DiscriminationRow<'a>>, bool), Failure> {
    let mut rows = Vec::new();
    let mut ok = true;
    for (p, [a, b]) in pairs.iter().enumerate() {
        for r in 0..runs {
            let s = seed::derive(seed, &[stream::DISCRIMINATION, index as u64, p as u64, r as u64]);
            let rep = single_shot_discrimination(
                run.exec,
                model,
                EpistemicRef::new(a, 0),
                EpistemicRef::new(b, 0),
                shots,
                s,
            )?;
            ok &= rep.within_ceiling;
            rows.push(DiscriminationRow {
                model: index,
                psi: a,
                phi: b,
                run: r,
                method: rep.method,
                shots: rep.shots,
                empirical_rate: rep.empirical_rate,
                analytic_rate: rep.analytic_rate,
                band: rep.band,
            });
        }
    }
    Ok((rows, ok))
}

pub fn discriminate(run: &Run) -> Result<Outcome, Failure> {
    let section = run.section(&run.config.discriminate, "discriminate")?;
    let seed = run.seed()?;
    let mut rows = Vec::new();
    let mut passed = true;
    for (i, spec) in section.models.iter().enumerate() {
        let (r, ok) = match build_model(run, spec, i as u64)? {
            Built::Product(m) => {
                discriminate_on(run, &m, i, &section.pairs, section.shots, section.runs, seed)?
            }
            Built::Ontic(m) => {
                discriminate_on(run, &m, i, &section.pairs, section.shots, section.runs, seed)?
            }
        };
        rows.extend(r);
        passed &= ok;
    }
    let above = rows
        .iter()
        .filter(|r| r.empirical_rate > r.analytic_rate + r.band)
        .count();
    let mut outputs = Outputs::default();
    outputs.csv("discrimination.csv", &rows)?;
    Ok(Outcome {
        passed,
        summary: format!("{} runs, {above} above the (1+TV)/2 + 4σ ceiling", rows.len()),
        outputs,
    })
}
