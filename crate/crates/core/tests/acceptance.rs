//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ontic::distinguish::{
    is_antidistinguishing, pbr_measurement, pbr_states, perturbation_robustness, single_shot_discrimination,
};
use ontic::gudder::{build_gudder, canonical_modification, overlap_trajectory};
use ontic::mkc::euler::{euler_function, solve_qn};
use ontic::mkc::theorem3::theorem3_set;
use ontic::mkc::{finite_precision_report, generate_mkc, snap_observable, MkcContextSet};
use ontic::ontic::{
    check_psi_determinate, is_psi_ontic_with, sample_born_frequencies, validate_model_with, EpistemicRef,
    OnticVerdict,
};
use ontic::par::Execution;
use ontic::product::{ContextList, ProductModel};
use ontic::quantum::{random_context, Context, Observable, Povm, Preparation, PureState, Tolerances, C64};
use ontic::seed::{self, stream};

use common::{
    born_weights, brute_product_tv, configs_dir, half_fidelity_pair, load_gudder_file, reference_euler,
};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || {
        format!("runtime {:.2} s exceeds {limit} s", elapsed.as_secs_f64())
    })
}

fn fidelity(a: &PureState, b: &PureState) -> f64 {
    let mut z = C64::new(0.0, 0.0);
    for (x, y) in a.amplitudes().iter().zip(b.amplitudes().iter()) {
        z += x.conj() * y;
    }
    z.norm_sqr()
}

fn targets(dim: usize, count: usize, seed: u64) -> Vec<Context> {
    (0..count)
        .map(|i| random_context(dim, seed::derive(seed, &[stream::CONTEXTS, i as u64])).unwrap())
        .collect()
}

fn born_reproduction() -> Outcome {
    let start = Instant::now();
    let (psi, phi) = half_fidelity_pair();
    let mut generated = ContextList::empty(3).unwrap();
    generated.ensure_containing(&psi, 3, 101).unwrap();
    generated.ensure_containing(&phi, 3, 102).unwrap();
    let models = [
        (
            "gudder-d3",
            load_gudder_file(&configs_dir().join("models/gudder-d3.json")),
        ),
        (
            "generated",
            (
                generated,
                vec![("psi".to_string(), psi), ("phi".to_string(), phi)],
            ),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, (list, preps)) in models {
        // the marginal on each context is the Born distribution
        let product = build_gudder(list.clone(), preps.clone()).map_err(|e| e.to_string())?;
        for (label, state) in &preps {
            let mu = product.measure(label).map_err(|e| e.to_string())?;
            for (c, ctx) in list.contexts().iter().enumerate() {
                for (w, b) in mu.weights()[c].iter().zip(born_weights(state, ctx)) {
                    ensure((w - b).abs() < 1e-12, || {
                        format!("{name}: marginal {w} vs Born {b}")
                    })?;
                }
            }
        }
        let model = product.materialize(6561).map_err(|e| e.to_string())?;
        let report = validate_model_with(Execution::Parallel, &model, 1e-10).map_err(|e| e.to_string())?;
        ensure(report.passed, || {
            format!("{name}: max residual {:e}", report.max_residual)
        })?;
        worst = worst.max(report.max_residual);
        let freq =
            sample_born_frequencies(Execution::Parallel, &model, 100_000, 7).map_err(|e| e.to_string())?;
        for row in &freq.rows {
            let p = row.born.clamp(0.0, 1.0);
            let band = 4.0 * (p * (1.0 - p) / 100_000.0).sqrt();
            ensure((row.frequency - p).abs() <= band, || {
                format!(
                    "{name}: {}/{}/{} frequency {} outside {p} ± {band}",
                    row.preparation, row.measurement, row.outcome, row.frequency
                )
            })?;
        }
    }
    within_time(start.elapsed(), 10.0)?;
    Ok(format!(
        "max residual {worst:.1e}, 1e5-shot frequencies within 4σ, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn onticity_trajectory() -> Outcome {
    let start = Instant::now();
    let (psi, phi) = half_fidelity_pair();
    let ks: Vec<usize> = (1..=12).collect();
    let mut list = ContextList::empty(3).unwrap();
    let rows =
        overlap_trajectory(Execution::Parallel, &psi, &phi, &ks, &mut list, 11).map_err(|e| e.to_string())?;
    let on_psi = list.containing(&psi);
    let on_phi = list.containing(&phi);
    for row in &rows {
        let k = row.k;
        let exact = row.exact_tv.ok_or_else(|| format!("k={k}: no exact TV"))?;
        let closed = 1.0 - 0.5f64.powi(k as i32);
        ensure(exact >= closed - 1e-12, || {
            format!("k={k}: TV {exact} < {closed}")
        })?;
        ensure((exact - closed).abs() < 1e-12, || {
            format!("k={k}: TV {exact} differs from {closed}")
        })?;
        ensure(row.tv_lower_bound <= exact + 1e-12, || {
            format!("k={k}: bound {} above exact {exact}", row.tv_lower_bound)
        })?;
        if k <= 3 {
            let ctxs: Vec<&Context> = on_psi[..k]
                .iter()
                .chain(&on_phi[..k])
                .map(|&(c, _)| &list.contexts()[c])
                .collect();
            let mu: Vec<Vec<f64>> = ctxs.iter().map(|c| born_weights(&psi, c)).collect();
            let nu: Vec<Vec<f64>> = ctxs.iter().map(|c| born_weights(&phi, c)).collect();
            let brute = brute_product_tv(&mu, &nu);
            ensure((brute - exact).abs() < 1e-12, || {
                format!("k={k}: brute force {brute} vs {exact}")
            })?;
        }
    }
    within_time(start.elapsed(), 20.0)?;
    let last = rows.last().and_then(|r| r.exact_tv).unwrap_or(f64::NAN);
    Ok(format!(
        "TV(k=12) = {last:.12}, bound never above exact, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn theorem3_bound() -> Outcome {
    let start = Instant::now();
    let (psi, phi) = half_fidelity_pair();
    let mut set = generate_mkc(&targets(3, 8, 13), 0.05, 1e-6, 13, 200).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for n in [2u32, 5, 10] {
        let report = theorem3_set(&psi, n, 50, &mut set, Some(&phi), 13, 200).map_err(|e| e.to_string())?;
        let members = set.members();
        let oracle_psi: f64 = report
            .steps
            .iter()
            .map(|s| born_weights(&psi, &members[s.member].context)[0])
            .product();
        let oracle_phi: f64 = report
            .steps
            .iter()
            .map(|s| born_weights(&phi, &members[s.member].context)[0])
            .product();
        let bound = 1.0 - 1.0 / n as f64;
        ensure(oracle_psi > bound, || {
            format!("n={n}: oracle μ_ψ {oracle_psi} ≤ {bound}")
        })?;
        ensure(report.mu_psi > bound && report.bound_holds, || {
            format!("n={n}: μ_ψ {} ≤ {bound}", report.mu_psi)
        })?;
        ensure((report.mu_psi - oracle_psi).abs() < 1e-12, || {
            format!("n={n}: μ_ψ {} vs oracle {oracle_psi}", report.mu_psi)
        })?;
        ensure(report.euler.tail < 1e-12, || {
            format!("n={n}: Euler tail {:e}", report.euler.tail)
        })?;
        let mu_phi = report.phi.as_ref().map(|p| p.mu_phi).unwrap_or(f64::NAN);
        ensure(mu_phi < 1e-6 && oracle_phi < 1e-6, || {
            format!("n={n}: μ_φ {mu_phi:e}, oracle {oracle_phi:e}")
        })?;
        summary.push(format!("n={n}: μ_ψ={:.4} μ_φ={mu_phi:.1e}", report.mu_psi));
    }
    let scan = set.incompatibility_scan(Execution::Parallel);
    ensure(scan.passed, || "refined set is not totally incompatible".into())?;
    within_time(start.elapsed(), 15.0)?;
    Ok(format!(
        "{}, {:.2} s",
        summary.join("; "),
        start.elapsed().as_secs_f64()
    ))
}

fn euler_root() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2u32..=20 {
        let q = solve_qn(n).map_err(|e| e.to_string())?;
        let value = reference_euler(q, 4000);
        let err = (value - (1.0 - 1.0 / n as f64)).abs();
        ensure(err < 1e-12, || format!("n={n}: |E(q_n) - (1 - 1/n)| = {err:e}"))?;
        worst = worst.max(err);
    }
    for i in 1..=9 {
        let q = i as f64 / 10.0;
        let reference = reference_euler(q, 4000);
        let cert = euler_function(q, 400).map_err(|e| e.to_string())?;
        ensure(cert.contains(reference), || {
            format!("q={q}: [{}, {}] misses {reference}", cert.lower, cert.upper)
        })?;
    }
    Ok(format!(
        "max root error {worst:.1e}, 9/9 intervals contain the 512-bit reference"
    ))
}

fn determinate_analog() -> Outcome {
    let mut gaps = Vec::new();
    for s in [17u64, 18, 19] {
        let mut rng = seed::rng(s);
        let states: Vec<(String, PureState)> = (0..4)
            .map(|i| (format!("s{i}"), PureState::random(3, &mut rng).unwrap()))
            .collect();
        let mut list = ContextList::empty(3).unwrap();
        let cm = canonical_modification(&states, 12, &mut list, s, None).map_err(|e| e.to_string())?;
        let mut maxf: f64 = 0.0;
        for (i, (_, a)) in states.iter().enumerate() {
            for (_, b) in &states[i + 1..] {
                maxf = maxf.max(fidelity(a, b));
            }
        }
        let tol = 3.0 * maxf.powi(12);
        for (i, m) in cm.measures.iter().enumerate() {
            let oracle: f64 = states[i + 1..]
                .iter()
                .map(|(_, b)| 1.0 - fidelity(&states[i].1, b).powi(12))
                .product();
            ensure((m.measure - oracle).abs() < 1e-12, || {
                format!("seed {s}: {} measure {} vs oracle {oracle}", m.label, m.measure)
            })?;
            ensure(m.measure >= 1.0 - tol, || {
                format!("seed {s}: {} measure {} < 1 - {tol:e}", m.label, m.measure)
            })?;
        }
        let model = ProductModel::new(list, states.clone()).map_err(|e| e.to_string())?;
        // sampled points never land in two supports
        let supports: Vec<_> = cm.assignment.supports.values().collect();
        for (label, _) in &states {
            let mu = model.measure(label).map_err(|e| e.to_string())?;
            let mut rng = seed::rng(seed::derive(s, &[stream::SAMPLING]));
            for _ in 0..2000 {
                let point = mu.sample(&mut rng);
                let hits = supports.iter().filter(|e| e.contains(&point.indices)).count();
                ensure(hits <= 1, || {
                    format!("seed {s}: a point of {label} lies in {hits} supports")
                })?;
            }
        }
        let det = check_psi_determinate(&model, &cm.assignment, tol).map_err(|e| e.to_string())?;
        ensure(det.overlapping.is_empty(), || {
            format!("seed {s}: overlapping {:?}", det.overlapping)
        })?;
        ensure(det.passed, || format!("seed {s}: deficient {:?}", det.deficient))?;
        let ontic = is_psi_ontic_with(Execution::Parallel, &model, 2.0 * tol).map_err(|e| e.to_string())?;
        ensure(ontic.verdict == OnticVerdict::PsiOntic, || {
            format!("seed {s}: determinate but min distance {:?}", ontic.min_distance)
        })?;
        gaps.push(format!("{tol:.1e}"));
    }
    Ok(format!(
        "3 seeds, disjoint supports, tol {} all determinate and ontic",
        gaps.join("/")
    ))
}

fn mkc_structure() -> Outcome {
    let mut worst_ratio: f64 = 0.0;
    for s in [19u64, 20, 21] {
        let tgts = targets(3, 8, s);
        let set = generate_mkc(&tgts, 0.05, 1e-6, s, 200).map_err(|e| e.to_string())?;
        ensure(set.len() == 8, || format!("seed {s}: {} members", set.len()))?;
        let members = set.members();
        for (a, ma) in members.iter().enumerate() {
            for mb in &members[a + 1..] {
                for u in ma.context.vectors() {
                    for v in mb.context.vectors() {
                        let f = fidelity(u, v);
                        ensure(f > 1e-6 && f < 1.0 - 1e-6, || {
                            format!(
                                "seed {s}: {} / {} fidelity {f}",
                                ma.context.label(),
                                mb.context.label()
                            )
                        })?;
                    }
                }
            }
        }
        for (t, target) in tgts.iter().enumerate() {
            let member = members
                .iter()
                .find(|m| m.target == Some(t))
                .ok_or_else(|| format!("seed {s}: target {t} uncovered"))?;
            let defect = target
                .vectors()
                .iter()
                .zip(member.context.vectors())
                .map(|(a, b)| 1.0 - fidelity(a, b))
                .fold(0.0, f64::max);
            ensure(defect < 0.05, || format!("seed {s}: target {t} defect {defect}"))?;
        }
        worst_ratio = worst_ratio.max(deviation_check(&set, &tgts, s)?);
    }
    Ok(format!(
        "3 sets of 8 pass the pair scan and coverage, max deviation {worst_ratio:.3}·dε"
    ))
}

/// Recomputes every analytic deviation and returns the largest as a
/// fraction of `d·ε`.
fn deviation_check(set: &MkcContextSet, tgts: &[Context], s: u64) -> Result<f64, String> {
    let d = set.dim();
    let bound = d as f64 * set.epsilon();
    let mut rng = seed::rng(seed::derive(s, &[stream::PREPARATIONS]));
    let preps: Vec<(String, PureState)> = (0..6)
        .map(|i| (format!("p{i}"), PureState::random(d, &mut rng).unwrap()))
        .collect();
    let values: Vec<f64> = (0..d).map(|i| i as f64).collect();
    let observables: Vec<(String, Observable)> = tgts
        .iter()
        .enumerate()
        .map(|(i, t)| (format!("A{i}"), Observable::from_spectrum(&values, t).unwrap()))
        .collect();
    let preparations: Vec<Preparation> = preps
        .iter()
        .map(|(l, p)| Preparation::pure(l.clone(), p.clone()))
        .collect();
    let report = finite_precision_report(Execution::Parallel, set, &preparations, &observables, None, s)
        .map_err(|e| e.to_string())?;
    ensure(report.within_analytic, || {
        format!("seed {s}: max analytic {}", report.max_analytic_l1)
    })?;
    let mut worst: f64 = 0.0;
    for (name, obs) in &observables {
        let snap = snap_observable(obs, set).map_err(|e| e.to_string())?;
        let ctx = &set.members()[snap.member].context;
        for (label, psi) in &preps {
            let mut l1 = 0.0;
            for (i, v) in obs.eigenvectors().iter().enumerate() {
                let e = PureState::new(v.clone()).unwrap();
                l1 += (fidelity(&e, psi) - fidelity(&ctx.vectors()[snap.matching[i]], psi)).abs();
            }
            let row = report
                .rows
                .iter()
                .find(|r| &r.observable == name && &r.preparation == label)
                .ok_or_else(|| format!("seed {s}: no row for {name}/{label}"))?;
            ensure((row.analytic_l1 - l1).abs() < 1e-12, || {
                format!("seed {s}: {name}/{label} analytic {} vs {l1}", row.analytic_l1)
            })?;
            ensure(l1 <= bound, || {
                format!("seed {s}: {name}/{label} deviation {l1} > {bound}")
            })?;
            worst = worst.max(l1 / bound);
        }
    }
    Ok(worst)
}

fn antidistinguishability() -> Outcome {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // |ab⟩ ↦ index 2a + b; entries of (|xy⟩ + |zw⟩)/√2
    let ket = |a: [f64; 2], b: [f64; 2]| [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let (zero, one, plus, minus) = ([1.0, 0.0], [0.0, 1.0], [h, h], [h, -h]);
    let basis = [
        (ket(zero, one), ket(one, zero)),
        (ket(zero, minus), ket(one, plus)),
        (ket(plus, one), ket(minus, zero)),
        (ket(plus, minus), ket(minus, plus)),
    ];
    let effects: Vec<_> = basis
        .iter()
        .map(|(x, y)| {
            let v: Vec<f64> = x.iter().zip(y).map(|(p, q)| h * (p + q)).collect();
            PureState::from_real(&v).unwrap().projector()
        })
        .collect();
    let mine = Povm::new(
        "pbr-oracle",
        (1..=4).map(|i| format!("o{i}")).collect(),
        effects,
        &Tolerances::default(),
    )
    .map_err(|e| e.to_string())?;
    let states = pbr_states();
    let oracle = is_antidistinguishing(&mine, &states, 1e-10).map_err(|e| e.to_string())?;
    let cert = is_antidistinguishing(&pbr_measurement(), &states, 1e-10).map_err(|e| e.to_string())?;
    ensure(oracle.valid && cert.valid, || {
        format!("residuals {:?} / oracle {:?}", cert.residuals, oracle.residuals)
    })?;
    for (a, b) in pbr_measurement().effects().iter().zip(mine.effects()) {
        ensure((a - b).norm() < 1e-12, || {
            "library basis differs from the oracle".into()
        })?;
    }
    let mut medians = Vec::new();
    for eta in [1e-3, 5e-4, 1e-4] {
        let report =
            perturbation_robustness(Execution::Parallel, &cert, eta, 100, 23).map_err(|e| e.to_string())?;
        ensure(report.all_positive && report.min > 0.0, || {
            format!("η={eta}: a residual is not positive")
        })?;
        ensure(report.max <= 10.0 * eta, || {
            format!("η={eta}: max residual {} above 10η", report.max)
        })?;
        medians.push(report.median);
    }
    let ratio = medians[0] / medians[2];
    ensure((5.0..=20.0).contains(&ratio), || {
        format!("median ratio η=1e-3 : η=1e-4 is {ratio}")
    })?;
    Ok(format!(
        "max residual {:.1e}, 300/300 perturbed trials positive, median scaling ×{ratio:.1} over ×10 η",
        cert.max_residual
    ))
}

fn discrimination_ceiling() -> Outcome {
    let (psi, phi) = half_fidelity_pair();
    let preps = vec![("psi".to_string(), psi.clone()), ("phi".to_string(), phi.clone())];
    let mut gudder = ContextList::empty(3).unwrap();
    gudder.ensure_containing(&psi, 4, 29).unwrap();
    gudder.ensure_containing(&phi, 4, 30).unwrap();
    let set = generate_mkc(&targets(3, 6, 29), 0.05, 1e-6, 29, 200).map_err(|e| e.to_string())?;
    let mkc = set.context_list().map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (name, list, closed) in [("gudder", gudder, Some(1.0 - 1.0 / 16.0)), ("mkc", mkc, None)] {
        let mu: Vec<Vec<f64>> = list.contexts().iter().map(|c| born_weights(&psi, c)).collect();
        let nu: Vec<Vec<f64>> = list.contexts().iter().map(|c| born_weights(&phi, c)).collect();
        let tv = brute_product_tv(&mu, &nu);
        if let Some(c) = closed {
            ensure((tv - c).abs() < 1e-12, || {
                format!("{name}: brute TV {tv} vs closed form {c}")
            })?;
        }
        let model = build_gudder(list, preps.clone()).map_err(|e| e.to_string())?;
        let ceiling = 0.5 * (1.0 + tv);
        let mut best: f64 = 0.0;
        for run in 0..20u64 {
            let shots = 20_000;
            let report = single_shot_discrimination(
                Execution::Parallel,
                &model,
                EpistemicRef::new("psi", 0),
                EpistemicRef::new("phi", 0),
                shots,
                seed::derive(29, &[run]),
            )
            .map_err(|e| e.to_string())?;
            ensure((report.analytic_rate - ceiling).abs() < 1e-9, || {
                format!("{name}: analytic {} vs oracle {ceiling}", report.analytic_rate)
            })?;
            let sigma = (ceiling * (1.0 - ceiling) / shots as f64).sqrt();
            ensure(report.empirical_rate <= ceiling + 4.0 * sigma, || {
                format!("{name} run {run}: {} above {ceiling} + 4σ", report.empirical_rate)
            })?;
            best = best.max(report.empirical_rate);
        }
        lines.push(format!("{name}: best {best:.4} vs (1+TV)/2 = {ceiling:.4}"));
    }
    Ok(format!("20 runs each, {}", lines.join("; ")))
}

fn run_cli(command: &str, config: &Path, out: &Path, sequential: bool) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ontic-audit"));
    cmd.arg(command).arg("--config").arg(config).arg("--out").arg(out);
    if sequential {
        cmd.arg("--sequential");
    }
    let output = cmd.output().map_err(|e| e.to_string())?;
    ensure(output.status.success(), || {
        format!(
            "{command} {} exited {:?}: {}",
            config.display(),
            output.status.code(),
            String::from_utf8_lossy(&output.stderr)
        )
    })
}

fn report_files(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name != "manifest.json" {
            files.insert(name, std::fs::read(entry.path()).map_err(|e| e.to_string())?);
        }
    }
    Ok(files)
}

fn reproducibility() -> Outcome {
    let runs = [
        ("validate", "validate-gudder.json"),
        ("validate", "validate-gudder-file.json"),
        ("onticity", "onticity-gudder.json"),
        ("onticity", "onticity-mkc.json"),
        ("determinate", "determinate.json"),
        ("mkc-gen", "mkc-gen.json"),
        ("antidistinguish", "antidistinguish.json"),
        ("discriminate", "discriminate.json"),
    ];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (i, (command, file)) in runs.iter().enumerate() {
        let config = configs_dir().join(file);
        let dirs: Vec<_> = (0..3).map(|r| tmp.path().join(format!("{i}-{r}"))).collect();
        run_cli(command, &config, &dirs[0], false)?;
        run_cli(command, &config, &dirs[1], false)?;
        run_cli(command, &config, &dirs[2], true)?;
        let first = report_files(&dirs[0])?;
        ensure(!first.is_empty(), || format!("{file}: no report files"))?;
        for (r, dir) in dirs.iter().enumerate().skip(1) {
            let other = report_files(dir)?;
            ensure(first.keys().eq(other.keys()), || {
                format!("{file}: run {r} wrote different files")
            })?;
            for (name, bytes) in &first {
                ensure(&other[name] == bytes, || {
                    format!("{file}: {name} differs in run {r}")
                })?;
            }
        }
        compared += first.len();
    }
    Ok(format!(
        "{} configs, {compared} report files byte-identical across 2 parallel and 1 sequential run",
        runs.len()
    ))
}

fn main() {
    let criteria: [Check; 9] = [
        ("Born reproduction", born_reproduction),
        ("onticity trajectory", onticity_trajectory),
        ("nested refinement bound", theorem3_bound),
        ("Euler root", euler_root),
        ("determinate finite analog", determinate_analog),
        ("MKC structure", mkc_structure),
        ("anti-distinguishability", antidistinguishability),
        ("discrimination ceiling", discrimination_ceiling),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
