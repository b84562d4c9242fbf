//! Finite ontic models and the audits run on them.
//!
//! An ontic model for a fragment assigns each measurement a response function
//! `p_A(a|λ)` and each preparation a non-empty list of distributions over a
//! finite ontic space. The σ-algebra is the full power set, so an event is a
//! set of ontic-state indices.
//!
//! The audits ([`is_psi_ontic`], [`check_psi_determinate`]) are generic over
//! [`EpistemicModel`], which is also implemented by the symbolic product
//! models in [`crate::product`] whose spaces are too large to enumerate.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::quantum::{trace_product, Fragment, Tolerances};
use crate::seed;

/// Labels of the ontic states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct OnticSpace {
    labels: Vec<String>,
}

impl TryFrom<Vec<String>> for OnticSpace {
    type Error = Error;
    fn try_from(labels: Vec<String>) -> Result<Self> {
        OnticSpace::new(labels)
    }
}

impl From<OnticSpace> for Vec<String> {
    fn from(s: OnticSpace) -> Self {
        s.labels
    }
}

impl OnticSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidModel("ontic space is empty".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidModel(format!("duplicate ontic state `{l}`")));
            }
        }
        Ok(OnticSpace { labels })
    }

    /// Space with labels `λ0 … λ{n-1}`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("λ{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// `p_A(a|λ)` as an `N × k` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseFunction {
    pub quantity: String,
    pub outcomes: Vec<String>,
    pub table: Vec<Vec<f64>>,
}

impl ResponseFunction {
    pub fn validate(&self, n: usize, tol: f64) -> Result<()> {
        if self.table.len() != n {
            return Err(Error::InvalidModel(format!(
                "response `{}` has {} rows for {n} ontic states",
                self.quantity,
                self.table.len()
            )));
        }
        for (i, row) in self.table.iter().enumerate() {
            if row.len() != self.outcomes.len() {
                return Err(Error::InvalidModel(format!(
                    "response `{}` row {i} has {} entries for {} outcomes",
                    self.quantity,
                    row.len(),
                    self.outcomes.len()
                )));
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidModel(format!(
                    "response `{}` row {i} has an entry outside [0, 1]",
                    self.quantity
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidModel(format!(
                    "response `{}` row {i} sums to {sum}",
                    self.quantity
                )));
            }
        }
        Ok(())
    }
}

/// A probability distribution over the ontic space, tied to a preparation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EpistemicDoc", into = "EpistemicDoc")]
pub struct EpistemicState {
    preparation: String,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EpistemicDoc {
    preparation: String,
    weights: Vec<f64>,
}

impl TryFrom<EpistemicDoc> for EpistemicState {
    type Error = Error;
    fn try_from(doc: EpistemicDoc) -> Result<Self> {
        EpistemicState::new(doc.preparation, doc.weights)
    }
}

impl From<EpistemicState> for EpistemicDoc {
    fn from(e: EpistemicState) -> Self {
        EpistemicDoc {
            preparation: e.preparation,
            weights: e.weights,
        }
    }
}

impl EpistemicState {
    pub fn new(preparation: impl Into<String>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidModel(
                "epistemic weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidModel(format!("epistemic weights sum to {sum}")));
        }
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, &w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(EpistemicState {
            preparation: preparation.into(),
            weights,
            cumulative,
        })
    }

    pub fn preparation(&self) -> &str {
        &self.preparation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `μ(Δ)` for a set of ontic-state indices.
    pub fn measure(&self, event: &BTreeSet<usize>) -> Result<f64> {
        event.iter().try_fold(0.0, |acc, &i| {
            self.weights
                .get(i)
                .map(|w| acc + w)
                .ok_or_else(|| Error::InvalidEvent(format!("ontic state {i} out of range")))
        })
    }

    /// Draws an ontic-state index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // guard against u landing on the top edge of a trailing zero-weight run
        let mut i = idx.min(self.weights.len() - 1);
        while self.weights[i] == 0.0 && i > 0 {
            i -= 1;
        }
        i
    }
}

fn check_same_space(mu: &EpistemicState, nu: &EpistemicState) -> Result<()> {
    if mu.len() != nu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: nu.len(),
        });
    }
    Ok(())
}

/// `sup_Δ |μ(Δ) - ν(Δ)|`, attained by `Δ = {λ : μ(λ) > ν(λ)}`.
pub fn variational_distance(mu: &EpistemicState, nu: &EpistemicState) -> Result<f64> {
    check_same_space(mu, nu)?;
    let d: f64 = mu
        .weights
        .iter()
        .zip(&nu.weights)
        .filter(|(a, b)| a > b)
        .map(|(a, b)| a - b)
        .sum();
    Ok(d.clamp(0.0, 1.0))
}

/// The event maximizing `μ(Δ) - ν(Δ)`; ties `μ(λ) = ν(λ)` are left out.
pub fn maximizing_event(mu: &EpistemicState, nu: &EpistemicState) -> Result<BTreeSet<usize>> {
    check_same_space(mu, nu)?;
    Ok(mu
        .weights
        .iter()
        .zip(&nu.weights)
        .enumerate()
        .filter(|(_, (a, b))| a > b)
        .map(|(i, _)| i)
        .collect())
}

/// `Σ_λ √(μ(λ)ν(λ))`; always at least `1 - variational_distance`.
pub fn bhattacharyya_overlap(mu: &EpistemicState, nu: &EpistemicState) -> Result<f64> {
    check_same_space(mu, nu)?;
    Ok(mu
        .weights
        .iter()
        .zip(&nu.weights)
        .map(|(a, b)| (a * b).sqrt())
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

/// A finite ontic model for a fragment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnticModel {
    pub fragment: Fragment,
    pub space: OnticSpace,
    pub responses: Vec<ResponseFunction>,
    /// Preparation label → the set `Π_ρ`, as a list.
    pub epistemic: BTreeMap<String, Vec<EpistemicState>>,
}

impl OnticModel {
    /// Checks table shapes and row normalization. Coverage of the fragment
    /// is checked by [`validate_model`].
    pub fn new(
        fragment: Fragment,
        space: OnticSpace,
        responses: Vec<ResponseFunction>,
        epistemic: BTreeMap<String, Vec<EpistemicState>>,
    ) -> Result<Self> {
        let model = OnticModel {
            fragment,
            space,
            responses,
            epistemic,
        };
        model.check_shapes(1e-10)?;
        Ok(model)
    }

    fn check_shapes(&self, tol: f64) -> Result<()> {
        let n = self.space.len();
        for r in &self.responses {
            r.validate(n, tol)?;
        }
        for (label, list) in &self.epistemic {
            for e in list {
                if e.len() != n {
                    return Err(Error::InvalidModel(format!(
                        "epistemic state of `{label}` has {} weights for {n} ontic states",
                        e.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn response(&self, quantity: &str) -> Option<&ResponseFunction> {
        self.responses.iter().find(|r| r.quantity == quantity)
    }

    pub fn epistemic_states(&self, label: &str) -> Option<&[EpistemicState]> {
        self.epistemic.get(label).map(Vec::as_slice)
    }

    /// Relabels ontic states by `perm` (new index `i` holds old state `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<OnticModel> {
        let n = self.space.len();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidParameter("not a permutation".into()));
        }
        let space = OnticSpace::new(perm.iter().map(|&i| self.space.labels[i].clone()).collect())?;
        let responses = self
            .responses
            .iter()
            .map(|r| ResponseFunction {
                quantity: r.quantity.clone(),
                outcomes: r.outcomes.clone(),
                table: perm.iter().map(|&i| r.table[i].clone()).collect(),
            })
            .collect();
        let epistemic = self
            .epistemic
            .iter()
            .map(|(l, list)| {
                let list = list
                    .iter()
                    .map(|e| EpistemicState::new(l.clone(), perm.iter().map(|&i| e.weights[i]).collect()))
                    .collect::<Result<Vec<_>>>()?;
                Ok((l.clone(), list))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        OnticModel::new(self.fragment.clone(), space, responses, epistemic)
    }
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub preparation: String,
    pub measurement: String,
    pub outcome: String,
    pub epistemic_index: usize,
    pub predicted: f64,
    pub born: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tol: f64,
    pub max_residual: f64,
    pub passed: bool,
    pub residuals: Vec<Residual>,
}

impl ValidationReport {
    pub fn worst(&self) -> Option<&Residual> {
        self.residuals
            .iter()
            .max_by(|a, b| a.residual.total_cmp(&b.residual))
    }
}

/// Checks that the model reproduces the Born rule on average for every
/// (preparation, measurement, outcome, epistemic state).
pub fn validate_model(model: &OnticModel, tol: f64) -> Result<ValidationReport> {
    validate_model_with(Execution::default(), model, tol)
}

pub fn validate_model_with(exec: Execution, model: &OnticModel, tol: f64) -> Result<ValidationReport> {
    model.fragment.validate(&Tolerances::default())?;
    model.check_shapes(1e-10)?;

    // structural coverage first: these are errors, not residuals
    let mut items = Vec::new();
    for prep in &model.fragment.preparations {
        let list = model
            .epistemic
            .get(&prep.label)
            .filter(|l| !l.is_empty())
            .ok_or_else(|| {
                Error::InvalidModel(format!("preparation `{}` has no epistemic state", prep.label))
            })?;
        for povm in &model.fragment.measurements {
            let response = model.response(povm.label()).ok_or_else(|| {
                Error::InvalidModel(format!("measurement `{}` has no response function", povm.label()))
            })?;
            if response.outcomes.len() != povm.len() {
                return Err(Error::InvalidModel(format!(
                    "response `{}` has {} outcomes, POVM has {}",
                    povm.label(),
                    response.outcomes.len(),
                    povm.len()
                )));
            }
            for (e_idx, mu) in list.iter().enumerate() {
                for a in 0..povm.len() {
                    items.push((prep, povm, response, e_idx, mu, a));
                }
            }
        }
    }

    let residuals = exec.map_slice(&items, |&(prep, povm, response, e_idx, mu, a)| {
        let predicted: f64 = mu
            .weights
            .iter()
            .zip(&response.table)
            .map(|(w, row)| w * row[a])
            .sum();
        let born = trace_product(prep.density.matrix(), &povm.effects()[a]);
        Residual {
            preparation: prep.label.clone(),
            measurement: povm.label().to_string(),
            outcome: povm.outcomes()[a].clone(),
            epistemic_index: e_idx,
            predicted,
            born,
            residual: (predicted - born).abs(),
        }
    });
    let max_residual = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(ValidationReport {
        tol,
        max_residual,
        passed: max_residual < tol,
        residuals,
    })
}

/// Simulated outcome frequency for one (preparation, measurement, outcome).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub preparation: String,
    pub measurement: String,
    pub outcome: String,
    pub epistemic_index: usize,
    pub frequency: f64,
    pub born: f64,
    /// `4·sqrt(p(1-p)/shots)` at the Born probability.
    pub band: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub shots: u64,
    pub passed: bool,
    pub rows: Vec<FrequencyRow>,
}

/// Samples `λ ~ μ` and then an outcome from `p_A(·|λ)`, `shots` times for
/// every (preparation, epistemic state, measurement), and compares the
/// frequencies with the Born rule.
pub fn sample_born_frequencies(
    exec: Execution,
    model: &OnticModel,
    shots: u64,
    seed: u64,
) -> Result<FrequencyReport> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    model.check_shapes(1e-10)?;
    let mut items = Vec::new();
    for prep in &model.fragment.preparations {
        let list = model.epistemic.get(&prep.label).ok_or_else(|| {
            Error::InvalidModel(format!("preparation `{}` has no epistemic state", prep.label))
        })?;
        for povm in &model.fragment.measurements {
            let response = model.response(povm.label()).ok_or_else(|| {
                Error::InvalidModel(format!("measurement `{}` has no response function", povm.label()))
            })?;
            for (e_idx, mu) in list.iter().enumerate() {
                items.push((prep, povm, response, e_idx, mu));
            }
        }
    }
    let blocks = exec.map_range(items.len(), |i| {
        let (prep, povm, response, e_idx, mu) = items[i];
        let mut rng = seed::rng(seed::derive(seed, &[seed::stream::SAMPLING, i as u64]));
        let mut counts = vec![0u64; povm.len()];
        for _ in 0..shots {
            let row = &response.table[mu.sample(&mut rng)];
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let a = row
                .iter()
                .position(|&p| {
                    acc += p;
                    u < acc
                })
                .unwrap_or(row.len() - 1);
            counts[a] += 1;
        }
        counts
            .iter()
            .enumerate()
            .map(|(a, &c)| {
                let born = trace_product(prep.density.matrix(), &povm.effects()[a]);
                let frequency = c as f64 / shots as f64;
                let p = born.clamp(0.0, 1.0);
                let band = 4.0 * (p * (1.0 - p) / shots as f64).sqrt();
                FrequencyRow {
                    preparation: prep.label.clone(),
                    measurement: povm.label().to_string(),
                    outcome: povm.outcomes()[a].clone(),
                    epistemic_index: e_idx,
                    frequency,
                    born,
                    band,
                    within: (frequency - p).abs() <= band,
                }
            })
            .collect::<Vec<_>>()
    });
    let rows: Vec<FrequencyRow> = blocks.into_iter().flatten().collect();
    Ok(FrequencyReport {
        shots,
        passed: rows.iter().all(|r| r.within),
        rows,
    })
}

/// Names one member of `Π_ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpistemicRef<'a> {
    pub label: &'a str,
    pub index: usize,
}

impl<'a> EpistemicRef<'a> {
    pub fn new(label: &'a str, index: usize) -> Self {
        EpistemicRef { label, index }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    Exact,
    /// `1 - Σ√(μν)`, a lower bound on the variational distance.
    Bhattacharyya,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub value: f64,
    pub method: DistanceMethod,
}

impl DistanceEstimate {
    pub fn exact(value: f64) -> Self {
        DistanceEstimate {
            value,
            method: DistanceMethod::Exact,
        }
    }
}

/// A model whose epistemic states can be compared, queried on events and
/// sampled.
pub trait EpistemicModel: Sync {
    type Event;
    type Point: Send;

    /// Labels of the pure preparations, in declaration order.
    fn pure_preparations(&self) -> Vec<String>;

    fn epistemic_count(&self, label: &str) -> Option<usize>;

    fn distance(&self, a: EpistemicRef<'_>, b: EpistemicRef<'_>) -> Result<DistanceEstimate>;

    fn event_measure(&self, who: EpistemicRef<'_>, event: &Self::Event) -> Result<f64>;

    /// Exact set-theoretic disjointness.
    fn disjoint(&self, a: &Self::Event, b: &Self::Event) -> Result<bool>;

    fn sample<R: Rng + ?Sized>(&self, who: EpistemicRef<'_>, rng: &mut R) -> Result<Self::Point>;

    /// `ln μ({λ})`, or `-∞` off the support.
    fn log_mass(&self, who: EpistemicRef<'_>, point: &Self::Point) -> Result<f64>;
}

impl OnticModel {
    fn state(&self, who: EpistemicRef<'_>) -> Result<&EpistemicState> {
        self.epistemic
            .get(who.label)
            .ok_or_else(|| Error::UnknownLabel(who.label.to_string()))?
            .get(who.index)
            .ok_or_else(|| Error::UnknownLabel(format!("{}[{}]", who.label, who.index)))
    }
}

impl EpistemicModel for OnticModel {
    type Event = BTreeSet<usize>;
    type Point = usize;

    fn pure_preparations(&self) -> Vec<String> {
        self.fragment
            .preparations
            .iter()
            .filter(|p| p.is_pure() || (p.density.purity() - 1.0).abs() < 1e-10)
            .map(|p| p.label.clone())
            .collect()
    }

    fn epistemic_count(&self, label: &str) -> Option<usize> {
        self.epistemic.get(label).map(Vec::len)
    }

    fn distance(&self, a: EpistemicRef<'_>, b: EpistemicRef<'_>) -> Result<DistanceEstimate> {
        variational_distance(self.state(a)?, self.state(b)?).map(DistanceEstimate::exact)
    }

    fn event_measure(&self, who: EpistemicRef<'_>, event: &BTreeSet<usize>) -> Result<f64> {
        self.state(who)?.measure(event)
    }

    fn disjoint(&self, a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> Result<bool> {
        let n = self.space.len();
        if let Some(&i) = a.iter().chain(b).find(|&&i| i >= n) {
            return Err(Error::InvalidEvent(format!("ontic state {i} out of range")));
        }
        Ok(a.is_disjoint(b))
    }

    fn sample<R: Rng + ?Sized>(&self, who: EpistemicRef<'_>, rng: &mut R) -> Result<usize> {
        Ok(self.state(who)?.sample(rng))
    }

    fn log_mass(&self, who: EpistemicRef<'_>, point: &usize) -> Result<f64> {
        let w = *self
            .state(who)?
            .weights
            .get(*point)
            .ok_or_else(|| Error::InvalidEvent(format!("ontic state {point} out of range")))?;
        Ok(w.ln())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub psi: String,
    pub phi: String,
    pub psi_index: usize,
    pub phi_index: usize,
    pub distance: f64,
    pub bound_used: DistanceMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnticVerdict {
    PsiOntic,
    PsiEpistemic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnticityReport {
    pub pairs: Vec<PairDistance>,
    /// `None` when fewer than two pure preparations exist.
    pub min_distance: Option<f64>,
    /// `1 - min_distance`.
    pub gap: Option<f64>,
    pub tol: f64,
    pub verdict: OnticVerdict,
    /// The most overlapping pair when the verdict is ψ-epistemic.
    pub witness: Option<PairDistance>,
}

/// Variational distance between the epistemic states of every pair of
/// distinct pure preparations. ψ-ontic iff every distance is `≥ 1 - tol`.
pub fn is_psi_ontic<M: EpistemicModel>(model: &M, tol: f64) -> Result<OnticityReport> {
    is_psi_ontic_with(Execution::default(), model, tol)
}

pub fn is_psi_ontic_with<M: EpistemicModel>(exec: Execution, model: &M, tol: f64) -> Result<OnticityReport> {
    let mut labels = model.pure_preparations();
    labels.sort();
    labels.dedup();
    let mut items = Vec::new();
    for (i, psi) in labels.iter().enumerate() {
        for phi in &labels[i + 1..] {
            let np = model
                .epistemic_count(psi)
                .ok_or_else(|| Error::UnknownLabel(psi.clone()))?;
            let nq = model
                .epistemic_count(phi)
                .ok_or_else(|| Error::UnknownLabel(phi.clone()))?;
            for a in 0..np {
                for b in 0..nq {
                    items.push((psi.as_str(), a, phi.as_str(), b));
                }
            }
        }
    }
    let pairs = exec
        .map_slice(&items, |&(psi, a, phi, b)| {
            let d = model.distance(EpistemicRef::new(psi, a), EpistemicRef::new(phi, b))?;
            Ok(PairDistance {
                psi: psi.to_string(),
                phi: phi.to_string(),
                psi_index: a,
                phi_index: b,
                distance: d.value,
                bound_used: d.method,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let witness = pairs
        .iter()
        .min_by(|x, y| x.distance.total_cmp(&y.distance))
        .cloned();
    let min_distance = witness.as_ref().map(|w| w.distance);
    let ontic = min_distance.is_none_or(|d| d >= 1.0 - tol);
    Ok(OnticityReport {
        pairs,
        min_distance,
        gap: min_distance.map(|d| 1.0 - d),
        tol,
        verdict: if ontic {
            OnticVerdict::PsiOntic
        } else {
            OnticVerdict::PsiEpistemic
        },
        witness: if ontic { None } else { witness },
    })
}

/// Candidate support `Λ_[ψ]` for each pure preparation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportAssignment<E> {
    pub supports: BTreeMap<String, E>,
}

impl<E> SupportAssignment<E> {
    pub fn new(supports: BTreeMap<String, E>) -> Self {
        SupportAssignment { supports }
    }
}

impl<E> FromIterator<(String, E)> for SupportAssignment<E> {
    fn from_iter<I: IntoIterator<Item = (String, E)>>(iter: I) -> Self {
        SupportAssignment {
            supports: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportMeasure {
    pub preparation: String,
    pub epistemic_index: usize,
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminacyReport {
    pub tol: f64,
    /// Pairs violating disjointness.
    pub overlapping: Vec<(String, String)>,
    /// `μ(Λ_[ψ])` for every `μ ∈ Π_[ψ]`.
    pub measures: Vec<SupportMeasure>,
    /// Entries of `measures` below `1 - tol`.
    pub deficient: Vec<SupportMeasure>,
    pub passed: bool,
}

/// Checks that the supports are pairwise disjoint (exactly) and that every
/// epistemic state of `ψ` gives its own support measure `≥ 1 - tol`.
pub fn check_psi_determinate<M: EpistemicModel>(
    model: &M,
    assignment: &SupportAssignment<M::Event>,
    tol: f64,
) -> Result<DeterminacyReport> {
    let pure = model.pure_preparations();
    for label in assignment.supports.keys() {
        if !pure.contains(label) {
            return Err(Error::UnknownLabel(label.clone()));
        }
    }
    if let Some(missing) = pure.iter().find(|l| !assignment.supports.contains_key(*l)) {
        return Err(Error::InvalidModel(format!(
            "assignment does not cover pure preparation `{missing}`"
        )));
    }

    let entries: Vec<(&String, &M::Event)> = assignment.supports.iter().collect();
    let mut overlapping = Vec::new();
    for (i, (a, ea)) in entries.iter().enumerate() {
        for (b, eb) in &entries[i + 1..] {
            if !model.disjoint(ea, eb)? {
                overlapping.push(((*a).clone(), (*b).clone()));
            }
        }
    }

    let mut measures = Vec::new();
    for (label, event) in &entries {
        let count = model
            .epistemic_count(label)
            .ok_or_else(|| Error::UnknownLabel((*label).clone()))?;
        for idx in 0..count {
            measures.push(SupportMeasure {
                preparation: (*label).clone(),
                epistemic_index: idx,
                measure: model.event_measure(EpistemicRef::new(label, idx), event)?,
            });
        }
    }
    let deficient: Vec<SupportMeasure> = measures
        .iter()
        .filter(|m| m.measure < 1.0 - tol)
        .cloned()
        .collect();
    Ok(DeterminacyReport {
        tol,
        passed: overlapping.is_empty() && deficient.is_empty(),
        overlapping,
        measures,
        deficient,
    })
}
