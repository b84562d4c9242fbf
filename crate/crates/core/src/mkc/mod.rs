//! Finite Meyer–Kent–Clifton context sets.
//!
//! A set holds contexts that are pairwise totally incompatible (every
//! cross-context fidelity stays a margin `τ` away from 0 and 1) and that
//! approximate each registered target context within `ε`. Contexts refined
//! around a state for nested refinement are stored in coordinates
//! of a unitary frame whose first column is that state, so infidelities far
//! below `1e-16` stay resolvable.

pub mod euler;
pub mod theorem3;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::par::Execution;
use crate::product::ContextList;
use crate::quantum::{
    eigencontext, gaussian_hermitian, hermitian_eigen, infidelity, trace_product, vector_fidelity,
    vector_infidelity, CMatrix, CVector, Context, Observable, Preparation, PureState, C64, MAX_DIM,
};
use crate::seed::{self, stream};

pub use euler::{euler_function, solve_qn, EulerSchedule, EulerValue};
pub use theorem3::{tail_diagnostic, theorem3_set, PhiDecay, TailRow, Theorem3Report, Theorem3Step};

/// Default incompatibility margin.
pub const DEFAULT_TAU: f64 = 1e-6;

/// A unitary whose first column is a reference state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    #[serde(with = "json::cmat")]
    pub matrix: CMatrix,
}

/// Frame coordinates of a refined context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub frame: usize,
    /// Columns are the context vectors in frame coordinates.
    #[serde(with = "json::cmat")]
    pub coords: CMatrix,
    /// Squared perturbation angle; the margin against other refinements of
    /// the same frame is `τ·min(scale, scale')`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MkcMember {
    pub context: Context,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<Refinement>,
}

/// How well a target is approximated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub target: usize,
    pub member: usize,
    /// `max_i (1 - Tr([e_i][e_i']))`.
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MkcDoc", into = "MkcDoc")]
pub struct MkcContextSet {
    dim: usize,
    epsilon: f64,
    tau: f64,
    seed: u64,
    targets: Vec<Context>,
    members: Vec<MkcMember>,
    coverage: Vec<Coverage>,
    frames: Vec<Frame>,
}

#[derive(Serialize, Deserialize)]
struct MkcDoc {
    dim: usize,
    epsilon: f64,
    tau: f64,
    seed: u64,
    targets: Vec<Context>,
    members: Vec<MkcMember>,
    coverage: Vec<Coverage>,
    #[serde(default)]
    frames: Vec<Frame>,
}

impl TryFrom<MkcDoc> for MkcContextSet {
    type Error = Error;
    fn try_from(d: MkcDoc) -> Result<Self> {
        let set = MkcContextSet {
            dim: d.dim,
            epsilon: d.epsilon,
            tau: d.tau,
            seed: d.seed,
            targets: d.targets,
            members: d.members,
            coverage: d.coverage,
            frames: d.frames,
        };
        set.validate()?;
        Ok(set)
    }
}

impl From<MkcContextSet> for MkcDoc {
    fn from(s: MkcContextSet) -> Self {
        MkcDoc {
            dim: s.dim,
            epsilon: s.epsilon,
            tau: s.tau,
            seed: s.seed,
            targets: s.targets,
            members: s.members,
            coverage: s.coverage,
            frames: s.frames,
        }
    }
}

/// The cross-context pair closest to violating total incompatibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub first: String,
    pub second: String,
    /// Fidelity of the worst cross pair.
    pub fidelity: f64,
    /// `min(f, 1 - f) / margin`; at most 1 means a violation.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncompatibilityScan {
    pub pairs: usize,
    pub passed: bool,
    pub worst: Option<PairCheck>,
}

impl MkcContextSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn targets(&self) -> &[Context] {
        &self.targets
    }

    pub fn members(&self) -> &[MkcMember] {
        &self.members
    }

    pub fn coverage(&self) -> &[Coverage] {
        &self.coverage
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The member contexts, in order, as the coordinates of a product space.
    pub fn context_list(&self) -> Result<ContextList> {
        ContextList::new(self.dim, self.members.iter().map(|m| m.context.clone()).collect())
    }

    fn margin(&self, a: &MkcMember, b: &MkcMember) -> f64 {
        match (&a.refinement, &b.refinement) {
            (Some(x), Some(y)) if x.frame == y.frame => self.tau * x.scale.min(y.scale),
            _ => self.tau,
        }
    }

    fn check_pair(&self, a: &MkcMember, b: &MkcMember) -> PairCheck {
        let margin = self.margin(a, b);
        let d = self.dim;
        let mut worst = (f64::INFINITY, 0.0);
        for i in 0..d {
            for j in 0..d {
                let (f, g) = match (&a.refinement, &b.refinement) {
                    (Some(x), Some(y)) if x.frame == y.frame => {
                        let (u, w) = (x.coords.column(i).into_owned(), y.coords.column(j).into_owned());
                        (vector_fidelity(&u, &w), vector_infidelity(&u, &w))
                    }
                    _ => {
                        let (u, w) = (&a.context.vectors()[i], &b.context.vectors()[j]);
                        let f = u.inner(w).norm_sqr().clamp(0.0, 1.0);
                        (f, infidelity(u, w).unwrap_or(1.0 - f))
                    }
                };
                let ratio = f.min(g) / margin;
                if ratio < worst.0 {
                    worst = (ratio, f);
                }
            }
        }
        PairCheck {
            first: a.context.label().to_string(),
            second: b.context.label().to_string(),
            fidelity: worst.1,
            ratio: worst.0,
        }
    }

    /// Checks a candidate against every accepted member; returns the worst
    /// pair on failure.
    fn admits(&self, candidate: &MkcMember) -> std::result::Result<(), PairCheck> {
        let mut worst: Option<PairCheck> = None;
        for m in &self.members {
            let c = self.check_pair(candidate, m);
            if c.ratio <= 1.0 {
                return Err(c);
            }
            if worst.as_ref().is_none_or(|w| c.ratio < w.ratio) {
                worst = Some(c);
            }
        }
        Ok(())
    }

    /// Exhaustive pairwise total-incompatibility scan.
    pub fn incompatibility_scan(&self, exec: Execution) -> IncompatibilityScan {
        let n = self.members.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let checks = exec.map_slice(&pairs, |&(i, j)| {
            self.check_pair(&self.members[i], &self.members[j])
        });
        let worst = checks.into_iter().min_by(|a, b| a.ratio.total_cmp(&b.ratio));
        IncompatibilityScan {
            pairs: pairs.len(),
            passed: worst.as_ref().is_none_or(|w| w.ratio > 1.0),
            worst,
        }
    }

    /// Re-checks coverage and total incompatibility.
    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_DIM).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        check_parameters(self.epsilon, self.tau)?;
        for m in &self.members {
            if m.context.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: m.context.dim(),
                });
            }
            if let Some(r) = &m.refinement {
                if r.frame >= self.frames.len() {
                    return Err(Error::InvalidModel(format!(
                        "member `{}` names a missing frame",
                        m.context.label()
                    )));
                }
            }
        }
        self.context_list()?;
        for c in &self.coverage {
            let (t, m) = (self.targets.get(c.target), self.members.get(c.member));
            let (Some(t), Some(m)) = (t, m) else {
                return Err(Error::InvalidModel("coverage entry out of range".into()));
            };
            let defect = approximation_defect(t, &m.context)?;
            if defect >= self.epsilon {
                return Err(Error::NotCovered {
                    defect,
                    epsilon: self.epsilon,
                });
            }
        }
        let scan = self.incompatibility_scan(Execution::default());
        if let Some(w) = scan.worst.filter(|_| !scan.passed) {
            return Err(Error::InvalidModel(format!(
                "contexts `{}` and `{}` are not totally incompatible (fidelity {:.3e})",
                w.first, w.second, w.fidelity
            )));
        }
        Ok(())
    }

    fn frame_for(&mut self, psi: &PureState, seed: u64) -> Result<usize> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: psi.dim(),
            });
        }
        let found = self
            .frames
            .iter()
            .position(|f| vector_infidelity(&f.matrix.column(0).into_owned(), psi.amplitudes()) == 0.0);
        if let Some(i) = found {
            return Ok(i);
        }
        let mut rng = seed::rng(seed);
        let basis = crate::quantum::complete_basis(vec![psi.amplitudes().clone()], self.dim, &mut rng)?;
        self.frames.push(Frame {
            matrix: CMatrix::from_columns(&basis),
        });
        Ok(self.frames.len() - 1)
    }

    fn position(&self, label: &str) -> Option<usize> {
        self.members.iter().position(|m| m.context.label() == label)
    }
}

fn check_parameters(epsilon: f64, tau: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(tau > 0.0 && tau < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "tau must lie in (0, 1/2), got {tau}"
        )));
    }
    Ok(())
}

/// `max_i (1 - Tr([e_i][e_i']))` for index-aligned contexts.
pub fn approximation_defect(target: &Context, approx: &Context) -> Result<f64> {
    if target.dim() != approx.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: approx.dim(),
        });
    }
    target
        .vectors()
        .iter()
        .zip(approx.vectors())
        .try_fold(0.0f64, |acc, (e, f)| Ok(acc.max(infidelity(e, f)?)))
}

/// `exp(iH) - I` for a random Hermitian `H` of spectral norm `angle`,
/// with `e^{iλ} - 1` evaluated without cancellation.
pub(crate) fn unitary_minus_identity<R: Rng + ?Sized>(dim: usize, angle: f64, rng: &mut R) -> CMatrix {
    let h = gaussian_hermitian(dim, rng);
    let (values, vectors) = hermitian_eigen(&h);
    let norm = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut out = CMatrix::zeros(dim, dim);
    for (lambda, u) in values.iter().zip(&vectors) {
        let t = lambda * angle / norm;
        let s = (0.5 * t).sin();
        let phase = C64::new(-2.0 * s * s, t.sin());
        out += (u * u.adjoint()) * phase;
    }
    out
}

fn perturbed(columns: &CMatrix, delta: &CMatrix) -> CMatrix {
    let mut m = columns + delta * columns;
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        c.unscale_mut(n);
    }
    m
}

fn context_from_columns(label: String, m: &CMatrix) -> Result<Context> {
    let states = m
        .column_iter()
        .map(|c| PureState::new(c.into_owned()))
        .collect::<Result<Vec<_>>>()?;
    Context::new(label, states)
}

/// Builds a totally incompatible set approximating every target within
/// `epsilon`: each target basis is rotated by a seeded random unitary of
/// angle `epsilon/4` until the result clears margin `tau` against every
/// accepted context.
pub fn generate_mkc(
    targets: &[Context],
    epsilon: f64,
    tau: f64,
    seed: u64,
    budget: usize,
) -> Result<MkcContextSet> {
    check_parameters(epsilon, tau)?;
    let dim = targets
        .first()
        .map(Context::dim)
        .ok_or_else(|| Error::InvalidParameter("no target contexts".into()))?;
    if budget == 0 {
        return Err(Error::InvalidParameter("retry budget must be positive".into()));
    }
    let mut set = MkcContextSet {
        dim,
        epsilon,
        tau,
        seed,
        targets: targets.to_vec(),
        members: Vec::with_capacity(targets.len()),
        coverage: Vec::with_capacity(targets.len()),
        frames: Vec::new(),
    };
    for (i, target) in targets.iter().enumerate() {
        if target.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: target.dim(),
            });
        }
        let columns = CMatrix::from_columns(
            &target
                .vectors()
                .iter()
                .map(|v| v.amplitudes().clone())
                .collect::<Vec<CVector>>(),
        );
        let mut blocking = None;
        let mut accepted = false;
        for r in 0..budget {
            let mut rng = seed::rng(seed::derive(seed, &[stream::MKC, i as u64, r as u64]));
            let delta = unitary_minus_identity(dim, epsilon / 4.0, &mut rng);
            let context = context_from_columns(format!("mkc-{i}"), &perturbed(&columns, &delta))?;
            let defect = approximation_defect(target, &context)?;
            if defect >= epsilon {
                continue;
            }
            let candidate = MkcMember {
                context,
                target: Some(i),
                refinement: None,
            };
            match set.admits(&candidate) {
                Ok(()) => {
                    set.coverage.push(Coverage {
                        target: i,
                        member: set.members.len(),
                        defect,
                    });
                    set.members.push(candidate);
                    accepted = true;
                    break;
                }
                Err(pair) => blocking = Some(pair),
            }
        }
        if !accepted {
            let pair = blocking.unwrap_or(PairCheck {
                first: format!("mkc-{i}"),
                second: target.label().to_string(),
                fidelity: f64::NAN,
                ratio: 0.0,
            });
            return Err(Error::BudgetExhausted {
                target: i,
                first: pair.first,
                second: pair.second,
                fidelity: pair.fidelity,
            });
        }
    }
    Ok(set)
}

/// An observable moved onto a member context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnappedObservable {
    pub member: usize,
    pub label: String,
    /// `matching[i]` is the member vector paired with the `i`-th eigenvector
    /// (ascending eigenvalues).
    pub matching: Vec<usize>,
    pub observable: Observable,
    pub defect: f64,
}

/// Greedy max-fidelity matching; returns `(matching, Σ fidelity)`.
fn greedy_matching(eigen: &Context, member: &Context) -> (Vec<usize>, f64) {
    let d = eigen.dim();
    let mut cells: Vec<(f64, usize, usize)> = Vec::with_capacity(d * d);
    for (i, e) in eigen.vectors().iter().enumerate() {
        for (j, f) in member.vectors().iter().enumerate() {
            cells.push((e.inner(f).norm_sqr(), i, j));
        }
    }
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut matching = vec![usize::MAX; d];
    let mut used = vec![false; d];
    let mut score = 0.0;
    for (f, i, j) in cells {
        if matching[i] == usize::MAX && !used[j] {
            matching[i] = j;
            used[j] = true;
            score += f;
        }
    }
    (matching, score)
}

/// Picks the member closest to the observable's eigencontext and rebuilds
/// the observable there with the same eigenvalues.
pub fn snap_observable(observable: &Observable, set: &MkcContextSet) -> Result<SnappedObservable> {
    let eigen = eigencontext(observable)?;
    if eigen.dim() != set.dim {
        return Err(Error::DimensionMismatch {
            expected: set.dim,
            got: eigen.dim(),
        });
    }
    let (member, (matching, _)) = set
        .members
        .iter()
        .enumerate()
        .map(|(m, mem)| (m, greedy_matching(&eigen, &mem.context)))
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
        .ok_or_else(|| Error::InvalidModel("context set is empty".into()))?;
    let ctx = &set.members[member].context;
    let defect = eigen
        .vectors()
        .iter()
        .zip(&matching)
        .try_fold(0.0f64, |acc, (e, &j)| {
            Ok::<_, Error>(acc.max(infidelity(e, &ctx.vectors()[j])?))
        })?;
    if defect > set.epsilon {
        return Err(Error::NotCovered {
            defect,
            epsilon: set.epsilon,
        });
    }
    let mut values = vec![0.0; set.dim];
    for (i, &j) in matching.iter().enumerate() {
        values[j] = observable.eigenvalues()[i];
    }
    Ok(SnappedObservable {
        member,
        label: ctx.label().to_string(),
        matching,
        observable: Observable::from_spectrum(&values, ctx)?,
        defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub observable: String,
    pub preparation: String,
    pub member: String,
    pub defect: f64,
    /// `Σ_i |Tr(ρP_i) - Tr(ρP_i')|`.
    pub analytic_l1: f64,
    pub sampled_l1: Option<f64>,
    /// `Σ_i 4·sqrt(q_i(1-q_i)/shots)`.
    pub band: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePrecisionReport {
    pub dim: usize,
    pub epsilon: f64,
    /// `d·ε`.
    pub bound: f64,
    pub shots: Option<u64>,
    pub rows: Vec<DeviationRow>,
    pub max_analytic_l1: f64,
    pub max_sampled_l1: Option<f64>,
    pub within_analytic: bool,
    pub within_sampled: Option<bool>,
    /// `d^m`, or `None` if it overflows.
    pub ontic_states: Option<u64>,
    /// A finite model cannot give uncountably many pure states disjoint
    /// non-empty supports.
    pub psi_determinate: bool,
}

fn draw_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut remaining = shots;
    let mut mass = 1.0f64;
    let mut counts = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        if i + 1 == probs.len() {
            counts.push(remaining);
            break;
        }
        let c = if remaining == 0 || mass <= 0.0 {
            0
        } else {
            let r = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, r).map(|b| b.sample(rng)).unwrap_or(0)
        };
        counts.push(c);
        remaining -= c;
        mass -= p;
    }
    counts
}

/// Compares the Born statistics of each observable with those of its
/// snapped version, analytically and (with `shots`) by simulation.
pub fn finite_precision_report(
    exec: Execution,
    set: &MkcContextSet,
    preparations: &[Preparation],
    observables: &[(String, Observable)],
    shots: Option<u64>,
    seed: u64,
) -> Result<FinitePrecisionReport> {
    let snapped = observables
        .iter()
        .map(|(_, o)| snap_observable(o, set))
        .collect::<Result<Vec<_>>>()?;
    for p in preparations {
        if p.density.dim() != set.dim {
            return Err(Error::DimensionMismatch {
                expected: set.dim,
                got: p.density.dim(),
            });
        }
    }
    let items: Vec<(usize, usize)> = (0..observables.len())
        .flat_map(|o| (0..preparations.len()).map(move |p| (o, p)))
        .collect();
    let rows = exec.map_slice(&items, |&(o, p)| {
        let (name, obs) = &observables[o];
        let snap = &snapped[o];
        let ctx = &set.members[snap.member].context;
        let rho = preparations[p].density.matrix();
        let exact: Vec<f64> = obs
            .eigenvectors()
            .iter()
            .map(|v| trace_product(rho, &(v * v.adjoint())))
            .collect();
        let model: Vec<f64> = snap
            .matching
            .iter()
            .map(|&j| trace_product(rho, &ctx.projector(j)))
            .collect();
        let analytic_l1 = exact.iter().zip(&model).map(|(a, b)| (a - b).abs()).sum();
        let (sampled_l1, band) = match shots {
            Some(n) if n > 0 => {
                let mut rng = seed::rng(seed::derive(seed, &[stream::SAMPLING, o as u64, p as u64]));
                let counts = draw_counts(&model, n, &mut rng);
                let l1 = counts
                    .iter()
                    .zip(&exact)
                    .map(|(&c, e)| (c as f64 / n as f64 - e).abs())
                    .sum();
                let band = model
                    .iter()
                    .map(|q| 4.0 * (q * (1.0 - q) / n as f64).sqrt())
                    .sum();
                (Some(l1), Some(band))
            }
            _ => (None, None),
        };
        DeviationRow {
            observable: name.clone(),
            preparation: preparations[p].label.clone(),
            member: snap.label.clone(),
            defect: snap.defect,
            analytic_l1,
            sampled_l1,
            band,
        }
    });
    let bound = set.dim as f64 * set.epsilon;
    let max_analytic_l1 = rows.iter().map(|r| r.analytic_l1).fold(0.0, f64::max);
    let max_sampled_l1 = shots.map(|_| rows.iter().filter_map(|r| r.sampled_l1).fold(0.0, f64::max));
    let within_sampled = shots.map(|_| {
        rows.iter()
            .all(|r| r.sampled_l1.unwrap_or(0.0) <= bound + r.band.unwrap_or(0.0))
    });
    let ontic_states = (0..set.len()).try_fold(1u64, |acc, _| acc.checked_mul(set.dim as u64));
    Ok(FinitePrecisionReport {
        dim: set.dim,
        epsilon: set.epsilon,
        bound,
        shots,
        within_analytic: max_analytic_l1 <= bound,
        within_sampled,
        rows,
        max_analytic_l1,
        max_sampled_l1,
        ontic_states,
        psi_determinate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{random_context, DensityMatrix, Tolerances};

    fn targets(n: usize, seed: u64) -> Vec<Context> {
        (0..n)
            .map(|i| random_context(3, seed + i as u64).unwrap())
            .collect()
    }

    /// Every cross fidelity of every pair, computed directly.
    fn cross_fidelities(set: &MkcContextSet) -> Vec<f64> {
        let ms = set.members();
        let mut out = Vec::new();
        for i in 0..ms.len() {
            for j in i + 1..ms.len() {
                for u in ms[i].context.vectors() {
                    for w in ms[j].context.vectors() {
                        out.push(u.inner(w).norm_sqr());
                    }
                }
            }
        }
        out
    }

    #[test]
    fn single_target_is_trivially_accepted() {
        let set = generate_mkc(&targets(1, 1), 0.05, 1e-6, 3, 10).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.coverage()[0].defect < 0.05);
        assert!(set.incompatibility_scan(Execution::default()).passed);
    }

    #[test]
    fn eight_targets_meet_both_conditions() {
        let set = generate_mkc(&targets(8, 10), 0.05, 1e-4, 7, 100).unwrap();
        assert_eq!(set.len(), 8);
        for f in cross_fidelities(&set) {
            assert!(f > 1e-4 && f < 1.0 - 1e-4, "fidelity {f}");
        }
        for (t, c) in set.targets().iter().zip(set.coverage()) {
            for (e, f) in t.vectors().iter().zip(set.members()[c.member].context.vectors()) {
                assert!(e.inner(f).norm_sqr() > 1.0 - 0.05);
            }
        }
        set.validate().unwrap();
    }

    #[test]
    fn identical_targets_get_distinct_approximants() {
        let t = random_context(3, 99).unwrap();
        let set = generate_mkc(&[t.clone(), t], 0.05, 1e-6, 1, 100).unwrap();
        assert_eq!(set.len(), 2);
        assert!(!set.members()[0]
            .context
            .shares_projector(&set.members()[1].context));
        for f in cross_fidelities(&set) {
            assert!(f > 1e-6 && f < 1.0 - 1e-6);
        }
    }

    #[test]
    fn commuting_targets_exhaust_the_budget() {
        let c = Context::computational(3).unwrap();
        // a margin no ε/4 rotation can clear against an almost identical basis
        let err = generate_mkc(&[c.clone(), c], 0.01, 0.2, 1, 5).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { target: 1, .. }));
    }

    #[test]
    fn generation_is_deterministic_and_round_trips() {
        let a = generate_mkc(&targets(4, 20), 0.05, 1e-6, 5, 50).unwrap();
        let b = generate_mkc(&targets(4, 20), 0.05, 1e-6, 5, 50).unwrap();
        assert_eq!(a, b);
        let json = serde_json::to_string(&a).unwrap();
        let back: MkcContextSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back.members().len(), 4);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn snapping_target_observable() {
        let ts = targets(3, 30);
        let set = generate_mkc(&ts, 0.05, 1e-6, 2, 50).unwrap();
        let obs = Observable::from_spectrum(&[0.3, -1.0, 2.5], &ts[1]).unwrap();
        let snap = snap_observable(&obs, &set).unwrap();
        assert_eq!(snap.member, 1);
        assert!(snap.defect < 0.05);
        assert_eq!(snap.observable.eigenvalues(), obs.eigenvalues());
        assert!(snap.observable.min_gap() > 0.0);
    }

    #[test]
    fn degenerate_observable_is_rejected() {
        let set = generate_mkc(&targets(1, 40), 0.05, 1e-6, 2, 10).unwrap();
        let obs = Observable::diagonal(&[1.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            snap_observable(&obs, &set),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn uncovered_observable_is_rejected() {
        let set = generate_mkc(&targets(1, 50), 0.01, 1e-6, 2, 10).unwrap();
        let far = Observable::from_spectrum(&[1.0, 2.0, 3.0], &random_context(3, 12345).unwrap()).unwrap();
        assert!(matches!(
            snap_observable(&far, &set),
            Err(Error::NotCovered { .. })
        ));
    }

    #[test]
    fn analytic_deviation_within_d_epsilon() {
        let ts = targets(3, 60);
        let set = generate_mkc(&ts, 0.01, 1e-6, 9, 50).unwrap();
        let mut rng = seed::rng(5);
        let preps: Vec<Preparation> = (0..5)
            .map(|i| Preparation::pure(format!("p{i}"), PureState::random(3, &mut rng).unwrap()))
            .collect();
        let obs: Vec<(String, Observable)> = ts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                (
                    format!("A{i}"),
                    Observable::from_spectrum(&[-1.0, 0.5, 2.0], t).unwrap(),
                )
            })
            .collect();
        let rep =
            finite_precision_report(Execution::default(), &set, &preps, &obs, Some(100_000), 3).unwrap();
        assert!(rep.within_analytic);
        assert!(rep.max_analytic_l1 <= 0.03);
        assert_eq!(rep.within_sampled, Some(true));
        assert!(!rep.psi_determinate);
        assert_eq!(rep.ontic_states, Some(27));
    }

    #[test]
    fn compatible_observable_has_zero_deviation() {
        let set = generate_mkc(&targets(1, 70), 0.05, 1e-6, 2, 10).unwrap();
        let member = set.members()[0].context.clone();
        let obs = Observable::from_spectrum(&[1.0, 2.0, 3.0], &member).unwrap();
        let rho = DensityMatrix::new(
            PureState::from_real(&[1.0, 2.0, 0.5]).unwrap().projector(),
            &Tolerances::default(),
        )
        .unwrap();
        let rep = finite_precision_report(
            Execution::Sequential,
            &set,
            &[Preparation::mixed("rho", rho)],
            &[("A".into(), obs)],
            None,
            0,
        )
        .unwrap();
        assert!(rep.max_analytic_l1 < 1e-12);
    }

    #[test]
    fn multinomial_counts_sum_to_shots() {
        let mut rng = seed::rng(1);
        let c = draw_counts(&[0.2, 0.5, 0.3], 1000, &mut rng);
        assert_eq!(c.iter().sum::<u64>(), 1000);
    }
}
