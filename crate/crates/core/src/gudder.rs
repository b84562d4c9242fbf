//! Finite truncations of Gudder's contextual value-definite model.
//!
//! An ontic state picks the "true" projector in every context of a finite
//! list; `ψ` is represented by the product of its Born distributions. The
//! module builds the model, evaluates value assignments, and constructs the
//! support sets and the two disjointification strategies for finite state
//! lists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontic::{is_psi_ontic_with, DistanceMethod, EpistemicModel, EpistemicRef, SupportAssignment};
use crate::par::Execution;
use crate::product::{ContextList, CylinderEvent, Event, GudderMeasure, GudderOnticState, ProductModel};
use crate::quantum::{fidelity, projectors_commute, trace_product, Observable, PureState};
use crate::seed;

fn check_gudder_dim(dim: usize) -> Result<()> {
    if dim <= 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(())
}

/// The Gudder model over `contexts` for the given pure preparations.
///
/// The model is symbolic; [`ProductModel::materialize`] lists the space
/// when `d^m ≤ 2^20`.
pub fn build_gudder(contexts: ContextList, preparations: Vec<(String, PureState)>) -> Result<ProductModel> {
    check_gudder_dim(contexts.dim())?;
    if contexts.is_empty() {
        return Err(Error::InvalidModel("context list is empty".into()));
    }
    ProductModel::new(contexts, preparations)
}

/// `v_λ[A|C] = Tr(A λ(C))`.
pub fn value_assignment(
    lambda: &GudderOnticState,
    observable: &Observable,
    context: usize,
    contexts: &ContextList,
) -> Result<f64> {
    let ctx = contexts
        .get(context)
        .ok_or_else(|| Error::InvalidParameter(format!("context index {context} out of range")))?;
    if observable.dim() != ctx.dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.dim(),
            got: observable.dim(),
        });
    }
    let norm = ctx.commutator_defect(observable.matrix());
    if norm >= 1e-10 {
        return Err(Error::Incompatible { context, norm });
    }
    let i = *lambda
        .indices
        .get(context)
        .ok_or_else(|| Error::InvalidEvent(format!("ontic state has no coordinate {context}")))?;
    if i >= ctx.dim() {
        return Err(Error::InvalidEvent(format!("index {i} out of range")));
    }
    Ok(trace_product(observable.matrix(), &ctx.projector(i)))
}

/// `μ(Δ) = ∏_C Σ_{i ∈ S_C} |⟨ψ|e_i⟩|²`.
pub fn cylinder_measure(mu: &GudderMeasure, event: &CylinderEvent) -> Result<f64> {
    let mut p = 1.0;
    for (c, mask) in event.constraints() {
        let w = mu
            .weights()
            .get(c)
            .ok_or_else(|| Error::InvalidEvent(format!("coordinate {c} beyond the context list")))?;
        if mask >> w.len() != 0 {
            return Err(Error::InvalidEvent(format!(
                "value out of range on coordinate {c}"
            )));
        }
        p *= w
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, x)| x)
            .sum::<f64>();
    }
    Ok(p)
}

/// `λ(C) = [ψ]` on the first `k` contexts containing `[ψ]`.
pub fn support_set(psi: &PureState, k: usize, contexts: &ContextList) -> Result<CylinderEvent> {
    let found = contexts.containing(psi);
    if found.len() < k {
        return Err(Error::InsufficientContexts {
            found: found.len(),
            needed: k,
        });
    }
    found[..k]
        .iter()
        .try_fold(CylinderEvent::full(), |ev, &(c, j)| ev.restrict(c, &[j]))
}

/// `λ(C) = [ψ]` on every listed context containing `[ψ]`.
pub fn strict_support(psi: &PureState, contexts: &ContextList) -> Result<CylinderEvent> {
    contexts
        .containing(psi)
        .into_iter()
        .try_fold(CylinderEvent::full(), |ev, (c, j)| ev.restrict(c, &[j]))
}

/// A draw from `mu`, deterministic per seed.
pub fn sample_ontic_state(mu: &GudderMeasure, seed: u64) -> GudderOnticState {
    mu.sample(&mut seed::rng(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedMeasure {
    pub label: String,
    /// `μ_ψ(Λ^m_ψ)`, evaluated exactly.
    pub measure: f64,
    /// `1 - Σ_{j≠i} |⟨ψ_i|ψ_j⟩|^{2k}`.
    pub union_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalModification {
    pub k: usize,
    pub assignment: SupportAssignment<Event>,
    pub measures: Vec<ModifiedMeasure>,
}

/// Finite canonical modification: state `i` keeps its support set minus the
/// support sets of every later state, so the result is exactly disjoint.
///
/// Missing ψ-containing contexts are appended to `contexts` from `seed`.
/// With `floor`, every measure must reach it.
pub fn canonical_modification(
    states: &[(String, PureState)],
    k: usize,
    contexts: &mut ContextList,
    seed: u64,
    floor: Option<f64>,
) -> Result<CanonicalModification> {
    check_gudder_dim(contexts.dim())?;
    if states.len() < 2 {
        return Err(Error::InvalidParameter(
            "canonical modification needs at least two states".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    for (i, (a, psi)) in states.iter().enumerate() {
        for (b, phi) in &states[i + 1..] {
            if psi.ray_eq(phi) {
                return Err(Error::InvalidParameter(format!(
                    "states `{a}` and `{b}` are the same ray"
                )));
            }
        }
    }
    let mut supports = Vec::with_capacity(states.len());
    for (i, (_, psi)) in states.iter().enumerate() {
        contexts.ensure_containing(psi, k, seed::derive(seed, &[i as u64]))?;
    }
    for (_, psi) in states {
        supports.push(Event::from(support_set(psi, k, contexts)?));
    }

    let mut assignment = SupportAssignment::new(Default::default());
    let mut measures = Vec::with_capacity(states.len());
    for (i, (label, psi)) in states.iter().enumerate() {
        let event = supports[i + 1..]
            .iter()
            .fold(supports[i].clone(), |acc, s| acc.and(s.clone().complement()));
        let mu = GudderMeasure::new(psi, contexts)?;
        let measure = mu.measure(&event)?;
        let mut overlap = 0.0;
        for (j, (_, phi)) in states.iter().enumerate() {
            if j != i {
                overlap += fidelity(psi, phi)?.powi(k as i32);
            }
        }
        if let Some(floor) = floor {
            if measure < floor {
                return Err(Error::MeasureFloorNotMet {
                    state: label.clone(),
                    measure,
                    floor,
                });
            }
        }
        assignment.supports.insert(label.clone(), event);
        measures.push(ModifiedMeasure {
            label: label.clone(),
            measure,
            union_bound: 1.0 - overlap,
        });
    }
    Ok(CanonicalModification {
        k,
        assignment,
        measures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerpendicularSplit {
    /// Gram-Schmidt of `ψ` against `φ`.
    pub phi_prime: PureState,
    /// `|⟨φ'|ψ⟩|²`.
    pub overlap: f64,
    /// `Λ_ψ ∩ U` with `U = ⋃_i {λ(C_i) = [φ']}`.
    pub first: Event,
    /// `Λ_φ ∩ U^c`.
    pub second: Event,
    /// `μ_ψ(U)`.
    pub psi_measure: f64,
    /// `μ_φ(U)`, zero exactly.
    pub phi_measure: f64,
}

/// Separates `ψ` and `φ` through `k` contexts containing a state `φ'`
/// orthogonal to `φ` but not to `ψ`.
pub fn perpendicular_disjointification(
    psi: &PureState,
    phi: &PureState,
    k: usize,
    contexts: &mut ContextList,
    seed: u64,
) -> Result<PerpendicularSplit> {
    check_gudder_dim(contexts.dim())?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if projectors_commute(psi, phi)? {
        return Err(Error::Commuting);
    }
    let (u, v) = (phi.amplitudes(), psi.amplitudes());
    let phi_prime = PureState::new(v - u * u.dotc(v))?;
    let overlap = fidelity(&phi_prime, psi)?;

    contexts.ensure_containing(psi, k, seed::derive(seed, &[0]))?;
    contexts.ensure_containing(phi, k, seed::derive(seed, &[1]))?;
    let found = contexts.ensure_containing(&phi_prime, k, seed::derive(seed, &[2]))?;
    let union = Event::Union(
        found
            .iter()
            .map(|&(c, j)| CylinderEvent::point(c, j).map(Event::from))
            .collect::<Result<Vec<_>>>()?,
    );
    let first = Event::from(support_set(psi, k, contexts)?).and(union.clone());
    let second = Event::from(support_set(phi, k, contexts)?).and(union.clone().complement());
    let psi_measure = GudderMeasure::new(psi, contexts)?.measure(&union)?;
    let phi_measure = GudderMeasure::new(phi, contexts)?.measure(&union)?;
    Ok(PerpendicularSplit {
        phi_prime,
        overlap,
        first,
        second,
        psi_measure,
        phi_measure,
    })
}

/// One row of an overlap trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub k: usize,
    /// Present when the common support was small enough to enumerate.
    pub exact_tv: Option<f64>,
    /// `1 - ∏_C BC_C`.
    pub tv_lower_bound: f64,
    /// `∏_C BC_C`.
    pub overlap_upper_bound: f64,
}

/// Variational distance between `μ_ψ` and `μ_φ` restricted to the first `k`
/// ψ-containing and first `k` φ-containing contexts, for each `k`.
pub fn overlap_trajectory(
    exec: Execution,
    psi: &PureState,
    phi: &PureState,
    ks: &[usize],
    contexts: &mut ContextList,
    seed: u64,
) -> Result<Vec<TrajectoryRow>> {
    check_gudder_dim(contexts.dim())?;
    let kmax = ks.iter().copied().max().unwrap_or(0);
    let on_psi = contexts.ensure_containing(psi, kmax, seed::derive(seed, &[0]))?;
    let on_phi = contexts.ensure_containing(phi, kmax, seed::derive(seed, &[1]))?;
    let contexts = &*contexts;
    exec.map_slice(ks, |&k| {
        let mut idx: Vec<usize> = on_psi[..k].iter().chain(&on_phi[..k]).map(|&(c, _)| c).collect();
        idx.sort_unstable();
        idx.dedup();
        let sub = contexts.select(&idx)?;
        let model = ProductModel::new(
            sub,
            vec![("psi".into(), psi.clone()), ("phi".into(), phi.clone())],
        )?
        .with_execution(Execution::Sequential);
        let d = model.distance(EpistemicRef::new("psi", 0), EpistemicRef::new("phi", 0))?;
        let bc = model.measure("psi")?.bhattacharyya(model.measure("phi")?)?;
        Ok(TrajectoryRow {
            k,
            exact_tv: (d.method == DistanceMethod::Exact).then_some(d.value),
            tv_lower_bound: 1.0 - bc,
            overlap_upper_bound: bc,
        })
    })
    .into_iter()
    .collect()
}

/// One point of an onticity scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub k: usize,
    pub min_distance: f64,
    /// Whether any pair fell back to the Bhattacharyya bound.
    pub bound_used: bool,
}

/// Minimum pairwise distance of a state list over a `k` grid, each model
/// using the first `k` contexts containing each state.
pub fn onticity_scan(
    exec: Execution,
    states: &[(String, PureState)],
    ks: &[usize],
    contexts: &mut ContextList,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    check_gudder_dim(contexts.dim())?;
    if states.len() < 2 {
        return Err(Error::InvalidParameter("a scan needs at least two states".into()));
    }
    let kmax = ks.iter().copied().max().unwrap_or(0);
    let mut owned = Vec::with_capacity(states.len());
    for (i, (_, psi)) in states.iter().enumerate() {
        owned.push(contexts.ensure_containing(psi, kmax, seed::derive(seed, &[i as u64]))?);
    }
    let contexts = &*contexts;
    exec.map_slice(ks, |&k| {
        let mut idx: Vec<usize> = owned
            .iter()
            .flat_map(|o| o[..k].iter().map(|&(c, _)| c))
            .collect();
        idx.sort_unstable();
        idx.dedup();
        let model =
            ProductModel::new(contexts.select(&idx)?, states.to_vec())?.with_execution(Execution::Sequential);
        let report = is_psi_ontic_with(Execution::Sequential, &model, 0.0)?;
        Ok(ScanRow {
            k,
            min_distance: report.min_distance.unwrap_or(1.0),
            bound_used: report
                .pairs
                .iter()
                .any(|p| p.bound_used == DistanceMethod::Bhattacharyya),
        })
    })
    .into_iter()
    .collect()
}
