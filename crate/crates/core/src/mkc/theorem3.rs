//! Nested refinements around a pure state that keep its measure above
//! `1 - 1/n` while every context stays totally incompatible.
//!
//! For `k = 1..=K` a context is added whose first vector has infidelity at
//! most `q_n^k` with `ψ`. Its measure under the product measure of `ψ` is
//! `∏_k F_k ≥ ∏_k (1 - q_n^k) > E(q_n) = 1 - 1/n`.

use serde::{Deserialize, Serialize};

use super::euler::{EulerSchedule, EulerValue};
use super::{context_from_columns, perturbed, unitary_minus_identity, MkcContextSet, MkcMember, Refinement};
use crate::error::{Error, Result};
use crate::product::CylinderEvent;
use crate::quantum::{
    complete_basis, fidelity, vector_fidelity, vector_infidelity, CMatrix, CVector, PureState, C64,
};
use crate::seed::{self, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Step {
    pub k: usize,
    pub member: usize,
    /// `q_n^k`.
    pub precision: f64,
    /// `1 - Tr([ψ][ψ_k])`.
    pub infidelity: f64,
    pub phi_fidelity: Option<f64>,
}

/// Decay of a second state's measure on the same event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiDecay {
    /// `Tr([ψ][φ])`.
    pub fidelity: f64,
    pub mu_phi: f64,
    /// `(1 - Tr([ψ][φ])) / 2`.
    pub delta: f64,
    /// Every factor after step `k0` is below `1 - δ`; `None` if the last
    /// factor is not.
    pub k0: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub n: u32,
    pub depth: usize,
    pub q_n: f64,
    /// `1 - 1/n`.
    pub bound: f64,
    pub euler: EulerValue,
    pub mu_psi: f64,
    /// `1 - μ_ψ`, computed without cancellation.
    pub mu_psi_deficit: f64,
    pub bound_holds: bool,
    /// `μ_ψ ≥ ∏_{k≤K} (1 - q_n^k)`.
    pub exceeds_euler_product: bool,
    pub steps: Vec<Theorem3Step>,
    /// The event `{λ : λ_{C_k} = ψ_k for all k}` over the set's members.
    pub event: CylinderEvent,
    pub phi: Option<PhiDecay>,
}

fn frame_coordinates(set: &MkcContextSet, frame: usize, v: &CVector) -> CVector {
    set.frames[frame].matrix.adjoint() * v
}

fn refine(
    set: &mut MkcContextSet,
    frame: usize,
    n: u32,
    k: usize,
    precision: f64,
    seed: u64,
    budget: usize,
) -> Result<usize> {
    let label = format!("t3-f{frame}-n{n}-k{k}");
    if let Some(i) = set.position(&label) {
        return Ok(i);
    }
    let d = set.dim;
    let angle = precision.sqrt() / 4.0;
    let w = set.frames[frame].matrix.clone();
    let mut e1 = CVector::zeros(d);
    e1[0] = C64::new(1.0, 0.0);
    let mut blocking = None;
    for r in 0..budget {
        let mut rng = seed::rng(seed::derive(
            seed,
            &[stream::THEOREM3, frame as u64, n as u64, k as u64, r as u64],
        ));
        let basis = complete_basis(vec![e1.clone()], d, &mut rng)?;
        let rotation = CMatrix::from_columns(&basis);
        let delta = unitary_minus_identity(d, angle, &mut rng);
        let coords = perturbed(&rotation, &delta);
        let infid = vector_infidelity(&e1, &coords.column(0).into_owned());
        if infid >= precision {
            continue;
        }
        let candidate = MkcMember {
            context: context_from_columns(label.clone(), &(&w * &coords))?,
            target: None,
            refinement: Some(Refinement {
                frame,
                coords,
                scale: angle * angle,
            }),
        };
        match set.admits(&candidate) {
            Ok(()) => {
                set.members.push(candidate);
                return Ok(set.members.len() - 1);
            }
            Err(pair) => blocking = Some(pair),
        }
    }
    let pair = blocking.map(|p| (p.first, p.second, p.fidelity));
    let (first, second, fidelity) = pair.unwrap_or((label, String::new(), f64::NAN));
    Err(Error::BudgetExhausted {
        target: k,
        first,
        second,
        fidelity,
    })
}

/// Adds (or reuses) the `K` refined contexts for `(ψ, n)` and reports the
/// measure of the nested event under `ψ` and, optionally, under `φ`.
pub fn theorem3_set(
    psi: &PureState,
    n: u32,
    depth: usize,
    set: &mut MkcContextSet,
    phi: Option<&PureState>,
    seed: u64,
    budget: usize,
) -> Result<Theorem3Report> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be positive".into()));
    }
    if budget == 0 {
        return Err(Error::InvalidParameter("retry budget must be positive".into()));
    }
    let schedule = EulerSchedule::new(n, depth)?;
    let frame = set.frame_for(psi, seed::derive(seed, &[stream::THEOREM3]))?;
    let phi_frame = match phi {
        Some(p) => {
            let f = fidelity(psi, p)?;
            if p.ray_eq(psi) {
                return Err(Error::InvalidParameter("φ must differ from ψ".into()));
            }
            Some((f, frame_coordinates(set, frame, p.amplitudes())))
        }
        None => None,
    };
    let mut e1 = CVector::zeros(set.dim);
    e1[0] = C64::new(1.0, 0.0);
    let mut steps = Vec::with_capacity(depth);
    for k in 1..=depth {
        let precision = schedule.precision(k);
        let member = refine(set, frame, n, k, precision, seed, budget)?;
        let Some(refinement) = &set.members[member].refinement else {
            unreachable!("refined members carry frame coordinates")
        };
        let v = refinement.coords.column(0).into_owned();
        steps.push(Theorem3Step {
            k,
            member,
            precision,
            infidelity: vector_infidelity(&e1, &v),
            phi_fidelity: phi_frame.as_ref().map(|(_, c)| vector_fidelity(c, &v)),
        });
    }
    let log_mu: f64 = steps.iter().map(|s| (-s.infidelity).ln_1p()).sum();
    let mu_psi = log_mu.exp();
    let mu_psi_deficit = -log_mu.exp_m1();
    let bound = 1.0 - 1.0 / n as f64;
    let phi = phi_frame.map(|(f, _)| {
        let delta = 0.5 * (1.0 - f);
        let factors: Vec<f64> = steps.iter().filter_map(|s| s.phi_fidelity).collect();
        let k0 = match factors.iter().rposition(|&g| g >= 1.0 - delta) {
            None => Some(0),
            Some(i) if i + 1 < factors.len() => Some(i + 1),
            Some(_) => None,
        };
        PhiDecay {
            fidelity: f,
            mu_phi: factors.iter().product(),
            delta,
            k0,
        }
    });
    let mut event = CylinderEvent::full();
    for s in &steps {
        event = event.restrict(s.member, &[0])?;
    }
    Ok(Theorem3Report {
        n,
        depth,
        q_n: schedule.q_n,
        bound,
        euler: schedule.euler,
        mu_psi,
        mu_psi_deficit,
        bound_holds: mu_psi_deficit < 1.0 / n as f64,
        exceeds_euler_product: mu_psi_deficit <= 1.0 - schedule.euler.product,
        steps,
        event,
        phi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub n: u32,
    pub depth: usize,
    pub q_n: f64,
    pub mu_psi: f64,
    pub mu_phi: f64,
    pub euler_lower_bound: f64,
}

/// `μ_ψ` and `μ_φ` of the nested event over a grid of `n` and depths.
pub fn tail_diagnostic(
    psi: &PureState,
    phi: &PureState,
    ns: &[u32],
    depths: &[usize],
    set: &mut MkcContextSet,
    seed: u64,
    budget: usize,
) -> Result<Vec<TailRow>> {
    let Some(&deepest) = depths.iter().max() else {
        return Ok(Vec::new());
    };
    let mut rows = Vec::with_capacity(ns.len() * depths.len());
    for &n in ns {
        let report = theorem3_set(psi, n, deepest, set, Some(phi), seed, budget)?;
        for &k in depths {
            let prefix = &report.steps[..k];
            let mu_psi = prefix.iter().map(|s| (-s.infidelity).ln_1p()).sum::<f64>().exp();
            let mu_phi = prefix.iter().filter_map(|s| s.phi_fidelity).product();
            let euler = super::euler::euler_function(report.q_n, k)?;
            rows.push(TailRow {
                n,
                depth: k,
                q_n: report.q_n,
                mu_psi,
                mu_phi,
                euler_lower_bound: euler.lower,
            });
        }
    }
    Ok(rows)
}
