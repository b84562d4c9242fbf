//! Product ontic spaces over a finite list of contexts.
//!
//! An ontic state picks one basis vector from every context, and a pure state
//! `ψ` induces the product of its Born distributions over the contexts. The
//! Gudder model and the finite-precision models both live on this space.

pub mod event;

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use event::{CylinderEvent, Event, MAX_COUPLED};

use crate::error::{Error, Result};
use crate::ontic::{
    DistanceEstimate, DistanceMethod, EpistemicModel, EpistemicRef, EpistemicState, OnticModel, OnticSpace,
    ResponseFunction,
};
use crate::par::Execution;
use crate::quantum::{context_containing, Context, Fragment, Povm, Preparation, PureState, MAX_DIM};
use crate::seed::{self, stream};

/// Weights below this are treated as exact zeros.
pub const WEIGHT_FLOOR: f64 = 1e-24;

/// Largest product space enumerated for exact distances or materialization.
pub const ENUMERATION_LIMIT: u64 = 1 << 20;

/// An ordered, labelled list of contexts of one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ContextListDoc", into = "ContextListDoc")]
pub struct ContextList {
    dim: usize,
    contexts: Vec<Context>,
}

#[derive(Serialize, Deserialize)]
struct ContextListDoc {
    dim: usize,
    contexts: Vec<Context>,
}

impl TryFrom<ContextListDoc> for ContextList {
    type Error = Error;
    fn try_from(doc: ContextListDoc) -> Result<Self> {
        ContextList::new(doc.dim, doc.contexts)
    }
}

impl From<ContextList> for ContextListDoc {
    fn from(l: ContextList) -> Self {
        ContextListDoc {
            dim: l.dim,
            contexts: l.contexts,
        }
    }
}

impl ContextList {
    pub fn new(dim: usize, contexts: Vec<Context>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut list = ContextList {
            dim,
            contexts: Vec::with_capacity(contexts.len()),
        };
        for c in contexts {
            list.push(c)?;
        }
        Ok(list)
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    /// Appends a context; labels must be unique.
    pub fn push(&mut self, context: Context) -> Result<usize> {
        if context.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: context.dim(),
            });
        }
        if self.contexts.iter().any(|c| c.label() == context.label()) {
            return Err(Error::InvalidModel(format!(
                "duplicate context label `{}`",
                context.label()
            )));
        }
        self.contexts.push(context);
        Ok(self.contexts.len() - 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn get(&self, i: usize) -> Option<&Context> {
        self.contexts.get(i)
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.dim; self.contexts.len()]
    }

    /// The sub-list with the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<ContextList> {
        let picked = indices
            .iter()
            .map(|&i| {
                self.contexts
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidParameter(format!("context index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        ContextList::new(self.dim, picked)
    }

    /// `(context, member)` for every context having `[psi]` as a member.
    pub fn containing(&self, psi: &PureState) -> Vec<(usize, usize)> {
        self.contexts
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.position(psi).map(|j| (i, j)))
            .collect()
    }

    /// Returns `k` contexts containing `[psi]`, appending seeded random ones
    /// (with `psi` as first member) when fewer exist.
    pub fn ensure_containing(&mut self, psi: &PureState, k: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: psi.dim(),
            });
        }
        let mut found = self.containing(psi);
        while found.len() < k {
            let idx = self.len();
            let mut label = format!("c{idx}");
            while self.contexts.iter().any(|c| c.label() == label) {
                label.push('\'');
            }
            let mut rng = seed::rng(seed::derive(seed, &[stream::CONTEXTS, idx as u64]));
            let ctx = context_containing(psi, label, &mut rng)?;
            self.push(ctx)?;
            found.push((idx, 0));
        }
        found.truncate(k);
        Ok(found)
    }

    /// Born weights of `psi` on every context, with tiny weights snapped to 0.
    pub fn weights(&self, psi: &PureState) -> Result<Vec<Vec<f64>>> {
        self.contexts.iter().map(|c| Ok(snap(c.weights(psi)?))).collect()
    }
}

fn snap(mut w: Vec<f64>) -> Vec<f64> {
    for x in &mut w {
        if *x < WEIGHT_FLOOR {
            *x = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// A point of the product space: one member index per context.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GudderOnticState {
    pub indices: Vec<usize>,
}

/// The product of per-context Born distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct GudderMeasure {
    weights: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
}

impl GudderMeasure {
    pub fn new(psi: &PureState, contexts: &ContextList) -> Result<Self> {
        Ok(Self::from_weights(contexts.weights(psi)?))
    }

    /// Builds from per-coordinate distributions (each summing to one).
    pub fn from_weights(weights: Vec<Vec<f64>>) -> Self {
        let cumulative = weights
            .iter()
            .map(|w| {
                w.iter()
                    .scan(0.0, |acc, &x| {
                        *acc += x;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        GudderMeasure { weights, cumulative }
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn coordinates(&self) -> usize {
        self.weights.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GudderOnticState {
        let indices = self
            .weights
            .iter()
            .zip(&self.cumulative)
            .map(|(w, cum)| {
                let u = rng.random::<f64>() * cum.last().copied().unwrap_or(1.0);
                let mut i = cum.partition_point(|&c| c <= u).min(w.len() - 1);
                while w[i] == 0.0 && i > 0 {
                    i -= 1;
                }
                i
            })
            .collect();
        GudderOnticState { indices }
    }

    /// `ln μ({λ})` as a sum of coordinate logs.
    pub fn log_mass(&self, point: &GudderOnticState) -> Result<f64> {
        if point.indices.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: point.indices.len(),
            });
        }
        point
            .indices
            .iter()
            .zip(&self.weights)
            .try_fold(0.0, |acc, (&i, w)| {
                w.get(i)
                    .map(|x| acc + x.ln())
                    .ok_or_else(|| Error::InvalidEvent(format!("index {i} out of range")))
            })
    }

    pub fn measure(&self, event: &Event) -> Result<f64> {
        event.measure(&self.weights)
    }

    /// `∏_c Σ_i √(p_ci q_ci)`.
    pub fn bhattacharyya(&self, other: &GudderMeasure) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(p, q)| p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum::<f64>().min(1.0))
            .product())
    }

    fn check_same(&self, other: &GudderMeasure) -> Result<()> {
        let shape = |m: &GudderMeasure| m.weights.iter().map(Vec::len).collect::<Vec<_>>();
        if shape(self) != shape(other) {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: other.weights.len(),
            });
        }
        Ok(())
    }

    /// Exact variational distance when the common support has at most
    /// `limit` points, else the Bhattacharyya lower bound.
    pub fn variational_distance(
        &self,
        other: &GudderMeasure,
        exec: Execution,
        limit: u64,
    ) -> Result<DistanceEstimate> {
        self.check_same(other)?;
        product_distance(exec, &self.weights, &other.weights, limit)
    }
}

fn product_distance(exec: Execution, p: &[Vec<f64>], q: &[Vec<f64>], limit: u64) -> Result<DistanceEstimate> {
    // coordinates with identical marginals factor out of the overlap
    let mut coords: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut bc = 1.0;
    for (a, b) in p.iter().zip(q) {
        if a == b {
            continue;
        }
        let (ra, rb): (Vec<f64>, Vec<f64>) = a
            .iter()
            .zip(b)
            .filter(|(x, y)| **x > 0.0 && **y > 0.0)
            .map(|(x, y)| (*x, *y))
            .unzip();
        if ra.is_empty() {
            return Ok(DistanceEstimate::exact(1.0));
        }
        bc *= ra
            .iter()
            .zip(&rb)
            .map(|(x, y)| (x * y).sqrt())
            .sum::<f64>()
            .min(1.0);
        coords.push((ra, rb));
    }
    if coords.is_empty() {
        return Ok(DistanceEstimate::exact(0.0));
    }
    let size = coords
        .iter()
        .try_fold(1u64, |acc, (a, _)| acc.checked_mul(a.len() as u64))
        .filter(|&s| s <= limit);
    let Some(size) = size else {
        return Ok(DistanceEstimate {
            value: (1.0 - bc).clamp(0.0, 1.0),
            method: DistanceMethod::Bhattacharyya,
        });
    };
    const CHUNK: u64 = 1 << 12;
    let chunks = size.div_ceil(CHUNK) as usize;
    let partial = exec.map_range(chunks, |ch| {
        let start = ch as u64 * CHUNK;
        let end = (start + CHUNK).min(size);
        let mut sum = 0.0;
        for mut idx in start..end {
            let (mut pa, mut pb) = (1.0, 1.0);
            for (a, b) in coords.iter().rev() {
                let n = a.len() as u64;
                let i = (idx % n) as usize;
                idx /= n;
                pa *= a[i];
                pb *= b[i];
            }
            sum += pa.min(pb);
        }
        sum
    });
    let overlap: f64 = partial.iter().sum();
    Ok(DistanceEstimate::exact((1.0 - overlap).clamp(0.0, 1.0)))
}

/// Pure preparations on a product space, each with its product measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductModel {
    contexts: ContextList,
    preparations: Vec<(String, PureState)>,
    measures: Vec<GudderMeasure>,
    exec: Execution,
    limit: u64,
}

impl ProductModel {
    pub fn new(contexts: ContextList, preparations: Vec<(String, PureState)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (label, psi) in &preparations {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidModel(format!("duplicate preparation `{label}`")));
            }
            if psi.dim() != contexts.dim() {
                return Err(Error::DimensionMismatch {
                    expected: contexts.dim(),
                    got: psi.dim(),
                });
            }
        }
        let measures = preparations
            .iter()
            .map(|(_, psi)| GudderMeasure::new(psi, &contexts))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductModel {
            contexts,
            preparations,
            measures,
            exec: Execution::default(),
            limit: ENUMERATION_LIMIT,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Caps the support size enumerated for exact distances.
    pub fn with_enumeration_limit(mut self, limit: u64) -> Self {
        self.limit = limit;
        self
    }

    pub fn contexts(&self) -> &ContextList {
        &self.contexts
    }

    pub fn preparations(&self) -> &[(String, PureState)] {
        &self.preparations
    }

    fn index(&self, label: &str) -> Result<usize> {
        self.preparations
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn state(&self, label: &str) -> Result<&PureState> {
        Ok(&self.preparations[self.index(label)?].1)
    }

    pub fn measure(&self, label: &str) -> Result<&GudderMeasure> {
        Ok(&self.measures[self.index(label)?])
    }

    fn lookup(&self, who: EpistemicRef<'_>) -> Result<&GudderMeasure> {
        if who.index != 0 {
            return Err(Error::UnknownLabel(format!("{}[{}]", who.label, who.index)));
        }
        self.measure(who.label)
    }

    /// Number of ontic states, if it fits in a `u64`.
    pub fn space_size(&self) -> Option<u64> {
        (0..self.contexts.len()).try_fold(1u64, |acc, _| acc.checked_mul(self.contexts.dim() as u64))
    }

    /// Lists the space explicitly: labels are member indices joined by `.`
    /// (first context most significant), one projective measurement per
    /// context with deterministic responses.
    pub fn materialize(&self, limit: u64) -> Result<OnticModel> {
        let n = self
            .space_size()
            .filter(|&n| n <= limit.min(ENUMERATION_LIMIT))
            .ok_or_else(|| Error::SpaceTooLarge(format!("{}^{}", self.contexts.dim(), self.contexts.len())))?
            as usize;
        let d = self.contexts.dim();
        let m = self.contexts.len();
        let digits = |mut idx: usize| {
            let mut out = vec![0; m];
            for slot in out.iter_mut().rev() {
                *slot = idx % d;
                idx /= d;
            }
            out
        };
        let points: Vec<Vec<usize>> = (0..n).map(digits).collect();
        let labels = points
            .iter()
            .map(|p| p.iter().map(usize::to_string).collect::<Vec<_>>().join("."))
            .collect();
        let responses = self
            .contexts
            .contexts()
            .iter()
            .enumerate()
            .map(|(c, ctx)| ResponseFunction {
                quantity: ctx.label().to_string(),
                outcomes: (0..d).map(|i| i.to_string()).collect(),
                table: points
                    .iter()
                    .map(|p| (0..d).map(|i| if p[c] == i { 1.0 } else { 0.0 }).collect())
                    .collect(),
            })
            .collect();
        let epistemic = self
            .preparations
            .iter()
            .zip(&self.measures)
            .map(|((label, _), mu)| {
                let w = points
                    .iter()
                    .map(|p| p.iter().zip(mu.weights()).map(|(&i, w)| w[i]).product())
                    .collect();
                Ok((label.clone(), vec![EpistemicState::new(label.clone(), w)?]))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        let fragment = Fragment {
            dim: d,
            preparations: self
                .preparations
                .iter()
                .map(|(l, psi)| Preparation::pure(l.clone(), psi.clone()))
                .collect(),
            measurements: self.contexts.contexts().iter().map(Povm::projective).collect(),
        };
        OnticModel::new(fragment, OnticSpace::new(labels)?, responses, epistemic)
    }
}

impl EpistemicModel for ProductModel {
    type Event = Event;
    type Point = GudderOnticState;

    fn pure_preparations(&self) -> Vec<String> {
        self.preparations.iter().map(|(l, _)| l.clone()).collect()
    }

    fn epistemic_count(&self, label: &str) -> Option<usize> {
        self.index(label).ok().map(|_| 1)
    }

    fn distance(&self, a: EpistemicRef<'_>, b: EpistemicRef<'_>) -> Result<DistanceEstimate> {
        self.lookup(a)?
            .variational_distance(self.lookup(b)?, self.exec, self.limit)
    }

    fn event_measure(&self, who: EpistemicRef<'_>, event: &Event) -> Result<f64> {
        self.lookup(who)?.measure(event)
    }

    fn disjoint(&self, a: &Event, b: &Event) -> Result<bool> {
        a.disjoint(b, &self.contexts.dims())
    }

    fn sample<R: Rng + ?Sized>(&self, who: EpistemicRef<'_>, rng: &mut R) -> Result<GudderOnticState> {
        Ok(self.lookup(who)?.sample(rng))
    }

    fn log_mass(&self, who: EpistemicRef<'_>, point: &GudderOnticState) -> Result<f64> {
        self.lookup(who)?.log_mass(point)
    }
}
