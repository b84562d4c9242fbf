//! Events on a product ontic space `Λ = ∏_c {0, …, d-1}`.
//!
//! A cylinder fixes the allowed values on finitely many coordinates; the
//! algebra closes cylinders under complement, finite intersection and finite
//! union. Measures under product distributions are evaluated exactly by
//! splitting formulas into blocks of independent coordinates and
//! conditioning on shared coordinates inside a block.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of coupled coordinates evaluated by conditioning.
pub const MAX_COUPLED: usize = 20;

/// `{λ : λ_c ∈ A_c for every constrained c}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "CylinderDoc", into = "CylinderDoc")]
pub struct CylinderEvent {
    masks: BTreeMap<usize, u32>,
}

#[derive(Serialize, Deserialize)]
struct CylinderDoc {
    constraints: BTreeMap<usize, Vec<usize>>,
}

impl TryFrom<CylinderDoc> for CylinderEvent {
    type Error = Error;
    fn try_from(doc: CylinderDoc) -> Result<Self> {
        let mut ev = CylinderEvent::full();
        for (c, values) in doc.constraints {
            ev = ev.restrict(c, &values)?;
        }
        Ok(ev)
    }
}

impl From<CylinderEvent> for CylinderDoc {
    fn from(ev: CylinderEvent) -> Self {
        CylinderDoc {
            constraints: ev
                .masks
                .iter()
                .map(|(&c, &m)| (c, (0..32).filter(|i| m & (1 << i) != 0).collect()))
                .collect(),
        }
    }
}

impl CylinderEvent {
    /// The whole space.
    pub fn full() -> Self {
        CylinderEvent::default()
    }

    /// `{λ : λ_c = i}`.
    pub fn point(coord: usize, index: usize) -> Result<Self> {
        CylinderEvent::full().restrict(coord, &[index])
    }

    /// Intersects with `{λ : λ_c ∈ values}`; an empty result is an error.
    pub fn restrict(mut self, coord: usize, values: &[usize]) -> Result<Self> {
        let mut mask = 0u32;
        for &v in values {
            if v >= 32 {
                return Err(Error::InvalidEvent(format!("value {v} out of range")));
            }
            mask |= 1 << v;
        }
        let slot = self.masks.entry(coord).or_insert(u32::MAX);
        *slot &= mask;
        if *slot == 0 {
            return Err(Error::InvalidEvent(format!(
                "empty constraint set on coordinate {coord}"
            )));
        }
        Ok(self)
    }

    pub fn constraints(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.masks.iter().map(|(&c, &m)| (c, m))
    }

    pub fn contains(&self, point: &[usize]) -> bool {
        self.masks
            .iter()
            .all(|(&c, &m)| point.get(c).is_some_and(|&v| m & (1 << v) != 0))
    }
}

/// A member of the algebra generated by cylinders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Cylinder(CylinderEvent),
    Complement(Box<Event>),
    Intersection(Vec<Event>),
    Union(Vec<Event>),
}

impl From<CylinderEvent> for Event {
    fn from(c: CylinderEvent) -> Self {
        Event::Cylinder(c)
    }
}

impl Event {
    pub fn full() -> Self {
        Event::Cylinder(CylinderEvent::full())
    }

    pub fn empty() -> Self {
        Event::Union(Vec::new())
    }

    pub fn complement(self) -> Self {
        Event::Complement(Box::new(self))
    }

    pub fn and(self, other: Event) -> Self {
        match self {
            Event::Intersection(mut v) => {
                v.push(other);
                Event::Intersection(v)
            }
            e => Event::Intersection(vec![e, other]),
        }
    }

    pub fn or(self, other: Event) -> Self {
        match self {
            Event::Union(mut v) => {
                v.push(other);
                Event::Union(v)
            }
            e => Event::Union(vec![e, other]),
        }
    }

    pub fn contains(&self, point: &[usize]) -> bool {
        match self {
            Event::Cylinder(c) => c.contains(point),
            Event::Complement(e) => !e.contains(point),
            Event::Intersection(v) => v.iter().all(|e| e.contains(point)),
            Event::Union(v) => v.iter().any(|e| e.contains(point)),
        }
    }

    /// Largest constrained coordinate plus one.
    pub fn span(&self) -> usize {
        match self {
            Event::Cylinder(c) => c.masks.keys().next_back().map_or(0, |c| c + 1),
            Event::Complement(e) => e.span(),
            Event::Intersection(v) | Event::Union(v) => v.iter().map(Event::span).max().unwrap_or(0),
        }
    }

    /// `μ(Δ)` for the product measure with coordinate weights `weights[c]`.
    pub fn measure(&self, weights: &[Vec<f64>]) -> Result<f64> {
        let dims: Vec<usize> = weights.iter().map(Vec::len).collect();
        let f = Formula::from_event(self, false, &dims)?;
        Ok(f.measure(weights)?.clamp(0.0, 1.0))
    }

    /// Whether the event has any point, given the coordinate sizes.
    pub fn is_empty(&self, dims: &[usize]) -> Result<bool> {
        Ok(!Formula::from_event(self, false, dims)?.satisfiable(dims)?)
    }

    /// Exact disjointness of two events.
    pub fn disjoint(&self, other: &Event, dims: &[usize]) -> Result<bool> {
        self.clone().and(other.clone()).is_empty(dims)
    }
}

/// Negation normal form over atoms `λ_c ∈ mask`.
#[derive(Debug, Clone, PartialEq)]
enum Formula {
    True,
    False,
    Atom(usize, u32),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

fn full_mask(d: usize) -> u32 {
    if d >= 32 {
        u32::MAX
    } else {
        (1u32 << d) - 1
    }
}

impl Formula {
    fn from_event(ev: &Event, negated: bool, dims: &[usize]) -> Result<Formula> {
        Ok(match ev {
            Event::Cylinder(c) => {
                let mut atoms = Vec::new();
                for (coord, mask) in c.constraints() {
                    let d = *dims.get(coord).ok_or_else(|| {
                        Error::InvalidEvent(format!("coordinate {coord} beyond {} contexts", dims.len()))
                    })?;
                    let full = full_mask(d);
                    if mask & !full != 0 {
                        return Err(Error::InvalidEvent(format!(
                            "value outside 0..{d} on coordinate {coord}"
                        )));
                    }
                    atoms.push(atom(coord, if negated { full & !mask } else { mask }, d));
                }
                if negated {
                    or(atoms)
                } else {
                    and(atoms)
                }
            }
            Event::Complement(e) => Formula::from_event(e, !negated, dims)?,
            Event::Intersection(v) | Event::Union(v) => {
                let parts = v
                    .iter()
                    .map(|e| Formula::from_event(e, negated, dims))
                    .collect::<Result<Vec<_>>>()?;
                if matches!(ev, Event::Intersection(_)) != negated {
                    and(parts)
                } else {
                    or(parts)
                }
            }
        })
    }

    fn coords(&self, out: &mut Vec<usize>) {
        match self {
            Formula::Atom(c, _) => out.push(*c),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|f| f.coords(out)),
            _ => {}
        }
    }

    fn coord_set(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.coords(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Fixes `λ_coord = value`.
    fn condition(&self, coord: usize, value: usize) -> Formula {
        match self {
            Formula::Atom(c, m) if *c == coord => {
                if m & (1 << value) != 0 {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            Formula::And(v) => and(v.iter().map(|f| f.condition(coord, value)).collect()),
            Formula::Or(v) => or(v.iter().map(|f| f.condition(coord, value)).collect()),
            f => f.clone(),
        }
    }

    fn measure(&self, weights: &[Vec<f64>]) -> Result<f64> {
        match self {
            Formula::True => Ok(1.0),
            Formula::False => Ok(0.0),
            Formula::Atom(c, m) => Ok(weights[*c]
                .iter()
                .enumerate()
                .filter(|(i, _)| m & (1 << i) != 0)
                .map(|(_, w)| w)
                .sum()),
            Formula::And(v) => {
                let groups = independent_groups(v);
                if groups.len() > 1 {
                    groups
                        .into_iter()
                        .try_fold(1.0, |acc, g| Ok(acc * and(g).measure(weights)?))
                } else {
                    self.condition_measure(weights)
                }
            }
            Formula::Or(v) => {
                let groups = independent_groups(v);
                if groups.len() > 1 {
                    let miss = groups.into_iter().try_fold(1.0, |acc, g| {
                        Ok::<_, Error>(acc * (1.0 - or(g).measure(weights)?))
                    })?;
                    Ok(1.0 - miss)
                } else {
                    self.condition_measure(weights)
                }
            }
        }
    }

    fn condition_measure(&self, weights: &[Vec<f64>]) -> Result<f64> {
        let coord = self.pivot()?;
        let mut total = 0.0;
        for cell in value_cells(self, coord, weights[coord].len()) {
            let w: f64 = cell.iter().map(|&v| weights[coord][v]).sum();
            if w > 0.0 {
                total += w * self.condition(coord, cell[0]).measure(weights)?;
            }
        }
        Ok(total)
    }

    fn satisfiable(&self, dims: &[usize]) -> Result<bool> {
        match self {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Atom(_, m) => Ok(*m != 0),
            Formula::Or(v) => {
                for f in v {
                    if f.satisfiable(dims)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::And(v) => {
                let groups = independent_groups(v);
                if groups.len() > 1 {
                    for g in groups {
                        if !and(g).satisfiable(dims)? {
                            return Ok(false);
                        }
                    }
                    return Ok(true);
                }
                let coord = self.pivot()?;
                for cell in value_cells(self, coord, dims[coord]) {
                    if self.condition(coord, cell[0]).satisfiable(dims)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// The most frequent coordinate of a coupled block.
    fn pivot(&self) -> Result<usize> {
        let coords = self.coord_set();
        if coords.len() > MAX_COUPLED {
            return Err(Error::EventTooComplex(coords.len()));
        }
        let mut all = Vec::new();
        self.coords(&mut all);
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for c in all {
            *counts.entry(c).or_default() += 1;
        }
        Ok(counts
            .into_iter()
            .max_by_key(|&(c, n)| (n, std::cmp::Reverse(c)))
            .map(|(c, _)| c)
            .expect("coupled block has a coordinate"))
    }
}

/// Groups the values of `coord` by which atoms on `coord` they satisfy;
/// conditioning on any member of a cell gives the same formula.
fn value_cells(f: &Formula, coord: usize, d: usize) -> Vec<Vec<usize>> {
    fn masks(f: &Formula, coord: usize, out: &mut Vec<u32>) {
        match f {
            Formula::Atom(c, m) if *c == coord => out.push(*m),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| masks(g, coord, out)),
            _ => {}
        }
    }
    let mut ms = Vec::new();
    masks(f, coord, &mut ms);
    ms.sort_unstable();
    ms.dedup();
    let mut cells: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for v in 0..d {
        let sig = ms.iter().map(|m| m & (1 << v) != 0).collect();
        cells.entry(sig).or_default().push(v);
    }
    cells.into_values().collect()
}

/// Partitions sibling formulas into groups with disjoint coordinate sets.
fn independent_groups(children: &[Formula]) -> Vec<Vec<Formula>> {
    let mut groups: Vec<(Vec<usize>, Vec<Formula>)> = Vec::new();
    for child in children {
        let coords = child.coord_set();
        let mut merged = (coords.clone(), vec![child.clone()]);
        let mut rest = Vec::with_capacity(groups.len());
        for g in groups {
            if g.0.iter().any(|c| coords.binary_search(c).is_ok()) {
                merged.0.extend(g.0);
                merged.1.extend(g.1);
            } else {
                rest.push(g);
            }
        }
        merged.0.sort_unstable();
        merged.0.dedup();
        rest.push(merged);
        groups = rest;
    }
    groups.into_iter().map(|g| g.1).collect()
}

fn atom(coord: usize, mask: u32, d: usize) -> Formula {
    if mask == 0 {
        Formula::False
    } else if mask == full_mask(d) {
        Formula::True
    } else {
        Formula::Atom(coord, mask)
    }
}

fn and(parts: Vec<Formula>) -> Formula {
    let mut flat = Vec::new();
    let mut atoms: BTreeMap<usize, u32> = BTreeMap::new();
    for p in parts {
        match p {
            Formula::True => {}
            Formula::False => return Formula::False,
            Formula::Atom(c, m) => *atoms.entry(c).or_insert(u32::MAX) &= m,
            Formula::And(v) => match and(v) {
                Formula::And(inner) => {
                    for f in inner {
                        match f {
                            Formula::Atom(c, m) => *atoms.entry(c).or_insert(u32::MAX) &= m,
                            f => flat.push(f),
                        }
                    }
                }
                Formula::False => return Formula::False,
                Formula::True => {}
                Formula::Atom(c, m) => *atoms.entry(c).or_insert(u32::MAX) &= m,
                f => flat.push(f),
            },
            f => flat.push(f),
        }
    }
    if atoms.values().any(|&m| m == 0) {
        return Formula::False;
    }
    let mut out: Vec<Formula> = atoms.into_iter().map(|(c, m)| Formula::Atom(c, m)).collect();
    out.extend(flat);
    match out.len() {
        0 => Formula::True,
        1 => out.pop().unwrap(),
        _ => Formula::And(out),
    }
}

fn or(parts: Vec<Formula>) -> Formula {
    let mut flat = Vec::new();
    let mut atoms: BTreeMap<usize, u32> = BTreeMap::new();
    for p in parts {
        match p {
            Formula::False => {}
            Formula::True => return Formula::True,
            Formula::Atom(c, m) => *atoms.entry(c).or_insert(0) |= m,
            Formula::Or(v) => match or(v) {
                Formula::Or(inner) => {
                    for f in inner {
                        match f {
                            Formula::Atom(c, m) => *atoms.entry(c).or_insert(0) |= m,
                            f => flat.push(f),
                        }
                    }
                }
                Formula::True => return Formula::True,
                Formula::False => {}
                Formula::Atom(c, m) => *atoms.entry(c).or_insert(0) |= m,
                f => flat.push(f),
            },
            f => flat.push(f),
        }
    }
    let mut out: Vec<Formula> = atoms.into_iter().map(|(c, m)| Formula::Atom(c, m)).collect();
    out.extend(flat);
    match out.len() {
        0 => Formula::False,
        1 => out.pop().unwrap(),
        _ => Formula::Or(out),
    }
}
