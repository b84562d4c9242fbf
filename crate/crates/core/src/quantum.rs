//! Finite-dimensional quantum fragments: pure states, density matrices,
//! observables, contexts (orthonormal bases), POVMs and the Born rule.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Largest Hilbert-space dimension the crate accepts.
pub const MAX_DIM: usize = 16;

/// Two pure states are the same ray when their infidelity is below this.
pub const RAY_TOL: f64 = 1e-12;

/// Tolerance used when deciding whether a context contains a given ray.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Numerical tolerances for structural checks on matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Hermiticity, orthonormality and completeness.
    pub hermitian: f64,
    /// Smallest admissible eigenvalue of a positive operator is `-psd`.
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-10,
            psd: 1e-10,
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn check_same(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Largest entry of `|A - A†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry of `|AB - BA|`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    (a * b - b * a).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (values, vectors)
}

pub(crate) fn min_eigenvalue(m: &CMatrix) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &x| acc.min(x))
}

pub(crate) fn check_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let defect = hermiticity_defect(m);
    if defect > tol {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

fn check_positive(m: &CMatrix, tol: f64) -> Result<()> {
    let min = min_eigenvalue(m);
    if min < -tol {
        return Err(Error::NotPositive(min));
    }
    Ok(())
}

/// Draws a vector with independent standard complex normal entries.
pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Draws a Hermitian matrix from the Gaussian unitary ensemble.
pub fn gaussian_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// A unit vector in `C^d`, standing for the ray it spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateDoc", into = "StateDoc")]
pub struct PureState {
    amplitudes: CVector,
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    #[serde(with = "crate::json::cvec")]
    amplitudes: CVector,
}

impl TryFrom<StateDoc> for PureState {
    type Error = Error;
    fn try_from(doc: StateDoc) -> Result<Self> {
        PureState::new(doc.amplitudes)
    }
}

impl From<PureState> for StateDoc {
    fn from(s: PureState) -> Self {
        StateDoc {
            amplitudes: s.amplitudes,
        }
    }
}

impl PureState {
    /// Normalizes `amplitudes` into a state.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm <= 1e-300 {
            return Err(Error::ZeroVector);
        }
        // already-normalized input is kept bit for bit so serialization round trips
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(PureState { amplitudes });
        }
        Ok(PureState {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(CVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    pub fn from_complex(amplitudes: &[C64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amplitudes))
    }

    /// Computational basis vector `|i⟩`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        check_dim(dim)?;
        if i >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {i} out of range for dimension {dim}"
            )));
        }
        let mut v = CVector::zeros(dim);
        v[i] = C64::new(1.0, 0.0);
        Ok(PureState { amplitudes: v })
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        check_dim(dim)?;
        for _ in 0..100 {
            if let Ok(s) = Self::new(gaussian_vector(dim, rng)) {
                return Ok(s);
            }
        }
        Err(Error::DegenerateDraw(100))
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// The rank-1 projector `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: self.projector(),
        }
    }

    /// Same state with a global phase `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> PureState {
        PureState {
            amplitudes: self.amplitudes.map(|z| z * C64::from_polar(1.0, theta)),
        }
    }

    pub fn ray_eq(&self, other: &PureState) -> bool {
        self.dim() == other.dim() && infidelity_unchecked(self, other) < RAY_TOL
    }
}

fn fidelity_unchecked(psi: &PureState, phi: &PureState) -> f64 {
    psi.inner(phi).norm_sqr().clamp(0.0, 1.0)
}

/// `1 - |⟨u|w⟩|²/(‖u‖²‖w‖²)` through Lagrange's identity, which keeps full
/// relative precision when the two vectors are nearly parallel.
pub(crate) fn vector_infidelity(u: &CVector, w: &CVector) -> f64 {
    let n = u.len();
    let mut wedge = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            wedge += (u[i] * w[j] - u[j] * w[i]).norm_sqr();
        }
    }
    (wedge / (u.norm_squared() * w.norm_squared())).clamp(0.0, 1.0)
}

pub(crate) fn vector_fidelity(u: &CVector, w: &CVector) -> f64 {
    (u.dotc(w).norm_sqr() / (u.norm_squared() * w.norm_squared())).clamp(0.0, 1.0)
}

fn infidelity_unchecked(psi: &PureState, phi: &PureState) -> f64 {
    vector_infidelity(&psi.amplitudes, &phi.amplitudes)
}

/// Transition probability `|⟨ψ|φ⟩|²`.
pub fn fidelity(psi: &PureState, phi: &PureState) -> Result<f64> {
    check_same(psi.dim(), phi.dim())?;
    Ok(fidelity_unchecked(psi, phi))
}

/// `1 - |⟨ψ|φ⟩|²`, accurate down to the representation limit of the
/// amplitudes instead of the `1e-16` floor of `1 - fidelity`.
pub fn infidelity(psi: &PureState, phi: &PureState) -> Result<f64> {
    check_same(psi.dim(), phi.dim())?;
    Ok(infidelity_unchecked(psi, phi))
}

/// Whether the projectors `[p]` and `[q]` commute, i.e. `‖PQ - QP‖_max < 1e-10`.
pub fn projectors_commute(p: &PureState, q: &PureState) -> Result<bool> {
    check_same(p.dim(), q.dim())?;
    Ok(commutator_norm(&p.projector(), &q.projector()) < 1e-10)
}

/// A validated density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DensityMatrix {
    #[serde(with = "crate::json::cmat")]
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_dim(matrix.nrows())?;
        check_hermitian(&matrix, tol.hermitian)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol.hermitian || tr.im.abs() > tol.hermitian {
            return Err(Error::BadTrace(tr.re));
        }
        check_positive(&matrix, tol.psd)?;
        Ok(DensityMatrix { matrix })
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(DensityMatrix {
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        Self::new(self.matrix.clone(), tol).map(|_| ())
    }
}

/// `Re Tr(ρE)` for a density matrix and a POVM element.
pub fn born_probability(rho: &CMatrix, effect: &CMatrix) -> Result<f64> {
    check_same(rho.nrows(), effect.nrows())?;
    let tol = Tolerances::default();
    check_hermitian(rho, tol.hermitian)?;
    check_hermitian(effect, tol.hermitian)?;
    Ok(clamp_probability(trace_product(rho, effect)))
}

/// `Re Tr(AB)` without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

pub(crate) fn clamp_probability(p: f64) -> f64 {
    if p < 0.0 && p > -1e-12 {
        0.0
    } else if p > 1.0 && p < 1.0 + 1e-12 {
        1.0
    } else {
        p
    }
}

/// An orthonormal basis, standing for the context of its rank-1 projectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ContextDoc", into = "ContextDoc")]
pub struct Context {
    label: String,
    vectors: Vec<PureState>,
}

#[derive(Serialize, Deserialize)]
struct ContextDoc {
    label: String,
    #[serde(with = "crate::json::cvec_list")]
    vectors: Vec<CVector>,
}

impl TryFrom<ContextDoc> for Context {
    type Error = Error;
    fn try_from(doc: ContextDoc) -> Result<Self> {
        let vectors = doc
            .vectors
            .into_iter()
            .map(PureState::new)
            .collect::<Result<Vec<_>>>()?;
        Context::new(doc.label, vectors)
    }
}

impl From<Context> for ContextDoc {
    fn from(c: Context) -> Self {
        ContextDoc {
            label: c.label,
            vectors: c.vectors.into_iter().map(|v| v.amplitudes).collect(),
        }
    }
}

impl Context {
    pub fn new(label: impl Into<String>, vectors: Vec<PureState>) -> Result<Self> {
        Self::with_tolerance(label, vectors, &Tolerances::default())
    }

    pub fn with_tolerance(
        label: impl Into<String>,
        vectors: Vec<PureState>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let dim = vectors.first().map_or(0, PureState::dim);
        check_dim(dim)?;
        check_same(dim, vectors.len())?;
        for v in &vectors {
            check_same(dim, v.dim())?;
        }
        let ctx = Context {
            label: label.into(),
            vectors,
        };
        let (orth, complete) = ctx.defects();
        if orth > tol.hermitian || complete > tol.hermitian {
            return Err(Error::NotOrthonormal(orth.max(complete)));
        }
        Ok(ctx)
    }

    /// Computational basis context.
    pub fn computational(dim: usize) -> Result<Self> {
        let vectors = (0..dim)
            .map(|i| PureState::basis(dim, i))
            .collect::<Result<Vec<_>>>()?;
        Context::new("computational", vectors)
    }

    /// `(max_{i≠j} Tr(PᵢPⱼ), max |ΣPᵢ - I|)`.
    pub fn defects(&self) -> (f64, f64) {
        let d = self.dim();
        let mut orth = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                orth = orth.max(fidelity_unchecked(&self.vectors[i], &self.vectors[j]));
            }
        }
        let sum = self
            .vectors
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, v| acc + v.projector());
        let complete = (sum - CMatrix::identity(d, d))
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        (orth, complete)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    pub fn projector(&self, i: usize) -> CMatrix {
        self.vectors[i].projector()
    }

    /// Born weights `|⟨ψ|eᵢ⟩|²` of `psi` over this basis.
    pub fn weights(&self, psi: &PureState) -> Result<Vec<f64>> {
        check_same(self.dim(), psi.dim())?;
        Ok(self.vectors.iter().map(|e| fidelity_unchecked(psi, e)).collect())
    }

    /// Index of the member equal to `[psi]`, if any.
    pub fn position(&self, psi: &PureState) -> Option<usize> {
        if psi.dim() != self.dim() {
            return None;
        }
        self.vectors
            .iter()
            .position(|e| infidelity_unchecked(e, psi) < MEMBERSHIP_TOL)
    }

    /// Whether two contexts share a projector.
    pub fn shares_projector(&self, other: &Context) -> bool {
        self.vectors.iter().any(|v| other.position(v).is_some())
    }

    /// Max commutator norm between `m` and the context projectors.
    pub fn commutator_defect(&self, m: &CMatrix) -> f64 {
        (0..self.dim())
            .map(|i| commutator_norm(m, &self.projector(i)))
            .fold(0.0, f64::max)
    }
}

/// Gram-Schmidt completion of an orthonormal family to a basis, using
/// Gaussian draws for the missing directions.
pub(crate) fn complete_basis<R: Rng + ?Sized>(
    mut basis: Vec<CVector>,
    dim: usize,
    rng: &mut R,
) -> Result<Vec<CVector>> {
    let mut retries = 0;
    while basis.len() < dim {
        let mut v = gaussian_vector(dim, rng);
        let start = v.norm();
        // two passes keep the result orthogonal to working precision
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let n = v.norm();
        if n < 1e-8 * start {
            retries += 1;
            if retries >= 100 {
                return Err(Error::DegenerateDraw(retries));
            }
            continue;
        }
        basis.push(v.unscale(n));
    }
    Ok(basis)
}

fn context_from_vectors(label: String, vectors: Vec<CVector>) -> Result<Context> {
    let states = vectors
        .into_iter()
        .map(PureState::new)
        .collect::<Result<Vec<_>>>()?;
    Context::new(label, states)
}

/// Orthonormalizes `dim` independent standard complex normal vectors.
pub fn random_context_with<R: Rng + ?Sized>(
    dim: usize,
    label: impl Into<String>,
    rng: &mut R,
) -> Result<Context> {
    check_dim(dim)?;
    let vectors = complete_basis(Vec::new(), dim, rng)?;
    context_from_vectors(label.into(), vectors)
}

/// Seeded random context; identical seeds give identical contexts.
pub fn random_context(dim: usize, seed: u64) -> Result<Context> {
    random_context_with(dim, format!("random-{seed}"), &mut seed::rng(seed))
}

/// A random context whose first member is `[psi]`.
pub fn context_containing<R: Rng + ?Sized>(
    psi: &PureState,
    label: impl Into<String>,
    rng: &mut R,
) -> Result<Context> {
    let vectors = complete_basis(vec![psi.amplitudes.clone()], psi.dim(), rng)?;
    context_from_vectors(label.into(), vectors)
}

/// A Hermitian operator with cached spectral decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ObservableDoc", into = "ObservableDoc")]
pub struct Observable {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<CVector>,
}

#[derive(Serialize, Deserialize)]
struct ObservableDoc {
    #[serde(with = "crate::json::cmat")]
    matrix: CMatrix,
}

impl TryFrom<ObservableDoc> for Observable {
    type Error = Error;
    fn try_from(doc: ObservableDoc) -> Result<Self> {
        Observable::new(doc.matrix, &Tolerances::default())
    }
}

impl From<Observable> for ObservableDoc {
    fn from(o: Observable) -> Self {
        ObservableDoc { matrix: o.matrix }
    }
}

impl Observable {
    pub fn new(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_dim(matrix.nrows())?;
        check_hermitian(&matrix, tol.hermitian)?;
        let (eigenvalues, eigenvectors) = hermitian_eigen(&matrix);
        let obs = Observable {
            matrix,
            eigenvalues,
            eigenvectors,
        };
        let defect = (obs.reconstruct() - &obs.matrix)
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        if defect > tol.hermitian {
            return Err(Error::NotHermitian(defect));
        }
        Ok(obs)
    }

    /// `Σ aᵢ [eᵢ]` on the given context. The values are kept as the cached
    /// spectrum exactly (sorted ascending) rather than re-diagonalized.
    pub fn from_spectrum(values: &[f64], context: &Context) -> Result<Self> {
        check_same(context.dim(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
        }
        let d = context.dim();
        let matrix = values
            .iter()
            .zip(context.vectors())
            .fold(CMatrix::zeros(d, d), |acc, (&a, e)| acc + e.projector().scale(a));
        let mut pairs: Vec<(f64, CVector)> = values
            .iter()
            .zip(context.vectors())
            .map(|(&a, e)| (a, e.amplitudes.clone()))
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
        Ok(Observable {
            matrix,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let matrix = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Observable::new(matrix, &Tolerances::default())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[CVector] {
        &self.eigenvectors
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    fn reconstruct(&self) -> CMatrix {
        let d = self.dim();
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .fold(CMatrix::zeros(d, d), |acc, (&a, v)| {
                acc + (v * v.adjoint()).scale(a)
            })
    }
}

/// The context of eigenprojectors of a non-degenerate observable, ordered by
/// ascending eigenvalue.
pub fn eigencontext(observable: &Observable) -> Result<Context> {
    let gap = observable.min_gap();
    if gap <= 1e-8 {
        return Err(Error::DegenerateSpectrum(gap));
    }
    context_from_vectors("eigenbasis".to_string(), observable.eigenvectors.clone())
}

/// A positive-operator-valued measure with labelled outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PovmDoc", into = "PovmDoc")]
pub struct Povm {
    label: String,
    outcomes: Vec<String>,
    effects: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct PovmDoc {
    label: String,
    outcomes: Vec<String>,
    #[serde(with = "crate::json::cmat_list")]
    effects: Vec<CMatrix>,
}

impl TryFrom<PovmDoc> for Povm {
    type Error = Error;
    fn try_from(doc: PovmDoc) -> Result<Self> {
        Povm::new(doc.label, doc.outcomes, doc.effects, &Tolerances::default())
    }
}

impl From<Povm> for PovmDoc {
    fn from(p: Povm) -> Self {
        PovmDoc {
            label: p.label,
            outcomes: p.outcomes,
            effects: p.effects,
        }
    }
}

impl Povm {
    pub fn new(
        label: impl Into<String>,
        outcomes: Vec<String>,
        effects: Vec<CMatrix>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if effects.is_empty() || effects.len() != outcomes.len() {
            return Err(Error::InvalidModel(format!(
                "{} effects for {} outcome labels",
                effects.len(),
                outcomes.len()
            )));
        }
        let d = effects[0].nrows();
        check_dim(d)?;
        let mut sum = CMatrix::zeros(d, d);
        for e in &effects {
            check_same(d, e.nrows())?;
            check_hermitian(e, tol.hermitian)?;
            check_positive(e, tol.psd)?;
            sum += e;
        }
        let defect = (sum - CMatrix::identity(d, d))
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        if defect > tol.hermitian {
            return Err(Error::IncompletePovm(defect));
        }
        Ok(Povm {
            label: label.into(),
            outcomes,
            effects,
        })
    }

    /// The projective measurement of a context; outcome `i` is `[eᵢ]`.
    pub fn projective(context: &Context) -> Povm {
        Povm {
            label: context.label().to_string(),
            outcomes: (0..context.dim()).map(|i| i.to_string()).collect(),
            effects: (0..context.dim()).map(|i| context.projector(i)).collect(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// Applies `U · E · U†` to every effect.
    pub fn conjugated(&self, unitary: &CMatrix) -> Povm {
        Povm {
            label: self.label.clone(),
            outcomes: self.outcomes.clone(),
            effects: self
                .effects
                .iter()
                .map(|e| unitary * e * unitary.adjoint())
                .collect(),
        }
    }
}

/// A labelled preparation; pure preparations keep their state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preparation {
    pub label: String,
    pub density: DensityMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<PureState>,
}

impl Preparation {
    pub fn pure(label: impl Into<String>, state: PureState) -> Self {
        Preparation {
            label: label.into(),
            density: state.density(),
            state: Some(state),
        }
    }

    pub fn mixed(label: impl Into<String>, density: DensityMatrix) -> Self {
        Preparation {
            label: label.into(),
            density,
            state: None,
        }
    }

    pub fn is_pure(&self) -> bool {
        self.state.is_some()
    }
}

/// The triple (Hilbert space dimension, preparations, measurements).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub dim: usize,
    pub preparations: Vec<Preparation>,
    pub measurements: Vec<Povm>,
}

impl Fragment {
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        check_dim(self.dim)?;
        for p in &self.preparations {
            check_same(self.dim, p.density.dim())?;
            p.density.validate(tol)?;
            if let Some(s) = &p.state {
                check_same(self.dim, s.dim())?;
                let defect = (s.projector() - p.density.matrix())
                    .iter()
                    .fold(0.0f64, |acc, z| acc.max(z.norm()));
                if defect > tol.hermitian {
                    return Err(Error::InvalidModel(format!(
                        "preparation `{}`: state vector does not match density matrix",
                        p.label
                    )));
                }
            }
        }
        for m in &self.measurements {
            check_same(self.dim, m.dim())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn plus() -> PureState {
        PureState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap()
    }

    #[test]
    fn born_projector_onto_own_state() {
        let z = PureState::basis(2, 0).unwrap().projector();
        assert_eq!(born_probability(&z, &z).unwrap(), 1.0);
    }

    #[test]
    fn born_plus_on_zero() {
        let rho = plus().projector();
        let e = PureState::basis(2, 0).unwrap().projector();
        assert_abs_diff_eq!(born_probability(&rho, &e).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn born_rejects_mismatch_and_non_hermitian() {
        let a = PureState::basis(2, 0).unwrap().projector();
        let b = PureState::basis(3, 0).unwrap().projector();
        assert!(matches!(
            born_probability(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut bad = a.clone();
        bad[(0, 1)] = C64::new(0.3, 0.0);
        assert!(matches!(born_probability(&bad, &a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn born_matches_naive_triple_loop() {
        let mut rng = seed::rng(11);
        let psi = PureState::random(3, &mut rng).unwrap();
        let ctx = random_context_with(3, "c", &mut rng).unwrap();
        let rho = psi.projector();
        let e = ctx.projector(1);
        // Tr(ρE) via explicit product matrix, entry by entry
        let mut tr = C64::new(0.0, 0.0);
        for i in 0..3 {
            for k in 0..3 {
                tr += rho[(i, k)] * e[(k, i)];
            }
        }
        assert_abs_diff_eq!(born_probability(&rho, &e).unwrap(), tr.re, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let zero = PureState::basis(2, 0).unwrap();
        let one = PureState::basis(2, 1).unwrap();
        assert_eq!(fidelity(&zero, &zero).unwrap(), 1.0);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        let t = PI / 6.0;
        let phi = PureState::from_real(&[t.cos(), t.sin()]).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &phi).unwrap(), 0.75, epsilon = 1e-15);
        assert!(fidelity(&zero, &PureState::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn infidelity_resolves_tiny_angles() {
        let t: f64 = 1e-12;
        let psi = PureState::from_real(&[1.0, 0.0, 0.0]).unwrap();
        let phi = PureState::from_real(&[t.cos(), t.sin(), 0.0]).unwrap();
        let s = infidelity(&psi, &phi).unwrap();
        assert!((s / (t.sin() * t.sin()) - 1.0).abs() < 1e-10);
        assert_eq!(1.0 - fidelity(&psi, &phi).unwrap(), 0.0);
    }

    #[test]
    fn commute_examples() {
        let zero = PureState::basis(2, 0).unwrap();
        let one = PureState::basis(2, 1).unwrap();
        assert!(projectors_commute(&zero, &one).unwrap());
        assert!(!projectors_commute(&zero, &plus()).unwrap());
    }

    #[test]
    fn random_context_is_valid_and_deterministic() {
        let a = random_context(2, 5).unwrap();
        let b = random_context(2, 5).unwrap();
        assert_eq!(a, b);
        let (orth, complete) = a.defects();
        assert!(orth < 1e-10 && complete < 1e-10);
        assert_ne!(random_context(2, 6).unwrap(), a);
    }

    #[test]
    fn eigencontext_examples() {
        let obs = Observable::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let ctx = eigencontext(&obs).unwrap();
        for i in 0..3 {
            assert!(ctx.position(&PureState::basis(3, i).unwrap()).is_some());
        }
        let x = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let ctx = eigencontext(&Observable::new(x, &Tolerances::default()).unwrap()).unwrap();
        let minus = PureState::from_real(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]).unwrap();
        assert_eq!(ctx.position(&minus), Some(0));
        assert_eq!(ctx.position(&plus()), Some(1));
    }

    #[test]
    fn eigencontext_rejects_degenerate() {
        let obs = Observable::diagonal(&[1.0, 1.0, 3.0]).unwrap();
        assert!(matches!(eigencontext(&obs), Err(Error::DegenerateSpectrum(_))));
    }

    #[test]
    fn context_rejects_non_orthonormal() {
        let a = PureState::basis(2, 0).unwrap();
        assert!(matches!(
            Context::new("bad", vec![a.clone(), plus()]),
            Err(Error::NotOrthonormal(_))
        ));
    }

    #[test]
    fn povm_validation() {
        let ctx = Context::computational(2).unwrap();
        let p = Povm::projective(&ctx);
        assert!(Povm::new(
            "p",
            p.outcomes().to_vec(),
            p.effects().to_vec(),
            &Tolerances::default()
        )
        .is_ok());
        let half = vec![p.effects()[0].clone(), p.effects()[0].clone()];
        assert!(matches!(
            Povm::new("q", vec!["a".into(), "b".into()], half, &Tolerances::default()),
            Err(Error::IncompletePovm(_))
        ));
    }

    #[test]
    fn json_round_trip_uses_pairs() {
        let ctx = random_context(3, 1).unwrap();
        let text = serde_json::to_string(&ctx).unwrap();
        assert!(text.starts_with("{\"label\":\"random-1\",\"vectors\":[[["));
        let back: Context = serde_json::from_str(&text).unwrap();
        for (a, b) in ctx.vectors().iter().zip(back.vectors()) {
            assert!(a.ray_eq(b));
        }
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        assert_eq!(
            serde_json::to_string(&rho).unwrap(),
            "[[[0.5,0.0],[0.0,0.0]],[[0.0,0.0],[0.5,0.0]]]"
        );
    }
}
