//! Anti-distinguishing measurements and single-shot discrimination.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontic::{DistanceMethod, EpistemicModel, EpistemicRef};
use crate::par::{shard_sizes, Execution};
use crate::quantum::{
    complete_basis, gaussian_hermitian, gaussian_vector, hermitian_eigen, min_eigenvalue, trace_product,
    CMatrix, CVector, Povm, PureState, Tolerances,
};
use crate::seed::{self, stream};

/// Outcome `i` of the POVM has probability `residuals[i]` under state `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntidistinguishabilityCertificate {
    pub states: Vec<PureState>,
    pub povm: Povm,
    pub tol: f64,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub valid: bool,
}

fn residuals(povm: &Povm, states: &[PureState]) -> Vec<f64> {
    states
        .iter()
        .zip(povm.effects())
        .map(|(s, e)| s.amplitudes().dotc(&(e * s.amplitudes())).re)
        .collect()
}

fn certify(povm: Povm, states: Vec<PureState>, tol: f64) -> AntidistinguishabilityCertificate {
    let residuals = residuals(&povm, &states);
    let max_residual = residuals.iter().fold(0.0f64, |a, &r| a.max(r));
    AntidistinguishabilityCertificate {
        valid: residuals.iter().all(|&r| r < tol),
        states,
        povm,
        tol,
        residuals,
        max_residual,
    }
}

/// Computes `Tr([ψ_i] E_i)` for every `i`; valid iff all are below `tol`.
pub fn is_antidistinguishing(
    povm: &Povm,
    states: &[PureState],
    tol: f64,
) -> Result<AntidistinguishabilityCertificate> {
    if povm.len() != states.len() {
        return Err(Error::InvalidParameter(format!(
            "{} outcomes for {} states",
            povm.len(),
            states.len()
        )));
    }
    if let Some(s) = states.iter().find(|s| s.dim() != povm.dim()) {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            got: s.dim(),
        });
    }
    Ok(certify(povm.clone(), states.to_vec(), tol))
}

/// `|00⟩, |0+⟩, |+0⟩, |++⟩` with index `2a + b` for `|ab⟩`.
pub fn pbr_states() -> Vec<PureState> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let zero = [1.0, 0.0];
    let plus = [h, h];
    [(zero, zero), (zero, plus), (plus, zero), (plus, plus)]
        .iter()
        .map(|(a, b)| PureState::from_real(&kron(a, b)).expect("non-zero product state"))
        .collect()
}

fn kron(a: &[f64; 2], b: &[f64; 2]) -> [f64; 4] {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// The entangled basis whose `i`-th element is orthogonal to the `i`-th
/// state of [`pbr_states`].
pub fn pbr_measurement() -> Povm {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (zero, one) = ([1.0, 0.0], [0.0, 1.0]);
    let (plus, minus) = ([h, h], [h, -h]);
    let pair = |a: ([f64; 2], [f64; 2]), b: ([f64; 2], [f64; 2])| {
        let (x, y) = (kron(&a.0, &a.1), kron(&b.0, &b.1));
        let v: Vec<f64> = x.iter().zip(&y).map(|(p, q)| (p + q) * h).collect();
        PureState::from_real(&v).expect("non-zero basis vector")
    };
    let basis = [
        pair((zero, one), (one, zero)),
        pair((zero, minus), (one, plus)),
        pair((plus, one), (minus, zero)),
        pair((plus, minus), (minus, plus)),
    ];
    Povm::new(
        "pbr",
        (1..=4).map(|i| format!("not-{i}")).collect(),
        basis.iter().map(PureState::projector).collect(),
        &Tolerances::default(),
    )
    .expect("the entangled basis is orthonormal")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub eta: f64,
    pub trials: usize,
    /// Largest residual of each trial.
    pub max_residuals: Vec<f64>,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// `median / η`.
    pub slope: f64,
    pub all_positive: bool,
}

/// Hermitian noise in the eigenbasis of `effect`: a unit-norm random block
/// on the support, a unit-norm coherence block, and a positive block with
/// spectrum in `[0.05, 0.25]` on the kernel.
fn effect_noise<R: Rng + ?Sized>(effect: &CMatrix, rng: &mut R) -> CMatrix {
    let d = effect.nrows();
    let (values, vectors) = hermitian_eigen(effect);
    let top = values.last().copied().unwrap_or(0.0);
    let (kernel, support): (Vec<_>, Vec<_>) = values
        .iter()
        .zip(vectors)
        .partition(|(v, _)| **v <= 1e-10 * top.max(1.0));
    let basis: Vec<CVector> = support.iter().chain(&kernel).map(|(_, v)| v.clone()).collect();
    let (s, k) = (support.len(), kernel.len());
    let mut block = CMatrix::zeros(d, d);
    if s > 0 {
        let a = gaussian_hermitian(s, rng);
        let norm = hermitian_eigen(&a).0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        block.view_mut((0, 0), (s, s)).copy_from(&a.unscale(norm));
    }
    if s > 0 && k > 0 {
        // unit Frobenius norm bounds the spectral norm by 1
        let c = CMatrix::from_iterator(s, k, gaussian_vector(s * k, rng).iter().copied());
        let c = c.unscale(c.norm());
        block.view_mut((0, s), (s, k)).copy_from(&c);
        block.view_mut((s, 0), (k, s)).copy_from(&c.adjoint());
    }
    if k > 0 {
        let u = complete_basis(Vec::new(), k, rng).expect("Gaussian draws are independent");
        let b = u.iter().fold(CMatrix::zeros(k, k), |acc, v| {
            acc + (v * v.adjoint()).scale(rng.random_range(0.05..=0.25))
        });
        block.view_mut((s, s), (k, k)).copy_from(&b);
    }
    let v = CMatrix::from_columns(&basis);
    &v * block * v.adjoint()
}

/// `S^{-1/2}` for a positive definite `S`.
fn inverse_sqrt(s: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(s);
    let d = s.nrows();
    let mut out = CMatrix::zeros(d, d);
    for (lambda, u) in values.iter().zip(&vectors) {
        if *lambda <= 0.0 {
            return Err(Error::NotPositive(*lambda));
        }
        out += (u * u.adjoint()).scale(lambda.sqrt().recip());
    }
    Ok(out)
}

fn perturb_once<R: Rng + ?Sized>(povm: &Povm, eta: f64, rng: &mut R) -> Result<Vec<CMatrix>> {
    let mut effects = Vec::with_capacity(povm.len());
    for e in povm.effects() {
        let shifted = e + effect_noise(e, rng).scale(eta);
        let min = min_eigenvalue(&shifted);
        if min < -1e-12 {
            return Err(Error::NonPhysicalPerturbation {
                eta,
                min_eigenvalue: min,
            });
        }
        effects.push(shifted);
    }
    let sum = effects
        .iter()
        .fold(CMatrix::zeros(povm.dim(), povm.dim()), |acc, e| acc + e);
    let w = inverse_sqrt(&sum)?;
    Ok(effects.iter().map(|e| &w * e * &w).collect())
}

/// Re-evaluates the certificate on `trials` POVMs perturbed at scale `eta`
/// and renormalized to sum to the identity.
pub fn perturbation_robustness(
    exec: Execution,
    certificate: &AntidistinguishabilityCertificate,
    eta: f64,
    trials: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    if !certificate.valid {
        return Err(Error::InvalidParameter("certificate is not valid".into()));
    }
    if !(eta >= 0.0 && eta.is_finite()) || trials == 0 {
        return Err(Error::InvalidParameter(format!(
            "need η ≥ 0 and trials > 0, got η={eta}, trials={trials}"
        )));
    }
    let max_residuals = if eta == 0.0 {
        vec![certificate.max_residual; trials]
    } else {
        let runs = exec.map_range(trials, |t| {
            let mut rng = seed::rng(seed::derive(seed, &[stream::PERTURBATION, t as u64]));
            let effects = perturb_once(&certificate.povm, eta, &mut rng)?;
            Ok(certificate
                .states
                .iter()
                .zip(&effects)
                .map(|(s, e)| trace_product(&s.projector(), e))
                .fold(f64::NEG_INFINITY, f64::max))
        });
        runs.into_iter().collect::<Result<Vec<f64>>>()?
    };
    let mut sorted = max_residuals.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if trials % 2 == 1 {
        sorted[trials / 2]
    } else {
        0.5 * (sorted[trials / 2 - 1] + sorted[trials / 2])
    };
    Ok(PerturbationReport {
        eta,
        trials,
        median,
        min: sorted[0],
        max: sorted[trials - 1],
        slope: if eta > 0.0 { median / eta } else { 0.0 },
        all_positive: sorted[0] > 0.0,
        max_residuals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub psi: String,
    pub phi: String,
    pub shots: u64,
    pub successes: u64,
    pub empirical_rate: f64,
    /// `(1 + TV) / 2`.
    pub analytic_rate: f64,
    pub distance: f64,
    pub method: DistanceMethod,
    /// `4·sqrt(p(1-p)/shots)` at the analytic rate.
    pub band: f64,
    /// `empirical_rate ≤ analytic_rate + band`.
    pub within_ceiling: bool,
}

const SHARD: u64 = 4096;

/// Prepares `ψ` or `φ` with probability ½, samples an ontic state and
/// guesses by maximum a posteriori, ties going to `ψ`.
pub fn single_shot_discrimination<M: EpistemicModel>(
    exec: Execution,
    model: &M,
    psi: EpistemicRef<'_>,
    phi: EpistemicRef<'_>,
    shots: u64,
    seed: u64,
) -> Result<DiscriminationReport> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    let estimate = model.distance(psi, phi)?;
    let shards = shard_sizes(shots, SHARD);
    let counts = exec.map_range(shards.len(), |i| -> Result<u64> {
        let mut rng = seed::rng(seed::derive(seed, &[stream::DISCRIMINATION, i as u64]));
        let mut hits = 0;
        for _ in 0..shards[i] {
            let from_psi = rng.random_bool(0.5);
            let who = if from_psi { psi } else { phi };
            let point = model.sample(who, &mut rng)?;
            let guess_psi = model.log_mass(psi, &point)? >= model.log_mass(phi, &point)?;
            hits += u64::from(guess_psi == from_psi);
        }
        Ok(hits)
    });
    let successes = counts.into_iter().sum::<Result<u64>>()?;
    let analytic_rate = 0.5 * (1.0 + estimate.value);
    let empirical_rate = successes as f64 / shots as f64;
    let band = 4.0 * (analytic_rate * (1.0 - analytic_rate) / shots as f64).sqrt();
    Ok(DiscriminationReport {
        psi: psi.label.to_string(),
        phi: phi.label.to_string(),
        shots,
        successes,
        empirical_rate,
        analytic_rate,
        distance: estimate.value,
        method: estimate.method,
        band,
        within_ceiling: empirical_rate <= analytic_rate + band,
    })
}
