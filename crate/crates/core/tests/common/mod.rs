//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::Deserialize;

use ontic::product::ContextList;
use ontic::quantum::{Context, PureState, C64};

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn configs_dir() -> PathBuf {
    workspace_root().join("configs")
}

/// `|⟨e_i|ψ⟩|²` from the amplitudes, one entry per context vector.
pub fn born_weights(psi: &PureState, context: &Context) -> Vec<f64> {
    context
        .vectors()
        .iter()
        .map(|e| {
            let mut z = C64::new(0.0, 0.0);
            for (a, b) in e.amplitudes().iter().zip(psi.amplitudes().iter()) {
                z += a.conj() * b;
            }
            z.norm_sqr()
        })
        .collect()
}

/// `½ Σ_λ |μ(λ) - ν(λ)|` over the full product space.
pub fn brute_product_tv(mu: &[Vec<f64>], nu: &[Vec<f64>]) -> f64 {
    let dims: Vec<usize> = mu.iter().map(Vec::len).collect();
    let total: usize = dims.iter().product();
    let mut sum = 0.0;
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..total {
        let (mut a, mut b) = (1.0, 1.0);
        for (c, &i) in idx.iter().enumerate() {
            a *= mu[c][i];
            b *= nu[c][i];
        }
        sum += (a - b).abs();
        for c in (0..dims.len()).rev() {
            idx[c] += 1;
            if idx[c] < dims[c] {
                break;
            }
            idx[c] = 0;
        }
    }
    0.5 * sum
}

const BITS: u32 = 512;

/// `∏_{k=1}^{depth} (1 - q^k)` in 512-bit fixed point.
pub fn reference_euler(q: f64, depth: usize) -> f64 {
    let one = BigInt::one() << BITS;
    let bits = q.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32 - 1075;
    let mantissa = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
    let shift = exp + BITS as i32;
    let qf = if shift >= 0 {
        BigInt::from(mantissa) << shift as u32
    } else {
        BigInt::from(mantissa) >> (-shift) as u32
    };
    let (mut product, mut qk) = (one.clone(), one.clone());
    for _ in 0..depth {
        qk = (&qk * &qf) >> BITS;
        product = (&product * (&one - &qk)) >> BITS;
    }
    (product >> (BITS - 62)).to_f64().unwrap() / 2f64.powi(62)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateDoc {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

#[derive(Deserialize)]
struct NamedDoc {
    label: String,
    state: StateDoc,
}

#[derive(Deserialize)]
struct GudderDoc {
    dim: usize,
    contexts: Vec<Context>,
    preparations: Vec<NamedDoc>,
}

pub fn load_gudder_file(path: &std::path::Path) -> (ContextList, Vec<(String, PureState)>) {
    let doc: GudderDoc = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let preps = doc
        .preparations
        .into_iter()
        .map(|n| {
            let s = match n.state {
                StateDoc::Real(v) => PureState::from_real(&v),
                StateDoc::Complex(v) => {
                    PureState::from_complex(&v.iter().map(|p| C64::new(p[0], p[1])).collect::<Vec<_>>())
                }
            };
            (n.label, s.unwrap())
        })
        .collect();
    (ContextList::new(doc.dim, doc.contexts).unwrap(), preps)
}

/// `|0⟩` and `(|0⟩ + |1⟩)/√2` in dimension 3: fidelity ½.
pub fn half_fidelity_pair() -> (PureState, PureState) {
    (
        PureState::from_real(&[1.0, 0.0, 0.0]).unwrap(),
        PureState::from_real(&[1.0, 1.0, 0.0]).unwrap(),
    )
}
