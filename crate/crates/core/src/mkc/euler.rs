//! The Euler function `E(q) = ∏_{k≥1} (1 - q^k)` with certified truncation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncated product with an interval guaranteed to contain `E(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerValue {
    pub q: f64,
    pub depth: usize,
    /// `∏_{k≤K} (1 - q^k)` in floating point.
    pub product: f64,
    /// `q^{K+1} / (1 - q)`, bounding `Σ_{k>K} q^k`.
    pub tail: f64,
    pub lower: f64,
    pub upper: f64,
}

impl EulerValue {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// `∏_{k=1}^K (1 - q^k)` and a certificate: the infinite product lies in
/// `[product·(1 - tail), product]`, widened by the floating-point rounding
/// of the `K` factors.
pub fn euler_function(q: f64, depth: usize) -> Result<EulerValue> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "Euler function needs 0 ≤ q < 1, got {q}"
        )));
    }
    let mut product = 1.0f64;
    let mut qk = 1.0f64;
    for _ in 0..depth {
        qk *= q;
        product *= 1.0 - qk;
    }
    let tail = qk * q / (1.0 - q);
    // each factor costs up to three roundings
    let rounding = 3.0 * (depth as f64 + 1.0) * f64::EPSILON;
    Ok(EulerValue {
        q,
        depth,
        product,
        tail,
        lower: (product * (1.0 - tail).max(0.0) * (1.0 - rounding)).max(0.0),
        upper: product * (1.0 + rounding),
    })
}

/// Smallest depth with `q^{K+1}/(1-q) < bound`.
pub fn depth_for_tail(q: f64, bound: f64) -> usize {
    if q <= 0.0 {
        return 0;
    }
    let mut k = 0usize;
    let mut qk1 = q;
    while qk1 / (1.0 - q) >= bound {
        qk1 *= q;
        k += 1;
    }
    k
}

fn euler_converged(q: f64) -> f64 {
    let depth = depth_for_tail(q, 1e-17);
    let mut product = 1.0;
    let mut qk = 1.0;
    for _ in 0..depth {
        qk *= q;
        product *= 1.0 - qk;
    }
    product
}

/// The root `q_n` of `E(q) = 1 - 1/n`, by bisection.
pub fn solve_qn(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("solve_qn needs n ≥ 2, got {n}")));
    }
    let target = 1.0 - 1.0 / n as f64;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // E is decreasing: E(lo) > target > E(hi)
    while hi - lo > f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if euler_converged(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (elo, ehi) = (euler_converged(lo), euler_converged(hi));
    Ok(if (elo - target).abs() <= (ehi - target).abs() {
        lo
    } else {
        hi
    })
}

/// `q_n` with the per-step fidelity floors `1 - q_n^k`, `k = 1..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerSchedule {
    pub n: u32,
    pub q_n: f64,
    pub depth: usize,
    pub floors: Vec<f64>,
    pub euler: EulerValue,
}

impl EulerSchedule {
    pub fn new(n: u32, depth: usize) -> Result<Self> {
        let q_n = solve_qn(n)?;
        Ok(EulerSchedule {
            n,
            q_n,
            depth,
            floors: (1..=depth).map(|k| 1.0 - q_n.powi(k as i32)).collect(),
            euler: euler_function(q_n, depth)?,
        })
    }

    /// `q_n^k`, the allowed infidelity at step `k`.
    pub fn precision(&self, k: usize) -> f64 {
        self.q_n.powi(k as i32)
    }
}
