//! Central finite differences of order `2p` and the spectrum of the
//! resulting derivative operator.

use num_complex::Complex64;

use crate::grid::StateVector;
use crate::{Error, Result};

pub const MAX_ORDER: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct FdScheme {
    p: usize,
    /// `a_1..a_p`; `a_0 = 0` and `a_{-k} = -a_k`.
    positive: Vec<f64>,
}

impl FdScheme {
    pub fn new(p: usize) -> Result<Self> {
        fd_coefficients(p)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Coefficient `a_k` for `-p <= k <= p`.
    pub fn a(&self, k: i64) -> f64 {
        if k == 0 || k.unsigned_abs() as usize > self.p {
            return 0.0;
        }
        let v = self.positive[k.unsigned_abs() as usize - 1];
        if k > 0 {
            v
        } else {
            -v
        }
    }

    /// `a_{-p}, ..., a_p`.
    pub fn coefficients(&self) -> Vec<f64> {
        let p = self.p as i64;
        (-p..=p).map(|k| self.a(k)).collect()
    }

    /// `C_p = Σ_{q=0}^p |a_q|`.
    pub fn c_p(&self) -> f64 {
        self.positive.iter().map(|a| a.abs()).sum()
    }

    /// Largest violation of `Σ a_k k^j = δ_{j1}`, `j = 0..2p`.
    ///
    /// The sums are formed in scaled form `Σ a_k (k/p)^j` to keep the
    /// powers bounded; the target becomes `δ_{j1}/p`.
    pub fn moment_residual(&self) -> f64 {
        let p = self.p as i64;
        let scale = self.p as f64;
        (0..=2 * self.p as i32)
            .map(|j| {
                let s: f64 = (-p..=p).map(|k| self.a(k) * (k as f64 / scale).powi(j)).sum();
                let target = if j == 1 { 1.0 / scale } else { 0.0 };
                (s - target).abs() * scale
            })
            .fold(0.0, f64::max)
    }
}

/// `a_k = (−1)^{k+1} (p!)² / (k (p−k)! (p+k)!)`, built from the ratio
/// `a_{k+1}/a_k = −k (p−k) / ((k+1)(p+k+1))` so no factorial is formed.
pub fn fd_coefficients(p: usize) -> Result<FdScheme> {
    if p == 0 || p > MAX_ORDER {
        return Err(Error::InvalidArgument(format!("order p must be in 1..={MAX_ORDER}, got {p}")));
    }
    let mut positive = Vec::with_capacity(p);
    // a_1 = p / (p + 1)
    let mut a = p as f64 / (p + 1) as f64;
    positive.push(a);
    for k in 1..p {
        let (kf, pf) = (k as f64, p as f64);
        a *= -kf * (pf - kf) / ((kf + 1.0) * (pf + kf + 1.0));
        positive.push(a);
    }
    let scheme = FdScheme { p, positive };
    let residual = scheme.moment_residual();
    // the unscaled moments Σ a_k k^j are exact to 1e-10 up to p = 10; beyond
    // that cancellation in the monomial basis dominates, so the check is
    // done on the scaled moments
    if residual > 1e-10 {
        return Err(Error::ContractViolation(format!(
            "moment conditions violated for p={p}: residual {residual:e}"
        )));
    }
    Ok(scheme)
}

/// `d(X) = (2/Δx) Σ_{q=1}^p a_q sin(2π q X)` at `X = k/N`, `N = 2^n`.
pub fn derivative_eigenvalues(scheme: &FdScheme, n: usize) -> Vec<f64> {
    let big_n = 1usize << n;
    let scale = 2.0 * big_n as f64;
    (0..big_n)
        .map(|k| {
            let mut s = 0.0;
            for q in 1..=scheme.p {
                // reduce q·k mod N first so the sine argument stays in [0, 2π)
                let m = (q * k) % big_n;
                s += scheme.positive[q - 1] * sin_two_pi_frac(m, big_n);
            }
            scale * s
        })
        .collect()
}

/// `sin(2π m / N)` with exact zeros at `m ∈ {0, N/2}` and exact ±1 at the
/// quarter points.
fn sin_two_pi_frac(m: usize, n: usize) -> f64 {
    if m == 0 || 2 * m == n {
        return 0.0;
    }
    if 4 * m == n {
        return 1.0;
    }
    if 4 * m == 3 * n {
        return -1.0;
    }
    (2.0 * std::f64::consts::PI * m as f64 / n as f64).sin()
}

/// Direct application of `D̂_j = −i Σ_k a_k S_j^k / Δx_j` with periodic
/// wraparound. Used as an oracle for the spectral path.
pub fn apply_stencil(state: &StateVector, axis: usize, scheme: &FdScheme) -> Result<StateVector> {
    let grid = &state.grid;
    if axis >= grid.dims() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
    }
    let n = grid.points(axis);
    let stride = grid.stride(axis);
    let inv_dx = n as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        let k = (i / stride) % n;
        let base = i - k * stride;
        let mut acc = Complex64::new(0.0, 0.0);
        for q in 1..=scheme.p {
            let a = scheme.positive[q - 1];
            let fwd = base + ((k + q) % n) * stride;
            let bwd = base + ((k + n - q % n) % n) * stride;
            acc += (state.amps[fwd] - state.amps[bwd]) * a;
        }
        // −i · acc / Δx
        *slot = Complex64::new(acc.im, -acc.re) * inv_dx;
    }
    StateVector::from_amps(grid, out)
}

/// Real-valued generator `v ↦ Σ_k a_k v(X + kΔx)/Δx` along one axis, applied
/// into `out` (overwrites). Used by the semi-discrete reference propagator.
pub fn stencil_real_into(values: &[f64], dims: &[usize], axis: usize, scheme: &FdScheme, out: &mut [f64]) {
    let n = 1usize << dims[axis];
    let stride = 1usize << dims[axis + 1..].iter().sum::<usize>();
    let inv_dx = n as f64;
    let block = n * stride;
    for (vb, ob) in values.chunks_exact(block).zip(out.chunks_exact_mut(block)) {
        for k in 0..n {
            let row = &mut ob[k * stride..(k + 1) * stride];
            row.iter_mut().for_each(|v| *v = 0.0);
            for q in 1..=scheme.p {
                let a = scheme.positive[q - 1] * inv_dx;
                let fwd = ((k + q) % n) * stride;
                let bwd = ((k + n - q % n) % n) * stride;
                let (f, b) = (&vb[fwd..fwd + stride], &vb[bwd..bwd + stride]);
                for ((o, x), y) in row.iter_mut().zip(f).zip(b) {
                    *o += a * (x - y);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorm {
    /// `max_X |d(X)|`, the exact spectral norm of `D̂_j`.
    pub exact: f64,
    /// `2 C_p / Δx`.
    pub bound: f64,
}

pub fn operator_norm(scheme: &FdScheme, n: usize) -> OperatorNorm {
    let exact = derivative_eigenvalues(scheme, n).iter().fold(0.0f64, |m, d| m.max(d.abs()));
    OperatorNorm { exact, bound: 2.0 * scheme.c_p() * (1u64 << n) as f64 }
}
