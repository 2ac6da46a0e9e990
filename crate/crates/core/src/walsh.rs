//! Walsh functions in natural (dyadic) order, their coefficient transform
//! and truncated series.
//!
//! `w_j(x) = (−1)^{Σ_i j_i x_i}` where `j_i` is bit `i` of `j` (least
//! significant first) and `x_i` is the `(i+1)`-th binary digit of `x`. On a
//! grid of `M = 2^m` points, digit `x_i` of `k/M` is bit `m−1−i` of `k`, so
//! `w_j(k/M) = (−1)^{popcount(j & rev_m(k))}`.

use std::collections::BTreeMap;

use crate::grid::GridSpec;
use crate::{Error, Result};

pub fn walsh_function(j: u64, x: f64) -> f64 {
    let mut parity = 0u32;
    let mut bits = j;
    let mut frac = x.rem_euclid(1.0);
    while bits != 0 {
        frac *= 2.0;
        let digit = frac >= 1.0;
        if digit {
            frac -= 1.0;
        }
        parity ^= (bits & 1) as u32 & digit as u32;
        bits >>= 1;
    }
    if parity == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Unnormalized Walsh-Hadamard butterfly in natural order.
pub fn fwht_in_place(data: &mut [f64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

pub fn bit_reverse(k: usize, bits: usize) -> usize {
    if bits == 0 {
        return 0;
    }
    k.reverse_bits() >> (usize::BITS as usize - bits)
}

/// Reverses the bits of each register of a flat index independently.
pub fn register_reverse(index: usize, widths: &[usize]) -> usize {
    let mut out = 0;
    let mut shift = 0;
    for &w in widths.iter().rev() {
        let part = (index >> shift) & ((1 << w) - 1);
        out |= bit_reverse(part, w) << shift;
        shift += w;
    }
    out
}

fn log2_exact(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("length {len} is not a power of two")));
    }
    Ok(len.trailing_zeros() as usize)
}

/// `a_j = (1/M) Σ_k f(k/M) w_j(k/M)` for all `j < M`.
pub fn walsh_coefficients(samples: &[f64]) -> Result<Vec<f64>> {
    let m = log2_exact(samples.len())?;
    Ok(tensor_coefficients(samples, &[m]))
}

/// Coefficients of a function sampled on a tensor grid with register widths
/// `widths` (axis 1 most significant). Output index is the flat multi-index.
fn tensor_coefficients(samples: &[f64], widths: &[usize]) -> Vec<f64> {
    let len = samples.len();
    let mut buf = vec![0.0; len];
    for (r, slot) in buf.iter_mut().enumerate() {
        *slot = samples[register_reverse(r, widths)];
    }
    fwht_in_place(&mut buf);
    let inv = 1.0 / len as f64;
    buf.iter_mut().for_each(|v| *v *= inv);
    buf
}

/// Inverse of [`tensor_coefficients`]: `f(k) = Σ_j a_j w_j(k)`.
fn tensor_synthesis(coeffs: &[f64], widths: &[usize]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    fwht_in_place(&mut buf);
    (0..buf.len()).map(|k| buf[register_reverse(k, widths)]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalshSeries {
    /// Register width per axis; every index component satisfies
    /// `j_i < 2^{dims[i]}`.
    pub dims: Vec<usize>,
    pub terms: BTreeMap<Vec<usize>, f64>,
    /// Sample counts `M_i` used to compute the coefficients.
    pub samples: Vec<usize>,
    /// `Σ ‖∂_i f‖∞ / M_i` when derivative bounds were supplied.
    pub certificate: Option<f64>,
}

impl WalshSeries {
    pub fn new(dims: Vec<usize>) -> Self {
        let samples = dims.iter().map(|&n| 1 << n).collect();
        Self { dims, terms: BTreeMap::new(), samples, certificate: None }
    }

    pub fn with_term(mut self, index: Vec<usize>, coeff: f64) -> Self {
        self.insert(index, coeff);
        self
    }

    pub fn insert(&mut self, index: Vec<usize>, coeff: f64) {
        assert_eq!(index.len(), self.dims.len(), "index dimension mismatch");
        for (j, &n) in index.iter().zip(&self.dims) {
            assert!(*j < 1 << n, "index component {j} exceeds register width {n}");
        }
        self.terms.insert(index, coeff);
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_qubits(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Pointwise value `Σ a_j Π_i w_{j_i}(x_i)`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(j, a)| a * j.iter().zip(x).map(|(&ji, &xi)| walsh_function(ji as u64, xi)).product::<f64>())
            .sum()
    }

    /// Values at every node of `grid`, in flat-index order, via one fast
    /// transform. The grid registers must be at least as wide as the series.
    pub fn evaluate_on_grid(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if grid.dims() != self.dims.len() || grid.qubits().iter().zip(&self.dims).any(|(g, s)| g < s) {
            return Err(Error::GridMismatch(format!(
                "series widths {:?} do not fit grid {:?}",
                self.dims,
                grid.qubits()
            )));
        }
        let mut dense = vec![0.0; grid.len()];
        for (j, a) in &self.terms {
            dense[grid.index_of(j)] += a;
        }
        Ok(tensor_synthesis(&dense, grid.qubits()))
    }

    /// Same series on wider registers; indices are unchanged.
    pub fn widen(mut self, dims: &[usize]) -> Result<Self> {
        if dims.len() != self.dims.len() || dims.iter().zip(&self.dims).any(|(a, b)| a < b) {
            return Err(Error::InvalidArgument("cannot narrow a series".into()));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }
}

/// `S_{f,M}` with all `M` coefficients from samples `f(k/M)`. `M` is rounded
/// up to a power of two.
pub fn m_walsh_series<F: Fn(f64) -> f64>(f: F, m: usize, derivative_sup: Option<f64>) -> WalshSeries {
    let big_m = m.max(1).next_power_of_two();
    let bits = big_m.trailing_zeros() as usize;
    let samples: Vec<f64> = (0..big_m).map(|k| f(k as f64 / big_m as f64)).collect();
    let coeffs = tensor_coefficients(&samples, &[bits]);
    let mut series = WalshSeries::new(vec![bits]);
    for (j, a) in coeffs.into_iter().enumerate() {
        series.terms.insert(vec![j], a);
    }
    series.samples = vec![big_m];
    series.certificate = derivative_sup.map(|d| d / big_m as f64);
    series
}

/// Full transform of grid samples, as a dense flat-indexed array.
pub fn full_walsh_transform(samples: &[f64], grid: &GridSpec) -> Result<Vec<f64>> {
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), found: samples.len() });
    }
    Ok(tensor_coefficients(samples, grid.qubits()))
}

/// Keeps the `budget` coefficients of largest magnitude; ties go to the
/// smaller flat index.
pub fn sparse_walsh_series(samples: &[f64], grid: &GridSpec, budget: usize) -> Result<WalshSeries> {
    if budget == 0 || budget > grid.len() {
        return Err(Error::InvalidArgument(format!("budget must be in 1..={}, got {budget}", grid.len())));
    }
    let coeffs = full_walsh_transform(samples, grid)?;
    let mut order: Vec<usize> = (0..coeffs.len()).collect();
    order.sort_by(|&a, &b| coeffs[b].abs().total_cmp(&coeffs[a].abs()).then(a.cmp(&b)));
    let mut series = WalshSeries::new(grid.qubits().to_vec());
    for &idx in &order[..budget] {
        series.terms.insert(grid.nodes_of(idx), coeffs[idx]);
    }
    Ok(series)
}

/// Truncated tensor series with `M_i` samples along axis `i`, computed from
/// the coarse sub-lattice `k_i / M_i` of the grid samples.
pub fn multidim_walsh_series(
    samples: &[f64],
    grid: &GridSpec,
    budgets: &[usize],
    derivative_sups: Option<&[f64]>,
) -> Result<WalshSeries> {
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), found: samples.len() });
    }
    if budgets.len() != grid.dims() {
        return Err(Error::InvalidArgument(format!(
            "expected {} budgets, got {}",
            grid.dims(),
            budgets.len()
        )));
    }
    let mut coarse_bits = Vec::with_capacity(budgets.len());
    for (axis, &m) in budgets.iter().enumerate() {
        let big_m = m.max(1).next_power_of_two();
        if big_m > grid.points(axis) {
            return Err(Error::InvalidArgument(format!(
                "budget {m} exceeds register width of axis {} ({} points)",
                axis + 1,
                grid.points(axis)
            )));
        }
        coarse_bits.push(big_m.trailing_zeros() as usize);
    }
    let coarse_len: usize = coarse_bits.iter().map(|&b| 1usize << b).product();
    let mut sub = Vec::with_capacity(coarse_len);
    let mut nodes = vec![0; grid.dims()];
    for c in 0..coarse_len {
        let mut rest = c;
        for axis in (0..grid.dims()).rev() {
            let b = coarse_bits[axis];
            let k = rest & ((1 << b) - 1);
            rest >>= b;
            nodes[axis] = k << (grid.qubits()[axis] - b);
        }
        sub.push(samples[grid.index_of(&nodes)]);
    }
    let coeffs = tensor_coefficients(&sub, &coarse_bits);
    let mut series = WalshSeries::new(grid.qubits().to_vec());
    for (c, a) in coeffs.into_iter().enumerate() {
        let mut rest = c;
        let mut j = vec![0; grid.dims()];
        for axis in (0..grid.dims()).rev() {
            let b = coarse_bits[axis];
            j[axis] = rest & ((1 << b) - 1);
            rest >>= b;
        }
        series.terms.insert(j, a);
    }
    series.samples = coarse_bits.iter().map(|&b| 1 << b).collect();
    series.certificate = derivative_sups
        .map(|d| d.iter().zip(&series.samples).map(|(di, &mi)| di / mi as f64).sum());
    Ok(series)
}

/// Splits a total term budget `K = 2^m` into per-axis `M_i`, giving the
/// extra bit to the leading axes when `m` does not divide evenly.
pub fn balanced_budgets(total: usize, grid: &GridSpec) -> Vec<usize> {
    let m = total.max(1).next_power_of_two().trailing_zeros() as usize;
    let d = grid.dims();
    (0..d)
        .map(|axis| {
            let bits = m / d + usize::from(axis < m % d);
            1usize << bits.min(grid.qubits()[axis])
        })
        .collect()
}

/// `max |a − b|`.
pub fn sup_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
