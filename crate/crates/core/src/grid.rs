//! Dyadic grids on the periodic unit cube and the real-space amplitude
//! encoding.
//!
//! Layout: the axis-1 register is the most significant part of the flat
//! index and each register stores `X_j * N_j` as a plain binary integer, so
//! the first dyadic digit `q_0` of `X_j` is the register's top bit. Qubit `i`
//! is bit `i` of the flat index (qubit 0 is the least significant bit).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on the total number of qubits `n_1 + ... + n_d`.
pub const DEFAULT_QUBIT_LIMIT: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    qubits: Vec<usize>,
}

impl GridSpec {
    pub fn new(qubits: &[usize]) -> Result<Self> {
        Self::with_limit(qubits, DEFAULT_QUBIT_LIMIT)
    }

    pub fn with_limit(qubits: &[usize], limit: usize) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::InvalidGrid("at least one axis is required".into()));
        }
        if let Some(j) = qubits.iter().position(|&n| n == 0) {
            return Err(Error::InvalidGrid(format!("axis {} has zero qubits", j + 1)));
        }
        let total: usize = qubits.iter().sum();
        if total > limit || total >= usize::BITS as usize {
            return Err(Error::Capacity { requested: total, limit });
        }
        Ok(Self { qubits: qubits.to_vec() })
    }

    pub fn dims(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn total_qubits(&self) -> usize {
        self.qubits.iter().sum()
    }

    /// `N_j = 2^{n_j}`.
    pub fn points(&self, axis: usize) -> usize {
        1 << self.qubits[axis]
    }

    /// `Δx_j = 1 / N_j`.
    pub fn step(&self, axis: usize) -> f64 {
        1.0 / self.points(axis) as f64
    }

    /// Total number of grid nodes `N`.
    pub fn len(&self) -> usize {
        1 << self.total_qubits()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat-index stride of one step along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        1 << self.register_offset(axis)
    }

    /// Position of the least significant bit of register `axis` in the flat
    /// index.
    pub fn register_offset(&self, axis: usize) -> usize {
        self.qubits[axis + 1..].iter().sum()
    }

    /// Qubit holding dyadic digit `q_k` of axis `axis`.
    pub fn flat_bit(&self, axis: usize, digit: usize) -> usize {
        assert!(digit < self.qubits[axis], "digit out of range");
        self.register_offset(axis) + self.qubits[axis] - 1 - digit
    }

    /// Integer node coordinates `k_j = X_j N_j` of a flat index.
    pub fn nodes_of(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims()];
        self.nodes_into(index, &mut out);
        out
    }

    pub fn nodes_into(&self, index: usize, out: &mut [usize]) {
        let mut rest = index;
        for axis in (0..self.dims()).rev() {
            let n = self.qubits[axis];
            out[axis] = rest & ((1 << n) - 1);
            rest >>= n;
        }
    }

    pub fn index_of(&self, nodes: &[usize]) -> usize {
        debug_assert_eq!(nodes.len(), self.dims());
        let mut idx = 0;
        for (axis, &k) in nodes.iter().enumerate() {
            debug_assert!(k < self.points(axis));
            idx = (idx << self.qubits[axis]) | k;
        }
        idx
    }

    /// Physical coordinates `X_j = k_j / N_j` of a flat index.
    pub fn position(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims()];
        self.position_into(index, &mut out);
        out
    }

    pub fn position_into(&self, index: usize, out: &mut [f64]) {
        let mut rest = index;
        for axis in (0..self.dims()).rev() {
            let n = self.qubits[axis];
            out[axis] = (rest & ((1 << n) - 1)) as f64 / (1u64 << n) as f64;
            rest >>= n;
        }
    }

    /// Coordinates along one axis, `[0, 1/N, ..., (N-1)/N]`.
    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        let n = self.points(axis);
        (0..n).map(|k| k as f64 / n as f64).collect()
    }
}

pub fn build_grid(qubits: &[usize]) -> Result<GridSpec> {
    GridSpec::new(qubits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub grid: GridSpec,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self { grid: grid.clone(), amps: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_amps(grid: &GridSpec, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: amps.len() });
        }
        Ok(Self { grid: grid.clone(), amps })
    }

    pub fn from_real(grid: &GridSpec, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: values.len() });
        }
        let amps = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(Self { grid: grid.clone(), amps })
    }

    pub fn basis(grid: &GridSpec, index: usize) -> Self {
        let mut s = Self::zeros(grid);
        s.amps[index] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// `‖ψ‖_{2,N}`.
    pub fn norm(&self) -> f64 {
        pairwise_sum_by(&self.amps, |a| a.norm_sqr()).sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (pairwise_sum_by(&self.amps, |a| a.norm_sqr()) - 1.0).abs() <= 1e-12
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateNorm);
        }
        let inv = 1.0 / norm;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(norm)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_grid(other)?;
        Ok(inner(&self.amps, &other.amps))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn check_grid(&self, other: &StateVector) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid.qubits(),
                other.grid.qubits()
            )));
        }
        Ok(())
    }
}

/// Samples `f` at every grid node and stores the values as amplitudes.
pub fn encode_function<F>(f: F, grid: &GridSpec, normalize: bool) -> Result<StateVector>
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = vec![0.0; grid.dims()];
    let mut amps = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        grid.position_into(i, &mut x);
        let v = f(&x);
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite sample {v} at {x:?}")));
        }
        amps.push(Complex64::new(v, 0.0));
    }
    let mut state = StateVector { grid: grid.clone(), amps };
    if normalize {
        state.normalize()?;
    }
    Ok(state)
}

/// `‖a − b‖_{2,N}`.
pub fn vector_error(a: &StateVector, b: &StateVector) -> Result<f64> {
    a.check_grid(b)?;
    Ok(distance(&a.amps, &b.amps))
}

pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).collect();
    pairwise_sum(&diffs).sqrt()
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let terms: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x.conj() * y).collect();
    Complex64::new(pairwise_sum_by(&terms, |z| z.re), pairwise_sum_by(&terms, |z| z.im))
}

const PAIRWISE_BLOCK: usize = 64;

/// Cascade summation, error growth `O(log n)`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs, |&x| x)
}

pub fn pairwise_sum_by<T, F: Fn(&T) -> f64 + Copy>(xs: &[T], f: F) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().map(f).sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}
