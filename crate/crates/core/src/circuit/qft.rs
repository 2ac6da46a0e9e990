//! Per-register Fourier transforms and diagonal phase kernels.
//!
//! The forward transform on register `j` is the unitary DFT with negative
//! exponent, `ψ̂(k) = N^{-1/2} Σ_x e^{−2πi k x / N} ψ(x)`, so that output
//! index `k` carries the frequency node `X = k/N` and
//! `D̂_j = QFT_j^{-1} diag(d_j) QFT_j`.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

use crate::grid::{GridSpec, StateVector};
use crate::{Error, Result};

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = PLANNER.lock().unwrap_or_else(|e| e.into_inner());
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

/// Columns gathered per batch when the register is not the innermost one.
const BATCH: usize = 16;

/// Unitary Fourier transform of register `axis` of a flat amplitude array
/// laid out per `grid`.
pub fn qft_in_place(amps: &mut [Complex64], grid: &GridSpec, axis: usize, inverse: bool) {
    let n = grid.points(axis);
    let stride = grid.stride(axis);
    fft_axis(amps, n, stride, inverse);
}

/// Fourier transform along a strided axis: `amps` is a sequence of blocks of
/// `n × stride` values stored row-major with the transform running down the
/// columns.
pub fn fft_axis(amps: &mut [Complex64], n: usize, stride: usize, inverse: bool) {
    debug_assert_eq!(amps.len() % (n * stride), 0);
    if n == 1 {
        return;
    }
    let fft = plan(n, inverse);
    let scale = 1.0 / (n as f64).sqrt();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    if stride == 1 {
        fft.process_with_scratch(amps, &mut scratch);
        amps.iter_mut().for_each(|a| *a *= scale);
        return;
    }
    let width = BATCH.min(stride);
    let mut cols = vec![Complex64::new(0.0, 0.0); n * width];
    for block in amps.chunks_exact_mut(n * stride) {
        let mut c0 = 0;
        while c0 < stride {
            let w = width.min(stride - c0);
            for k in 0..n {
                let row = &block[k * stride + c0..k * stride + c0 + w];
                for (c, v) in row.iter().enumerate() {
                    cols[c * n + k] = *v;
                }
            }
            fft.process_with_scratch(&mut cols[..w * n], &mut scratch);
            for k in 0..n {
                let row = &mut block[k * stride + c0..k * stride + c0 + w];
                for (c, v) in row.iter_mut().enumerate() {
                    *v = cols[c * n + k] * scale;
                }
            }
            c0 += w;
        }
    }
}

pub fn apply_qft(state: &StateVector, axis: usize, inverse: bool) -> Result<StateVector> {
    if axis >= state.grid.dims() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
    }
    let mut out = state.clone();
    qft_in_place(&mut out.amps, &state.grid, axis, inverse);
    Ok(out)
}

/// Domain of a diagonal phase array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseScope {
    Full,
    Register(usize),
}

/// `amps[x] *= exp(i·phase[x])`; a register-scoped phase is broadcast over
/// the other registers.
pub fn apply_diagonal_in_place(amps: &mut [Complex64], grid: &GridSpec, phase: &[f64], scope: PhaseScope) -> Result<()> {
    match scope {
        PhaseScope::Full => {
            if phase.len() != amps.len() {
                return Err(Error::LengthMismatch { expected: amps.len(), found: phase.len() });
            }
            for (a, &p) in amps.iter_mut().zip(phase) {
                *a *= Complex64::from_polar(1.0, p);
            }
        }
        PhaseScope::Register(axis) => {
            if axis >= grid.dims() {
                return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
            }
            let n = grid.points(axis);
            if phase.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: phase.len() });
            }
            let factors: Vec<Complex64> = phase.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
            let stride = grid.stride(axis);
            for block in amps.chunks_exact_mut(n * stride) {
                for (row, f) in block.chunks_exact_mut(stride).zip(&factors) {
                    row.iter_mut().for_each(|a| *a *= f);
                }
            }
        }
    }
    Ok(())
}

pub fn apply_diagonal(state: &StateVector, phase: &[f64], scope: PhaseScope) -> Result<StateVector> {
    let mut out = state.clone();
    apply_diagonal_in_place(&mut out.amps, &state.grid, phase, scope)?;
    Ok(out)
}

/// `amps[x] *= factors[x]` for precomputed unit-modulus factors.
pub fn multiply_in_place(amps: &mut [Complex64], factors: &[Complex64]) {
    debug_assert_eq!(amps.len(), factors.len());
    for (a, f) in amps.iter_mut().zip(factors) {
        *a *= f;
    }
}
