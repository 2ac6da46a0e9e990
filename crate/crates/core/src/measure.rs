//! Observables and estimation protocols (Hadamard test, SWAP test, overlap
//! test, canonical amplitude estimation). Every protocol computes the exact
//! outcome distribution from the simulated circuit first; sampling draws
//! from that distribution with a seeded generator.

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::circuit::qft::fft_axis;
use crate::circuit::{apply_controlled, Block, Gate, GateList};
use crate::grid::{inner, pairwise_sum_by, GridSpec, StateVector};
use crate::rng::seeded;
use crate::{Error, Result};

/// Largest register (in qubits) a protocol simulation may allocate.
pub const PROTOCOL_QUBIT_LIMIT: usize = 27;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "arg", rename_all = "kebab-case")]
pub enum Observable {
    /// `|X⟩⟨X|` at the given node indices.
    Point(Vec<usize>),
    /// `|s⟩⟨s|` with `s` the uniform superposition.
    Uniform,
    /// `Σ_X X_1^{k_1}…X_d^{k_d} |X⟩⟨X|`.
    DiagonalMoment(Vec<u32>),
    /// Rank-one `|ψ⟩⟨m_k|` with `m_k = X^k / 𝒩_k`; its expectation is
    /// the overlap `⟨m_k|ψ⟩`.
    OverlapMoment(Vec<u32>),
    /// `Z` on flat qubit `i`: sign `(−1)^{bit_i(x)}`.
    PauliZ(usize),
}

impl std::fmt::Display for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[u32]| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Observable::Point(x) => {
                write!(f, "point({})", x.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","))
            }
            Observable::Uniform => write!(f, "uniform"),
            Observable::DiagonalMoment(k) => write!(f, "moment({})", join(k)),
            Observable::OverlapMoment(k) => write!(f, "overlap-moment({})", join(k)),
            Observable::PauliZ(i) => write!(f, "Z{i}"),
        }
    }
}

fn check_axes(grid: &GridSpec, len: usize) -> Result<()> {
    if len != grid.dims() {
        return Err(Error::GridMismatch(format!("observable has {len} axes, grid has {}", grid.dims())));
    }
    Ok(())
}

fn monomial(grid: &GridSpec, k: &[u32]) -> Vec<f64> {
    let mut x = vec![0.0; grid.dims()];
    (0..grid.len())
        .map(|i| {
            grid.position_into(i, &mut x);
            x.iter().zip(k).map(|(xi, &ki)| xi.powi(ki as i32)).product()
        })
        .collect()
}

/// `𝒩_k = sqrt(Σ_X (X_1^{k_1}…X_d^{k_d})²)`.
pub fn moment_normalizer(grid: &GridSpec, k: &[u32]) -> f64 {
    pairwise_sum_by(&monomial(grid, k), |v| v * v).sqrt()
}

/// Diagonal entries of diagonal observables; `None` for the others.
pub fn diagonal_values(grid: &GridSpec, obs: &Observable) -> Result<Option<Vec<f64>>> {
    Ok(match obs {
        Observable::Point(x) => {
            check_axes(grid, x.len())?;
            if let Some(axis) = (0..x.len()).find(|&a| x[a] >= grid.points(a)) {
                return Err(Error::InvalidArgument(format!("node {} out of range on axis {}", x[axis], axis + 1)));
            }
            let mut v = vec![0.0; grid.len()];
            v[grid.index_of(x)] = 1.0;
            Some(v)
        }
        Observable::DiagonalMoment(k) => {
            check_axes(grid, k.len())?;
            Some(monomial(grid, k))
        }
        Observable::PauliZ(q) => {
            if *q >= grid.total_qubits() {
                return Err(Error::InvalidArgument(format!("qubit {q} out of range")));
            }
            Some((0..grid.len()).map(|i| if (i >> q) & 1 == 0 { 1.0 } else { -1.0 }).collect())
        }
        Observable::Uniform | Observable::OverlapMoment(_) => None,
    })
}

fn moment_state(grid: &GridSpec, k: &[u32]) -> Result<StateVector> {
    check_axes(grid, k.len())?;
    let mut m = StateVector::from_real(grid, &monomial(grid, k))?;
    m.normalize()?;
    Ok(m)
}

/// Exact `⟨ψ|Ô|ψ⟩` for a normalized `ψ` (real part for the overlap form).
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    let grid = &state.grid;
    match obs {
        Observable::Uniform => {
            let s = state.amps.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b);
            Ok(s.norm_sqr() / grid.len() as f64)
        }
        Observable::OverlapMoment(k) => Ok(moment_state(grid, k)?.inner(state)?.re),
        _ => {
            let d = diagonal_values(grid, obs)?.expect("diagonal observable");
            let terms: Vec<f64> = state.amps.iter().zip(&d).map(|(a, v)| v * a.norm_sqr()).collect();
            Ok(pairwise_sum_by(&terms, |v| *v))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub exact_value: f64,
    /// Probability of ancilla outcome 0.
    pub p0: f64,
    pub sampled_value: Option<f64>,
    pub shots: u64,
    pub seed: u64,
    /// Standard deviation of the sampled estimator, from the exact `p0`.
    pub stderr: f64,
    /// Factor the block-encoded observable was divided by to reach unit norm.
    pub scale: f64,
}

impl EstimateReport {
    fn from_p0(p0: f64, scale: f64, shots: u64, seed: u64) -> Result<Self> {
        let p0 = p0.clamp(0.0, 1.0);
        let exact_value = scale * (2.0 * p0 - 1.0);
        let (sampled_value, stderr) = if shots > 0 {
            let mut rng = seeded(seed);
            let zeros = Binomial::new(shots, p0)
                .map_err(|e| Error::InvalidArgument(format!("binomial draw: {e}")))?
                .sample(&mut rng);
            let est = scale * (2.0 * zeros as f64 / shots as f64 - 1.0);
            (Some(est), 2.0 * scale * (p0 * (1.0 - p0) / shots as f64).sqrt())
        } else {
            (None, 0.0)
        };
        Ok(Self { exact_value, p0, sampled_value, shots, seed, stderr, scale })
    }
}

fn apply_hadamards(amps: &mut [Complex64], qubits: impl IntoIterator<Item = usize>, total: usize) -> Result<()> {
    let mut l = GateList::new(total);
    qubits.into_iter().for_each(|q| l.push(Gate::H(q)));
    l.simulate(amps)
}

/// Hadamard test of `Re⟨ψ|Ô|ψ⟩` (or `Im` with `imaginary`).
///
/// Diagonal observables with `‖Ô‖ ≤ 1` are block-encoded on one extra
/// qubit as `H_b · (anti-controlled e^{iθ} · controlled e^{−iθ}) · H_b`
/// with `θ = arccos(o)`, so that `⟨0|U|0⟩ = cos θ = Ô`; larger observables
/// are divided by their norm first (reported as `scale`). `|s⟩⟨s|` is the
/// point projector at 0 conjugated by `H^{⊗n}`. The overlap form reduces
/// to [`overlap_test`]. The imaginary variant places `diag(1, −i)` on the
/// test ancilla, so `P(0) − P(1) = Im⟨ψ|Ô|ψ⟩`.
pub fn hadamard_test(state: &StateVector, obs: &Observable, shots: u64, seed: u64, imaginary: bool) -> Result<EstimateReport> {
    let grid = &state.grid;
    let n = grid.total_qubits();
    if n + 2 > PROTOCOL_QUBIT_LIMIT {
        return Err(Error::Capacity { requested: n + 2, limit: PROTOCOL_QUBIT_LIMIT });
    }
    let (values, conjugate) = match obs {
        Observable::OverlapMoment(k) => {
            let m = moment_state(grid, k)?;
            return overlap_test(&m, state, shots, seed, imaginary);
        }
        Observable::Uniform => {
            let mut v = vec![0.0; grid.len()];
            v[0] = 1.0;
            (v, true)
        }
        _ => (diagonal_values(grid, obs)?.expect("diagonal observable"), false),
    };
    let norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if norm > 1.0 { norm } else { 1.0 };
    let (b, a) = (n, n + 1);
    let total = n + 2;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << total];
    amps[..grid.len()].copy_from_slice(&state.amps);

    apply_hadamards(&mut amps, [a, b], total)?;
    if conjugate {
        apply_hadamards(&mut amps, 0..n, total)?;
    }
    // sub-register (data, b): phase −θ on b = 1, +θ on b = 0
    let theta: Vec<f64> = values.iter().map(|v| (v / scale).clamp(-1.0, 1.0).acos()).collect();
    let mut phases = theta.clone();
    phases.extend(theta.iter().map(|t| -t));
    let qubits: Vec<usize> = (0..=n).collect();
    apply_controlled(&mut amps, a, true, &Block::Diagonal { qubits, phases })?;
    if conjugate {
        apply_hadamards(&mut amps, 0..n, total)?;
    }
    apply_hadamards(&mut amps, [b], total)?;
    let mut tail = GateList::new(total);
    if imaginary {
        tail.push(Gate::Phase(a, -std::f64::consts::FRAC_PI_2));
    }
    tail.push(Gate::H(a));
    tail.simulate(&mut amps)?;
    let p0 = pairwise_sum_by(&amps[..1 << (n + 1)], |z| z.norm_sqr());
    EstimateReport::from_p0(p0, scale, shots, seed)
}

/// Hadamard test with controlled state preparation: the ancilla branches
/// `|0⟩|ψ⟩ + |1⟩|φ⟩` interfere, giving `P(0) = (1 + Re⟨ψ|φ⟩)/2`
/// (`Im` with `imaginary`).
pub fn overlap_test(psi: &StateVector, phi: &StateVector, shots: u64, seed: u64, imaginary: bool) -> Result<EstimateReport> {
    psi.check_grid(phi)?;
    let n = psi.grid.total_qubits();
    if n + 1 > PROTOCOL_QUBIT_LIMIT {
        return Err(Error::Capacity { requested: n + 1, limit: PROTOCOL_QUBIT_LIMIT });
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps: Vec<Complex64> = psi.amps.iter().chain(&phi.amps).map(|z| z * r).collect();
    let mut tail = GateList::new(n + 1);
    if imaginary {
        tail.push(Gate::Phase(n, -std::f64::consts::FRAC_PI_2));
    }
    tail.push(Gate::H(n));
    tail.simulate(&mut amps)?;
    let p0 = pairwise_sum_by(&amps[..1 << n], |z| z.norm_sqr());
    EstimateReport::from_p0(p0, 1.0, shots, seed)
}

/// SWAP test on two registers: `P(0) = (1 + |⟨φ|ψ⟩|²)/2`, so the reported
/// value is `|⟨φ|ψ⟩|²`. With `imaginary` the ancilla phase makes the
/// value `0` for any pair, since the swap expectation is real.
pub fn swap_test(psi: &StateVector, phi: &StateVector, shots: u64, seed: u64, imaginary: bool) -> Result<EstimateReport> {
    if psi.grid.qubits() != phi.grid.qubits() {
        return Err(Error::GridMismatch(format!(
            "register widths {:?} vs {:?}",
            psi.grid.qubits(),
            phi.grid.qubits()
        )));
    }
    let n = psi.grid.total_qubits();
    let total = 2 * n + 1;
    if total > PROTOCOL_QUBIT_LIMIT {
        return Err(Error::Capacity { requested: total, limit: PROTOCOL_QUBIT_LIMIT });
    }
    let big_n = 1usize << n;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << total];
    for (y, p) in phi.amps.iter().enumerate() {
        for (x, s) in psi.amps.iter().enumerate() {
            amps[x + big_n * y] = s * p;
        }
    }
    let a = 2 * n;
    apply_hadamards(&mut amps, [a], total)?;
    let mut swaps = GateList::new(total);
    (0..n).for_each(|q| swaps.push(Gate::Swap(q, n + q)));
    apply_controlled(&mut amps, a, true, &Block::Gates(swaps))?;
    let mut tail = GateList::new(total);
    if imaginary {
        tail.push(Gate::Phase(a, -std::f64::consts::FRAC_PI_2));
    }
    tail.push(Gate::H(a));
    tail.simulate(&mut amps)?;
    let p0 = pairwise_sum_by(&amps[..1 << (2 * n)], |z| z.norm_sqr());
    EstimateReport::from_p0(p0, 1.0, shots, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QaeMode {
    ExactDistribution,
    Sampled { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaeReport {
    /// `a = ⟨ψ|φ⟩`.
    pub overlap: f64,
    pub precision_qubits: usize,
    /// `P(k)` for `k = 0..2^m`.
    pub distribution: Vec<f64>,
    /// Most probable outcome of the exact distribution.
    pub map_outcome: usize,
    /// `|cos(π k̂ / 2^m)|`.
    pub estimate: f64,
    /// Histogram, modal outcome and estimate in sampled mode.
    pub counts: Option<Vec<u64>>,
    pub sampled_outcome: Option<usize>,
    pub sampled_estimate: Option<f64>,
}

fn argmax(v: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in v.into_iter().enumerate() {
        if x > best.1 {
            best = (i, x);
        }
    }
    best.0
}

/// Phase estimation on `Q = (I − 2|ψ⟩⟨ψ|)(I − 2|φ⟩⟨φ|)` with `m` counting
/// qubits, starting from `|ψ⟩`. Controlled powers realize `Q^j` on
/// counting state `|j⟩`; the inverse transform uses `e^{−2πi kj/2^m}`.
pub fn qae(psi: &StateVector, phi: &StateVector, m: usize, mode: QaeMode) -> Result<QaeReport> {
    psi.check_grid(phi)?;
    if m == 0 {
        return Err(Error::InvalidArgument("QAE needs at least one counting qubit".into()));
    }
    let n = psi.grid.total_qubits();
    if n + m > PROTOCOL_QUBIT_LIMIT {
        return Err(Error::Capacity { requested: n + m, limit: PROTOCOL_QUBIT_LIMIT });
    }
    let a = inner(&psi.amps, &phi.amps);
    if a.im.abs() > 1e-9 {
        return Err(Error::ContractViolation(format!("overlap ⟨ψ|φ⟩ = {a} is not real")));
    }
    let big_m = 1usize << m;
    let big_n = psi.len();
    // rows j = 0..M of Q^j|ψ⟩
    let mut rows = Vec::with_capacity(big_m * big_n);
    let mut v = psi.amps.clone();
    let reflect = |v: &mut [Complex64], s: &[Complex64]| {
        let c = inner(s, v) * 2.0;
        v.iter_mut().zip(s).for_each(|(x, y)| *x -= c * y);
    };
    for _ in 0..big_m {
        rows.extend_from_slice(&v);
        reflect(&mut v, &phi.amps);
        reflect(&mut v, &psi.amps);
    }
    // forward unitary DFT down the columns, then the remaining 1/√M
    fft_axis(&mut rows, big_m, big_n, false);
    let s = 1.0 / (big_m as f64).sqrt();
    let distribution: Vec<f64> =
        rows.chunks_exact(big_n).map(|row| pairwise_sum_by(row, |z| z.norm_sqr()) * s * s).collect();
    let map_outcome = argmax(distribution.iter().copied());
    let est = |k: usize| (std::f64::consts::PI * k as f64 / big_m as f64).cos().abs();
    let mut report = QaeReport {
        overlap: a.re,
        precision_qubits: m,
        estimate: est(map_outcome),
        map_outcome,
        distribution,
        counts: None,
        sampled_outcome: None,
        sampled_estimate: None,
    };
    if let QaeMode::Sampled { shots, seed } = mode {
        let counts = draw_counts(&report.distribution, shots, seed)?;
        let k = argmax(counts.iter().map(|&c| c as f64));
        report.sampled_outcome = Some(k);
        report.sampled_estimate = Some(est(k));
        report.counts = Some(counts);
    }
    Ok(report)
}

fn draw_counts(weights: &[f64], shots: u64, seed: u64) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(weights).map_err(|e| Error::InvalidArgument(format!("cannot sample: {e}")))?;
    let mut rng = seeded(seed);
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts)
}

/// Computational-basis histogram of `shots` measurements.
pub fn sample_counts(state: &StateVector, shots: u64, seed: u64) -> Result<Vec<u64>> {
    draw_counts(&state.probabilities(), shots, seed)
}

/// How [`measure`] evaluates an observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    #[default]
    Exact,
    Hadamard,
}

pub fn measure(state: &StateVector, obs: &Observable, protocol: Protocol, shots: u64, seed: u64) -> Result<EstimateReport> {
    match protocol {
        Protocol::Exact => {
            let v = expectation(state, obs)?;
            Ok(EstimateReport { exact_value: v, p0: (1.0 + v) / 2.0, sampled_value: None, shots: 0, seed, stderr: 0.0, scale: 1.0 })
        }
        Protocol::Hadamard => hadamard_test(state, obs, shots, seed, false),
    }
}
