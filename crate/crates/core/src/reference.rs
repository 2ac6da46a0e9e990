//! Independent oracles (characteristics, periodic shift, RK4, a Chebyshev
//! propagator for the semi-discrete system) and computable forms of the
//! discretization, operator-norm and vector-norm error bounds.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evolution::{evolve, DiagonalApprox, Record, StepPlan, Variant};
use crate::expr::{parse_expr, Expr};
use crate::fd::{apply_stencil, fd_coefficients, operator_norm, stencil_real_into, FdScheme};
use crate::grid::{distance, pairwise_sum_by, GridSpec, StateVector};
use crate::problem::{gaussian_expr, InitialCondition, LotkaParams, Oracle, TransportProblem};
use crate::{Error, Result};

/// Least-squares line `y = slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Foot of the characteristic through `(x, v)` at time `t` for
/// `∂t f + (v−½)∂x f + κ(x−½−ct)∂v f = 0`, `κ < 0`, in absolute
/// coordinates. The rotation is done in centered variables `x−½, v−½`.
pub fn characteristic_foot(x: f64, v: f64, t: f64, qe0_over_m: f64, c: f64) -> (f64, f64) {
    let w = qe0_over_m.abs().sqrt();
    let (xc, vc) = (x - 0.5, v - 0.5);
    let (s, co) = (w * t).sin_cos();
    let y = xc - c * t;
    let x0 = if w == 0.0 { y - (vc - c) * t } else { y * co - (vc - c) / w * s };
    let v0 = c + w * y * s + (vc - c) * co;
    (x0 + 0.5, v0 + 0.5)
}

/// `f0` transported along the characteristics to `(x, v, t)`.
pub fn characteristics_boltzmann2d<F: Fn(f64, f64) -> f64>(f0: F, x: f64, v: f64, t: f64, qe0_over_m: f64, c: f64) -> f64 {
    let (x0, v0) = characteristic_foot(x, v, t, qe0_over_m, c);
    f0(x0, v0)
}

/// `f0(X − v t)` at the grid nodes. Samples are rolled, which requires
/// `v t / Δx` to be an integer on every axis.
pub fn shift_solution(initial: &InitialCondition, grid: &GridSpec, velocity: &[f64], t: f64) -> Result<Vec<f64>> {
    if velocity.len() != grid.dims() {
        return Err(Error::GridMismatch(format!("{} velocities for a {}-axis grid", velocity.len(), grid.dims())));
    }
    match initial {
        InitialCondition::Expr(e) => {
            let mut x = vec![0.0; grid.dims()];
            (0..grid.len())
                .map(|i| {
                    grid.position_into(i, &mut x);
                    x.iter_mut().zip(velocity).for_each(|(xi, v)| *xi = (*xi - v * t).rem_euclid(1.0));
                    e.eval(&x, 0.0)
                })
                .collect()
        }
        InitialCondition::Samples { qubits, values } => {
            if qubits.as_slice() != grid.qubits() {
                return Err(Error::GridMismatch("initial samples live on another grid".into()));
            }
            let mut shifts = Vec::with_capacity(grid.dims());
            for (axis, v) in velocity.iter().enumerate() {
                let n = grid.points(axis);
                let s = v * t * n as f64;
                if (s - s.round()).abs() > 1e-9 {
                    return Err(Error::NoOracle(format!(
                        "shift {s} nodes on axis {} is not an integer; samples cannot be moved exactly",
                        axis + 1
                    )));
                }
                shifts.push((s.round() as i64).rem_euclid(n as i64) as usize);
            }
            let mut out = vec![0.0; grid.len()];
            let mut nodes = vec![0; grid.dims()];
            for (i, v) in values.iter().enumerate() {
                grid.nodes_into(i, &mut nodes);
                for (axis, k) in nodes.iter_mut().enumerate() {
                    *k = (*k + shifts[axis]) % grid.points(axis);
                }
                out[grid.index_of(&nodes)] = *v;
            }
            Ok(out)
        }
    }
}

/// One-dimensional periodic shift of samples by `v t`.
pub fn shift_solution_1d(samples: &[f64], v: f64, t: f64) -> Result<Vec<f64>> {
    let n = samples.len().trailing_zeros() as usize;
    if !samples.len().is_power_of_two() || n == 0 {
        return Err(Error::InvalidArgument("sample count must be a power of two ≥ 2".into()));
    }
    let grid = GridSpec::new(&[n])?;
    shift_solution(&InitialCondition::Samples { qubits: vec![n], values: samples.to_vec() }, &grid, &[v], t)
}

/// Encoding of the exact solution at time `t`, normalized by
/// `‖f0‖_{2,N}` as in `|f⟩_t`.
pub fn oracle_state(problem: &TransportProblem, grid: &GridSpec, t: f64) -> Result<StateVector> {
    let f0 = problem.initial_samples(grid)?;
    let norm0 = pairwise_sum_by(&f0, |v| v * v).sqrt();
    if norm0 == 0.0 {
        return Err(Error::DegenerateNorm);
    }
    let values = match &problem.oracle {
        Some(Oracle::Shift { velocity }) => shift_solution(&problem.initial, grid, velocity, t)?,
        Some(Oracle::Characteristics2d { qe0_over_m, c }) => {
            let InitialCondition::Expr(e) = &problem.initial else {
                return Err(Error::NoOracle("characteristics need an analytic initial condition".into()));
            };
            if grid.dims() != 2 {
                return Err(Error::GridMismatch("characteristics oracle is two-dimensional".into()));
            }
            let mut x = vec![0.0; 2];
            (0..grid.len())
                .map(|i| {
                    grid.position_into(i, &mut x);
                    let (x0, v0) = characteristic_foot(x[0], x[1], t, *qe0_over_m, *c);
                    e.eval(&[x0, v0], 0.0)
                })
                .collect::<Result<Vec<_>>>()?
        }
        Some(Oracle::LotkaVolterra { .. }) => {
            return Err(Error::NoOracle(format!("`{}` only has a trajectory oracle for its moments", problem.label)))
        }
        None => return Err(Error::NoOracle(format!("`{}` has no registered oracle", problem.label))),
    };
    let amps = values.iter().map(|v| Complex64::new(v / norm0, 0.0)).collect();
    StateVector::from_amps(grid, amps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvTrajectory {
    pub t: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl LvTrajectory {
    /// Linear interpolation of `(x1, x2)` at `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let h = self.t[1] - self.t[0];
        let k = ((t - self.t[0]) / h).floor().clamp(0.0, (self.t.len() - 2) as f64) as usize;
        let w = (t - self.t[k]) / h;
        (self.x1[k] * (1.0 - w) + self.x1[k + 1] * w, self.x2[k] * (1.0 - w) + self.x2[k + 1] * w)
    }
}

fn lv_rhs(p: &LotkaParams, x1: f64, x2: f64) -> (f64, f64) {
    (p.alpha * x1 - p.beta * x1 * x2, -p.delta * x2 + p.gamma * x1 * x2)
}

/// Classic fixed-step RK4 on the population equations.
pub fn rk4_lotka_volterra(params: LotkaParams, init: (f64, f64), horizon: f64, steps: usize) -> Result<LvTrajectory> {
    if steps == 0 || horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::InvalidArgument("need at least one step and a positive horizon".into()));
    }
    if init.0 <= 0.0 || init.1 <= 0.0 {
        return Err(Error::InvalidArgument("populations must be positive".into()));
    }
    let h = horizon / steps as f64;
    let (mut a, mut b) = init;
    let mut tr = LvTrajectory { t: vec![0.0], x1: vec![a], x2: vec![b], q: vec![-a.ln()], p: vec![-b.ln()] };
    for l in 1..=steps {
        let k1 = lv_rhs(&params, a, b);
        let k2 = lv_rhs(&params, a + 0.5 * h * k1.0, b + 0.5 * h * k1.1);
        let k3 = lv_rhs(&params, a + 0.5 * h * k2.0, b + 0.5 * h * k2.1);
        let k4 = lv_rhs(&params, a + h * k3.0, b + h * k3.1);
        a += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        b += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Instability(format!(
                "population became non-positive at t = {}; use a smaller step",
                l as f64 * h
            )));
        }
        tr.t.push(l as f64 * h);
        tr.x1.push(a);
        tr.x2.push(b);
        tr.q.push(-a.ln());
        tr.p.push(-b.ln());
    }
    Ok(tr)
}

/// `H(q, p) = −α p − β e^{−p} − δ q − γ e^{−q}`.
pub fn lotka_hamiltonian(params: &LotkaParams, q: f64, p: f64) -> f64 {
    -params.alpha * p - params.beta * (-p).exp() - params.delta * q - params.gamma * (-q).exp()
}

/// Liouville transport problem in `(x1, x2) = (q, p)` with velocity
/// `(dq/dt, dp/dt) = (−α + β e^{−p}, δ − γ e^{−q})` and a Gaussian density
/// centered at `(q0, p0)`.
pub fn liouville_problem_lotka(
    params: LotkaParams,
    start: (f64, f64),
    sigma: f64,
    order: usize,
    horizon: f64,
) -> Result<TransportProblem> {
    let cq = parse_expr(&format!("-{:?} + {:?} * exp(-x2)", params.alpha, params.beta))?;
    let cp = parse_expr(&format!("{:?} - {:?} * exp(-x1)", params.delta, params.gamma))?;
    let f0 = gaussian_expr(&[start.0, start.1], sigma);
    let mut p = TransportProblem::new("lotka-volterra", vec![cq, cp], InitialCondition::Expr(f0), order, horizon)?
        .with_oracle(Oracle::LotkaVolterra { params, start });
    p.verify()?;
    Ok(p)
}

/// Density-weighted means `Σ X_j ρ(X) / Σ ρ(X)` with `ρ = Re ψ`.
pub fn density_means(state: &StateVector) -> Vec<f64> {
    let grid = &state.grid;
    let mut x = vec![0.0; grid.dims()];
    let mut acc = vec![0.0; grid.dims()];
    let mut mass = 0.0;
    for (i, a) in state.amps.iter().enumerate() {
        grid.position_into(i, &mut x);
        mass += a.re;
        acc.iter_mut().zip(&x).for_each(|(s, xi)| *s += xi * a.re);
    }
    acc.iter().map(|s| s / mass).collect()
}

/// `J_0(z)..J_kmax(z)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(z: f64, kmax: usize) -> Vec<f64> {
    if z == 0.0 {
        let mut v = vec![0.0; kmax + 1];
        v[0] = 1.0;
        return v;
    }
    let start = kmax + 20 + (10.0 * z.cbrt()) as usize + if z > kmax as f64 { z as usize } else { 0 };
    let start = start + (start & 1);
    let mut out = vec![0.0; kmax + 1];
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        if k <= kmax {
            out[k] = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if k == 0 {
            break;
        }
        let jm1 = 2.0 * k as f64 / z * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp1 *= s;
            norm *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// `exp(t G) u` for the real skew generator `G u = −Σ_j c_j(X) ∂̃_j u` of
/// the semi-discrete system (finite differences, no splitting), by a
/// Chebyshev expansion. Coefficients must be time independent.
pub fn semi_discrete_propagate(problem: &TransportProblem, grid: &GridSpec, samples: &[f64], t: f64) -> Result<Vec<f64>> {
    if problem.is_time_dependent() {
        return Err(Error::NoOracle("the Chebyshev propagator needs time-independent coefficients".into()));
    }
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), found: samples.len() });
    }
    let scheme = fd_coefficients(problem.order)?;
    let mut fields = Vec::with_capacity(grid.dims());
    let mut lambda = 0.0;
    let mut x = vec![0.0; grid.dims()];
    for (axis, c) in problem.coefficients.iter().enumerate() {
        let field: Vec<f64> = (0..grid.len())
            .map(|i| {
                grid.position_into(i, &mut x);
                c.eval(&x, 0.0)
            })
            .collect::<Result<_>>()?;
        let sup = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        lambda += sup * operator_norm(&scheme, grid.qubits()[axis]).exact;
        fields.push(field);
    }
    if lambda == 0.0 || t == 0.0 {
        return Ok(samples.to_vec());
    }
    let z = lambda * t.abs();
    let kmax = (z + 12.0 * z.cbrt() + 20.0).ceil() as usize;
    let bessel = bessel_j_sequence(z, kmax);
    let dims = grid.qubits().to_vec();
    let sign = t.signum();
    let mut tmp = vec![0.0; grid.len()];
    // out = sign·G/λ applied to u
    let apply = |u: &[f64], out: &mut [f64], tmp: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (axis, field) in fields.iter().enumerate() {
            stencil_real_into(u, &dims, axis, &scheme, tmp);
            for ((o, d), c) in out.iter_mut().zip(tmp.iter()).zip(field) {
                *o -= sign * c * d / lambda;
            }
        }
    };
    let mut prev = samples.to_vec();
    let mut cur = vec![0.0; grid.len()];
    apply(&prev, &mut cur, &mut tmp);
    let mut result: Vec<f64> = prev.iter().zip(&cur).map(|(a, b)| bessel[0] * a + 2.0 * bessel[1] * b).collect();
    let mut next = vec![0.0; grid.len()];
    for &jk in &bessel[2..] {
        apply(&cur, &mut next, &mut tmp);
        for ((n, p), r) in next.iter_mut().zip(&prev).zip(result.iter_mut()) {
            *n = 2.0 * *n + p;
            *r += 2.0 * jk * *n;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(result)
}

/// Sup-norms of the coefficients and their derivatives on a sample lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupNorms {
    /// `‖c_j‖∞`.
    pub c: Vec<f64>,
    /// `‖∂_t c_j‖∞`.
    pub dt_c: Vec<f64>,
    /// `dx_c[j][m] = ‖∂_{x_j} c_m‖∞`.
    pub dx_c: Vec<Vec<f64>>,
    /// Lattice points per axis and number of time samples.
    pub lattice: Vec<usize>,
    pub time_samples: usize,
}

/// Lattice refinement over the simulation grid and its per-axis cap.
pub const LATTICE_REFINE: usize = 4;
pub const LATTICE_CAP: usize = 128;
pub const TIME_SAMPLES: usize = 64;
const DIFF_STEP: f64 = 1e-5;

/// Sup-norms on the `4×`-refined lattice (at most 128 points per axis) and
/// 64 time samples in `[0, T]` (one when nothing depends on `t`).
/// Derivatives are central differences.
pub fn sup_norms(problem: &TransportProblem, grid: &GridSpec) -> Result<SupNorms> {
    let d = problem.dims();
    let lattice: Vec<usize> = grid.qubits().iter().map(|&n| ((1usize << n) * LATTICE_REFINE).min(LATTICE_CAP)).collect();
    let time_samples = if problem.is_time_dependent() { TIME_SAMPLES } else { 1 };
    let total: usize = lattice.iter().product();
    let mut norms = SupNorms { c: vec![0.0; d], dt_c: vec![0.0; d], dx_c: vec![vec![0.0; d]; d], lattice: lattice.clone(), time_samples };
    let mut x = vec![0.0; d];
    for ti in 0..time_samples {
        let t = if time_samples == 1 { 0.0 } else { problem.horizon * ti as f64 / (time_samples - 1) as f64 };
        for flat in 0..total {
            let mut rest = flat;
            for axis in (0..d).rev() {
                x[axis] = (rest % lattice[axis]) as f64 / lattice[axis] as f64;
                rest /= lattice[axis];
            }
            for (m, c) in problem.coefficients.iter().enumerate() {
                norms.c[m] = norms.c[m].max(c.eval(&x, t)?.abs());
                if c.uses_time() {
                    let dt = (c.eval(&x, t + DIFF_STEP)? - c.eval(&x, t - DIFF_STEP)?) / (2.0 * DIFF_STEP);
                    norms.dt_c[m] = norms.dt_c[m].max(dt.abs());
                }
                for j in 0..d {
                    if !c.uses_var(j) {
                        continue;
                    }
                    let mut probe = x.clone();
                    probe[j] = x[j] + DIFF_STEP;
                    let hi = c.eval(&probe, t)?;
                    probe[j] = x[j] - DIFF_STEP;
                    let lo = c.eval(&probe, t)?;
                    norms.dx_c[j][m] = norms.dx_c[j][m].max(((hi - lo) / (2.0 * DIFF_STEP)).abs());
                }
            }
        }
    }
    Ok(norms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorBound {
    pub alpha_g: f64,
    pub alpha_s: f64,
    pub beta_s: f64,
    /// `‖D̂_j‖₂` per axis.
    pub d_norms: Vec<f64>,
    pub value: f64,
}

/// Operator-norm bound `α_g T²/L` (variant g) or `α_s T²/L + β_s T³/L²`.
pub fn operator_norm_bound(
    norms: &SupNorms,
    scheme: &FdScheme,
    grid: &GridSpec,
    horizon: f64,
    steps: usize,
    variant: Variant,
) -> OperatorBound {
    let d = norms.c.len();
    let dn: Vec<f64> = grid.qubits().iter().map(|&n| operator_norm(scheme, n).exact).collect();
    let mut alpha_g = 0.0;
    let mut beta_s = 0.0;
    for j in 0..d {
        for m in j + 1..d {
            alpha_g += norms.c[j] * norms.c[m] * dn[j] * dn[m];
            beta_s += norms.c[j] * norms.dt_c[m] * dn[j] * dn[m] / 3.0;
        }
    }
    let alpha_s = alpha_g + 0.5 * (0..d).map(|j| norms.dt_c[j] * dn[j]).sum::<f64>();
    let l = steps as f64;
    let value = match variant {
        Variant::G => alpha_g * horizon * horizon / l,
        Variant::S => alpha_s * horizon * horizon / l + beta_s * horizon.powi(3) / (l * l),
    };
    OperatorBound { alpha_g, alpha_s, beta_s, d_norms: dn, value }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorBound {
    pub alpha_g: f64,
    pub alpha_s: f64,
    /// `‖∂_{x_m} f‖_{2,N} / ‖f_0‖_{2,N}` per axis.
    pub ratios: Vec<f64>,
    /// Leading-order value; the higher-order remainders are not included.
    pub value: f64,
}

/// `‖D̂_m f_0‖ / ‖f_0‖` per axis, the grid estimate of
/// `‖∂_{x_m} f‖_{2,N}/‖f_0‖_{2,N}` (constant in time for these flows).
pub fn derivative_ratios(state: &StateVector, scheme: &FdScheme) -> Result<Vec<f64>> {
    let norm = state.norm();
    (0..state.grid.dims()).map(|m| Ok(apply_stencil(state, m, scheme)?.norm() / norm)).collect()
}

/// Leading-order vector-norm bound `α' T²/L`.
pub fn vector_norm_bound(norms: &SupNorms, ratios: &[f64], horizon: f64, steps: usize, variant: Variant) -> VectorBound {
    let d = norms.c.len();
    let mut alpha_g = 0.0;
    for j in 0..d {
        for m in j + 1..d {
            alpha_g += 0.5
                * (norms.c[j] * norms.dx_c[j][m] * ratios[m] + norms.c[m] * norms.dx_c[m][j] * ratios[j]);
        }
    }
    let alpha_s = alpha_g + 0.5 * (0..d).map(|j| norms.dt_c[j] * ratios[j]).sum::<f64>();
    let a = match variant {
        Variant::G => alpha_g,
        Variant::S => alpha_s,
    };
    VectorBound { alpha_g, alpha_s, ratios: ratios.to_vec(), value: a * horizon * horizon / steps as f64 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationReport {
    pub qubits: Vec<usize>,
    pub errors: Vec<f64>,
    /// Fit of `log2(error)` against `n`.
    pub slope: f64,
    pub intercept: f64,
    /// Smallest `K` with `error ≤ T K Σ‖c_j‖∞ Δx^{2p}` at every fitted `n`.
    pub k_estimate: f64,
    pub bound: Vec<f64>,
}

/// `‖|f⟩_T − |f̃⟩_T‖_{2,N}`: exact solution against the semi-discrete one.
pub fn discretization_error(problem: &TransportProblem, grid: &GridSpec, horizon: f64) -> Result<f64> {
    let exact = oracle_state(problem, grid, horizon)?;
    let f0 = problem.initial_samples(grid)?;
    let norm0 = pairwise_sum_by(&f0, |v| v * v).sqrt();
    let semi = semi_discrete_propagate(problem, grid, &f0, horizon)?;
    let semi: Vec<Complex64> = semi.iter().map(|v| Complex64::new(v / norm0, 0.0)).collect();
    Ok(distance(&exact.amps, &semi))
}

/// `T K Σ_j ‖c_j‖∞ Δx_j^{2p}`.
pub fn discretization_bound_value(k: f64, horizon: f64, c_sup: &[f64], grid: &GridSpec, p: usize) -> f64 {
    horizon * k * c_sup.iter().enumerate().map(|(j, c)| c * grid.step(j).powi(2 * p as i32)).sum::<f64>()
}

/// Measures the discretization error for every `n` (same on all axes),
/// fits `log2(error)` against `n` and derives `K`.
pub fn discretization_bound(problem: &TransportProblem, qubits: &[usize], horizon: f64) -> Result<DiscretizationReport> {
    if qubits.len() < 3 {
        return Err(Error::InvalidArgument("need at least three grid sizes".into()));
    }
    let d = problem.dims();
    let rows: Vec<(f64, f64, GridSpec)> = qubits
        .par_iter()
        .map(|&n| {
            let grid = GridSpec::new(&vec![n; d])?;
            let err = discretization_error(problem, &grid, horizon)?;
            let c = sup_norms(problem, &grid)?.c;
            let unit = discretization_bound_value(1.0, horizon, &c, &grid, problem.order);
            Ok((err, unit, grid))
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let xs: Vec<f64> = qubits.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).log2()).collect();
    let (slope, intercept) = fit_line(&xs, &ys);
    let k_estimate = rows.iter().map(|(e, u, _)| if *u > 0.0 { e / u } else { 0.0 }).fold(0.0, f64::max);
    let bound = rows.iter().map(|(_, u, _)| k_estimate * u).collect();
    Ok(DiscretizationReport { qubits: qubits.to_vec(), errors, slope, intercept, k_estimate, bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variable", content = "values", rename_all = "kebab-case")]
pub enum SweepVar {
    /// Qubits per axis (same on every axis).
    Qubits(Vec<usize>),
    Steps(Vec<usize>),
    /// Per-diagonal Walsh term budgets.
    WalshBudget(Vec<usize>),
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::Qubits(_) => "n",
            SweepVar::Steps(_) => "L",
            SweepVar::WalshBudget(_) => "walsh_budget",
        }
    }

    fn values(&self) -> &[usize] {
        match self {
            SweepVar::Qubits(v) | SweepVar::Steps(v) | SweepVar::WalshBudget(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WalshKind {
    #[default]
    Sparse,
    MWalsh,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub problem: TransportProblem,
    pub variable: SweepVar,
    pub qubits: Vec<usize>,
    pub steps: usize,
    pub variant: Variant,
    pub approx: DiagonalApprox,
    /// Kind of truncation used by a Walsh budget sweep.
    pub walsh_kind: WalshKind,
    /// `K` for the discretization bound column, when known.
    pub k_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub measured_error: f64,
    pub bound_thm1: Option<f64>,
    pub bound_thm2: f64,
    pub bound_thm3: f64,
    pub seconds: f64,
}

/// Runs every sweep point (in parallel, results in input order). The
/// measured error is the distance between the evolved state and the
/// problem's oracle at `T`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let values = spec.variable.values();
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty sweep range".into()));
    }
    let scheme = fd_coefficients(spec.problem.order)?;
    values
        .par_iter()
        .map(|&v| {
            let started = Instant::now();
            let (qubits, steps, approx) = match &spec.variable {
                SweepVar::Qubits(_) => (vec![v; spec.problem.dims()], spec.steps, spec.approx),
                SweepVar::Steps(_) => (spec.qubits.clone(), v, spec.approx),
                SweepVar::WalshBudget(_) => (
                    spec.qubits.clone(),
                    spec.steps,
                    match spec.walsh_kind {
                        WalshKind::Sparse => DiagonalApprox::Sparse(v),
                        WalshKind::MWalsh => DiagonalApprox::MWalsh(v),
                    },
                ),
            };
            let grid = GridSpec::new(&qubits)?;
            let reference = oracle_state(&spec.problem, &grid, spec.problem.horizon)?;
            let f0 = crate::prep::exact_load(&spec.problem.initial_samples(&grid)?, &grid)?;
            let plan = StepPlan::new(&spec.problem, &grid, steps, spec.variant, approx)?;
            let out = evolve(&f0, &plan, &Record::None)?.state;
            let measured_error = distance(&out.amps, &reference.amps);
            let norms = sup_norms(&spec.problem, &grid)?;
            let thm2 = operator_norm_bound(&norms, &scheme, &grid, spec.problem.horizon, steps, spec.variant).value;
            let ratios = derivative_ratios(&f0, &scheme)?;
            let thm3 = vector_norm_bound(&norms, &ratios, spec.problem.horizon, steps, spec.variant).value;
            let thm1 = spec
                .k_estimate
                .map(|k| discretization_bound_value(k, spec.problem.horizon, &norms.c, &grid, spec.problem.order));
            Ok(SweepRow {
                value: v,
                measured_error,
                bound_thm1: thm1,
                bound_thm2: thm2,
                bound_thm3: thm3,
                seconds: started.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Expression for `f0` in the problem, if analytic.
pub fn initial_expr(problem: &TransportProblem) -> Option<&Expr> {
    match &problem.initial {
        InitialCondition::Expr(e) => Some(e),
        InitialCondition::Samples { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::problem::catalog;
    use crate::rng::random_state;
    use std::f64::consts::PI;

    #[test]
    fn line_fit() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x + 0.5).collect();
        let (s, b) = fit_line(&xs, &ys);
        assert!((s + 2.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
    }

    /// RK4 on the characteristic ODE `x' = v − ½`, `v' = κ(x − ½ − ct)`
    /// run backwards from `(x, v, t)`.
    fn foot_by_rk4(x: f64, v: f64, t: f64, k: f64, c: f64) -> (f64, f64) {
        let steps = 4000;
        let h = -t / steps as f64;
        let f = |s: f64, y: [f64; 2]| [y[1] - 0.5, k * (y[0] - 0.5 - c * s)];
        let (mut s, mut y) = (t, [x, v]);
        for _ in 0..steps {
            let k1 = f(s, y);
            let k2 = f(s + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f(s + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            s += h;
        }
        (y[0], y[1])
    }

    #[test]
    fn characteristic_foot_matches_ode() {
        for &(x, v, t, k, c) in &[(0.3, 0.7, 0.025, -1.0, 1.6), (0.55, 0.41, 1.3, -1.0, 0.0), (0.2, 0.9, 0.8, -2.5, 0.4)] {
            let a = characteristic_foot(x, v, t, k, c);
            let b = foot_by_rk4(x, v, t, k, c);
            assert!((a.0 - b.0).abs() < 1e-11 && (a.1 - b.1).abs() < 1e-11, "{a:?} vs {b:?}");
        }
        let (x0, v0) = characteristic_foot(0.31, 0.77, 0.0, -1.0, 1.6);
        assert!((x0 - 0.31).abs() < 1e-15 && (v0 - 0.77).abs() < 1e-15);
        let (x0, v0) = characteristic_foot(0.31, 0.77, 2.0 * PI, -1.0, 0.0);
        assert!((x0 - 0.31).abs() < 1e-14 && (v0 - 0.77).abs() < 1e-14);
    }

    #[test]
    fn shift_examples() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let f = [0.5, r, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(shift_solution_1d(&f, 1.0, 0.0).unwrap(), f.to_vec());
        let s = shift_solution_1d(&f, 1.0, 0.5).unwrap();
        assert_eq!(s, vec![0.0, 0.0, 0.0, 0.0, 0.5, r, 0.5, 0.0]);
        assert_eq!(shift_solution_1d(&f, 1.0, 1.0).unwrap(), f.to_vec());
        assert!(shift_solution_1d(&f, 1.0, 0.1).is_err());
    }

    #[test]
    fn lotka_volterra_rk4() {
        let p = LotkaParams { alpha: 0.3, beta: 0.0, gamma: 0.0, delta: 0.2 };
        let tr = rk4_lotka_volterra(p, (1.5, 2.0), 2.0, 200).unwrap();
        assert!((tr.x1.last().unwrap() - 1.5 * (0.6f64).exp()).abs() < 1e-9);
        assert!((tr.x2.last().unwrap() - 2.0 * (-0.4f64).exp()).abs() < 1e-9);

        let p = LotkaParams::reference();
        let fixed = (p.delta / p.gamma, p.alpha / p.beta);
        let tr = rk4_lotka_volterra(p, fixed, 5.0, 100).unwrap();
        assert!(tr.x1.iter().all(|v| (v - fixed.0).abs() < 1e-14));

        let tr = rk4_lotka_volterra(p, ((-0.7f64).exp(), (-0.3f64).exp()), 5.0, 5000).unwrap();
        let h0 = lotka_hamiltonian(&p, tr.q[0], tr.p[0]);
        let drift = tr.q.iter().zip(&tr.p).map(|(q, pp)| (lotka_hamiltonian(&p, *q, *pp) - h0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-12, "{drift}");

        // order 4: halving the step divides the error by ~16
        let fine = rk4_lotka_volterra(p, (0.5, 0.7), 5.0, 6400).unwrap();
        let e = |steps: usize| {
            let tr = rk4_lotka_volterra(p, (0.5, 0.7), 5.0, steps).unwrap();
            (tr.x1.last().unwrap() - fine.x1.last().unwrap()).abs()
        };
        let ratio = e(50) / e(100);
        assert!((12.0..20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn liouville_velocity_matches_ode() {
        let p = LotkaParams::reference();
        let prob = liouville_problem_lotka(p, (0.7, 0.3), 0.02, 2, 1.0).unwrap();
        assert!(prob.constraint_checked());
        let (q, pp) = (0.63, 0.21);
        let cq = prob.coefficients[0].eval(&[q, pp], 0.0).unwrap();
        let cp = prob.coefficients[1].eval(&[q, pp], 0.0).unwrap();
        let (x1, x2) = ((-q).exp(), (-pp).exp());
        let (d1, d2) = lv_rhs(&p, x1, x2);
        // q = −ln x1 ⇒ dq/dt = −x1'/x1
        assert!((cq + d1 / x1).abs() < 1e-14 && (cp + d2 / x2).abs() < 1e-14);
    }

    #[test]
    fn bessel_values() {
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_j_sequence(50.0, 80);
        assert!((j[0] - 0.055_812_327_669_251_6).abs() < 1e-14);
        let j = bessel_j_sequence(3000.0, 3200);
        assert!(j.iter().all(|v| v.is_finite()));
        // Σ J_k² (with weights) = 1
        let s: f64 = j.iter().enumerate().map(|(k, v)| if k == 0 { v * v } else { 2.0 * v * v }).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_propagator_matches_trotter_for_constant_velocity() {
        let g = build_grid(&[5, 4]).unwrap();
        let mut prob = TransportProblem::from_strings("t", &["0.8", "-0.3"], "1", 3, 0.7).unwrap();
        prob.verify().unwrap();
        let psi = random_state(&g, 6);
        let re: Vec<f64> = psi.amps.iter().map(|a| a.re).collect();
        let cheb = semi_discrete_propagate(&prob, &g, &re, 0.7).unwrap();
        let plan = StepPlan::new(&prob, &g, 1, Variant::G, DiagonalApprox::Exact).unwrap();
        let f = StateVector::from_real(&g, &re).unwrap();
        let out = evolve(&f, &plan, &Record::None).unwrap().state;
        for (a, b) in out.amps.iter().zip(&cheb) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn chebyshev_propagator_matches_fine_trotter() {
        let g = build_grid(&[4, 4]).unwrap();
        let mut prob = TransportProblem::from_strings("t", &["x2 - 0.5", "-(x1 - 0.5)"], "1", 2, 0.3).unwrap();
        prob.verify().unwrap();
        let re: Vec<f64> = random_state(&g, 2).amps.iter().map(|a| a.re).collect();
        let cheb = semi_discrete_propagate(&prob, &g, &re, 0.3).unwrap();
        let f = StateVector::from_real(&g, &re).unwrap();
        let err = |l: usize| {
            let plan = StepPlan::new(&prob, &g, l, Variant::G, DiagonalApprox::Exact).unwrap();
            let out = evolve(&f, &plan, &Record::None).unwrap().state;
            out.amps.iter().zip(&cheb).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        };
        let (e1, e2) = (err(200), err(400));
        assert!((e1 / e2 - 2.0).abs() < 0.1, "{e1} {e2}");
    }

    #[test]
    fn zero_velocity_has_zero_discretization_error() {
        let mut p = TransportProblem::from_strings("t", &["0", "0"], "exp(-((x1-0.5)^2+(x2-0.5)^2)/0.02)", 1, 1.0)
            .unwrap()
            .with_oracle(Oracle::Shift { velocity: vec![0.0, 0.0] });
        p.verify().unwrap();
        let g = build_grid(&[4, 4]).unwrap();
        assert_eq!(discretization_error(&p, &g, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn bounds_structure() {
        // d = 1 ⇒ no cross terms
        let mut p = TransportProblem::from_strings("t", &["1"], "1", 2, 1.0).unwrap();
        p.verify().unwrap();
        let g = build_grid(&[5]).unwrap();
        let scheme = fd_coefficients(2).unwrap();
        let n = sup_norms(&p, &g).unwrap();
        let ob = operator_norm_bound(&n, &scheme, &g, 1.0, 10, Variant::G);
        assert_eq!(ob.alpha_g, 0.0);
        let vb = vector_norm_bound(&n, &[1.0], 1.0, 10, Variant::S);
        assert_eq!((vb.alpha_g, vb.alpha_s), (0.0, 0.0));

        let e = catalog("boltzmann2d-static").unwrap();
        let n = sup_norms(&e.problem, &build_grid(&[6, 6]).unwrap()).unwrap();
        let ob = operator_norm_bound(&n, &scheme, &build_grid(&[6, 6]).unwrap(), 1.0, 10, Variant::S);
        assert_eq!(ob.alpha_s, ob.alpha_g);
        assert_eq!(ob.beta_s, 0.0);
        assert!((n.c[0] - 0.5).abs() < 1e-12 && (n.dx_c[1][0] - 1.0).abs() < 1e-6 && n.dx_c[0][0] == 0.0);

        // operator bound grows ≈ 4 per qubit, vector bound stays flat
        let e = catalog("boltzmann2d").unwrap();
        let s10 = fd_coefficients(10).unwrap();
        let mut ops = Vec::new();
        let mut vecs = Vec::new();
        for q in [6, 10] {
            let g = build_grid(&[q, q]).unwrap();
            let n = sup_norms(&e.problem, &g).unwrap();
            ops.push(operator_norm_bound(&n, &s10, &g, 0.025, 128, Variant::G).value);
            let f0 = crate::prep::exact_load(&e.problem.initial_samples(&g).unwrap(), &g).unwrap();
            let r = derivative_ratios(&f0, &s10).unwrap();
            vecs.push(vector_norm_bound(&n, &r, 0.025, 128, Variant::G).value);
        }
        let growth = ops[1] / ops[0];
        assert!((128.0..=512.0).contains(&growth), "{growth}");
        assert!((vecs[1] / vecs[0] - 1.0).abs() < 0.05, "{vecs:?}");
        assert!(vecs[0] < ops[0]);
    }

    #[test]
    fn oracle_state_at_time_zero_is_the_encoding() {
        let e = catalog("boltzmann2d").unwrap();
        let g = build_grid(&[5, 5]).unwrap();
        let o = oracle_state(&e.problem, &g, 0.0).unwrap();
        let f = crate::prep::exact_load(&e.problem.initial_samples(&g).unwrap(), &g).unwrap();
        assert!(distance(&o.amps, &f.amps) < 1e-15);
        let lv = catalog("lotka-volterra").unwrap();
        assert!(matches!(oracle_state(&lv.problem, &g, 0.0), Err(Error::NoOracle(_))));
    }

    #[test]
    fn density_means_of_gaussian() {
        let g = build_grid(&[7, 7]).unwrap();
        let e = gaussian_expr(&[0.7, 0.3], 0.02);
        let s = crate::grid::encode_function(|x| e.eval(x, 0.0).unwrap(), &g, true).unwrap();
        let m = density_means(&s);
        assert!((m[0] - 0.7).abs() < 1e-6 && (m[1] - 0.3).abs() < 1e-6, "{m:?}");
    }
}
