//! First-order product formulas over the `d` axes.
//!
//! One step applies, for `j = 1..d` in increasing order,
//! `QFT_j† · exp(−i C_{j,α}(X, t) d_j(K_j)) · QFT_j`, where `C_{j,s} =
//! h c_j(X, t+h)` and `C_{j,g} = ∫_t^{t+h} c_j(X, s) ds`. Because
//! `∂_{x_j} c_j = 0`, `C_j` is evaluated on the nodes of the other axes only
//! and broadcast along axis `j`, and the phase is diagonal in the mixed
//! basis where register `j` holds the Fourier index.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::qft::{multiply_in_place, qft_in_place};
use crate::expr::Expr;
use crate::fd::{derivative_eigenvalues, fd_coefficients, FdScheme};
use crate::grid::{GridSpec, StateVector};
use crate::problem::TransportProblem;
use crate::circuit::{qft_cost, walsh_circuit_metrics, GateMetrics};
use crate::walsh::{balanced_budgets, full_walsh_transform, multidim_walsh_series, sparse_walsh_series, WalshSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Right-endpoint coefficient `h c_j(t+h)`.
    S,
    /// Integrated coefficient, 2-node Gauss–Legendre.
    #[default]
    G,
}

/// How each step's diagonal phase is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "terms", rename_all = "lowercase")]
pub enum DiagonalApprox {
    #[default]
    Exact,
    /// Tensor M-Walsh series with `terms` (rounded up to a power of two)
    /// split over the axes by [`balanced_budgets`].
    MWalsh(usize),
    /// The `terms` largest Walsh coefficients.
    Sparse(usize),
}

const GL_NODE: f64 = 0.288_675_134_594_812_9; // 1/(2√3)

/// `h c(X, t+h)` (variant s) or the Gauss–Legendre estimate of
/// `∫_t^{t+h} c(X, s) ds` (variant g) for one point.
fn coefficient_integral(c: &Expr, x: &[f64], t: f64, h: f64, variant: Variant) -> Result<f64> {
    match variant {
        Variant::S => Ok(h * c.eval(x, t + h)?),
        Variant::G => {
            let mid = t + 0.5 * h;
            let a = c.eval(x, mid - GL_NODE * h)?;
            let b = c.eval(x, mid + GL_NODE * h)?;
            Ok(0.5 * h * (a + b))
        }
    }
}

/// `C_{j,α}(X, t)` at every node of `grid` (flat order). The coefficient is
/// evaluated once per node of the other axes and broadcast along `axis`.
pub fn step_phase(
    problem: &TransportProblem,
    axis: usize,
    t: f64,
    h: f64,
    variant: Variant,
    grid: &GridSpec,
) -> Result<Vec<f64>> {
    if axis >= problem.dims() || grid.dims() != problem.dims() {
        return Err(Error::GridMismatch(format!("axis {axis} on a {}-axis grid", grid.dims())));
    }
    let c = &problem.coefficients[axis];
    let n = grid.points(axis);
    let stride = grid.stride(axis);
    let reduced = grid.len() / n;
    let mut x = vec![0.0; grid.dims()];
    let mut red = Vec::with_capacity(reduced);
    for r in 0..reduced {
        // flat index of reduced node r with node_axis = 0
        let i = (r / stride) * stride * n + r % stride;
        grid.position_into(i, &mut x);
        red.push(coefficient_integral(c, &x, t, h, variant)?);
    }
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        out.push(red[(i / (stride * n)) * stride + i % stride]);
    }
    Ok(out)
}

/// Precomputed schedule for `L` steps of size `h = T/L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisGates {
    pub walsh_terms: usize,
    pub diagonal: GateMetrics,
    /// Forward plus inverse transform, by the textbook count.
    pub qft_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepGates {
    pub axes: Vec<AxisGates>,
    pub rz_count: usize,
    pub cnot_count: usize,
    pub size: usize,
    /// Depth with the axis factors run one after another; each transform is
    /// counted at its size.
    pub sequential_depth: usize,
    /// Depth when the axis factors can run side by side.
    pub parallel_depth: usize,
}

#[derive(Debug, Clone)]
pub struct StepPlan {
    pub variant: Variant,
    pub steps: usize,
    pub h: f64,
    pub horizon: f64,
    pub approx: DiagonalApprox,
    pub scheme: FdScheme,
    pub grid: GridSpec,
    problem: TransportProblem,
    eigenvalues: Vec<Vec<f64>>,
    /// Step factors of time-independent axes.
    cached: Vec<Option<Vec<Complex64>>>,
}

impl StepPlan {
    /// Plan for `problem.horizon` in `steps` steps.
    pub fn new(
        problem: &TransportProblem,
        grid: &GridSpec,
        steps: usize,
        variant: Variant,
        approx: DiagonalApprox,
    ) -> Result<Self> {
        Self::with_horizon(problem, grid, problem.horizon, steps, variant, approx)
    }

    pub fn with_horizon(
        problem: &TransportProblem,
        grid: &GridSpec,
        horizon: f64,
        steps: usize,
        variant: Variant,
        approx: DiagonalApprox,
    ) -> Result<Self> {
        if !problem.constraint_checked() {
            return Err(Error::Constraint(format!("problem `{}` has not passed the constraint check", problem.label)));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("step count L must be at least 1".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        if grid.dims() != problem.dims() {
            return Err(Error::GridMismatch(format!("problem has d = {}, grid has {}", problem.dims(), grid.dims())));
        }
        match approx {
            DiagonalApprox::MWalsh(k) | DiagonalApprox::Sparse(k) if k == 0 || k > grid.len() => {
                return Err(Error::InvalidArgument(format!("Walsh budget must be in 1..={}, got {k}", grid.len())));
            }
            _ => {}
        }
        let scheme = fd_coefficients(problem.order)?;
        let eigenvalues = grid.qubits().iter().map(|&n| derivative_eigenvalues(&scheme, n)).collect();
        let mut plan = Self {
            variant,
            steps,
            h: horizon / steps as f64,
            horizon,
            approx,
            scheme,
            grid: grid.clone(),
            problem: problem.clone(),
            eigenvalues,
            cached: vec![None; grid.dims()],
        };
        for axis in 0..grid.dims() {
            if !problem.coefficients[axis].uses_time() {
                plan.cached[axis] = Some(plan.factors(axis, 0.0)?);
            }
        }
        Ok(plan)
    }

    pub fn problem(&self) -> &TransportProblem {
        &self.problem
    }

    /// Phase `−C_{j,α}(X, t) d_j(K_j)` of axis `j` in the mixed basis,
    /// after the configured Walsh truncation.
    pub fn diagonal_phase(&self, axis: usize, t: f64) -> Result<Vec<f64>> {
        let phase = self.exact_phase(axis, t)?;
        match self.approx {
            DiagonalApprox::Exact => Ok(phase),
            DiagonalApprox::Sparse(k) => sparse_walsh_series(&phase, &self.grid, k)?.evaluate_on_grid(&self.grid),
            DiagonalApprox::MWalsh(k) => {
                let budgets = balanced_budgets(k, &self.grid);
                multidim_walsh_series(&phase, &self.grid, &budgets, None)?.evaluate_on_grid(&self.grid)
            }
        }
    }

    fn exact_phase(&self, axis: usize, t: f64) -> Result<Vec<f64>> {
        let c = step_phase(&self.problem, axis, t, self.h, self.variant, &self.grid)?;
        let n = self.grid.points(axis);
        let stride = self.grid.stride(axis);
        let d = &self.eigenvalues[axis];
        Ok(c.iter().enumerate().map(|(i, ci)| -ci * d[(i / stride) % n]).collect())
    }

    /// Walsh series realizing the diagonal of axis `j`. In exact mode every
    /// coefficient above `1e-14` of the largest is kept.
    pub fn diagonal_series(&self, axis: usize, t: f64) -> Result<WalshSeries> {
        let phase = self.exact_phase(axis, t)?;
        match self.approx {
            DiagonalApprox::Exact => {
                let coeffs = full_walsh_transform(&phase, &self.grid)?;
                let cut = 1e-14 * coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
                let mut series = WalshSeries::new(self.grid.qubits().to_vec());
                for (idx, a) in coeffs.into_iter().enumerate() {
                    if a.abs() > cut {
                        series.terms.insert(self.grid.nodes_of(idx), a);
                    }
                }
                Ok(series)
            }
            DiagonalApprox::Sparse(k) => sparse_walsh_series(&phase, &self.grid, k),
            DiagonalApprox::MWalsh(k) => {
                multidim_walsh_series(&phase, &self.grid, &balanced_budgets(k, &self.grid), None)
            }
        }
    }

    /// Gate counts of one step at time `t`.
    pub fn step_gates(&self, t: f64) -> Result<StepGates> {
        let mut axes = Vec::with_capacity(self.grid.dims());
        for axis in 0..self.grid.dims() {
            let diagonal = walsh_circuit_metrics(&self.diagonal_series(axis, t)?);
            axes.push(AxisGates { walsh_terms: diagonal.rz_count, diagonal, qft_size: 2 * qft_cost(self.grid.qubits()[axis]) });
        }
        let size = axes.iter().map(|a| a.diagonal.size + a.qft_size).sum();
        let sequential_depth = axes.iter().map(|a| a.diagonal.depth + a.qft_size).sum();
        // Axis factors commute when no coefficient depends on position, and
        // act on disjoint registers once the diagonals do too.
        let parallel_depth = if self.problem.is_position_independent() {
            axes.iter().map(|a| a.diagonal.depth + a.qft_size).max().unwrap_or(0)
        } else {
            sequential_depth
        };
        Ok(StepGates {
            rz_count: axes.iter().map(|a| a.diagonal.rz_count).sum(),
            cnot_count: axes.iter().map(|a| a.diagonal.cnot_count).sum(),
            size,
            sequential_depth,
            parallel_depth,
            axes,
        })
    }

    fn factors(&self, axis: usize, t: f64) -> Result<Vec<Complex64>> {
        Ok(self.diagonal_phase(axis, t)?.into_iter().map(|p| Complex64::from_polar(1.0, p)).collect())
    }

    /// One step from `t` to `t + h`, in place.
    pub fn step_in_place(&self, amps: &mut [Complex64], t: f64) -> Result<()> {
        if amps.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), found: amps.len() });
        }
        for axis in 0..self.grid.dims() {
            qft_in_place(amps, &self.grid, axis, false);
            match &self.cached[axis] {
                Some(f) => multiply_in_place(amps, f),
                None => multiply_in_place(amps, &self.factors(axis, t)?),
            }
            qft_in_place(amps, &self.grid, axis, true);
        }
        Ok(())
    }
}

pub fn trotter_step(state: &StateVector, t: f64, plan: &StepPlan) -> Result<StateVector> {
    if state.grid != plan.grid {
        return Err(Error::GridMismatch(format!("state {:?} vs plan {:?}", state.grid.qubits(), plan.grid.qubits())));
    }
    let mut out = state.clone();
    plan.step_in_place(&mut out.amps, t)?;
    Ok(out)
}

/// Which intermediate states [`evolve`] keeps.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Record {
    #[default]
    None,
    /// After every `k`-th step.
    Every(usize),
    /// At the steps nearest to these times.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub state: StateVector,
    /// `(t, state)` copies in increasing time.
    pub snapshots: Vec<(f64, StateVector)>,
}

pub fn evolve(state0: &StateVector, plan: &StepPlan, record: &Record) -> Result<Trajectory> {
    evolve_with(state0, plan, record, |_, _| Ok(()))
}

/// [`evolve`] with a callback after every step, receiving the step number
/// (1-based) and the current state.
pub fn evolve_with<F>(state0: &StateVector, plan: &StepPlan, record: &Record, mut on_step: F) -> Result<Trajectory>
where
    F: FnMut(usize, &StateVector) -> Result<()>,
{
    if state0.grid != plan.grid {
        return Err(Error::GridMismatch(format!("state {:?} vs plan {:?}", state0.grid.qubits(), plan.grid.qubits())));
    }
    let wanted: Vec<usize> = match record {
        Record::None => Vec::new(),
        Record::Every(k) => {
            let k = (*k).max(1);
            (1..=plan.steps).filter(|l| l % k == 0).collect()
        }
        Record::Times(ts) => {
            let mut v: Vec<usize> = ts
                .iter()
                .map(|t| ((t / plan.h).round().max(0.0) as usize).min(plan.steps))
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        }
    };
    let mut state = state0.clone();
    let mut snapshots = Vec::with_capacity(wanted.len());
    if wanted.first() == Some(&0) {
        snapshots.push((0.0, state.clone()));
    }
    let mut next = wanted.iter().copied().filter(|&l| l > 0).peekable();
    for l in 1..=plan.steps {
        plan.step_in_place(&mut state.amps, (l - 1) as f64 * plan.h)?;
        on_step(l, &state)?;
        if next.peek() == Some(&l) {
            next.next();
            snapshots.push((l as f64 * plan.h, state.clone()));
        }
    }
    Ok(Trajectory { state, snapshots })
}
