//! Transport problems `∂t f + Σ_j c_j(x, t) ∂_{x_j} f = 0` on the periodic
//! unit cube, the divergence constraint `∂_{x_j} c_j = 0`, and the built-in
//! catalog.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::expr::{parse_expr, Expr};
use crate::grid::GridSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Expr(Expr),
    /// Grid samples; only usable on a grid with exactly these widths.
    Samples { qubits: Vec<usize>, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LotkaParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl LotkaParams {
    /// `α = e^{−1}, β = e^{−1/2}, γ = e^{1/3}, δ = e^{−1/6}`.
    pub fn reference() -> Self {
        Self { alpha: (-1.0f64).exp(), beta: (-0.5f64).exp(), gamma: (1.0f64 / 3.0).exp(), delta: (-1.0f64 / 6.0).exp() }
    }
}

/// Independent reference solution attached to a problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Oracle {
    /// Rotating frame solution of `∂t f + (v−½)∂x f + κ(x−½−ct)∂v f = 0`
    /// with `κ = qE0/m < 0`.
    Characteristics2d { qe0_over_m: f64, c: f64 },
    /// Constant velocity: `f(x, t) = f0(x − v t)`.
    Shift { velocity: Vec<f64> },
    /// Trajectory oracle for the phase-space moments of a Liouville problem.
    LotkaVolterra { params: LotkaParams, start: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CenterConvention {
    /// Gaussian centers at `0.5 + μ_i`.
    #[default]
    Centered,
    /// Gaussian centers at `μ_i`.
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    pub label: String,
    pub coefficients: Vec<Expr>,
    pub initial: InitialCondition,
    pub order: usize,
    pub horizon: f64,
    pub oracle: Option<Oracle>,
    constraint_checked: bool,
}

impl TransportProblem {
    pub fn new(
        label: impl Into<String>,
        coefficients: Vec<Expr>,
        initial: InitialCondition,
        order: usize,
        horizon: f64,
    ) -> Result<Self> {
        let d = coefficients.len();
        if d == 0 {
            return Err(Error::InvalidArgument("at least one coefficient is required".into()));
        }
        if order == 0 {
            return Err(Error::InvalidArgument("order p must be at least 1".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        for (j, c) in coefficients.iter().enumerate() {
            if c.arity() > d {
                return Err(Error::InvalidArgument(format!("c{} uses x{} but d = {d}", j + 1, c.arity())));
            }
        }
        match &initial {
            InitialCondition::Expr(e) => {
                if e.arity() > d {
                    return Err(Error::InvalidArgument(format!("f0 uses x{} but d = {d}", e.arity())));
                }
                if e.uses_time() {
                    return Err(Error::InvalidArgument("f0 must not depend on t".into()));
                }
            }
            InitialCondition::Samples { qubits, values } => {
                if qubits.len() != d {
                    return Err(Error::InvalidArgument("sample grid dimension differs from d".into()));
                }
                let len = 1usize << qubits.iter().sum::<usize>();
                if values.len() != len {
                    return Err(Error::LengthMismatch { expected: len, found: values.len() });
                }
            }
        }
        Ok(Self { label: label.into(), coefficients, initial, order, horizon, oracle: None, constraint_checked: false })
    }

    /// Parses coefficient and initial-condition strings.
    pub fn from_strings(label: &str, coefficients: &[&str], initial: &str, order: usize, horizon: f64) -> Result<Self> {
        let cs = coefficients.iter().map(|c| parse_expr(c)).collect::<Result<Vec<_>>>()?;
        Self::new(label, cs, InitialCondition::Expr(parse_expr(initial)?), order, horizon)
    }

    pub fn with_oracle(mut self, oracle: Oracle) -> Self {
        self.oracle = Some(oracle);
        self
    }

    pub fn dims(&self) -> usize {
        self.coefficients.len()
    }

    pub fn constraint_checked(&self) -> bool {
        self.constraint_checked
    }

    pub fn is_time_dependent(&self) -> bool {
        self.coefficients.iter().any(Expr::uses_time)
    }

    /// True when every `c_j` is a constant, so the axis factors commute.
    pub fn is_position_independent(&self) -> bool {
        self.coefficients.iter().all(|c| (0..self.dims()).all(|j| !c.uses_var(j)))
    }

    /// Runs [`check_constraint`] with the default sampling and marks the
    /// problem as checked when it passes.
    pub fn verify(&mut self) -> Result<ConstraintReport> {
        let report = check_constraint(self, DEFAULT_CONSTRAINT_SAMPLES, DEFAULT_CONSTRAINT_TOL);
        if report.passed {
            self.constraint_checked = true;
            Ok(report)
        } else {
            Err(Error::Constraint(report.to_string()))
        }
    }

    /// `f0` at every node of `grid` (unnormalized).
    pub fn initial_samples(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if grid.dims() != self.dims() {
            return Err(Error::GridMismatch(format!("problem has d = {}, grid has {}", self.dims(), grid.dims())));
        }
        match &self.initial {
            InitialCondition::Expr(e) => {
                let mut x = vec![0.0; grid.dims()];
                (0..grid.len())
                    .map(|i| {
                        grid.position_into(i, &mut x);
                        e.eval(&x, 0.0)
                    })
                    .collect()
            }
            InitialCondition::Samples { qubits, values } => {
                if qubits.as_slice() != grid.qubits() {
                    return Err(Error::GridMismatch(format!(
                        "initial samples live on {qubits:?}, grid is {:?}",
                        grid.qubits()
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

pub const DEFAULT_CONSTRAINT_SAMPLES: usize = 256;
pub const DEFAULT_CONSTRAINT_TOL: f64 = 1e-8;
const CONSTRAINT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct AxisReport {
    pub axis: usize,
    /// Largest `|∂_{x_j} c_j|` found, or NaN when evaluation failed.
    pub worst: f64,
    pub point: Vec<f64>,
    pub time: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub passed: bool,
    pub tol: f64,
    pub samples: usize,
    pub axes: Vec<AxisReport>,
}

impl std::fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} samples, tol {:e})", if self.passed { "pass" } else { "fail" }, self.samples, self.tol)?;
        for a in &self.axes {
            match &a.error {
                Some(e) => write!(f, "; axis {}: {e}", a.axis + 1)?,
                None => write!(
                    f,
                    "; axis {}: max |dc{}/dx{}| = {:e} at x = {:?}, t = {}",
                    a.axis + 1,
                    a.axis + 1,
                    a.axis + 1,
                    a.worst,
                    a.point,
                    a.time
                )?,
            }
        }
        Ok(())
    }
}

/// Halton point `i` in base `b`.
fn radical_inverse(mut i: usize, b: usize) -> f64 {
    let mut inv = 1.0 / b as f64;
    let mut out = 0.0;
    let mut f = inv;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    inv = out;
    inv
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Estimates `∂_{x_j} c_j` by central differences at Halton points of
/// `[0,1]^d × [0,T]` and checks every estimate against `tol`. Evaluation
/// failures count as violations.
pub fn check_constraint(prob: &TransportProblem, samples: usize, tol: f64) -> ConstraintReport {
    let d = prob.dims();
    let samples = samples.max(1);
    let mut axes: Vec<AxisReport> = (0..d)
        .map(|axis| AxisReport { axis, worst: 0.0, point: vec![0.0; d], time: 0.0, error: None })
        .collect();
    let mut x = vec![0.0; d];
    for i in 1..=samples {
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = radical_inverse(i, PRIMES[k % PRIMES.len()]);
        }
        let t = prob.horizon * radical_inverse(i, PRIMES[d % PRIMES.len()]);
        for (axis, c) in prob.coefficients.iter().enumerate() {
            let rep = &mut axes[axis];
            if rep.error.is_some() {
                continue;
            }
            let mut probe = x.clone();
            let mut eval = |offset: f64| {
                probe[axis] = x[axis] + offset;
                c.eval(&probe, t)
            };
            match (eval(CONSTRAINT_STEP), eval(-CONSTRAINT_STEP), c.eval(&x, t)) {
                (Ok(hi), Ok(lo), Ok(_)) => {
                    let est = ((hi - lo) / (2.0 * CONSTRAINT_STEP)).abs();
                    if est > rep.worst {
                        rep.worst = est;
                        rep.point = x.clone();
                        rep.time = t;
                    }
                }
                (Err(e), ..) | (_, Err(e), _) | (.., Err(e)) => {
                    rep.worst = f64::NAN;
                    rep.point = x.clone();
                    rep.time = t;
                    rep.error = Some(format!("evaluation failed at x = {x:?}, t = {t}: {e}"));
                }
            }
        }
    }
    let passed = axes.iter().all(|a| a.error.is_none() && a.worst <= tol);
    ConstraintReport { passed, tol, samples, axes }
}

/// Built-in problem with suggested run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub problem: TransportProblem,
    pub qubits: Vec<usize>,
    pub steps: usize,
    /// Times at which the state is recorded, including `T`.
    pub snapshots: Vec<f64>,
}

pub const CATALOG_NAMES: [&str; 5] =
    ["boltzmann2d", "boltzmann2d-static", "boltzmann2d-walsh", "convection1d", "lotka-volterra"];

/// Normalization-free Gaussian `exp(−Σ(x_i − m_i)²/(2σ²))` as an expression.
pub fn gaussian_expr(centers: &[f64], sigma: f64) -> Expr {
    let terms: Vec<String> =
        centers.iter().enumerate().map(|(i, m)| format!("(x{} - {m:?})^2", i + 1)).collect();
    let text = format!("exp(-({}) / {:?})", terms.join(" + "), 2.0 * sigma * sigma);
    parse_expr(&text).expect("generated Gaussian parses")
}

fn boltzmann_centers(conv: CenterConvention) -> [f64; 2] {
    let mu = [-0.1, 0.1];
    match conv {
        CenterConvention::Centered => [0.5 + mu[0], 0.5 + mu[1]],
        CenterConvention::Absolute => mu,
    }
}

pub fn catalog(name: &str) -> Result<CatalogEntry> {
    catalog_with(name, CenterConvention::Centered)
}

pub fn catalog_with(name: &str, centers: CenterConvention) -> Result<CatalogEntry> {
    let sigma_wide = 1.0 / (10.0 * 2f64.sqrt());
    let mut entry = match name {
        "boltzmann2d" => {
            let p = TransportProblem::new(
                name,
                vec![parse_expr("x2 - 0.5")?, parse_expr("-(1)*(x1 - 0.5 - 1.6*t)")?],
                InitialCondition::Expr(gaussian_expr(&boltzmann_centers(centers), sigma_wide)),
                10,
                0.025,
            )?
            .with_oracle(Oracle::Characteristics2d { qe0_over_m: -1.0, c: 1.6 });
            CatalogEntry {
                name: "boltzmann2d",
                summary: "2D collisionless Boltzmann, time-dependent field E0(x - ct)",
                problem: p,
                qubits: vec![10, 10],
                steps: 128,
                snapshots: vec![0.025],
            }
        }
        "boltzmann2d-static" => {
            let p = TransportProblem::new(
                name,
                vec![parse_expr("x2 - 0.5")?, parse_expr("-(1)*(x1 - 0.5)")?],
                InitialCondition::Expr(gaussian_expr(&boltzmann_centers(centers), sigma_wide)),
                2,
                2.0 * PI,
            )?
            .with_oracle(Oracle::Characteristics2d { qe0_over_m: -1.0, c: 0.0 });
            CatalogEntry {
                name: "boltzmann2d-static",
                summary: "2D collisionless Boltzmann, static field, one full rotation",
                problem: p,
                qubits: vec![7, 7],
                steps: 512,
                snapshots: vec![2.0 * PI],
            }
        }
        "boltzmann2d-walsh" => {
            let p = TransportProblem::new(
                name,
                vec![parse_expr("x2 - 0.5")?, parse_expr("-(1)*(x1 - 0.5)")?],
                InitialCondition::Expr(gaussian_expr(&boltzmann_centers(centers), 0.05)),
                10,
                0.5,
            )?
            .with_oracle(Oracle::Characteristics2d { qe0_over_m: -1.0, c: 0.0 });
            CatalogEntry {
                name: "boltzmann2d-walsh",
                summary: "2D collisionless Boltzmann on 10 qubits for Walsh-truncated diagonals",
                problem: p,
                qubits: vec![5, 5],
                steps: 128,
                snapshots: vec![0.5],
            }
        }
        "convection1d" => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let p = TransportProblem::new(
                name,
                vec![parse_expr("1")?],
                InitialCondition::Samples { qubits: vec![3], values: vec![0.5, r, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0] },
                10,
                0.5,
            )?
            .with_oracle(Oracle::Shift { velocity: vec![1.0] });
            CatalogEntry {
                name: "convection1d",
                summary: "1D constant-velocity convection of a three-node pulse",
                problem: p,
                qubits: vec![3],
                steps: 2,
                snapshots: vec![0.25, 0.5],
            }
        }
        "lotka-volterra" => {
            let params = LotkaParams::reference();
            let (q0, p0) = (0.7, 0.3);
            let p = crate::reference::liouville_problem_lotka(params, (q0, p0), 0.02, 10, 5.0)?;
            CatalogEntry {
                name: "lotka-volterra",
                summary: "Liouville equation of the Lotka-Volterra system in (q, p) = (-ln x1, -ln x2)",
                problem: p,
                qubits: vec![9, 9],
                steps: 5000,
                snapshots: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown catalog problem `{other}` (known: {})",
                CATALOG_NAMES.join(", ")
            )))
        }
    };
    entry.problem.verify()?;
    Ok(entry)
}
