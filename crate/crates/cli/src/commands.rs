//! The `simulate`, `sweep`, `gates` and `catalog` commands.

use std::path::Path;

use qtransport::circuit::{qft_cost, walsh_circuit_metrics, GateMetrics};
use qtransport::evolution::{evolve, DiagonalApprox, Record, StepPlan};
use qtransport::grid::{vector_error, GridSpec, StateVector};
use qtransport::measure::{measure, Observable};
use qtransport::prep::{exact_load, two_diagonal_prep, PrepMode};
use qtransport::problem::{catalog, Oracle, CATALOG_NAMES};
use qtransport::reference::{
    density_means, discretization_bound, oracle_state, rk4_lotka_volterra, run_sweep, SweepSpec, SweepVar,
};
use qtransport::walsh::sparse_walsh_series;

use crate::config::{PrepConfig, Resolved, RunConfig, SweepVariable};
use crate::output::{num, opt, sweep_svg, Artifacts, Table};
use crate::CliError;

/// Builds the problem, runs the constraint check and the grid guard.
fn prepare(config: &RunConfig) -> Result<(Resolved, GridSpec), CliError> {
    let mut r = config.resolve()?;
    r.problem.verify()?;
    let grid = GridSpec::new(&r.qubits)?;
    Ok((r, grid))
}

fn load_initial(r: &Resolved, grid: &GridSpec, table: &mut Table) -> Result<StateVector, CliError> {
    let samples = r.problem.initial_samples(grid)?;
    let exact = exact_load(&samples, grid)?;
    match r.config.prep {
        PrepConfig::Exact => {
            table.push(vec!["exact".into(), String::new(), String::new(), num(1.0), num(0.0)]);
            Ok(exact)
        }
        PrepConfig::TwoDiagonal { alpha, budget } => {
            let out = two_diagonal_prep(&samples, grid, alpha, budget, PrepMode::Exact)?;
            let infidelity = 1.0 - exact.inner(&out.conditioned_state)?.norm_sqr();
            table.push(vec![
                "two-diagonal".into(),
                num(alpha),
                budget.map(|b| b.to_string()).unwrap_or_default(),
                num(out.success_prob),
                num(infidelity),
            ]);
            Ok(out.conditioned_state)
        }
    }
}

fn default_observables(dims: usize) -> Vec<Observable> {
    (0..dims)
        .map(|j| {
            let mut k = vec![0; dims];
            k[j] = 1;
            Observable::DiagonalMoment(k)
        })
        .collect()
}

/// prep → evolve → measure, writing every table into `out`.
pub fn simulate(config: &RunConfig, out: &Path) -> Result<Artifacts, CliError> {
    let (r, grid) = prepare(config)?;
    let mut art = Artifacts::create(out)?;

    let mut prep = Table::new(&["mode", "alpha", "budget", "success_prob", "infidelity"]);
    let f0 = load_initial(&r, &grid, &mut prep)?;
    art.table("prep.csv", &prep)?;

    let plan = StepPlan::new(&r.problem, &grid, r.steps, r.config.variant, r.config.walsh)?;
    let mut times = vec![0.0];
    times.extend(r.snapshots.iter().copied());
    let traj = evolve(&f0, &plan, &Record::Times(times))?;
    let mut snaps = traj.snapshots;
    if snaps.first().map(|s| s.0) != Some(0.0) {
        snaps.insert(0, (0.0, f0.clone()));
    }

    let m = &r.config.measurement;
    let observables = if m.observables.is_empty() { default_observables(grid.dims()) } else { m.observables.clone() };
    let mut exp = Table::new(&["t", "observable", "protocol", "exact", "sampled", "stderr", "shots", "seed"]);
    for (si, (t, state)) in snaps.iter().enumerate() {
        for (oi, obs) in observables.iter().enumerate() {
            let seed = m.seed.wrapping_add((si * observables.len() + oi) as u64);
            let rep = measure(state, obs, m.protocol, m.shots, seed)?;
            exp.push(vec![
                num(*t),
                obs.to_string(),
                format!("{:?}", m.protocol).to_lowercase(),
                num(rep.exact_value),
                opt(rep.sampled_value),
                num(rep.stderr),
                rep.shots.to_string(),
                seed.to_string(),
            ]);
        }
    }
    art.table("expectations.csv", &exp)?;

    let axes: Vec<String> = (1..=grid.dims()).map(|j| format!("mean_x{j}")).collect();
    let mut header: Vec<&str> = vec!["t"];
    header.extend(axes.iter().map(String::as_str));
    let mut moments = Table::new(&header);
    for (t, state) in &snaps {
        let mut row = vec![num(*t)];
        row.extend(density_means(state).into_iter().map(num));
        moments.push(row);
    }

    match &r.problem.oracle {
        Some(Oracle::LotkaVolterra { params, start }) => {
            let rk_steps = (r.steps * 10).max(1000);
            let x0 = ((-start.0).exp(), (-start.1).exp());
            let rk = rk4_lotka_volterra(*params, x0, r.problem.horizon, rk_steps)?;
            let mut pops = Table::new(&["t", "x1_scheme", "x2_scheme", "x1_rk4", "x2_rk4", "rel_error_x1", "rel_error_x2"]);
            let mut rk_table = Table::new(&["t", "x1", "x2", "q", "p"]);
            for (t, state) in &snaps {
                let mean = density_means(state);
                let (a, b) = ((-mean[0]).exp(), (-mean[1]).exp());
                let (x1, x2) = rk.at(*t);
                pops.push(vec![num(*t), num(a), num(b), num(x1), num(x2), num((a - x1).abs() / x1), num((b - x2).abs() / x2)]);
                rk_table.push(vec![num(*t), num(x1), num(x2), num(-x1.ln()), num(-x2.ln())]);
            }
            art.table("populations.csv", &pops)?;
            art.table("rk4.csv", &rk_table)?;
        }
        Some(_) => {
            let mut err = Table::new(&["t", "error"]);
            for (t, state) in &snaps {
                match oracle_state(&r.problem, &grid, *t) {
                    Ok(exact) => err.push(vec![num(*t), num(vector_error(state, &exact)?)]),
                    Err(qtransport::Error::NoOracle(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            art.table("error.csv", &err)?;
        }
        None => {}
    }
    art.table("moments.csv", &moments)?;

    art.table("gates.csv", &gate_table(&r, &grid, &[r.config.walsh])?)?;

    if r.config.save_states {
        for (t, state) in &snaps {
            let mut s = Table::new(&["index", "re", "im"]);
            for (i, a) in state.amps.iter().enumerate() {
                s.push(vec![i.to_string(), num(a.re), num(a.im)]);
            }
            art.table(&format!("states/state_t{}.csv", num(*t)), &s)?;
        }
    }
    art.manifest("simulate", &r.config)?;
    Ok(art)
}

/// One row per axis and approximation, then per-step and whole-run totals.
fn gate_table(r: &Resolved, grid: &GridSpec, approxes: &[DiagonalApprox]) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "approx",
        "scope",
        "walsh_terms",
        "rz_count",
        "cnot_count",
        "size",
        "depth",
        "parallel_depth",
        "qft_size",
    ]);
    let label = |a: &DiagonalApprox| match a {
        DiagonalApprox::Exact => "exact".to_string(),
        DiagonalApprox::MWalsh(k) => format!("m-walsh:{k}"),
        DiagonalApprox::Sparse(k) => format!("sparse:{k}"),
    };
    for approx in approxes {
        let plan = StepPlan::new(&r.problem, grid, r.steps, r.config.variant, *approx)?;
        let step = plan.step_gates(0.0)?;
        for (j, a) in step.axes.iter().enumerate() {
            t.push(vec![
                label(approx),
                format!("diagonal_x{}", j + 1),
                a.walsh_terms.to_string(),
                a.diagonal.rz_count.to_string(),
                a.diagonal.cnot_count.to_string(),
                a.diagonal.size.to_string(),
                a.diagonal.depth.to_string(),
                String::new(),
                a.qft_size.to_string(),
            ]);
        }
        let qft: usize = step.axes.iter().map(|a| a.qft_size).sum();
        let terms: usize = step.axes.iter().map(|a| a.walsh_terms).sum();
        let l = r.steps;
        for (scope, k) in [("step", 1), ("total", l)] {
            t.push(vec![
                label(approx),
                scope.into(),
                (terms * k).to_string(),
                (step.rz_count * k).to_string(),
                (step.cnot_count * k).to_string(),
                (step.size * k).to_string(),
                (step.sequential_depth * k).to_string(),
                (step.parallel_depth * k).to_string(),
                (qft * k).to_string(),
            ]);
        }
    }
    if let PrepConfig::TwoDiagonal { alpha, budget } = r.config.prep {
        let samples = r.problem.initial_samples(grid)?;
        let f_max = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if f_max > 0.0 {
            let theta: Vec<f64> = samples.iter().map(|v| (v / (alpha * f_max)).clamp(-1.0, 1.0).asin()).collect();
            let series = sparse_walsh_series(&theta, grid, budget.unwrap_or(grid.len()))?;
            let diag = walsh_circuit_metrics(&series);
            // two controlled diagonals; a control adds no CNOTs to the count
            // of the uncontrolled stairs, only to each rotation
            let prep = GateMetrics {
                size: 2 * diag.size + grid.total_qubits() + 3,
                depth: 2 * diag.depth + 3,
                rz_count: 2 * diag.rz_count + 1,
                cnot_count: 2 * diag.cnot_count,
            };
            t.push(vec![
                "prep".into(),
                "two-diagonal".into(),
                series.len().to_string(),
                prep.rz_count.to_string(),
                prep.cnot_count.to_string(),
                prep.size.to_string(),
                prep.depth.to_string(),
                String::new(),
                "0".into(),
            ]);
        }
    }
    Ok(t)
}

pub fn gates(config: &RunConfig, out: &Path) -> Result<Artifacts, CliError> {
    let (r, grid) = prepare(config)?;
    let approxes = match &r.config.gates {
        Some(g) if !g.budgets.is_empty() => g.budgets.clone(),
        _ => vec![r.config.walsh],
    };
    let mut art = Artifacts::create(out)?;
    art.table("gates.csv", &gate_table(&r, &grid, &approxes)?)?;
    let mut qft = Table::new(&["axis", "qubits", "qft_cost"]);
    for (j, &n) in grid.qubits().iter().enumerate() {
        qft.push(vec![(j + 1).to_string(), n.to_string(), qft_cost(n).to_string()]);
    }
    art.table("qft.csv", &qft)?;
    art.manifest("gates", &r.config)?;
    Ok(art)
}

pub const SWEEP_COLUMNS: [&str; 7] =
    ["sweep_var", "value", "measured_error", "bound_thm1", "bound_thm2", "bound_thm3", "seconds"];

pub fn sweep(config: &RunConfig, out: &Path) -> Result<Artifacts, CliError> {
    let (r, _) = prepare(config)?;
    let s = r.config.sweep.clone().ok_or_else(|| CliError::Config("sweep needs a [sweep] table".into()))?;
    if s.values.is_empty() {
        return Err(CliError::Config("sweep values are empty".into()));
    }
    let max_qubits = match s.variable {
        SweepVariable::Qubits => s.values.iter().max().copied().unwrap_or(0) * r.problem.dims(),
        _ => r.qubits.iter().sum(),
    };
    GridSpec::new(&[max_qubits.max(1)]).map_err(CliError::Core)?;
    let k_estimate = match &s.fit_k {
        Some(ns) => Some(discretization_bound(&r.problem, ns, r.problem.horizon)?.k_estimate),
        None => None,
    };
    let spec = SweepSpec {
        problem: r.problem.clone(),
        variable: match s.variable {
            SweepVariable::Qubits => SweepVar::Qubits(s.values.clone()),
            SweepVariable::Steps => SweepVar::Steps(s.values.clone()),
            SweepVariable::WalshBudget => SweepVar::WalshBudget(s.values.clone()),
        },
        qubits: r.qubits.clone(),
        steps: r.steps,
        variant: r.config.variant,
        approx: r.config.walsh,
        walsh_kind: s.walsh_kind,
        k_estimate,
    };
    let rows = run_sweep(&spec)?;
    let mut t = Table::new(&SWEEP_COLUMNS);
    for row in &rows {
        t.push(vec![
            s.variable.name().into(),
            row.value.to_string(),
            num(row.measured_error),
            opt(row.bound_thm1),
            num(row.bound_thm2),
            num(row.bound_thm3),
            num(row.seconds),
        ]);
    }
    let mut art = Artifacts::create(out)?;
    art.table("sweep.csv", &t)?;
    art.write("sweep.svg", &sweep_svg(&t, 1, &[2, 3, 4, 5], &format!("{} sweep over {}", r.problem.label, s.variable.name())))?;
    art.manifest("sweep", &r.config)?;
    Ok(art)
}

/// `name<TAB>qubits<TAB>L<TAB>T<TAB>summary` per built-in problem.
pub fn catalog_listing() -> Result<String, CliError> {
    let mut out = String::new();
    for name in CATALOG_NAMES {
        let e = catalog(name)?;
        let q: Vec<String> = e.qubits.iter().map(|n| n.to_string()).collect();
        out += &format!("{name}\tqubits=[{}]\tL={}\tT={}\t{}\n", q.join(","), e.steps, e.problem.horizon, e.summary);
    }
    Ok(out)
}
