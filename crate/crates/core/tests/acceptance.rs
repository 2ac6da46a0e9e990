//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use qtransport::evolution::{evolve, step_phase, trotter_step, DiagonalApprox, Record, StepPlan, Variant};
use qtransport::fd::{apply_stencil, derivative_eigenvalues, fd_coefficients, FdScheme};
use qtransport::grid::{build_grid, inner, vector_error, GridSpec, StateVector};
use qtransport::measure::{expectation, measure, overlap_test, qae, swap_test, hadamard_test, Observable, Protocol, QaeMode};
use qtransport::prep::{closed_form_success, exact_load, two_diagonal_prep, PrepMode};
use qtransport::problem::{catalog, LotkaParams, TransportProblem};
use qtransport::reference::{
    density_means, discretization_bound, fit_line, oracle_state, rk4_lotka_volterra, run_sweep, SweepSpec, SweepVar,
    WalshKind,
};
use qtransport::rng::{random_state, seeded};
use qtransport::walsh::m_walsh_series;
use qtransport::{circuit::apply_qft, Complex64};
use rand::Rng;

type Outcome = Result<(bool, String), String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("convection regression", c1),
        ("expectation values", c2),
        ("discretization order", c3),
        ("Trotter vector-norm scaling", c4),
        ("Walsh synthesis", c5),
        ("Walsh certificate", c6),
        ("state preparation", c7),
        ("amplitude estimation", c8),
        ("Lotka-Volterra moments", c9),
        ("oracle equivalences", c10),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let started = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = started.elapsed().as_secs_f64();
        if !ok {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail} [{secs:.1}s]", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn within(started: Instant, limit: Duration) -> bool {
    started.elapsed() < limit
}

fn convection_final() -> Result<(StateVector, Vec<(f64, StateVector)>, TransportProblem), String> {
    let entry = catalog("convection1d").map_err(e)?;
    let grid = build_grid(&entry.qubits).map_err(e)?;
    let f0 = exact_load(&entry.problem.initial_samples(&grid).map_err(e)?, &grid).map_err(e)?;
    let plan = StepPlan::new(&entry.problem, &grid, entry.steps, Variant::G, DiagonalApprox::Exact).map_err(e)?;
    let tr = evolve(&f0, &plan, &Record::Times(entry.snapshots.clone())).map_err(e)?;
    Ok((tr.state, tr.snapshots, entry.problem))
}

fn c1() -> Outcome {
    let started = Instant::now();
    let (_, snaps, problem) = convection_final()?;
    let mut ok = true;
    let mut parts = Vec::new();
    for ((t, state), target) in snaps.iter().zip([3.6e-4, 7.2e-4]) {
        let exact = oracle_state(&problem, &state.grid, *t).map_err(e)?;
        let err = vector_error(state, &exact).map_err(e)?;
        ok &= (err / target - 1.0).abs() <= 0.10;
        parts.push(format!("t={t}: {err:.4e} (target {target:.1e})"));
    }
    ok &= snaps.len() == 2 && within(started, Duration::from_secs(1));
    Ok((ok, parts.join(", ")))
}

/// Exact mode measures the exact advected encoding at `t = 0.5`; sampled
/// mode runs the Hadamard test on the evolved state.
fn c2() -> Outcome {
    let (state, _, problem) = convection_final()?;
    let advected = oracle_state(&problem, &state.grid, 0.5).map_err(e)?;
    let targets = [0.0, 0.5, -1.0];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, want) in targets.iter().enumerate() {
        let obs = Observable::PauliZ(i);
        let exact = measure(&advected, &obs, Protocol::Hadamard, 0, 0).map_err(e)?.exact_value;
        let evolved = expectation(&state, &obs).map_err(e)?;
        let r = measure(&state, &obs, Protocol::Hadamard, 8192, 2024 + i as u64).map_err(e)?;
        let sampled = r.sampled_value.ok_or("no sampled value")?;
        ok &= (exact - want).abs() < 1e-10 && (sampled - want).abs() <= 3.0 * r.stderr;
        parts.push(format!("Z{i}: exact {exact:+.12}, evolved {evolved:+.6}, sampled {sampled:+.4}±{:.4}", r.stderr));
    }
    Ok((ok, parts.join("; ")))
}

fn c3() -> Outcome {
    let started = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in 1..=3 {
        let mut entry = catalog("boltzmann2d-static").map_err(e)?;
        entry.problem.order = p;
        let r = discretization_bound(&entry.problem, &[5, 6, 7, 8, 9], entry.problem.horizon).map_err(e)?;
        let target = -2.0 * p as f64;
        let good = ((r.slope - target) / target).abs() <= 0.15;
        ok &= good;
        parts.push(format!(
            "p={p}: slope {:.2} (want {target}±15%){} errors [{}]",
            r.slope,
            if good { "" } else { " MISS" },
            r.errors.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" ")
        ));
    }
    ok &= within(started, Duration::from_secs(120));
    Ok((ok, parts.join("; ")))
}

fn c4() -> Outcome {
    let started = Instant::now();
    let entry = catalog("boltzmann2d").map_err(e)?;
    let base = SweepSpec {
        problem: entry.problem.clone(),
        variable: SweepVar::Qubits(vec![6, 7, 8, 9, 10]),
        qubits: vec![10, 10],
        steps: 128,
        variant: Variant::G,
        approx: DiagonalApprox::Exact,
        walsh_kind: WalshKind::Sparse,
        k_estimate: None,
    };
    let by_n = run_sweep(&base).map_err(e)?;
    let errs: Vec<f64> = by_n.iter().map(|r| r.measured_error).collect();
    let spread = errs.iter().cloned().fold(0.0, f64::max) / errs.iter().cloned().fold(f64::INFINITY, f64::min);
    let growth = by_n[4].bound_thm2 / by_n[0].bound_thm2;
    let by_l = run_sweep(&SweepSpec { variable: SweepVar::Steps(vec![16, 32, 64, 128, 256, 512]), ..base }).map_err(e)?;
    let xs: Vec<f64> = by_l.iter().map(|r| (r.value as f64).log2()).collect();
    let ys: Vec<f64> = by_l.iter().map(|r| r.measured_error.log2()).collect();
    let (slope, _) = fit_line(&xs, &ys);
    let a = spread < 2.0;
    let b = (slope + 1.0).abs() <= 0.1;
    let c = (128.0..=512.0).contains(&growth);
    let ok = a && b && c && within(started, Duration::from_secs(600));
    Ok((ok, format!("(a) max/min over n=6..10 {spread:.4}; (b) slope in L {slope:.4}; (c) operator bound growth n 6->10 {growth:.1}")))
}

fn c5() -> Outcome {
    let entry = catalog("boltzmann2d-walsh").map_err(e)?;
    let budgets = vec![4, 8, 16, 32, 64, 128, 256, 512];
    let spec = |kind, var| SweepSpec {
        problem: entry.problem.clone(),
        variable: var,
        qubits: entry.qubits.clone(),
        steps: 128,
        variant: Variant::G,
        approx: DiagonalApprox::Exact,
        walsh_kind: kind,
        k_estimate: None,
    };
    let sparse = run_sweep(&spec(WalshKind::Sparse, SweepVar::WalshBudget(budgets.clone()))).map_err(e)?;
    let mwalsh = run_sweep(&spec(WalshKind::MWalsh, SweepVar::WalshBudget(budgets.clone()))).map_err(e)?;
    let exact = run_sweep(&spec(WalshKind::Sparse, SweepVar::Steps(vec![128]))).map_err(e)?[0].measured_error;
    let s: Vec<f64> = sparse.iter().map(|r| r.measured_error).collect();
    let m: Vec<f64> = mwalsh.iter().map(|r| r.measured_error).collect();
    let rises: Vec<usize> = (1..s.len()).filter(|&i| s[i] > s[i - 1] * (1.0 + 1e-12)).map(|i| budgets[i]).collect();
    let reached = budgets.iter().zip(&s).find(|(_, v)| (*v - exact).abs() <= 1e-9 * exact).map(|(k, _)| *k);
    let worse: Vec<usize> = budgets.iter().zip(s.iter().zip(&m)).filter(|(_, (a, b))| a > b).map(|(k, _)| *k).collect();
    let ok = rises.is_empty() && reached.is_some() && worse.is_empty();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ");
    Ok((
        ok,
        format!(
            "budgets {budgets:?}; sparse [{}]; m-walsh [{}]; untruncated {exact:.3e}; plateau reached at {reached:?}; sparse rises at {rises:?}; sparse > m-walsh at {worse:?}",
            fmt(&s),
            fmt(&m)
        ),
    ))
}

fn c6() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [16, 64, 256] {
        let series = m_walsh_series(|x| (2.0 * PI * x).sin(), m, Some(2.0 * PI));
        let sup = (0..1usize << 12)
            .map(|k| {
                let x = k as f64 / 4096.0;
                (series.evaluate(&[x]) - (2.0 * PI * x).sin()).abs()
            })
            .fold(0.0, f64::max);
        let bound = 2.0 * PI / m as f64;
        ok &= sup <= bound && series.certificate.is_some_and(|c| (c - bound).abs() < 1e-15);
        parts.push(format!("M={m}: {sup:.4e} <= {bound:.4e}"));
    }
    Ok((ok, parts.join(", ")))
}

fn c7() -> Outcome {
    let grid = build_grid(&[8]).map_err(e)?;
    let mut rng = seeded(77);
    let mut worst_p: f64 = 0.0;
    let mut worst_fid: f64 = 1.0;
    for _ in 0..20 {
        let modes: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let offset = rng.gen_range(-0.5..0.5);
        let f: Vec<f64> = grid
            .axis_nodes(0)
            .iter()
            .map(|&x| {
                offset
                    + modes
                        .iter()
                        .enumerate()
                        .map(|(k, (a, b))| {
                            let w = 2.0 * PI * (k + 1) as f64 * x;
                            (a * w.cos() + b * w.sin()) / (k + 1) as f64
                        })
                        .sum::<f64>()
            })
            .collect();
        let alpha = rng.gen_range(1.0..1.5);
        let out = two_diagonal_prep(&f, &grid, alpha, None, PrepMode::Exact).map_err(e)?;
        worst_p = worst_p.max((out.success_prob - closed_form_success(&f, alpha)).abs());
        let target = exact_load(&f, &grid).map_err(e)?;
        worst_fid = worst_fid.min(target.inner(&out.conditioned_state).map_err(e)?.norm_sqr());
    }
    let constant = two_diagonal_prep(&[1.0; 256], &grid, 2.0, None, PrepMode::Exact).map_err(e)?.success_prob;
    let ok = worst_p <= 1e-10 && worst_fid >= 1.0 - 1e-10 && (constant - 0.25).abs() <= 1e-15;
    Ok((ok, format!("max |P(1) - closed form| {worst_p:.2e}, min fidelity 1 - {:.2e}, constant α=2 gives {constant}", 1.0 - worst_fid)))
}

fn overlap_pair(a: f64) -> Result<(StateVector, StateVector), String> {
    let g = build_grid(&[2]).map_err(e)?;
    let phi = StateVector::basis(&g, 1);
    let mut psi = StateVector::zeros(&g);
    psi.amps[1] = Complex64::new(a, 0.0);
    psi.amps[2] = Complex64::new((1.0 - a * a).sqrt(), 0.0);
    Ok((psi, phi))
}

fn c8() -> Outcome {
    let a = (PI * 5.0 / 16.0).cos();
    let (psi, phi) = overlap_pair(a)?;
    let r = qae(&psi, &phi, 4, QaeMode::ExactDistribution).map_err(e)?;
    let hit: f64 = r.distribution.iter().enumerate().filter(|(k, _)| ((PI * *k as f64 / 16.0).cos().abs() - a).abs() < 1e-12).map(|(_, p)| p).sum();
    let exact_ok = (hit - 1.0).abs() < 1e-12 && (r.estimate - a).abs() < 1e-12;

    let b = 0.37;
    let (psi, phi) = overlap_pair(b)?;
    let m = 6;
    let big_m = (1usize << m) as f64;
    let r = qae(&psi, &phi, m, QaeMode::ExactDistribution).map_err(e)?;
    let y = b.acos() * big_m / PI;
    let mass = r.distribution[y.floor() as usize] + r.distribution[y.ceil() as usize];
    let generic_ok = mass >= 4.0 / (PI * PI);
    Ok((
        exact_ok && generic_ok,
        format!("a=cos(5π/16), m=4: P(ã=a) = {hit:.15}; a=0.37, m=6: mass on nearest pair {mass:.4} (>= {:.4})", 4.0 / (PI * PI)),
    ))
}

fn c9() -> Outcome {
    let started = Instant::now();
    let entry = catalog("lotka-volterra").map_err(e)?;
    let grid = build_grid(&entry.qubits).map_err(e)?;
    let f0 = exact_load(&entry.problem.initial_samples(&grid).map_err(e)?, &grid).map_err(e)?;
    let plan = StepPlan::new(&entry.problem, &grid, entry.steps, Variant::G, DiagonalApprox::Exact).map_err(e)?;
    let params = LotkaParams::reference();
    let rk = rk4_lotka_volterra(params, ((-0.7f64).exp(), (-0.3f64).exp()), 5.0, 50_000).map_err(e)?;
    let mut worst: (f64, f64) = (0.0, 0.0);
    let check = |t: f64, s: &StateVector, worst: &mut (f64, f64)| {
        let m = density_means(s);
        let (x1, x2) = rk.at(t);
        let rel = (((-m[0]).exp() - x1).abs() / x1).max(((-m[1]).exp() - x2).abs() / x2);
        if rel > worst.0 {
            *worst = (rel, t);
        }
    };
    check(0.0, &f0, &mut worst);
    qtransport::evolution::evolve_with(&f0, &plan, &Record::None, |l, s| {
        if l % 50 == 0 {
            check(l as f64 * plan.h, s, &mut worst);
        }
        Ok(())
    })
    .map_err(e)?;
    let ok = worst.0 < 0.05 && within(started, Duration::from_secs(900));
    Ok((ok, format!("max relative population error {:.3e} at t={:.2} (every 50 steps)", worst.0, worst.1)))
}

type Dense = Vec<Vec<Complex64>>;

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Scaling and squaring with a 30-term Taylor series.
fn expm(m: &Dense) -> Dense {
    let n = m.len();
    let norm: f64 = m.iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scale = 0.5f64.powi(s);
    let a: Dense = m.iter().map(|r| r.iter().map(|z| z * scale).collect()).collect();
    let mut out: Dense = (0..n).map(|i| (0..n).map(|j| Complex64::new(f64::from(u8::from(i == j)), 0.0)).collect()).collect();
    let mut term = out.clone();
    for k in 1..30 {
        term = matmul(&term, &a);
        term.iter_mut().for_each(|r| r.iter_mut().for_each(|z| *z /= k as f64));
        for (o, t) in out.iter_mut().zip(&term) {
            o.iter_mut().zip(t).for_each(|(x, y)| *x += y);
        }
    }
    for _ in 0..s {
        out = matmul(&out, &out);
    }
    out
}

fn generator(grid: &GridSpec, axis: usize, c: &[f64], scheme: &FdScheme) -> Result<Dense, String> {
    let n = grid.len();
    let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for col in 0..n {
        let d = apply_stencil(&StateVector::basis(grid, col), axis, scheme).map_err(e)?;
        for row in 0..n {
            m[row][col] = Complex64::new(0.0, -1.0) * c[row] * d.amps[row];
        }
    }
    Ok(m)
}

fn c10() -> Outcome {
    let started = Instant::now();
    let mut parts = Vec::new();

    let mut spectral: f64 = 0.0;
    for p in 1..=10 {
        let scheme = fd_coefficients(p).map_err(e)?;
        for n in 1..=8 {
            let g = build_grid(&[n, 2]).map_err(e)?;
            let s = random_state(&g, (p * 100 + n) as u64);
            let d = derivative_eigenvalues(&scheme, n);
            let mut spec = apply_qft(&s, 0, false).map_err(e)?;
            let stride = g.stride(0);
            for (i, a) in spec.amps.iter_mut().enumerate() {
                *a *= d[(i / stride) % g.points(0)];
            }
            let spec = apply_qft(&spec, 0, true).map_err(e)?;
            spectral = spectral.max(vector_error(&spec, &apply_stencil(&s, 0, &scheme).map_err(e)?).map_err(e)?);
        }
    }
    parts.push(format!("spectral vs stencil {spectral:.1e}"));

    let g = build_grid(&[3, 3]).map_err(e)?;
    let mut prob = TransportProblem::from_strings("dense", &["sin(2*pi*x2) + 0.3", "cos(2*pi*x1) * (1 + t)"], "1", 2, 0.4)
        .map_err(e)?;
    prob.verify().map_err(e)?;
    let plan = StepPlan::new(&prob, &g, 4, Variant::G, DiagonalApprox::Exact).map_err(e)?;
    let psi = random_state(&g, 5);
    let t = 0.1;
    let got = trotter_step(&psi, t, &plan).map_err(e)?;
    let mut want = psi.amps.clone();
    for axis in 0..2 {
        let c = step_phase(&prob, axis, t, plan.h, Variant::G, &g).map_err(e)?;
        let u = expm(&generator(&g, axis, &c, &plan.scheme)?);
        want = u.iter().map(|row| row.iter().zip(&want).map(|(a, b)| a * b).sum()).collect();
    }
    let dense = vector_error(&got, &StateVector::from_amps(&g, want).map_err(e)?).map_err(e)?;
    parts.push(format!("step vs dense exponential {dense:.1e}"));

    let g = build_grid(&[5, 5]).map_err(e)?;
    let mut rot = TransportProblem::from_strings("rot", &["x2 - 0.5", "-(x1 - 0.5 - 1.6*t)"], "1", 4, 1.0).map_err(e)?;
    rot.verify().map_err(e)?;
    let plan = StepPlan::new(&rot, &g, 1000, Variant::G, DiagonalApprox::Exact).map_err(e)?;
    let out = evolve(&random_state(&g, 11), &plan, &Record::None).map_err(e)?.state;
    let drift = (out.norm() - 1.0).abs();
    parts.push(format!("norm drift over 1000 steps {drift:.1e}"));

    let g = build_grid(&[3, 2]).map_err(e)?;
    let mut protocol: f64 = 0.0;
    for seed in 0..20u64 {
        let psi = random_state(&g, seed);
        let phi = random_state(&g, seed + 1000);
        let ip = inner(&psi.amps, &phi.amps);
        let re = overlap_test(&psi, &phi, 0, 0, false).map_err(e)?.exact_value;
        let im = overlap_test(&psi, &phi, 0, 0, true).map_err(e)?.exact_value;
        let sw = swap_test(&psi, &phi, 0, 0, false).map_err(e)?.exact_value;
        protocol = protocol.max((re - ip.re).abs()).max((im - ip.im).abs()).max((sw - ip.norm_sqr()).abs());
        for obs in [Observable::PauliZ(seed as usize % 5), Observable::Point(vec![1, 2]), Observable::Uniform] {
            let h = hadamard_test(&psi, &obs, 0, 0, false).map_err(e)?.exact_value;
            protocol = protocol.max((h - expectation(&psi, &obs).map_err(e)?).abs());
        }
    }
    parts.push(format!("Hadamard/SWAP/overlap vs inner products {protocol:.1e}"));

    let ok = spectral < 1e-12 && dense < 1e-12 && drift < 1e-10 && protocol < 1e-12 && within(started, Duration::from_secs(60));
    Ok((ok, parts.join(", ")))
}
