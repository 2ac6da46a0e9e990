//! Abstract gate lists: simulation, size/depth accounting, Walsh synthesis
//! and a line-oriented text format.
//!
//! Gate conventions:
//! * `RZ(θ) = diag(e^{−iθ/2}, e^{iθ/2})`
//! * `PHASE(θ) = diag(1, e^{iθ})`
//! * `GPHASE(θ) = e^{iθ}·I`
//! * `CTRL c pol { ... }` applies the body on the subspace where qubit `c`
//!   equals `pol`.

use std::fmt::{self, Write as _};

use num_complex::Complex64;

use crate::walsh::WalshSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
    Swap(usize, usize),
    Phase(usize, f64),
    GlobalPhase(f64),
    Ctrl { control: usize, polarity: bool, body: Vec<Gate> },
}

impl Gate {
    fn qubits(&self, out: &mut Vec<usize>) {
        match self {
            Gate::H(q) | Gate::Rz(q, _) | Gate::Phase(q, _) => out.push(*q),
            Gate::Cnot { control, target } => out.extend([*control, *target]),
            Gate::Swap(a, b) => out.extend([*a, *b]),
            Gate::GlobalPhase(_) => {}
            Gate::Ctrl { control, body, .. } => {
                out.push(*control);
                body.iter().for_each(|g| g.qubits(out));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GateList {
    pub qubits: usize,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct GateMetrics {
    pub size: usize,
    pub depth: usize,
    /// Single-qubit rotations: `RZ`, `PHASE` and `GPHASE`.
    pub rz_count: usize,
    pub cnot_count: usize,
}

impl std::ops::Add for GateMetrics {
    type Output = GateMetrics;
    /// Sequential composition.
    fn add(self, o: GateMetrics) -> GateMetrics {
        GateMetrics {
            size: self.size + o.size,
            depth: self.depth + o.depth,
            rz_count: self.rz_count + o.rz_count,
            cnot_count: self.cnot_count + o.cnot_count,
        }
    }
}

impl GateList {
    pub fn new(qubits: usize) -> Self {
        Self { qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn extend(&mut self, other: GateList) {
        self.gates.extend(other.gates);
    }

    /// Checks qubit ranges and distinct operands.
    pub fn validate(&self) -> Result<()> {
        fn check(g: &Gate, n: usize, outer: &[usize]) -> Result<()> {
            let mut qs = Vec::new();
            g.qubits(&mut qs);
            if let Some(q) = qs.iter().find(|&&q| q >= n) {
                return Err(Error::InvalidArgument(format!("qubit {q} out of range for {n} qubits")));
            }
            match g {
                Gate::Cnot { control, target } if control == target => {
                    Err(Error::QubitCollision(format!("CNOT control equals target {control}")))
                }
                Gate::Swap(a, b) if a == b => Err(Error::QubitCollision(format!("SWAP on qubit {a} twice"))),
                Gate::Ctrl { control, body, .. } => {
                    if outer.contains(control) {
                        return Err(Error::QubitCollision(format!("nested control {control} reused")));
                    }
                    let mut inner = Vec::new();
                    body.iter().for_each(|b| b.qubits(&mut inner));
                    if inner.contains(control) {
                        return Err(Error::QubitCollision(format!("control {control} also acted on by its body")));
                    }
                    let mut outer = outer.to_vec();
                    outer.push(*control);
                    body.iter().try_for_each(|b| check(b, n, &outer))
                }
                _ => Ok(()),
            }
        }
        self.gates.iter().try_for_each(|g| check(g, self.qubits, &[]))
    }

    pub fn metrics(&self) -> GateMetrics {
        gate_metrics(self)
    }

    /// Applies the circuit to a `2^qubits` amplitude array.
    pub fn simulate(&self, amps: &mut [Complex64]) -> Result<()> {
        if amps.len() != 1usize << self.qubits {
            return Err(Error::LengthMismatch { expected: 1 << self.qubits, found: amps.len() });
        }
        self.validate()?;
        for g in &self.gates {
            apply_gate(amps, g, 0, 0);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("QUBITS {}\n", self.qubits);
        for g in &self.gates {
            write_gate(&mut out, g, 0);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        parse_text(text)
    }
}

impl fmt::Display for GateList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Applies `g` to the amplitudes whose index satisfies `i & mask == value`.
fn apply_gate(amps: &mut [Complex64], g: &Gate, mask: usize, value: usize) {
    let active = |i: usize| i & mask == value;
    match g {
        Gate::H(q) => {
            let bit = 1 << q;
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..amps.len() {
                if i & bit == 0 && active(i) {
                    let (a, b) = (amps[i], amps[i | bit]);
                    amps[i] = (a + b) * s;
                    amps[i | bit] = (a - b) * s;
                }
            }
        }
        Gate::Rz(q, theta) => {
            let bit = 1 << q;
            let (lo, hi) = (Complex64::from_polar(1.0, -theta / 2.0), Complex64::from_polar(1.0, theta / 2.0));
            for (i, a) in amps.iter_mut().enumerate() {
                if active(i) {
                    *a *= if i & bit == 0 { lo } else { hi };
                }
            }
        }
        Gate::Phase(q, theta) => {
            let bit = 1 << q;
            let f = Complex64::from_polar(1.0, *theta);
            for (i, a) in amps.iter_mut().enumerate() {
                if i & bit != 0 && active(i) {
                    *a *= f;
                }
            }
        }
        Gate::GlobalPhase(theta) => {
            let f = Complex64::from_polar(1.0, *theta);
            for (i, a) in amps.iter_mut().enumerate() {
                if active(i) {
                    *a *= f;
                }
            }
        }
        Gate::Cnot { control, target } => {
            let (c, t) = (1 << control, 1 << target);
            for i in 0..amps.len() {
                if i & c != 0 && i & t == 0 && active(i) {
                    amps.swap(i, i | t);
                }
            }
        }
        Gate::Swap(a, b) => {
            let (ba, bb) = (1 << a, 1 << b);
            for i in 0..amps.len() {
                if i & ba != 0 && i & bb == 0 && active(i) {
                    amps.swap(i, (i & !ba) | bb);
                }
            }
        }
        Gate::Ctrl { control, polarity, body } => {
            let bit = 1 << control;
            let (m, v) = (mask | bit, value | if *polarity { bit } else { 0 });
            for inner in body {
                apply_gate(amps, inner, m, v);
            }
        }
    }
}

pub fn gate_metrics(list: &GateList) -> GateMetrics {
    let mut levels = vec![0usize; list.qubits];
    let mut m = GateMetrics::default();
    for g in &list.gates {
        account(g, &mut levels, &[], &mut m);
    }
    m.depth = levels.into_iter().max().unwrap_or(0);
    m
}

/// Greedy layering: a gate lands one layer above the deepest of the qubits
/// it touches (including every enclosing control).
fn account(g: &Gate, levels: &mut [usize], controls: &[usize], m: &mut GateMetrics) {
    let mut touch = controls.to_vec();
    let place = |qs: &[usize], levels: &mut [usize]| {
        if qs.is_empty() {
            return;
        }
        let top = qs.iter().map(|&q| levels[q]).max().unwrap_or(0) + 1;
        qs.iter().for_each(|&q| levels[q] = top);
    };
    match g {
        Gate::Ctrl { control, polarity, body } => {
            if !polarity {
                m.size += 1;
                place(&[*control], levels);
            }
            touch.push(*control);
            for b in body {
                account(b, levels, &touch, m);
            }
            if !polarity {
                m.size += 1;
                place(&[*control], levels);
            }
        }
        _ => {
            m.size += 1;
            match g {
                Gate::Rz(..) | Gate::Phase(..) | Gate::GlobalPhase(_) => m.rz_count += 1,
                Gate::Cnot { .. } => m.cnot_count += 1,
                _ => {}
            }
            g.qubits(&mut touch);
            place(&touch, levels);
        }
    }
}

/// Qubits carrying the `Z` factors of Walsh term `j` on registers `dims`.
pub fn walsh_term_qubits(j: &[usize], dims: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut offset: usize = dims.iter().sum();
    for (&ji, &n) in j.iter().zip(dims) {
        offset -= n;
        for b in 0..n {
            if ji >> b & 1 == 1 {
                out.push(offset + n - 1 - b);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Circuit for `exp(i Σ_j a_j w_j)`: each term of Hamming weight `k ≥ 1` is
/// a CNOT stair folding the parity of its `k` qubits onto the highest one,
/// one `RZ(−2a_j)`, and the mirrored stair; the `j = 0` term is a global
/// phase.
pub fn synthesize_walsh_circuit(series: &WalshSeries) -> GateList {
    let mut list = GateList::new(series.total_qubits());
    for (j, &a) in &series.terms {
        let qs = walsh_term_qubits(j, &series.dims);
        let Some((&target, rest)) = qs.split_last() else {
            list.push(Gate::GlobalPhase(a));
            continue;
        };
        for &c in rest {
            list.push(Gate::Cnot { control: c, target });
        }
        list.push(Gate::Rz(target, -2.0 * a));
        for &c in rest.iter().rev() {
            list.push(Gate::Cnot { control: c, target });
        }
    }
    list
}

/// Metrics of [`synthesize_walsh_circuit`] without materializing the list.
pub fn walsh_circuit_metrics(series: &WalshSeries) -> GateMetrics {
    let mut levels = vec![0usize; series.total_qubits()];
    let mut m = GateMetrics::default();
    for (j, &a) in &series.terms {
        let qs = walsh_term_qubits(j, &series.dims);
        let Some((&target, rest)) = qs.split_last() else {
            account(&Gate::GlobalPhase(a), &mut levels, &[], &mut m);
            continue;
        };
        for &c in rest.iter().chain(std::iter::once(&target)).chain(rest.iter().rev()) {
            let g = if c == target { Gate::Rz(target, -2.0 * a) } else { Gate::Cnot { control: c, target } };
            account(&g, &mut levels, &[], &mut m);
        }
    }
    m.depth = levels.into_iter().max().unwrap_or(0);
    m
}

/// Gate-level forward transform on the register occupying qubits
/// `offset..offset + n` (most significant digit on the top qubit), with the
/// same sign convention as [`super::qft::qft_in_place`].
pub fn qft_circuit(total_qubits: usize, offset: usize, n: usize, inverse: bool) -> GateList {
    let mut list = GateList::new(total_qubits);
    let sign = if inverse { 1.0 } else { -1.0 };
    // digit i (0 = most significant) lives on qubit offset + n − 1 − i
    let q = |i: usize| offset + n - 1 - i;
    for i in 0..n {
        list.push(Gate::H(q(i)));
        for k in 2..=n - i {
            let angle = sign * 2.0 * std::f64::consts::PI / (1u64 << k) as f64;
            list.push(Gate::Ctrl { control: q(i + k - 1), polarity: true, body: vec![Gate::Phase(q(i), angle)] });
        }
    }
    for i in 0..n / 2 {
        list.push(Gate::Swap(q(i), q(n - 1 - i)));
    }
    list
}

/// Textbook transform cost: `n(n+1)/2` Hadamards and controlled phases plus
/// `⌊n/2⌋` swaps.
pub fn qft_cost(n: usize) -> usize {
    n * (n + 1) / 2 + n / 2
}

fn write_gate(out: &mut String, g: &Gate, indent: usize) {
    let pad = "  ".repeat(indent);
    let _ = match g {
        Gate::H(q) => writeln!(out, "{pad}H {q}"),
        Gate::Rz(q, a) => writeln!(out, "{pad}RZ {q} {a:?}"),
        Gate::Cnot { control, target } => writeln!(out, "{pad}CNOT {control} {target}"),
        Gate::Swap(a, b) => writeln!(out, "{pad}SWAP {a} {b}"),
        Gate::Phase(q, a) => writeln!(out, "{pad}PHASE {q} {a:?}"),
        Gate::GlobalPhase(a) => writeln!(out, "{pad}GPHASE {a:?}"),
        Gate::Ctrl { control, polarity, body } => {
            let _ = writeln!(out, "{pad}CTRL {control} {} {{", u8::from(*polarity));
            for b in body {
                write_gate(out, b, indent + 1);
            }
            writeln!(out, "{pad}}}")
        }
    };
}

fn parse_text(text: &str) -> Result<GateList> {
    let mut stack: Vec<(usize, bool, Vec<Gate>)> = Vec::new();
    let mut top: Vec<Gate> = Vec::new();
    let mut qubits: Option<usize> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let here = offset;
        offset += line.len();
        let err = |msg: String| Error::Syntax { offset: here, message: msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() || toks[0].starts_with('#') {
            continue;
        }
        let int = |i: usize| -> Result<usize> {
            toks.get(i)
                .ok_or_else(|| err(format!("`{}` is missing operand {i}", toks[0])))?
                .parse::<usize>()
                .map_err(|e| err(format!("bad qubit index: {e}")))
        };
        let real = |i: usize| -> Result<f64> {
            toks.get(i)
                .ok_or_else(|| err(format!("`{}` is missing operand {i}", toks[0])))?
                .parse::<f64>()
                .map_err(|e| err(format!("bad angle: {e}")))
        };
        let arity = |n: usize| -> Result<()> {
            if toks.len() != n + 1 {
                return Err(err(format!("`{}` takes {n} operand(s)", toks[0])));
            }
            Ok(())
        };
        let gate = match toks[0] {
            "QUBITS" => {
                arity(1)?;
                if qubits.is_some() {
                    return Err(err("duplicate QUBITS header".into()));
                }
                qubits = Some(int(1)?);
                continue;
            }
            "H" => {
                arity(1)?;
                Gate::H(int(1)?)
            }
            "RZ" => {
                arity(2)?;
                Gate::Rz(int(1)?, real(2)?)
            }
            "PHASE" => {
                arity(2)?;
                Gate::Phase(int(1)?, real(2)?)
            }
            "GPHASE" => {
                arity(1)?;
                Gate::GlobalPhase(real(1)?)
            }
            "CNOT" => {
                arity(2)?;
                Gate::Cnot { control: int(1)?, target: int(2)? }
            }
            "SWAP" => {
                arity(2)?;
                Gate::Swap(int(1)?, int(2)?)
            }
            "CTRL" => {
                if toks.len() != 4 || toks[3] != "{" {
                    return Err(err("expected `CTRL <qubit> <0|1> {`".into()));
                }
                let pol = match toks[2] {
                    "0" => false,
                    "1" => true,
                    other => return Err(err(format!("polarity must be 0 or 1, got `{other}`"))),
                };
                stack.push((int(1)?, pol, std::mem::take(&mut top)));
                continue;
            }
            "}" => {
                arity(0)?;
                let (control, polarity, parent) = stack.pop().ok_or_else(|| err("unmatched `}`".into()))?;
                let body = std::mem::replace(&mut top, parent);
                Gate::Ctrl { control, polarity, body }
            }
            other => return Err(err(format!("unknown gate `{other}`"))),
        };
        top.push(gate);
    }
    if !stack.is_empty() {
        return Err(Error::Syntax { offset: text.len(), message: "unclosed CTRL block".into() });
    }
    let qubits = qubits.ok_or_else(|| Error::Syntax { offset: 0, message: "missing QUBITS header".into() })?;
    let list = GateList { qubits, gates: top };
    list.validate()?;
    Ok(list)
}
