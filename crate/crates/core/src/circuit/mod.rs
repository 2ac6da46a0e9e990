//! Statevector kernels for the three circuit primitives of a time step
//! (per-register Fourier transform, diagonal phases, controlled blocks) and
//! the gate-level model used for resource counts.

pub mod gates;
pub mod qft;

use num_complex::Complex64;

pub use gates::{
    gate_metrics, qft_circuit, qft_cost, synthesize_walsh_circuit, walsh_circuit_metrics, Gate, GateList, GateMetrics,
};
pub use qft::{apply_diagonal, apply_qft, PhaseScope};

use crate::{Error, Result};

/// Operation applied under a control qubit.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    /// `diag(e^{i·phases})` over the sub-register formed by `qubits`
    /// (`qubits[0]` is the least significant bit of the sub-index).
    Diagonal { qubits: Vec<usize>, phases: Vec<f64> },
    Gates(GateList),
}

impl Block {
    fn qubits(&self) -> Vec<usize> {
        match self {
            Block::Diagonal { qubits, .. } => qubits.clone(),
            Block::Gates(list) => {
                let mut qs = Vec::new();
                list.gates.iter().for_each(|g| collect(g, &mut qs));
                qs
            }
        }
    }
}

fn collect(g: &Gate, out: &mut Vec<usize>) {
    match g {
        Gate::H(q) | Gate::Rz(q, _) | Gate::Phase(q, _) => out.push(*q),
        Gate::Cnot { control, target } => out.extend([*control, *target]),
        Gate::Swap(a, b) => out.extend([*a, *b]),
        Gate::GlobalPhase(_) => {}
        Gate::Ctrl { control, body, .. } => {
            out.push(*control);
            body.iter().for_each(|b| collect(b, out));
        }
    }
}

/// Applies `block` on the subspace where qubit `control` equals `polarity`.
pub fn apply_controlled(amps: &mut [Complex64], control: usize, polarity: bool, block: &Block) -> Result<()> {
    let total = amps.len().trailing_zeros() as usize;
    if !amps.len().is_power_of_two() {
        return Err(Error::InvalidArgument("amplitude count is not a power of two".into()));
    }
    if control >= total {
        return Err(Error::InvalidArgument(format!("control {control} out of range")));
    }
    if block.qubits().contains(&control) {
        return Err(Error::QubitCollision(format!("control qubit {control} is also used by the block")));
    }
    match block {
        Block::Diagonal { qubits, phases } => {
            if phases.len() != 1 << qubits.len() {
                return Err(Error::LengthMismatch { expected: 1 << qubits.len(), found: phases.len() });
            }
            if let Some(q) = qubits.iter().find(|&&q| q >= total) {
                return Err(Error::InvalidArgument(format!("qubit {q} out of range")));
            }
            let factors: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
            let cbit = 1 << control;
            let want = if polarity { cbit } else { 0 };
            // contiguous low qubits allow a direct slice lookup
            let contiguous = qubits.iter().enumerate().all(|(i, &q)| q == i);
            let width = qubits.len();
            for (i, a) in amps.iter_mut().enumerate() {
                if i & cbit != want {
                    continue;
                }
                let sub = if contiguous {
                    i & ((1 << width) - 1)
                } else {
                    qubits.iter().enumerate().fold(0, |acc, (b, &q)| acc | ((i >> q) & 1) << b)
                };
                *a *= factors[sub];
            }
            Ok(())
        }
        Block::Gates(list) => {
            let wrapped = GateList {
                qubits: total,
                gates: vec![Gate::Ctrl { control, polarity, body: list.gates.clone() }],
            };
            wrapped.simulate(amps)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::rng::random_state;

    #[test]
    fn anti_control_on_one_is_identity() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0b100] = Complex64::new(1.0, 0.0);
        let before = amps.clone();
        let block = Block::Diagonal { qubits: vec![0, 1], phases: vec![0.1, 0.2, 0.3, 0.4] };
        apply_controlled(&mut amps, 2, false, &block).unwrap();
        assert_eq!(amps, before);
    }

    #[test]
    fn controlled_diagonal_matches_dense_block_matrix() {
        let psi = random_state(&build_grid(&[4]).unwrap(), 21).amps;
        // control on qubit 3, diagonal over qubits 0..3
        let phases: Vec<f64> = (0..8).map(|k| 0.3 * k as f64 - 1.0).collect();
        let mut dense = vec![vec![Complex64::new(0.0, 0.0); 16]; 16];
        for (i, row) in dense.iter_mut().enumerate() {
            row[i] = if i & 8 != 0 { Complex64::from_polar(1.0, phases[i & 7]) } else { Complex64::new(1.0, 0.0) };
        }
        let want: Vec<Complex64> = dense.iter().map(|row| row.iter().zip(&psi).map(|(m, v)| m * v).sum()).collect();
        let mut got = psi.clone();
        apply_controlled(&mut got, 3, true, &Block::Diagonal { qubits: vec![0, 1, 2], phases: phases.clone() }).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-15);
        }
        // same diagonal addressed through a permuted qubit list
        let mut perm = psi.clone();
        let permuted: Vec<f64> = (0..8)
            .map(|s: usize| {
                // sub-index bits (b0,b1,b2) map to qubits (2,0,1)
                let i = ((s & 1) << 2) | ((s >> 1 & 1) << 0) | ((s >> 2 & 1) << 1);
                phases[i]
            })
            .collect();
        apply_controlled(&mut perm, 3, true, &Block::Diagonal { qubits: vec![2, 0, 1], phases: permuted }).unwrap();
        for (a, b) in perm.iter().zip(&want) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn overlap_is_rejected() {
        let mut amps = vec![Complex64::new(1.0, 0.0); 4];
        let block = Block::Diagonal { qubits: vec![0, 1], phases: vec![0.0; 4] };
        assert!(matches!(apply_controlled(&mut amps, 1, true, &block), Err(Error::QubitCollision(_))));
        let mut list = GateList::new(2);
        list.push(Gate::H(1));
        assert!(matches!(apply_controlled(&mut amps, 1, true, &Block::Gates(list)), Err(Error::QubitCollision(_))));
    }

    #[test]
    fn controlled_global_phase_kicks_back() {
        let psi = random_state(&build_grid(&[3]).unwrap(), 2).amps;
        let mut list = GateList::new(3);
        list.push(Gate::GlobalPhase(0.9));
        let mut a = psi.clone();
        apply_controlled(&mut a, 1, true, &Block::Gates(list)).unwrap();
        let mut b = psi.clone();
        let mut p = GateList::new(3);
        p.push(Gate::Phase(1, 0.9));
        p.simulate(&mut b).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-15);
        }
    }
}
