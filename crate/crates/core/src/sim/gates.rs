//! Small dense matrices for gates: 2×2 single-qubit unitaries and 4×4
//! two-qubit unitaries in the local basis `|q_lo q_hi⟩`, index `q_lo | q_hi << 1`.

use num_complex::Complex64 as C;

use super::kernels::rotation_matrix;
use crate::error::{Error, Result};
use crate::pauli::Pauli;
use crate::trotter::{Gate, GateKind};

pub(crate) type M2 = [[C; 2]; 2];
pub(crate) type M4 = [[C; 4]; 4];

const O: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

pub(crate) fn pauli_matrix(p: Pauli) -> M2 {
    match p {
        Pauli::I => [[ONE, O], [O, ONE]],
        Pauli::X => [[O, ONE], [ONE, O]],
        Pauli::Y => [[O, C::new(0.0, -1.0)], [C::new(0.0, 1.0), O]],
        Pauli::Z => [[ONE, O], [O, -ONE]],
    }
}

pub(crate) fn identity2() -> M2 {
    pauli_matrix(Pauli::I)
}

pub(crate) fn identity4() -> M4 {
    let mut m = [[O; 4]; 4];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = ONE;
    }
    m
}

pub(crate) fn mul2(a: &M2, b: &M2) -> M2 {
    let mut m = [[O; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

pub(crate) fn mul4(a: &M4, b: &M4) -> M4 {
    let mut m = [[O; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

pub(crate) fn adjoint4(a: &M4) -> M4 {
    let mut m = [[O; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = a[j][i].conj();
        }
    }
    m
}

/// `lo ⊗ hi` with `lo` acting on the low bit.
pub(crate) fn kron(lo: &M2, hi: &M2) -> M4 {
    let mut m = [[O; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = lo[i & 1][j & 1] * hi[i >> 1][j >> 1];
        }
    }
    m
}

/// 2×2 unitary of a single-qubit rotation gate.
pub(crate) fn one_qubit_unitary(gate: &Gate) -> Option<M2> {
    match gate.kind {
        GateKind::Rotation1q { axis } => Some(rotation_matrix(axis, gate.angle)),
        _ => None,
    }
}

/// Sorted sites and local 4×4 unitary of a two-qubit gate.
pub(crate) fn two_qubit_unitary(gate: &Gate, n: usize) -> Result<([usize; 2], M4)> {
    let rots = gate
        .pauli_rotations(n)
        .filter(|_| gate.sites.len() == 2)
        .ok_or_else(|| Error::Unsupported(format!("{:?} is not a two-qubit gate", gate.kind)))?;
    let (lo, hi) = (gate.sites[0].min(gate.sites[1]), gate.sites[0].max(gate.sites[1]));
    let mut u = identity4();
    for (p, theta) in rots {
        let g = kron(&pauli_matrix(p.get(lo)), &pauli_matrix(p.get(hi)));
        let (s, c) = theta.sin_cos();
        let mut r = [[O; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                r[i][j] = C::new(0.0, -s) * g[i][j] + if i == j { C::new(c, 0.0) } else { O };
            }
        }
        u = mul4(&r, &u);
    }
    Ok(([lo, hi], u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_matrices_are_unitary() {
        let g = Gate {
            kind: GateKind::East,
            sites: vec![3, 1],
            angle: 0.37,
            layer: 0,
            step: 0,
        };
        let (sites, u) = two_qubit_unitary(&g, 4).unwrap();
        assert_eq!(sites, [1, 3]);
        let p = mul4(&adjoint4(&u), &u);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - C::new(want, 0.0)).norm() < 1e-14);
            }
        }
        // control (site 3, high bit) in |0>: X rotation on the target is cancelled
        assert!((u[0][0] - ONE).norm() < 1e-14);
        assert!((u[1][1] - ONE).norm() < 1e-14);
    }
}
