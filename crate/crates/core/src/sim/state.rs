use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64 as C;

use super::kernels;
use super::rdm::OneRdm;
use crate::error::{Error, Result};
use crate::pauli::{Operator, PauliString};
use crate::trotter::{Gate, GateKind};

/// Largest register a [`StateVector`] will allocate (16 GiB of amplitudes
/// would be needed for 30 sites).
pub const MAX_STATE_SITES: usize = 28;

/// Pure state of `n` qubits; site `j` is bit `j` of the amplitude index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C>,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_STATE_SITES {
        return Err(Error::InvalidArgument(format!(
            "statevector needs 1..={MAX_STATE_SITES} sites, got {n}"
        )));
    }
    Ok(())
}

/// Amplitudes `(a0, a1)` of the pure qubit state with unit Bloch vector `b`.
pub(crate) fn bloch_amplitudes(b: [f64; 3]) -> Result<(C, C)> {
    let r = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    if (r - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("Bloch vector of length {r} is not pure")));
    }
    let [x, y, z] = b.map(|v| v / r);
    if z <= -1.0 + 1e-15 {
        return Ok((C::new(0.0, 0.0), C::new(1.0, 0.0)));
    }
    let a0 = (0.5 * (1.0 + z)).sqrt();
    let a1 = C::new(x, y) / (2.0 * (1.0 + z)).sqrt();
    Ok((C::new(a0, 0.0), a1))
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero_state(n: usize) -> Result<Self> {
        check_size(n)?;
        let mut amps = vec![C::new(0.0, 0.0); 1 << n];
        amps[0] = C::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Product state with the given unit Bloch vector on each site.
    pub fn product(blochs: &[[f64; 3]]) -> Result<Self> {
        let n = blochs.len();
        check_size(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        amps.push(C::new(1.0, 0.0));
        for b in blochs {
            let (a0, a1) = bloch_amplitudes(*b)?;
            let len = amps.len();
            amps.extend_from_within(..);
            for k in 0..len {
                let v = amps[k];
                amps[k] = v * a0;
                amps[k + len] = v * a1;
            }
        }
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C>) -> Result<Self> {
        check_size(n)?;
        if amps.len() != 1 << n {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes for {n} sites",
                amps.len()
            )));
        }
        Ok(Self { n, amps })
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(C::norm_sqr).sum()
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm_sqr().sqrt();
        self.amps.iter_mut().for_each(|a| *a *= s);
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    fn check_pauli(&self, p: &PauliString) -> Result<()> {
        if p.num_sites() != self.n {
            return Err(Error::SiteMismatch { expected: self.n, got: p.num_sites() });
        }
        Ok(())
    }

    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_pauli(p)?;
        kernels::apply_pauli(&mut self.amps, p);
        Ok(())
    }

    /// `exp(-i θ P)`.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        self.check_pauli(p)?;
        kernels::pauli_rotation(&mut self.amps, p, theta);
        Ok(())
    }

    /// Arbitrary 2×2 matrix `u[row][col]` on one site.
    pub fn apply_1q(&mut self, site: usize, u: &[[C; 2]; 2]) -> Result<()> {
        if site >= self.n {
            return Err(Error::InvalidArgument(format!("site {site} out of range")));
        }
        kernels::apply_1q(&mut self.amps, site, u);
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        if let Some(&s) = gate.sites.iter().find(|&&s| s >= self.n) {
            return Err(Error::InvalidArgument(format!("gate site {s} out of range")));
        }
        match &gate.kind {
            GateKind::Rotation1q { axis } => {
                kernels::apply_1q(&mut self.amps, gate.sites[0], &kernels::rotation_matrix(*axis, gate.angle));
            }
            GateKind::PauliInsertion { .. } => {
                let p = gate.insertion_string(self.n).ok_or_else(|| Error::InvalidArgument("bad insertion".into()))?;
                kernels::apply_pauli(&mut self.amps, &p);
            }
            _ => {
                let rots = gate
                    .pauli_rotations(self.n)
                    .ok_or_else(|| Error::InvalidArgument("malformed two-qubit gate".into()))?;
                for (p, theta) in rots {
                    kernels::pauli_rotation(&mut self.amps, &p, theta);
                }
            }
        }
        Ok(())
    }

    /// `⟨ψ|P|ψ⟩`, real for Hermitian `P`.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        self.check_pauli(p)?;
        Ok(kernels::pauli_expectation(&self.amps, p).re)
    }

    /// `⟨ψ|O|ψ⟩` for a Hermitian operator.
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if op.num_sites() != self.n {
            return Err(Error::SiteMismatch { expected: self.n, got: op.num_sites() });
        }
        let mut acc = C::new(0.0, 0.0);
        for (p, w) in op.terms() {
            acc += w * kernels::pauli_expectation(&self.amps, p);
        }
        Ok(acc.re)
    }

    pub fn one_rdm(&self, site: usize) -> OneRdm {
        assert!(site < self.n, "site {site} out of range");
        OneRdm::new(kernels::bloch(&self.amps, site))
    }

    pub fn one_rdms(&self) -> Vec<OneRdm> {
        (0..self.n).map(|j| self.one_rdm(j)).collect()
    }

    /// `(1/N) Σ_j ρ_j`.
    pub fn site_averaged_rdm(&self) -> OneRdm {
        OneRdm::average(&self.one_rdms()).expect("at least one site")
    }

    /// Little-endian `(re, im)` f64 pairs in index order.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(16 * self.amps.len());
        for a in &self.amps {
            buf.extend_from_slice(&a.re.to_le_bytes());
            buf.extend_from_slice(&a.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(n: usize, mut r: impl Read) -> Result<Self> {
        check_size(n)?;
        let mut buf = vec![0u8; 16 << n];
        r.read_exact(&mut buf)?;
        let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8 bytes"));
        let amps = buf.chunks_exact(16).map(|c| C::new(f(&c[..8]), f(&c[8..]))).collect();
        Self::from_amplitudes(n, amps)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(n: usize, path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(n, std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_state_bloch_vectors_round_trip() {
        let b = [[0.6, 0.0, 0.8], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]];
        let psi = StateVector::product(&b).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-14);
        for (j, want) in b.iter().enumerate() {
            let got = psi.one_rdm(j).bloch;
            for k in 0..3 {
                assert!((got[k] - want[k]).abs() < 1e-14, "site {j}: {got:?}");
            }
        }
        assert!(StateVector::product(&[[0.5, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let psi = StateVector::product(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let mut bytes = Vec::new();
        psi.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 64);
        assert_eq!(StateVector::read_from(2, &bytes[..]).unwrap(), psi);
    }
}
