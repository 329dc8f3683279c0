use faer::{Mat, MatRef};
use num_complex::Complex64 as C;

use super::kernels::{self, PauliAction};
use super::rdm::OneRdm;
use super::state::StateVector;
use crate::error::{Error, Result};
use crate::pauli::{Operator, PauliString};
use crate::trotter::{Gate, PauliChannel};

/// Largest register held as a dense density matrix (256 MiB at 12 sites).
pub const MAX_DENSITY_SITES: usize = 12;

/// Dense `2^N × 2^N` density matrix, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C>,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSITY_SITES {
        return Err(Error::InvalidArgument(format!(
            "density matrix needs 1..={MAX_DENSITY_SITES} sites, got {n}"
        )));
    }
    Ok(())
}

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        Self::from_mixture(std::slice::from_ref(psi))
    }

    /// Equal-weight mixture of pure states.
    pub fn from_mixture(states: &[StateVector]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let n = first.num_sites();
        check_size(n)?;
        let d = 1 << n;
        let w = 1.0 / states.len() as f64;
        let mut data = vec![C::new(0.0, 0.0); d * d];
        for s in states {
            if s.num_sites() != n {
                return Err(Error::SiteMismatch { expected: n, got: s.num_sites() });
            }
            let a = s.amplitudes();
            for (c, col) in data.chunks_exact_mut(d).enumerate() {
                let ac = a[c].conj() * w;
                for (x, ar) in col.iter_mut().zip(a) {
                    *x += ar * ac;
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_size(n)?;
        let d = 1 << n;
        let mut data = vec![C::new(0.0, 0.0); d * d];
        for k in 0..d {
            data[k * (d + 1)] = C::new(1.0 / d as f64, 0.0);
        }
        Ok(Self { n, data })
    }

    pub fn from_mat(m: MatRef<'_, C>) -> Result<Self> {
        let d = m.nrows();
        if !d.is_power_of_two() || m.ncols() != d {
            return Err(Error::InvalidArgument(format!("{}x{} is not a register matrix", d, m.ncols())));
        }
        let n = d.trailing_zeros() as usize;
        check_size(n)?;
        let mut data = Vec::with_capacity(d * d);
        for c in 0..d {
            data.extend((0..d).map(|r| m[(r, c)]));
        }
        Ok(Self { n, data })
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn as_mat(&self) -> MatRef<'_, C> {
        MatRef::from_column_major_slice(&self.data, self.dim(), self.dim())
    }

    pub fn to_mat(&self) -> Mat<C> {
        self.as_mat().to_owned()
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        self.data[r + c * self.dim()]
    }

    pub fn trace(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|k| self.data[k * (d + 1)].re).sum()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(C::norm_sqr).sum()
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for c in 0..d {
            for r in 0..=c {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// `tr(ρ P)`.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        if p.num_sites() != self.n {
            return Err(Error::SiteMismatch { expected: self.n, got: p.num_sites() });
        }
        let act = PauliAction::new(p);
        let d = self.dim();
        // (ρP)_rr = ph(r) ρ[r, r^x]
        let acc: C = (0..d).map(|r| act.phase(r) * self.data[r + (r ^ act.x) * d]).sum();
        Ok(acc.re)
    }

    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if op.num_sites() != self.n {
            return Err(Error::SiteMismatch { expected: self.n, got: op.num_sites() });
        }
        let mut acc = 0.0;
        for (p, w) in op.real_terms() {
            acc += w * self.pauli_expectation(&p)?;
        }
        Ok(acc)
    }

    pub fn one_rdm(&self, site: usize) -> OneRdm {
        let n = self.n;
        let b = [crate::pauli::Pauli::X, crate::pauli::Pauli::Y, crate::pauli::Pauli::Z]
            .map(|l| self.pauli_expectation(&PauliString::single(n, site, l)).expect("sizes match"));
        OneRdm::new(b)
    }

    pub fn one_rdms(&self) -> Vec<OneRdm> {
        (0..self.n).map(|j| self.one_rdm(j)).collect()
    }

    pub fn site_averaged_rdm(&self) -> OneRdm {
        OneRdm::average(&self.one_rdms()).expect("at least one site")
    }

    /// `ρ ← A ρ A†` where `f` applies `A` to a statevector in place.
    fn conjugate_by(&mut self, f: impl Fn(&mut [C])) {
        let d = self.dim();
        for _ in 0..2 {
            // left-multiply every column, then take the adjoint; twice gives AρA†
            for col in self.data.chunks_exact_mut(d) {
                f(col);
            }
            for c in 0..d {
                for r in 0..c {
                    self.data.swap(r + c * d, c + r * d);
                }
            }
            self.data.iter_mut().for_each(|x| *x = x.conj());
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let n = self.n;
        // surface malformed gates as errors before the infallible column pass
        StateVector::zero_state(n)?.apply_gate(gate)?;
        self.conjugate_by(|col| {
            let mut sv = StateVector::from_amplitudes(n, col.to_vec()).expect("column size");
            sv.apply_gate(gate).expect("validated above");
            col.copy_from_slice(sv.amplitudes());
        });
        Ok(())
    }

    /// Two-site Pauli channel on `sites`: `ρ ← Σ_k p_k P_k ρ P_k`.
    pub fn apply_pauli_channel(&mut self, sites: [usize; 2], channel: &PauliChannel) -> Result<()> {
        let n = self.n;
        let mut out = vec![C::new(0.0, 0.0); self.data.len()];
        for b in &channel.branches {
            let p = PauliString::from_sites(n, &[(sites[0], b.paulis[0]), (sites[1], b.paulis[1])])?;
            let mut term = self.clone();
            term.conjugate_by(|col| kernels::apply_pauli(col, &p));
            for (o, t) in out.iter_mut().zip(&term.data) {
                *o += t * b.prob;
            }
        }
        self.data = out;
        Ok(())
    }

    /// `ρ ← U ρ U†` for a full-register unitary.
    pub fn apply_unitary(&mut self, u: MatRef<'_, C>) -> Result<()> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::InvalidArgument("unitary dimension mismatch".into()));
        }
        let m = u * self.as_mat() * u.adjoint();
        *self = Self::from_mat(m.as_ref())?;
        Ok(())
    }

    /// `(1 - s) a + s b`.
    pub fn interpolate(a: &DensityMatrix, b: &DensityMatrix, s: f64) -> Result<DensityMatrix> {
        if a.n != b.n {
            return Err(Error::SiteMismatch { expected: a.n, got: b.n });
        }
        let data = a.data.iter().zip(&b.data).map(|(x, y)| x * (1.0 - s) + y * s).collect();
        Ok(DensityMatrix { n: a.n, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use crate::trotter::{depolarizing_kraus, GateKind};

    #[test]
    fn pure_state_rdm_matches_statevector() {
        let psi = StateVector::product(&[[0.6, 0.0, 0.8], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]).unwrap();
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        for j in 0..3 {
            assert!(rho.one_rdm(j).trace_distance(&psi.one_rdm(j)) < 1e-14);
        }
    }

    #[test]
    fn gate_conjugation_matches_statevector() {
        let mut psi = StateVector::product(&[[0.6, 0.0, 0.8], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let mut rho = DensityMatrix::from_pure(&psi).unwrap();
        let g = Gate { kind: GateKind::East, sites: vec![2, 0], angle: 0.7, layer: 0, step: 0 };
        psi.apply_gate(&g).unwrap();
        rho.apply_gate(&g).unwrap();
        let want = DensityMatrix::from_pure(&psi).unwrap();
        let err: f64 = rho.data.iter().zip(&want.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn full_depolarizing_gives_mixed_pair() {
        let psi = StateVector::product(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]).unwrap();
        let mut rho = DensityMatrix::from_pure(&psi).unwrap();
        rho.apply_pauli_channel([0, 1], &depolarizing_kraus(1.0).unwrap()).unwrap();
        assert!((rho.purity() - 0.25).abs() < 1e-14);
        let zz = PauliString::from_sites(2, &[(0, Pauli::Z), (1, Pauli::Z)]).unwrap();
        assert!(rho.pauli_expectation(&zz).unwrap().abs() < 1e-14);
    }
}
