//! Exact diagonalization of Hamiltonians and single-step Trotter unitaries,
//! and exact evolution in the eigenbasis.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C;

use super::density::DensityMatrix;
use super::kernels::{self, PauliAction};
use super::state::StateVector;
use crate::error::{Error, Result};
use crate::pauli::Operator;
use crate::trotter::TrotterCircuit;

/// Largest register that will be diagonalized.
pub const MAX_EIGEN_SITES: usize = 13;

/// Energies differing by less than this count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_EIGEN_SITES {
        return Err(Error::InvalidArgument(format!(
            "exact diagonalization needs 1..={MAX_EIGEN_SITES} sites, got {n}"
        )));
    }
    Ok(())
}

/// Dense matrix of an operator.
pub fn dense_matrix(op: &Operator) -> Result<Mat<C>> {
    let n = op.num_sites();
    check_size(n)?;
    let d = 1usize << n;
    let mut m = Mat::<C>::zeros(d, d);
    for (p, w) in op.terms() {
        let act = PauliAction::new(p);
        for k in 0..d {
            m[(k ^ act.x, k)] += w * act.phase(k);
        }
    }
    Ok(m)
}

/// Unitary of a circuit, built column by column.
pub fn circuit_unitary(circuit: &TrotterCircuit) -> Result<Mat<C>> {
    let n = circuit.n;
    check_size(n)?;
    let d = 1usize << n;
    let mut u = Mat::<C>::zeros(d, d);
    for k in 0..d {
        let mut amps = vec![C::new(0.0, 0.0); d];
        amps[k] = C::new(1.0, 0.0);
        let mut psi = StateVector::from_amplitudes(n, amps)?;
        for g in &circuit.gates {
            psi.apply_gate(g)?;
        }
        for (r, a) in psi.amplitudes().iter().enumerate() {
            u[(r, k)] = *a;
        }
    }
    Ok(u)
}

/// Eigenpairs `H|v_k⟩ = E_k|v_k⟩`, ascending. For a Trotter step unitary the
/// values are quasi-energies `ε_k` with `U|v_k⟩ = e^{-i ε_k τ}|v_k⟩`.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: Mat<C>,
}

impl EigenSystem {
    /// Diagonalizes a Hermitian operator. Real matrices use the real solver, so
    /// their eigenvectors come out real.
    pub fn hamiltonian(op: &Operator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::InvalidArgument("operator is not Hermitian".into()));
        }
        let m = dense_matrix(op)?;
        let d = m.nrows();
        let is_real = (0..d).all(|c| (0..d).all(|r| m[(r, c)].im == 0.0));
        let numerical = |e| Error::Numerical(format!("eigensolver failed: {e:?}"));
        if is_real {
            let re = Mat::<f64>::from_fn(d, d, |r, c| m[(r, c)].re);
            let evd = re.self_adjoint_eigen(Side::Lower).map_err(numerical)?;
            let values = (0..d).map(|k| evd.S()[k]).collect();
            let u = evd.U();
            let vectors = Mat::<C>::from_fn(d, d, |r, c| C::new(u[(r, c)], 0.0));
            Ok(Self { values, vectors })
        } else {
            let evd = m.self_adjoint_eigen(Side::Lower).map_err(numerical)?;
            let values = (0..d).map(|k| evd.S()[k].re).collect();
            Ok(Self { values, vectors: evd.U().to_owned() })
        }
    }

    /// Diagonalizes a unitary `U = e^{-i H_F τ}`. Eigenvectors come from the
    /// Hermitian part `(U - U†)/2i`; where that is degenerate the clusters are
    /// split by `(U + U†)/2`.
    pub fn trotter_unitary(u: MatRef<'_, C>, tau: f64) -> Result<Self> {
        let d = u.nrows();
        if u.ncols() != d || !d.is_power_of_two() {
            return Err(Error::InvalidArgument("unitary must be square over a register".into()));
        }
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {tau}")));
        }
        let numerical = |e| Error::Numerical(format!("eigensolver failed: {e:?}"));
        let k1 = Mat::<C>::from_fn(d, d, |r, c| (u[(r, c)] - u[(c, r)].conj()) * C::new(0.0, -0.5));
        let evd = k1.self_adjoint_eigen(Side::Lower).map_err(numerical)?;
        let s: Vec<f64> = (0..d).map(|k| evd.S()[k].re).collect();
        let mut v = evd.U().to_owned();

        // split clusters with equal sin φ using cos φ
        let mut start = 0;
        while start < d {
            let mut end = start + 1;
            while end < d && s[end] - s[end - 1] < 1e-8 {
                end += 1;
            }
            if end - start > 1 {
                let vc = v.as_ref().subcols(start, end - start).to_owned();
                let uv = u * &vc;
                let p = vc.adjoint() * &uv;
                let m = end - start;
                let k2 = Mat::<C>::from_fn(m, m, |r, c| (p[(r, c)] + p[(c, r)].conj()) * 0.5);
                let sub = k2.self_adjoint_eigen(Side::Lower).map_err(numerical)?;
                let rotated = &vc * sub.U();
                v.as_mut().subcols_mut(start, m).copy_from(&rotated);
            }
            start = end;
        }

        let uv = u * &v;
        let mut values = Vec::with_capacity(d);
        let mut worst = 0.0f64;
        for k in 0..d {
            let lam: C = (0..d).map(|r| v[(r, k)].conj() * uv[(r, k)]).sum();
            let res: f64 = (0..d).map(|r| (uv[(r, k)] - lam * v[(r, k)]).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(res);
            values.push(-lam.arg() / tau);
        }
        if worst > 1e-6 {
            return Err(Error::Numerical(format!("unitary eigenvector residual {worst:.2e}")));
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let vectors = Mat::<C>::from_fn(d, d, |r, c| v[(r, order[c])]);
        let values = order.iter().map(|&k| values[k]).collect();
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn num_sites(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    fn check_state(&self, psi: &StateVector) -> Result<()> {
        if psi.amplitudes().len() != self.dim() {
            return Err(Error::SiteMismatch { expected: self.num_sites(), got: psi.num_sites() });
        }
        Ok(())
    }

    /// Eigenbasis coefficients `V† ψ`.
    pub fn coefficients(&self, psi: &StateVector) -> Result<Vec<C>> {
        self.check_state(psi)?;
        let d = self.dim();
        let a = psi.amplitudes();
        Ok((0..d).map(|k| (0..d).map(|r| self.vectors[(r, k)].conj() * a[r]).sum()).collect())
    }

    /// The state with eigenbasis coefficients `coeffs`.
    pub fn synthesize(&self, coeffs: &[C]) -> Result<StateVector> {
        let d = self.dim();
        if coeffs.len() != d {
            return Err(Error::InvalidArgument("coefficient count mismatch".into()));
        }
        let mut amps = vec![C::new(0.0, 0.0); d];
        for (k, ck) in coeffs.iter().enumerate() {
            let col = self.vectors.col(k);
            for (r, a) in amps.iter_mut().enumerate() {
                *a += col[r] * ck;
            }
        }
        StateVector::from_amplitudes(self.num_sites(), amps)
    }

    /// `e^{-iHt} ψ`.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        let c = self.coefficients(psi)?;
        let c: Vec<C> = c.iter().zip(&self.values).map(|(ck, e)| ck * C::from_polar(1.0, -e * t)).collect();
        self.synthesize(&c)
    }

    /// `ρ` in the eigenbasis, `V† ρ V`.
    pub fn to_eigenbasis(&self, rho: &DensityMatrix) -> Result<Mat<C>> {
        if rho.dim() != self.dim() {
            return Err(Error::SiteMismatch { expected: self.num_sites(), got: rho.num_sites() });
        }
        Ok(self.vectors.adjoint() * rho.as_mat() * &self.vectors)
    }

    /// `V m V†` as a density matrix.
    pub fn from_eigenbasis(&self, m: MatRef<'_, C>) -> Result<DensityMatrix> {
        let out = &self.vectors * m * self.vectors.adjoint();
        DensityMatrix::from_mat(out.as_ref())
    }
}

/// `e^{-iHt} ρ e^{iHt}`.
pub fn evolve_exact(rho: &DensityMatrix, eig: &EigenSystem, t: f64) -> Result<DensityMatrix> {
    SpectralState::new(rho, eig)?.at(t)
}

/// Time-averaged state: the components of `ρ` between degenerate levels.
pub fn diagonal_ensemble(rho: &DensityMatrix, eig: &EigenSystem) -> Result<DensityMatrix> {
    let mut m = eig.to_eigenbasis(rho)?;
    let e = &eig.values;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if (e[r] - e[c]).abs() > DEGENERACY_TOL {
                m[(r, c)] = C::new(0.0, 0.0);
            }
        }
    }
    eig.from_eigenbasis(m.as_ref())
}

/// A density matrix held in an eigenbasis for repeated exact evolution.
pub struct SpectralState<'a> {
    eig: &'a EigenSystem,
    rho_e: Mat<C>,
}

impl<'a> SpectralState<'a> {
    pub fn new(rho: &DensityMatrix, eig: &'a EigenSystem) -> Result<Self> {
        Ok(Self { eig, rho_e: eig.to_eigenbasis(rho)? })
    }

    pub fn eigenbasis_matrix(&self) -> MatRef<'_, C> {
        self.rho_e.as_ref()
    }

    pub fn at(&self, t: f64) -> Result<DensityMatrix> {
        let ph: Vec<C> = self.eig.values.iter().map(|e| C::from_polar(1.0, -e * t)).collect();
        let m = Mat::<C>::from_fn(self.rho_e.nrows(), self.rho_e.ncols(), |r, c| {
            self.rho_e[(r, c)] * ph[r] * ph[c].conj()
        });
        self.eig.from_eigenbasis(m.as_ref())
    }
}

/// An observable expressed in an eigenbasis, `V† O V`, for repeated
/// expectation values at many times.
#[derive(Clone, Debug)]
pub struct EigenObservable {
    pub matrix: Mat<C>,
}

/// `e^{-i E_k t}`.
pub fn phases(values: &[f64], t: f64) -> Vec<C> {
    values.iter().map(|e| C::from_polar(1.0, -e * t)).collect()
}

impl EigenObservable {
    pub fn new(eig: &EigenSystem, op: &Operator) -> Result<Self> {
        let d = eig.dim();
        if op.num_sites() != eig.num_sites() {
            return Err(Error::SiteMismatch { expected: eig.num_sites(), got: op.num_sites() });
        }
        let mut ov = Mat::<C>::zeros(d, d);
        let mut col = vec![C::new(0.0, 0.0); d];
        for (p, w) in op.terms() {
            for k in 0..d {
                for (r, x) in col.iter_mut().enumerate() {
                    *x = eig.vectors[(r, k)];
                }
                kernels::apply_pauli(&mut col, p);
                for (r, x) in col.iter().enumerate() {
                    ov[(r, k)] += w * x;
                }
            }
        }
        Ok(Self { matrix: eig.vectors.adjoint() * &ov })
    }

    /// `⟨ψ(t)|O|ψ(t)⟩` for eigenbasis coefficients `coeffs` of `ψ(0)`.
    pub fn pure(&self, coeffs: &[C], values: &[f64], t: f64) -> f64 {
        let psi: Vec<C> = coeffs.iter().zip(phases(values, t)).map(|(c, a)| c * a).collect();
        let d = psi.len();
        let mut acc = C::new(0.0, 0.0);
        for n in 0..d {
            let col = self.matrix.col(n);
            let mut s = C::new(0.0, 0.0);
            for m in 0..d {
                s += psi[m].conj() * col[m];
            }
            acc += s * psi[n];
        }
        acc.re
    }

    /// `tr(O ρ(t))` for `ρ` given in the eigenbasis.
    pub fn mixed(&self, rho_e: MatRef<'_, C>, values: &[f64], t: f64) -> f64 {
        let a = phases(values, t);
        let d = a.len();
        let mut acc = C::new(0.0, 0.0);
        for n in 0..d {
            let ocol = self.matrix.col(n);
            let mut s = C::new(0.0, 0.0);
            for m in 0..d {
                // O_mn ρ_nm(t), ρ_nm(t) = ρ_nm a_n ā_m
                s += ocol[m] * rho_e[(n, m)] * a[m].conj();
            }
            acc += s * a[n];
        }
        acc.re
    }
}
