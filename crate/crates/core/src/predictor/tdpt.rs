use faer::{Mat, MatRef};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::Operator;
use crate::sim::{phases, DensityMatrix, EigenObservable, EigenSystem, StateVector};

/// Level spacings below this are treated as degenerate and take the
/// `(1 − e^{−itΔ})/Δ → it` limit.
pub const TDPT_DEGENERACY_TOL: f64 = 1e-10;

/// First-order Trotter error of an observable at one time, split into the
/// secular term (degenerate pairs, prefactor `τ² t`) and the bounded
/// off-diagonal term (prefactor `τ²`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdptPoint {
    pub t: f64,
    pub t1: f64,
    pub t2: f64,
}

impl TdptPoint {
    pub fn total(&self) -> f64 {
        self.t1 + self.t2
    }
}

/// `V` in the eigenbasis of `H`, split into `K_mn = V_mn/(E_m − E_n)` on
/// non-degenerate pairs and the sparse degenerate part.
pub struct TdptPlan {
    values: Vec<f64>,
    k: Mat<C>,
    /// `(m, n, V_mn)` with `|E_m − E_n| < TDPT_DEGENERACY_TOL`, diagonal included.
    degenerate: Vec<(usize, usize, C)>,
}

fn zero() -> C {
    C::new(0.0, 0.0)
}

fn check_times(times: &[f64], tau: f64) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) || !tau.is_finite() {
        return Err(Error::InvalidArgument("times and τ must be finite".into()));
    }
    Ok(())
}

impl TdptPlan {
    pub fn new(eig: &EigenSystem, v: &Operator) -> Result<Self> {
        let v_e = EigenObservable::new(eig, v)?.matrix;
        let e = &eig.values;
        let d = e.len();
        let mut degenerate = Vec::new();
        let k = Mat::<C>::from_fn(d, d, |m, n| {
            let gap = e[m] - e[n];
            if gap.abs() < TDPT_DEGENERACY_TOL {
                zero()
            } else {
                v_e[(m, n)] / gap
            }
        });
        for n in 0..d {
            // eigenvalues are sorted, so degenerate partners are adjacent
            let mut m = n;
            while m > 0 && e[n] - e[m - 1] < TDPT_DEGENERACY_TOL {
                m -= 1;
            }
            while m < d && e[m] - e[n] < TDPT_DEGENERACY_TOL {
                degenerate.push((m, n, v_e[(m, n)]));
                m += 1;
            }
        }
        Ok(Self { values: e.clone(), k, degenerate })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Number of degenerate off-diagonal pairs.
    pub fn degenerate_pairs(&self) -> usize {
        self.degenerate.iter().filter(|(m, n, _)| m != n).count()
    }

    fn check(&self, obs: &[EigenObservable]) -> Result<()> {
        if obs.iter().any(|o| o.matrix.nrows() != self.dim()) {
            return Err(Error::InvalidArgument("observable dimension does not match the eigensystem".into()));
        }
        Ok(())
    }

    /// Errors for a pure initial state with eigenbasis coefficients `coeffs`,
    /// indexed `[observable][time]`.
    pub fn pure(&self, coeffs: &[C], obs: &[EigenObservable], times: &[f64], tau: f64) -> Result<Vec<Vec<TdptPoint>>> {
        check_times(times, tau)?;
        self.check(obs)?;
        let d = self.dim();
        if coeffs.len() != d {
            return Err(Error::InvalidArgument("coefficient count mismatch".into()));
        }
        let tt = times.len();
        let a: Vec<Vec<C>> = times.iter().map(|&t| phases(&self.values, t)).collect();
        let psi = Mat::<C>::from_fn(d, tt, |r, i| coeffs[r] * a[i][r]);
        let k_psi = &self.k * &psi;
        let c = Mat::<C>::from_fn(d, 1, |r, _| coeffs[r]);
        let k_c = &self.k * &c;
        let mut kd_psi = Mat::<C>::zeros(d, tt);
        for &(m, n, v) in &self.degenerate {
            for i in 0..tt {
                kd_psi[(m, i)] += v * psi[(n, i)];
            }
        }
        let tau2 = tau * tau;
        obs.iter()
            .map(|o| {
                let w = &o.matrix * &psi;
                Ok((0..tt)
                    .map(|i| {
                        // K is anti-Hermitian and the degenerate block Hermitian
                        let (mut wkpsi, mut wkc, mut wkd) = (zero(), zero(), zero());
                        for r in 0..d {
                            let wr = w[(r, i)].conj();
                            wkpsi += wr * k_psi[(r, i)];
                            wkc += wr * a[i][r] * k_c[(r, 0)];
                            wkd += wr * kd_psi[(r, i)];
                        }
                        TdptPoint {
                            t: times[i],
                            t1: 2.0 * tau2 * times[i] * wkd.im,
                            t2: -2.0 * tau2 * (wkpsi.re - wkc.re),
                        }
                    })
                    .collect())
            })
            .collect()
    }

    /// Errors for a mixed initial state given in the eigenbasis, indexed
    /// `[observable][time]`.
    pub fn mixed(&self, rho_e: MatRef<'_, C>, obs: &[EigenObservable], times: &[f64], tau: f64) -> Result<Vec<Vec<TdptPoint>>> {
        check_times(times, tau)?;
        self.check(obs)?;
        let d = self.dim();
        if rho_e.nrows() != d || rho_e.ncols() != d {
            return Err(Error::InvalidArgument("density matrix dimension does not match the eigensystem".into()));
        }
        // [K, ρ0], shared by every observable
        let r = &self.k * rho_e - rho_e * &self.k;
        let r_t = r.transpose().to_owned();
        let tau2 = tau * tau;
        let a: Vec<Vec<C>> = times.iter().map(|&t| phases(&self.values, t)).collect();
        obs.iter()
            .map(|o| {
                let om = o.matrix.as_ref();
                let g = om * &self.k - &self.k * om;
                let mut g1 = Mat::<C>::zeros(d, d);
                for &(m, n, v) in &self.degenerate {
                    for i in 0..d {
                        g1[(i, n)] += om[(i, m)] * v;
                        g1[(m, i)] -= v * om[(n, i)];
                    }
                }
                Ok(a.iter()
                    .zip(times)
                    .map(|(a, &t)| {
                        // tr(ρ(t) G) with ρ_mn(t) = ρ_mn a_m ā_n, and tr(Ô [K, ρ0]) with Ô_mn = ā_m O_mn a_n
                        let (mut s_g, mut s_g1, mut s_r) = (zero(), zero(), zero());
                        for n in 0..d {
                            let (gc, g1c, oc, rc) = (g.col(n), g1.col(n), om.col(n), r_t.col(n));
                            let rho_row = rho_e.col(n);
                            let (mut x, mut y, mut z) = (zero(), zero(), zero());
                            for m in 0..d {
                                // ρ_nm = conj(ρ_mn) by hermiticity
                                let rho_nm = rho_row[m].conj();
                                x += rho_nm * a[m].conj() * gc[m];
                                y += rho_nm * a[m].conj() * g1c[m];
                                z += a[m].conj() * oc[m] * rc[m];
                            }
                            s_g += x * a[n];
                            s_g1 += y * a[n];
                            s_r += z * a[n];
                        }
                        TdptPoint {
                            t,
                            t1: (C::new(0.0, -tau2 * t) * s_g1).re,
                            t2: -tau2 * (s_g - s_r).re,
                        }
                    })
                    .collect())
            })
            .collect()
    }
}

/// First-order prediction of `⟨O⟩_{H+τ²V}(t) − ⟨O⟩_H(t)` from `ρ0` evolved
/// under the Hamiltonian whose eigensystem is `eig`.
pub fn tdpt_trotter_error(
    eig: &EigenSystem,
    v: &Operator,
    rho0: &DensityMatrix,
    o: &Operator,
    times: &[f64],
    tau: f64,
) -> Result<Vec<TdptPoint>> {
    let plan = TdptPlan::new(eig, v)?;
    let rho_e = eig.to_eigenbasis(rho0)?;
    let obs = EigenObservable::new(eig, o)?;
    Ok(plan.mixed(rho_e.as_ref(), std::slice::from_ref(&obs), times, tau)?.remove(0))
}

/// As [`tdpt_trotter_error`] for a pure state and several observables.
pub fn tdpt_trotter_error_pure(
    eig: &EigenSystem,
    v: &Operator,
    psi0: &StateVector,
    obs: &[Operator],
    times: &[f64],
    tau: f64,
) -> Result<Vec<Vec<TdptPoint>>> {
    let plan = TdptPlan::new(eig, v)?;
    let coeffs = eig.coefficients(psi0)?;
    let obs: Vec<EigenObservable> = obs.iter().map(|o| EigenObservable::new(eig, o)).collect::<Result<_>>()?;
    plan.pure(&coeffs, &obs, times, tau)
}
