//! Mixed states in the Pauli basis: `ρ = 2^{-N} Σ_P c_P P` with real
//! `c_P = tr(ρP)`. Unitaries act as real orthogonal maps on the coefficient
//! vector and Pauli channels are diagonal, so noisy circuits evolve with
//! real arithmetic on `4^N` numbers.
//!
//! Site `j` owns bits `2j` (X part) and `2j + 1` (Z part) of the index, so
//! the per-site codes are I = 0, X = 1, Z = 2, Y = 3.

use num_complex::Complex64 as C;

use super::density::DensityMatrix;
use super::gates::{kron, pauli_matrix, M2, M4};
use super::kernels::PauliAction;
use super::rdm::OneRdm;
use crate::error::{Error, Result};
use crate::pauli::{Operator, Pauli, PauliString};
use crate::trotter::PauliChannel;

/// 4^13 coefficients take 512 MiB.
pub const MAX_PAULI_DENSITY_SITES: usize = 13;

const CODES: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::Y];

fn code(p: Pauli) -> usize {
    match p {
        Pauli::I => 0,
        Pauli::X => 1,
        Pauli::Z => 2,
        Pauli::Y => 3,
    }
}

/// Coefficient index of a Pauli string.
pub(crate) fn pauli_index(p: &PauliString) -> usize {
    (0..p.num_sites()).map(|j| code(p.get(j)) << (2 * j)).sum()
}

fn index_to_string(n: usize, idx: usize) -> PauliString {
    let letters: Vec<_> = (0..n).map(|j| (j, CODES[(idx >> (2 * j)) & 3])).collect();
    PauliString::from_sites(n, &letters).expect("n checked by caller")
}

fn trace_prod(a: &[[C; 4]; 4], b: &[[C; 4]; 4]) -> C {
    let mut t = C::new(0.0, 0.0);
    for i in 0..4 {
        for k in 0..4 {
            t += a[i][k] * b[k][i];
        }
    }
    t
}

/// Pauli transfer matrix `R_ij = ¼ tr(P_i U P_j U†)` of a two-qubit unitary,
/// local index `code_lo | code_hi << 2`.
pub(crate) fn ptm2(u: &M4) -> [[f64; 16]; 16] {
    let basis: Vec<M4> = (0..16)
        .map(|l| kron(&pauli_matrix(CODES[l & 3]), &pauli_matrix(CODES[l >> 2])))
        .collect();
    let ud = super::gates::adjoint4(u);
    let mut r = [[0.0; 16]; 16];
    for j in 0..16 {
        let upu = super::gates::mul4(&super::gates::mul4(u, &basis[j]), &ud);
        for i in 0..16 {
            r[i][j] = 0.25 * trace_prod(&basis[i], &upu).re;
        }
    }
    r
}

/// Pauli transfer matrix of a single-qubit unitary, indexed by site codes.
pub(crate) fn ptm1(u: &M2) -> [[f64; 4]; 4] {
    let id = super::gates::identity2();
    let big = ptm2(&kron(u, &id));
    let mut r = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = big[i][j];
        }
    }
    r
}

fn letters_anticommute(a: Pauli, b: Pauli) -> bool {
    a != Pauli::I && b != Pauli::I && a != b
}

/// Diagonal of a two-site Pauli channel in the local Pauli basis.
pub(crate) fn channel_factors(ch: &PauliChannel) -> [f64; 16] {
    let mut f = [0.0; 16];
    for (l, fl) in f.iter_mut().enumerate() {
        let r = [CODES[l & 3], CODES[l >> 2]];
        for b in &ch.branches {
            let anti = (0..2).filter(|&k| letters_anticommute(r[k], b.paulis[k])).count();
            *fl += if anti % 2 == 0 { b.prob } else { -b.prob };
        }
    }
    f
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliDensity {
    n: usize,
    c: Vec<f64>,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_PAULI_DENSITY_SITES {
        return Err(Error::InvalidArgument(format!(
            "Pauli-basis state needs 1..={MAX_PAULI_DENSITY_SITES} sites, got {n}"
        )));
    }
    Ok(())
}

fn product_into(out: &mut Vec<f64>, blochs: &[[f64; 3]]) {
    out.clear();
    out.push(1.0);
    for &[x, y, z] in blochs {
        let len = out.len();
        out.resize(4 * len, 0.0);
        for (k, w) in [x, z, y].into_iter().enumerate() {
            let (head, tail) = out.split_at_mut(len);
            for (dst, src) in tail[k * len..(k + 1) * len].iter_mut().zip(head.iter()) {
                *dst = src * w;
            }
        }
    }
}

impl PauliDensity {
    /// Product of single-site states with the given Bloch vectors (length ≤ 1).
    pub fn product(blochs: &[[f64; 3]]) -> Result<Self> {
        Self::mixture(std::slice::from_ref(&blochs.to_vec()))
    }

    /// Equal-weight mixture of product states.
    pub fn mixture(configs: &[Vec<[f64; 3]>]) -> Result<Self> {
        let first = configs.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let n = first.len();
        check_size(n)?;
        let w = 1.0 / configs.len() as f64;
        let mut c = vec![0.0; 1 << (2 * n)];
        let mut buf = Vec::with_capacity(c.len());
        for cfg in configs {
            if cfg.len() != n {
                return Err(Error::SiteMismatch { expected: n, got: cfg.len() });
            }
            if cfg.iter().any(|b| b.iter().map(|v| v * v).sum::<f64>() > 1.0 + 1e-9) {
                return Err(Error::InvalidArgument("Bloch vector longer than one".into()));
            }
            product_into(&mut buf, cfg);
            c.iter_mut().zip(&buf).for_each(|(a, b)| *a += w * b);
        }
        Ok(Self { n, c })
    }

    pub fn from_density_matrix(rho: &DensityMatrix) -> Result<Self> {
        let n = rho.num_sites();
        check_size(n)?;
        let c = (0..1usize << (2 * n))
            .map(|idx| rho.pauli_expectation(&index_to_string(n, idx)))
            .collect::<Result<_>>()?;
        Ok(Self { n, c })
    }

    /// Dense form; cost `O(8^N)`, meant for small registers.
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        let d = 1usize << self.n;
        let mut m = faer::Mat::<C>::zeros(d, d);
        let scale = 1.0 / d as f64;
        for (idx, &cp) in self.c.iter().enumerate() {
            if cp == 0.0 {
                continue;
            }
            let act = PauliAction::new(&index_to_string(self.n, idx));
            for k in 0..d {
                // P|k> = ph(k)|k^x>
                m[(k ^ act.x, k)] += act.phase(k) * (cp * scale);
            }
        }
        DensityMatrix::from_mat(m.as_ref())
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    pub fn trace(&self) -> f64 {
        self.c[0]
    }

    pub fn purity(&self) -> f64 {
        self.c.iter().map(|v| v * v).sum::<f64>() / (1u64 << self.n) as f64
    }

    pub fn pauli_expectation(&self, p: &PauliString) -> Result<f64> {
        if p.num_sites() != self.n {
            return Err(Error::SiteMismatch { expected: self.n, got: p.num_sites() });
        }
        Ok(self.c[pauli_index(p)])
    }

    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if op.num_sites() != self.n {
            return Err(Error::SiteMismatch { expected: self.n, got: op.num_sites() });
        }
        Ok(op.real_terms().map(|(p, w)| w * self.c[pauli_index(&p)]).sum())
    }

    pub fn one_rdm(&self, site: usize) -> OneRdm {
        assert!(site < self.n, "site {site} out of range");
        let at = |code: usize| self.c[code << (2 * site)];
        OneRdm::new([at(1), at(3), at(2)])
    }

    pub fn one_rdms(&self) -> Vec<OneRdm> {
        (0..self.n).map(|j| self.one_rdm(j)).collect()
    }

    pub fn site_averaged_rdm(&self) -> OneRdm {
        OneRdm::average(&self.one_rdms()).expect("at least one site")
    }

    /// Single-qubit unitary on `site`.
    pub fn apply_1q(&mut self, site: usize, u: &M2) {
        let r = ptm1(u);
        let stride = 1usize << (2 * site);
        let block = stride << 2;
        for base in (0..self.c.len()).step_by(block) {
            for k in base..base + stride {
                let v = [self.c[k], self.c[k + stride], self.c[k + 2 * stride], self.c[k + 3 * stride]];
                for i in 1..4 {
                    self.c[k + i * stride] = r[i][1] * v[1] + r[i][2] * v[2] + r[i][3] * v[3];
                }
            }
        }
    }

    /// Two-qubit unitary `u` on sites `lo < hi` (local index `q_lo | q_hi << 1`),
    /// followed by an optional Pauli channel on the same pair.
    pub fn apply_2q(&mut self, sites: [usize; 2], u: &M4, channel: Option<&PauliChannel>) {
        let [lo, hi] = sites;
        assert!(lo < hi && hi < self.n, "bad site pair {sites:?}");
        let mut r = ptm2(u);
        if let Some(ch) = channel {
            let f = channel_factors(ch);
            for (row, fi) in r.iter_mut().zip(f) {
                row.iter_mut().for_each(|x| *x *= fi);
            }
        }
        apply_block16(&mut self.c, lo, hi, &r);
    }

    /// Two-site Pauli channel without a gate.
    pub fn apply_channel(&mut self, sites: [usize; 2], channel: &PauliChannel) {
        let [lo, hi] = sites;
        let f = channel_factors(channel);
        let (slo, shi) = (2 * lo, 2 * hi);
        for (idx, v) in self.c.iter_mut().enumerate() {
            *v *= f[((idx >> slo) & 3) | (((idx >> shi) & 3) << 2)];
        }
    }
}

/// `c ← R c` on the 16-dimensional local space of sites `lo < hi`. The
/// identity row and column are left alone since every map here is unital
/// and trace preserving.
fn apply_block16(c: &mut [f64], lo: usize, hi: usize, r: &[[f64; 16]; 16]) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the feature was detected at runtime.
        unsafe { block16_avx2(c, lo, hi, r) };
        return;
    }
    block16(c, lo, hi, r);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn block16_avx2(c: &mut [f64], lo: usize, hi: usize, r: &[[f64; 16]; 16]) {
    block16(c, lo, hi, r);
}

#[inline(always)]
fn block16(c: &mut [f64], lo: usize, hi: usize, r: &[[f64; 16]; 16]) {
    let s_lo = 1usize << (2 * lo);
    let s_hi = 1usize << (2 * hi);
    let off: [usize; 16] = std::array::from_fn(|l| (l & 3) * s_lo + (l >> 2) * s_hi);
    let len = c.len();
    assert!(off[15] < s_hi << 2 && len % (s_hi << 2) == 0);
    let ptr = c.as_mut_ptr();
    for outer in (0..len).step_by(4 * s_hi) {
        for mid in (outer..outer + s_hi).step_by(4 * s_lo) {
            // SAFETY: each k has zero bits in both site fields, so k + off[l]
            // stays inside the current outer block, which lies inside `c`.
            unsafe {
                if s_lo >= 4 {
                    for k in (mid..mid + s_lo).step_by(4) {
                        lanes::<4>(ptr, k, &off, r);
                    }
                } else {
                    lanes::<1>(ptr, mid, &off, r);
                }
            }
        }
    }
}

/// Applies the block map to `L` consecutive base indices at once.
#[inline(always)]
unsafe fn lanes<const L: usize>(ptr: *mut f64, k: usize, off: &[usize; 16], r: &[[f64; 16]; 16]) {
    let mut v = [[0.0f64; L]; 16];
    for l in 1..16 {
        for q in 0..L {
            v[l][q] = *ptr.add(k + off[l] + q);
        }
    }
    for i in 1..16 {
        let mut acc = [0.0f64; L];
        for j in 1..16 {
            let rij = r[i][j];
            for q in 0..L {
                acc[q] += rij * v[j][q];
            }
        }
        for q in 0..L {
            *ptr.add(k + off[i] + q) = acc[q];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::gates::{one_qubit_unitary, two_qubit_unitary};
    use crate::sim::state::StateVector;
    use crate::trotter::{variant_channels, ChannelKind, Gate, GateKind};

    fn dm_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
        let d = a.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                worst = worst.max((a.get(r, c) - b.get(r, c)).norm());
            }
        }
        worst
    }

    fn sample_state() -> StateVector {
        StateVector::product(&[[0.6, 0.0, 0.8], [0.0, 1.0, 0.0], [0.0, 0.6, -0.8], [1.0, 0.0, 0.0]]).unwrap()
    }

    #[test]
    fn round_trip_through_dense() {
        let rho = DensityMatrix::from_pure(&sample_state()).unwrap();
        let p = PauliDensity::from_density_matrix(&rho).unwrap();
        assert!((p.trace() - 1.0).abs() < 1e-14);
        assert!((p.purity() - 1.0).abs() < 1e-13);
        assert!(dm_distance(&p.to_density_matrix().unwrap(), &rho) < 1e-14);
        let q = PauliDensity::product(&[[0.6, 0.0, 0.8], [0.0, 1.0, 0.0], [0.0, 0.6, -0.8], [1.0, 0.0, 0.0]]).unwrap();
        assert!(q.c.iter().zip(&p.c).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn gates_and_channels_match_dense_kraus() {
        let psi = sample_state();
        let mut dense = DensityMatrix::from_pure(&psi).unwrap();
        let mut pd = PauliDensity::from_density_matrix(&dense).unwrap();
        let gates = [
            Gate { kind: GateKind::Rotation1q { axis: [0.48, 0.6, 0.64] }, sites: vec![2], angle: 0.9, layer: 0, step: 0 },
            Gate { kind: GateKind::Rotation2q { paulis: [Pauli::X, Pauli::Y] }, sites: vec![1, 3], angle: -0.4, layer: 0, step: 0 },
            Gate { kind: GateKind::East, sites: vec![3, 0], angle: 0.3, layer: 0, step: 0 },
        ];
        for (k, g) in gates.iter().enumerate() {
            dense.apply_gate(g).unwrap();
            if let Some(u) = one_qubit_unitary(g) {
                pd.apply_1q(g.sites[0], &u);
                continue;
            }
            let (sites, u) = two_qubit_unitary(g, 4).unwrap();
            let kind = [ChannelKind::Depolarizing, ChannelKind::PhaseFlip][k % 2];
            let ch = variant_channels(kind, 0.2).unwrap();
            dense.apply_pauli_channel(sites, &ch).unwrap();
            pd.apply_2q(sites, &u, Some(&ch));
        }
        assert!(dm_distance(&pd.to_density_matrix().unwrap(), &dense) < 1e-13);
        for j in 0..4 {
            assert!(pd.one_rdm(j).trace_distance(&dense.one_rdm(j)) < 1e-13);
        }
    }

    #[test]
    fn bare_channel_matches_gate_path() {
        let mut a = PauliDensity::from_density_matrix(&DensityMatrix::from_pure(&sample_state()).unwrap()).unwrap();
        let mut b = a.clone();
        let ch = variant_channels(ChannelKind::BitFlip, 0.1).unwrap();
        a.apply_channel([0, 2], &ch);
        b.apply_2q([0, 2], &crate::sim::gates::identity4(), Some(&ch));
        assert!(a.c.iter().zip(&b.c).all(|(x, y)| (x - y).abs() < 1e-14));
    }
}
