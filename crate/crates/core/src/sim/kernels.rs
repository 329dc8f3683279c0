//! In-place statevector kernels. Site `j` is bit `j` of the amplitude index.

use num_complex::Complex64 as C;

use crate::pauli::PauliString;

const ZERO: C = C::new(0.0, 0.0);

/// Phase `ph(k)` with `P|k⟩ = ph(k) |k ^ x⟩`, i.e. `i^{#Y} (-1)^{|k & z|}`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PauliAction {
    pub x: usize,
    pub z: usize,
    base: C,
}

impl PauliAction {
    pub fn new(p: &PauliString) -> Self {
        let base = match p.y_count() % 4 {
            0 => C::new(1.0, 0.0),
            1 => C::new(0.0, 1.0),
            2 => C::new(-1.0, 0.0),
            _ => C::new(0.0, -1.0),
        };
        Self { x: p.x_mask() as usize, z: p.z_mask() as usize, base }
    }

    #[inline(always)]
    pub fn phase(&self, k: usize) -> C {
        if (k & self.z).count_ones() & 1 == 1 {
            -self.base
        } else {
            self.base
        }
    }
}

/// `ψ ← P ψ`.
pub(crate) fn apply_pauli(psi: &mut [C], p: &PauliString) {
    let act = PauliAction::new(p);
    if act.x == 0 {
        for (k, a) in psi.iter_mut().enumerate() {
            *a *= act.phase(k);
        }
        return;
    }
    let pivot = 1usize << (usize::BITS - 1 - act.x.leading_zeros());
    for k in 0..psi.len() {
        if k & pivot == 0 {
            let j = k ^ act.x;
            let (a, b) = (psi[k], psi[j]);
            psi[j] = act.phase(k) * a;
            psi[k] = act.phase(j) * b;
        }
    }
}

/// `ψ ← exp(-i θ P) ψ`.
pub(crate) fn pauli_rotation(psi: &mut [C], p: &PauliString, theta: f64) {
    if p.weight() == 2 {
        let sup = p.support();
        return two_site_rotation(psi, sup[0], sup[1], p, theta);
    }
    let act = PauliAction::new(p);
    let (s, c) = theta.sin_cos();
    let mis = C::new(0.0, -s);
    if act.x == 0 {
        // diagonal: phase e^{-iθ ph(k)} with ph = ±1
        let plus = C::new(c, -s);
        let minus = C::new(c, s);
        for (k, a) in psi.iter_mut().enumerate() {
            *a *= if act.phase(k).re > 0.0 { plus } else { minus };
        }
        return;
    }
    let pivot = 1usize << (usize::BITS - 1 - act.x.leading_zeros());
    let block = pivot << 1;
    let mut hi = 0;
    while hi < psi.len() {
        for k in hi..hi + pivot {
            let j = k ^ act.x;
            let (a, b) = (psi[k], psi[j]);
            psi[k] = a * c + mis * act.phase(j) * b;
            psi[j] = b * c + mis * act.phase(k) * a;
        }
        hi += block;
    }
}

/// Weight-two rotation on sites `a < b`, via groups of four amplitudes
/// `ψ'_l = c ψ_l - i s ph(l ^ x) ψ_{l ^ x}`.
fn two_site_rotation(psi: &mut [C], a: usize, b: usize, p: &PauliString, theta: f64) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the feature was detected at runtime.
        unsafe { two_site_rotation_avx2(psi, a, b, p, theta) };
        return;
    }
    two_site_rotation_impl(psi, a, b, p, theta);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn two_site_rotation_avx2(psi: &mut [C], a: usize, b: usize, p: &PauliString, theta: f64) {
    two_site_rotation_impl(psi, a, b, p, theta);
}

#[inline(always)]
fn two_site_rotation_impl(psi: &mut [C], a: usize, b: usize, p: &PauliString, theta: f64) {
    let act = PauliAction::new(p);
    let (s, c) = theta.sin_cos();
    let off: [usize; 4] = std::array::from_fn(|l| (l & 1) << a | (l >> 1) << b);
    let xloc = (act.x >> a & 1) | (act.x >> b & 1) << 1;
    let coef: [C; 4] = std::array::from_fn(|l| C::new(0.0, -s) * act.phase(off[l ^ xloc]));
    let (ba, bb) = (1usize << a, 1usize << b);
    for outer in (0..psi.len()).step_by(2 * bb) {
        for mid in (outer..outer + bb).step_by(2 * ba) {
            let chunk = &mut psi[mid..mid + off[3] + ba];
            for k in 0..ba {
                let v = [chunk[k], chunk[k + off[1]], chunk[k + off[2]], chunk[k + off[3]]];
                for l in 0..4 {
                    chunk[k + off[l]] = v[l] * c + coef[l] * v[l ^ xloc];
                }
            }
        }
    }
}

/// `ψ ← U ψ` for a 2×2 matrix `u[row][col]` acting on qubit `q`.
pub(crate) fn apply_1q(psi: &mut [C], q: usize, u: &[[C; 2]; 2]) {
    let bit = 1usize << q;
    let mut hi = 0;
    while hi < psi.len() {
        for k in hi..hi + bit {
            let (a, b) = (psi[k], psi[k | bit]);
            psi[k] = u[0][0] * a + u[0][1] * b;
            psi[k | bit] = u[1][0] * a + u[1][1] * b;
        }
        hi += bit << 1;
    }
}

/// `⟨ψ|P|ψ⟩`.
pub(crate) fn pauli_expectation(psi: &[C], p: &PauliString) -> C {
    let act = PauliAction::new(p);
    let mut acc = ZERO;
    for (k, a) in psi.iter().enumerate() {
        // (Pψ)(k ^ x) = ph(k) ψ(k)
        acc += psi[k ^ act.x].conj() * act.phase(k) * a;
    }
    acc
}

/// Bloch vector of qubit `q`.
pub(crate) fn bloch(psi: &[C], q: usize) -> [f64; 3] {
    let bit = 1usize << q;
    let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
    let mut hi = 0;
    while hi < psi.len() {
        for k in hi..hi + bit {
            let (a, b) = (psi[k], psi[k | bit]);
            let cross = a.conj() * b;
            x += cross.re;
            y += cross.im;
            z += a.norm_sqr() - b.norm_sqr();
        }
        hi += bit << 1;
    }
    [2.0 * x, 2.0 * y, z]
}

/// Matrix of `exp(-i θ n·σ)`.
pub(crate) fn rotation_matrix(axis: [f64; 3], theta: f64) -> [[C; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let [nx, ny, nz] = axis;
    // c I - i s (nx X + ny Y + nz Z)
    [
        [C::new(c, -s * nz), C::new(-s * ny, -s * nx)],
        [C::new(s * ny, -s * nx), C::new(c, s * nz)],
    ]
}
