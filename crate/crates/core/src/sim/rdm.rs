use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

/// Single-site reduced density matrix `(I + b·σ)/2`, stored as its Bloch
/// vector `b`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OneRdm {
    pub bloch: [f64; 3],
}

impl OneRdm {
    pub fn new(bloch: [f64; 3]) -> Self {
        Self { bloch }
    }

    /// The maximally mixed state.
    pub fn mixed() -> Self {
        Self::default()
    }

    pub fn matrix(&self) -> [[C; 2]; 2] {
        let [x, y, z] = self.bloch;
        [
            [C::new(0.5 * (1.0 + z), 0.0), C::new(0.5 * x, -0.5 * y)],
            [C::new(0.5 * x, 0.5 * y), C::new(0.5 * (1.0 - z), 0.0)],
        ]
    }

    /// Trace distance `½‖ρ - σ‖₁`, which is half the Bloch-vector distance.
    pub fn trace_distance(&self, other: &OneRdm) -> f64 {
        let d: f64 = (0..3).map(|k| (self.bloch[k] - other.bloch[k]).powi(2)).sum();
        0.5 * d.sqrt()
    }

    pub fn purity(&self) -> f64 {
        0.5 * (1.0 + self.bloch.iter().map(|b| b * b).sum::<f64>())
    }

    /// Entrywise mean; `None` for an empty input.
    pub fn average<'a>(rdms: impl IntoIterator<Item = &'a OneRdm>) -> Option<OneRdm> {
        let mut acc = [0.0; 3];
        let mut count = 0usize;
        for r in rdms {
            for k in 0..3 {
                acc[k] += r.bloch[k];
            }
            count += 1;
        }
        (count > 0).then(|| OneRdm::new(acc.map(|a| a / count as f64)))
    }
}

/// Site-averaged trace distance `(1/N) Σ_j D_tr(ρ_j, σ_j)`.
pub fn mean_trace_distance(a: &[OneRdm], b: &[OneRdm]) -> f64 {
    assert_eq!(a.len(), b.len(), "site counts differ");
    a.iter().zip(b).map(|(x, y)| x.trace_distance(y)).sum::<f64>() / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_distance_of_orthogonal_states_is_one() {
        let up = OneRdm::new([0.0, 0.0, 1.0]);
        let down = OneRdm::new([0.0, 0.0, -1.0]);
        assert!((up.trace_distance(&down) - 1.0).abs() < 1e-15);
        assert!((up.trace_distance(&OneRdm::mixed()) - 0.5).abs() < 1e-15);
        assert!((up.purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_distance_matches_eigenvalues() {
        // D = ½ Σ|λ_k| of the traceless Hermitian difference
        let a = OneRdm::new([0.3, -0.2, 0.5]);
        let b = OneRdm::new([-0.1, 0.4, 0.2]);
        let (ma, mb) = (a.matrix(), b.matrix());
        let d00 = (ma[0][0] - mb[0][0]).re;
        let d01 = ma[0][1] - mb[0][1];
        let lam = (d00 * d00 + d01.norm_sqr()).sqrt();
        assert!((a.trace_distance(&b) - lam).abs() < 1e-15);
    }
}
