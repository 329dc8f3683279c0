use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `((1 − p)^{N₂Q}, p N₂Q)`: fidelity suppression of a circuit with `n2q`
/// two-qubit gates of error `p`, and the small-`p` relative observable error.
pub fn naive_estimate(p: f64, n2q: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&p) || !(n2q >= 0.0) {
        return Err(Error::InvalidArgument(format!("need 0 <= p < 1 and n2q >= 0, got p={p}, n2q={n2q}")));
    }
    Ok(((1.0 - p).powf(n2q), p * n2q))
}

/// Data range a fit was made on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub tau_min: f64,
    pub tau_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

/// Constants of the error model `S p0 t/τ + S p1 t + C τ²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorFit {
    /// Observable error per unit of accumulated gate error.
    pub s: f64,
    /// Trotter error coefficient.
    pub c: f64,
    pub p0: f64,
    pub p1: f64,
    pub window: Option<FitWindow>,
    /// `model − measured` per fitted point.
    #[serde(default)]
    pub residuals: Vec<f64>,
    /// `(model − measured)/measured` per fitted point.
    #[serde(default)]
    pub relative_residuals: Vec<f64>,
}

impl ErrorFit {
    pub fn new(s: f64, c: f64, p0: f64, p1: f64) -> Self {
        Self { s, c, p0, p1, window: None, residuals: Vec::new(), relative_residuals: Vec::new() }
    }

    pub fn max_relative_residual(&self) -> f64 {
        self.relative_residuals.iter().fold(0.0, |a, r| a.max(r.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPrediction {
    pub error: f64,
    /// `S (p0 t/τ + p1 t)`.
    pub gate_term: f64,
    /// `C τ²`.
    pub trotter_term: f64,
    /// False outside the small-error, small-step regime where the model is
    /// expected to hold (gate term ≥ 0.1 or τ > 0.25).
    pub valid: bool,
}

/// Gate-error exposure `p0 t/τ + p1 t`, the regressor multiplying `S`.
fn exposure(t: f64, tau: f64, p0: f64, p1: f64) -> f64 {
    p0 * t / tau + p1 * t
}

pub fn error_model(t: f64, tau: f64, fit: &ErrorFit) -> Result<ErrorPrediction> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("Trotter step must be positive, got {tau}")));
    }
    let gate_term = fit.s * exposure(t, tau, fit.p0, fit.p1);
    let trotter_term = fit.c * tau * tau;
    Ok(ErrorPrediction {
        error: gate_term + trotter_term,
        gate_term,
        trotter_term,
        valid: gate_term < 0.1 && tau <= 0.25,
    })
}

/// Least-squares `(S, C)` for measured errors `(t, τ, error)` with known
/// `p0, p1`. A negative coefficient is clamped to zero and the other refit.
pub fn fit_error_model(samples: &[(f64, f64, f64)], p0: f64, p1: f64) -> Result<ErrorFit> {
    let mut taus: Vec<f64> = samples.iter().map(|s| s.1).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    if taus.len() < 2 {
        return Err(Error::InvalidArgument("fit needs at least two distinct Trotter steps".into()));
    }
    if samples.iter().any(|&(t, tau, e)| !(tau > 0.0) || !t.is_finite() || !e.is_finite()) {
        return Err(Error::InvalidArgument("fit data must be finite with τ > 0".into()));
    }
    let rows: Vec<(f64, f64, f64)> = samples.iter().map(|&(t, tau, e)| (exposure(t, tau, p0, p1), tau * tau, e)).collect();
    let (mut saa, mut sab, mut sbb, mut say, mut sby) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, b, y) in &rows {
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        say += a * y;
        sby += b * y;
    }
    let det = saa * sbb - sab * sab;
    if det.abs() <= 1e-12 * saa * sbb {
        return Err(Error::InvalidArgument("fit design is rank deficient".into()));
    }
    let (mut s, mut c) = ((say * sbb - sby * sab) / det, (sby * saa - say * sab) / det);
    if s < 0.0 || c < 0.0 {
        let only_c = (0.0, (sby / sbb).max(0.0));
        let only_s = ((say / saa).max(0.0), 0.0);
        let sse = |(s, c): (f64, f64)| rows.iter().map(|&(a, b, y)| (s * a + c * b - y).powi(2)).sum::<f64>();
        (s, c) = if sse(only_c) <= sse(only_s) { only_c } else { only_s };
    }
    let residuals: Vec<f64> = rows.iter().map(|&(a, b, y)| s * a + c * b - y).collect();
    let relative_residuals = residuals.iter().zip(&rows).map(|(r, &(_, _, y))| r / y).collect();
    let ts = samples.iter().map(|s| s.0);
    Ok(ErrorFit {
        s,
        c,
        p0,
        p1,
        window: Some(FitWindow {
            tau_min: taus[0],
            tau_max: *taus.last().expect("non-empty"),
            t_min: ts.clone().fold(f64::INFINITY, f64::min),
            t_max: ts.fold(f64::NEG_INFINITY, f64::max),
        }),
        residuals,
        relative_residuals,
    })
}

/// `τ* = (S p0 t / 2C)^{1/3}` and the model error there.
pub fn optimal_tau(fit: &ErrorFit, t: f64) -> Result<(f64, f64)> {
    if !(fit.c > 0.0) || !(fit.p0 > 0.0) || !(fit.s > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidArgument("optimal step needs S, C, p0, t > 0".into()));
    }
    let tau = (fit.s * fit.p0 * t / (2.0 * fit.c)).cbrt();
    Ok((tau, error_model(t, tau, fit)?.error))
}

/// Energy decay rate `γ = 3(2z − 1)λ/τ` of the XY model under depolarizing
/// noise, `z` being the coordination number.
pub fn xy_decay_rate(z: f64, lambda: f64, tau: f64) -> Result<f64> {
    if !(z >= 1.0) || !(tau > 0.0) || !(lambda >= 0.0) {
        return Err(Error::InvalidArgument("need z >= 1, λ >= 0, τ > 0".into()));
    }
    Ok(3.0 * (2.0 * z - 1.0) * lambda / tau)
}

pub fn xy_energy(t: f64, e0: f64, gamma: f64) -> f64 {
    e0 * (-gamma * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_fit() -> ErrorFit {
        ErrorFit::new(0.7661, 0.0979, 3.5e-4, 9.6e-4)
    }

    #[test]
    fn naive_cases() {
        assert_eq!(naive_estimate(0.0, 5700.0).unwrap(), (1.0, 0.0));
        let (f, e) = naive_estimate(1e-3, 5700.0).unwrap();
        assert!((f - 0.003_336_436_7).abs() < 1e-10, "{f}");
        assert!((f - 0.00335).abs() < 2e-5);
        assert!((e - 5.7).abs() < 1e-12);
        assert!(naive_estimate(1.0, 1.0).is_err());
    }

    #[test]
    fn model_value() {
        let p = error_model(4.0, 0.2, &reference_fit()).unwrap();
        assert!((p.gate_term - (0.7661 * 3.5e-4 * 20.0 + 0.7661 * 9.6e-4 * 4.0)).abs() < 1e-15);
        assert!((p.error - 0.012_220_524).abs() < 1e-12, "{}", p.error);
        assert!(p.valid);
        let pure = error_model(4.0, 0.2, &ErrorFit::new(0.7661, 0.0979, 0.0, 0.0)).unwrap();
        assert!((pure.error - 0.0979 * 0.04).abs() < 1e-16);
        assert!(!error_model(4.0, 0.3, &reference_fit()).unwrap().valid);
    }

    #[test]
    fn slope_only_noise_is_step_independent() {
        let f = ErrorFit::new(0.7661, 0.0, 0.0, 9.6e-4);
        let a = error_model(4.0, 0.05, &f).unwrap().gate_term;
        let b = error_model(4.0, 0.2, &f).unwrap().gate_term;
        assert!((a - b).abs() < 1e-16);
    }

    #[test]
    fn fit_round_trip_and_errors() {
        let truth = reference_fit();
        let mut data = Vec::new();
        for &tau in &[0.05, 0.1, 0.15, 0.2, 0.25] {
            for &t in &[2.0, 4.0] {
                data.push((t, tau, error_model(t, tau, &truth).unwrap().error));
            }
        }
        let f = fit_error_model(&data, truth.p0, truth.p1).unwrap();
        assert!((f.s - truth.s).abs() < 1e-6 && (f.c - truth.c).abs() < 1e-6);
        assert!(f.max_relative_residual() < 1e-9);
        let single: Vec<_> = data.iter().copied().filter(|d| d.1 == 0.1).collect();
        assert!(fit_error_model(&single, truth.p0, truth.p1).is_err());
    }

    #[test]
    fn negative_coefficients_are_clamped() {
        // errors decreasing with τ only: the Trotter coefficient would be negative
        let data = [(4.0, 0.1, 0.02), (4.0, 0.2, 0.01), (4.0, 0.3, 0.006)];
        let f = fit_error_model(&data, 3.5e-4, 0.0).unwrap();
        assert!(f.s >= 0.0 && f.c == 0.0);
    }

    #[test]
    fn optimal_step_values() {
        let (tau, err) = optimal_tau(&reference_fit(), 4.0).unwrap();
        assert!((tau - 0.176_28).abs() < 1e-4, "{tau}");
        assert!(err > 0.0);
        let (small, _) = optimal_tau(&reference_fit(), 1e-9).unwrap();
        assert!(small < 1e-3);
        assert!(optimal_tau(&ErrorFit::new(1.0, 0.0, 1e-3, 0.0), 1.0).is_err());
    }

    #[test]
    fn xy_rates() {
        assert!((xy_decay_rate(4.0, 1e-3, 0.1).unwrap() - 0.21).abs() < 1e-14);
        assert!((xy_decay_rate(4.0, 2e-3, 0.5).unwrap() - 21.0 * 2e-3 / 0.5).abs() < 1e-14);
        assert_eq!(xy_decay_rate(4.0, 0.0, 0.1).unwrap(), 0.0);
        assert_eq!(xy_energy(7.0, 32.0, 0.0), 32.0);
    }

    #[test]
    fn optimal_error_scales_as_two_thirds_power() {
        let at = |p0: f64| optimal_tau(&ErrorFit::new(0.7661, 0.0979, p0, 0.0), 4.0).unwrap().1;
        let slope = (at(1e-3) / at(1e-4)).log10();
        assert!((slope - 2.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn optimal_tau_is_the_scan_argmin(s in 0.1f64..2.0, c in 0.01f64..0.5, p0 in 1e-4f64..1e-3, t in 0.5f64..10.0) {
            let fit = ErrorFit::new(s, c, p0, 9.5e-4);
            let (tau, best) = optimal_tau(&fit, t).unwrap();
            let mut scan = (0.0, f64::INFINITY);
            for k in 1..=20_000 {
                let x = k as f64 * 1e-4;
                let e = error_model(t, x, &fit).unwrap().error;
                if e < scan.1 { scan = (x, e); }
            }
            prop_assert!((scan.0 - tau).abs() <= 1e-4);
            prop_assert!(best <= scan.1 + 1e-15);
        }

        #[test]
        fn error_grows_with_time(t in 0.0f64..10.0, dt in 0.0f64..5.0, tau in 0.01f64..0.4) {
            let fit = ErrorFit::new(0.7661, 0.0979, 3.5e-4, 9.5e-4);
            prop_assert!(error_model(t + dt, tau, &fit).unwrap().error >= error_model(t, tau, &fit).unwrap().error);
        }
    }
}
