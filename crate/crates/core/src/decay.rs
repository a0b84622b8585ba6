//! Spin-coherence decay law applied while the control field is off.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    Exponential,
    Gaussian,
    Combined,
}

/// Storage decay. The amplitude factor after `t` in the dark is
/// `exp(-gamma12 t)` (exponential), `exp(-t^2 / (2 tau0^2))` (gaussian, so the
/// efficiency follows `exp(-t^2 / tau0^2)`), or their product (combined).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayModel {
    pub kind: DecayKind,
    /// Gaussian coherence time, internal units.
    pub tau0: f64,
    /// Exponential dephasing rate, gamma13 units.
    pub gamma12: f64,
}

impl DecayModel {
    pub fn exponential(gamma12: f64) -> Self {
        DecayModel {
            kind: DecayKind::Exponential,
            tau0: f64::INFINITY,
            gamma12,
        }
    }

    pub fn gaussian(tau0: f64) -> Self {
        DecayModel {
            kind: DecayKind::Gaussian,
            tau0,
            gamma12: 0.0,
        }
    }

    pub fn combined(tau0: f64, gamma12: f64) -> Self {
        DecayModel {
            kind: DecayKind::Combined,
            tau0,
            gamma12,
        }
    }

    /// No decay at all in the dark.
    pub fn lossless() -> Self {
        DecayModel::exponential(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DecayKind::Gaussian | DecayKind::Combined if !(self.tau0 > 0.0) => {
                Err(Error::invalid("tau0", "must be positive for gaussian decay"))
            }
            DecayKind::Exponential | DecayKind::Combined if !(self.gamma12 >= 0.0) => {
                Err(Error::invalid("gamma12", "must be >= 0"))
            }
            _ => Ok(()),
        }
    }

    fn exp_rate(&self) -> f64 {
        match self.kind {
            DecayKind::Exponential | DecayKind::Combined => self.gamma12,
            DecayKind::Gaussian => 0.0,
        }
    }

    fn gauss_inv_tau2(&self) -> f64 {
        match self.kind {
            DecayKind::Gaussian | DecayKind::Combined => 1.0 / (self.tau0 * self.tau0),
            DecayKind::Exponential => 0.0,
        }
    }

    /// Amplitude multiplier after `elapsed` in the dark.
    pub fn amplitude_factor(&self, elapsed: f64) -> f64 {
        (-self.exp_rate() * elapsed - 0.5 * elapsed * elapsed * self.gauss_inv_tau2()).exp()
    }

    /// Instantaneous amplitude decay rate `-d ln(factor)/dt`; integrating it over
    /// `[0, t]` reproduces [`DecayModel::amplitude_factor`].
    pub fn rate_at(&self, elapsed: f64) -> f64 {
        self.exp_rate() + elapsed.max(0.0) * self.gauss_inv_tau2()
    }

    /// Efficiency multiplier, the square of the amplitude factor.
    pub fn efficiency_factor(&self, elapsed: f64) -> f64 {
        self.amplitude_factor(elapsed).powi(2)
    }
}

/// Multiply the spin coherence by the decay factor for `elapsed` time.
pub fn apply_storage_decay(spin: &[Complex64], elapsed: f64, decay: &DecayModel) -> Result<Vec<Complex64>> {
    if !(elapsed >= 0.0) {
        return Err(Error::invalid("elapsed", "must be >= 0"));
    }
    let f = decay.amplitude_factor(elapsed);
    Ok(spin.iter().map(|s| s * f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::us;

    #[test]
    fn identity_at_zero() {
        let s = vec![Complex64::new(0.3, -0.2); 4];
        let d = DecayModel::combined(2.0, 0.1);
        assert_eq!(apply_storage_decay(&s, 0.0, &d).unwrap(), s);
    }

    #[test]
    fn gaussian_efficiency_at_tau0() {
        let d = DecayModel::gaussian(5.0);
        assert!((d.efficiency_factor(5.0) - (-1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn gaussian_decay_at_2_2_us() {
        let d = DecayModel::gaussian(us(4.0));
        let m = d.efficiency_factor(us(2.2));
        assert!((m - (-0.3025f64).exp()).abs() < 1e-12);
        assert!((m - 0.739).abs() < 1e-3);
    }

    #[test]
    fn exponential_and_combined() {
        let e = DecayModel::exponential(0.1);
        assert!((e.amplitude_factor(3.0) - (-0.3f64).exp()).abs() < 1e-14);
        let c = DecayModel::combined(4.0, 0.1);
        let g = DecayModel::gaussian(4.0);
        assert!((c.amplitude_factor(3.0) - e.amplitude_factor(3.0) * g.amplitude_factor(3.0)).abs() < 1e-14);
    }

    #[test]
    fn rate_integrates_to_factor() {
        let d = DecayModel::combined(3.0, 0.05);
        let n = 10_000;
        let t = 4.0;
        let h = t / n as f64;
        let integral: f64 = (0..n).map(|i| d.rate_at((i as f64 + 0.5) * h) * h).sum();
        assert!(((-integral).exp() - d.amplitude_factor(t)).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(DecayModel::gaussian(0.0).validate().is_err());
        assert!(DecayModel::exponential(-1.0).validate().is_err());
        assert!(apply_storage_decay(&[], -1.0, &DecayModel::lossless()).is_err());
    }
}
