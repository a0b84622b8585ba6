use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::{C0, GAMMA13_SI};

/// Atomic-ensemble parameters of the memory. Rates are in units of gamma13.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    /// Resonant optical depth, `g^2 N L / (gamma13 c0)`.
    pub od: f64,
    /// Ensemble length in meters.
    pub length: f64,
    /// Always 1 in internal units.
    pub gamma13: f64,
    /// Intrinsic ground-state dephasing.
    pub gamma12: f64,
    /// Excited-state hyperfine splitting |5> - |3>.
    pub delta_s: f64,
    /// Clebsch-Gordan ratio of the off-resonant |2> -> |5> coupling.
    pub beta: f64,
    /// Vacuum light speed in m/s.
    pub c0: f64,
}

/// 85Rb D1 excited-state hyperfine splitting, 2 pi x 361.6 MHz, in gamma13 units.
pub fn rb85_d1_splitting() -> f64 {
    2.0 * PI * 361.6e6 / GAMMA13_SI
}

impl EnsembleParams {
    /// The 2.8 cm memory ensemble at optical depth `od`.
    pub fn memory(od: f64, gamma12: f64) -> Self {
        EnsembleParams {
            od,
            length: 0.028,
            gamma13: 1.0,
            gamma12,
            delta_s: rb85_d1_splitting(),
            beta: (37.0f64 / 50.0).sqrt(),
            c0: C0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.od >= 0.0) || !self.od.is_finite() {
            return Err(Error::invalid("od", format!("must be >= 0, got {}", self.od)));
        }
        if !(self.length > 0.0) {
            return Err(Error::invalid("length", "must be positive"));
        }
        if self.gamma13 != 1.0 {
            return Err(Error::invalid("gamma13", "internal units require gamma13 = 1"));
        }
        if !(self.gamma12 >= 0.0) {
            return Err(Error::invalid("gamma12", "must be >= 0"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta", "must lie in (0, 1]"));
        }
        if !(self.delta_s > 0.0) {
            return Err(Error::invalid("delta_s", "must be positive"));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::invalid("c0", "must be positive"));
        }
        Ok(())
    }

    pub fn with_od(self, od: f64) -> Self {
        EnsembleParams { od, ..self }
    }

    pub fn with_gamma12(self, gamma12: f64) -> Self {
        EnsembleParams { gamma12, ..self }
    }

    /// Vacuum transit time `L / c0` in internal units.
    pub fn transit_time(&self) -> f64 {
        self.length / self.c0 * GAMMA13_SI
    }

    /// Slow-light group delay `2 OD gamma13 / Omega^2` at constant control.
    pub fn group_delay(&self, omega_c: f64) -> f64 {
        2.0 * self.od * self.gamma13 / (omega_c * omega_c)
    }
}
