//! Internal unit conventions.
//!
//! Every rate (Rabi frequencies, dephasing, detunings) is expressed in units of
//! the excited-state dipole relaxation rate gamma13, and every time in units of
//! 1/gamma13. SI values only appear at I/O boundaries.

use std::f64::consts::PI;

/// gamma13 in rad/s: 2 pi x 3.0 MHz.
pub const GAMMA13_SI: f64 = 2.0 * PI * 3.0e6;

/// Vacuum light speed in m/s.
pub const C0: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// Seconds per internal time unit.
    pub time_unit: f64,
    /// Internal rate unit in rad/s.
    pub rate_unit: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem {
            time_unit: 1.0 / GAMMA13_SI,
            rate_unit: GAMMA13_SI,
        }
    }
}

impl UnitSystem {
    pub fn to_seconds(&self, t: f64) -> f64 {
        t * self.time_unit
    }

    pub fn from_seconds(&self, s: f64) -> f64 {
        s / self.time_unit
    }

    pub fn to_ns(&self, t: f64) -> f64 {
        t * self.time_unit * 1e9
    }

    pub fn from_ns(&self, ns: f64) -> f64 {
        ns * 1e-9 / self.time_unit
    }

    /// Angular rate in rad/s to internal units.
    pub fn rate_from_si(&self, rad_per_s: f64) -> f64 {
        rad_per_s / self.rate_unit
    }

    pub fn rate_to_si(&self, rate: f64) -> f64 {
        rate * self.rate_unit
    }
}

/// Nanoseconds to internal time units.
pub fn ns(t_ns: f64) -> f64 {
    UnitSystem::default().from_ns(t_ns)
}

/// Internal time units to nanoseconds.
pub fn to_ns(t: f64) -> f64 {
    UnitSystem::default().to_ns(t)
}

/// Microseconds to internal time units.
pub fn us(t_us: f64) -> f64 {
    ns(t_us * 1e3)
}
