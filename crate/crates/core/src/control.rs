//! Switched control-field Rabi frequency.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units;

/// Default 10%-90% switching time of the control field, 70 ns.
pub fn default_edge() -> f64 {
    units::ns(70.0)
}

/// Control Rabi frequency `Omega_c2(t)`: plateau at `omega_peak`, a raised-cosine
/// fall centred on `off_time`, zero while stored, and a raised-cosine rise centred
/// on `on_time`. A profile with both times at +infinity never switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlProfile {
    pub omega_peak: f64,
    pub off_time: f64,
    pub on_time: f64,
    pub edge_10_90: f64,
}

// Fraction of a raised-cosine edge spent between its 10% and 90% points.
fn rise_fraction_10_90() -> f64 {
    ((-0.8f64).acos() - 0.8f64.acos()) / PI
}

#[inline]
fn raised_cosine(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        0.5 * (1.0 - (PI * x).cos())
    }
}

impl ControlProfile {
    pub fn new(omega_peak: f64, off_time: f64, on_time: f64, edge_10_90: f64) -> Result<Self> {
        if !(omega_peak >= 0.0) || !omega_peak.is_finite() {
            return Err(Error::invalid("omega_peak", "must be finite and >= 0"));
        }
        if !(edge_10_90 > 0.0) {
            return Err(Error::invalid("edge_10_90", "must be positive"));
        }
        if off_time.is_nan() || on_time.is_nan() || !(on_time >= off_time) {
            return Err(Error::invalid(
                "on_time",
                format!("storage time on_time - off_time must be >= 0 (off {off_time}, on {on_time})"),
            ));
        }
        Ok(ControlProfile {
            omega_peak,
            off_time,
            on_time,
            edge_10_90,
        })
    }

    /// Control held at `omega` for all times.
    pub fn constant(omega: f64) -> Self {
        ControlProfile {
            omega_peak: omega,
            off_time: f64::INFINITY,
            on_time: f64::INFINITY,
            edge_10_90: default_edge(),
        }
    }

    /// Store-and-retrieve profile with the default 70 ns edges.
    pub fn storage(omega: f64, off_time: f64, storage_time: f64) -> Result<Self> {
        ControlProfile::new(omega, off_time, off_time + storage_time, default_edge())
    }

    pub fn is_constant(&self) -> bool {
        !self.off_time.is_finite()
    }

    pub fn storage_time(&self) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            self.on_time - self.off_time
        }
    }

    /// Full duration of one raised-cosine edge (0% to 100%).
    pub fn edge_duration(&self) -> f64 {
        self.edge_10_90 / rise_fraction_10_90()
    }

    /// True while the control is nominally off, `off_time <= t <= on_time`.
    pub fn in_storage(&self, t: f64) -> bool {
        !self.is_constant() && t >= self.off_time && t <= self.on_time
    }

    pub fn omega(&self, t: f64) -> f64 {
        evaluate_control(self, t)
    }
}

/// `Omega_c2(t)` for the smooth-edge model. Overlapping edges never exceed the
/// plateau: the profile is `1 - fall(t) + rise(t)` with `rise <= fall`.
pub fn evaluate_control(profile: &ControlProfile, t: f64) -> f64 {
    if profile.is_constant() {
        return profile.omega_peak;
    }
    let w = profile.edge_duration();
    let fall = raised_cosine((t - profile.off_time) / w + 0.5);
    let rise = raised_cosine((t - profile.on_time) / w + 0.5);
    profile.omega_peak * (1.0 - fall + rise)
}
