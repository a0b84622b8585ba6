//! Heralded single-photon waveform of the backward sFWM source.
//!
//! In the group-delay regime the anti-Stokes envelope maps the pump profile
//! along the source ensemble onto time: `psi(tau) ~ kappa0 V_g f_p(L/2 - V_g tau)`.
//! A Gaussian pump profile therefore yields a Gaussian photon.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::units;
use crate::wavepacket::Wavepacket;

/// Pump Rabi-frequency profile along the source axis, `f_p(z)`, with `z = 0` at
/// the ensemble centre.
#[derive(Debug, Clone, PartialEq)]
pub enum PumpProfile {
    /// `exp(-z^2 / z0^2)` with `z0 = w0 / theta`; not truncated at the ensemble ends.
    Gaussian,
    /// 1 inside the ensemble, 0 outside.
    Constant,
    /// Linear interpolation of `(z, f)` samples sorted by `z`; 0 outside the table.
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceParams {
    pub od1: f64,
    /// Coupling Rabi frequency in units of gamma13.
    pub omega_c1: f64,
    /// Source ensemble length, meters.
    pub l1: f64,
    /// Pump beam waist, meters.
    pub w0: f64,
    /// Pump-to-photon axis angle, radians.
    pub theta: f64,
    /// Overall amplitude scale. The generated packet is normalized, so this
    /// only matters for [`SourceParams::envelope`].
    pub kappa0: f64,
    /// Norm fraction carried by the optical-precursor spike.
    pub precursor_fraction: f64,
    pub pump: PumpProfile,
}

impl Default for SourceParams {
    fn default() -> Self {
        SourceParams {
            od1: 100.0,
            omega_c1: 3.5,
            l1: 0.015,
            w0: 182e-6,
            theta: 2.5f64.to_radians(),
            kappa0: 1.0,
            precursor_fraction: 0.02,
            pump: PumpProfile::Gaussian,
        }
    }
}

/// `V_g = Omega_c^2 L / (2 OD gamma13)`. `omega_c` and `gamma13` must share a
/// unit; the result is in length-units of `l` per reciprocal of that unit.
pub fn group_velocity(od: f64, omega_c: f64, l: f64, gamma13: f64) -> Result<f64> {
    if !(od > 0.0) {
        return Err(Error::UndefinedVelocity);
    }
    Ok(omega_c * omega_c * l / (2.0 * od * gamma13))
}

/// Pump profile `f_p(z)`.
pub fn pump_profile(params: &SourceParams, z: f64) -> f64 {
    match &params.pump {
        PumpProfile::Gaussian => {
            let z0 = params.w0 / params.theta;
            (-(z * z) / (z0 * z0)).exp()
        }
        PumpProfile::Constant => {
            if z.abs() <= 0.5 * params.l1 {
                1.0
            } else {
                0.0
            }
        }
        PumpProfile::Tabulated(table) => tabulated(table, z),
    }
}

fn tabulated(table: &[(f64, f64)], z: f64) -> f64 {
    let first = match table.first() {
        Some(p) => p,
        None => return 0.0,
    };
    let last = table[table.len() - 1];
    if z < first.0 || z > last.0 {
        return 0.0;
    }
    let i = table.partition_point(|p| p.0 <= z);
    if i == 0 {
        return first.1;
    }
    if i >= table.len() {
        return last.1;
    }
    let (z0, f0) = table[i - 1];
    let (z1, f1) = table[i];
    if z1 == z0 {
        return f1;
    }
    f0 + (f1 - f0) * (z - z0) / (z1 - z0)
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.od1 > 0.0) {
            return Err(Error::invalid("od1", "must be positive"));
        }
        if !(self.omega_c1 > 0.0) {
            return Err(Error::invalid("omega_c1", "must be positive"));
        }
        if !(self.l1 > 0.0) {
            return Err(Error::invalid("l1", "must be positive"));
        }
        if !(self.w0 > 0.0) {
            return Err(Error::invalid("w0", "must be positive"));
        }
        if !(self.theta > 0.0 && self.theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("theta", "must lie in (0, pi/2)"));
        }
        if !(self.kappa0 > 0.0) {
            return Err(Error::invalid("kappa0", "must be positive"));
        }
        if !(self.precursor_fraction >= 0.0 && self.precursor_fraction < 0.1) {
            return Err(Error::invalid("precursor_fraction", "must lie in [0, 0.1)"));
        }
        if let PumpProfile::Tabulated(t) = &self.pump {
            if t.len() < 2 || t.windows(2).any(|w| w[1].0 < w[0].0) {
                return Err(Error::invalid("pump", "table needs >= 2 points sorted by z"));
            }
        }
        Ok(())
    }

    /// Group velocity in meters per internal time unit.
    pub fn group_velocity(&self) -> Result<f64> {
        group_velocity(self.od1, self.omega_c1, self.l1, 1.0)
    }

    /// Source group delay `tau_g = L1 / V_g1`, internal units.
    pub fn group_delay(&self) -> Result<f64> {
        Ok(self.l1 / self.group_velocity()?)
    }

    /// Gaussian width parameter `tau0 = 2 OD1 w0 / (Omega_c1^2 L1 theta)`, internal units.
    pub fn tau0(&self) -> f64 {
        2.0 * self.od1 * self.w0 / (self.omega_c1 * self.omega_c1 * self.l1 * self.theta)
    }

    /// Predicted intensity FWHM `2 tau0 sqrt(ln 2)` for the Gaussian pump.
    pub fn predicted_fwhm(&self) -> f64 {
        2.0 * self.tau0() * 2f64.ln().sqrt()
    }

    /// Unnormalized envelope `kappa0 V_g f_p(L1/2 - V_g tau)`.
    pub fn envelope(&self, tau: f64) -> Result<f64> {
        let vg = self.group_velocity()?;
        Ok(self.kappa0 * vg * pump_profile(self, 0.5 * self.l1 - vg * tau))
    }

    /// A 1 ns grid covering `[-tau_g/2, 3 tau_g/2]` plus the envelope tails.
    pub fn default_grid(&self) -> Result<TimeGrid> {
        let tg = self.group_delay()?;
        let tail = match self.pump {
            PumpProfile::Gaussian => 0.5 * tg + 4.0 * self.tau0(),
            _ => 0.5 * tg,
        };
        let lo = (-0.5 * tg).min(0.5 * tg - tail);
        let hi = (1.5 * tg).max(0.5 * tg + tail);
        TimeGrid::spanning(lo, hi, units::ns(1.0))
    }
}

/// Heralded anti-Stokes waveform sampled on `grid`, normalized to unit
/// probability. The envelope above sets the *intensity* profile (the measured
/// biphoton waveform); the amplitude is its square root. When
/// `precursor_fraction > 0`, a 3-sample spike at the sample nearest `tau = 0`
/// carries that fraction of the norm and is flagged as precursor.
pub fn generate_heralded_waveform(params: &SourceParams, grid: &TimeGrid) -> Result<Wavepacket> {
    params.validate()?;
    let tg = params.group_delay()?;
    let eps = 1e-9 * grid.dt;
    if grid.t_start > -0.5 * tg + eps || grid.t_end() < 1.5 * tg - eps {
        return Err(Error::GridTooShort(format!(
            "grid [{:.3}, {:.3}] must span [-tau_g/2, 3 tau_g/2] = [{:.3}, {:.3}]",
            grid.t_start,
            grid.t_end(),
            -0.5 * tg,
            1.5 * tg
        )));
    }
    let mut main = Vec::with_capacity(grid.n);
    for t in grid.times() {
        main.push(params.envelope(t)?);
    }
    let peak = main.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::invalid("pump", "envelope vanishes on the grid"));
    }
    let (first, last) = (main[0], main[grid.n - 1]);
    if first > 1e-4 * peak || last > 1e-4 * peak {
        return Err(Error::GridTooShort(format!(
            "envelope truncated at {:.2e} of peak",
            first.max(last) / peak
        )));
    }

    let main_sum: f64 = main.iter().sum::<f64>() * grid.dt;
    let f = params.precursor_fraction;
    let mut intensity: Vec<f64> = main.iter().map(|v| (1.0 - f) * v / main_sum).collect();
    let mut mask = None;
    if f > 0.0 {
        let k0 = grid.nearest_index(0.0).clamp(1, grid.n - 2);
        let weights = [(k0 - 1, 0.25), (k0, 0.5), (k0 + 1, 0.25)];
        let mut m = vec![false; grid.n];
        for (k, w) in weights {
            intensity[k] += f * w / grid.dt;
            m[k] = true;
        }
        mask = Some(m);
    }
    let amplitude = intensity.into_iter().map(|i| Complex64::new(i.sqrt(), 0.0)).collect();
    Wavepacket::new(*grid, amplitude, mask)
}
