//! Time-domain integration of the three-level Maxwell-Bloch system
//!
//! ```text
//! (d_t + c0 d_z) E = i g sqrt(N) P
//! d_t P = -gamma13 P + i g sqrt(N)/2 E + i/2 Omega S
//! d_t S = -gamma12_eff S + i/2 Omega* P
//! ```
//!
//! The coherences are stored rescaled by `g sqrt(N) L / c0`, so with `zeta = z / L`
//! the only coupling constant left is the optical depth:
//! `d_zeta E = i P`, `d_t P = -P + i (OD/2) E + i (Omega/2) S`.

mod characteristic;
mod retarded;

use num_complex::Complex64;

use crate::control::ControlProfile;
use crate::decay::DecayModel;
use crate::ensemble::EnsembleParams;
use crate::error::{Error, Result};
use crate::wavepacket::Wavepacket;

/// `gamma12_eff = gamma12 + gamma13 (beta Omega)^2 / (4 Delta_s^2)`.
pub fn effective_dephasing(ens: &EnsembleParams, omega_c2: f64) -> f64 {
    let bo = ens.beta * omega_c2;
    ens.gamma12 + ens.gamma13 * bo * bo / (4.0 * ens.delta_s * ens.delta_s)
}

/// Snapshot of the medium at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub time: f64,
    /// Positions in meters, `0..=L`.
    pub z_grid: Vec<f64>,
    pub eps: Vec<Complex64>,
    /// Optical coherence, scaled by `g sqrt(N) L / c0`.
    pub pol: Vec<Complex64>,
    /// Spin coherence, same scaling as `pol`.
    pub spin: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Spatial grid points including both faces.
    pub n_z: usize,
    /// Upper bound on the integration step, internal units. The actual step
    /// divides the input sample spacing.
    pub dt: f64,
    /// Retarded-frame reduction (drop `d_t` in the field equation).
    pub adiabatic_field: bool,
    /// Record a [`FieldState`] every this many input samples.
    pub trace_every: Option<usize>,
}

/// Largest admissible step `0.02 / max(Omega_peak, gamma13, bandwidth)`.
pub fn max_step(ens: &EnsembleParams, ctrl: &ControlProfile, input: &Wavepacket) -> f64 {
    0.02 / ctrl.omega_peak.max(ens.gamma13).max(input.rms_bandwidth())
}

/// Smallest admissible spatial resolution `max(64, 2 OD)`.
pub fn min_points(ens: &EnsembleParams) -> usize {
    64usize.max((2.0 * ens.od).ceil() as usize)
}

impl SolverConfig {
    /// Default resolution for a problem: the largest legal step and
    /// `max(128, 2 OD, 8 * OD-bandwidth product)` spatial points.
    pub fn for_problem(ens: &EnsembleParams, ctrl: &ControlProfile, input: &Wavepacket) -> Self {
        let bw = input.rms_bandwidth();
        let omega2 = (ctrl.omega_peak * ctrl.omega_peak).max(ens.gamma13 * ens.gamma13);
        // phase accumulated across the medium by the input bandwidth
        let phase = 2.0 * ens.od * bw / omega2;
        let n_z = min_points(ens)
            .max(128)
            .max(((8.0 * phase.powf(1.5)).ceil() as usize).min(4096));
        SolverConfig {
            n_z,
            dt: max_step(ens, ctrl, input),
            adiabatic_field: true,
            trace_every: None,
        }
    }

    /// Halve the step and double the spatial resolution.
    pub fn refined(&self) -> Self {
        SolverConfig {
            n_z: 2 * self.n_z - 1,
            dt: 0.5 * self.dt,
            ..*self
        }
    }

    pub fn validate(&self, ens: &EnsembleParams, ctrl: &ControlProfile, input: &Wavepacket) -> Result<()> {
        let need = min_points(ens);
        if self.n_z < need {
            return Err(Error::StepSize(format!(
                "n_z = {} below minimum {need} for OD {}",
                self.n_z, ens.od
            )));
        }
        let limit = max_step(ens, ctrl, input);
        if !(self.dt > 0.0) || self.dt > limit * (1.0 + 1e-9) {
            return Err(Error::StepSize(format!(
                "dt = {:.3e} exceeds limit {limit:.3e}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Solver output: the field leaving the medium, on the input grid.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub output: Wavepacket,
    pub trace: Option<Vec<FieldState>>,
}

/// Coefficients of the atomic equations at a given time.
pub(crate) struct Medium<'a> {
    pub half_od: f64,
    pub ens: &'a EnsembleParams,
    pub ctrl: &'a ControlProfile,
    pub decay: Option<&'a DecayModel>,
}

impl Medium<'_> {
    #[inline]
    pub fn omega(&self, t: f64) -> f64 {
        self.ctrl.omega(t)
    }

    /// Spin-coherence decay rate. Outside the storage interval this is
    /// `gamma12_eff` at the instantaneous control; inside it the storage decay
    /// law replaces the intrinsic `gamma12`.
    #[inline]
    pub fn spin_rate(&self, t: f64, omega: f64) -> f64 {
        let pb = effective_dephasing(self.ens, omega) - self.ens.gamma12;
        match self.decay {
            Some(d) if self.ctrl.in_storage(t) => pb + d.rate_at(t - self.ctrl.off_time),
            _ => pb + self.ens.gamma12,
        }
    }
}

/// Propagate `input` through the ensemble with control `ctrl`. Coherences start
/// at zero and `E(t, 0) = psi_in(t)`; the returned packet is `E(t, L)`
/// (retarded time when `adiabatic_field` is set).
pub fn propagate(
    input: &Wavepacket,
    ens: &EnsembleParams,
    ctrl: &ControlProfile,
    cfg: &SolverConfig,
) -> Result<Propagation> {
    propagate_with_decay(input, ens, ctrl, cfg, None)
}

/// As [`propagate`], with `decay` governing the spin coherence while the
/// control is off.
pub fn propagate_with_decay(
    input: &Wavepacket,
    ens: &EnsembleParams,
    ctrl: &ControlProfile,
    cfg: &SolverConfig,
    decay: Option<&DecayModel>,
) -> Result<Propagation> {
    ens.validate()?;
    if let Some(d) = decay {
        d.validate()?;
    }
    cfg.validate(ens, ctrl, input)?;
    let medium = Medium {
        half_od: 0.5 * ens.od,
        ens,
        ctrl,
        decay,
    };
    if cfg.adiabatic_field {
        retarded::integrate(input, &medium, cfg)
    } else {
        characteristic::integrate(input, &medium, cfg)
    }
}

pub(crate) fn z_grid(ens: &EnsembleParams, n_z: usize) -> Vec<f64> {
    (0..n_z).map(|j| ens.length * j as f64 / (n_z - 1) as f64).collect()
}

#[inline]
pub(crate) fn finite(c: Complex64) -> bool {
    c.re.is_finite() && c.im.is_finite()
}
