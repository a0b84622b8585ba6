//! Steady-state (constant control) solution of the Maxwell-Bloch system in the
//! frequency domain.
//!
//! For probe detuning `delta` the field transfer function across the medium is
//!
//! ```text
//! H(delta) = exp[ -(OD gamma13 / 2) / (gamma13 - i delta + Omega^2 / (4 (gamma12_eff - i delta))) ]
//! ```
//!
//! with the convention `psi(t) = integral c(delta) exp(-i delta t)`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleParams;
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::solver::effective_dephasing;
use crate::wavepacket::Wavepacket;

/// Complex field transmission at probe detuning `delta`.
pub fn transfer_function(delta: f64, ens: &EnsembleParams, omega_c: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let g12 = effective_dephasing(ens, omega_c);
    let two_photon = Complex64::new(g12, -delta);
    let mut d = ens.gamma13 - i * delta;
    if omega_c != 0.0 {
        if two_photon.norm() == 0.0 {
            // ideal dark-state resonance: the denominator diverges
            return Complex64::new(1.0, 0.0);
        }
        d += omega_c * omega_c / (4.0 * two_photon);
    }
    (-(0.5 * ens.od * ens.gamma13) / d).exp()
}

/// Power transmission `|H|^2`.
pub fn power_transmission(delta: f64, ens: &EnsembleParams, omega_c: f64) -> f64 {
    transfer_function(delta, ens, omega_c).norm_sqr()
}

/// Probe power transmission versus detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionCurve {
    pub detunings: Vec<f64>,
    pub transmission: Vec<f64>,
}

impl TransmissionCurve {
    pub fn new(detunings: Vec<f64>, transmission: Vec<f64>) -> Result<Self> {
        if detunings.len() != transmission.len() {
            return Err(Error::invalid("transmission", "length differs from detunings"));
        }
        if detunings.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("detunings", "must be strictly increasing"));
        }
        Ok(TransmissionCurve {
            detunings,
            transmission,
        })
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }
}

pub fn eit_spectrum(detunings: &[f64], ens: &EnsembleParams, omega_c: f64) -> Result<TransmissionCurve> {
    let t = detunings.iter().map(|&d| power_transmission(d, ens, omega_c)).collect();
    TransmissionCurve::new(detunings.to_vec(), t)
}

/// `n` evenly spaced detunings over `[-span, span]`.
pub fn detuning_grid(span: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| -span + 2.0 * span * k as f64 / (n - 1) as f64).collect()
}

/// Full width at half maximum of the transparency window around `delta = 0`,
/// measured from the peak down to half of (peak - dip minimum) on each side.
pub fn transparency_fwhm(ens: &EnsembleParams, omega_c: f64) -> f64 {
    let t = |d: f64| power_transmission(d, ens, omega_c);
    let peak = t(0.0);
    // locate the absorption minimum on the positive side
    let span = 4.0 * omega_c.max(1.0);
    let n = 20_000;
    let (mut d_min, mut t_min) = (0.0, peak);
    for k in 1..=n {
        let d = span * k as f64 / n as f64;
        let v = t(d);
        if v < t_min {
            t_min = v;
            d_min = d;
        }
    }
    let half = 0.5 * (peak + t_min);
    let (mut a, mut b) = (0.0, d_min);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if t(m) > half {
            a = m;
        } else {
            b = m;
        }
    }
    a + b
}

/// Propagate a packet through the medium with the closed-form transfer
/// function (constant control): FFT, multiply by `H`, inverse FFT. The input is
/// zero-padded to at least `pad_factor` times its length.
pub fn propagate_spectral(input: &Wavepacket, ens: &EnsembleParams, omega_c: f64, pad_factor: usize) -> Wavepacket {
    let grid = *input.grid();
    let n = (grid.n * pad_factor.max(2)).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..grid.n].copy_from_slice(input.amplitude());
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * grid.dt);
    for (k, c) in buf.iter_mut().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        // forward FFT bin k carries exp(+i w t); our detuning is delta = -w
        let delta = -kk * dw;
        *c *= transfer_function(delta, ens, omega_c);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let amp = buf[..grid.n].iter().map(|c| c * scale).collect();
    Wavepacket::new(grid, amp, input.precursor_mask().map(|m| m.to_vec())).expect("grid length preserved")
}

/// Group delay `-d arg H / d delta` at `delta` by central differences.
pub fn group_delay_numeric(delta: f64, ens: &EnsembleParams, omega_c: f64, h: f64) -> f64 {
    let ph = |d: f64| transfer_function(d, ens, omega_c).arg();
    let mut diff = ph(delta + h) - ph(delta - h);
    while diff > std::f64::consts::PI {
        diff -= 2.0 * std::f64::consts::PI;
    }
    while diff < -std::f64::consts::PI {
        diff += 2.0 * std::f64::consts::PI;
    }
    // psi(t) = int c exp(-i delta t): a delay T multiplies by exp(+i delta T)
    diff / (2.0 * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitParams {
    pub od: f64,
    pub omega_c: f64,
    pub gamma12: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub residual_norm: f64,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// 95% confidence half-widths, same order as the fitted parameters.
    pub half_widths: Vec<f64>,
    /// Set when a parameter ran off to an unbounded value.
    pub unbounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EitFit {
    pub params: EitParams,
    pub report: FitReport,
}

/// Fit OD, control Rabi frequency and intrinsic `gamma12` to a measured EIT
/// transmission curve. `template` supplies `beta`, `delta_s` and the unit
/// conventions. OD and Omega are fitted in log space.
pub fn fit_eit(curve: &TransmissionCurve, guess: EitParams, template: &EnsembleParams) -> Result<EitFit> {
    if curve.len() < 20 {
        return Err(Error::invalid(
            "curve",
            format!("need >= 20 points, got {}", curve.len()),
        ));
    }
    if !(guess.od > 0.0 && guess.omega_c > 0.0) {
        return Err(Error::invalid("initial_guess", "od and omega_c must be positive"));
    }
    let (lo, hi) = curve
        .transmission
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi - lo > 1e-3) {
        return Err(Error::InsufficientSignal);
    }
    let d_first = curve.detunings[0];
    let d_last = curve.detunings[curve.len() - 1];
    if !(d_first < -0.5 * guess.omega_c && d_last > 0.5 * guess.omega_c) {
        return Err(Error::invalid(
            "curve",
            "detuning range does not span both absorption dips",
        ));
    }

    let model = |p: &[f64], d: f64| {
        let ens = EnsembleParams {
            od: p[0].exp(),
            gamma12: p[2],
            ..*template
        };
        power_transmission(d, &ens, p[1].exp())
    };
    let out = levenberg_marquardt(
        |p, r| {
            for (k, (&d, &y)) in curve.detunings.iter().zip(&curve.transmission).enumerate() {
                r[k] = model(p, d) - y;
            }
        },
        &[guess.od.ln(), guess.omega_c.ln(), guess.gamma12],
        curve.len(),
        &LmOptions::default(),
    );
    let p = &out.params;
    let params = EitParams {
        od: p[0].exp(),
        omega_c: p[1].exp(),
        gamma12: p[2],
    };
    if !out.converged {
        return Err(Error::FitFailure {
            best: vec![params.od, params.omega_c, params.gamma12],
            rss: out.rss,
            iterations: out.iterations,
        });
    }
    let z = 1.96;
    let half_widths = vec![
        z * params.od * out.std_errors[0],
        z * params.omega_c * out.std_errors[1],
        z * out.std_errors[2],
    ];
    Ok(EitFit {
        params,
        report: FitReport {
            residual_norm: out.rss.sqrt(),
            rss: out.rss,
            iterations: out.iterations,
            converged: out.converged,
            unbounded: half_widths.iter().any(|h| !h.is_finite()),
            half_widths,
        },
    })
}
