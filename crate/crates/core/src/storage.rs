//! Slow-light and store-and-retrieve runs, storage efficiency, waveform
//! likeness and the Gaussian storage-decay fit.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::control::ControlProfile;
use crate::decay::DecayModel;
use crate::ensemble::EnsembleParams;
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::solver::{propagate, propagate_with_decay, SolverConfig};
use crate::spectral::FitReport;
use crate::wavepacket::Wavepacket;

/// Outcome of one slow-light or storage run. `input` is the propagated main
/// lobe, `output` the full transmitted field and `retrieved` the part of it
/// inside the retrieval window.
#[derive(Debug, Clone)]
pub struct StorageResult {
    pub se: f64,
    pub input: Wavepacket,
    pub output: Wavepacket,
    pub retrieved: Wavepacket,
    pub storage_time: f64,
    pub slow_light_efficiency: Option<f64>,
    /// NaN when nothing is retrieved.
    pub likeness: f64,
    pub optimal_delay: f64,
    /// Peak-to-peak delay between input and retrieved field.
    pub delay: f64,
    pub window: (f64, f64),
}

/// Scalar part of a [`StorageResult`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageSummary {
    pub se: f64,
    pub storage_time: f64,
    pub slow_light_efficiency: Option<f64>,
    pub likeness: f64,
    pub optimal_delay: f64,
    pub delay: f64,
    pub window_start: f64,
    pub window_end: f64,
}

impl StorageResult {
    pub fn summary(&self) -> StorageSummary {
        StorageSummary {
            se: self.se,
            storage_time: self.storage_time,
            slow_light_efficiency: self.slow_light_efficiency,
            likeness: self.likeness,
            optimal_delay: self.optimal_delay,
            delay: self.delay,
            window_start: self.window.0,
            window_end: self.window.1,
        }
    }
}

/// `int_window |psi_out|^2 / int |psi_in|^2`, precursor samples of the input
/// excluded from the denominator.
pub fn storage_efficiency(input: &Wavepacket, output: &Wavepacket, window: (f64, f64)) -> Result<f64> {
    let (a, b) = (input.grid().dt, output.grid().dt);
    if (a - b).abs() > 1e-9 * a {
        return Err(Error::invalid("output", "grid spacing differs from input"));
    }
    let den = input.norm(true);
    if !(den > 0.0) {
        return Err(Error::UndefinedEfficiency);
    }
    Ok(output.norm_over(false, window.0, window.1) / den)
}

/// Switch-off time placing the packet peak halfway through the medium.
pub fn default_off_time(packet: &Wavepacket, ens: &EnsembleParams, omega_c: f64) -> f64 {
    packet.peak_time() + 0.5 * ens.group_delay(omega_c)
}

fn solver_config(
    cfg: Option<&SolverConfig>,
    ens: &EnsembleParams,
    ctrl: &ControlProfile,
    input: &Wavepacket,
) -> SolverConfig {
    cfg.copied()
        .unwrap_or_else(|| SolverConfig::for_problem(ens, ctrl, input))
}

fn without_mask(w: Wavepacket) -> Wavepacket {
    w.with_precursor_mask(None).expect("removing a mask cannot fail")
}

/// Propagate the main lobe of `packet` under constant control.
pub fn run_slow_light(
    packet: &Wavepacket,
    ens: &EnsembleParams,
    omega_c: f64,
    cfg: Option<&SolverConfig>,
) -> Result<StorageResult> {
    if !(omega_c > 0.0) {
        return Err(Error::UndefinedVelocity);
    }
    let ctrl = ControlProfile::constant(omega_c);
    let lobe = packet.main_lobe();
    let t_end = (lobe.peak_time() + ens.group_delay(omega_c) + 4.0 * lobe.fwhm())
        .max(packet.grid().t_end() + ens.group_delay(omega_c));
    let input = lobe.extended_to(t_end);
    let cfg = solver_config(cfg, ens, &ctrl, &input);
    let output = without_mask(propagate(&input, ens, &ctrl, &cfg)?.output);
    let window = (output.grid().t_start, output.grid().t_end());
    let se = storage_efficiency(&input, &output, window)?;
    let (likeness, optimal_delay) = waveform_likeness(&input, &output)?;
    let delay = output.peak_time() - input.peak_time();
    Ok(StorageResult {
        se,
        retrieved: output.clone(),
        output,
        input,
        storage_time: 0.0,
        slow_light_efficiency: Some(se),
        likeness,
        optimal_delay,
        delay,
        window,
    })
}

/// Store and retrieve the main lobe of `packet`. The spin coherence follows
/// `decay` while the control is off; the retrieval window starts at
/// `ctrl.on_time`.
pub fn run_storage(
    packet: &Wavepacket,
    ens: &EnsembleParams,
    ctrl: &ControlProfile,
    decay: &DecayModel,
    cfg: Option<&SolverConfig>,
) -> Result<StorageResult> {
    if ctrl.is_constant() {
        return Err(Error::invalid("control", "storage run needs a switching profile"));
    }
    if !(ctrl.omega_peak > 0.0) {
        return Err(Error::UndefinedVelocity);
    }
    let lobe = packet.main_lobe();
    if ctrl.off_time <= lobe.peak_time() {
        return Err(Error::invalid(
            "off_time",
            "control switches off before the packet peak",
        ));
    }
    let delay = ens.group_delay(ctrl.omega_peak);
    let t_end = (ctrl.on_time + ctrl.edge_duration() + delay + 4.0 * lobe.fwhm()).max(packet.grid().t_end());
    let input = lobe.extended_to(t_end);
    let cfg = solver_config(cfg, ens, ctrl, &input);
    let output = without_mask(propagate_with_decay(&input, ens, ctrl, &cfg, Some(decay))?.output);
    let window = (ctrl.on_time, output.grid().t_end());
    let se = storage_efficiency(&input, &output, window)?;
    let retrieved = windowed(&output, window.0);
    let (likeness, optimal_delay) = match waveform_likeness(&input, &retrieved) {
        Err(Error::UndefinedLikeness) => (f64::NAN, f64::NAN),
        r => r?,
    };
    Ok(StorageResult {
        se,
        delay: retrieved.peak_time() - input.peak_time(),
        input,
        retrieved,
        output,
        storage_time: ctrl.storage_time(),
        slow_light_efficiency: None,
        likeness,
        optimal_delay,
        window,
    })
}

fn windowed(w: &Wavepacket, t_from: f64) -> Wavepacket {
    let grid = *w.grid();
    let amp = w
        .amplitude()
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            if grid.time(k) >= t_from {
                a
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Wavepacket::new(grid, amp, None).expect("same grid")
}

fn counts(w: &Wavepacket) -> Vec<f64> {
    w.amplitude().iter().map(|a| a.norm_sqr() * w.grid().dt).collect()
}

/// Largest normalized overlap of the two intensity-count profiles over integer
/// sample delays,
/// `L(d) = |sum_k sqrt(N_in[k - d] N_out[k])|^2 / (sum N_in sum N_out)`.
/// Returns `(L, delay)` with the delay in time units (output relative to input).
pub fn waveform_likeness(input: &Wavepacket, output: &Wavepacket) -> Result<(f64, f64)> {
    let (ga, gb) = (input.grid(), output.grid());
    if (ga.dt - gb.dt).abs() > 1e-9 * ga.dt {
        return Err(Error::invalid("output", "grid spacing differs from input"));
    }
    let ni = counts(input);
    let no = counts(output);
    let (si, so): (f64, f64) = (ni.iter().sum(), no.iter().sum());
    if !(si > 0.0 && so > 0.0) {
        return Err(Error::UndefinedLikeness);
    }
    let (n, m) = (ni.len(), no.len());
    let size = (n + m).next_power_of_two();
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![zero; size];
    let mut b = vec![zero; size];
    for (k, v) in ni.iter().enumerate() {
        a[k] = Complex64::new(v.sqrt(), 0.0);
    }
    for (k, v) in no.iter().enumerate() {
        b[k] = Complex64::new(v.sqrt(), 0.0);
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    fwd.process(&mut a);
    fwd.process(&mut b);
    // c[d] = sum_k a[k] b[k + d]
    let mut c: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x.conj() * y).collect();
    planner.plan_fft_inverse(size).process(&mut c);
    let (mut best, mut best_shift) = (f64::NEG_INFINITY, 0i64);
    for (idx, v) in c.iter().enumerate() {
        let shift = if idx < m { idx as i64 } else { idx as i64 - size as i64 };
        if shift <= -(n as i64) {
            continue;
        }
        let overlap = v.re / size as f64;
        let l = overlap * overlap / (si * so);
        if l > best {
            best = l;
            best_shift = shift;
        }
    }
    let delay = gb.t_start - ga.t_start + best_shift as f64 * ga.dt;
    Ok((best.clamp(0.0, 1.0), delay))
}

/// Likeness of `output` against the time-reversed `input`.
pub fn mirror_likeness(input: &Wavepacket, output: &Wavepacket) -> Result<f64> {
    let mut amp = input.amplitude().to_vec();
    amp.reverse();
    let rev = Wavepacket::new(*input.grid(), amp, None)?;
    Ok(waveform_likeness(&rev, output)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Infinite when the data show no decay.
    pub tau0: f64,
    pub se0: f64,
    pub report: FitReport,
    pub residuals: Vec<f64>,
}

/// Least-squares fit of `se0 exp(-t^2 / tau0^2)` to `(storage_time, se)` points.
pub fn fit_gaussian_decay(points: &[(f64, f64)]) -> Result<DecayFit> {
    if points.len() < 4 {
        return Err(Error::invalid("points", format!("need >= 4, got {}", points.len())));
    }
    if points.iter().any(|&(t, s)| !(t >= 0.0) || !s.is_finite()) {
        return Err(Error::invalid("points", "times must be >= 0 and values finite"));
    }
    let t_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if !(t_max > 0.0) {
        return Err(Error::invalid("points", "need at least one positive storage time"));
    }
    // log-linear start on ln se = ln se0 - a t^2
    let pos: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(t, s)| (t * t, s.ln()))
        .collect();
    let (se0_init, a_init) = if pos.len() >= 2 {
        let n = pos.len() as f64;
        let mx = pos.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pos.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pos.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pos.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        ((my - slope * mx).exp(), (-slope).max(0.0))
    } else {
        (points.iter().map(|p| p.1).fold(0.0, f64::max), 1.0 / (t_max * t_max))
    };
    // fit in scaled time so both parameters are O(1)
    let scale = t_max * t_max;
    let out = levenberg_marquardt(
        |p, r| {
            for (k, &(t, s)) in points.iter().enumerate() {
                r[k] = p[0] * (-p[1] * t * t / scale).exp() - s;
            }
        },
        &[se0_init, a_init * scale],
        points.len(),
        &LmOptions::default(),
    );
    let (se0, b) = (out.params[0], out.params[1]);
    if !out.converged {
        return Err(Error::FitFailure {
            best: vec![se0, b / scale],
            rss: out.rss,
            iterations: out.iterations,
        });
    }
    let unbounded = !(b > 1e-9);
    let tau0 = if unbounded { f64::INFINITY } else { (scale / b).sqrt() };
    // d tau0 / d b = -tau0 / (2 b)
    let tau_hw = if unbounded {
        f64::INFINITY
    } else {
        1.96 * out.std_errors[1] * tau0 / (2.0 * b)
    };
    Ok(DecayFit {
        tau0,
        se0,
        report: FitReport {
            residual_norm: out.rss.sqrt(),
            rss: out.rss,
            iterations: out.iterations,
            converged: out.converged,
            half_widths: vec![tau_hw, 1.96 * out.std_errors[0]],
            unbounded,
        },
        residuals: out.residuals,
    })
}

/// Storage time at which `se0 exp(-t^2/tau0^2)` falls to `se_target`.
pub fn storage_time_at(se_target: f64, tau0: f64, se0: f64) -> Result<f64> {
    if !(se_target > 0.0 && se_target < se0) {
        return Err(Error::NoSolution(format!("target {se_target} not in (0, se0 = {se0})")));
    }
    Ok(tau0 * (se0 / se_target).ln().sqrt())
}

/// Storage time in units of the input FWHM.
pub fn fractional_delay(storage_time: f64, fwhm: f64) -> f64 {
    storage_time / fwhm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    fn gauss(center: f64, sigma: f64) -> Wavepacket {
        Wavepacket::gaussian(TimeGrid::new(-50.0, 0.05, 3000).unwrap(), center, sigma).unwrap()
    }

    #[test]
    fn efficiency_trivial_cases() {
        let w = gauss(10.0, 3.0);
        let all = (w.grid().t_start, w.grid().t_end());
        assert!((storage_efficiency(&w, &w, all).unwrap() - 1.0).abs() < 1e-12);
        let half = w.scaled(Complex64::new(0.5f64.sqrt(), 0.0));
        assert!((storage_efficiency(&w, &half, all).unwrap() - 0.5).abs() < 1e-12);
        let z = Wavepacket::zeros(*w.grid());
        assert!(matches!(
            storage_efficiency(&z, &w, all),
            Err(Error::UndefinedEfficiency)
        ));
    }

    #[test]
    fn efficiency_ignores_phase() {
        let w = gauss(10.0, 3.0);
        let all = (w.grid().t_start, w.grid().t_end());
        let p = w.scaled(Complex64::from_polar(0.7, 1.3));
        let a = storage_efficiency(&w, &p, all).unwrap();
        let b = storage_efficiency(&w.scaled(Complex64::from_polar(1.0, -2.0)), &p, all).unwrap();
        assert!((a - 0.49).abs() < 1e-12 && (a - b).abs() < 1e-12);
    }

    #[test]
    fn likeness_of_delayed_copy() {
        let a = gauss(0.0, 3.0);
        let b = gauss(12.5, 3.0);
        let (l, d) = waveform_likeness(&a, &b).unwrap();
        assert!((l - 1.0).abs() < 1e-9);
        assert!((d - 12.5).abs() < 1e-9);
        let (l2, d2) = waveform_likeness(&b, &a).unwrap();
        assert!((l2 - 1.0).abs() < 1e-9 && (d2 + 12.5).abs() < 1e-9);
    }

    #[test]
    fn likeness_width_ratio_two() {
        let (l, _) = waveform_likeness(&gauss(0.0, 2.0), &gauss(5.0, 4.0)).unwrap();
        assert!((l - 0.8).abs() < 1e-6, "{l}");
    }

    #[test]
    fn likeness_zero_norm() {
        let a = gauss(0.0, 2.0);
        let z = Wavepacket::zeros(*a.grid());
        assert!(matches!(waveform_likeness(&z, &a), Err(Error::UndefinedLikeness)));
    }

    #[test]
    fn decay_fit_round_trip() {
        let pts: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let t = k as f64 * 18.85;
                (t, 0.68 * (-(t / 75.4f64).powi(2)).exp())
            })
            .collect();
        let fit = fit_gaussian_decay(&pts).unwrap();
        assert!((fit.tau0 - 75.4).abs() / 75.4 < 1e-6);
        assert!((fit.se0 - 0.68).abs() < 1e-8);
        assert!(!fit.report.unbounded);
    }

    #[test]
    fn flat_decay_unbounded() {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 0.6)).collect();
        let fit = fit_gaussian_decay(&pts).unwrap();
        assert!(fit.report.unbounded);
        assert!(fit.tau0.is_infinite());
    }

    #[test]
    fn crossing_time() {
        let t = storage_time_at(0.5, 4.0, 0.68).unwrap();
        assert!((t - 2.218).abs() < 1e-3);
        assert!((storage_time_at(0.68 / std::f64::consts::E, 3.0, 0.68).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(storage_time_at(0.7, 4.0, 0.68), Err(Error::NoSolution(_))));
        assert!((fractional_delay(2200.0, 400.0) - 5.5).abs() < 1e-12);
    }
}
