//! Control-field optimization of the storage efficiency and parameter scans.
//!
//! Scan points are evaluated in parallel with rayon and collected in axis
//! order, so the thread count never changes the result.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{default_edge, ControlProfile};
use crate::decay::DecayModel;
use crate::ensemble::EnsembleParams;
use crate::error::{Error, Result};
use crate::storage::run_storage;
use crate::units::{ns, us};
use crate::wavepacket::Wavepacket;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub omega_min: f64,
    pub omega_max: f64,
    /// Log-spaced points of the coarse control scan.
    pub coarse_points: usize,
    /// Switch-off times tried, as fractions of the group delay after the peak.
    pub off_fractions: Vec<f64>,
    /// Relative tolerance of the golden-section refinement on Omega.
    pub rel_tol: f64,
    /// SE drop (absolute) defining the plateau around the optimum.
    pub plateau_drop: f64,
    pub storage_time: f64,
    pub decay: DecayModel,
    pub edge_10_90: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            omega_min: 2.0,
            omega_max: 15.0,
            coarse_points: 15,
            off_fractions: vec![0.3, 0.4, 0.5, 0.6, 0.7],
            rel_tol: 1e-3,
            plateau_drop: 0.005,
            storage_time: ns(900.0),
            decay: DecayModel::gaussian(us(4.0)),
            edge_10_90: default_edge(),
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_min > 0.0 && self.omega_max > self.omega_min && self.omega_max.is_finite()) {
            return Err(Error::invalid("omega bounds", "need 0 < min < max < inf"));
        }
        if self.coarse_points < 15 {
            return Err(Error::invalid("coarse_points", "must be >= 15"));
        }
        if self.off_fractions.is_empty() || self.off_fractions.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::invalid("off_fractions", "need at least one positive fraction"));
        }
        if !(self.rel_tol > 0.0) || !(self.plateau_drop > 0.0) {
            return Err(Error::invalid("tolerances", "must be positive"));
        }
        if !(self.storage_time >= 0.0) {
            return Err(Error::invalid("storage_time", "must be >= 0"));
        }
        self.decay.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlOptimum {
    pub omega_opt: f64,
    pub off_fraction: f64,
    pub t_off: f64,
    pub se_opt: f64,
    /// Half of the Omega interval over which SE stays within the plateau drop.
    pub plateau_halfwidth: f64,
    pub plateau_lo: f64,
    pub plateau_hi: f64,
    pub at_boundary: bool,
    pub evaluations: usize,
}

/// Evaluates SE at one control strength, maximized over the switch-off grid.
struct Objective<'a> {
    ens: EnsembleParams,
    packet: &'a Wavepacket,
    opts: &'a OptimizerOptions,
    peak: f64,
}

impl Objective<'_> {
    fn se_at(&self, omega: f64, fraction: f64) -> Result<f64> {
        let off = self.peak + fraction * self.ens.group_delay(omega);
        let ctrl = ControlProfile::new(omega, off, off + self.opts.storage_time, self.opts.edge_10_90)?;
        Ok(run_storage(self.packet, &self.ens, &ctrl, &self.opts.decay, None)?.se)
    }

    /// Best `(se, fraction)` over the switch-off grid; ties go to the earlier fraction.
    fn best(&self, omega: f64) -> Result<(f64, f64)> {
        let vals: Vec<Result<f64>> = self
            .opts
            .off_fractions
            .par_iter()
            .map(|&f| self.se_at(omega, f))
            .collect();
        let mut best = (f64::NEG_INFINITY, self.opts.off_fractions[0]);
        for (v, &f) in vals.into_iter().zip(&self.opts.off_fractions) {
            let v = v?;
            if v > best.0 {
                best = (v, f);
            }
        }
        Ok(best)
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Maximize SE over the control Rabi frequency (coarse log scan plus
/// golden-section refinement) and the switch-off time (nested scan).
pub fn optimize_control(
    od: f64,
    template: &EnsembleParams,
    packet: &Wavepacket,
    opts: &OptimizerOptions,
) -> Result<ControlOptimum> {
    opts.validate()?;
    let ens = template.with_od(od);
    ens.validate()?;
    let obj = Objective {
        ens,
        packet,
        opts,
        peak: packet.main_lobe().peak_time(),
    };
    let grid = log_space(opts.omega_min, opts.omega_max, opts.coarse_points);
    let coarse: Vec<(f64, f64)> = grid.par_iter().map(|&w| obj.best(w)).collect::<Result<_>>()?;
    let mut evaluations = grid.len() * opts.off_fractions.len();

    let i_best = coarse
        .iter()
        .enumerate()
        .fold(0, |b, (i, c)| if c.0 > coarse[b].0 { i } else { b });
    let at_boundary = i_best == 0 || i_best + 1 == grid.len();

    let (mut omega_opt, mut best) = (grid[i_best], coarse[i_best]);
    if !at_boundary {
        // golden section in ln(Omega)
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (grid[i_best - 1].ln(), grid[i_best + 1].ln());
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = obj.best(x1.exp())?;
        let mut f2 = obj.best(x2.exp())?;
        evaluations += 2 * opts.off_fractions.len();
        while b - a > opts.rel_tol {
            if f1.0 >= f2.0 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = obj.best(x1.exp())?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = obj.best(x2.exp())?;
            }
            evaluations += opts.off_fractions.len();
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f.0 > best.0 {
                best = f;
                omega_opt = x.exp();
            }
        }
    } else {
        log::warn!(
            "optimum at the Omega bound {:.4} for OD {od}; widen the search interval",
            omega_opt
        );
    }

    // plateau edges by bisection between the optimum and the first coarse
    // point that drops below the threshold
    let threshold = best.0 - opts.plateau_drop;
    let mut edge = |outward: &[usize]| -> Result<f64> {
        let mut inside = omega_opt.ln();
        let Some(&out_idx) = outward.iter().find(|&&i| coarse[i].0 < threshold) else {
            return Ok(outward.last().map_or(omega_opt, |&i| grid[i]));
        };
        let mut outside = grid[out_idx].ln();
        for _ in 0..8 {
            let mid = 0.5 * (inside + outside);
            evaluations += opts.off_fractions.len();
            if obj.best(mid.exp())?.0 >= threshold {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok((0.5 * (inside + outside)).exp())
    };
    let below: Vec<usize> = (0..grid.len()).rev().filter(|&i| grid[i] < omega_opt).collect();
    let above: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] > omega_opt).collect();
    let plateau_lo = edge(&below)?;
    let plateau_hi = edge(&above)?;

    Ok(ControlOptimum {
        omega_opt,
        off_fraction: best.1,
        t_off: obj.peak + best.1 * ens.group_delay(omega_opt),
        se_opt: best.0,
        plateau_halfwidth: 0.5 * (plateau_hi - plateau_lo),
        plateau_lo,
        plateau_hi,
        at_boundary,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanAxis {
    Od,
    Omega,
    StorageTime,
}

/// One scan. Failed points carry `NaN` values and an error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axis_kind: ScanAxis,
    pub axis: Vec<f64>,
    pub se: Vec<f64>,
    pub optimal_omega: Vec<f64>,
    pub omega_halfwidth: Vec<f64>,
    pub off_fraction: Vec<f64>,
    pub failures: Vec<Option<String>>,
    pub meta: Vec<(String, f64)>,
}

impl ScanResult {
    fn new(axis_kind: ScanAxis, axis: Vec<f64>, meta: Vec<(String, f64)>) -> Self {
        let n = axis.len();
        ScanResult {
            axis_kind,
            axis,
            se: vec![f64::NAN; n],
            optimal_omega: vec![f64::NAN; n],
            omega_halfwidth: vec![f64::NAN; n],
            off_fraction: vec![f64::NAN; n],
            failures: vec![None; n],
            meta,
        }
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }
}

/// Optimize the control at each OD.
pub fn scan_optical_depth(
    ods: &[f64],
    template: &EnsembleParams,
    packet: &Wavepacket,
    opts: &OptimizerOptions,
) -> Result<ScanResult> {
    if let Some(bad) = ods.iter().find(|&&d| !(0.0..=300.0).contains(&d)) {
        return Err(Error::invalid("od", format!("{bad} outside [0, 300]")));
    }
    opts.validate()?;
    let results: Vec<Result<ControlOptimum>> = ods
        .par_iter()
        .map(|&od| optimize_control(od, template, packet, opts))
        .collect();
    let mut scan = ScanResult::new(
        ScanAxis::Od,
        ods.to_vec(),
        vec![
            ("storage_time".into(), opts.storage_time),
            ("gamma12".into(), template.gamma12),
            ("omega_min".into(), opts.omega_min),
            ("omega_max".into(), opts.omega_max),
        ],
    );
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => {
                scan.se[k] = o.se_opt;
                scan.optimal_omega[k] = o.omega_opt;
                scan.omega_halfwidth[k] = o.plateau_halfwidth;
                scan.off_fraction[k] = o.off_fraction;
            }
            Err(e) => {
                log::warn!("od {} failed: {e}", ods[k]);
                scan.failures[k] = Some(e.to_string());
            }
        }
    }
    Ok(scan)
}

/// SE versus control strength at fixed OD, each point maximized over the
/// switch-off grid.
pub fn scan_omega(
    omegas: &[f64],
    ens: &EnsembleParams,
    packet: &Wavepacket,
    opts: &OptimizerOptions,
) -> Result<ScanResult> {
    if omegas.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::UndefinedVelocity);
    }
    ens.validate()?;
    let obj = Objective {
        ens: *ens,
        packet,
        opts,
        peak: packet.main_lobe().peak_time(),
    };
    let results: Vec<Result<(f64, f64)>> = omegas.par_iter().map(|&w| obj.best(w)).collect();
    let mut scan = ScanResult::new(
        ScanAxis::Omega,
        omegas.to_vec(),
        vec![("od".into(), ens.od), ("storage_time".into(), opts.storage_time)],
    );
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok((se, f)) => {
                scan.se[k] = se;
                scan.optimal_omega[k] = omegas[k];
                scan.off_fraction[k] = f;
            }
            Err(e) => scan.failures[k] = Some(e.to_string()),
        }
    }
    Ok(scan)
}

/// SE versus storage time at fixed OD, Omega and switch-off time.
pub fn scan_storage_time(
    times: &[f64],
    ens: &EnsembleParams,
    omega_c: f64,
    off_fraction: f64,
    packet: &Wavepacket,
    decay: &DecayModel,
    edge_10_90: f64,
) -> Result<ScanResult> {
    if times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::invalid("storage_time", "must be >= 0"));
    }
    ens.validate()?;
    decay.validate()?;
    let off = packet.main_lobe().peak_time() + off_fraction * ens.group_delay(omega_c);
    let results: Vec<Result<f64>> = times
        .par_iter()
        .map(|&t| {
            let ctrl = ControlProfile::new(omega_c, off, off + t, edge_10_90)?;
            Ok(run_storage(packet, ens, &ctrl, decay, None)?.se)
        })
        .collect();
    let mut scan = ScanResult::new(
        ScanAxis::StorageTime,
        times.to_vec(),
        vec![
            ("od".into(), ens.od),
            ("omega".into(), omega_c),
            ("off_fraction".into(), off_fraction),
        ],
    );
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(se) => {
                scan.se[k] = se;
                scan.optimal_omega[k] = omega_c;
                scan.off_fraction[k] = off_fraction;
            }
            Err(e) => scan.failures[k] = Some(e.to_string()),
        }
    }
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_space(2.0, 15.0, 15);
        assert_eq!(g.len(), 15);
        assert!((g[0] - 2.0).abs() < 1e-12 && (g[14] - 15.0).abs() < 1e-12);
        let r = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
    }

    #[test]
    fn options_validation() {
        assert!(OptimizerOptions::default().validate().is_ok());
        let o = OptimizerOptions {
            coarse_points: 10,
            ..Default::default()
        };
        assert!(o.validate().is_err());
        let o = OptimizerOptions {
            omega_min: 5.0,
            omega_max: 4.0,
            ..Default::default()
        };
        assert!(o.validate().is_err());
    }
}
