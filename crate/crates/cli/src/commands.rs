//! One function per subcommand. Each writes its CSV/JSON files into the output
//! directory and returns the JSON summary it wrote.

use std::path::Path;

use eitmem::optimizer::{scan_omega, scan_optical_depth, scan_storage_time, ScanResult};
use eitmem::spectral::{detuning_grid, eit_spectrum, fit_eit, EitParams, TransmissionCurve};
use eitmem::stats::{
    cauchy_schwarz_thermal, conditional_g2, pair_cross_correlation, read_timetag_file, simulate_event_stream,
    write_timetag_file, Channel, Gc2Result,
};
use eitmem::storage::{
    fit_gaussian_decay, fractional_delay, mirror_likeness, run_slow_light, run_storage, storage_time_at, StorageResult,
};
use eitmem::units::{ns, to_ns};
use eitmem::{generate_heralded_waveform, ControlProfile, Wavepacket};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{read_numeric_csv, Cell, OutDir, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Od,
    Omega,
    StorageTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitKind {
    Eit,
    Decay,
}

fn source_packet(cfg: &RunConfig) -> Result<Wavepacket> {
    let p = cfg.source_params()?;
    Ok(generate_heralded_waveform(&p, &p.default_grid()?)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveformSummary {
    pub fwhm_ns: f64,
    /// `fwhm / (2 sqrt(ln 2))` of the generated intensity.
    pub tau0_ns: f64,
    pub tau0_predicted_ns: f64,
    pub peak_ns: f64,
    pub group_delay_ns: f64,
    pub precursor_fraction: f64,
    pub samples: usize,
}

pub fn cmd_waveform(cfg: &RunConfig, out: &OutDir) -> Result<WaveformSummary> {
    let params = cfg.source_params()?;
    let w = source_packet(cfg)?;
    let mut t = Table::new("waveform", &["tau_ns", "intensity", "is_precursor"]);
    for (k, (tau, i)) in w.grid().times().zip(w.intensity()).enumerate() {
        t.push(vec![Cell::F(to_ns(tau)), Cell::F(i), Cell::B(w.is_precursor(k))]);
    }
    out.write_table("waveform.csv", &t)?;
    let fwhm = to_ns(w.fwhm());
    let total = w.norm(false);
    let summary = WaveformSummary {
        fwhm_ns: fwhm,
        tau0_ns: fwhm / (2.0 * 2f64.ln().sqrt()),
        tau0_predicted_ns: to_ns(params.tau0()),
        peak_ns: to_ns(w.peak_time()),
        group_delay_ns: to_ns(params.group_delay()?),
        precursor_fraction: (total - w.norm(true)) / total,
        samples: w.grid().n,
    };
    out.write_json("waveform.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub se: f64,
    pub likeness: f64,
    pub delay_ns: f64,
    pub optimal_delay_ns: f64,
    pub window_start_ns: f64,
    pub window_end_ns: f64,
}

impl From<&StorageResult> for RunSummary {
    fn from(r: &StorageResult) -> Self {
        RunSummary {
            se: r.se,
            likeness: r.likeness,
            delay_ns: to_ns(r.delay),
            optimal_delay_ns: to_ns(r.optimal_delay),
            window_start_ns: to_ns(r.window.0),
            window_end_ns: to_ns(r.window.1),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StoreSummary {
    pub od: f64,
    pub omega: f64,
    pub gamma12: f64,
    pub storage_time_ns: f64,
    pub off_time_ns: f64,
    pub input_fwhm_ns: f64,
    pub slow_light: RunSummary,
    pub storage: RunSummary,
    pub se: f64,
    pub likeness: f64,
    pub mirror_likeness: Option<f64>,
    pub fractional_delay: f64,
}

fn off_time(cfg: &RunConfig, packet: &Wavepacket) -> Result<f64> {
    let c = &cfg.control;
    Ok(match c.off_time_ns {
        Some(t) => ns(t),
        None => packet.main_lobe().peak_time() + c.off_fraction * cfg.ensemble()?.group_delay(c.omega),
    })
}

pub fn cmd_store(cfg: &RunConfig, out: &OutDir) -> Result<StoreSummary> {
    let packet = source_packet(cfg)?;
    let ens = cfg.ensemble()?;
    let solver = cfg.solver();
    let c = &cfg.control;
    let off = off_time(cfg, &packet)?;
    let ctrl = ControlProfile::new(c.omega, off, off + ns(c.storage_time_ns), ns(c.edge_ns))?;
    let slow = run_slow_light(&packet, &ens, c.omega, solver.as_ref())?;
    let stored = run_storage(&packet, &ens, &ctrl, &cfg.decay(), solver.as_ref())?;

    let mut t = Table::new("store", &["t_ns", "input", "slowed", "retrieved"]);
    let g = stored.input.grid();
    let (ia, sa, ra) = (
        stored.input.intensity(),
        slow.output.intensity(),
        stored.retrieved.intensity(),
    );
    let n = g.n.max(slow.output.grid().n);
    for k in 0..n {
        let at = |v: &[f64]| v.get(k).copied().unwrap_or(0.0);
        t.push(vec![
            Cell::F(to_ns(g.time(k))),
            Cell::F(at(&ia)),
            Cell::F(at(&sa)),
            Cell::F(at(&ra)),
        ]);
    }
    out.write_table("store.csv", &t)?;

    let fwhm = stored.input.fwhm();
    let summary = StoreSummary {
        od: ens.od,
        omega: c.omega,
        gamma12: ens.gamma12,
        storage_time_ns: c.storage_time_ns,
        off_time_ns: to_ns(off),
        input_fwhm_ns: to_ns(fwhm),
        slow_light: RunSummary::from(&slow),
        storage: RunSummary::from(&stored),
        se: stored.se,
        likeness: stored.likeness,
        mirror_likeness: mirror_likeness(&stored.input, &stored.retrieved).ok(),
        fractional_delay: fractional_delay(ns(c.storage_time_ns), fwhm),
    };
    out.write_json("store.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub x: f64,
    pub se: f64,
    pub omega: f64,
    pub omega_halfwidth: f64,
    pub off_fraction: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub axis: String,
    /// Unit of `x`.
    pub unit: String,
    pub points: Vec<ScanPoint>,
}

fn scan_summary(r: &ScanResult, axis: &str, unit: &str, x: &[f64]) -> ScanSummary {
    ScanSummary {
        axis: axis.into(),
        unit: unit.into(),
        points: (0..r.len())
            .map(|k| ScanPoint {
                x: x[k],
                se: r.se[k],
                omega: r.optimal_omega[k],
                omega_halfwidth: r.omega_halfwidth[k],
                off_fraction: r.off_fraction[k],
                error: r.failures[k].clone(),
            })
            .collect(),
    }
}

pub fn cmd_scan(cfg: &RunConfig, axis: Axis, out: &OutDir) -> Result<ScanSummary> {
    let packet = source_packet(cfg)?;
    let ens = cfg.ensemble()?;
    let opts = cfg.optimizer_options();
    let s = &cfg.scan;
    let summary = match axis {
        Axis::Od => {
            let r = scan_optical_depth(&s.od, &ens, &packet, &opts)?;
            let mut t = Table::new("scan-od", &["od", "se_opt", "omega_opt", "omega_halfwidth"]);
            for k in 0..r.len() {
                t.push(vec![
                    Cell::F(r.axis[k]),
                    Cell::F(r.se[k]),
                    Cell::F(r.optimal_omega[k]),
                    Cell::F(r.omega_halfwidth[k]),
                ]);
            }
            out.write_table("scan_od.csv", &t)?;
            scan_summary(&r, "od", "1", &r.axis)
        }
        Axis::Omega => {
            let r = scan_omega(&s.omega, &ens, &packet, &opts)?;
            let mut t = Table::new("scan-omega", &["omega", "se", "off_fraction"]);
            for k in 0..r.len() {
                t.push(vec![Cell::F(r.axis[k]), Cell::F(r.se[k]), Cell::F(r.off_fraction[k])]);
            }
            out.write_table("scan_omega.csv", &t)?;
            scan_summary(&r, "omega", "gamma13", &r.axis)
        }
        Axis::StorageTime => {
            let times: Vec<f64> = s.storage_time_ns.iter().map(|&t| ns(t)).collect();
            let c = &cfg.control;
            let r = scan_storage_time(
                &times,
                &ens,
                c.omega,
                c.off_fraction,
                &packet,
                &cfg.decay(),
                ns(c.edge_ns),
            )?;
            let mut t = Table::new("scan-storage-time", &["storage_time_ns", "se"]);
            for k in 0..r.len() {
                t.push(vec![Cell::F(s.storage_time_ns[k]), Cell::F(r.se[k])]);
            }
            out.write_table("scan_storage_time.csv", &t)?;
            scan_summary(&r, "storage-time", "ns", &s.storage_time_ns)
        }
    };
    let failed = summary.points.iter().filter(|p| p.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} scan points failed", summary.points.len());
    }
    let name = format!("scan_{}.json", summary.axis.replace('-', "_"));
    out.write_json(&name, &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct EitFitSummary {
    pub od: f64,
    pub omega_c: f64,
    pub gamma12: f64,
    /// 95% half-widths of `od`, `omega_c`, `gamma12`.
    pub half_widths: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFitSummary {
    pub tau0_ns: f64,
    pub tau0_halfwidth_ns: f64,
    pub se0: f64,
    pub se0_halfwidth: f64,
    pub rss: f64,
    pub points: usize,
    /// Storage time where the fitted curve reaches SE = 0.5, if it does.
    pub t50_ns: Option<f64>,
    /// `t50` over the input FWHM.
    pub fractional_delay: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum FitSummary {
    Eit(EitFitSummary),
    Decay(DecayFitSummary),
}

pub fn cmd_fit(cfg: &RunConfig, kind: FitKind, data: &Path, out: &OutDir) -> Result<FitSummary> {
    let rows = read_numeric_csv(data, 2)?;
    let summary = match kind {
        FitKind::Eit => {
            let curve =
                TransmissionCurve::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())?;
            let guess = EitParams {
                od: cfg.ensemble.od,
                omega_c: cfg.control.omega,
                gamma12: cfg.ensemble.gamma12,
            };
            let fit = fit_eit(&curve, guess, &cfg.ensemble()?)?;
            let s = EitFitSummary {
                od: fit.params.od,
                omega_c: fit.params.omega_c,
                gamma12: fit.params.gamma12,
                half_widths: fit.report.half_widths.clone(),
                rss: fit.report.rss,
                iterations: fit.report.iterations,
                points: curve.len(),
            };
            out.write_json("fit_eit.json", &s)?;
            FitSummary::Eit(s)
        }
        FitKind::Decay => {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (ns(r[0]), r[1])).collect();
            let fit = fit_gaussian_decay(&pts)?;
            let t50 = storage_time_at(0.5, fit.tau0, fit.se0).ok();
            let fwhm = source_packet(cfg)?.main_lobe().fwhm();
            let s = DecayFitSummary {
                tau0_ns: to_ns(fit.tau0),
                tau0_halfwidth_ns: to_ns(fit.report.half_widths[0]),
                se0: fit.se0,
                se0_halfwidth: fit.report.half_widths[1],
                rss: fit.report.rss,
                points: pts.len(),
                t50_ns: t50.map(to_ns),
                fractional_delay: t50.map(|t| fractional_delay(t, fwhm)),
            };
            out.write_json("fit_decay.json", &s)?;
            FitSummary::Decay(s)
        }
    };
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub od: f64,
    pub omega: f64,
    pub gamma12: f64,
    pub noise: f64,
    pub points: usize,
}

/// Synthetic EIT transmission spectrum, optionally with Gaussian noise.
pub fn cmd_spectrum(cfg: &RunConfig, seed: u64, out: &OutDir) -> Result<SpectrumSummary> {
    let ens = cfg.ensemble()?;
    let sp = &cfg.spectrum;
    let clean = eit_spectrum(&detuning_grid(sp.span, sp.points), &ens, cfg.control.omega)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sp.noise).map_err(|e| CliError::config(format!("spectrum.noise: {e}")))?;
    let mut t = Table::new("spectrum", &["detuning", "transmission"]);
    for (&d, &v) in clean.detunings.iter().zip(&clean.transmission) {
        t.push(vec![Cell::F(d), Cell::F(v + noise.sample(&mut rng))]);
    }
    out.write_table("spectrum.csv", &t)?;
    let s = SpectrumSummary {
        od: ens.od,
        omega: cfg.control.omega,
        gamma12: ens.gamma12,
        noise: sp.noise,
        points: sp.points,
    };
    out.write_json("spectrum.json", &s)?;
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsSummary {
    pub events: usize,
    pub heralds: usize,
    pub duration_s: f64,
    pub peak_ns: f64,
    pub g2: Option<Gc2Result>,
    pub g2_error: Option<String>,
    pub g_sas_peak: Option<f64>,
    pub g_sas_peak_tau_ns: Option<f64>,
    pub r_cs: Option<f64>,
    pub thermal_assumed: bool,
}

pub fn cmd_stats(cfg: &RunConfig, seed: u64, out: &OutDir) -> Result<StatsSummary> {
    let st = &cfg.stats;
    let waveform = source_packet(cfg)?.main_lobe();
    let model = cfg.stat_model(waveform, seed)?;
    let peak_ns = model.waveform_peak_ns();
    let stream = match &st.input {
        Some(p) => read_timetag_file(p)?,
        None => simulate_event_stream(&model, st.duration_s, st.split_as)?,
    };
    if st.dump_timetag {
        let p = out.path("events.ttg");
        write_timetag_file(&stream, &p)?;
    }

    let mut t = Table::new(
        "g2-window",
        &["window_ns", "g2", "uncertainty", "n_g", "n_gt", "n_gr", "n_gtr"],
    );
    for &w in &st.windows_ns {
        match conditional_g2(&stream, w, peak_ns) {
            Ok(r) => t.push(vec![
                Cell::F(w),
                Cell::F(r.value),
                Cell::F(r.uncertainty),
                Cell::U(r.counts.n_g),
                Cell::U(r.counts.n_gt),
                Cell::U(r.counts.n_gr),
                Cell::U(r.counts.n_gtr),
            ]),
            Err(e) => log::warn!("window {w} ns: {e}"),
        }
    }
    out.write_table("g2_window.csv", &t)?;

    let (g2, g2_error) = match conditional_g2(&stream, st.window_ns, peak_ns) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let cc = pair_cross_correlation(&stream, st.bin_ns, st.span_ns)?;
    let mut t = Table::new("cross-correlation", &["tau_ns", "counts", "g"]);
    for k in 0..cc.tau_ns.len() {
        t.push(vec![Cell::F(cc.tau_ns[k]), Cell::U(cc.counts[k]), Cell::F(cc.g[k])]);
    }
    out.write_table("cross_correlation.csv", &t)?;
    let cs = cauchy_schwarz_thermal(&stream, st.bin_ns, st.span_ns).ok();
    let peak = cc.peak();

    let summary = StatsSummary {
        events: stream.len(),
        heralds: stream.count(Channel::G),
        duration_s: stream.duration_ns() as f64 * 1e-9,
        peak_ns,
        g2,
        g2_error,
        g_sas_peak: peak.map(|p| p.0),
        g_sas_peak_tau_ns: peak.map(|p| p.1),
        r_cs: cs.map(|c| c.r_cs),
        thermal_assumed: cs.is_some_and(|c| c.thermal_assumed),
    };
    out.write_json("stats.json", &summary)?;
    Ok(summary)
}
