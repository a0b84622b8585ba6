//! TOML run configuration. Times are in ns, rates in units of gamma13 unless
//! a key says otherwise. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use eitmem::control::default_edge;
use eitmem::optimizer::OptimizerOptions;
use eitmem::source::PumpProfile;
use eitmem::stats::{demo_retrieved_model, demo_source_model, SourceStatModel};
use eitmem::units::{ns, to_ns};
use eitmem::{DecayKind, DecayModel, EnsembleParams, SolverConfig, SourceParams, Wavepacket};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub source: SourceSection,
    pub ensemble: EnsembleSection,
    pub control: ControlSection,
    pub solver: Option<SolverSection>,
    pub decay: DecaySection,
    pub scan: ScanSection,
    pub spectrum: SpectrumSection,
    pub stats: StatsSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PumpKind {
    Gaussian,
    Constant,
    Table,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    pub od1: f64,
    pub omega_c1: f64,
    /// Meters.
    pub l1: f64,
    /// Meters.
    pub w0: f64,
    pub theta_deg: f64,
    pub kappa0: f64,
    pub precursor_fraction: f64,
    pub pump: PumpKind,
    /// `[z_m, f]` pairs for `pump = "table"`.
    pub pump_table: Vec<[f64; 2]>,
}

impl Default for SourceSection {
    fn default() -> Self {
        let p = SourceParams::default();
        SourceSection {
            od1: p.od1,
            omega_c1: p.omega_c1,
            l1: p.l1,
            w0: p.w0,
            theta_deg: p.theta.to_degrees(),
            kappa0: p.kappa0,
            precursor_fraction: p.precursor_fraction,
            pump: PumpKind::Gaussian,
            pump_table: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub od: f64,
    pub gamma12: f64,
    /// Meters.
    pub length: f64,
    pub beta: Option<f64>,
    pub delta_s: Option<f64>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            od: 126.0,
            gamma12: 0.004,
            length: 0.028,
            beta: None,
            delta_s: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    pub omega: f64,
    pub storage_time_ns: f64,
    /// Switch-off after the input peak, as a fraction of the group delay.
    pub off_fraction: f64,
    /// Absolute switch-off time after the herald; overrides `off_fraction`.
    pub off_time_ns: Option<f64>,
    pub edge_ns: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        ControlSection {
            omega: 7.6,
            storage_time_ns: 900.0,
            off_fraction: 0.5,
            off_time_ns: None,
            edge_ns: to_ns(default_edge()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub n_z: usize,
    pub dt_ns: f64,
    #[serde(default = "yes")]
    pub adiabatic_field: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySection {
    pub kind: DecayKind,
    pub tau0_ns: f64,
    pub gamma12: f64,
}

impl Default for DecaySection {
    fn default() -> Self {
        DecaySection {
            kind: DecayKind::Gaussian,
            tau0_ns: 4000.0,
            gamma12: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub od: Vec<f64>,
    pub omega: Vec<f64>,
    pub storage_time_ns: Vec<f64>,
    pub omega_min: f64,
    pub omega_max: f64,
    pub coarse_points: usize,
    pub off_fractions: Vec<f64>,
    pub rel_tol: f64,
    pub plateau_drop: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        let o = OptimizerOptions::default();
        ScanSection {
            od: vec![30.0, 60.0, 90.0, 126.0, 168.0],
            omega: (2..=12).map(f64::from).collect(),
            storage_time_ns: (0..=5).map(|k| 1000.0 * k as f64).collect(),
            omega_min: o.omega_min,
            omega_max: o.omega_max,
            coarse_points: o.coarse_points,
            off_fractions: o.off_fractions,
            rel_tol: o.rel_tol,
            plateau_drop: o.plateau_drop,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    /// Full detuning span in gamma13.
    pub span: f64,
    pub points: usize,
    /// Standard deviation of additive Gaussian noise on the transmission.
    pub noise: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            span: 40.0,
            points: 401,
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatsPreset {
    Source,
    Retrieved,
    Ideal,
    TwoPhoton,
    Poisson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsSection {
    pub preset: StatsPreset,
    /// Per second.
    pub trial_rate: Option<f64>,
    pub pair_probability: Option<f64>,
    pub two_pair_probability: Option<f64>,
    /// Per second.
    pub noise_rate_as: Option<f64>,
    pub dark_rate_g: Option<f64>,
    pub dark_rate_as: Option<f64>,
    pub channel_efficiency: Option<f64>,
    pub herald_efficiency: Option<f64>,
    pub duration_s: f64,
    pub split_as: bool,
    pub window_ns: f64,
    /// Windows for the g2-versus-window table.
    pub windows_ns: Vec<f64>,
    pub bin_ns: f64,
    pub span_ns: f64,
    pub dump_timetag: bool,
    /// Analyse this time-tag file (TTG1 or CSV) instead of simulating.
    pub input: Option<PathBuf>,
}

impl Default for StatsSection {
    fn default() -> Self {
        StatsSection {
            preset: StatsPreset::Source,
            trial_rate: None,
            pair_probability: None,
            two_pair_probability: None,
            noise_rate_as: None,
            dark_rate_g: None,
            dark_rate_as: None,
            channel_efficiency: None,
            herald_efficiency: None,
            duration_s: 10.0,
            split_as: true,
            window_ns: 800.0,
            windows_ns: vec![200.0, 400.0, 600.0, 800.0, 1000.0, 1200.0, 1600.0],
            bin_ns: 10.0,
            span_ns: 3000.0,
            dump_timetag: false,
            input: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|source| CliError::Toml {
            path: origin.to_string(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Re-check every section against the model invariants.
    pub fn validate(&self) -> Result<()> {
        self.source_params()?.validate()?;
        self.ensemble()?.validate()?;
        self.decay().validate()?;
        self.optimizer_options().validate()?;
        let c = &self.control;
        if !(c.omega > 0.0) {
            return Err(CliError::config("control.omega must be positive"));
        }
        if !(c.storage_time_ns >= 0.0) {
            return Err(CliError::config("control.storage_time_ns must be >= 0"));
        }
        if !(c.edge_ns > 0.0) {
            return Err(CliError::config("control.edge_ns must be positive"));
        }
        if !(c.off_fraction > 0.0) {
            return Err(CliError::config("control.off_fraction must be positive"));
        }
        if let Some(s) = &self.solver {
            if s.n_z < 2 || !(s.dt_ns > 0.0) {
                return Err(CliError::config("solver needs n_z >= 2 and dt_ns > 0"));
            }
        }
        let sp = &self.spectrum;
        if !(sp.span > 0.0) || sp.points < 2 || !(sp.noise >= 0.0) {
            return Err(CliError::config("spectrum needs span > 0, points >= 2, noise >= 0"));
        }
        let st = &self.stats;
        if !(st.duration_s > 0.0) || !(st.window_ns > 0.0) || !(st.bin_ns > 0.0) || !(st.span_ns > st.bin_ns) {
            return Err(CliError::config(
                "stats needs duration_s, window_ns, bin_ns > 0 and span_ns > bin_ns",
            ));
        }
        if st.windows_ns.iter().any(|w| !(*w > 0.0)) {
            return Err(CliError::config("stats.windows_ns must be positive"));
        }
        if self.scan.storage_time_ns.iter().any(|t| !(*t >= 0.0)) {
            return Err(CliError::config("scan.storage_time_ns must be >= 0"));
        }
        Ok(())
    }

    pub fn source_params(&self) -> Result<SourceParams> {
        let s = &self.source;
        let pump = match s.pump {
            PumpKind::Gaussian => PumpProfile::Gaussian,
            PumpKind::Constant => PumpProfile::Constant,
            PumpKind::Table => {
                if s.pump_table.len() < 2 {
                    return Err(CliError::config("pump = \"table\" needs pump_table with >= 2 rows"));
                }
                PumpProfile::Tabulated(s.pump_table.iter().map(|r| (r[0], r[1])).collect())
            }
        };
        Ok(SourceParams {
            od1: s.od1,
            omega_c1: s.omega_c1,
            l1: s.l1,
            w0: s.w0,
            theta: s.theta_deg.to_radians(),
            kappa0: s.kappa0,
            precursor_fraction: s.precursor_fraction,
            pump,
        })
    }

    pub fn ensemble(&self) -> Result<EnsembleParams> {
        let e = &self.ensemble;
        let mut p = EnsembleParams::memory(e.od, e.gamma12);
        p.length = e.length;
        if let Some(b) = e.beta {
            p.beta = b;
        }
        if let Some(d) = e.delta_s {
            p.delta_s = d;
        }
        Ok(p)
    }

    pub fn decay(&self) -> DecayModel {
        let d = &self.decay;
        DecayModel {
            kind: d.kind,
            tau0: ns(d.tau0_ns),
            gamma12: d.gamma12,
        }
    }

    pub fn solver(&self) -> Option<SolverConfig> {
        self.solver.as_ref().map(|s| SolverConfig {
            n_z: s.n_z,
            dt: ns(s.dt_ns),
            adiabatic_field: s.adiabatic_field,
            trace_every: None,
        })
    }

    pub fn optimizer_options(&self) -> OptimizerOptions {
        let s = &self.scan;
        OptimizerOptions {
            omega_min: s.omega_min,
            omega_max: s.omega_max,
            coarse_points: s.coarse_points,
            off_fractions: s.off_fractions.clone(),
            rel_tol: s.rel_tol,
            plateau_drop: s.plateau_drop,
            storage_time: ns(self.control.storage_time_ns),
            decay: self.decay(),
            edge_10_90: ns(self.control.edge_ns),
        }
    }

    /// Detector model for `stats`, preset first and then explicit keys.
    pub fn stat_model(&self, waveform: Wavepacket, seed: u64) -> Result<SourceStatModel> {
        let s = &self.stats;
        let mut m = match s.preset {
            StatsPreset::Source => demo_source_model(waveform, seed),
            StatsPreset::Retrieved => demo_retrieved_model(waveform, seed),
            StatsPreset::Ideal => SourceStatModel::ideal(waveform, 1e5, seed),
            StatsPreset::TwoPhoton => SourceStatModel {
                two_pair_probability: 1.0,
                ..SourceStatModel::ideal(waveform, 1e5, seed)
            },
            StatsPreset::Poisson => SourceStatModel {
                pair_probability: 0.0,
                dark_rate_g: 2e4,
                noise_rate_as: 1e6,
                ..SourceStatModel::ideal(waveform, 1e5, seed)
            },
        };
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut m.trial_rate, s.trial_rate);
        set(&mut m.pair_probability, s.pair_probability);
        set(&mut m.two_pair_probability, s.two_pair_probability);
        set(&mut m.noise_rate_as, s.noise_rate_as);
        set(&mut m.dark_rate_g, s.dark_rate_g);
        set(&mut m.dark_rate_as, s.dark_rate_as);
        set(&mut m.channel_efficiency, s.channel_efficiency);
        set(&mut m.herald_efficiency, s.herald_efficiency);
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_operating_point() {
        let c = RunConfig::parse("", "<inline>").unwrap();
        assert_eq!(c.ensemble.od, 126.0);
        assert_eq!(c.control.omega, 7.6);
        assert!((c.source_params().unwrap().tau0() - SourceParams::default().tau0()).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = RunConfig::parse("[ensemble]\nodd = 3\n", "<inline>").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("odd"));
    }

    #[test]
    fn invariants_rechecked() {
        let e = RunConfig::parse("[source]\nod1 = 0.0\n", "<inline>").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = RunConfig::parse("[stats]\npreset = \"ideal\"\npair_probability = 1.5\n", "<inline>");
        assert!(e.is_ok(), "stats model is checked when built");
    }

    #[test]
    fn presets_and_overrides() {
        let c = RunConfig::parse("[stats]\npreset = \"two-photon\"\ntrial_rate = 5e4\n", "<inline>").unwrap();
        let w = eitmem::generate_heralded_waveform(
            &c.source_params().unwrap(),
            &c.source_params().unwrap().default_grid().unwrap(),
        )
        .unwrap();
        let m = c.stat_model(w.main_lobe(), 3).unwrap();
        assert_eq!(m.two_pair_probability, 1.0);
        assert_eq!(m.trial_rate, 5e4);
    }
}
