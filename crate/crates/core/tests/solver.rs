use eitmem::solver::{propagate_with_decay, FieldState};
use eitmem::spectral::propagate_spectral;
use eitmem::storage::run_storage;
use eitmem::units::{ns, to_ns, us, GAMMA13_SI};
use eitmem::{propagate, ControlProfile, DecayModel, EnsembleParams, Error, SolverConfig, TimeGrid, Wavepacket};
use num_complex::Complex64;

const FWHM_TO_SIGMA: f64 = 2.354_820_045;

fn gaussian_400ns(t_end_ns: f64) -> Wavepacket {
    let grid = TimeGrid::spanning(0.0, ns(t_end_ns), ns(2.0)).unwrap();
    Wavepacket::gaussian(grid, ns(1000.0), ns(400.0) / FWHM_TO_SIGMA).unwrap()
}

fn run(w: &Wavepacket, ens: &EnsembleParams, ctrl: &ControlProfile) -> Wavepacket {
    let cfg = SolverConfig::for_problem(ens, ctrl, w);
    propagate(w, ens, ctrl, &cfg).unwrap().output
}

#[test]
fn no_atoms_is_identity() {
    let w = gaussian_400ns(2500.0);
    let ens = EnsembleParams::memory(0.0, 0.004);
    let out = run(&w, &ens, &ControlProfile::constant(7.6));
    assert!(out.relative_l2_error(&w) < 1e-6);
}

#[test]
fn two_level_beer_lambert() {
    // 2 us FWHM: bandwidth well inside the natural line
    let grid = TimeGrid::spanning(0.0, ns(12000.0), ns(10.0)).unwrap();
    let w = Wavepacket::gaussian(grid, ns(6000.0), ns(2000.0) / FWHM_TO_SIGMA).unwrap();
    let ens = EnsembleParams::memory(4.0, 0.004);
    let ctrl = ControlProfile::constant(0.0);
    let out = run(&w, &ens, &ctrl);
    let expected = (-4.0f64).exp();
    let ratio = out.norm(false) / w.norm(false);
    assert!((ratio - expected).abs() / expected < 0.05, "{ratio} vs {expected}");
    // the closed-form transfer function agrees to much better than 5%
    let oracle = propagate_spectral(&w, &ens, 0.0, 2);
    assert!(out.relative_l2_error(&oracle) < 1e-3);
}

#[test]
fn slow_light_group_delay() {
    let w = gaussian_400ns(3000.0);
    let ens = EnsembleParams::memory(126.0, 0.0);
    let out = run(&w, &ens, &ControlProfile::constant(7.6));
    let delay = to_ns(out.peak_time() - w.peak_time());
    assert!((delay - 232.0).abs() < 0.05 * 232.0, "delay {delay} ns");
}

#[test]
fn linear_in_the_field() {
    let w = gaussian_400ns(2500.0);
    let ens = EnsembleParams::memory(90.0, 0.004);
    let ctrl = ControlProfile::storage(5.0, ns(1300.0), ns(300.0)).unwrap();
    let cfg = SolverConfig::for_problem(&ens, &ctrl, &w);
    let a = Complex64::new(0.3, -1.2);
    let one = propagate(&w, &ens, &ctrl, &cfg).unwrap().output;
    let scaled = propagate(&w.scaled(a), &ens, &ctrl, &cfg).unwrap().output;
    assert!(scaled.relative_l2_error(&one.scaled(a)) < 1e-9);
}

#[test]
fn energy_never_increases() {
    let w = gaussian_400ns(4000.0);
    let cases = [
        (30.0, 3.0, None),
        (126.0, 7.6, None),
        (200.0, 12.0, None),
        (126.0, 4.5, Some((1400.0, 900.0))),
        (60.0, 2.5, Some((1300.0, 200.0))),
    ];
    for (od, omega, storage) in cases {
        let ens = EnsembleParams::memory(od, 0.004);
        let ctrl = match storage {
            None => ControlProfile::constant(omega),
            Some((off, dur)) => ControlProfile::storage(omega, ns(off), ns(dur)).unwrap(),
        };
        let out = run(&w, &ens, &ctrl);
        assert!(
            out.norm(false) <= w.norm(false) * (1.0 + 1e-6),
            "od {od} omega {omega}: {} > {}",
            out.norm(false),
            w.norm(false)
        );
    }
}

#[test]
fn zero_input_stays_zero() {
    let grid = TimeGrid::spanning(0.0, ns(1000.0), ns(5.0)).unwrap();
    let w = Wavepacket::zeros(grid);
    let ens = EnsembleParams::memory(126.0, 0.004);
    let ctrl = ControlProfile::storage(7.6, ns(400.0), ns(200.0)).unwrap();
    let cfg = SolverConfig {
        trace_every: Some(20),
        ..SolverConfig::for_problem(&ens, &ctrl, &gaussian_400ns(1000.0))
    };
    let p = propagate(&w, &ens, &ctrl, &cfg).unwrap();
    assert!(p.output.amplitude().iter().all(|a| a.norm() == 0.0));
    let trace: Vec<FieldState> = p.trace.unwrap();
    assert!(!trace.is_empty());
    for s in &trace {
        assert_eq!(s.z_grid.len(), cfg.n_z);
        assert_eq!(s.eps.len(), cfg.n_z);
        assert!(s.eps.iter().chain(&s.pol).chain(&s.spin).all(|v| v.norm() == 0.0));
    }
}

#[test]
fn matches_frequency_domain_oracle() {
    let w = gaussian_400ns(5000.0);
    for (od, omega) in [(126.0, 7.6), (40.0, 3.0), (180.0, 10.0)] {
        let ens = EnsembleParams::memory(od, 0.004);
        let ctrl = ControlProfile::constant(omega);
        let cfg = SolverConfig::for_problem(&ens, &ctrl, &w);
        let oracle = propagate_spectral(&w, &ens, omega, 2);
        let e1 = propagate(&w, &ens, &ctrl, &cfg)
            .unwrap()
            .output
            .relative_l2_error(&oracle);
        let e2 = propagate(&w, &ens, &ctrl, &cfg.refined())
            .unwrap()
            .output
            .relative_l2_error(&oracle);
        assert!(e1 < 1e-3, "od {od} omega {omega}: {e1}");
        assert!(e2 < 1e-4, "od {od} omega {omega}: refined {e2}");
    }
}

#[test]
fn full_scheme_matches_retarded_frame() {
    let mut ens = EnsembleParams::memory(126.0, 0.004);
    // slow the vacuum light so the characteristic scheme stays cheap
    let transit = 1.0;
    ens.c0 = ens.length * GAMMA13_SI / transit;
    let grid = TimeGrid::spanning(0.0, 60.0, 0.05).unwrap();
    let w = Wavepacket::gaussian(grid, 15.0, 3.2).unwrap();
    let ctrl = ControlProfile::constant(7.6);
    let cfg = SolverConfig::for_problem(&ens, &ctrl, &w);
    let retarded = propagate(&w, &ens, &ctrl, &cfg).unwrap().output;
    let full = propagate(
        &w,
        &ens,
        &ctrl,
        &SolverConfig {
            adiabatic_field: false,
            ..cfg
        },
    )
    .unwrap()
    .output;
    let shifted = Wavepacket::from_fn(grid, |t| retarded.sample_cubic(t - transit)).unwrap();
    assert!(full.relative_l2_error(&shifted) < 1e-3);
}

#[test]
fn storage_se_converges_under_refinement() {
    let src = eitmem::SourceParams::default();
    let w = eitmem::generate_heralded_waveform(&src, &src.default_grid().unwrap()).unwrap();
    let ens = EnsembleParams::memory(126.0, 0.004);
    let off = w.main_lobe().peak_time() + 0.5 * ens.group_delay(7.6);
    let ctrl = ControlProfile::storage(7.6, off, ns(900.0)).unwrap();
    let decay = DecayModel::gaussian(us(4.0));
    let base = run_storage(&w, &ens, &ctrl, &decay, None).unwrap();
    let lobe = base.input.clone();
    let cfg = SolverConfig::for_problem(&ens, &ctrl, &lobe).refined();
    let fine = run_storage(&w, &ens, &ctrl, &decay, Some(&cfg)).unwrap();
    assert!((base.se - fine.se).abs() < 0.002, "{} vs {}", base.se, fine.se);
}

#[test]
fn step_size_violations_rejected() {
    let w = gaussian_400ns(2000.0);
    let ens = EnsembleParams::memory(126.0, 0.004);
    let ctrl = ControlProfile::constant(7.6);
    let good = SolverConfig::for_problem(&ens, &ctrl, &w);
    let coarse_t = SolverConfig {
        dt: 2.0 * good.dt,
        ..good
    };
    assert!(matches!(propagate(&w, &ens, &ctrl, &coarse_t), Err(Error::StepSize(_))));
    let coarse_z = SolverConfig { n_z: 100, ..good };
    assert!(matches!(propagate(&w, &ens, &ctrl, &coarse_z), Err(Error::StepSize(_))));
}

#[test]
fn decay_only_acts_in_the_dark() {
    // with the control never switched off, the storage law is irrelevant
    let w = gaussian_400ns(3000.0);
    let ens = EnsembleParams::memory(60.0, 0.004);
    let ctrl = ControlProfile::constant(6.0);
    let cfg = SolverConfig::for_problem(&ens, &ctrl, &w);
    let a = propagate(&w, &ens, &ctrl, &cfg).unwrap().output;
    let b = propagate_with_decay(&w, &ens, &ctrl, &cfg, Some(&DecayModel::gaussian(1.0)))
        .unwrap()
        .output;
    assert_eq!(a, b);
}
