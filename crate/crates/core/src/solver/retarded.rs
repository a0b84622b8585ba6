//! Retarded-frame integrator: the field is slaved to the polarization along z
//! (trapezoid between grid planes) and the coherences are advanced with RK4.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{finite, z_grid, FieldState, Medium, Propagation, SolverConfig};
use crate::error::{Error, Result};
use crate::wavepacket::Wavepacket;

const I: Complex64 = Complex64::new(0.0, 1.0);

struct Workspace {
    eps: Vec<Complex64>,
    kp: [Vec<Complex64>; 4],
    ks: [Vec<Complex64>; 4],
    tp: Vec<Complex64>,
    ts: Vec<Complex64>,
}

/// `E(zeta_j)` from the polarization profile and the entrance value.
#[inline]
fn fill_field(pol: &[Complex64], e_in: Complex64, half_h: f64, eps: &mut [Complex64]) {
    let mut acc = e_in;
    eps[0] = acc;
    for j in 1..pol.len() {
        acc += I * half_h * (pol[j - 1] + pol[j]);
        eps[j] = acc;
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn rhs(
    m: &Medium,
    t: f64,
    e_in: Complex64,
    pol: &[Complex64],
    spin: &[Complex64],
    half_h: f64,
    eps: &mut [Complex64],
    dp: &mut [Complex64],
    ds: &mut [Complex64],
) {
    fill_field(pol, e_in, half_h, eps);
    let omega = m.omega(t);
    let half_omega = 0.5 * omega;
    let rate = m.spin_rate(t, omega);
    let half_od = m.half_od;
    for j in 0..pol.len() {
        dp[j] = -pol[j] + I * (half_od * eps[j] + half_omega * spin[j]);
        ds[j] = -rate * spin[j] + I * half_omega * pol[j];
    }
}

pub(super) fn integrate(input: &Wavepacket, m: &Medium, cfg: &SolverConfig) -> Result<Propagation> {
    let grid = *input.grid();
    let nz = cfg.n_z;
    let half_h = 0.5 / (nz - 1) as f64;
    let sub = (grid.dt / cfg.dt).ceil().max(1.0) as usize;
    let h = grid.dt / sub as f64;

    let zero = Complex64::new(0.0, 0.0);
    let mut pol = vec![zero; nz];
    let mut spin = vec![zero; nz];
    let mut w = Workspace {
        eps: vec![zero; nz],
        kp: std::array::from_fn(|_| vec![zero; nz]),
        ks: std::array::from_fn(|_| vec![zero; nz]),
        tp: vec![zero; nz],
        ts: vec![zero; nz],
    };
    let zs = cfg.trace_every.map(|_| z_grid(m.ens, nz));
    let mut trace = cfg.trace_every.map(|_| Vec::new());
    let mut out = vec![zero; grid.n];
    let amp = input.amplitude();
    // input at every half sub-step
    let fine = fourier_upsample(amp, 2 * sub);

    for k in 0..grid.n {
        let t_k = grid.time(k);
        fill_field(&pol, amp[k], half_h, &mut w.eps);
        out[k] = w.eps[nz - 1];
        if !finite(out[k]) || !finite(pol[nz - 1]) || !finite(spin[nz - 1]) {
            return Err(Error::NumericalInstability { step: k, time: t_k });
        }
        if let (Some(every), Some(tr)) = (cfg.trace_every, trace.as_mut()) {
            if k % every.max(1) == 0 {
                tr.push(FieldState {
                    time: t_k,
                    z_grid: zs.clone().unwrap_or_default(),
                    eps: w.eps.clone(),
                    pol: pol.clone(),
                    spin: spin.clone(),
                });
            }
        }
        if k + 1 == grid.n {
            break;
        }
        for s in 0..sub {
            let t0 = t_k + s as f64 * h;
            let i = 2 * (k * sub + s);
            let e = [fine[i], fine[i + 1], fine[i + 2]];
            rk4_step(m, t0, h, e, &mut pol, &mut spin, half_h, &mut w);
        }
    }
    let output = Wavepacket::new(grid, out, input.precursor_mask().map(|m| m.to_vec()))?;
    Ok(Propagation { output, trace })
}

/// Band-limited interpolation of `x` onto a grid `factor` times finer. The
/// signal is zero-padded to twice its length first so the periodic images do
/// not overlap. Returns `factor * (n - 1) + 1` samples; sample `factor * k`
/// reproduces `x[k]`.
pub(crate) fn fourier_upsample(x: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = x.len();
    let want = factor * (n - 1) + 1;
    if factor == 1 {
        return x.to_vec();
    }
    let n0 = (2 * n).next_power_of_two();
    let n1 = n0 * factor;
    let zero = Complex64::new(0.0, 0.0);
    let mut spec = vec![zero; n0];
    spec[..n].copy_from_slice(x);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n0).process(&mut spec);
    let mut big = vec![zero; n1];
    let half = n0 / 2;
    big[..half].copy_from_slice(&spec[..half]);
    big[n1 - half + 1..].copy_from_slice(&spec[half + 1..]);
    big[half] = 0.5 * spec[half];
    big[n1 - half] = 0.5 * spec[half];
    planner.plan_fft_inverse(n1).process(&mut big);
    let scale = 1.0 / n0 as f64;
    big.truncate(want);
    for v in big.iter_mut() {
        *v *= scale;
    }
    big
}

#[allow(clippy::too_many_arguments)]
fn rk4_step(
    m: &Medium,
    t0: f64,
    h: f64,
    e: [Complex64; 3],
    pol: &mut [Complex64],
    spin: &mut [Complex64],
    half_h: f64,
    w: &mut Workspace,
) {
    let nz = pol.len();
    let Workspace { eps, kp, ks, tp, ts } = w;
    let [kp1, kp2, kp3, kp4] = kp;
    let [ks1, ks2, ks3, ks4] = ks;

    rhs(m, t0, e[0], pol, spin, half_h, eps, kp1, ks1);
    for j in 0..nz {
        tp[j] = pol[j] + 0.5 * h * kp1[j];
        ts[j] = spin[j] + 0.5 * h * ks1[j];
    }
    rhs(m, t0 + 0.5 * h, e[1], tp, ts, half_h, eps, kp2, ks2);
    for j in 0..nz {
        tp[j] = pol[j] + 0.5 * h * kp2[j];
        ts[j] = spin[j] + 0.5 * h * ks2[j];
    }
    rhs(m, t0 + 0.5 * h, e[1], tp, ts, half_h, eps, kp3, ks3);
    for j in 0..nz {
        tp[j] = pol[j] + h * kp3[j];
        ts[j] = spin[j] + h * ks3[j];
    }
    rhs(m, t0 + h, e[2], tp, ts, half_h, eps, kp4, ks4);
    let c = h / 6.0;
    for j in 0..nz {
        pol[j] += c * (kp1[j] + 2.0 * (kp2[j] + kp3[j]) + kp4[j]);
        spin[j] += c * (ks1[j] + 2.0 * (ks2[j] + ks3[j]) + ks4[j]);
    }
}
