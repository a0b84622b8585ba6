//! Full bi-directional scheme keeping `d_t` in the field equation. Steps follow
//! the light characteristic (one cell per step, `dt = dz / c`) and each cell is
//! closed with a trapezoidal (Crank-Nicolson) update of the local 2x2 system.
//! Only practical when `c0` is small or the window is short; used to validate
//! the retarded-frame reduction.

use num_complex::Complex64;

use super::{finite, z_grid, FieldState, Medium, Propagation, SolverConfig};
use crate::error::{Error, Result};
use crate::units::GAMMA13_SI;
use crate::wavepacket::Wavepacket;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub(super) fn integrate(input: &Wavepacket, m: &Medium, cfg: &SolverConfig) -> Result<Propagation> {
    let grid = *input.grid();
    let nz = cfg.n_z;
    let hz = 1.0 / (nz - 1) as f64;
    // light speed in ensemble lengths per internal time unit
    let c_tilde = m.ens.c0 / (m.ens.length * GAMMA13_SI);
    let hd = hz / c_tilde;
    let half_od = m.half_od;
    let beta = 0.5 * hz;

    let zero = Complex64::new(0.0, 0.0);
    let (mut eps, mut pol, mut spin) = (vec![zero; nz], vec![zero; nz], vec![zero; nz]);
    let (mut eps_n, mut pol_n, mut spin_n) = (vec![zero; nz], vec![zero; nz], vec![zero; nz]);
    eps[0] = input.sample_cubic(grid.t_start);

    let zs = cfg.trace_every.map(|_| z_grid(m.ens, nz));
    let mut trace = cfg.trace_every.map(|_| Vec::new());
    let mut out = vec![zero; grid.n];
    out[0] = eps[nz - 1];
    let mut next_k = 1;
    let mut t0 = grid.t_start;
    let mut step = 0usize;

    while next_k < grid.n {
        let t1 = t0 + hd;
        let (w0, w1) = (m.omega(t0), m.omega(t1));
        let (r0, r1) = (m.spin_rate(t0, w0), m.spin_rate(t1, w1));
        let a12 = -0.5 * hd * I * 0.5 * w1;
        let a22 = 1.0 + 0.5 * hd * r1;
        for j in 0..nz {
            let (b, a_field) = if j == 0 {
                (0.0, input.sample_cubic(t1))
            } else {
                (beta, eps[j - 1] + I * beta * pol[j - 1])
            };
            let a11 = Complex64::new(1.0 + 0.5 * hd + 0.5 * hd * half_od * b, 0.0);
            let fp0 = -pol[j] + I * (half_od * eps[j] + 0.5 * w0 * spin[j]);
            let fs0 = -r0 * spin[j] + I * 0.5 * w0 * pol[j];
            let b1 = pol[j] + 0.5 * hd * (fp0 + I * half_od * a_field);
            let b2 = spin[j] + 0.5 * hd * fs0;
            let det = a11 * a22 - a12 * a12;
            let p1 = (b1 * a22 - a12 * b2) / det;
            let s1 = (a11 * b2 - a12 * b1) / det;
            pol_n[j] = p1;
            spin_n[j] = s1;
            eps_n[j] = a_field + I * b * p1;
        }
        std::mem::swap(&mut eps, &mut eps_n);
        std::mem::swap(&mut pol, &mut pol_n);
        std::mem::swap(&mut spin, &mut spin_n);
        step += 1;
        if !finite(eps[nz - 1]) {
            return Err(Error::NumericalInstability { step, time: t1 });
        }
        // eps_n now holds the previous step's field
        while next_k < grid.n && grid.time(next_k) <= t1 {
            let tk = grid.time(next_k);
            let f = (tk - t0) / hd;
            out[next_k] = eps_n[nz - 1] * (1.0 - f) + eps[nz - 1] * f;
            if let (Some(every), Some(tr)) = (cfg.trace_every, trace.as_mut()) {
                if next_k % every.max(1) == 0 {
                    tr.push(FieldState {
                        time: t1,
                        z_grid: zs.clone().unwrap_or_default(),
                        eps: eps.clone(),
                        pol: pol.clone(),
                        spin: spin.clone(),
                    });
                }
            }
            next_k += 1;
        }
        t0 = t1;
    }
    let output = Wavepacket::new(grid, out, input.precursor_mask().map(|m| m.to_vec()))?;
    Ok(Propagation { output, trace })
}
