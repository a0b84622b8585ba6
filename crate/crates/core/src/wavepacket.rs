//! Photon amplitude sampled on a uniform time grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Complex photon envelope `psi(tau)`, normalized so that `sum |psi_k|^2 dt` is a
/// detection probability. Samples flagged in `precursor_mask` belong to the
/// optical precursor and are excluded from efficiency integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavepacket {
    grid: TimeGrid,
    amplitude: Vec<Complex64>,
    precursor_mask: Option<Vec<bool>>,
}

impl Wavepacket {
    pub fn new(grid: TimeGrid, amplitude: Vec<Complex64>, precursor_mask: Option<Vec<bool>>) -> Result<Self> {
        if amplitude.len() != grid.n {
            return Err(Error::invalid(
                "amplitude",
                format!("length {} does not match grid size {}", amplitude.len(), grid.n),
            ));
        }
        if let Some(mask) = &precursor_mask {
            if mask.len() != grid.n {
                return Err(Error::invalid(
                    "precursor_mask",
                    format!("length {} does not match grid size {}", mask.len(), grid.n),
                ));
            }
        }
        if amplitude.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("amplitude", "contains non-finite samples"));
        }
        Ok(Wavepacket {
            grid,
            amplitude,
            precursor_mask,
        })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Wavepacket {
            grid,
            amplitude: vec![Complex64::new(0.0, 0.0); grid.n],
            precursor_mask: None,
        }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amplitude = grid.times().map(f).collect();
        Wavepacket::new(grid, amplitude, None)
    }

    /// Real Gaussian with intensity profile `exp(-(t - center)^2 / (2 sigma^2))`,
    /// normalized to unit probability.
    pub fn gaussian(grid: TimeGrid, center: f64, sigma_intensity: f64) -> Result<Self> {
        let mut w = Wavepacket::from_fn(grid, |t| {
            let x = (t - center) / sigma_intensity;
            Complex64::new((-0.25 * x * x).exp(), 0.0)
        })?;
        w.normalize()?;
        Ok(w)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn amplitude_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitude
    }

    pub fn precursor_mask(&self) -> Option<&[bool]> {
        self.precursor_mask.as_deref()
    }

    pub fn with_precursor_mask(mut self, mask: Option<Vec<bool>>) -> Result<Self> {
        if let Some(m) = &mask {
            if m.len() != self.grid.n {
                return Err(Error::invalid("precursor_mask", "length does not match grid"));
            }
        }
        self.precursor_mask = mask;
        Ok(self)
    }

    pub fn is_precursor(&self, k: usize) -> bool {
        self.precursor_mask.as_ref().is_some_and(|m| m[k])
    }

    /// `|psi_k|^2` per sample (probability density).
    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `sum |psi_k|^2 dt`, optionally skipping precursor samples.
    pub fn norm(&self, exclude_precursor: bool) -> f64 {
        self.norm_over(exclude_precursor, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Norm restricted to samples with `t_from <= t <= t_to`.
    pub fn norm_over(&self, exclude_precursor: bool, t_from: f64, t_to: f64) -> f64 {
        let mut acc = 0.0;
        for (k, a) in self.amplitude.iter().enumerate() {
            let t = self.grid.time(k);
            if t < t_from || t > t_to {
                continue;
            }
            if exclude_precursor && self.is_precursor(k) {
                continue;
            }
            acc += a.norm_sqr();
        }
        acc * self.grid.dt
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm(false);
        if !(n > 0.0) {
            return Err(Error::invalid("amplitude", "cannot normalize a zero packet"));
        }
        let s = 1.0 / n.sqrt();
        self.amplitude.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    pub fn scaled(&self, c: Complex64) -> Wavepacket {
        Wavepacket {
            grid: self.grid,
            amplitude: self.amplitude.iter().map(|a| a * c).collect(),
            precursor_mask: self.precursor_mask.clone(),
        }
    }

    /// Copy with each run of precursor samples replaced by a linear bridge
    /// between its unmasked neighbours. The result carries no mask.
    pub fn main_lobe(&self) -> Wavepacket {
        let mut out = self.clone();
        let Some(mask) = &self.precursor_mask else {
            return out;
        };
        out.precursor_mask = None;
        let zero = Complex64::new(0.0, 0.0);
        let n = mask.len();
        let mut k = 0;
        while k < n {
            if !mask[k] {
                k += 1;
                continue;
            }
            let start = k;
            while k < n && mask[k] {
                k += 1;
            }
            let left = if start > 0 { self.amplitude[start - 1] } else { zero };
            let right = if k < n { self.amplitude[k] } else { zero };
            let span = (k - start + 1) as f64;
            for (i, a) in out.amplitude[start..k].iter_mut().enumerate() {
                let x = (i + 1) as f64 / span;
                *a = left * (1.0 - x) + right * x;
            }
        }
        out
    }

    /// Zero-pad the tail so the grid reaches `t_end`.
    pub fn extended_to(&self, t_end: f64) -> Wavepacket {
        let grid = self.grid.extended_to(t_end);
        let mut amplitude = self.amplitude.clone();
        amplitude.resize(grid.n, Complex64::new(0.0, 0.0));
        let precursor_mask = self.precursor_mask.as_ref().map(|m| {
            let mut m = m.clone();
            m.resize(grid.n, false);
            m
        });
        Wavepacket {
            grid,
            amplitude,
            precursor_mask,
        }
    }

    /// Linear interpolation of the complex amplitude at `t`; zero outside the grid.
    pub fn sample_linear(&self, t: f64) -> Complex64 {
        let x = (t - self.grid.t_start) / self.grid.dt;
        if x < 0.0 || x > (self.grid.n - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let k = (x.floor() as usize).min(self.grid.n - 2);
        let f = x - k as f64;
        self.amplitude[k] * (1.0 - f) + self.amplitude[k + 1] * f
    }

    /// Catmull-Rom (cubic Hermite) interpolation; zero outside the grid.
    pub fn sample_cubic(&self, t: f64) -> Complex64 {
        let n = self.grid.n;
        let x = (t - self.grid.t_start) / self.grid.dt;
        if x < 0.0 || x > (n - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let k = (x.floor() as usize).min(n - 2);
        let f = x - k as f64;
        let at = |i: isize| -> Complex64 {
            if i < 0 || i as usize >= n {
                Complex64::new(0.0, 0.0)
            } else {
                self.amplitude[i as usize]
            }
        };
        let k = k as isize;
        let (p0, p1, p2, p3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
        let f2 = f * f;
        let f3 = f2 * f;
        (p1 * 2.0 + (p2 - p0) * f + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * f2 + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * f3)
            * 0.5
    }

    /// Resample onto another grid by linear interpolation. The precursor mask
    /// is carried over by nearest sample.
    pub fn resample_linear(&self, grid: TimeGrid) -> Wavepacket {
        let amplitude = grid.times().map(|t| self.sample_linear(t)).collect();
        let precursor_mask = self.precursor_mask.as_ref().map(|m| {
            grid.times()
                .map(|t| {
                    let x = (t - self.grid.t_start) / self.grid.dt;
                    x >= -0.5 && x <= self.grid.n as f64 - 0.5 && m[self.grid.nearest_index(t)]
                })
                .collect()
        });
        Wavepacket {
            grid,
            amplitude,
            precursor_mask,
        }
    }

    /// Index of the intensity maximum, ignoring precursor samples.
    pub fn peak_index(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, a) in self.amplitude.iter().enumerate() {
            if self.is_precursor(k) {
                continue;
            }
            let v = a.norm_sqr();
            if v > best.1 {
                best = (k, v);
            }
        }
        best.0
    }

    /// Intensity peak time refined by a parabola through the three top samples.
    pub fn peak_time(&self) -> f64 {
        let k = self.peak_index();
        let t = self.grid.time(k);
        if k == 0 || k + 1 >= self.grid.n {
            return t;
        }
        let (a, b, c) = (
            self.amplitude[k - 1].norm_sqr(),
            self.amplitude[k].norm_sqr(),
            self.amplitude[k + 1].norm_sqr(),
        );
        let denom = a - 2.0 * b + c;
        if denom.abs() < f64::MIN_POSITIVE {
            return t;
        }
        t + 0.5 * (a - c) / denom * self.grid.dt
    }

    /// Intensity-weighted mean time (precursor excluded).
    pub fn centroid(&self) -> f64 {
        let (mut w, mut wt) = (0.0, 0.0);
        for (k, a) in self.amplitude.iter().enumerate() {
            if self.is_precursor(k) {
                continue;
            }
            let v = a.norm_sqr();
            w += v;
            wt += v * self.grid.time(k);
        }
        if w > 0.0 {
            wt / w
        } else {
            f64::NAN
        }
    }

    /// Full width at half maximum of the intensity main lobe, with linear
    /// interpolation of the half-maximum crossings.
    pub fn fwhm(&self) -> f64 {
        let inten = self.intensity();
        let kp = self.peak_index();
        let half = inten[kp] / 2.0;
        if !(half > 0.0) {
            return 0.0;
        }
        let mut lo = self.grid.time(0);
        for k in (0..kp).rev() {
            if inten[k] <= half {
                let f = (half - inten[k]) / (inten[k + 1] - inten[k]);
                lo = self.grid.time(k) + f * self.grid.dt;
                break;
            }
        }
        let mut hi = self.grid.t_end();
        for k in kp + 1..self.grid.n {
            if inten[k] <= half {
                let f = (inten[k - 1] - half) / (inten[k - 1] - inten[k]);
                hi = self.grid.time(k - 1) + f * self.grid.dt;
                break;
            }
        }
        hi - lo
    }

    /// RMS angular bandwidth estimated from the finite-difference derivative.
    pub fn rms_bandwidth(&self) -> f64 {
        let n0: f64 = self.amplitude.iter().map(|a| a.norm_sqr()).sum();
        if !(n0 > 0.0) {
            return 0.0;
        }
        let d: f64 =
            self.amplitude.windows(2).map(|w| (w[1] - w[0]).norm_sqr()).sum::<f64>() / (self.grid.dt * self.grid.dt);
        (d / n0).sqrt()
    }

    /// Relative L2 distance `||self - other|| / ||other||` on a shared grid.
    pub fn relative_l2_error(&self, reference: &Wavepacket) -> f64 {
        let num: f64 = self
            .amplitude
            .iter()
            .zip(&reference.amplitude)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = reference.amplitude.iter().map(|b| b.norm_sqr()).sum();
        (num / den).sqrt()
    }
}
