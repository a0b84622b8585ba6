use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid: samples at `t_start + k * dt`, `k` in `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if n < 2 {
            return Err(Error::invalid("n", format!("need at least 2 samples, got {n}")));
        }
        if !t_start.is_finite() {
            return Err(Error::invalid("t_start", "must be finite"));
        }
        Ok(TimeGrid { t_start, dt, n })
    }

    /// Grid covering `[t_start, t_end]` with step at most `dt`.
    pub fn spanning(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        let n = ((t_end - t_start) / dt).ceil() as usize + 1;
        TimeGrid::new(t_start, dt, n.max(2))
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.time(k))
    }

    /// Index of the sample nearest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: f64) -> usize {
        let k = ((t - self.t_start) / self.dt).round();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n - 1)
        }
    }

    /// Same start, `factor` times finer step, same end point.
    pub fn refined(&self, factor: usize) -> TimeGrid {
        TimeGrid {
            t_start: self.t_start,
            dt: self.dt / factor as f64,
            n: (self.n - 1) * factor + 1,
        }
    }

    /// Extend the end of the grid (same step) so that it reaches at least `t_end`.
    pub fn extended_to(&self, t_end: f64) -> TimeGrid {
        if t_end <= self.t_end() {
            return *self;
        }
        let n = ((t_end - self.t_start) / self.dt).ceil() as usize + 1;
        TimeGrid { n, ..*self }
    }
}
