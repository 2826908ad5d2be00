//! Time grids and sampled response functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Liouville-pathway channel of the third-order response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    One,
    Two,
    Three,
    Four,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::One, Channel::Two, Channel::Three, Channel::Four];

    pub fn from_index(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Channel::One),
            2 => Ok(Channel::Two),
            3 => Ok(Channel::Three),
            4 => Ok(Channel::Four),
            _ => Err(Error::validation("channel", format!("channel must be 1..4 (got {k})"))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Channel::One => 1,
            Channel::Two => 2,
            Channel::Three => 3,
            Channel::Four => 4,
        }
    }
}

/// Which solver produced a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Closed,
    Qme,
}

/// Sampling of `(τ, T_p, τ′)`: uniform coherence-time axes starting at 0 and
/// a list of population times, all multiples of `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dt: f64,
    pub n_tau: usize,
    pub n_tau_prime: usize,
    /// Population times as integer multiples of `dt`.
    pub tp_steps: Vec<usize>,
}

impl GridSpec {
    /// Population times given in fs are rounded to the nearest grid multiple.
    pub fn new(dt: f64, n_tau: usize, tp_fs: &[f64], n_tau_prime: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::validation("grids.dt_fs", "time step must be positive"));
        }
        if n_tau == 0 || n_tau_prime == 0 {
            return Err(Error::validation("grids", "axis lengths must be at least 1"));
        }
        if tp_fs.is_empty() {
            return Err(Error::validation("grids.tp_fs", "at least one population time is required"));
        }
        let mut tp_steps = Vec::with_capacity(tp_fs.len());
        for (i, t) in tp_fs.iter().enumerate() {
            if !(t.is_finite() && *t >= 0.0) {
                return Err(Error::validation(format!("grids.tp_fs[{i}]"), "must be non-negative"));
            }
            tp_steps.push((t / dt).round() as usize);
        }
        Ok(GridSpec {
            dt,
            n_tau,
            n_tau_prime,
            tp_steps,
        })
    }

    /// Uniform population axis `0, dt, …, (n_tp − 1) dt`.
    pub fn uniform(dt: f64, n_tau: usize, n_tp: usize, n_tau_prime: usize) -> Result<Self> {
        let tp: Vec<f64> = (0..n_tp).map(|k| k as f64 * dt).collect();
        GridSpec::new(dt, n_tau, &tp, n_tau_prime)
    }

    pub fn n_tp(&self) -> usize {
        self.tp_steps.len()
    }

    pub fn n_points(&self) -> usize {
        self.n_tau * self.n_tp() * self.n_tau_prime
    }

    pub fn tau(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn tau_prime(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn tp(&self, i: usize) -> f64 {
        self.tp_steps[i] as f64 * self.dt
    }

    pub fn tp_values(&self) -> Vec<f64> {
        (0..self.n_tp()).map(|i| self.tp(i)).collect()
    }

    /// Flat row-major index of `(τ, T_p, τ′)`.
    #[inline]
    pub fn flat(&self, i_tau: usize, i_tp: usize, i_tau_prime: usize) -> usize {
        (i_tau * self.n_tp() + i_tp) * self.n_tau_prime + i_tau_prime
    }

    /// Inverse of [`GridSpec::flat`].
    #[inline]
    pub fn unflat(&self, idx: usize) -> (usize, usize, usize) {
        let itp = idx / self.n_tau_prime;
        (itp / self.n_tp(), itp % self.n_tp(), idx % self.n_tau_prime)
    }

    /// Longest time `τ + T_p + τ′` reached on the grid.
    pub fn max_total_time(&self) -> f64 {
        let tp_max = self.tp_steps.iter().copied().max().unwrap_or(0);
        (self.n_tau - 1 + tp_max + self.n_tau_prime - 1) as f64 * self.dt
    }
}

/// `χ^(k)(τ, T_p, τ′)` sampled on a [`GridSpec`], row-major in
/// `(τ, T_p, τ′)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseGrid {
    pub channel: Channel,
    pub provenance: Provenance,
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl ResponseGrid {
    pub fn zeros(channel: Channel, provenance: Provenance, spec: GridSpec) -> Self {
        let n = spec.n_points();
        ResponseGrid {
            channel,
            provenance,
            spec,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    #[inline]
    pub fn get(&self, i_tau: usize, i_tp: usize, i_tau_prime: usize) -> Complex64 {
        self.values[self.spec.flat(i_tau, i_tp, i_tau_prime)]
    }

    #[inline]
    pub fn set(&mut self, i_tau: usize, i_tp: usize, i_tau_prime: usize, v: Complex64) {
        let k = self.spec.flat(i_tau, i_tp, i_tau_prime);
        self.values[k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest pointwise |self − other|.
    pub fn max_abs_diff(&self, other: &ResponseGrid) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::validation("grids", "response grids have different axes"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}
