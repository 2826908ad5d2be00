//! 2D Fourier transform of a fixed-population-time slice.
//!
//! The detection axis uses `∫ dτ e^{−iω_τ τ}`. The excitation axis uses
//! `e^{+iω_τ′τ′}` for the rephasing signal and `e^{−iω_τ′τ′}` for the
//! nonrephasing one, so both place their diagonal peaks in the (+, +)
//! quadrant. Spectra are scaled by `dt_τ·dt_τ′` and returned with centered
//! axes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::impulsive::{SignalKind, TimeSignal};
use crate::error::{Error, Result};

/// Transform settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierOptions {
    /// Raised-cosine taper over the last 10% of each axis.
    pub window: bool,
    /// Zero-padding factor (≥ 1).
    pub pad: usize,
    /// Frequency added to the excitation axis (rad/fs), e.g. the rotating
    /// frame frequency.
    pub excitation_origin: f64,
    /// Frequency added to the detection axis (rad/fs).
    pub detection_origin: f64,
}

impl Default for FourierOptions {
    fn default() -> Self {
        FourierOptions {
            window: true,
            pad: 2,
            excitation_origin: 0.0,
            detection_origin: 0.0,
        }
    }
}

/// Complex 2D spectrum, row-major in `(ω_τ′, ω_τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    pub kind: SignalKind,
    /// Population time in fs.
    pub tp: f64,
    /// Excitation frequencies ω_τ′ (rad/fs), ascending.
    pub excitation: Vec<f64>,
    /// Detection frequencies ω_τ (rad/fs), ascending.
    pub detection: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl Spectrum2D {
    #[inline]
    pub fn get(&self, i_exc: usize, i_det: usize) -> Complex64 {
        self.values[i_exc * self.detection.len() + i_det]
    }

    /// `Σ |S|² dω_τ′ dω_τ / (2π)²`, the frequency side of Parseval's identity.
    pub fn energy(&self) -> f64 {
        let dx = self.excitation[1] - self.excitation[0];
        let dy = self.detection[1] - self.detection[0];
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx * dy / (4.0 * PI * PI)
    }

    /// Index of the largest-|S| sample as `(i_exc, i_det)`.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0.0);
        for (i, z) in self.values.iter().enumerate() {
            if z.norm() > best.1 {
                best = (i, z.norm());
            }
        }
        (best.0 / self.detection.len(), best.0 % self.detection.len())
    }

    /// Bin spacings `(dω_τ′, dω_τ)`.
    pub fn spacing(&self) -> (f64, f64) {
        (
            self.excitation[1] - self.excitation[0],
            self.detection[1] - self.detection[0],
        )
    }
}

/// Raised-cosine taper over the last 10% of `n` samples.
pub fn taper(n: usize) -> Vec<f64> {
    let len = ((n as f64) * 0.1).ceil() as usize;
    (0..n)
        .map(|i| {
            if len == 0 || i + len < n {
                1.0
            } else {
                let x = (i + len + 1 - n) as f64 / len as f64;
                0.5 * (1.0 + (PI * x).cos())
            }
        })
        .collect()
}

/// Centered angular-frequency axis for an `n`-point transform with step `dt`.
fn centered_axis(n: usize, dt: f64, origin: f64) -> Vec<f64> {
    let half = (n / 2) as i64;
    (0..n as i64)
        .map(|k| 2.0 * PI * (k - half) as f64 / (n as f64 * dt) + origin)
        .collect()
}

/// Position of FFT bin `k` after centering.
#[inline]
fn shifted(k: usize, n: usize) -> usize {
    (k + n / 2) % n
}

/// Transforms the `(τ, τ′)` slice of `signal` at population index `i_tp`.
pub fn fourier_2d(signal: &TimeSignal, i_tp: usize, opts: &FourierOptions) -> Result<Spectrum2D> {
    let spec = &signal.spec;
    if i_tp >= spec.n_tp() {
        return Err(Error::validation("grids.tp_fs", format!("population index {i_tp} out of range")));
    }
    if opts.pad == 0 {
        return Err(Error::validation("spectra.pad", "padding factor must be at least 1"));
    }
    if spec.n_tau < 2 || spec.n_tau_prime < 2 {
        return Err(Error::validation("grids", "Fourier transform needs at least two samples per axis"));
    }
    let (n_det, n_exc) = (spec.n_tau * opts.pad, spec.n_tau_prime * opts.pad);
    let w_det = if opts.window { taper(spec.n_tau) } else { vec![1.0; spec.n_tau] };
    let w_exc = if opts.window { taper(spec.n_tau_prime) } else { vec![1.0; spec.n_tau_prime] };

    // buffer[i_exc][i_det], padded
    let mut buf = vec![Complex64::new(0.0, 0.0); n_exc * n_det];
    for p in 0..spec.n_tau_prime {
        for r in 0..spec.n_tau {
            buf[p * n_det + r] = signal.get(r, i_tp, p) * (w_det[r] * w_exc[p]);
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let det_fft = planner.plan_fft_forward(n_det);
    for row in buf.chunks_mut(n_det) {
        det_fft.process(row);
    }
    let exc_fft = match signal.kind {
        SignalKind::Rephasing => planner.plan_fft_inverse(n_exc),
        SignalKind::Nonrephasing => planner.plan_fft_forward(n_exc),
    };
    let mut column = vec![Complex64::new(0.0, 0.0); n_exc];
    let scale = spec.dt * spec.dt;
    let mut values = vec![Complex64::new(0.0, 0.0); n_exc * n_det];
    for k in 0..n_det {
        for p in 0..n_exc {
            column[p] = buf[p * n_det + k];
        }
        exc_fft.process(&mut column);
        let kk = shifted(k, n_det);
        for p in 0..n_exc {
            values[shifted(p, n_exc) * n_det + kk] = column[p] * scale;
        }
    }

    Ok(Spectrum2D {
        kind: signal.kind,
        tp: spec.tp(i_tp),
        excitation: centered_axis(n_exc, spec.dt, opts.excitation_origin),
        detection: centered_axis(n_det, spec.dt, opts.detection_origin),
        values,
    })
}

/// `Σ |x|² dt_τ dt_τ′` of the slice, the time side of Parseval's identity.
pub fn time_energy(signal: &TimeSignal, i_tp: usize) -> f64 {
    let spec = &signal.spec;
    let mut acc = 0.0;
    for r in 0..spec.n_tau {
        for p in 0..spec.n_tau_prime {
            acc += signal.get(r, i_tp, p).norm_sqr();
        }
    }
    acc * spec.dt * spec.dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn damped(kind: SignalKind, omega: f64, gamma: f64, dt: f64, n: usize) -> TimeSignal {
        let spec = GridSpec::new(dt, n, &[0.0], n).unwrap();
        let s = match kind {
            SignalKind::Rephasing => -1.0,
            SignalKind::Nonrephasing => 1.0,
        };
        let values = (0..spec.n_points())
            .map(|idx| {
                let (r, _, p) = spec.unflat(idx);
                let (tau, tpr) = (spec.tau(r), spec.tau_prime(p));
                Complex64::from_polar((-gamma * (tau + tpr)).exp(), omega * tau + s * omega * tpr)
            })
            .collect();
        TimeSignal { kind, spec, values }
    }

    #[test]
    fn zero_input() {
        let spec = GridSpec::new(1.0, 8, &[0.0], 8).unwrap();
        let sig = TimeSignal {
            kind: SignalKind::Rephasing,
            values: vec![Complex64::new(0.0, 0.0); spec.n_points()],
            spec,
        };
        let s = fourier_2d(&sig, 0, &FourierOptions::default()).unwrap();
        assert!(s.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_peak_both_kinds() {
        let (omega, gamma, dt, n) = (0.2, 0.01, 2.0, 128);
        for kind in SignalKind::ALL {
            let s = fourier_2d(&damped(kind, omega, gamma, dt, n), 0, &FourierOptions::default()).unwrap();
            let (i, j) = s.argmax();
            let (dx, dy) = s.spacing();
            assert!((s.excitation[i] - omega).abs() <= dx, "{kind:?}");
            assert!((s.detection[j] - omega).abs() <= dy, "{kind:?}");
        }
    }

    #[test]
    fn parseval_without_window() {
        let sig = damped(SignalKind::Nonrephasing, 0.3, 0.02, 1.0, 40);
        let opts = FourierOptions {
            window: false,
            ..FourierOptions::default()
        };
        let s = fourier_2d(&sig, 0, &opts).unwrap();
        let ratio = s.energy() / time_energy(&sig, 0);
        assert!((ratio - 1.0).abs() < 1e-8, "{ratio}");
    }

    #[test]
    fn taper_shape() {
        let w = taper(20);
        assert_eq!(w[..18], [1.0; 18]);
        assert!((w[18] - 0.5).abs() < 1e-15);
        assert!(w[19].abs() < 1e-15);
    }

    #[test]
    fn linear_in_input() {
        let sig = damped(SignalKind::Rephasing, 0.1, 0.01, 2.0, 32);
        let c = Complex64::new(0.3, -1.7);
        let a = fourier_2d(&sig, 0, &FourierOptions::default()).unwrap();
        let b = fourier_2d(&sig.scaled(c), 0, &FourierOptions::default()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x * c - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }
}
